#pragma once

#include <array>
#include <bitset>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "echolab/engine.hpp"

namespace echolab {

inline constexpr int kActionComponents = 6;
inline constexpr int kNumActions = 729;  // 3^6

/// [A_ft, A_fl, A_fe, A_nt, A_nl, A_ne], each in {0, 1, 2}.
enum ActionComponent { AFt = 0, AFl, AFe, ANt, ANl, ANe };
using ActionVector = std::array<int, kActionComponents>;
using ActionMask = std::bitset<kNumActions>;

class MaskedAction : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base-3, A_ft most significant.
int encode_action(const ActionVector& a);
ActionVector decode_action(int index);

/// Waiting status and patient kind addressed by a component.
PatientStatus component_status(int component);
bool component_fetal(int component);

/// Feasibility from counts alone: each component within its waiting count,
/// fetal exams within the idle fetal-capable rooms/sonographers, and every
/// exam within the idle rooms/sonographers left over.
ActionMask action_mask(const Observation& obs);
ActionMask action_mask(const SimState& state);

/// Serves, component by component in canonical order, the k longest waiters
/// of that component. Throws MaskedAction if any of them cannot be placed.
std::vector<Allocation> materialize(const SimState& state, int action_index);

/// Per-component number of allocated patients (may exceed 2 for rule-based
/// policies).
ActionVector component_counts(const SimState& state, std::span<const Allocation> allocations);
/// Joint index of the counts, or nullopt if some component exceeds 2.
std::optional<int> action_index_of(const ActionVector& counts);

/// Network input: waiting counts over the scheduled visits of that kind,
/// resources over their capacity, t over the operating window.
std::array<double, Observation::kSize> normalize(const Observation& obs, const SimConfig& config);

struct StepResult {
    Observation observation;
    double reward = 0;
    bool done = false;
    PenaltyTerms terms;
    std::vector<Allocation> allocations;
};

/// Episodic wrapper: one day per episode.
class EchoEnv {
public:
    explicit EchoEnv(SimConfig config);

    Observation reset(std::uint64_t seed, int day_index, std::optional<double> leave_rate = std::nullopt);
    Observation reset(const DayPlan& plan);

    Observation observation() const { return observe(state_); }
    ActionMask mask() const { return action_mask(observation()); }
    bool done() const;

    /// Throws MaskedAction for an infeasible index and std::logic_error after done.
    StepResult step(int action_index);
    /// Steps with explicit allocations (rule-based policies).
    StepResult step_allocations(std::vector<Allocation> allocations);

    /// Final metrics once done; lets running exams finish.
    DailyMetrics finish();

    const SimState& state() const { return state_; }
    const SimConfig& config() const { return *config_; }
    const DayPlan& plan() const { return plan_; }

private:
    std::shared_ptr<const SimConfig> config_;
    DayPlan plan_;
    SimState state_;
    DayAccumulator acc_;
    bool active_ = false;
};

}  // namespace echolab
