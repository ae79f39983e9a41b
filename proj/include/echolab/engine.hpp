#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "echolab/model.hpp"
#include "echolab/stochastic.hpp"

namespace echolab {

/// Everything random about one day, drawn up front. Policy choices can never
/// perturb these draws; break decisions read the per-sonographer streams by
/// decision count.
struct DayPlan {
    std::uint64_t seed = 0;
    int day_index = 0;
    double leave_rate = 0;
    std::vector<Patient> patients;
    std::vector<Sonographer> roster;
    std::vector<RandomStream> break_streams;

    int on_duty_count() const;
    std::uint64_t digest() const;
};

/// Per-day substream for (master seed, day index).
RandomStream day_stream(std::uint64_t seed, int day_index);

DayPlan build_day(const SimConfig& config, std::uint64_t seed, int day_index,
                  std::optional<double> leave_rate_override = std::nullopt);

struct Allocation {
    int patient = -1;
    int room = -1;
    int sonographer = -1;
    bool operator==(const Allocation&) const = default;
};

enum class EventKind { Arrival, TurnAway, NoShow, ExamStart, ExamEnd, BreakStart, BreakEnd };
std::string_view to_string(EventKind kind);

struct Event {
    Minute clock = 0;
    EventKind kind = EventKind::Arrival;
    int patient = -1;
    int room = -1;
    int sonographer = -1;
    Minute until = 0;
    bool operator==(const Event&) const = default;
};

class InfeasibleAllocation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// [W_fe, W_ft, W_fl, W_ne, W_nt, W_nl, R_n, R_b, S_n, S_b, L_n, L_b, t]
struct Observation {
    static constexpr int kSize = 13;
    enum Index { WFe = 0, WFt, WFl, WNe, WNt, WNl, Rn, Rb, Sn, Sb, Ln, Lb, T };
    std::array<int, kSize> values{};

    int operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
    int waiting_total() const { return values[0] + values[1] + values[2] + values[3] + values[4] + values[5]; }
    bool operator==(const Observation&) const = default;
};

struct SimState {
    std::shared_ptr<const SimConfig> config;
    Minute clock = 0;
    std::vector<Patient> patients;
    std::vector<Room> rooms;
    std::vector<Sonographer> sonographers;
    std::vector<RandomStream> break_streams;
    double penalty_accumulated = 0;
    std::vector<Event> events;

    const SimConfig& cfg() const { return *config; }
};

/// State at open_time with the opening arrivals already admitted.
SimState start_day(std::shared_ptr<const SimConfig> config, const DayPlan& plan);
SimState start_day(const SimConfig& config, const DayPlan& plan);

/// Waiting status implied by the distance to the scheduled time.
PatientStatus classify_waiting(Minute now, Minute scheduled, Minute ontime_window);

/// Arrived at/after schedule: now - arrival; arrived early: now - scheduled
/// (negative until the slot comes up). Throws std::logic_error if the patient
/// is not waiting.
Minute waiting_time(const Patient& patient, Minute now);

int idle_pair_count(const SimState& state);
std::array<int, kWaitCategories> waiting_counts(const SimState& state);
int wait_category(const Patient& patient);

/// Penalty of the current (post-allocation) state for the current minute.
PenaltyTerms minute_penalty(const SimState& state);

/// Penalty the state would incur this minute if `allocations` were started.
PenaltyTerms penalty_with(const SimState& state, std::span<const Allocation> allocations);

Observation observe(const SimState& state);

/// Returns a diagnostic for the first infeasible allocation, or nullopt.
std::optional<std::string> allocation_error(const SimState& state, std::span<const Allocation> allocations);

struct MinuteOutcome {
    Minute clock = 0;  // minute the decision was taken in
    PenaltyTerms penalty;
    std::array<int, kWaitCategories> waiting{};  // post-allocation
    std::vector<Event> events;
};

/// Starts the exams, charges the minute, then advances the clock and processes
/// arrivals, reclassification, exam completions (with break decisions) and
/// break expiries. Throws InfeasibleAllocation with the state untouched.
MinuteOutcome advance_minute(SimState& state, std::span<const Allocation> allocations);

/// Collects per-minute outcomes and produces the day's metrics.
class DayAccumulator {
public:
    void record(const MinuteOutcome& outcome);
    /// Call once the clock reaches close_time. Lets running exams finish and
    /// resolves patients who never entered.
    DailyMetrics finish(SimState& state);

private:
    DailyMetrics metrics_;
};

struct TraceRecord {
    Minute clock = 0;
    Observation observation;  // pre-allocation
    std::vector<Allocation> allocations;
    PenaltyTerms penalty;
    bool operator==(const TraceRecord&) const = default;
};

struct DayResult {
    DailyMetrics metrics;
    std::vector<TraceRecord> trace;
};

using DecisionFn = std::function<std::vector<Allocation>(const SimState&)>;

DayResult run_day(const SimConfig& config, const DayPlan& plan, const DecisionFn& policy, bool record_trace = true);

}  // namespace echolab
