#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "echolab/env.hpp"
#include "echolab/learner/network.hpp"
#include "echolab/learner/replay.hpp"
#include "echolab/learner/schedules.hpp"

namespace echolab {

/// Index of the largest value among unmasked entries; ties go to the lowest
/// index. Throws if the mask is empty.
int masked_argmax(const Eigen::VectorXd& q, const ActionMask& mask);

/// Epsilon-greedy over unmasked actions. The network is only evaluated on the
/// greedy branch.
int select_action(std::span<const double> x, const ActionMask& mask, double epsilon, RandomStream& stream,
                  const ValueNetwork& online);

/// r if done; otherwise r + gamma * (max over unmasked a' of target(s')) for
/// MaxTarget, or r + gamma * target(s')[argmax over unmasked a' of online(s')]
/// for DoubleDQN. q_online_next and q_target_next are the Eval-mode outputs
/// for s'.
double td_target(double reward, bool done, double gamma, const Eigen::VectorXd& q_online_next,
                 const Eigen::VectorXd& q_target_next, const ActionMask& mask_next, TargetStyle style);

struct OptimizeResult {
    double loss = 0;
    double grad_norm = 0;  // before clipping
    std::vector<double> td_errors;
};

/// One SGD step on a prioritized batch: targets from the Eval-mode nets,
/// Train-mode forward for Q(s, a), importance-weighted Huber loss, global-norm
/// clipping, priority update with |delta|.
OptimizeResult optimize_step(ValueNetwork& online, const ValueNetwork& target, PrioritizedBuffer& buffer,
                             const TrainerConfig& config, const SimConfig& sim, double lr, RandomStream& replay_stream,
                             RandomStream& dropout_stream);

struct DayLog {
    int day = 0;
    double penalty = 0;
    double epsilon = 0;
    double lr = 0;
    double leave_rate = 0;
    std::size_t buffer_size = 0;
    double mean_loss = 0;  // NaN when no optimizer step ran that day
    int optimizer_steps = 0;
    int masked_violations = 0;
    bool loss_finite = true;
};

/// Trainer counters and streams, everything needed to resume.
struct TrainerState {
    int days_completed = 0;
    std::uint64_t env_steps = 0;
    std::uint64_t optimizer_steps = 0;
    std::uint64_t eps_events = 0;
    std::uint64_t sample_calls = 0;
    double lr = 0;
    double best_loss = 0;
    int bad_steps = 0;
    RandomStream explore;
    RandomStream replay;
    RandomStream dropout;
};

class Trainer {
public:
    using Observer = std::function<void(const DayLog&, const Trainer&)>;

    Trainer(SimConfig sim, TrainerConfig config, std::uint64_t seed);

    /// Runs one training day and returns its log line.
    DayLog run_day();
    /// Runs until config.total_days days are done.
    std::vector<DayLog> train(const Observer& observer = {});

    const ValueNetwork& online() const { return online_; }
    const ValueNetwork& target() const { return target_; }
    const TrainerConfig& config() const { return config_; }
    const SimConfig& sim() const { return env_.config(); }
    const PrioritizedBuffer& buffer() const { return buffer_; }
    TrainerState state() const;
    std::uint64_t seed() const { return seed_; }
    int days_completed() const { return day_; }

private:
    TrainerConfig config_;
    std::uint64_t seed_;
    EchoEnv env_;
    ValueNetwork online_;
    ValueNetwork target_;
    PrioritizedBuffer buffer_;
    EpsilonSchedule epsilon_;
    PlateauScheduler plateau_;
    RandomStream explore_;
    RandomStream replay_;
    RandomStream dropout_;
    int day_ = 0;
    std::uint64_t env_steps_ = 0;
    std::uint64_t optimizer_steps_ = 0;
};

/// CSV header and rows of the training log; ma50 is the 50-day trailing mean
/// of the daily penalty.
void write_training_log(std::ostream& out, const std::vector<DayLog>& log);
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window = 50);

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::vector<int> sizes;
    double dropout = 0;
    TargetStyle target_style = TargetStyle::DoubleDQN;
    std::string optimizer = "sgd";
    std::string generator;
    std::uint64_t seed = 0;
    TrainerState state;
    ValueNetwork online;
    ValueNetwork target;
};

Checkpoint make_checkpoint(const Trainer& trainer);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Greedy (epsilon = 0, Eval mode) masked policy from a frozen network.
class GreedyAgent {
public:
    GreedyAgent(ValueNetwork net, SimConfig config);
    int act(const SimState& state) const;
    std::vector<Allocation> decide(const SimState& state) const { return materialize(state, act(state)); }
    const ValueNetwork& network() const { return net_; }

private:
    ValueNetwork net_;
    SimConfig config_;
};

}  // namespace echolab
