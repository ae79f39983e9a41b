#pragma once

#include <cstdint>
#include <limits>

namespace echolab {

enum class TargetStyle { DoubleDQN, MaxTarget };

struct TrainerConfig {
    double gamma = 0.99;
    double lr_init = 0.03;
    double lr_min = 0.00003;
    double lr_factor = 0.95;
    int plateau_patience = 800;
    int batch = 32;
    int warmup_days = 10;
    int optimize_every = 4;
    double grad_clip_norm = 1.0;
    double eps_init = 1.0;
    double eps_decay = 0.99999;
    double eps_min = 0.1;
    int eps_reset_day = 20000;
    double leave_start = 0.8;
    double leave_end = 0.1;
    int curriculum_start_day = 10000;
    int curriculum_end_day = 20000;
    int total_days = 30000;
    double dropout = 0.1;
    int hidden = 128;
    TargetStyle target_style = TargetStyle::DoubleDQN;

    /// The day schedule (curriculum, epsilon reset) scaled to `days` total.
    static TrainerConfig compressed(int days);
};

/// eps = max(eps_min, eps_init * decay^k), k = decay events since the last reset.
class EpsilonSchedule {
public:
    EpsilonSchedule(double init = 1.0, double decay = 0.99999, double min = 0.1)
        : init_(init), decay_(decay), min_(min) {}

    double value() const;
    void decay_event() { ++events_; }
    void reset() { events_ = 0; }
    std::uint64_t events() const { return events_; }
    void set_events(std::uint64_t k) { events_ = k; }

private:
    double init_, decay_, min_;
    std::uint64_t events_ = 0;
};

/// Multiplies the learning rate by `factor` once the loss has gone `patience`
/// consecutive steps without a strict improvement on the best value seen.
class PlateauScheduler {
public:
    PlateauScheduler(double lr = 0.03, double factor = 0.95, int patience = 800, double min_lr = 0.00003)
        : lr_(lr), factor_(factor), patience_(patience), min_lr_(min_lr) {}

    /// Returns true if this step reduced the learning rate.
    bool step(double loss);
    double lr() const { return lr_; }
    double best() const { return best_; }
    int bad_steps() const { return bad_steps_; }
    void restore(double lr, double best, int bad_steps) {
        lr_ = lr;
        best_ = best;
        bad_steps_ = bad_steps;
    }

private:
    double lr_, factor_;
    int patience_;
    double min_lr_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_steps_ = 0;
};

/// Leave rate for a training day: leave_start until curriculum_start_day,
/// linear down to leave_end at curriculum_end_day, then leave_end.
double curriculum_leave_rate(const TrainerConfig& config, int day);

}  // namespace echolab
