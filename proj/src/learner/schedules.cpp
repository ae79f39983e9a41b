#include "echolab/learner/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace echolab {

TrainerConfig TrainerConfig::compressed(int days) {
    if (days <= 0) throw std::invalid_argument("TrainerConfig::compressed: days must be positive");
    TrainerConfig c;
    const double f = static_cast<double>(days) / c.total_days;
    c.curriculum_start_day = static_cast<int>(std::lround(c.curriculum_start_day * f));
    c.curriculum_end_day = static_cast<int>(std::lround(c.curriculum_end_day * f));
    c.eps_reset_day = static_cast<int>(std::lround(c.eps_reset_day * f));
    c.total_days = days;
    return c;
}

double EpsilonSchedule::value() const {
    return std::max(min_, init_ * std::pow(decay_, static_cast<double>(events_)));
}

bool PlateauScheduler::step(double loss) {
    if (loss < best_) {
        best_ = loss;
        bad_steps_ = 0;
        return false;
    }
    if (++bad_steps_ < patience_) return false;
    bad_steps_ = 0;
    lr_ = std::max(min_lr_, lr_ * factor_);
    return true;
}

double curriculum_leave_rate(const TrainerConfig& c, int day) {
    if (day < c.curriculum_start_day) return c.leave_start;
    if (day >= c.curriculum_end_day) return c.leave_end;
    const double frac =
        static_cast<double>(day - c.curriculum_start_day) / (c.curriculum_end_day - c.curriculum_start_day);
    return c.leave_start + (c.leave_end - c.leave_start) * frac;
}

}  // namespace echolab
