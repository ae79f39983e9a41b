#pragma once

#include <memory>
#include <vector>

#include "echolab/engine.hpp"
#include "echolab/model.hpp"

namespace echolab::testing {

inline SimConfig default_config() { return scenario_preset(Scenario::Default); }

/// A day at open_time where nobody has arrived and nobody will: every patient
/// is a no-show and the whole roster is on duty. Tests then place patients by
/// hand.
inline SimState empty_day(const SimConfig& config, Minute clock) {
    DayPlan plan = build_day(config, 1, 0, 0.0);
    for (auto& p : plan.patients) {
        p.no_show = true;
        p.turned_away = false;
        p.realized_arrival.reset();
    }
    SimState s = start_day(config, plan);
    s.clock = clock;
    return s;
}

/// Marks a patient as having arrived at `arrival` and classifies them at the
/// state's clock.
inline Patient& place(SimState& s, int id, Minute arrival) {
    auto& p = s.patients[static_cast<std::size_t>(id)];
    p.no_show = false;
    p.realized_arrival = arrival;
    p.status = classify_waiting(s.clock, p.scheduled_time, s.cfg().ontime_window_min);
    return p;
}

/// First patient id with the given fetal flag whose schedule time is >= t.
inline int patient_at_or_after(const SimState& s, bool fetal, Minute t) {
    for (const auto& p : s.patients)
        if (p.fetal == fetal && p.scheduled_time >= t) return p.id;
    return -1;
}

inline void occupy_room(SimState& s, int id, Minute until) {
    auto& r = s.rooms[static_cast<std::size_t>(id)];
    r.occupied = true;
    r.until = until;
}

inline void busy_sonographer(SimState& s, int id, Minute until, ResourceActivity what = ResourceActivity::Testing) {
    auto& so = s.sonographers[static_cast<std::size_t>(id)];
    so.activity = what;
    so.until = until;
}

}  // namespace echolab::testing
