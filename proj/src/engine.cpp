#include "echolab/engine.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace echolab {

namespace {

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) { return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6))); }

}  // namespace

int DayPlan::on_duty_count() const {
    return static_cast<int>(std::count_if(roster.begin(), roster.end(), [](const Sonographer& s) { return s.on_duty; }));
}

std::uint64_t DayPlan::digest() const {
    std::uint64_t h = hash_combine(seed, static_cast<std::uint64_t>(day_index));
    h = hash_combine(h, static_cast<std::uint64_t>(leave_rate * 1e9));
    for (const auto& p : patients) {
        h = hash_combine(h, static_cast<std::uint64_t>(p.scheduled_time));
        h = hash_combine(h, p.fetal ? 1 : 0);
        h = hash_combine(h, p.no_show ? 1 : 0);
        h = hash_combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(p.arrival_offset)));
        h = hash_combine(h, static_cast<std::uint64_t>(p.duration));
    }
    for (const auto& s : roster) h = hash_combine(h, s.on_duty ? 1 : 0);
    for (const auto& b : break_streams) h = hash_combine(h, b.key());
    return h;
}

RandomStream day_stream(std::uint64_t seed, int day_index) {
    return RandomStream(seed).derive("day", static_cast<std::uint64_t>(day_index));
}

DayPlan build_day(const SimConfig& config, std::uint64_t seed, int day_index, std::optional<double> leave_rate_override) {
    DayPlan plan;
    plan.seed = seed;
    plan.day_index = day_index;
    plan.leave_rate = leave_rate_override.value_or(config.leave_rate);
    if (!(plan.leave_rate >= 0.0 && plan.leave_rate <= 1.0))
        throw std::invalid_argument("build_day: leave rate must lie in [0, 1]");

    const RandomStream day = day_stream(seed, day_index);

    plan.patients.reserve(config.schedule.size());
    for (std::size_t i = 0; i < config.schedule.size(); ++i) {
        const auto& entry = config.schedule[i];
        const RandomStream ps = day.derive("patient", i);
        RandomStream no_show_stream = ps.derive("no_show");
        RandomStream arrival_stream = ps.derive("arrival");
        RandomStream duration_stream = ps.derive("duration");

        Patient p;
        p.id = static_cast<int>(i);
        p.fetal = entry.fetal;
        p.scheduled_time = entry.time;
        p.no_show = sample_bernoulli(no_show_stream, config.no_show_prob);
        p.arrival_offset = sample_arrival_offset(arrival_stream, config);
        p.duration = sample_exam_duration(duration_stream, config);
        if (!p.no_show) {
            const Minute raw = p.raw_arrival();
            if (raw > config.entry_cutoff) {
                p.turned_away = true;
                p.realized_arrival = raw;
            } else {
                p.realized_arrival = std::max(raw, config.open_time);
            }
        }
        plan.patients.push_back(p);
    }

    const int total = config.total_sonos();
    plan.roster.reserve(static_cast<std::size_t>(total));
    for (int j = 0; j < total; ++j) {
        Sonographer s;
        s.id = j;
        s.capability = j < config.sonos_both ? Capability::Both : Capability::NonFetalOnly;
        // The lowest-id sonographer of each capability is always on duty.
        const bool guaranteed = (j == 0) || (j == config.sonos_both);
        RandomStream leave_stream = day.derive("leave", static_cast<std::uint64_t>(j));
        const bool on_leave = sample_bernoulli(leave_stream, plan.leave_rate);
        s.on_duty = guaranteed || !on_leave;
        plan.roster.push_back(s);
        plan.break_streams.push_back(day.derive("break", static_cast<std::uint64_t>(j)));
    }
    return plan;
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Arrival: return "arrival";
        case EventKind::TurnAway: return "turn_away";
        case EventKind::NoShow: return "no_show";
        case EventKind::ExamStart: return "exam_start";
        case EventKind::ExamEnd: return "exam_end";
        case EventKind::BreakStart: return "break_start";
        case EventKind::BreakEnd: return "break_end";
    }
    return "?";
}

PatientStatus classify_waiting(Minute now, Minute scheduled, Minute ontime_window) {
    if (scheduled - now >= ontime_window) return PatientStatus::WaitingEarly;
    if (now - scheduled > ontime_window) return PatientStatus::WaitingLate;
    return PatientStatus::WaitingOnTime;
}

Minute waiting_time(const Patient& patient, Minute now) {
    if (!is_waiting(patient.status) || !patient.realized_arrival)
        throw std::logic_error("waiting_time: patient " + std::to_string(patient.id) + " is not waiting");
    const Minute arrival = *patient.realized_arrival;
    return arrival >= patient.scheduled_time ? now - arrival : now - patient.scheduled_time;
}

int wait_category(const Patient& p) {
    const int base = p.fetal ? 0 : 3;
    switch (p.status) {
        case PatientStatus::WaitingEarly: return base + 0;
        case PatientStatus::WaitingOnTime: return base + 1;
        case PatientStatus::WaitingLate: return base + 2;
        default: return -1;
    }
}

std::array<int, kWaitCategories> waiting_counts(const SimState& state) {
    std::array<int, kWaitCategories> counts{};
    for (const auto& p : state.patients) {
        if (const int c = wait_category(p); c >= 0) ++counts[static_cast<std::size_t>(c)];
    }
    return counts;
}

int idle_pair_count(const SimState& state) {
    const auto rooms = std::count_if(state.rooms.begin(), state.rooms.end(), [](const Room& r) { return !r.occupied; });
    const auto sonos = std::count_if(state.sonographers.begin(), state.sonographers.end(),
                                     [](const Sonographer& s) { return s.available(); });
    return static_cast<int>(std::min(rooms, sonos));
}

PenaltyTerms minute_penalty(const SimState& state) {
    const auto& c = state.cfg();
    const auto w = waiting_counts(state);
    PenaltyTerms t;
    t.ontime = c.penalty_ontime_per_min * (w[FetalOnTime] + w[NonFetalOnTime]);
    t.late = c.penalty_late_per_min * (w[FetalLate] + w[NonFetalLate]);
    t.idle = c.idle_penalty_enabled ? c.penalty_idle_pair_per_min * idle_pair_count(state) : 0.0;
    if (state.clock >= c.entry_cutoff) {
        const int all = std::accumulate(w.begin(), w.end(), 0);
        t.after_cutoff = c.penalty_after_cutoff_per_min * all;
    }
    return t;
}

Observation observe(const SimState& state) {
    Observation o;
    const auto w = waiting_counts(state);
    std::copy(w.begin(), w.end(), o.values.begin());
    for (const auto& r : state.rooms) {
        if (r.occupied) continue;
        ++o.values[r.capability == Capability::Both ? Observation::Rb : Observation::Rn];
    }
    for (const auto& s : state.sonographers) {
        if (!s.on_duty) continue;
        const bool both = s.capability == Capability::Both;
        if (s.activity == ResourceActivity::Idle) ++o.values[both ? Observation::Sb : Observation::Sn];
        if (s.activity == ResourceActivity::OnBreak) ++o.values[both ? Observation::Lb : Observation::Ln];
    }
    o.values[Observation::T] = state.clock;
    return o;
}

std::optional<std::string> allocation_error(const SimState& state, std::span<const Allocation> allocations) {
    const auto& c = state.cfg();
    if (state.clock >= c.close_time && !allocations.empty())
        return "no allocation may start at or after close_time";
    std::vector<char> used_patient(state.patients.size()), used_room(state.rooms.size()),
        used_sono(state.sonographers.size());
    for (const auto& a : allocations) {
        const std::string tag = "allocation (patient " + std::to_string(a.patient) + ", room " + std::to_string(a.room) +
                                ", sonographer " + std::to_string(a.sonographer) + "): ";
        if (a.patient < 0 || a.patient >= static_cast<int>(state.patients.size())) return tag + "unknown patient";
        if (a.room < 0 || a.room >= static_cast<int>(state.rooms.size())) return tag + "unknown room";
        if (a.sonographer < 0 || a.sonographer >= static_cast<int>(state.sonographers.size()))
            return tag + "unknown sonographer";
        const auto& p = state.patients[static_cast<std::size_t>(a.patient)];
        const auto& r = state.rooms[static_cast<std::size_t>(a.room)];
        const auto& s = state.sonographers[static_cast<std::size_t>(a.sonographer)];
        if (!is_waiting(p.status)) return tag + "patient is " + std::string(to_string(p.status));
        if (r.occupied) return tag + "room is occupied";
        if (!s.on_duty) return tag + "sonographer is off duty";
        if (s.activity == ResourceActivity::OnBreak) return tag + "sonographer is on break";
        if (s.activity == ResourceActivity::Testing) return tag + "sonographer is testing";
        if (p.fetal && (r.capability != Capability::Both || s.capability != Capability::Both))
            return tag + "fetal exam needs a fetal-capable room and sonographer";
        if (std::exchange(used_patient[static_cast<std::size_t>(a.patient)], 1)) return tag + "patient allocated twice";
        if (std::exchange(used_room[static_cast<std::size_t>(a.room)], 1)) return tag + "room double-booked";
        if (std::exchange(used_sono[static_cast<std::size_t>(a.sonographer)], 1))
            return tag + "sonographer double-booked";
    }
    return std::nullopt;
}

namespace {

void start_exams(SimState& state, std::span<const Allocation> allocations, std::vector<Event>* events) {
    for (const auto& a : allocations) {
        auto& p = state.patients[static_cast<std::size_t>(a.patient)];
        auto& r = state.rooms[static_cast<std::size_t>(a.room)];
        auto& s = state.sonographers[static_cast<std::size_t>(a.sonographer)];
        const Minute end = state.clock + p.duration;
        p.status = PatientStatus::InExam;
        p.service_start = state.clock;
        p.service_end = end;
        p.room = a.room;
        p.sonographer = a.sonographer;
        r.occupied = true;
        r.until = end;
        r.patient = a.patient;
        s.activity = ResourceActivity::Testing;
        s.until = end;
        if (events) events->push_back({state.clock, EventKind::ExamStart, a.patient, a.room, a.sonographer, end});
    }
}

void process_arrivals(SimState& state, std::vector<Event>& events) {
    const auto& c = state.cfg();
    for (auto& p : state.patients) {
        if (p.status != PatientStatus::NotArrived) continue;
        if (p.no_show) {
            // Nobody can tell a no-show from a very late arrival until the doors close.
            if (state.clock > c.entry_cutoff) {
                p.status = PatientStatus::NoShow;
                events.push_back({state.clock, EventKind::NoShow, p.id});
            }
            continue;
        }
        if (!p.realized_arrival || *p.realized_arrival > state.clock) continue;
        if (p.turned_away) {
            p.status = PatientStatus::TurnedAway;
            events.push_back({state.clock, EventKind::TurnAway, p.id});
        } else {
            p.status = classify_waiting(state.clock, p.scheduled_time, c.ontime_window_min);
            events.push_back({state.clock, EventKind::Arrival, p.id});
        }
    }
}

void reclassify(SimState& state) {
    const Minute window = state.cfg().ontime_window_min;
    for (auto& p : state.patients) {
        if (is_waiting(p.status)) p.status = classify_waiting(state.clock, p.scheduled_time, window);
    }
}

void take_break_decision(SimState& state, Sonographer& s, std::vector<Event>& events) {
    const auto& c = state.cfg();
    if (s.breaks_remaining <= 0) return;
    const double u = state.break_streams[static_cast<std::size_t>(s.id)].uniform_at(s.break_draws++);
    const BreakChoice choice = break_choice_from_uniform(c, s.breaks_remaining, u);
    Minute length = 0;
    if (choice == BreakChoice::BothTogether) {
        length = 2 * c.break_len_min;
        s.breaks_remaining -= 2;
    } else if (choice == BreakChoice::Single) {
        length = c.break_len_min;
        s.breaks_remaining -= 1;
    }
    if (length == 0) return;
    s.activity = ResourceActivity::OnBreak;
    s.until = state.clock + length;
    s.break_minutes_taken += length;
    events.push_back({state.clock, EventKind::BreakStart, -1, -1, s.id, s.until});
}

void complete_exams(SimState& state, std::vector<Event>& events, bool allow_breaks) {
    for (auto& p : state.patients) {
        if (p.status != PatientStatus::InExam || *p.service_end != state.clock) continue;
        p.status = PatientStatus::Done;
        auto& r = state.rooms[static_cast<std::size_t>(p.room)];
        auto& s = state.sonographers[static_cast<std::size_t>(p.sonographer)];
        r.occupied = false;
        r.patient = -1;
        s.activity = ResourceActivity::Idle;
        events.push_back({state.clock, EventKind::ExamEnd, p.id, p.room, p.sonographer});
        if (allow_breaks) take_break_decision(state, s, events);
    }
}

void end_breaks(SimState& state, std::vector<Event>& events) {
    for (auto& s : state.sonographers) {
        if (s.activity == ResourceActivity::OnBreak && s.until == state.clock) {
            s.activity = ResourceActivity::Idle;
            events.push_back({state.clock, EventKind::BreakEnd, -1, -1, s.id});
        }
    }
}

}  // namespace

SimState start_day(std::shared_ptr<const SimConfig> config, const DayPlan& plan) {
    SimState state;
    state.config = std::move(config);
    const auto& c = state.cfg();
    state.clock = c.open_time;
    state.patients = plan.patients;
    state.sonographers = plan.roster;
    state.break_streams = plan.break_streams;
    for (int i = 0; i < c.total_rooms(); ++i) {
        Room r;
        r.id = i;
        r.capability = i < c.rooms_both ? Capability::Both : Capability::NonFetalOnly;
        state.rooms.push_back(r);
    }
    process_arrivals(state, state.events);
    return state;
}

SimState start_day(const SimConfig& config, const DayPlan& plan) {
    return start_day(std::make_shared<const SimConfig>(config), plan);
}

PenaltyTerms penalty_with(const SimState& state, std::span<const Allocation> allocations) {
    if (auto err = allocation_error(state, allocations)) throw InfeasibleAllocation(*err);
    SimState copy = state;
    start_exams(copy, allocations, nullptr);
    return minute_penalty(copy);
}

MinuteOutcome advance_minute(SimState& state, std::span<const Allocation> allocations) {
    const auto& c = state.cfg();
    if (state.clock >= c.close_time) throw InfeasibleAllocation("advance_minute: the day is over (clock at close_time)");
    if (auto err = allocation_error(state, allocations)) throw InfeasibleAllocation(*err);

    MinuteOutcome out;
    out.clock = state.clock;
    start_exams(state, allocations, &out.events);
    out.penalty = minute_penalty(state);
    out.waiting = waiting_counts(state);
    state.penalty_accumulated += out.penalty.total();

    ++state.clock;
    process_arrivals(state, out.events);
    reclassify(state);
    complete_exams(state, out.events, state.clock < c.close_time);
    end_breaks(state, out.events);

    state.events.insert(state.events.end(), out.events.begin(), out.events.end());
    return out;
}

void DayAccumulator::record(const MinuteOutcome& outcome) {
    metrics_.penalty_series.push_back(outcome.penalty);
    metrics_.total_penalty += outcome.penalty.total();
    for (int k = 0; k < kWaitCategories; ++k)
        metrics_.waiting_series[static_cast<std::size_t>(k)].push_back(outcome.waiting[static_cast<std::size_t>(k)]);
}

DailyMetrics DayAccumulator::finish(SimState& state) {
    DailyMetrics m = std::move(metrics_);
    metrics_ = {};

    for (const auto& p : state.patients) {
        switch (p.status) {
            case PatientStatus::Done: ++m.served; break;
            case PatientStatus::InExam: ++m.in_exam_at_close; break;
            case PatientStatus::WaitingEarly:
            case PatientStatus::WaitingOnTime:
            case PatientStatus::WaitingLate: ++m.waiting_at_close; break;
            case PatientStatus::NoShow: ++m.no_shows; break;
            case PatientStatus::TurnedAway: ++m.turned_away; break;
            case PatientStatus::NotArrived:
                // Arrival times past close_time never reach the clock.
                if (p.no_show) ++m.no_shows;
                else ++m.turned_away;
                break;
        }
    }

    // Exams already running finish after hours; nothing new starts.
    std::vector<Event> tail;
    for (auto& p : state.patients) {
        if (p.status == PatientStatus::NotArrived) {
            p.status = p.no_show ? PatientStatus::NoShow : PatientStatus::TurnedAway;
            tail.push_back({state.clock, p.no_show ? EventKind::NoShow : EventKind::TurnAway, p.id});
        }
    }
    Minute last_end = state.clock;
    for (const auto& p : state.patients)
        if (p.status == PatientStatus::InExam) last_end = std::max(last_end, *p.service_end);
    while (state.clock < last_end) {
        ++state.clock;
        complete_exams(state, tail, false);
        end_breaks(state, tail);
    }
    state.events.insert(state.events.end(), tail.begin(), tail.end());

    double wait_sum = 0;
    int started = 0;
    for (const auto& p : state.patients) {
        if (!p.service_start) continue;
        ++started;
        const Minute ref = std::max(*p.realized_arrival, p.scheduled_time);
        wait_sum += std::max(0, *p.service_start - ref);
    }
    m.avg_wait_min = started > 0 ? wait_sum / started : 0.0;
    m.on_duty = static_cast<int>(std::count_if(state.sonographers.begin(), state.sonographers.end(),
                                               [](const Sonographer& s) { return s.on_duty; }));
    m.sonographer_quota = m.on_duty > 0 ? static_cast<double>(started) / m.on_duty : 0.0;
    return m;
}

DayResult run_day(const SimConfig& config, const DayPlan& plan, const DecisionFn& policy, bool record_trace) {
    SimState state = start_day(config, plan);
    DayAccumulator acc;
    DayResult result;
    if (record_trace) result.trace.reserve(static_cast<std::size_t>(config.close_time - config.open_time));
    while (state.clock < config.close_time) {
        const Observation obs = record_trace ? observe(state) : Observation{};
        std::vector<Allocation> allocations = policy(state);
        const MinuteOutcome outcome = advance_minute(state, allocations);
        acc.record(outcome);
        if (record_trace) result.trace.push_back({outcome.clock, obs, std::move(allocations), outcome.penalty});
    }
    result.metrics = acc.finish(state);
    return result;
}

}  // namespace echolab
