#include "echolab/policies.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace echolab {

ResourcePool::ResourcePool(const SimState& state) : state_(&state) {
    for (const auto& r : state.rooms)
        if (!r.occupied) rooms_.push_back(r.id);
    for (const auto& s : state.sonographers)
        if (s.available()) sonos_.push_back(s.id);
}

std::optional<int> ResourcePool::pick_room(bool fetal, int exclude) const {
    std::optional<int> fallback;
    for (int id : rooms_) {
        if (id == exclude) continue;
        const bool both = state_->rooms[static_cast<std::size_t>(id)].capability == Capability::Both;
        if (fetal) {
            if (both) return id;
        } else if (!both) {
            return id;
        } else if (!fallback) {
            fallback = id;
        }
    }
    return fetal ? std::nullopt : fallback;
}

std::optional<int> ResourcePool::pick_sonographer(bool fetal, int exclude) const {
    std::optional<int> fallback;
    for (int id : sonos_) {
        if (id == exclude) continue;
        const bool both = state_->sonographers[static_cast<std::size_t>(id)].capability == Capability::Both;
        if (fetal) {
            if (both) return id;
        } else if (!both) {
            return id;
        } else if (!fallback) {
            fallback = id;
        }
    }
    return fetal ? std::nullopt : fallback;
}

bool ResourcePool::has_room(int id) const { return std::find(rooms_.begin(), rooms_.end(), id) != rooms_.end(); }
bool ResourcePool::has_sonographer(int id) const {
    return std::find(sonos_.begin(), sonos_.end(), id) != sonos_.end();
}
void ResourcePool::remove_room(int id) { std::erase(rooms_, id); }
void ResourcePool::remove_sonographer(int id) { std::erase(sonos_, id); }

std::optional<Allocation> ResourcePool::take(const Patient& patient, int exclude_room, int exclude_sonographer) {
    const auto room = pick_room(patient.fetal, exclude_room);
    const auto sono = pick_sonographer(patient.fetal, exclude_sonographer);
    if (!room || !sono) return std::nullopt;
    remove_room(*room);
    remove_sonographer(*sono);
    return Allocation{patient.id, *room, *sono};
}

std::vector<int> waiting_by_priority(const SimState& state, PatientStatus status) {
    std::vector<std::pair<Minute, int>> keyed;
    for (const auto& p : state.patients)
        if (p.status == status) keyed.emplace_back(waiting_time(p, state.clock), p.id);
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> ids;
    ids.reserve(keyed.size());
    for (const auto& [_, id] : keyed) ids.push_back(id);
    return ids;
}

namespace {

using Assigner = std::function<std::optional<Allocation>(const Patient&)>;

// Walks the candidates in priority order; patients with no compatible pair are
// skipped and the walk continues.
void serve_in_order(const SimState& state, const std::vector<int>& candidates, const Assigner& assign,
                    std::vector<Allocation>& out) {
    for (int id : candidates) {
        if (std::any_of(out.begin(), out.end(), [&](const Allocation& x) { return x.patient == id; })) continue;
        if (auto a = assign(state.patients[static_cast<std::size_t>(id)])) out.push_back(*a);
    }
}

std::vector<Allocation> on_the_fly(const SimState& state, const Assigner& assign, bool serve_early) {
    std::vector<Allocation> out;
    serve_in_order(state, waiting_by_priority(state, PatientStatus::WaitingOnTime), assign, out);
    serve_in_order(state, waiting_by_priority(state, PatientStatus::WaitingLate), assign, out);
    if (serve_early) serve_in_order(state, waiting_by_priority(state, PatientStatus::WaitingEarly), assign, out);
    return out;
}

std::vector<Allocation> unrestricted(const SimState& state, bool serve_early) {
    ResourcePool pool(state);
    return on_the_fly(state, [&](const Patient& p) { return pool.take(p); }, serve_early);
}

std::vector<Allocation> dedicated(const SimState& state, bool serve_early) {
    ResourcePool pool(state);
    const FetalDedication ded = fetal_dedication(state);
    if (!ded.active) return on_the_fly(state, [&](const Patient& p) { return pool.take(p); }, serve_early);

    auto assign = [&](const Patient& p) -> std::optional<Allocation> {
        if (!p.fetal) return pool.take(p, ded.room, ded.sonographer);
        const bool room_free = pool.has_room(ded.room);
        const bool sono_free = pool.has_sonographer(ded.sonographer);
        std::optional<int> room = room_free ? std::optional<int>(ded.room) : pool.pick_room(true, ded.room);
        std::optional<int> sono =
            sono_free ? std::optional<int>(ded.sonographer) : pool.pick_sonographer(true, ded.sonographer);
        if (!room || !sono) return std::nullopt;
        pool.remove_room(*room);
        pool.remove_sonographer(*sono);
        return Allocation{p.id, *room, *sono};
    };
    return on_the_fly(state, assign, serve_early);
}

}  // namespace

std::vector<Allocation> policy1(const SimState& state) { return unrestricted(state, false); }
std::vector<Allocation> policy2(const SimState& state) { return unrestricted(state, true); }
std::vector<Allocation> policy3(const SimState& state) { return dedicated(state, false); }
std::vector<Allocation> policy4(const SimState& state) { return dedicated(state, true); }

FetalDedication fetal_dedication(const SimState& state) {
    FetalDedication d;
    for (const auto& r : state.rooms) {
        if (r.capability == Capability::Both) {
            d.room = r.id;
            break;
        }
    }
    for (const auto& s : state.sonographers) {
        if (s.on_duty && s.capability == Capability::Both) {
            d.sonographer = s.id;
            break;
        }
    }
    // Dedication lasts while any fetal patient may still need an exam.
    d.active = std::any_of(state.patients.begin(), state.patients.end(), [](const Patient& p) {
        return p.fetal && (p.status == PatientStatus::NotArrived || is_waiting(p.status));
    });
    return d;
}

// ---------------------------------------------------------------------------

const Reservation* ReservationBook::pending_for(int patient_id) const {
    for (const auto& r : reservations)
        if (r.patient_id == patient_id && r.status == ReservationStatus::Pending) return &r;
    return nullptr;
}

int ReservationBook::reserved_pair_count() const {
    return static_cast<int>(std::count_if(pairs.begin(), pairs.end(), [](const EchoPair& p) { return p.reserved; }));
}

int reserved_nonfetal_pairs(int nonfetal_pair_count, int beta_percent) {
    return (beta_percent * nonfetal_pair_count + 50) / 100;
}

ReservationBook build_reservation_book(const SimConfig& config, const DayPlan& plan, int alpha, int beta) {
    if (alpha != 0 && alpha != 100) throw std::invalid_argument("alpha must be 0 or 100 percent");
    if (beta != 0 && beta != 25 && beta != 50 && beta != 75 && beta != 100)
        throw std::invalid_argument("beta must be one of 0, 25, 50, 75, 100 percent");

    ReservationBook book;
    book.alpha = alpha;
    book.beta = beta;

    std::vector<int> both_rooms, nf_rooms;
    for (int i = 0; i < config.total_rooms(); ++i) (i < config.rooms_both ? both_rooms : nf_rooms).push_back(i);

    std::vector<int> on_duty;
    for (const auto& s : plan.roster)
        if (s.on_duty) on_duty.push_back(s.id);
    const auto fetal_sono = std::find_if(on_duty.begin(), on_duty.end(), [&](int id) {
        return plan.roster[static_cast<std::size_t>(id)].capability == Capability::Both;
    });
    if (fetal_sono == on_duty.end() || both_rooms.empty())
        throw std::invalid_argument("build_reservation_book: no fetal-capable pair can be formed");

    const int pair_count = std::min(static_cast<int>(on_duty.size()), config.total_rooms());
    book.pairs.push_back({both_rooms.front(), *fetal_sono, true, alpha == 100});

    std::vector<int> rest_sonos;
    for (int id : on_duty)
        if (id != *fetal_sono) rest_sonos.push_back(id);
    std::vector<int> rest_rooms = nf_rooms;
    rest_rooms.insert(rest_rooms.end(), both_rooms.begin() + 1, both_rooms.end());
    for (int k = 0; k + 1 < pair_count; ++k)
        book.pairs.push_back({rest_rooms[static_cast<std::size_t>(k)], rest_sonos[static_cast<std::size_t>(k)], false,
                              false});

    const int nf_pairs = pair_count - 1;
    const int reserved_nf = reserved_nonfetal_pairs(nf_pairs, beta);
    std::vector<int> nf_reserved_ids;
    for (int k = 0; k < reserved_nf; ++k) {
        book.pairs[static_cast<std::size_t>(k + 1)].reserved = true;
        nf_reserved_ids.push_back(k + 1);
    }

    std::vector<const Patient*> order;
    for (const auto& p : plan.patients) order.push_back(&p);
    std::stable_sort(order.begin(), order.end(),
                     [](const Patient* a, const Patient* b) { return a->scheduled_time < b->scheduled_time; });

    std::vector<std::optional<Minute>> last(book.pairs.size());
    auto gap_ok = [&](int pair, Minute t) {
        const auto& prev = last[static_cast<std::size_t>(pair)];
        return !prev || t - *prev > kReservationGapMin;
    };
    auto book_on = [&](int pair, const Patient& p) {
        book.reservations.push_back({pair, p.id, p.scheduled_time, ReservationStatus::Pending});
        last[static_cast<std::size_t>(pair)] = p.scheduled_time;
    };

    std::size_t cursor = 0;
    for (const Patient* p : order) {
        if (p->fetal) {
            if (book.pairs[0].reserved && gap_ok(0, p->scheduled_time)) book_on(0, *p);
            continue;
        }
        for (std::size_t t = 0; t < nf_reserved_ids.size(); ++t) {
            const std::size_t slot = (cursor + t) % nf_reserved_ids.size();
            const int pair = nf_reserved_ids[slot];
            if (gap_ok(pair, p->scheduled_time)) {
                book_on(pair, *p);
                cursor = (slot + 1) % nf_reserved_ids.size();
                break;
            }
        }
    }
    return book;
}

ReservationPolicy::ReservationPolicy(ReservationBook book, bool serve_early)
    : book_(std::move(book)), serve_early_(serve_early) {}

std::vector<Allocation> ReservationPolicy::decide(const SimState& state) {
    const auto& c = state.cfg();
    const Minute now = state.clock;
    std::vector<Allocation> out;

    for (auto& r : book_.reservations) {
        if (r.status == ReservationStatus::Pending && now - r.scheduled_time > c.ontime_window_min)
            r.status = ReservationStatus::Forfeited;
    }

    ResourcePool pool(state);
    auto earlier_resolved = [&](const Reservation& r) {
        for (const auto& other : book_.reservations) {
            if (&other == &r) break;
            if (other.pair_id == r.pair_id && other.status == ReservationStatus::Pending) return false;
        }
        return true;
    };

    // Seat on-time reserved patients on their own pair.
    for (auto& r : book_.reservations) {
        if (r.status != ReservationStatus::Pending) continue;
        const auto& p = state.patients[static_cast<std::size_t>(r.patient_id)];
        if (p.status != PatientStatus::WaitingOnTime) continue;
        const auto& pair = book_.pairs[static_cast<std::size_t>(r.pair_id)];
        if (!pool.has_room(pair.room) || !pool.has_sonographer(pair.sonographer) || !earlier_resolved(r)) continue;
        pool.remove_room(pair.room);
        pool.remove_sonographer(pair.sonographer);
        out.push_back({p.id, pair.room, pair.sonographer});
        r.status = ReservationStatus::Used;
    }

    // Reserved pairs stay out of general use while a booked patient is due
    // within the look-ahead window (or an earlier booking is unresolved).
    for (std::size_t k = 0; k < book_.pairs.size(); ++k) {
        const auto& pair = book_.pairs[k];
        if (!pair.reserved) continue;
        const bool expecting = std::any_of(book_.reservations.begin(), book_.reservations.end(), [&](const Reservation& r) {
            return r.pair_id == static_cast<int>(k) && r.status == ReservationStatus::Pending &&
                   r.scheduled_time < now + kReservationGapMin;
        });
        if (expecting || !pool.has_room(pair.room) || !pool.has_sonographer(pair.sonographer)) {
            pool.remove_room(pair.room);
            pool.remove_sonographer(pair.sonographer);
        }
    }

    auto without_reservation = [&](std::vector<int> ids) {
        std::erase_if(ids, [&](int id) { return book_.pending_for(id) != nullptr; });
        return ids;
    };
    auto assign = [&](const Patient& p) { return pool.take(p); };
    serve_in_order(state, without_reservation(waiting_by_priority(state, PatientStatus::WaitingOnTime)), assign, out);
    serve_in_order(state, waiting_by_priority(state, PatientStatus::WaitingLate), assign, out);
    if (serve_early_)
        serve_in_order(state, without_reservation(waiting_by_priority(state, PatientStatus::WaitingEarly)), assign, out);
    return out;
}

namespace {

class FunctionPolicy final : public Policy {
public:
    explicit FunctionPolicy(std::vector<Allocation> (*fn)(const SimState&)) : fn_(fn) {}
    std::vector<Allocation> decide(const SimState& state) override { return fn_(state); }

private:
    std::vector<Allocation> (*fn_)(const SimState&);
};

}  // namespace

std::unique_ptr<Policy> make_rule_policy(RulePolicy kind, const SimConfig& config, const DayPlan& plan, int alpha,
                                         int beta) {
    switch (kind) {
        case RulePolicy::P1: return std::make_unique<FunctionPolicy>(&policy1);
        case RulePolicy::P2: return std::make_unique<FunctionPolicy>(&policy2);
        case RulePolicy::P3: return std::make_unique<FunctionPolicy>(&policy3);
        case RulePolicy::P4: return std::make_unique<FunctionPolicy>(&policy4);
        case RulePolicy::P5:
            return std::make_unique<ReservationPolicy>(build_reservation_book(config, plan, alpha, beta), false);
        case RulePolicy::P6:
            return std::make_unique<ReservationPolicy>(build_reservation_book(config, plan, alpha, beta), true);
    }
    throw std::invalid_argument("unknown policy");
}

}  // namespace echolab
