#include <doctest.h>

#include <algorithm>
#include <limits>
#include <set>

#include "echolab/policies.hpp"
#include "support.hpp"

using namespace echolab;
using namespace echolab::testing;

namespace {

// Leaves only room 0 (fetal-capable) and sonographer 0 (fetal-capable) idle.
void only_both_pair_idle(SimState& s) {
    for (int r = 1; r < static_cast<int>(s.rooms.size()); ++r) occupy_room(s, r, s.clock + 60);
    for (int j = 1; j < static_cast<int>(s.sonographers.size()); ++j) busy_sonographer(s, j, s.clock + 60);
}

Patient& waiting(SimState& s, int id, PatientStatus st, Minute arrival) {
    auto& p = s.patients[static_cast<std::size_t>(id)];
    p.no_show = false;
    p.status = st;
    p.realized_arrival = arrival;
    return p;
}

DecisionFn as_fn(Policy& p) {
    return [&p](const SimState& s) { return p.decide(s); };
}

}  // namespace

TEST_CASE("policy 1: longest waiter first, compatible pair") {
    const SimConfig c = default_config();
    SimState s = empty_day(c, 600);
    const int f = patient_at_or_after(s, true, 600);   // 10:15 fetal
    const int n = patient_at_or_after(s, false, 600);  // 10:00 non-fetal
    s.clock = 610;
    s.patients[static_cast<std::size_t>(f)].scheduled_time = 600;
    waiting(s, f, PatientStatus::WaitingOnTime, 605);                   // wait 5
    waiting(s, n, PatientStatus::WaitingOnTime, 601);                   // wait 9
    only_both_pair_idle(s);
    const auto a = policy1(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == Allocation{n, 0, 0});
}

TEST_CASE("policy 1 prefers non-fetal resources and skips the unservable") {
    const SimConfig c = default_config();
    SimState s = empty_day(c, 600);
    const int n = patient_at_or_after(s, false, 600);
    place(s, n, 595);
    auto a = policy1(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == Allocation{n, 1, 4});

    // Fetal patient waits longest but no fetal-capable sonographer is free: skip and serve the next.
    const int f = patient_at_or_after(s, true, 600);
    waiting(s, f, PatientStatus::WaitingLate, 580);
    for (int j = 0; j < 4; ++j) busy_sonographer(s, j, 700);
    a = policy1(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0].patient == n);
}

TEST_CASE("policy 1 ignores early arrivals, policy 2 serves them") {
    const SimConfig c = default_config();
    SimState s = empty_day(c, 540);
    const int n = patient_at_or_after(s, false, 600);
    place(s, n, 540);
    REQUIRE(s.patients[static_cast<std::size_t>(n)].status == PatientStatus::WaitingEarly);
    CHECK(policy1(s).empty());
    const auto a = policy2(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == Allocation{n, 1, 4});
}

TEST_CASE("policy 2 with no spare pair after policy 1 equals policy 1") {
    const SimConfig c = default_config();
    SimState s = empty_day(c, 600);
    only_both_pair_idle(s);
    const int n = patient_at_or_after(s, false, 600);
    place(s, n, 600);
    const int e = patient_at_or_after(s, false, 660);
    place(s, e, 590);
    CHECK(policy2(s) == policy1(s));
}

TEST_CASE("policy 3 keeps the dedicated pair for fetal patients") {
    const SimConfig c = default_config();
    SimState s = empty_day(c, 600);
    only_both_pair_idle(s);
    const int n = patient_at_or_after(s, false, 600);
    waiting(s, n, PatientStatus::WaitingLate, 560);
    CHECK(policy3(s).empty());
    CHECK(policy1(s).size() == 1);

    // A waiting fetal patient gets the dedicated pair.
    const int f = patient_at_or_after(s, true, 600);
    waiting(s, f, PatientStatus::WaitingOnTime, 600);
    const auto a = policy3(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == Allocation{f, 0, 0});
}

TEST_CASE("policy 3 releases the dedicated pair once fetal patients are resolved") {
    const SimConfig c = default_config();
    SimState s = empty_day(c, 14 * 60);
    for (auto& p : s.patients)
        if (p.fetal) p.status = PatientStatus::Done;
    only_both_pair_idle(s);
    const int n = patient_at_or_after(s, false, 14 * 60);
    place(s, n, 14 * 60);
    CHECK_FALSE(fetal_dedication(s).active);
    const auto a = policy3(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == Allocation{n, 0, 0});
}

TEST_CASE("policy 3 complements a lone dedicated resource") {
    const SimConfig c = default_config();
    SimState s = empty_day(c, 600);
    busy_sonographer(s, 0, 700);  // dedicated sonographer busy
    const int f = patient_at_or_after(s, true, 600);
    waiting(s, f, PatientStatus::WaitingOnTime, 600);
    const auto a = policy3(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == Allocation{f, 0, 1});
}

TEST_CASE("policy 4 serves an early fetal patient on the dedicated pair") {
    const SimConfig c = default_config();
    SimState s = empty_day(c, 540);
    only_both_pair_idle(s);
    const int f = patient_at_or_after(s, true, 600);
    place(s, f, 540);
    REQUIRE(s.patients[static_cast<std::size_t>(f)].status == PatientStatus::WaitingEarly);
    CHECK(policy3(s).empty());
    const auto a = policy4(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == Allocation{f, 0, 0});

    // An early non-fetal patient cannot use the dedicated pair.
    SimState t = empty_day(c, 540);
    only_both_pair_idle(t);
    place(t, patient_at_or_after(t, false, 600), 540);
    CHECK(policy4(t).empty());
}

TEST_CASE("reservation book construction") {
    const SimConfig c = default_config();
    const DayPlan full = build_day(c, 1, 0, 0.0);

    const auto none = build_reservation_book(c, full, 0, 0);
    CHECK(none.reservations.empty());
    CHECK(none.pairs.size() == 6);
    CHECK(none.reserved_pair_count() == 0);
    CHECK(none.pairs[0].room == 0);
    CHECK(none.pairs[0].sonographer == 0);
    CHECK(none.pairs[0].fetal_capable);

    const auto fetal = build_reservation_book(c, full, 100, 0);
    CHECK(fetal.reservations.size() == 9);
    for (const auto& r : fetal.reservations) CHECK(r.pair_id == 0);

    CHECK(reserved_nonfetal_pairs(5, 25) == 1);
    CHECK(reserved_nonfetal_pairs(5, 50) == 3);
    CHECK(reserved_nonfetal_pairs(5, 75) == 4);
    CHECK(reserved_nonfetal_pairs(5, 100) == 5);
    CHECK(reserved_nonfetal_pairs(2, 25) == 1);
    CHECK(reserved_nonfetal_pairs(1, 25) == 0);
    CHECK(build_reservation_book(c, full, 0, 25).reserved_pair_count() == 1);

    CHECK_THROWS(build_reservation_book(c, full, 50, 0));
    CHECK_THROWS(build_reservation_book(c, full, 0, 30));

    // Pairs never exceed min(on-duty sonographers, rooms).
    const DayPlan thin = build_day(c, 1, 0, 1.0);
    CHECK(build_reservation_book(c, thin, 100, 100).pairs.size() == 2);
}

TEST_CASE("reservation gaps exceed 40 minutes") {
    const SimConfig c = default_config();
    for (int day = 0; day < 100; ++day) {
        const DayPlan plan = build_day(c, 21, day);
        for (int alpha : {0, 100})
            for (int beta : {0, 25, 50, 75, 100}) {
                const auto book = build_reservation_book(c, plan, alpha, beta);
                std::set<int> booked;
                for (std::size_t i = 0; i < book.reservations.size(); ++i) {
                    const auto& a = book.reservations[i];
                    CHECK(book.pairs[static_cast<std::size_t>(a.pair_id)].reserved);
                    CHECK(booked.insert(a.patient_id).second);
                    const bool fetal = plan.patients[static_cast<std::size_t>(a.patient_id)].fetal;
                    CHECK(fetal == book.pairs[static_cast<std::size_t>(a.pair_id)].fetal_capable);
                    for (std::size_t j = i + 1; j < book.reservations.size(); ++j) {
                        const auto& b = book.reservations[j];
                        if (a.pair_id == b.pair_id) CHECK(std::abs(a.scheduled_time - b.scheduled_time) > 40);
                    }
                }
            }
    }
}

TEST_CASE("policy 5: forfeiture and look-ahead") {
    const SimConfig c = default_config();
    DayPlan plan = build_day(c, 1, 0, 0.0);
    ReservationPolicy pol(build_reservation_book(c, plan, 100, 0), false);
    const auto& book = pol.book();
    REQUIRE(book.reservations.size() == 9);

    // Fetal patient booked at 10:15 arrives 10:27: forfeited at 10:26 and served as a late arrival.
    SimState s = empty_day(c, 10 * 60 + 26);
    const int f = patient_at_or_after(s, true, 10 * 60 + 15);
    for (auto& p : s.patients)
        if (p.fetal && p.scheduled_time < 10 * 60 + 15) p.status = PatientStatus::Done;
    CHECK(pol.decide(s).empty());
    const Reservation* r = nullptr;
    for (const auto& x : pol.book().reservations)
        if (x.patient_id == f) r = &x;
    REQUIRE(r);
    CHECK(r->status == ReservationStatus::Forfeited);
    s.clock = 10 * 60 + 27;
    waiting(s, f, PatientStatus::WaitingLate, 10 * 60 + 27);
    const auto a = pol.decide(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0].patient == f);
    CHECK(r->status == ReservationStatus::Forfeited);
}

TEST_CASE("policy 5: reserved pair is held within 40 minutes of a booking") {
    const SimConfig c = default_config();
    const DayPlan plan = build_day(c, 1, 0, 0.0);
    auto held = build_reservation_book(c, plan, 100, 0);
    for (auto& res : held.reservations)
        if (res.scheduled_time < 11 * 60) res.status = ReservationStatus::Used;
    ReservationPolicy pol(held, false);
    // 10:55: next fetal booking 11:15 is 20 minutes away; earlier fetal patients resolved.
    SimState s = empty_day(c, 10 * 60 + 55);
    for (auto& p : s.patients)
        if (p.fetal && p.scheduled_time < 11 * 60) p.status = PatientStatus::Done;
    only_both_pair_idle(s);
    const int n = patient_at_or_after(s, false, 10 * 60 + 30);
    waiting(s, n, PatientStatus::WaitingLate, 10 * 60 + 41);
    CHECK(pol.decide(s).empty());

    // At 10:30 the next booking (11:15) is 45 minutes out, so the pair is usable.
    ReservationPolicy pol2(held, false);
    s.clock = 10 * 60 + 30;
    waiting(s, n, PatientStatus::WaitingOnTime, 10 * 60 + 25);
    s.patients[static_cast<std::size_t>(n)].scheduled_time = 10 * 60 + 25;
    const auto a = pol2.decide(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == Allocation{n, 0, 0});
}

TEST_CASE("policy 5 seats an on-time reserved patient on their pair") {
    const SimConfig c = default_config();
    const DayPlan plan = build_day(c, 1, 0, 0.0);
    ReservationPolicy pol(build_reservation_book(c, plan, 100, 0), false);
    SimState s = empty_day(c, 8 * 60 + 15);
    const int f = patient_at_or_after(s, true, 8 * 60);
    waiting(s, f, PatientStatus::WaitingOnTime, 8 * 60 + 10);
    const auto a = pol.decide(s);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == Allocation{f, 0, 0});
    CHECK(pol.book().reservations.front().status == ReservationStatus::Used);
}

TEST_CASE("policy 6 does not serve early patients holding a reservation") {
    const SimConfig c = default_config();
    const DayPlan plan = build_day(c, 1, 0, 0.0);
    ReservationPolicy pol(build_reservation_book(c, plan, 100, 0), true);
    SimState s = empty_day(c, 8 * 60 + 15);
    const int f = patient_at_or_after(s, true, 9 * 60);
    place(s, f, 8 * 60 + 15);
    REQUIRE(s.patients[static_cast<std::size_t>(f)].status == PatientStatus::WaitingEarly);
    CHECK(pol.decide(s).empty());

    ReservationPolicy open(build_reservation_book(c, plan, 0, 0), true);
    CHECK(open.decide(s).size() == 1);
}

TEST_CASE("all rule policies emit feasible allocations; dominance; equivalences") {
    const SimConfig c = default_config();
    for (int day = 0; day < 60; ++day) {
        const DayPlan plan = build_day(c, 5, day);
        for (auto kind : {RulePolicy::P1, RulePolicy::P2, RulePolicy::P3, RulePolicy::P4, RulePolicy::P5,
                          RulePolicy::P6}) {
            auto pol = make_rule_policy(kind, c, plan, 100, 50);
            // Feasibility is enforced by run_day (it throws otherwise).
            DecisionFn fn = [&](const SimState& s) {
                auto a = pol->decide(s);
                CHECK_FALSE(allocation_error(s, a).has_value());
                return a;
            };
            CHECK_NOTHROW(run_day(c, plan, fn, false));
        }

        auto p5 = make_rule_policy(RulePolicy::P5, c, plan, 0, 0);
        auto p6 = make_rule_policy(RulePolicy::P6, c, plan, 0, 0);
        const auto t1 = run_day(c, plan, policy1);
        const auto t2 = run_day(c, plan, policy2);
        CHECK(run_day(c, plan, as_fn(*p5)).trace == t1.trace);
        CHECK(run_day(c, plan, as_fn(*p6)).trace == t2.trace);

        // On every state of a policy-2 day: policy 2 extends policy 1, and
        // within a group no skipped compatible patient waited longer.
        SimState s = start_day(c, plan);
        while (s.clock < c.close_time) {
            const auto a1 = policy1(s);
            const auto a2 = policy2(s);
            REQUIRE(a2.size() >= a1.size());
            CHECK(std::equal(a1.begin(), a1.end(), a2.begin()));
            for (auto status : {PatientStatus::WaitingOnTime, PatientStatus::WaitingLate}) {
                for (bool fetal : {false, true}) {
                    Minute min_served = std::numeric_limits<Minute>::max();
                    Minute max_skipped = std::numeric_limits<Minute>::min();
                    for (const auto& p : s.patients) {
                        if (p.status != status || p.fetal != fetal) continue;
                        const bool served = std::any_of(a1.begin(), a1.end(), [&](auto& x) { return x.patient == p.id; });
                        const Minute w = waiting_time(p, s.clock);
                        if (served) min_served = std::min(min_served, w);
                        else max_skipped = std::max(max_skipped, w);
                    }
                    if (min_served != std::numeric_limits<Minute>::max()) CHECK(max_skipped <= min_served);
                }
            }
            advance_minute(s, a2);
        }
    }
}
