#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "echolab/engine.hpp"

namespace echolab {

// ---------------------------------------------------------------------------
// Resource picking shared by every rule-based policy and by action
// materialization.

/// Idle rooms and available sonographers of one state, consumed as exams are
/// assigned. Fetal exams take fetal-capable resources only; non-fetal exams
/// prefer non-fetal-only resources. Ties go to the lowest id.
class ResourcePool {
public:
    explicit ResourcePool(const SimState& state);

    std::optional<int> pick_room(bool fetal, int exclude = -1) const;
    std::optional<int> pick_sonographer(bool fetal, int exclude = -1) const;

    bool has_room(int id) const;
    bool has_sonographer(int id) const;
    void remove_room(int id);
    void remove_sonographer(int id);

    /// Picks and consumes a compatible (room, sonographer). Resources in the
    /// exclusion ids are never picked.
    std::optional<Allocation> take(const Patient& patient, int exclude_room = -1, int exclude_sonographer = -1);

    int room_count() const { return static_cast<int>(rooms_.size()); }
    int sonographer_count() const { return static_cast<int>(sonos_.size()); }

private:
    const SimState* state_;
    std::vector<int> rooms_;  // ascending ids
    std::vector<int> sonos_;
};

/// Waiting patients with the given status, longest wait first (ties: lower id).
std::vector<int> waiting_by_priority(const SimState& state, PatientStatus status);

// ---------------------------------------------------------------------------
// On-the-fly policies

std::vector<Allocation> policy1(const SimState& state);
std::vector<Allocation> policy2(const SimState& state);
std::vector<Allocation> policy3(const SimState& state);
std::vector<Allocation> policy4(const SimState& state);

/// Fetal-dedicated room (lowest-id fetal-capable room) and sonographer
/// (lowest-id on-duty fetal-capable sonographer) used by policies 3 and 4.
struct FetalDedication {
    int room = -1;
    int sonographer = -1;
    bool active = false;
};
FetalDedication fetal_dedication(const SimState& state);

// ---------------------------------------------------------------------------
// Reservations

enum class ReservationStatus { Pending, Used, Forfeited };

struct Reservation {
    int pair_id = -1;
    int patient_id = -1;
    Minute scheduled_time = 0;
    ReservationStatus status = ReservationStatus::Pending;
};

struct EchoPair {
    int room = -1;
    int sonographer = -1;
    bool fetal_capable = false;
    bool reserved = false;
};

inline constexpr Minute kReservationGapMin = 40;

struct ReservationBook {
    std::vector<EchoPair> pairs;
    std::vector<Reservation> reservations;  // ordered by (scheduled_time, patient_id)
    int alpha = 0;
    int beta = 0;

    /// Pending reservation held by the patient, if any.
    const Reservation* pending_for(int patient_id) const;
    int reserved_pair_count() const;
};

/// round-half-up(beta% of count).
int reserved_nonfetal_pairs(int nonfetal_pair_count, int beta_percent);

/// Pairs on-duty sonographers with rooms and books patients onto reserved
/// pairs. alpha must be 0 or 100; beta one of 0/25/50/75/100.
ReservationBook build_reservation_book(const SimConfig& config, const DayPlan& plan, int alpha, int beta);

// ---------------------------------------------------------------------------

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::vector<Allocation> decide(const SimState& state) = 0;
};

/// Policies 5 and 6. Owns its reservation book, which it updates (forfeits,
/// uses) as the day unfolds, so one instance serves exactly one day.
class ReservationPolicy final : public Policy {
public:
    ReservationPolicy(ReservationBook book, bool serve_early);
    std::vector<Allocation> decide(const SimState& state) override;
    const ReservationBook& book() const { return book_; }

private:
    ReservationBook book_;
    bool serve_early_;
};

enum class RulePolicy { P1 = 1, P2, P3, P4, P5, P6 };

std::unique_ptr<Policy> make_rule_policy(RulePolicy kind, const SimConfig& config, const DayPlan& plan, int alpha = 0,
                                         int beta = 0);

}  // namespace echolab
