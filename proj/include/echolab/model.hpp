#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace echolab {

/// Minutes since midnight. Every clock value and duration in the simulator
/// uses this unit.
using Minute = int;

/// Thrown when a configuration document is malformed or violates an invariant.
/// `field()` names the offending key (empty for parse errors).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class Capability { Both, NonFetalOnly };

struct ScheduleEntry {
    Minute time = 0;
    bool fetal = false;
    bool operator==(const ScheduleEntry&) const = default;
};

struct SimConfig {
    Minute open_time = 480;
    Minute entry_cutoff = 1020;
    Minute close_time = 1140;

    int rooms_both = 1;
    int rooms_nonfetal = 6;
    int sonos_both = 4;
    int sonos_nonfetal = 2;

    double no_show_prob = 0.10;
    double p_late = 0.80;
    double mean_late_min = 10.0;
    double mean_early_min = 5.0;
    double max_early_min = 60.0;
    Minute ontime_window_min = 10;

    double dur_shape = 12.0;
    double dur_mean_min = 45.0;
    double dur_lo_min = 20.0;
    double dur_hi_min = 150.0;

    double leave_rate = 0.10;
    double p_both_breaks = 0.20;
    double p_single_break_of_two = 0.30;
    double p_single_break_of_one = 0.30;
    Minute break_len_min = 15;

    double penalty_late_per_min = 2.0;
    double penalty_ontime_per_min = 4.0;
    double penalty_idle_pair_per_min = 1.0;
    double penalty_after_cutoff_per_min = 10.0;
    bool idle_penalty_enabled = true;

    std::vector<ScheduleEntry> schedule;

    int total_rooms() const { return rooms_both + rooms_nonfetal; }
    int total_sonos() const { return sonos_both + sonos_nonfetal; }
    int fetal_scheduled() const;
    int nonfetal_scheduled() const;

    bool operator==(const SimConfig&) const = default;
};

/// The 38-visit day: 9 fetal visits hourly from 8:15 and 29 non-fetal visits.
std::vector<ScheduleEntry> default_schedule();

/// Throws ConfigError naming the first violated field.
void validate(const SimConfig& config);

enum class Scenario { Default, Abundant, Scarce };

Scenario parse_scenario(std::string_view name);
std::string_view scenario_name(Scenario s);
SimConfig scenario_preset(Scenario s);
SimConfig scenario_preset(std::string_view name);

/// Parses a config document. Missing keys keep the defaults of `base`.
SimConfig config_from_json(const nlohmann::json& doc, const SimConfig& base = scenario_preset(Scenario::Default));
nlohmann::json config_to_json(const SimConfig& config);

SimConfig load_config(const std::filesystem::path& path);
SimConfig parse_config(std::string_view text);
std::string serialize_config(const SimConfig& config);

/// FNV-1a of the canonical serialization; stable across runs.
std::uint64_t config_digest(const SimConfig& config);

std::string format_hhmm(Minute m);
Minute parse_hhmm(std::string_view text);

// ---------------------------------------------------------------------------
// Per-day entities

enum class PatientStatus {
    NotArrived,
    WaitingEarly,
    WaitingOnTime,
    WaitingLate,
    InExam,
    Done,
    NoShow,
    TurnedAway,
};

std::string_view to_string(PatientStatus s);

inline bool is_waiting(PatientStatus s) {
    return s == PatientStatus::WaitingEarly || s == PatientStatus::WaitingOnTime ||
           s == PatientStatus::WaitingLate;
}

struct Patient {
    int id = 0;
    bool fetal = false;
    Minute scheduled_time = 0;
    bool no_show = false;
    Minute arrival_offset = 0;
    // Clamped to open_time. For turned-away patients this is the (post-cutoff)
    // moment they are refused entry.
    std::optional<Minute> realized_arrival;
    bool turned_away = false;
    Minute duration = 0;
    PatientStatus status = PatientStatus::NotArrived;
    std::optional<Minute> service_start;
    std::optional<Minute> service_end;
    int room = -1;
    int sonographer = -1;

    Minute raw_arrival() const { return scheduled_time + arrival_offset; }
};

enum class ResourceActivity { Idle, Testing, OnBreak };

struct Sonographer {
    int id = 0;
    Capability capability = Capability::Both;
    bool on_duty = true;
    int breaks_remaining = 2;
    ResourceActivity activity = ResourceActivity::Idle;
    Minute until = 0;
    // Break decisions consumed so far; indexes the per-sonographer break stream.
    std::uint64_t break_draws = 0;
    Minute break_minutes_taken = 0;

    bool available() const { return on_duty && activity == ResourceActivity::Idle; }
};

struct Room {
    int id = 0;
    Capability capability = Capability::Both;
    bool occupied = false;
    Minute until = 0;
    int patient = -1;
};

/// Per-category waiting counts, in observation order:
/// fetal early/on-time/late, then non-fetal early/on-time/late.
enum WaitCategory { FetalEarly = 0, FetalOnTime, FetalLate, NonFetalEarly, NonFetalOnTime, NonFetalLate };
inline constexpr int kWaitCategories = 6;

struct PenaltyTerms {
    double ontime = 0;
    double late = 0;
    double idle = 0;
    double after_cutoff = 0;

    double total() const { return ontime + late + idle + after_cutoff; }
    bool operator==(const PenaltyTerms&) const = default;
};

struct DailyMetrics {
    double total_penalty = 0;
    double avg_wait_min = 0;
    double sonographer_quota = 0;
    int served = 0;
    int no_shows = 0;
    int turned_away = 0;
    int waiting_at_close = 0;
    int in_exam_at_close = 0;
    int on_duty = 0;

    // One entry per decision minute [open_time, close_time).
    std::vector<PenaltyTerms> penalty_series;
    std::array<std::vector<int>, kWaitCategories> waiting_series;

    double penalty_ontime() const;
    double penalty_late() const;
    double penalty_idle() const;
    double penalty_after_cutoff() const;

    bool operator==(const DailyMetrics&) const = default;
};

}  // namespace echolab
