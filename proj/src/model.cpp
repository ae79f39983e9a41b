#include "echolab/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <type_traits>

namespace echolab {

using nlohmann::json;

int SimConfig::fetal_scheduled() const {
    return static_cast<int>(std::count_if(schedule.begin(), schedule.end(), [](const auto& e) { return e.fetal; }));
}

int SimConfig::nonfetal_scheduled() const {
    return static_cast<int>(schedule.size()) - fetal_scheduled();
}

std::vector<ScheduleEntry> default_schedule() {
    std::vector<ScheduleEntry> out;
    for (Minute t = 8 * 60 + 15; t <= 16 * 60 + 15; t += 60) out.push_back({t, true});
    // Half-hour base slots 8:00..16:30.
    for (Minute t = 8 * 60; t <= 16 * 60 + 30; t += 30) out.push_back({t, false});
    // Doubled slots.
    for (Minute t : {9 * 60, 10 * 60 + 30, 13 * 60, 14 * 60 + 30, 16 * 60}) out.push_back({t, false});
    // Quarter-past / quarter-to slots.
    for (Minute t : {8 * 60 + 45, 10 * 60 + 15, 11 * 60 + 45, 13 * 60 + 15, 14 * 60 + 45, 15 * 60 + 45})
        out.push_back({t, false});
    std::stable_sort(out.begin(), out.end(), [](const ScheduleEntry& a, const ScheduleEntry& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.fetal && !b.fetal;
    });
    return out;
}

namespace {

void require(bool ok, const char* field, const std::string& msg) {
    if (!ok) throw ConfigError(field, std::string(field) + ": " + msg);
}

void require_prob(double p, const char* field) {
    require(p >= 0.0 && p <= 1.0, field, "probability must lie in [0, 1], got " + std::to_string(p));
}

}  // namespace

void validate(const SimConfig& c) {
    require(c.open_time >= 0 && c.open_time < c.entry_cutoff, "open_time", "must precede entry_cutoff");
    require(c.entry_cutoff < c.close_time, "entry_cutoff", "must precede close_time");
    require(c.close_time <= 24 * 60, "close_time", "must fall within the day");

    require(c.rooms_both >= 1, "rooms_both", "at least one fetal-capable room is required");
    require(c.rooms_nonfetal >= 0, "rooms_nonfetal", "must be non-negative");
    require(c.sonos_both >= 1, "sonos_both", "at least one fetal-capable sonographer is required");
    require(c.sonos_nonfetal >= 1, "sonos_nonfetal", "at least one non-fetal sonographer is required");

    require_prob(c.no_show_prob, "no_show_prob");
    require_prob(c.p_late, "p_late");
    require_prob(c.leave_rate, "leave_rate");
    require_prob(c.p_both_breaks, "p_both_breaks");
    require_prob(c.p_single_break_of_two, "p_single_break_of_two");
    require_prob(c.p_single_break_of_one, "p_single_break_of_one");
    require(c.p_both_breaks + c.p_single_break_of_two <= 1.0, "p_single_break_of_two",
            "p_both_breaks + p_single_break_of_two must not exceed 1");

    require(c.mean_late_min > 0, "mean_late_min", "must be positive");
    require(c.mean_early_min > 0, "mean_early_min", "must be positive");
    require(c.max_early_min > 0, "max_early_min", "must be positive");
    require(c.ontime_window_min >= 0, "ontime_window_min", "must be non-negative");

    require(c.dur_shape > 0, "dur_shape", "must be positive");
    require(c.dur_lo_min > 0 && c.dur_lo_min < c.dur_mean_min, "dur_lo_min", "must satisfy 0 < dur_lo_min < dur_mean_min");
    require(c.dur_mean_min < c.dur_hi_min, "dur_hi_min", "must exceed dur_mean_min");
    require(c.break_len_min > 0, "break_len_min", "must be positive");

    require(c.penalty_late_per_min >= 0, "penalty_late_per_min", "must be non-negative");
    require(c.penalty_ontime_per_min >= 0, "penalty_ontime_per_min", "must be non-negative");
    require(c.penalty_idle_pair_per_min >= 0, "penalty_idle_pair_per_min", "must be non-negative");
    require(c.penalty_after_cutoff_per_min >= 0, "penalty_after_cutoff_per_min", "must be non-negative");

    for (const auto& e : c.schedule) {
        require(e.time >= c.open_time && e.time < c.entry_cutoff, "schedule",
                "entry at " + format_hhmm(e.time) + " lies outside [open_time, entry_cutoff)");
    }
}

Scenario parse_scenario(std::string_view name) {
    if (name == "default") return Scenario::Default;
    if (name == "abundant") return Scenario::Abundant;
    if (name == "scarce") return Scenario::Scarce;
    throw ConfigError("scenario", "unknown scenario '" + std::string(name) + "' (expected default, abundant or scarce)");
}

std::string_view scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Default: return "default";
        case Scenario::Abundant: return "abundant";
        case Scenario::Scarce: return "scarce";
    }
    return "default";
}

SimConfig scenario_preset(Scenario s) {
    SimConfig c;
    c.schedule = default_schedule();
    switch (s) {
        case Scenario::Default:
            break;
        case Scenario::Abundant:
            c.rooms_both = c.rooms_nonfetal = c.sonos_both = c.sonos_nonfetal = 20;
            c.idle_penalty_enabled = false;
            break;
        case Scenario::Scarce:
            c.rooms_both = 1;
            c.rooms_nonfetal = 3;
            c.sonos_both = 2;
            c.sonos_nonfetal = 1;
            break;
    }
    return c;
}

SimConfig scenario_preset(std::string_view name) { return scenario_preset(parse_scenario(name)); }

std::string format_hhmm(Minute m) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d", m / 60, m % 60);
    return buf;
}

Minute parse_hhmm(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw ConfigError("", "expected HH:MM, got '" + std::string(text) + "'");
    int h = -1, m = -1;
    auto parse_int = [&](std::string_view part, int& out) {
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && ptr == part.data() + part.size() && !part.empty();
    };
    if (!parse_int(text.substr(0, colon), h) || !parse_int(text.substr(colon + 1), m) || h < 0 || h > 24 || m < 0 ||
        m > 59 || text.size() - colon - 1 != 2)
        throw ConfigError("", "expected HH:MM, got '" + std::string(text) + "'");
    return h * 60 + m;
}

namespace {

template <typename T>
void read_field(const json& doc, const char* key, T& out) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) throw ConfigError(key, std::string(key) + ": expected a boolean");
            out = it->template get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) throw ConfigError(key, std::string(key) + ": expected an integer");
            out = it->template get<T>();
        } else {
            if (!it->is_number()) throw ConfigError(key, std::string(key) + ": expected a number");
            out = it->template get<T>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(key, std::string(key) + ": " + e.what());
    }
}

void read_time(const json& doc, const char* key, Minute& out) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    if (!it->is_string()) throw ConfigError(key, std::string(key) + ": expected an \"HH:MM\" string");
    try {
        out = parse_hhmm(it->get<std::string>());
    } catch (const ConfigError& e) {
        throw ConfigError(key, std::string(key) + ": " + e.what());
    }
}

const char* const kKnownKeys[] = {
    "open_time", "entry_cutoff", "close_time", "rooms_both", "rooms_nonfetal", "sonos_both", "sonos_nonfetal",
    "no_show_prob", "p_late", "mean_late_min", "mean_early_min", "max_early_min", "ontime_window_min",
    "dur_shape", "dur_mean_min", "dur_lo_min", "dur_hi_min", "leave_rate", "p_both_breaks",
    "p_single_break_of_two", "p_single_break_of_one", "break_len_min", "penalty_late_per_min",
    "penalty_ontime_per_min", "penalty_idle_pair_per_min", "penalty_after_cutoff_per_min",
    "idle_penalty_enabled", "schedule", "scenario",
};

}  // namespace

SimConfig config_from_json(const json& doc, const SimConfig& base) {
    if (doc.is_null()) {
        validate(base);
        return base;
    }
    if (!doc.is_object()) throw ConfigError("", "config document must be a key/value object");
    for (const auto& [key, _] : doc.items()) {
        if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys))
            throw ConfigError(key, "unknown config key '" + key + "'");
    }

    SimConfig c = base;
    if (auto it = doc.find("scenario"); it != doc.end()) {
        if (!it->is_string()) throw ConfigError("scenario", "scenario: expected a string");
        c = scenario_preset(it->get<std::string>());
    }
    read_time(doc, "open_time", c.open_time);
    read_time(doc, "entry_cutoff", c.entry_cutoff);
    read_time(doc, "close_time", c.close_time);
    read_field(doc, "rooms_both", c.rooms_both);
    read_field(doc, "rooms_nonfetal", c.rooms_nonfetal);
    read_field(doc, "sonos_both", c.sonos_both);
    read_field(doc, "sonos_nonfetal", c.sonos_nonfetal);
    read_field(doc, "no_show_prob", c.no_show_prob);
    read_field(doc, "p_late", c.p_late);
    read_field(doc, "mean_late_min", c.mean_late_min);
    read_field(doc, "mean_early_min", c.mean_early_min);
    read_field(doc, "max_early_min", c.max_early_min);
    read_field(doc, "ontime_window_min", c.ontime_window_min);
    read_field(doc, "dur_shape", c.dur_shape);
    read_field(doc, "dur_mean_min", c.dur_mean_min);
    read_field(doc, "dur_lo_min", c.dur_lo_min);
    read_field(doc, "dur_hi_min", c.dur_hi_min);
    read_field(doc, "leave_rate", c.leave_rate);
    read_field(doc, "p_both_breaks", c.p_both_breaks);
    read_field(doc, "p_single_break_of_two", c.p_single_break_of_two);
    read_field(doc, "p_single_break_of_one", c.p_single_break_of_one);
    read_field(doc, "break_len_min", c.break_len_min);
    read_field(doc, "penalty_late_per_min", c.penalty_late_per_min);
    read_field(doc, "penalty_ontime_per_min", c.penalty_ontime_per_min);
    read_field(doc, "penalty_idle_pair_per_min", c.penalty_idle_pair_per_min);
    read_field(doc, "penalty_after_cutoff_per_min", c.penalty_after_cutoff_per_min);
    read_field(doc, "idle_penalty_enabled", c.idle_penalty_enabled);

    if (auto it = doc.find("schedule"); it != doc.end()) {
        if (!it->is_array()) throw ConfigError("schedule", "schedule: expected a list of {time, fetal} entries");
        c.schedule.clear();
        for (const auto& entry : *it) {
            if (!entry.is_object() || !entry.contains("time"))
                throw ConfigError("schedule", "schedule: each entry needs a \"time\"");
            ScheduleEntry e;
            read_time(entry, "time", e.time);
            read_field(entry, "fetal", e.fetal);
            c.schedule.push_back(e);
        }
    }
    validate(c);
    return c;
}

json config_to_json(const SimConfig& c) {
    json doc;
    doc["open_time"] = format_hhmm(c.open_time);
    doc["entry_cutoff"] = format_hhmm(c.entry_cutoff);
    doc["close_time"] = format_hhmm(c.close_time);
    doc["rooms_both"] = c.rooms_both;
    doc["rooms_nonfetal"] = c.rooms_nonfetal;
    doc["sonos_both"] = c.sonos_both;
    doc["sonos_nonfetal"] = c.sonos_nonfetal;
    doc["no_show_prob"] = c.no_show_prob;
    doc["p_late"] = c.p_late;
    doc["mean_late_min"] = c.mean_late_min;
    doc["mean_early_min"] = c.mean_early_min;
    doc["max_early_min"] = c.max_early_min;
    doc["ontime_window_min"] = c.ontime_window_min;
    doc["dur_shape"] = c.dur_shape;
    doc["dur_mean_min"] = c.dur_mean_min;
    doc["dur_lo_min"] = c.dur_lo_min;
    doc["dur_hi_min"] = c.dur_hi_min;
    doc["leave_rate"] = c.leave_rate;
    doc["p_both_breaks"] = c.p_both_breaks;
    doc["p_single_break_of_two"] = c.p_single_break_of_two;
    doc["p_single_break_of_one"] = c.p_single_break_of_one;
    doc["break_len_min"] = c.break_len_min;
    doc["penalty_late_per_min"] = c.penalty_late_per_min;
    doc["penalty_ontime_per_min"] = c.penalty_ontime_per_min;
    doc["penalty_idle_pair_per_min"] = c.penalty_idle_pair_per_min;
    doc["penalty_after_cutoff_per_min"] = c.penalty_after_cutoff_per_min;
    doc["idle_penalty_enabled"] = c.idle_penalty_enabled;
    json sched = json::array();
    for (const auto& e : c.schedule) sched.push_back({{"time", format_hhmm(e.time)}, {"fetal", e.fetal}});
    doc["schedule"] = std::move(sched);
    return doc;
}

SimConfig parse_config(std::string_view text) {
    // An empty or whitespace-only document means "all defaults".
    if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); }))
        return config_from_json(json{});
    json doc;
    try {
        doc = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("config parse error: ") + e.what());
    }
    return config_from_json(doc);
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const SimConfig& config) { return config_to_json(config).dump(2) + "\n"; }

std::uint64_t config_digest(const SimConfig& config) {
    const std::string canon = config_to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string_view to_string(PatientStatus s) {
    switch (s) {
        case PatientStatus::NotArrived: return "NotArrived";
        case PatientStatus::WaitingEarly: return "WaitingEarly";
        case PatientStatus::WaitingOnTime: return "WaitingOnTime";
        case PatientStatus::WaitingLate: return "WaitingLate";
        case PatientStatus::InExam: return "InExam";
        case PatientStatus::Done: return "Done";
        case PatientStatus::NoShow: return "NoShow";
        case PatientStatus::TurnedAway: return "TurnedAway";
    }
    return "?";
}

namespace {
template <typename F>
double sum_terms(const std::vector<PenaltyTerms>& series, F f) {
    return std::accumulate(series.begin(), series.end(), 0.0, [&](double acc, const PenaltyTerms& t) { return acc + f(t); });
}
}  // namespace

double DailyMetrics::penalty_ontime() const { return sum_terms(penalty_series, [](auto& t) { return t.ontime; }); }
double DailyMetrics::penalty_late() const { return sum_terms(penalty_series, [](auto& t) { return t.late; }); }
double DailyMetrics::penalty_idle() const { return sum_terms(penalty_series, [](auto& t) { return t.idle; }); }
double DailyMetrics::penalty_after_cutoff() const {
    return sum_terms(penalty_series, [](auto& t) { return t.after_cutoff; });
}

}  // namespace echolab
