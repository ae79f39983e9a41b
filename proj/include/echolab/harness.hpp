#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "echolab/engine.hpp"
#include "echolab/env.hpp"
#include "echolab/policies.hpp"

namespace echolab {

class GreedyAgent;

/// "p1".."p4", "p5(alpha,beta)", "p6(alpha,beta)" (bare p5/p6 mean (0,0)),
/// or "rl(path/to/checkpoint)". alpha is 0 or 100, beta one of 0/25/50/75/100.
struct PolicySpec {
    enum class Kind { Rule, RL };
    Kind kind = Kind::Rule;
    RulePolicy rule = RulePolicy::P1;
    int alpha = 0;
    int beta = 0;
    std::filesystem::path checkpoint;

    static PolicySpec parse(std::string_view text);
    static PolicySpec rule_policy(RulePolicy rule, int alpha = 0, int beta = 0);
    static PolicySpec rl(std::filesystem::path checkpoint);
    std::string label() const;
};

/// Builds per-day decision functions for a spec. RL checkpoints are loaded
/// once, at construction; a missing or corrupt file throws here.
class PolicyFactory {
public:
    PolicyFactory(PolicySpec spec, const SimConfig& config);
    ~PolicyFactory();
    PolicyFactory(PolicyFactory&&) noexcept;

    /// Fresh decision function for one day (policies 5 and 6 keep per-day state).
    DecisionFn for_day(const DayPlan& plan) const;
    const PolicySpec& spec() const { return spec_; }

private:
    PolicySpec spec_;
    SimConfig config_;
    std::shared_ptr<const GreedyAgent> agent_;
};

/// Scalar view of one simulated day.
struct DayRecord {
    int day = 0;
    std::uint64_t plan_digest = 0;
    double total_penalty = 0;
    double penalty_ontime = 0;
    double penalty_late = 0;
    double penalty_idle = 0;
    double penalty_after_cutoff = 0;
    double avg_wait_min = 0;
    double sonographer_quota = 0;
    int served = 0;
    int no_shows = 0;
    int turned_away = 0;
    int waiting_at_close = 0;
    int in_exam_at_close = 0;
    int on_duty = 0;

    static DayRecord from(int day, std::uint64_t plan_digest, const DailyMetrics& m);
    bool operator==(const DayRecord&) const = default;
};

/// Sample mean, sample standard deviation and type-7 quantiles.
struct Aggregate {
    double mean = 0;
    double std = 0;
    double min = 0;
    double q025 = 0;
    double q25 = 0;
    double q50 = 0;
    double q75 = 0;
    double q975 = 0;
    double max = 0;

    static Aggregate of(std::vector<double> values);
    bool operator==(const Aggregate&) const = default;
};

double quantile(std::vector<double> values, double p);

struct RunSummary {
    std::string policy;
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;
    std::string generator;
    std::vector<DayRecord> days;
    Aggregate penalty;
    Aggregate avg_wait;
    Aggregate quota;
    std::vector<double> ma50;

    /// Recomputes aggregates and the moving average from `days`.
    void recompute();
    bool operator==(const RunSummary&) const = default;
};

/// Simulates days 0..days-1 of the seed's day family under one policy.
RunSummary run_eval(const PolicySpec& policy, const SimConfig& config, int days, std::uint64_t seed);
RunSummary run_eval(const PolicyFactory& policy, const std::vector<DayPlan>& plans, const SimConfig& config,
                    std::uint64_t seed);
std::vector<DayPlan> build_plans(const SimConfig& config, int days, std::uint64_t seed);

struct ReservationCase {
    int number = 0;
    int alpha = 0;
    int beta = 0;
};
/// Cases 1-5: alpha 0, beta 0..100; cases 6-10: alpha 100, beta 0..100.
const std::array<ReservationCase, 10>& reservation_cases();

struct SweepResult {
    std::vector<RunSummary> policy5;
    std::vector<RunSummary> policy6;
};

/// All ten reservation cases for policies 5 and 6 on one shared set of plans.
SweepResult sweep_reservations(const SimConfig& config, int days, std::uint64_t seed);

struct DivergenceEvent {
    Minute clock = 0;
    ActionVector reference_counts{};
    ActionVector challenger_counts{};
    int reference_action = -1;  // -1 when a component exceeds 2
    int challenger_action = -1;
    double reference_penalty = 0;
    double challenger_penalty = 0;
    bool operator==(const DivergenceEvent&) const = default;
};

struct DivergenceReport {
    std::string reference;
    std::string challenger;
    std::uint64_t seed = 0;
    int day = 0;
    std::vector<DivergenceEvent> events;
    /// Per decision minute, penalty of each policy's allocation on the
    /// reference state.
    std::vector<double> reference_series;
    std::vector<double> challenger_series;
    double reference_total = 0;
    double challenger_total = 0;
    double reference_daily_penalty = 0;  // from the reference's own day metrics
};

/// Walks the reference policy's trajectory and asks the challenger what it
/// would do on each recorded state. The challenger never steers the day.
/// Minutes diverge when the per-component counts differ.
DivergenceReport diff_policies(const PolicyFactory& reference, const PolicyFactory& challenger,
                               const SimConfig& config, std::uint64_t seed, int day);

// ---------------------------------------------------------------------------
// Export

enum class ExportFormat { Rows, Structured };

ExportFormat parse_export_format(std::string_view name);
/// Rows: CSV of day records at `path` plus aggregates and run metadata in
/// `<path>.summary.csv`. Structured: one JSON document.
void export_summary(const RunSummary& summary, const std::filesystem::path& path, ExportFormat format);
RunSummary import_summary(const std::filesystem::path& path, ExportFormat format);
void export_report(const DivergenceReport& report, const std::filesystem::path& path, ExportFormat format);

void write_rows(std::ostream& out, const RunSummary& summary);
void write_summary_sidecar(std::ostream& out, const RunSummary& summary);
void write_events(std::ostream& out, const DivergenceReport& report);
std::string summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(std::string_view text);
std::string report_to_json(const DivergenceReport& report);

/// One JSON object per decision minute.
void write_trace_jsonl(std::ostream& out, const std::vector<TraceRecord>& trace);

/// Shortest round-trip text for a double.
std::string format_double(double v);

}  // namespace echolab
