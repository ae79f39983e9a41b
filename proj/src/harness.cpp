#include "echolab/harness.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "echolab/learner/trainer.hpp"

namespace echolab {

namespace {

bool on_grid(int v) { return v >= 0 && v <= 100 && v % 25 == 0; }

int parse_int(std::string_view s, std::string_view what) {
    int v = 0;
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("bad " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

double parse_double(std::string_view s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::runtime_error("bad number '" + std::string(s) + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::runtime_error("bad integer '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Policy specs

PolicySpec PolicySpec::rule_policy(RulePolicy rule, int alpha, int beta) {
    PolicySpec s;
    s.rule = rule;
    s.alpha = alpha;
    s.beta = beta;
    return s;
}

PolicySpec PolicySpec::rl(std::filesystem::path checkpoint) {
    PolicySpec s;
    s.kind = Kind::RL;
    s.checkpoint = std::move(checkpoint);
    return s;
}

PolicySpec PolicySpec::parse(std::string_view text) {
    std::string t(text);
    for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::string_view v = t;
    if (v.starts_with("policy")) v.remove_prefix(6);
    else if (v.starts_with("p")) v.remove_prefix(1);

    if (std::string_view(t).starts_with("rl")) {
        std::string_view rest = std::string_view(text).substr(2);
        if (rest.size() < 3 || rest.front() != '(' || rest.back() != ')')
            throw std::invalid_argument("policy spec: expected rl(<checkpoint>), got '" + std::string(text) + "'");
        return rl(std::string(rest.substr(1, rest.size() - 2)));
    }
    if (v.empty() || v.front() < '1' || v.front() > '6')
        throw std::invalid_argument("policy spec: unknown policy '" + std::string(text) + "'");
    const int n = v.front() - '0';
    v.remove_prefix(1);
    PolicySpec s = rule_policy(static_cast<RulePolicy>(n));
    if (v.empty()) return s;
    if (n < 5) throw std::invalid_argument("policy spec: only p5 and p6 take parameters: '" + std::string(text) + "'");
    if (v.front() != '(' || v.back() != ')')
        throw std::invalid_argument("policy spec: expected p" + std::to_string(n) + "(alpha,beta)");
    const auto parts = split(v.substr(1, v.size() - 2), ',');
    if (parts.size() != 2) throw std::invalid_argument("policy spec: expected two parameters in '" + std::string(text) + "'");
    s.alpha = parse_int(parts[0], "alpha");
    s.beta = parse_int(parts[1], "beta");
    if (s.alpha != 0 && s.alpha != 100) throw std::invalid_argument("policy spec: alpha must be 0 or 100");
    if (!on_grid(s.beta)) throw std::invalid_argument("policy spec: beta must be one of 0, 25, 50, 75, 100");
    return s;
}

std::string PolicySpec::label() const {
    if (kind == Kind::RL) return "rl(" + checkpoint.string() + ")";
    const int n = static_cast<int>(rule);
    std::string out = "p" + std::to_string(n);
    if (n >= 5) out += "(" + std::to_string(alpha) + "," + std::to_string(beta) + ")";
    return out;
}

PolicyFactory::PolicyFactory(PolicySpec spec, const SimConfig& config) : spec_(std::move(spec)), config_(config) {
    if (spec_.kind == PolicySpec::Kind::RL) {
        if (!std::filesystem::exists(spec_.checkpoint))
            throw std::runtime_error("checkpoint not found: " + spec_.checkpoint.string());
        Checkpoint c = load_checkpoint(spec_.checkpoint);
        agent_ = std::make_shared<const GreedyAgent>(std::move(c.online), config_);
    }
}

PolicyFactory::~PolicyFactory() = default;
PolicyFactory::PolicyFactory(PolicyFactory&&) noexcept = default;

DecisionFn PolicyFactory::for_day(const DayPlan& plan) const {
    if (agent_) {
        return [agent = agent_](const SimState& s) { return agent->decide(s); };
    }
    std::shared_ptr<Policy> p = make_rule_policy(spec_.rule, config_, plan, spec_.alpha, spec_.beta);
    return [p](const SimState& s) { return p->decide(s); };
}

// ---------------------------------------------------------------------------
// Summaries

DayRecord DayRecord::from(int day, std::uint64_t plan_digest, const DailyMetrics& m) {
    DayRecord r;
    r.day = day;
    r.plan_digest = plan_digest;
    r.total_penalty = m.total_penalty;
    r.penalty_ontime = m.penalty_ontime();
    r.penalty_late = m.penalty_late();
    r.penalty_idle = m.penalty_idle();
    r.penalty_after_cutoff = m.penalty_after_cutoff();
    r.avg_wait_min = m.avg_wait_min;
    r.sonographer_quota = m.sonographer_quota;
    r.served = m.served;
    r.no_shows = m.no_shows;
    r.turned_away = m.turned_away;
    r.waiting_at_close = m.waiting_at_close;
    r.in_exam_at_close = m.in_exam_at_close;
    r.on_duty = m.on_duty;
    return r;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Aggregate Aggregate::of(std::vector<double> values) {
    Aggregate a;
    if (values.empty()) return a;
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    a.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = values.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    a.min = values.front();
    a.max = values.back();
    a.q025 = quantile(values, 0.025);
    a.q25 = quantile(values, 0.25);
    a.q50 = quantile(values, 0.5);
    a.q75 = quantile(values, 0.75);
    a.q975 = quantile(values, 0.975);
    return a;
}

void RunSummary::recompute() {
    std::vector<double> pen, wait, quo;
    for (const auto& d : days) {
        pen.push_back(d.total_penalty);
        wait.push_back(d.avg_wait_min);
        quo.push_back(d.sonographer_quota);
    }
    penalty = Aggregate::of(pen);
    avg_wait = Aggregate::of(wait);
    quota = Aggregate::of(quo);
    ma50 = moving_average(pen, 50);
}

std::vector<DayPlan> build_plans(const SimConfig& config, int days, std::uint64_t seed) {
    std::vector<DayPlan> plans;
    plans.reserve(static_cast<std::size_t>(std::max(days, 0)));
    for (int d = 0; d < days; ++d) plans.push_back(build_day(config, seed, d));
    return plans;
}

RunSummary run_eval(const PolicyFactory& policy, const std::vector<DayPlan>& plans, const SimConfig& config,
                    std::uint64_t seed) {
    RunSummary s;
    s.policy = policy.spec().label();
    s.seed = seed;
    s.config_digest = config_digest(config);
    s.generator = std::string(kGeneratorId);
    for (const auto& plan : plans) {
        const DayResult r = run_day(config, plan, policy.for_day(plan), false);
        s.days.push_back(DayRecord::from(plan.day_index, plan.digest(), r.metrics));
    }
    s.recompute();
    return s;
}

RunSummary run_eval(const PolicySpec& policy, const SimConfig& config, int days, std::uint64_t seed) {
    validate(config);
    const PolicyFactory factory(policy, config);
    return run_eval(factory, build_plans(config, days, seed), config, seed);
}

const std::array<ReservationCase, 10>& reservation_cases() {
    static const std::array<ReservationCase, 10> cases = {{{1, 0, 0},
                                                           {2, 0, 25},
                                                           {3, 0, 50},
                                                           {4, 0, 75},
                                                           {5, 0, 100},
                                                           {6, 100, 0},
                                                           {7, 100, 25},
                                                           {8, 100, 50},
                                                           {9, 100, 75},
                                                           {10, 100, 100}}};
    return cases;
}

SweepResult sweep_reservations(const SimConfig& config, int days, std::uint64_t seed) {
    validate(config);
    const auto plans = build_plans(config, days, seed);
    SweepResult out;
    for (const auto& c : reservation_cases()) {
        out.policy5.push_back(
            run_eval(PolicyFactory(PolicySpec::rule_policy(RulePolicy::P5, c.alpha, c.beta), config), plans, config, seed));
        out.policy6.push_back(
            run_eval(PolicyFactory(PolicySpec::rule_policy(RulePolicy::P6, c.alpha, c.beta), config), plans, config, seed));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Divergence

DivergenceReport diff_policies(const PolicyFactory& reference, const PolicyFactory& challenger,
                               const SimConfig& config, std::uint64_t seed, int day) {
    validate(config);
    const DayPlan plan = build_day(config, seed, day);
    const DecisionFn ref = reference.for_day(plan);
    const DecisionFn chal = challenger.for_day(plan);

    DivergenceReport rep;
    rep.reference = reference.spec().label();
    rep.challenger = challenger.spec().label();
    rep.seed = seed;
    rep.day = day;

    SimState state = start_day(config, plan);
    DayAccumulator acc;
    while (state.clock < config.close_time) {
        std::vector<Allocation> a_ref = ref(state);
        const std::vector<Allocation> a_chal = chal(state);
        if (auto err = allocation_error(state, a_chal))
            throw std::runtime_error("challenger proposed an infeasible allocation: " + *err);
        const double p_ref = penalty_with(state, a_ref).total();
        const double p_chal = penalty_with(state, a_chal).total();
        rep.reference_series.push_back(p_ref);
        rep.challenger_series.push_back(p_chal);
        rep.reference_total += p_ref;
        rep.challenger_total += p_chal;

        const ActionVector c_ref = component_counts(state, a_ref);
        const ActionVector c_chal = component_counts(state, a_chal);
        if (c_ref != c_chal) {
            DivergenceEvent e;
            e.clock = state.clock;
            e.reference_counts = c_ref;
            e.challenger_counts = c_chal;
            e.reference_action = action_index_of(c_ref).value_or(-1);
            e.challenger_action = action_index_of(c_chal).value_or(-1);
            e.reference_penalty = p_ref;
            e.challenger_penalty = p_chal;
            rep.events.push_back(e);
        }
        acc.record(advance_minute(state, a_ref));
    }
    rep.reference_daily_penalty = acc.finish(state).total_penalty;
    return rep;
}

// ---------------------------------------------------------------------------
// Export

ExportFormat parse_export_format(std::string_view name) {
    if (name == "rows" || name == "csv") return ExportFormat::Rows;
    if (name == "structured" || name == "json") return ExportFormat::Structured;
    throw std::invalid_argument("unknown export format '" + std::string(name) + "' (rows or structured)");
}

namespace {

constexpr const char* kRowsHeader =
    "day,plan_digest,total_penalty,penalty_ontime,penalty_late,penalty_idle,penalty_after_cutoff,avg_wait_min,"
    "sonographer_quota,served,no_shows,turned_away,waiting_at_close,in_exam_at_close,on_duty,ma50";

void write_aggregate(std::ostream& out, const std::string& name, const Aggregate& a) {
    out << name << "_mean," << format_double(a.mean) << '\n'
        << name << "_std," << format_double(a.std) << '\n'
        << name << "_min," << format_double(a.min) << '\n'
        << name << "_q025," << format_double(a.q025) << '\n'
        << name << "_q25," << format_double(a.q25) << '\n'
        << name << "_q50," << format_double(a.q50) << '\n'
        << name << "_q75," << format_double(a.q75) << '\n'
        << name << "_q975," << format_double(a.q975) << '\n'
        << name << "_max," << format_double(a.max) << '\n';
}

nlohmann::json aggregate_json(const Aggregate& a) {
    return {{"mean", a.mean}, {"std", a.std},   {"min", a.min},   {"q025", a.q025}, {"q25", a.q25},
            {"q50", a.q50},   {"q75", a.q75},   {"q975", a.q975}, {"max", a.max}};
}

Aggregate aggregate_from(const nlohmann::json& j) {
    Aggregate a;
    a.mean = j.at("mean").get<double>();
    a.std = j.at("std").get<double>();
    a.min = j.at("min").get<double>();
    a.q025 = j.at("q025").get<double>();
    a.q25 = j.at("q25").get<double>();
    a.q50 = j.at("q50").get<double>();
    a.q75 = j.at("q75").get<double>();
    a.q975 = j.at("q975").get<double>();
    a.max = j.at("max").get<double>();
    return a;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".summary.csv");
}

}  // namespace

void write_rows(std::ostream& out, const RunSummary& s) {
    out << kRowsHeader << '\n';
    for (std::size_t i = 0; i < s.days.size(); ++i) {
        const auto& d = s.days[i];
        out << d.day << ',' << d.plan_digest << ',' << format_double(d.total_penalty) << ','
            << format_double(d.penalty_ontime) << ',' << format_double(d.penalty_late) << ','
            << format_double(d.penalty_idle) << ',' << format_double(d.penalty_after_cutoff) << ','
            << format_double(d.avg_wait_min) << ',' << format_double(d.sonographer_quota) << ',' << d.served << ','
            << d.no_shows << ',' << d.turned_away << ',' << d.waiting_at_close << ',' << d.in_exam_at_close << ','
            << d.on_duty << ',' << format_double(s.ma50[i]) << '\n';
    }
}

void write_summary_sidecar(std::ostream& out, const RunSummary& s) {
    out << "key,value\n"
        << "policy," << s.policy << '\n'
        << "seed," << s.seed << '\n'
        << "config_digest," << s.config_digest << '\n'
        << "generator," << s.generator << '\n'
        << "days," << s.days.size() << '\n';
    write_aggregate(out, "penalty", s.penalty);
    write_aggregate(out, "avg_wait", s.avg_wait);
    write_aggregate(out, "quota", s.quota);
}

std::string summary_to_json(const RunSummary& s) {
    nlohmann::json days = nlohmann::json::array();
    for (const auto& d : s.days) {
        days.push_back({{"day", d.day},
                        {"plan_digest", d.plan_digest},
                        {"total_penalty", d.total_penalty},
                        {"penalty_ontime", d.penalty_ontime},
                        {"penalty_late", d.penalty_late},
                        {"penalty_idle", d.penalty_idle},
                        {"penalty_after_cutoff", d.penalty_after_cutoff},
                        {"avg_wait_min", d.avg_wait_min},
                        {"sonographer_quota", d.sonographer_quota},
                        {"served", d.served},
                        {"no_shows", d.no_shows},
                        {"turned_away", d.turned_away},
                        {"waiting_at_close", d.waiting_at_close},
                        {"in_exam_at_close", d.in_exam_at_close},
                        {"on_duty", d.on_duty}});
    }
    nlohmann::json doc = {{"type", "RunSummary"},
                          {"policy", s.policy},
                          {"seed", s.seed},
                          {"config_digest", s.config_digest},
                          {"generator", s.generator},
                          {"days", days},
                          {"penalty", aggregate_json(s.penalty)},
                          {"avg_wait", aggregate_json(s.avg_wait)},
                          {"quota", aggregate_json(s.quota)},
                          {"ma50", s.ma50}};
    return doc.dump(2) + "\n";
}

RunSummary summary_from_json(std::string_view text) {
    const auto doc = nlohmann::json::parse(text);
    if (doc.value("type", "") != "RunSummary") throw std::runtime_error("not a RunSummary document");
    RunSummary s;
    s.policy = doc.at("policy").get<std::string>();
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.config_digest = doc.at("config_digest").get<std::uint64_t>();
    s.generator = doc.at("generator").get<std::string>();
    for (const auto& j : doc.at("days")) {
        DayRecord d;
        d.day = j.at("day").get<int>();
        d.plan_digest = j.at("plan_digest").get<std::uint64_t>();
        d.total_penalty = j.at("total_penalty").get<double>();
        d.penalty_ontime = j.at("penalty_ontime").get<double>();
        d.penalty_late = j.at("penalty_late").get<double>();
        d.penalty_idle = j.at("penalty_idle").get<double>();
        d.penalty_after_cutoff = j.at("penalty_after_cutoff").get<double>();
        d.avg_wait_min = j.at("avg_wait_min").get<double>();
        d.sonographer_quota = j.at("sonographer_quota").get<double>();
        d.served = j.at("served").get<int>();
        d.no_shows = j.at("no_shows").get<int>();
        d.turned_away = j.at("turned_away").get<int>();
        d.waiting_at_close = j.at("waiting_at_close").get<int>();
        d.in_exam_at_close = j.at("in_exam_at_close").get<int>();
        d.on_duty = j.at("on_duty").get<int>();
        s.days.push_back(d);
    }
    s.penalty = aggregate_from(doc.at("penalty"));
    s.avg_wait = aggregate_from(doc.at("avg_wait"));
    s.quota = aggregate_from(doc.at("quota"));
    s.ma50 = doc.at("ma50").get<std::vector<double>>();
    return s;
}

void export_summary(const RunSummary& summary, const std::filesystem::path& path, ExportFormat format) {
    if (format == ExportFormat::Structured) {
        auto out = open_out(path);
        out << summary_to_json(summary);
        if (!out) throw std::runtime_error("write failed: " + path.string());
        return;
    }
    {
        auto out = open_out(path);
        write_rows(out, summary);
        if (!out) throw std::runtime_error("write failed: " + path.string());
    }
    auto side = open_out(sidecar_path(path));
    write_summary_sidecar(side, summary);
    if (!side) throw std::runtime_error("write failed: " + sidecar_path(path).string());
}

RunSummary import_summary(const std::filesystem::path& path, ExportFormat format) {
    if (format == ExportFormat::Structured) return summary_from_json(read_file(path));

    RunSummary s;
    std::istringstream rows(read_file(path));
    std::string line;
    if (!std::getline(rows, line) || line != kRowsHeader) throw std::runtime_error("unexpected header in " + path.string());
    while (std::getline(rows, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 16) throw std::runtime_error("expected 16 fields in " + path.string());
        DayRecord d;
        d.day = parse_int(f[0], "day");
        d.plan_digest = parse_u64(f[1]);
        d.total_penalty = parse_double(f[2]);
        d.penalty_ontime = parse_double(f[3]);
        d.penalty_late = parse_double(f[4]);
        d.penalty_idle = parse_double(f[5]);
        d.penalty_after_cutoff = parse_double(f[6]);
        d.avg_wait_min = parse_double(f[7]);
        d.sonographer_quota = parse_double(f[8]);
        d.served = parse_int(f[9], "served");
        d.no_shows = parse_int(f[10], "no_shows");
        d.turned_away = parse_int(f[11], "turned_away");
        d.waiting_at_close = parse_int(f[12], "waiting_at_close");
        d.in_exam_at_close = parse_int(f[13], "in_exam_at_close");
        d.on_duty = parse_int(f[14], "on_duty");
        s.days.push_back(d);
        s.ma50.push_back(parse_double(f[15]));
    }

    std::istringstream side(read_file(sidecar_path(path)));
    std::getline(side, line);
    auto agg = [](Aggregate& a, std::string_view stat, double v) {
        if (stat == "mean") a.mean = v;
        else if (stat == "std") a.std = v;
        else if (stat == "min") a.min = v;
        else if (stat == "q025") a.q025 = v;
        else if (stat == "q25") a.q25 = v;
        else if (stat == "q50") a.q50 = v;
        else if (stat == "q75") a.q75 = v;
        else if (stat == "q975") a.q975 = v;
        else if (stat == "max") a.max = v;
        else throw std::runtime_error("unknown statistic " + std::string(stat));
    };
    while (std::getline(side, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        const std::string_view key = std::string_view(line).substr(0, comma);
        const std::string_view value = std::string_view(line).substr(comma + 1);
        if (key == "policy") s.policy = value;
        else if (key == "seed") s.seed = parse_u64(value);
        else if (key == "config_digest") s.config_digest = parse_u64(value);
        else if (key == "generator") s.generator = value;
        else if (key == "days") {
            if (parse_u64(value) != s.days.size()) throw std::runtime_error("day count mismatch in " + path.string());
        } else if (key.starts_with("penalty_")) agg(s.penalty, key.substr(8), parse_double(value));
        else if (key.starts_with("avg_wait_")) agg(s.avg_wait, key.substr(9), parse_double(value));
        else if (key.starts_with("quota_")) agg(s.quota, key.substr(6), parse_double(value));
        else throw std::runtime_error("unknown key " + std::string(key));
    }
    return s;
}

void write_events(std::ostream& out, const DivergenceReport& r) {
    out << "clock,time,reference_action,challenger_action,reference_counts,challenger_counts,reference_penalty,"
           "challenger_penalty\n";
    auto counts = [](const ActionVector& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
        return s;
    };
    for (const auto& e : r.events) {
        out << e.clock << ',' << format_hhmm(e.clock) << ',' << e.reference_action << ',' << e.challenger_action << ','
            << counts(e.reference_counts) << ',' << counts(e.challenger_counts) << ','
            << format_double(e.reference_penalty) << ',' << format_double(e.challenger_penalty) << '\n';
    }
}

std::string report_to_json(const DivergenceReport& r) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : r.events) {
        events.push_back({{"clock", e.clock},
                          {"reference_action", e.reference_action},
                          {"challenger_action", e.challenger_action},
                          {"reference_counts", e.reference_counts},
                          {"challenger_counts", e.challenger_counts},
                          {"reference_penalty", e.reference_penalty},
                          {"challenger_penalty", e.challenger_penalty}});
    }
    nlohmann::json doc = {{"type", "DivergenceReport"},
                          {"reference", r.reference},
                          {"challenger", r.challenger},
                          {"seed", r.seed},
                          {"day", r.day},
                          {"reference_total", r.reference_total},
                          {"challenger_total", r.challenger_total},
                          {"reference_daily_penalty", r.reference_daily_penalty},
                          {"events", events},
                          {"reference_series", r.reference_series},
                          {"challenger_series", r.challenger_series}};
    return doc.dump(2) + "\n";
}

void export_report(const DivergenceReport& report, const std::filesystem::path& path, ExportFormat format) {
    auto out = open_out(path);
    if (format == ExportFormat::Structured) out << report_to_json(report);
    else write_events(out, report);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_trace_jsonl(std::ostream& out, const std::vector<TraceRecord>& trace) {
    for (const auto& t : trace) {
        nlohmann::json alloc = nlohmann::json::array();
        for (const auto& a : t.allocations)
            alloc.push_back({{"patient", a.patient}, {"room", a.room}, {"sonographer", a.sonographer}});
        nlohmann::json j = {{"clock", t.clock},
                            {"observation", t.observation.values},
                            {"allocations", alloc},
                            {"penalty",
                             {{"ontime", t.penalty.ontime},
                              {"late", t.penalty.late},
                              {"idle", t.penalty.idle},
                              {"after_cutoff", t.penalty.after_cutoff}}}};
        out << j.dump() << '\n';
    }
}

}  // namespace echolab
