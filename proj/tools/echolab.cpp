// echolab command-line driver.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "echolab/harness.hpp"
#include "echolab/learner/trainer.hpp"

namespace fs = std::filesystem;
using namespace echolab;

namespace {

struct ScenarioOpts {
    std::string scenario = "default";
    std::string config;

    void add(CLI::App* app) {
        app->add_option("--scenario", scenario, "default, abundant or scarce");
        app->add_option("--config", config, "JSON config file; overrides --scenario");
    }
    SimConfig load() const { return config.empty() ? scenario_preset(scenario) : load_config(config); }
};

void print_summary(const RunSummary& s) {
    std::cout << std::setprecision(6) << s.policy << ": " << s.days.size() << " days, seed " << s.seed
              << ", penalty mean " << s.penalty.mean << " sd " << s.penalty.std << " median " << s.penalty.q50
              << ", avg wait " << s.avg_wait.mean << " min, quota " << s.quota.mean << '\n';
}

std::string case_name(int policy, int number) {
    std::ostringstream ss;
    ss << 'p' << policy << "_case" << std::setw(2) << std::setfill('0') << number;
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Echocardiography lab scheduling simulator and trainer"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Evaluate one policy over many days");
    ScenarioOpts sim_sc;
    sim_sc.add(sim);
    std::string sim_policy = "p1", sim_out, sim_format = "rows", sim_trace;
    int sim_days = 365;
    std::uint64_t sim_seed = 1;
    sim->add_option("--policy", sim_policy, "p1..p4, p5(a,b), p6(a,b) or rl(path)");
    sim->add_option("--days", sim_days)->check(CLI::NonNegativeNumber);
    sim->add_option("--seed", sim_seed);
    sim->add_option("--out", sim_out, "export path");
    sim->add_option("--format", sim_format)->check(CLI::IsMember({"rows", "structured", "csv", "json"}));
    sim->add_option("--trace", sim_trace, "minute-by-minute JSONL trace of day 0");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run the ten reservation cases for policies 5 and 6");
    ScenarioOpts sw_sc;
    sw_sc.add(sweep);
    int sw_days = 365;
    std::uint64_t sw_seed = 1;
    std::string sw_out, sw_format = "rows";
    sweep->add_option("--days", sw_days)->check(CLI::NonNegativeNumber);
    sweep->add_option("--seed", sw_seed);
    sweep->add_option("--out", sw_out, "output directory")->required();
    sweep->add_option("--format", sw_format)->check(CLI::IsMember({"rows", "structured", "csv", "json"}));

    // train
    auto* train = app.add_subcommand("train", "Train the Q-network");
    ScenarioOpts tr_sc;
    tr_sc.add(train);
    std::uint64_t tr_seed = 1;
    std::string tr_out, tr_target = "double";
    int tr_days = 0, tr_every = 0;
    train->add_option("--seed", tr_seed);
    train->add_option("--out", tr_out, "output directory")->required();
    train->add_option("--days", tr_days, "total days; the day schedule is compressed to fit")->check(CLI::PositiveNumber);
    train->add_option("--target", tr_target, "double or max")->check(CLI::IsMember({"double", "max"}));
    train->add_option("--checkpoint-every", tr_every, "also save a checkpoint every N days")->check(CLI::NonNegativeNumber);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Evaluate a trained checkpoint greedily");
    ScenarioOpts ev_sc;
    ev_sc.add(eval);
    std::string ev_ckpt, ev_out, ev_format = "rows";
    int ev_days = 365;
    std::uint64_t ev_seed = 1;
    eval->add_option("--checkpoint", ev_ckpt)->required();
    eval->add_option("--days", ev_days)->check(CLI::NonNegativeNumber);
    eval->add_option("--seed", ev_seed);
    eval->add_option("--out", ev_out);
    eval->add_option("--format", ev_format)->check(CLI::IsMember({"rows", "structured", "csv", "json"}));

    // diff
    auto* diff = app.add_subcommand("diff", "Replay a reference day and compare a challenger minute by minute");
    ScenarioOpts df_sc;
    df_sc.add(diff);
    std::string df_ckpt, df_challenger, df_reference = "p2", df_out, df_format = "rows";
    std::uint64_t df_seed = 1;
    int df_day = 0;
    auto* ck = diff->add_option("--checkpoint", df_ckpt, "challenger checkpoint");
    auto* ch = diff->add_option("--challenger", df_challenger, "challenger policy spec instead of a checkpoint");
    ck->excludes(ch);
    diff->add_option("--reference", df_reference);
    diff->add_option("--seed", df_seed);
    diff->add_option("--day", df_day)->check(CLI::NonNegativeNumber);
    diff->add_option("--out", df_out);
    diff->add_option("--format", df_format)->check(CLI::IsMember({"rows", "structured", "csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    PolicySpec spec;
    try {
        if (*sim) spec = PolicySpec::parse(sim_policy);
        if (*diff && df_ckpt.empty() && df_challenger.empty())
            throw std::invalid_argument("diff needs --checkpoint or --challenger");
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*sim) {
            const SimConfig cfg = sim_sc.load();
            const auto summary = run_eval(spec, cfg, sim_days, sim_seed);
            print_summary(summary);
            if (!sim_out.empty()) export_summary(summary, sim_out, parse_export_format(sim_format));
            if (!sim_trace.empty()) {
                const PolicyFactory f(spec, cfg);
                const DayPlan plan = build_day(cfg, sim_seed, 0);
                std::ofstream out(sim_trace);
                if (!out) throw std::runtime_error("cannot write " + sim_trace);
                write_trace_jsonl(out, run_day(cfg, plan, f.for_day(plan)).trace);
            }
        } else if (*sweep) {
            const SimConfig cfg = sw_sc.load();
            const auto fmt = parse_export_format(sw_format);
            const auto result = sweep_reservations(cfg, sw_days, sw_seed);
            const std::string ext = fmt == ExportFormat::Rows ? ".csv" : ".json";
            for (std::size_t i = 0; i < result.policy5.size(); ++i) {
                const int number = reservation_cases()[i].number;
                print_summary(result.policy5[i]);
                export_summary(result.policy5[i], fs::path(sw_out) / (case_name(5, number) + ext), fmt);
                print_summary(result.policy6[i]);
                export_summary(result.policy6[i], fs::path(sw_out) / (case_name(6, number) + ext), fmt);
            }
        } else if (*train) {
            const SimConfig cfg = tr_sc.load();
            TrainerConfig tc = tr_days > 0 ? TrainerConfig::compressed(tr_days) : TrainerConfig{};
            tc.target_style = tr_target == "max" ? TargetStyle::MaxTarget : TargetStyle::DoubleDQN;
            fs::create_directories(tr_out);
            Trainer trainer(cfg, tc, tr_seed);
            std::vector<DayLog> log;
            trainer.train([&](const DayLog& d, const Trainer& t) {
                log.push_back(d);
                if (tr_every > 0 && (d.day + 1) % tr_every == 0)
                    save_checkpoint(make_checkpoint(t), fs::path(tr_out) / ("checkpoint_day" + std::to_string(d.day + 1) + ".bin"));
                if ((d.day + 1) % 50 == 0 || d.day + 1 == tc.total_days)
                    std::cout << "day " << d.day + 1 << "/" << tc.total_days << " penalty " << d.penalty << " eps "
                              << d.epsilon << " lr " << d.lr << " loss " << d.mean_loss << std::endl;
            });
            save_checkpoint(make_checkpoint(trainer), fs::path(tr_out) / "checkpoint.bin");
            std::ofstream out(fs::path(tr_out) / "training_log.csv");
            write_training_log(out, log);
            if (!out) throw std::runtime_error("cannot write training log");
            std::cout << "wrote " << (fs::path(tr_out) / "checkpoint.bin").string() << '\n';
        } else if (*eval) {
            const SimConfig cfg = ev_sc.load();
            const auto summary = run_eval(PolicySpec::rl(ev_ckpt), cfg, ev_days, ev_seed);
            print_summary(summary);
            if (!ev_out.empty()) export_summary(summary, ev_out, parse_export_format(ev_format));
        } else if (*diff) {
            const SimConfig cfg = df_sc.load();
            const PolicyFactory ref(PolicySpec::parse(df_reference), cfg);
            const PolicyFactory chal(df_ckpt.empty() ? PolicySpec::parse(df_challenger) : PolicySpec::rl(df_ckpt), cfg);
            const auto rep = diff_policies(ref, chal, cfg, df_seed, df_day);
            std::cout << rep.reference << " vs " << rep.challenger << ", seed " << rep.seed << " day " << rep.day << ": "
                      << rep.events.size() << " divergent minutes, penalty " << rep.reference_total << " vs "
                      << rep.challenger_total << '\n';
            if (!df_out.empty()) export_report(rep, df_out, parse_export_format(df_format));
            else write_events(std::cout, rep);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
