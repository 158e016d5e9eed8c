// File: planner_cli.cpp
// Description: Command-line driver for the planning experiments and the
// statistical verifiers.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apm/harness.hpp"

namespace fs = std::filesystem;

namespace {

auto load_json_file(const std::string& path) -> nlohmann::json {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json doc;
    in >> doc;
    return doc;
}

auto parse_world(const std::string& s) -> apm::WorldChoice {
    if (s == "oracle") return apm::WorldChoice::oracle;
    if (s == "noisy") return apm::WorldChoice::noisy;
    return apm::WorldChoice::llm;
}

auto parse_affordance(const std::string& s) -> apm::AffordanceChoice {
    if (s == "none") return apm::AffordanceChoice::none;
    if (s == "oracle") return apm::AffordanceChoice::oracle;
    if (s == "noisy") return apm::AffordanceChoice::noisy;
    return apm::AffordanceChoice::llm;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"affordance-guided planning experiments and verifiers"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t master_seed = 0;
    bool no_parallel = false;

    int blocks = 0;
    int seeds_count = 0;
    std::vector<std::uint64_t> seed_list;
    std::string model_str;
    std::string affordance_str;
    std::string replay_path;
    std::string record_path;
    int sims = 0;
    int max_depth = 0;
    int m_request = 0;
    double corruption = -1.0;
    std::vector<double> accuracies;
    int verify_seeds = 0;
    long long verify_runs = 0;
    double verify_eps = 0.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (merged before flags)");
        sub->add_option("--out", out_dir, "output directory (default: out)");
        sub->add_option("--master-seed", master_seed, "master seed for all derived streams");
        sub->add_flag("--no-parallel", no_parallel, "disable OpenMP worker pool");
        return sub;
    };
    auto add_planning = [&](CLI::App* sub) {
        add_common(sub);
        sub->add_option("--blocks", blocks, "number of blocks");
        sub->add_option("--seeds", seeds_count, "number of derived task seeds");
        sub->add_option("--seed-list", seed_list, "explicit comma-separated task seeds")
            ->delimiter(',');
        sub->add_option("--model", model_str, "world model backend")
            ->check(CLI::IsMember({"oracle", "noisy", "llm"}));
        sub->add_option("--affordance", affordance_str, "affordance backend")
            ->check(CLI::IsMember({"none", "oracle", "noisy", "llm"}));
        sub->add_option("--replay", replay_path, "serve llm calls from this transcript");
        sub->add_option("--record", record_path, "record live llm calls to this transcript");
        sub->add_option("--sims", sims, "Monte Carlo simulations per search");
        sub->add_option("--max-depth", max_depth, "rollout horizon");
        sub->add_option("--m", m_request, "max actions requested per affordance query");
        sub->add_option("--corruption", corruption, "noisy world corruption rate");
        return sub;
    };

    auto* plan_cmd = add_planning(app.add_subcommand(
        "plan-metrics", "planning metrics (MC score, simulations, calls, steps)"));
    auto* tree_cmd = add_planning(app.add_subcommand(
        "tree-metrics", "tree quality metrics (leaf/tree/accumulated/online scores)"));
    auto* sweep_cmd = add_planning(
        app.add_subcommand("accuracy-sweep", "affordance accuracy sweep with a perfect world model"));
    sweep_cmd->add_option("--accuracies", accuracies, "comma-separated accuracy grid")
        ->delimiter(',');
    auto* extraction_cmd = add_common(
        app.add_subcommand("verify-extraction", "extraction deviation-bound verifier"));
    extraction_cmd->add_option("--verify-seeds", verify_seeds, "seeds per grid point");
    extraction_cmd->add_option("--eps", verify_eps, "deviation margin");
    auto* adaptive_cmd = add_common(
        app.add_subcommand("verify-adaptive", "adaptive sampler bound verifier"));
    adaptive_cmd->add_option("--verify-runs", verify_runs, "Las Vegas runs per task");
    auto* cover_cmd = add_common(
        app.add_subcommand("verify-cover", "epsilon grid covering check"));

    CLI11_PARSE(app, argc, argv);

    try {
        apm::ExperimentConfig cfg;
        bool explicit_method = false;
        if (!config_path.empty()) {
            const auto doc = load_json_file(config_path);
            explicit_method = doc.contains("world") || doc.contains("model") ||
                              doc.contains("affordance");
            cfg = apm::config_from_json(doc, cfg);
        }

        CLI::App* sub = app.get_subcommands().front();
        if (sub->count("--out") != 0u) cfg.output_dir = out_dir;
        if (sub->count("--master-seed") != 0u) cfg.master_seed = master_seed;
        if (no_parallel) cfg.parallel = false;

        const bool is_planning = (sub == plan_cmd || sub == tree_cmd || sub == sweep_cmd);
        if (is_planning) {
            if (sub->count("--blocks") != 0u) cfg.task.num_blocks = blocks;
            if (sub->count("--seeds") != 0u) {
                cfg.default_seed_count = seeds_count;
                cfg.seeds.clear();
            }
            if (sub->count("--seed-list") != 0u) cfg.seeds = seed_list;
            if (sub->count("--model") != 0u) {
                cfg.world = parse_world(model_str);
                explicit_method = true;
            }
            if (sub->count("--affordance") != 0u) {
                cfg.affordance = parse_affordance(affordance_str);
                explicit_method = true;
            }
            if (sub->count("--replay") != 0u) cfg.replay_path = replay_path;
            if (sub->count("--record") != 0u) cfg.record_path = record_path;
            if (sub->count("--sims") != 0u) cfg.search.num_simulations = sims;
            if (sub->count("--max-depth") != 0u) cfg.search.max_depth = max_depth;
            if (sub->count("--m") != 0u) cfg.search.affordance_request = m_request;
            if (sub->count("--corruption") != 0u) cfg.world_noise.corruption_rate = corruption;
        }
        if (sub == extraction_cmd && sub->count("--verify-seeds") != 0u)
            cfg.verify_seeds = verify_seeds;
        if (sub == extraction_cmd && sub->count("--eps") != 0u) cfg.verify_eps = verify_eps;
        if (sub == adaptive_cmd && sub->count("--verify-runs") != 0u)
            cfg.verify_runs = verify_runs;

        fs::create_directories(cfg.output_dir);
        const auto out_path = [&](const char* name) {
            return (fs::path(cfg.output_dir) / name).string();
        };

        if (sub == plan_cmd || sub == tree_cmd) {
            cfg.experiment = sub == plan_cmd ? apm::ExperimentKind::plan_metrics
                                             : apm::ExperimentKind::tree_metrics;
            std::vector<apm::MethodAggregate> aggregates;
            std::vector<apm::RunRecord> records;
            auto run_one = [&](apm::WorldChoice w, apm::AffordanceChoice a) {
                apm::ExperimentConfig c = cfg;
                c.world = w;
                c.affordance = a;
                auto rep = apm::run_table_experiment(c);
                aggregates.push_back(rep.aggregate);
                for (auto& r : rep.records) records.push_back(std::move(r));
            };
            if (explicit_method) {
                run_one(cfg.world, cfg.affordance);
            } else {
                // Standard comparison: full-model search vs affordance-guided.
                run_one(apm::WorldChoice::noisy, apm::AffordanceChoice::none);
                run_one(apm::WorldChoice::noisy, apm::AffordanceChoice::oracle);
            }
            apm::write_aggregate_csv(out_path("aggregate.csv"), aggregates, cfg.experiment,
                                     cfg.task.max_steps);
            apm::write_records_jsonl(out_path("records.jsonl"), records);
            apm::write_timings_jsonl(out_path("timings.jsonl"), records);
            std::cout << "wrote " << out_path("aggregate.csv") << " ("
                      << aggregates.size() << " methods, " << records.size()
                      << " records)\n";
            return 0;
        }

        if (sub == sweep_cmd) {
            cfg.experiment = apm::ExperimentKind::accuracy_sweep;
            if (cfg.seeds.empty() && sub->count("--seeds") == 0u)
                cfg.default_seed_count = 20;  // shape assertions need power
            std::vector<double> grid = accuracies;
            if (grid.empty()) grid = {0.0, 0.25, 0.5, 0.75, 1.0};
            const auto rep = apm::run_accuracy_sweep(grid, cfg);
            apm::write_sweep_csv(out_path("aggregate.csv"), rep.points,
                                 static_cast<int>(apm::effective_seeds(cfg).size()));
            apm::write_records_jsonl(out_path("records.jsonl"), rep.records);
            apm::write_timings_jsonl(out_path("timings.jsonl"), rep.records);
            std::cout << "wrote " << out_path("aggregate.csv") << " (" << rep.points.size()
                      << " accuracy points)\n";
            return 0;
        }

        // Verifier subcommands.
        const bool run_extraction = (sub == extraction_cmd);
        const bool run_adaptive = (sub == adaptive_cmd);
        const bool run_cover = (sub == cover_cmd);
        cfg.experiment = run_extraction ? apm::ExperimentKind::extraction_verify
                                        : apm::ExperimentKind::adaptive_verify;
        const auto outcome =
            apm::run_verifiers(run_extraction, run_adaptive, run_cover, cfg,
                               out_path("verify_report.jsonl"));
        std::cout << "wrote " << out_path("verify_report.jsonl") << " ("
                  << outcome.rows_written << " rows), "
                  << (outcome.all_pass ? "all checks passed" : "CHECK FAILURES") << "\n";
        return outcome.all_pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
