// File: harness.cpp
// Description: Experiment driver implementation.
#include "apm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "httplib.h"

namespace apm {

namespace {

constexpr std::uint64_t kSeedStreamTag = 0x7365656473ULL;    // "seeds"
constexpr std::uint64_t kRolloutStreamTag = 0x726f6c6cULL;   // "roll"
constexpr std::uint64_t kWorldNoiseSeedTag = 0x776e736432ULL;
constexpr std::uint64_t kAffNoiseSeedTag = 0x616e736432ULL;

using ordered_json = nlohmann::ordered_json;

auto world_choice_name(WorldChoice w) -> std::string {
    switch (w) {
        case WorldChoice::oracle: return "oracle";
        case WorldChoice::noisy: return "noisy";
        case WorldChoice::llm: return "llm";
    }
    return "?";
}

auto affordance_choice_name(AffordanceChoice a) -> std::string {
    switch (a) {
        case AffordanceChoice::none: return "none";
        case AffordanceChoice::oracle: return "oracle";
        case AffordanceChoice::noisy: return "noisy";
        case AffordanceChoice::llm: return "llm";
    }
    return "?";
}

auto parse_world_choice(const std::string& s) -> WorldChoice {
    if (s == "oracle") return WorldChoice::oracle;
    if (s == "noisy") return WorldChoice::noisy;
    if (s == "llm") return WorldChoice::llm;
    throw std::invalid_argument("unknown world model choice: " + s);
}

auto parse_affordance_choice(const std::string& s) -> AffordanceChoice {
    if (s == "none") return AffordanceChoice::none;
    if (s == "oracle") return AffordanceChoice::oracle;
    if (s == "noisy") return AffordanceChoice::noisy;
    if (s == "llm") return AffordanceChoice::llm;
    throw std::invalid_argument("unknown affordance model choice: " + s);
}

auto parse_kind(const std::string& s) -> ExperimentKind {
    if (s == "plan_metrics") return ExperimentKind::plan_metrics;
    if (s == "tree_metrics") return ExperimentKind::tree_metrics;
    if (s == "accuracy_sweep") return ExperimentKind::accuracy_sweep;
    if (s == "extraction_verify") return ExperimentKind::extraction_verify;
    if (s == "adaptive_verify") return ExperimentKind::adaptive_verify;
    throw std::invalid_argument("unknown experiment kind: " + s);
}

// Verify the endpoint is reachable before any seed is consumed.  Any HTTP
// response counts; only transport failures are fatal.
void probe_endpoint(const EndpointConfig& endpoint) {
    const char* token = std::getenv(endpoint.auth_token_env.c_str());
    if (token == nullptr || *token == '\0')
        throw BridgeConfigError("environment variable " + endpoint.auth_token_env +
                                " is not set; refusing to contact the endpoint");
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(endpoint.timeout_ms / 1000,
                                  (endpoint.timeout_ms % 1000) * 1000);
    auto res = client.Get("/");
    if (!res)
        throw TransportError("endpoint " + endpoint.base_url +
                             " unreachable: " + httplib::to_string(res.error()));
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

auto mean_std(std::span<const double> xs) -> MeanStd {
    if (xs.empty()) return {};
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

auto aggregate_records(const std::string& method, std::span<const RunRecord> records,
                       int budget) -> MethodAggregate {
    MethodAggregate agg;
    agg.method = method;
    agg.seeds = static_cast<int>(records.size());

    std::vector<double> mc_best, mc_mean, sims, mcalls, acalls, leaf, tree, accum, online;
    std::vector<double> steps_completed;
    for (const auto& r : records) {
        mc_best.push_back(r.mc_score_best);
        mc_mean.push_back(r.mc_score_mean);
        sims.push_back(r.simulations_mean);
        mcalls.push_back(r.model_calls_total);
        acalls.push_back(r.affordance_calls_total);
        leaf.push_back(r.avg_leaf_score);
        tree.push_back(r.avg_tree_score);
        accum.push_back(r.avg_accumulated_reward);
        online.push_back(r.eval.online_cumulative_reward);
        if (r.eval.completed) {
            ++agg.completed;
            steps_completed.push_back(static_cast<double>(r.eval.steps_used));
        }
    }
    agg.completed_rate =
        agg.seeds > 0 ? static_cast<double>(agg.completed) / agg.seeds : 0.0;
    const auto set = [](MeanStd ms, double& m, double& s) {
        m = ms.mean;
        s = ms.std;
    };
    set(mean_std(mc_best), agg.mc_best_mean, agg.mc_best_std);
    set(mean_std(mc_mean), agg.mc_mean_mean, agg.mc_mean_std);
    set(mean_std(sims), agg.sims_mean, agg.sims_std);
    set(mean_std(mcalls), agg.model_calls_mean, agg.model_calls_std);
    set(mean_std(acalls), agg.aff_calls_mean, agg.aff_calls_std);
    set(mean_std(leaf), agg.leaf_mean, agg.leaf_std);
    set(mean_std(tree), agg.tree_mean, agg.tree_std);
    set(mean_std(accum), agg.accum_mean, agg.accum_std);
    set(mean_std(online), agg.online_mean, agg.online_std);
    agg.steps_mean_completed = mean_std(steps_completed).mean;
    // Tables render never-completing methods with the over-budget marker.
    agg.steps_display = agg.completed == 0 ? (">" + std::to_string(budget))
                                           : format_double(agg.steps_mean_completed);
    return agg;
}

}  // namespace

auto method_name(WorldChoice world, AffordanceChoice affordance) -> std::string {
    return world_choice_name(world) + "+" + affordance_choice_name(affordance);
}

auto experiment_kind_name(ExperimentKind kind) -> std::string {
    switch (kind) {
        case ExperimentKind::plan_metrics: return "plan_metrics";
        case ExperimentKind::tree_metrics: return "tree_metrics";
        case ExperimentKind::accuracy_sweep: return "accuracy_sweep";
        case ExperimentKind::extraction_verify: return "extraction_verify";
        case ExperimentKind::adaptive_verify: return "adaptive_verify";
    }
    return "?";
}

auto format_double(double v) -> std::string {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

auto config_to_json(const ExperimentConfig& cfg) -> ordered_json {
    ordered_json j;
    j["experiment"] = experiment_kind_name(cfg.experiment);
    j["task"] = {{"num_blocks", cfg.task.num_blocks},
                 {"width", cfg.task.width},
                 {"height", cfg.task.height},
                 {"close_threshold", cfg.task.close_threshold},
                 {"max_steps", cfg.task.max_steps},
                 {"seed", cfg.task.seed}};
    j["seeds"] = cfg.seeds;
    j["default_seed_count"] = cfg.default_seed_count;
    j["world"] = world_choice_name(cfg.world);
    j["affordance"] = affordance_choice_name(cfg.affordance);
    j["search"] = {{"num_simulations", cfg.search.num_simulations},
                   {"max_depth", cfg.search.max_depth},
                   {"terminal_reward", cfg.search.terminal_reward},
                   {"use_affordances", cfg.search.use_affordances},
                   {"affordance_request", cfg.search.affordance_request},
                   {"affordance_restricted_rollouts", cfg.search.affordance_restricted_rollouts}};
    j["world_noise"] = {{"corruption_rate", cfg.world_noise.corruption_rate},
                        {"seed", cfg.world_noise.seed}};
    j["affordance_noise"] = {{"accuracy", cfg.affordance_noise.accuracy},
                             {"drop_rate", cfg.affordance_noise.drop_rate},
                             {"spurious_rate", cfg.affordance_noise.spurious_rate},
                             {"seed", cfg.affordance_noise.seed}};
    j["master_seed"] = cfg.master_seed;
    j["output_dir"] = cfg.output_dir;
    j["endpoint"] = {{"base_url", cfg.endpoint.base_url},
                     {"completion_path", cfg.endpoint.completion_path},
                     {"model_name", cfg.endpoint.model_name},
                     {"auth_token_env", cfg.endpoint.auth_token_env},
                     {"timeout_ms", cfg.endpoint.timeout_ms},
                     {"max_retries", cfg.endpoint.max_retries},
                     {"retry_backoff_ms", cfg.endpoint.retry_backoff_ms},
                     {"max_in_flight", cfg.endpoint.max_in_flight}};
    j["replay_path"] = cfg.replay_path;
    j["record_path"] = cfg.record_path;
    j["parallel"] = cfg.parallel;
    j["verify_seeds"] = cfg.verify_seeds;
    j["verify_runs"] = cfg.verify_runs;
    j["verify_eps"] = cfg.verify_eps;
    return j;
}

auto config_hash(const ExperimentConfig& cfg) -> std::uint64_t {
    // Hash only result-relevant fields: where outputs land, transcript file
    // names, and thread-count settings do not change computed results.
    auto j = config_to_json(cfg);
    j.erase("output_dir");
    j.erase("replay_path");
    j.erase("record_path");
    j.erase("parallel");
    j["endpoint"].erase("timeout_ms");
    j["endpoint"].erase("max_retries");
    j["endpoint"].erase("retry_backoff_ms");
    j["endpoint"].erase("max_in_flight");
    const std::string bytes = j.dump();
    std::uint64_t h = 0x636f6e666967ULL;  // "config"
    for (unsigned char c : bytes) h = mix_u64(h, c);
    return h;
}

auto config_from_json(const nlohmann::json& doc, ExperimentConfig base) -> ExperimentConfig {
    if (!doc.is_object()) throw std::invalid_argument("config document must be an object");
    for (const auto& [key, value] : doc.items()) {
        if (key == "experiment") base.experiment = parse_kind(value.get<std::string>());
        else if (key == "task") {
            for (const auto& [tk, tv] : value.items()) {
                if (tk == "num_blocks") base.task.num_blocks = tv.get<int>();
                else if (tk == "width") base.task.width = tv.get<int>();
                else if (tk == "height") base.task.height = tv.get<int>();
                else if (tk == "close_threshold") base.task.close_threshold = tv.get<double>();
                else if (tk == "max_steps") base.task.max_steps = tv.get<int>();
                else if (tk == "seed") base.task.seed = tv.get<std::uint64_t>();
                else throw std::invalid_argument("unknown config key: task." + tk);
            }
        } else if (key == "seeds") base.seeds = value.get<std::vector<std::uint64_t>>();
        else if (key == "default_seed_count") base.default_seed_count = value.get<int>();
        else if (key == "world" || key == "model")
            base.world = parse_world_choice(value.get<std::string>());
        else if (key == "affordance")
            base.affordance = parse_affordance_choice(value.get<std::string>());
        else if (key == "search") {
            for (const auto& [sk, sv] : value.items()) {
                if (sk == "num_simulations") base.search.num_simulations = sv.get<int>();
                else if (sk == "max_depth") base.search.max_depth = sv.get<int>();
                else if (sk == "terminal_reward") base.search.terminal_reward = sv.get<double>();
                else if (sk == "use_affordances") base.search.use_affordances = sv.get<bool>();
                else if (sk == "affordance_request")
                    base.search.affordance_request = sv.get<int>();
                else if (sk == "affordance_restricted_rollouts")
                    base.search.affordance_restricted_rollouts = sv.get<bool>();
                else throw std::invalid_argument("unknown config key: search." + sk);
            }
        } else if (key == "world_noise") {
            for (const auto& [nk, nv] : value.items()) {
                if (nk == "corruption_rate") base.world_noise.corruption_rate = nv.get<double>();
                else if (nk == "seed") base.world_noise.seed = nv.get<std::uint64_t>();
                else throw std::invalid_argument("unknown config key: world_noise." + nk);
            }
        } else if (key == "affordance_noise") {
            for (const auto& [nk, nv] : value.items()) {
                if (nk == "accuracy") base.affordance_noise.accuracy = nv.get<double>();
                else if (nk == "drop_rate") base.affordance_noise.drop_rate = nv.get<double>();
                else if (nk == "spurious_rate")
                    base.affordance_noise.spurious_rate = nv.get<double>();
                else if (nk == "seed") base.affordance_noise.seed = nv.get<std::uint64_t>();
                else throw std::invalid_argument("unknown config key: affordance_noise." + nk);
            }
        } else if (key == "master_seed") base.master_seed = value.get<std::uint64_t>();
        else if (key == "output_dir") base.output_dir = value.get<std::string>();
        else if (key == "endpoint") {
            for (const auto& [ek, ev] : value.items()) {
                if (ek == "base_url") base.endpoint.base_url = ev.get<std::string>();
                else if (ek == "completion_path")
                    base.endpoint.completion_path = ev.get<std::string>();
                else if (ek == "model_name") base.endpoint.model_name = ev.get<std::string>();
                else if (ek == "auth_token_env")
                    base.endpoint.auth_token_env = ev.get<std::string>();
                else if (ek == "timeout_ms") base.endpoint.timeout_ms = ev.get<int>();
                else if (ek == "max_retries") base.endpoint.max_retries = ev.get<int>();
                else if (ek == "retry_backoff_ms")
                    base.endpoint.retry_backoff_ms = ev.get<int>();
                else if (ek == "max_in_flight") base.endpoint.max_in_flight = ev.get<int>();
                else throw std::invalid_argument("unknown config key: endpoint." + ek);
            }
        } else if (key == "replay_path") base.replay_path = value.get<std::string>();
        else if (key == "record_path") base.record_path = value.get<std::string>();
        else if (key == "parallel") base.parallel = value.get<bool>();
        else if (key == "verify_seeds") base.verify_seeds = value.get<int>();
        else if (key == "verify_runs") base.verify_runs = value.get<long long>();
        else if (key == "verify_eps") base.verify_eps = value.get<double>();
        else throw std::invalid_argument("unknown config key: " + key);
    }
    return base;
}

auto effective_seeds(const ExperimentConfig& cfg) -> std::vector<std::uint64_t> {
    if (!cfg.seeds.empty()) return cfg.seeds;
    if (cfg.default_seed_count < 1)
        throw std::invalid_argument("default_seed_count must be positive");
    std::vector<std::uint64_t> seeds;
    seeds.reserve(static_cast<std::size_t>(cfg.default_seed_count));
    for (int i = 0; i < cfg.default_seed_count; ++i)
        seeds.push_back(derive_seed({kSeedStreamTag, cfg.master_seed,
                                     static_cast<std::uint64_t>(i)}));
    return seeds;
}

auto run_table_experiment(const ExperimentConfig& cfg) -> TableReport {
    const auto seeds = effective_seeds(cfg);
    if (seeds.empty()) throw std::invalid_argument("seed list is empty");
    Simulator sim(cfg.task);

    const bool needs_llm =
        cfg.world == WorldChoice::llm || cfg.affordance == AffordanceChoice::llm;
    std::shared_ptr<BridgeSession> session;
    std::shared_ptr<Transcript> record;
    PromptTemplate tmpl;
    if (needs_llm) {
        tmpl = PromptTemplate::standard();
        if (!cfg.replay_path.empty()) {
            session = std::make_shared<BridgeSession>(
                std::make_shared<const Transcript>(Transcript::load(cfg.replay_path)));
        } else {
            probe_endpoint(cfg.endpoint);  // fail fast before consuming seeds
            if (!cfg.record_path.empty()) record = std::make_shared<Transcript>();
            session = std::make_shared<BridgeSession>(cfg.endpoint, record);
        }
    }

    NoisyWorldParams world_noise = cfg.world_noise;
    if (world_noise.seed == 0)
        world_noise.seed = derive_seed({kWorldNoiseSeedTag, cfg.master_seed});
    NoisyAffordanceParams aff_noise = cfg.affordance_noise;
    if (aff_noise.seed == 0)
        aff_noise.seed = derive_seed({kAffNoiseSeedTag, cfg.master_seed});

    const std::string method = method_name(cfg.world, cfg.affordance);
    const auto chash = config_hash(cfg);

    std::vector<RunRecord> records(seeds.size());
    std::exception_ptr failure;

    auto body = [&](std::size_t i) {
        std::unique_ptr<WorldModel> world;
        switch (cfg.world) {
            case WorldChoice::oracle: world = std::make_unique<OracleWorldModel>(sim); break;
            case WorldChoice::noisy:
                world = std::make_unique<NoisyWorldModel>(sim, world_noise);
                break;
            case WorldChoice::llm:
                world = std::make_unique<LlmWorldModel>(session, tmpl);
                break;
        }
        std::unique_ptr<AffordanceModel> affordances;
        switch (cfg.affordance) {
            case AffordanceChoice::none: break;
            case AffordanceChoice::oracle:
                affordances = std::make_unique<OracleAffordanceModel>(sim);
                break;
            case AffordanceChoice::noisy:
                affordances = std::make_unique<NoisyAffordanceModel>(sim, aff_noise);
                break;
            case AffordanceChoice::llm:
                affordances = std::make_unique<LlmAffordanceModel>(session, tmpl, sim);
                break;
        }

        SearchConfig scfg = cfg.search;
        scfg.use_affordances = cfg.affordance != AffordanceChoice::none;
        scfg.rollout_seed = derive_seed({kRolloutStreamTag, cfg.master_seed, seeds[i]});

        const State start = sim.init_state(seeds[i]);
        const auto t0 = std::chrono::steady_clock::now();
        const auto ev = evaluate_online(start, sim, *world, affordances.get(), scfg);
        const auto t1 = std::chrono::steady_clock::now();

        RunRecord rec;
        rec.method = method;
        rec.config_hash = chash;
        rec.seed = seeds[i];
        rec.mc_score_best = ev.best_mc_score;
        rec.mc_score_mean = ev.mean_step_metrics.mc_score;
        rec.avg_leaf_score = ev.mean_step_metrics.avg_leaf_score;
        rec.avg_tree_score = ev.mean_step_metrics.avg_tree_score;
        rec.avg_accumulated_reward = ev.mean_step_metrics.avg_accumulated_reward;
        rec.simulations_mean = ev.mean_step_metrics.simulations_used;
        rec.model_calls_total = ev.total_model_calls;
        rec.affordance_calls_total = ev.total_affordance_calls;
        rec.eval = ev.report;
        rec.wall_time_ms =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
        records[i] = std::move(rec);
    };

    auto guarded = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    };

    if (cfg.parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(seeds.size()); ++i)
            guarded(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < seeds.size(); ++i) guarded(i);
    }
    if (failure) std::rethrow_exception(failure);

    if (record != nullptr) record->save(cfg.record_path);

    TableReport report;
    report.aggregate = aggregate_records(method, records, cfg.task.max_steps);
    report.records = std::move(records);
    return report;
}

auto run_accuracy_sweep(std::span<const double> accuracies, const ExperimentConfig& cfg)
    -> SweepReport {
    SweepReport report;
    for (const double a : accuracies) {
        if (!(a >= 0.0 && a <= 1.0))
            throw std::invalid_argument("sweep accuracies must lie in [0, 1]");
        ExperimentConfig point = cfg;
        point.world = WorldChoice::oracle;  // perfect dynamics by construction
        point.affordance = AffordanceChoice::noisy;
        point.affordance_noise.accuracy = a;
        auto table = run_table_experiment(point);

        SweepPoint sp;
        sp.accuracy = a;
        sp.mean_online_reward = table.aggregate.online_mean;
        sp.success_rate = table.aggregate.completed_rate;
        report.points.push_back(sp);

        for (auto& rec : table.records) {
            rec.method = "acc=" + format_double(a) + ":" + rec.method;
            report.records.push_back(std::move(rec));
        }
    }
    return report;
}

auto default_extraction_grid() -> std::vector<AgentParams> {
    std::vector<AgentParams> grid;
    for (const double p : {0.2, 0.5, 0.8})
        for (const int n : {50, 200})
            for (const double zeta : {0.0, 0.1})
                for (const double delta : {0.0, 0.05, 0.2})
                    grid.push_back({n, p, zeta, delta, BandPolicy::median_rule});
    return grid;
}

auto make_task_suite(const IntentUniverse& universe, int sequence_length, int first_task_id)
    -> std::vector<SequenceTask> {
    const int L = sequence_length;
    const auto missing = universe.missing_ids();
    if (universe.partial_ids.empty() || missing.empty())
        throw std::invalid_argument("task suite needs both partial and missing intents");

    std::vector<int> in_seq, out_seq, mixed_seq;
    for (int i = 0; i < L; ++i) {
        in_seq.push_back(universe.partial_ids[static_cast<std::size_t>(i) %
                                              universe.partial_ids.size()]);
        out_seq.push_back(missing[static_cast<std::size_t>(i) % missing.size()]);
        mixed_seq.push_back(i % 2 == 0
                                ? universe.partial_ids[0]
                                : missing[0]);
    }

    const auto equals = [](std::vector<int> target) {
        return [target = std::move(target)](std::span<const int> seq) {
            return std::equal(seq.begin(), seq.end(), target.begin(), target.end());
        };
    };

    std::vector<SequenceTask> tasks;
    tasks.push_back({first_task_id + 0, "exact_in", equals(in_seq)});
    tasks.push_back({first_task_id + 1, "exact_out", equals(out_seq)});
    tasks.push_back({first_task_id + 2, "exact_mixed", equals(mixed_seq)});
    // Prefix predicate: fires as soon as the first intent matches, no matter
    // what follows.
    const int prefix_target = universe.partial_ids[0];
    tasks.push_back({first_task_id + 3, "prefix_first_in",
                     [prefix_target](std::span<const int> seq) {
                         return !seq.empty() && seq[0] == prefix_target;
                     }});
    tasks.push_back({first_task_id + 4, "disjunction",
                     [a = in_seq, b = out_seq](std::span<const int> seq) {
                         return std::equal(seq.begin(), seq.end(), a.begin(), a.end()) ||
                                std::equal(seq.begin(), seq.end(), b.begin(), b.end());
                     }});
    return tasks;
}

auto default_bound_suites() -> std::vector<BoundSuiteConfig> {
    std::vector<BoundSuiteConfig> suites;
    int next_id = 0;
    for (const int n : {4, 6}) {
        for (int k = 1; k <= 3; ++k) {
            if (2 * k > n) continue;  // bound suites keep k <= n/2
            for (int L = 1; L <= 3; ++L) {
                BoundSuiteConfig suite;
                suite.label = "n" + std::to_string(n) + "_k" + std::to_string(k) + "_L" +
                              std::to_string(L);
                suite.universe = IntentUniverse::first_k(n, k);
                suite.sequence_length = L;
                suite.tasks = make_task_suite(suite.universe, L, next_id);
                next_id += static_cast<int>(suite.tasks.size());
                suites.push_back(std::move(suite));
            }
        }
    }
    return suites;
}

auto run_verifiers(bool extraction_bound, bool adaptive_bound, bool grid_cover,
                   const ExperimentConfig& cfg, const std::string& report_path)
    -> VerifierOutcome {
    VerifierOutcome outcome;
    outcome.all_pass = true;
    std::vector<std::string> lines;

    if (extraction_bound) {
        const auto grid = default_extraction_grid();
        const auto rep = verify_extraction_bound(grid, cfg.verify_seeds, cfg.verify_eps,
                                                 cfg.master_seed, cfg.parallel);
        for (const auto& pt : rep.points) {
            ordered_json j;
            j["kind"] = "extraction_bound";
            j["n"] = pt.params.depth_n;
            j["p"] = pt.params.p_true;
            j["zeta"] = pt.params.zeta;
            j["delta"] = pt.params.delta;
            j["policy"] = pt.params.policy == BandPolicy::median_rule ? "median_rule"
                          : pt.params.policy == BandPolicy::band_low  ? "band_low"
                                                                      : "band_high";
            j["seeds"] = pt.seeds;
            j["eps"] = pt.eps;
            j["violations"] = pt.violations;
            j["frequency"] = pt.frequency;
            j["bound"] = pt.bound;
            j["slack"] = pt.slack;
            j["bracket_violations"] = pt.bracket_violations;
            j["pass"] = pt.pass;
            lines.push_back(j.dump());
        }
        outcome.all_pass = outcome.all_pass && rep.all_pass;
    }

    if (adaptive_bound) {
        for (const auto& suite : default_bound_suites()) {
            const auto rep =
                verify_adaptive_bound(suite.tasks, suite.universe, suite.sequence_length,
                                      cfg.verify_runs, cfg.master_seed, 1000, cfg.parallel);
            ordered_json j;
            j["kind"] = "adaptive_bound";
            j["label"] = suite.label;
            j["n"] = suite.universe.total;
            j["k"] = suite.universe.partial_count();
            j["L"] = suite.sequence_length;
            j["runs_per_task"] = cfg.verify_runs;
            j["total_mean_trials"] = rep.total_mean_trials;
            j["total_upper_ci"] = rep.total_upper_ci;
            j["bound"] = rep.bound;
            j["pass"] = rep.pass;
            ordered_json tasks = ordered_json::array();
            for (const auto& t : rep.tasks) {
                tasks.push_back({{"id", t.task_id},
                                 {"name", t.name},
                                 {"mean_trials", t.mean_trials},
                                 {"ci_half_width", t.ci_half_width},
                                 {"best_eps", t.best_eps},
                                 {"best_prob", t.best_prob},
                                 {"exhausted_runs", t.exhausted_runs}});
            }
            j["tasks"] = std::move(tasks);
            lines.push_back(j.dump());
            outcome.all_pass = outcome.all_pass && rep.pass;
        }
    }

    if (grid_cover) {
        for (int n = 2; n <= 6; ++n)
            for (int k = 1; k < n; ++k)
                for (int L = 1; L <= 4; ++L) {
                    const bool ok = grid_cover_holds(n, k, L, 100);
                    ordered_json j;
                    j["kind"] = "grid_cover";
                    j["n"] = n;
                    j["k"] = k;
                    j["L"] = L;
                    j["resolution"] = 100;
                    j["pass"] = ok;
                    lines.push_back(j.dump());
                    outcome.all_pass = outcome.all_pass && ok;
                }
    }

    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open report file: " + report_path);
    for (const auto& line : lines) out << line << "\n";
    outcome.rows_written = static_cast<long long>(lines.size());
    return outcome;
}

void write_aggregate_csv(const std::string& path, std::span<const MethodAggregate> rows,
                         ExperimentKind kind, int budget) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open csv file: " + path);
    out << "# schema=apm.aggregate.v1\n";
    (void)budget;
    if (kind == ExperimentKind::tree_metrics) {
        out << "method,seeds,completed_rate,leaf_score_mean,leaf_score_std,"
               "tree_score_mean,tree_score_std,accumulated_reward_mean,"
               "accumulated_reward_std,online_reward_mean,online_reward_std,steps\n";
        for (const auto& r : rows) {
            out << r.method << "," << r.seeds << "," << format_double(r.completed_rate)
                << "," << format_double(r.leaf_mean) << "," << format_double(r.leaf_std)
                << "," << format_double(r.tree_mean) << "," << format_double(r.tree_std)
                << "," << format_double(r.accum_mean) << "," << format_double(r.accum_std)
                << "," << format_double(r.online_mean) << ","
                << format_double(r.online_std) << "," << r.steps_display << "\n";
        }
        return;
    }
    out << "method,seeds,completed_rate,mc_score_best_mean,mc_score_best_std,"
           "mc_score_mean_mean,mc_score_mean_std,simulations_mean,simulations_std,"
           "model_calls_mean,model_calls_std,affordance_calls_mean,affordance_calls_std,"
           "steps,online_reward_mean,online_reward_std\n";
    for (const auto& r : rows) {
        out << r.method << "," << r.seeds << "," << format_double(r.completed_rate) << ","
            << format_double(r.mc_best_mean) << "," << format_double(r.mc_best_std) << ","
            << format_double(r.mc_mean_mean) << "," << format_double(r.mc_mean_std) << ","
            << format_double(r.sims_mean) << "," << format_double(r.sims_std) << ","
            << format_double(r.model_calls_mean) << ","
            << format_double(r.model_calls_std) << "," << format_double(r.aff_calls_mean)
            << "," << format_double(r.aff_calls_std) << "," << r.steps_display << ","
            << format_double(r.online_mean) << "," << format_double(r.online_std) << "\n";
    }
}

void write_sweep_csv(const std::string& path, std::span<const SweepPoint> points,
                     int seeds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open csv file: " + path);
    out << "# schema=apm.sweep.v1\n";
    out << "accuracy,mean_online_reward,success_rate,seeds\n";
    for (const auto& p : points)
        out << format_double(p.accuracy) << "," << format_double(p.mean_online_reward)
            << "," << format_double(p.success_rate) << "," << seeds << "\n";
}

void write_records_jsonl(const std::string& path, std::span<const RunRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open records file: " + path);
    for (const auto& r : records) {
        ordered_json j;
        j["method"] = r.method;
        j["config_hash"] = r.config_hash;
        j["seed"] = r.seed;
        j["mc_score_best"] = r.mc_score_best;
        j["mc_score_mean"] = r.mc_score_mean;
        j["avg_leaf_score"] = r.avg_leaf_score;
        j["avg_tree_score"] = r.avg_tree_score;
        j["avg_accumulated_reward"] = r.avg_accumulated_reward;
        j["simulations_mean"] = r.simulations_mean;
        j["model_calls_total"] = r.model_calls_total;
        j["affordance_calls_total"] = r.affordance_calls_total;
        j["completed"] = r.eval.completed;
        j["steps_used"] = r.eval.steps_used;
        j["online_cumulative_reward"] = r.eval.online_cumulative_reward;
        out << j.dump() << "\n";
    }
}

void write_timings_jsonl(const std::string& path, std::span<const RunRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open timings file: " + path);
    for (const auto& r : records) {
        ordered_json j;
        j["method"] = r.method;
        j["seed"] = r.seed;
        j["wall_time_ms"] = r.wall_time_ms;
        out << j.dump() << "\n";
    }
}

}  // namespace apm
