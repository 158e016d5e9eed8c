// File: harness.hpp
// Description: Experiment driver: seeded planning runs aggregated into
// table-style reports, the affordance-accuracy sweep, the statistical
// verifiers on their default grids, and deterministic CSV/JSONL emission.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apm/bridge.hpp"
#include "apm/extraction.hpp"
#include "apm/intents.hpp"
#include "apm/search.hpp"

#include "json.hpp"

namespace apm {

enum class ExperimentKind { plan_metrics, tree_metrics, accuracy_sweep, extraction_verify, adaptive_verify };
enum class WorldChoice { oracle, noisy, llm };
enum class AffordanceChoice { none, oracle, noisy, llm };

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::plan_metrics;
    TaskConfig task;                    // blocks, grid, threshold, online budget
    std::vector<std::uint64_t> seeds;   // empty -> default_seed_count derived seeds
    int default_seed_count = 4;
    WorldChoice world = WorldChoice::noisy;
    AffordanceChoice affordance = AffordanceChoice::oracle;
    SearchConfig search;
    NoisyWorldParams world_noise{0.3, 0};
    NoisyAffordanceParams affordance_noise{1.0, 1.0, 0.0, 0};
    std::uint64_t master_seed = 0;
    std::string output_dir = "out";
    EndpointConfig endpoint;            // used by llm selections
    std::string replay_path;            // non-empty: serve llm calls from transcript
    std::string record_path;            // non-empty: record live llm calls
    bool parallel = true;

    // Verifier knobs (extraction_verify / adaptive_verify experiments).
    int verify_seeds = 1000;
    long long verify_runs = 1000;
    double verify_eps = 0.05;
};

// One seeded online-planning run.  Search metrics are averaged per online
// step (documented aggregation window); model/affordance calls are totals
// over the run.  wall_time_ms is reported in a separate timing file so the
// primary outputs stay byte-deterministic.
struct RunRecord {
    std::string method;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    double mc_score_best = 0.0;  // max over steps of the per-search best return
    double mc_score_mean = 0.0;  // mean over steps
    double avg_leaf_score = 0.0;
    double avg_tree_score = 0.0;
    double avg_accumulated_reward = 0.0;
    double simulations_mean = 0.0;
    double model_calls_total = 0.0;
    double affordance_calls_total = 0.0;
    EvalReport eval;
    double wall_time_ms = 0.0;
};

struct MethodAggregate {
    std::string method;
    int seeds = 0;
    int completed = 0;
    double completed_rate = 0.0;
    double mc_best_mean = 0.0, mc_best_std = 0.0;
    double mc_mean_mean = 0.0, mc_mean_std = 0.0;
    double sims_mean = 0.0, sims_std = 0.0;
    double model_calls_mean = 0.0, model_calls_std = 0.0;
    double aff_calls_mean = 0.0, aff_calls_std = 0.0;
    double leaf_mean = 0.0, leaf_std = 0.0;
    double tree_mean = 0.0, tree_std = 0.0;
    double accum_mean = 0.0, accum_std = 0.0;
    double online_mean = 0.0, online_std = 0.0;
    double steps_mean_completed = 0.0;  // mean steps over completed runs
    std::string steps_display;          // ">B" when no run completed
};

struct TableReport {
    std::vector<RunRecord> records;
    MethodAggregate aggregate;
};

struct SweepPoint {
    double accuracy = 0.0;
    double mean_online_reward = 0.0;
    double success_rate = 0.0;
};

struct SweepReport {
    std::vector<SweepPoint> points;
    std::vector<RunRecord> records;  // per-point records, method tagged "acc=..."
};

auto method_name(WorldChoice world, AffordanceChoice affordance) -> std::string;
auto experiment_kind_name(ExperimentKind kind) -> std::string;

// Stable hash over the canonical JSON form of the config.
auto config_hash(const ExperimentConfig& cfg) -> std::uint64_t;
auto config_to_json(const ExperimentConfig& cfg) -> nlohmann::ordered_json;
// Applies the fields present in `doc` on top of `base` (unknown keys error).
auto config_from_json(const nlohmann::json& doc, ExperimentConfig base) -> ExperimentConfig;

// Seeds actually used by a run (explicit list, or derived from master_seed).
auto effective_seeds(const ExperimentConfig& cfg) -> std::vector<std::uint64_t>;

// Run one (world, affordance) method over all seeds and aggregate.
// llm selections fail fast (before consuming seeds) when the endpoint is
// unreachable and no replay transcript is given.
auto run_table_experiment(const ExperimentConfig& cfg) -> TableReport;

// Accuracy sweep with a perfect world model and seeded noisy affordances.
// The same task seeds and noise streams are reused at every accuracy point.
auto run_accuracy_sweep(std::span<const double> accuracies, const ExperimentConfig& cfg)
    -> SweepReport;

// Default verifier inputs.
auto default_extraction_grid() -> std::vector<AgentParams>;

struct BoundSuiteConfig {
    std::string label;
    IntentUniverse universe;
    int sequence_length = 1;
    std::vector<SequenceTask> tasks;
};

// Synthetic task families per (n, k, L) configuration: exact sequences
// (in-partial, out-of-partial, mixed), a prefix task, and a disjunction.
// Configurations keep k <= n/2.
auto default_bound_suites() -> std::vector<BoundSuiteConfig>;
auto make_task_suite(const IntentUniverse& universe, int sequence_length, int first_task_id)
    -> std::vector<SequenceTask>;

struct VerifierOutcome {
    bool all_pass = false;
    long long rows_written = 0;
};

// Run the selected verifiers on their default grids, appending one JSON line
// per grid point / configuration to `report_path`.  Returns pass status.
auto run_verifiers(bool extraction_bound, bool adaptive_bound, bool grid_cover,
                   const ExperimentConfig& cfg, const std::string& report_path)
    -> VerifierOutcome;

// Deterministic file emission.
void write_aggregate_csv(const std::string& path, std::span<const MethodAggregate> rows,
                         ExperimentKind kind, int budget);
void write_sweep_csv(const std::string& path, std::span<const SweepPoint> points, int seeds);
void write_records_jsonl(const std::string& path, std::span<const RunRecord> records);
void write_timings_jsonl(const std::string& path, std::span<const RunRecord> records);

// Fixed-format double rendering shared by all emitters.
auto format_double(double v) -> std::string;

}  // namespace apm
