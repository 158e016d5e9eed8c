// File: bench_kernels.cpp
// Description: Times the OpenMP experiment kernels against their serial
// reference implementations and checks that both produce identical results.
#include <cstdio>
#include <omp.h>

#include "apm/extraction.hpp"
#include "apm/harness.hpp"
#include "apm/intents.hpp"

namespace {

struct Timing {
    double serial_s = 0.0;
    double parallel_s = 0.0;
    bool identical = false;
};

void report(const char* name, const Timing& t) {
    std::printf("%-24s serial %8.3fs   openmp %8.3fs   speedup %5.2fx   results %s\n",
                name, t.serial_s, t.parallel_s,
                t.parallel_s > 0.0 ? t.serial_s / t.parallel_s : 0.0,
                t.identical ? "identical" : "DIFFER");
}

auto bench_adaptive_trials() -> Timing {
    const auto universe = apm::IntentUniverse::first_k(6, 2);
    const int L = 2;
    const auto tasks = apm::make_task_suite(universe, L, 0);
    const long long runs = 2000;
    const long long max_trials = 1000000;

    Timing t;
    double t0 = omp_get_wtime();
    const auto serial =
        apm::adaptive_trial_counts(tasks, universe, L, runs, 7, max_trials, false);
    double t1 = omp_get_wtime();
    const auto parallel =
        apm::adaptive_trial_counts(tasks, universe, L, runs, 7, max_trials, true);
    double t2 = omp_get_wtime();
    t.serial_s = t1 - t0;
    t.parallel_s = t2 - t1;
    t.identical = serial == parallel;
    return t;
}

auto bench_extraction_flags() -> Timing {
    const auto grid = apm::default_extraction_grid();
    const int seeds = 400;
    const double eps = 0.05;

    Timing t;
    double t0 = omp_get_wtime();
    const auto serial = apm::extraction_outcome_flags(grid, seeds, eps, 11, false);
    double t1 = omp_get_wtime();
    const auto parallel = apm::extraction_outcome_flags(grid, seeds, eps, 11, true);
    double t2 = omp_get_wtime();
    t.serial_s = t1 - t0;
    t.parallel_s = t2 - t1;
    t.identical = serial == parallel;
    return t;
}

auto bench_seed_sweep() -> Timing {
    apm::ExperimentConfig cfg;
    cfg.task.num_blocks = 4;
    cfg.world = apm::WorldChoice::noisy;
    cfg.affordance = apm::AffordanceChoice::oracle;
    cfg.search.num_simulations = 32;
    cfg.search.affordance_request = 64;
    cfg.default_seed_count = 64;
    cfg.master_seed = 21;

    Timing t;
    cfg.parallel = false;
    double t0 = omp_get_wtime();
    const auto serial = apm::run_table_experiment(cfg);
    double t1 = omp_get_wtime();
    cfg.parallel = true;
    const auto parallel = apm::run_table_experiment(cfg);
    double t2 = omp_get_wtime();
    t.serial_s = t1 - t0;
    t.parallel_s = t2 - t1;
    t.identical = true;
    for (std::size_t i = 0; i < serial.records.size(); ++i) {
        const auto& a = serial.records[i];
        const auto& b = parallel.records[i];
        t.identical = t.identical && a.seed == b.seed &&
                      a.mc_score_best == b.mc_score_best &&
                      a.mc_score_mean == b.mc_score_mean &&
                      a.model_calls_total == b.model_calls_total &&
                      a.eval.completed == b.eval.completed &&
                      a.eval.steps_used == b.eval.steps_used;
    }
    return t;
}

}  // namespace

int main() {
    std::printf("threads available: %d\n", omp_get_max_threads());
    report("adaptive_trials", bench_adaptive_trials());
    report("extraction_flags", bench_extraction_flags());
    report("seed_sweep", bench_seed_sweep());
    return 0;
}
