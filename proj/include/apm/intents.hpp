// File: intents.hpp
// Description: Intent-sequence samplers over a universe of n intents with a
// k-intent known subset: full-uniform, partial-only, epsilon-corrected, and
// the adaptive mixture over a discrete epsilon grid.  Includes Las Vegas
// resampling, exact success probabilities by enumeration, and statistical
// verifiers for the adaptive sample-complexity bound and the epsilon-grid
// covering property it rests on.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/rng.hpp"

namespace apm {

// Universe of `total` intents (ids 0..total-1) with a known (partial) subset.
struct IntentUniverse {
    int total = 0;
    std::vector<int> partial_ids;  // sorted, unique, subset of [0, total)

    static auto first_k(int n, int k) -> IntentUniverse;
    auto partial_count() const -> int { return static_cast<int>(partial_ids.size()); }
    auto in_partial(int id) const -> bool;
    auto missing_ids() const -> std::vector<int>;  // complement, sorted
    void validate() const;
};

enum class SamplerMode { full, partial, corrected, adaptive };

struct SamplerParams {
    SamplerMode mode = SamplerMode::full;
    int sequence_length = 1;  // L
    double epsilon = 0.0;     // corrected mode only
};

// Per-intent sampling probability under the configured sampler.  In adaptive
// mode this is the epsilon-grid mixture marginal.
auto intent_prob(const IntentUniverse& u, int intent_id, const SamplerParams& p) -> double;

struct SampledSequence {
    std::vector<int> intents;
    int adaptive_m = -1;  // grid index drawn for this sequence (adaptive mode)
};

// Draw one i.i.d. length-L intent sequence.  Adaptive mode first draws
// m ~ U{0..2L+2} and then samples from the corrected law at eps = m/(2L+2).
auto sample_sequence(const IntentUniverse& u, const SamplerParams& p, Rng& rng)
    -> SampledSequence;

// A task succeeds or fails on a whole length-L sequence.
struct SequenceTask {
    int id = 0;
    std::string name;
    std::function<bool(std::span<const int>)> success;
};

struct LasVegasResult {
    bool solved = false;
    long long trials = 0;  // sequences drawn (equals max_trials when exhausted)
};

// Resample sequences until the task succeeds or max_trials is exhausted.
auto las_vegas_solve(const SequenceTask& task, const IntentUniverse& u,
                     const SamplerParams& p, Rng& rng, long long max_trials)
    -> LasVegasResult;

// Exact success probability by enumerating all n^L sequences.  Throws
// std::length_error when n^L exceeds the enumeration guard (1e7).
auto success_prob_exact(const SequenceTask& task, const IntentUniverse& u,
                        const SamplerParams& p) -> double;

struct EpsOptimum {
    double epsilon = 0.0;
    double success_prob = 0.0;
};

// Maximize the corrected-sampler success probability over an epsilon grid
// {i / resolution : i = 0..resolution}; ties keep the smallest epsilon.
auto optimal_eps(const SequenceTask& task, const IntentUniverse& u, int sequence_length,
                 int grid_resolution) -> EpsOptimum;

struct TaskBoundRecord {
    int task_id = 0;
    std::string name;
    double mean_trials = 0.0;      // adaptive Las Vegas mean over runs
    double ci_half_width = 0.0;    // 1.96 * standard error
    double best_eps = 0.0;         // corrected-sampler optimum
    double best_prob = 0.0;
    long long exhausted_runs = 0;  // runs that hit max_trials (should be 0)
};

struct AdaptiveBoundReport {
    std::vector<TaskBoundRecord> tasks;
    double total_mean_trials = 0.0;     // empirical N: sum of task means
    double total_upper_ci = 0.0;        // N plus combined 95% CI half-width
    double bound = 0.0;                 // e * (2L+3) * sum_i 1 / best_prob_i
    bool pass = false;                  // total_upper_ci <= bound
};

// Estimate the adaptive sampler's total expected trials over a task suite and
// compare against the e*(2L+3)*sum(1/p_i*) bound, where p_i* is the best
// corrected-sampler success probability for task i.  `parallel` selects the
// OpenMP kernel; the serial path is a reference implementation producing
// byte-identical statistics.
auto verify_adaptive_bound(std::span<const SequenceTask> tasks, const IntentUniverse& u,
                           int sequence_length, long long runs_per_task,
                           std::uint64_t seed, int grid_resolution = 1000,
                           bool parallel = true) -> AdaptiveBoundReport;

// Raw per-run trial counts for the adaptive sampler; exposed so tests can
// check the OpenMP kernel against the serial reference.  Output is indexed
// [task * runs_per_task + run]; a negative entry (-max_trials) marks a run
// that exhausted its trial budget without solving.
auto adaptive_trial_counts(std::span<const SequenceTask> tasks, const IntentUniverse& u,
                           int sequence_length, long long runs_per_task,
                           std::uint64_t seed, long long max_trials, bool parallel)
    -> std::vector<long long>;

// Exhaustively check the epsilon-grid covering property: for every epsilon*
// on a fine grid there exists m in {0..2L+2} such that, for every number of
// out-of-partial picks j in {0..L}, the corrected sequence probability at
// eps_m = m/(2L+2) is within a factor e of the one at epsilon*.
auto grid_cover_holds(int n, int k, int sequence_length, int eps_grid_resolution)
    -> bool;

}  // namespace apm
