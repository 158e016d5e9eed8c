// File: intents.cpp
// Description: Intent sampler implementations and statistical verifiers.
#include "apm/intents.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace apm {

namespace {

constexpr std::uint64_t kTrialStreamTag = 0x747269616cULL;  // "trial"
constexpr double kEnumerationGuard = 1e7;

auto grid_size(int sequence_length) -> int { return 2 * sequence_length + 3; }

auto grid_eps(int m, int sequence_length) -> double {
    return static_cast<double>(m) / static_cast<double>(2 * sequence_length + 2);
}

// Probability of one specific sequence containing `out_picks` intents outside
// the partial set under the corrected sampler.
auto corrected_sequence_prob(int n, int k, int sequence_length, int out_picks, double eps)
    -> double {
    const double in_term = (1.0 - eps) / static_cast<double>(k);
    const double out_term = eps / static_cast<double>(n - k);
    return std::pow(in_term, sequence_length - out_picks) * std::pow(out_term, out_picks);
}

void check_corrected_params(const IntentUniverse& u, double eps) {
    if (u.partial_count() == 0)
        throw std::invalid_argument("corrected sampler requires a non-empty partial set");
    if (!(eps >= 0.0 && eps <= 1.0))
        throw std::invalid_argument("epsilon must lie in [0, 1]");
    if (u.partial_count() == u.total && eps != 0.0)
        throw std::invalid_argument(
            "epsilon must be 0 when the partial set covers the whole universe");
}

// Enumerate all n^L sequences and count the successful ones, bucketed by the
// number of out-of-partial picks.  All sequence-level probabilities in play
// depend on a sequence only through that count.
auto success_counts_by_out(const SequenceTask& task, const IntentUniverse& u,
                           int sequence_length) -> std::vector<long long> {
    const int n = u.total;
    const int L = sequence_length;
    if (std::pow(static_cast<double>(n), static_cast<double>(L)) > kEnumerationGuard)
        throw std::length_error("n^L exceeds the exact-enumeration guard (1e7)");

    std::vector<bool> in_partial(static_cast<std::size_t>(n), false);
    for (int id : u.partial_ids) in_partial[static_cast<std::size_t>(id)] = true;

    std::vector<long long> counts(static_cast<std::size_t>(L) + 1, 0);
    std::vector<int> seq(static_cast<std::size_t>(L), 0);
    while (true) {
        int out_picks = 0;
        for (int id : seq)
            if (!in_partial[static_cast<std::size_t>(id)]) ++out_picks;
        if (task.success(seq)) ++counts[static_cast<std::size_t>(out_picks)];

        int pos = L - 1;
        while (pos >= 0 && seq[static_cast<std::size_t>(pos)] == n - 1) {
            seq[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++seq[static_cast<std::size_t>(pos)];
    }
    return counts;
}

auto corrected_prob_from_counts(std::span<const long long> counts, int n, int k,
                                int sequence_length, double eps) -> double {
    double p = 0.0;
    for (int j = 0; j <= sequence_length; ++j)
        p += static_cast<double>(counts[static_cast<std::size_t>(j)]) *
             corrected_sequence_prob(n, k, sequence_length, j, eps);
    return p;
}

}  // namespace

auto IntentUniverse::first_k(int n, int k) -> IntentUniverse {
    IntentUniverse u;
    u.total = n;
    for (int i = 0; i < k; ++i) u.partial_ids.push_back(i);
    u.validate();
    return u;
}

auto IntentUniverse::in_partial(int id) const -> bool {
    return std::binary_search(partial_ids.begin(), partial_ids.end(), id);
}

auto IntentUniverse::missing_ids() const -> std::vector<int> {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(total - partial_count()));
    for (int id = 0; id < total; ++id)
        if (!in_partial(id)) out.push_back(id);
    return out;
}

void IntentUniverse::validate() const {
    if (total < 1) throw std::invalid_argument("intent universe must be non-empty");
    if (!std::is_sorted(partial_ids.begin(), partial_ids.end()))
        throw std::invalid_argument("partial_ids must be sorted");
    if (std::adjacent_find(partial_ids.begin(), partial_ids.end()) != partial_ids.end())
        throw std::invalid_argument("partial_ids must be unique");
    if (!partial_ids.empty() && (partial_ids.front() < 0 || partial_ids.back() >= total))
        throw std::invalid_argument("partial_ids must lie in [0, total)");
}

auto intent_prob(const IntentUniverse& u, int intent_id, const SamplerParams& p) -> double {
    u.validate();
    if (intent_id < 0 || intent_id >= u.total)
        throw std::invalid_argument("intent_id out of range");
    const int n = u.total;
    const int k = u.partial_count();
    const bool in = u.in_partial(intent_id);
    switch (p.mode) {
        case SamplerMode::full:
            return 1.0 / static_cast<double>(n);
        case SamplerMode::partial:
            if (k == 0)
                throw std::invalid_argument("partial sampler requires a non-empty partial set");
            return in ? 1.0 / static_cast<double>(k) : 0.0;
        case SamplerMode::corrected:
            check_corrected_params(u, p.epsilon);
            return in ? (1.0 - p.epsilon) / static_cast<double>(k)
                      : p.epsilon / static_cast<double>(n - k);
        case SamplerMode::adaptive: {
            if (k == 0 || k >= n)
                throw std::invalid_argument(
                    "adaptive sampler requires a proper non-empty partial subset");
            const int M = grid_size(p.sequence_length);
            double total = 0.0;
            for (int m = 0; m < M; ++m) {
                const double eps = grid_eps(m, p.sequence_length);
                total += in ? (1.0 - eps) / static_cast<double>(k)
                            : eps / static_cast<double>(n - k);
            }
            return total / static_cast<double>(M);
        }
    }
    throw std::logic_error("unknown sampler mode");
}

auto sample_sequence(const IntentUniverse& u, const SamplerParams& p, Rng& rng)
    -> SampledSequence {
    const int n = u.total;
    const int k = u.partial_count();
    const int L = p.sequence_length;
    if (L < 1) throw std::invalid_argument("sequence_length must be at least 1");

    SampledSequence out;
    out.intents.reserve(static_cast<std::size_t>(L));

    double eps = 0.0;
    switch (p.mode) {
        case SamplerMode::full:
            for (int i = 0; i < L; ++i)
                out.intents.push_back(static_cast<int>(rng.next_below(
                    static_cast<std::uint64_t>(n))));
            return out;
        case SamplerMode::partial:
            if (k == 0)
                throw std::invalid_argument("partial sampler requires a non-empty partial set");
            for (int i = 0; i < L; ++i)
                out.intents.push_back(u.partial_ids[rng.next_below(
                    static_cast<std::uint64_t>(k))]);
            return out;
        case SamplerMode::corrected:
            check_corrected_params(u, p.epsilon);
            eps = p.epsilon;
            break;
        case SamplerMode::adaptive: {
            if (k == 0 || k >= n)
                throw std::invalid_argument(
                    "adaptive sampler requires a proper non-empty partial subset");
            out.adaptive_m = rng.next_int(0, grid_size(L) - 1);
            eps = grid_eps(out.adaptive_m, L);
            break;
        }
    }

    const auto missing = u.missing_ids();
    for (int i = 0; i < L; ++i) {
        if (rng.next_double() < 1.0 - eps) {
            out.intents.push_back(u.partial_ids[rng.next_below(
                static_cast<std::uint64_t>(k))]);
        } else {
            out.intents.push_back(missing[rng.next_below(missing.size())]);
        }
    }
    return out;
}

auto las_vegas_solve(const SequenceTask& task, const IntentUniverse& u,
                     const SamplerParams& p, Rng& rng, long long max_trials)
    -> LasVegasResult {
    for (long long t = 1; t <= max_trials; ++t) {
        const auto seq = sample_sequence(u, p, rng);
        if (task.success(seq.intents)) return {true, t};
    }
    return {false, max_trials};
}

auto success_prob_exact(const SequenceTask& task, const IntentUniverse& u,
                        const SamplerParams& p) -> double {
    u.validate();
    const int n = u.total;
    const int k = u.partial_count();
    const int L = p.sequence_length;
    const auto counts = success_counts_by_out(task, u, L);

    switch (p.mode) {
        case SamplerMode::full: {
            double total = 0.0;
            for (const auto c : counts) total += static_cast<double>(c);
            return total * std::pow(static_cast<double>(n), -static_cast<double>(L));
        }
        case SamplerMode::partial:
            if (k == 0)
                throw std::invalid_argument("partial sampler requires a non-empty partial set");
            return static_cast<double>(counts[0]) *
                   std::pow(static_cast<double>(k), -static_cast<double>(L));
        case SamplerMode::corrected:
            check_corrected_params(u, p.epsilon);
            if (k == n) {
                // eps is forced to 0: only the all-in-partial bucket has mass.
                return static_cast<double>(counts[0]) *
                       std::pow(static_cast<double>(k), -static_cast<double>(L));
            }
            return corrected_prob_from_counts(counts, n, k, L, p.epsilon);
        case SamplerMode::adaptive: {
            if (k == 0 || k >= n)
                throw std::invalid_argument(
                    "adaptive sampler requires a proper non-empty partial subset");
            const int M = grid_size(L);
            double total = 0.0;
            for (int m = 0; m < M; ++m)
                total += corrected_prob_from_counts(counts, n, k, L, grid_eps(m, L));
            return total / static_cast<double>(M);
        }
    }
    throw std::logic_error("unknown sampler mode");
}

auto optimal_eps(const SequenceTask& task, const IntentUniverse& u, int sequence_length,
                 int grid_resolution) -> EpsOptimum {
    u.validate();
    if (grid_resolution < 1) throw std::invalid_argument("grid_resolution must be positive");
    const int n = u.total;
    const int k = u.partial_count();
    if (k == 0)
        throw std::invalid_argument("corrected sampler requires a non-empty partial set");
    const auto counts = success_counts_by_out(task, u, sequence_length);

    EpsOptimum best{0.0, -1.0};
    const int top = (k == n) ? 0 : grid_resolution;  // k == n admits only eps = 0
    for (int i = 0; i <= top; ++i) {
        const double eps = static_cast<double>(i) / static_cast<double>(grid_resolution);
        const double prob =
            (k == n) ? static_cast<double>(counts[0]) *
                           std::pow(static_cast<double>(k), -static_cast<double>(sequence_length))
                     : corrected_prob_from_counts(counts, n, k, sequence_length, eps);
        if (prob > best.success_prob) best = {eps, prob};
    }
    return best;
}

auto adaptive_trial_counts(std::span<const SequenceTask> tasks, const IntentUniverse& u,
                           int sequence_length, long long runs_per_task,
                           std::uint64_t seed, long long max_trials, bool parallel)
    -> std::vector<long long> {
    const auto total = static_cast<long long>(tasks.size()) * runs_per_task;
    std::vector<long long> out(static_cast<std::size_t>(total), 0);

    const SamplerParams params{SamplerMode::adaptive, sequence_length, 0.0};
    auto body = [&](long long idx) {
        const auto task_idx = static_cast<std::size_t>(idx / runs_per_task);
        const auto run = static_cast<std::uint64_t>(idx % runs_per_task);
        Rng rng(derive_seed({kTrialStreamTag, seed,
                             static_cast<std::uint64_t>(tasks[task_idx].id), run}));
        const auto res = las_vegas_solve(tasks[task_idx], u, params, rng, max_trials);
        out[static_cast<std::size_t>(idx)] = res.solved ? res.trials : -max_trials;
    };

    if (parallel) {
#pragma omp parallel for schedule(dynamic, 64)
        for (long long idx = 0; idx < total; ++idx) body(idx);
    } else {
        for (long long idx = 0; idx < total; ++idx) body(idx);
    }
    return out;
}

auto verify_adaptive_bound(std::span<const SequenceTask> tasks, const IntentUniverse& u,
                           int sequence_length, long long runs_per_task,
                           std::uint64_t seed, int grid_resolution, bool parallel)
    -> AdaptiveBoundReport {
    u.validate();
    if (tasks.empty()) throw std::invalid_argument("task suite is empty");
    if (runs_per_task < 2) throw std::invalid_argument("need at least 2 runs per task");

    AdaptiveBoundReport report;
    const int M = grid_size(sequence_length);

    std::vector<EpsOptimum> optima;
    optima.reserve(tasks.size());
    double min_prob = 1.0;
    for (const auto& task : tasks) {
        auto best = optimal_eps(task, u, sequence_length, grid_resolution);
        if (!(best.success_prob > 0.0))
            throw std::invalid_argument("task '" + task.name +
                                        "' is unsolvable under every corrected sampler");
        min_prob = std::min(min_prob, best.success_prob);
        optima.push_back(best);
    }

    // The adaptive per-trial success probability is at least
    // best_prob / (e * (2L+3)); this budget makes exhaustion probability
    // at most exp(-60) per run.
    const double worst_mean = std::numbers::e * static_cast<double>(M) / min_prob;
    const auto max_trials = static_cast<long long>(std::ceil(60.0 * worst_mean));

    const auto counts = adaptive_trial_counts(tasks, u, sequence_length, runs_per_task,
                                              seed, max_trials, parallel);

    double ci_var_sum = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        TaskBoundRecord rec;
        rec.task_id = tasks[t].id;
        rec.name = tasks[t].name;
        rec.best_eps = optima[t].epsilon;
        rec.best_prob = optima[t].success_prob;

        double sum = 0.0;
        double sumsq = 0.0;
        for (long long r = 0; r < runs_per_task; ++r) {
            long long trials = counts[t * static_cast<std::size_t>(runs_per_task) +
                                      static_cast<std::size_t>(r)];
            if (trials < 0) {
                ++rec.exhausted_runs;
                trials = -trials;
            }
            sum += static_cast<double>(trials);
            sumsq += static_cast<double>(trials) * static_cast<double>(trials);
        }
        const double nruns = static_cast<double>(runs_per_task);
        rec.mean_trials = sum / nruns;
        const double var =
            std::max(0.0, (sumsq - sum * sum / nruns) / (nruns - 1.0));
        rec.ci_half_width = 1.96 * std::sqrt(var / nruns);

        report.total_mean_trials += rec.mean_trials;
        ci_var_sum += var / nruns;
        report.bound += std::numbers::e * static_cast<double>(M) / rec.best_prob;
        report.tasks.push_back(std::move(rec));
    }

    report.total_upper_ci = report.total_mean_trials + 1.96 * std::sqrt(ci_var_sum);
    report.pass = report.total_upper_ci <= report.bound;
    return report;
}

auto grid_cover_holds(int n, int k, int sequence_length, int eps_grid_resolution) -> bool {
    if (!(0 < k && k < n)) throw std::invalid_argument("need 0 < k < n");
    if (sequence_length < 1) throw std::invalid_argument("sequence_length must be >= 1");
    if (eps_grid_resolution < 1) throw std::invalid_argument("resolution must be >= 1");

    const int L = sequence_length;
    const int M = grid_size(L);
    // Relative slack for floating-point rounding; the mathematical claim is a
    // clean factor-e bound.
    const double factor = std::numbers::e * (1.0 + 1e-12);

    for (int i = 0; i <= eps_grid_resolution; ++i) {
        const double eps_star =
            static_cast<double>(i) / static_cast<double>(eps_grid_resolution);
        bool covered = false;
        for (int m = 0; m < M && !covered; ++m) {
            const double eps_m = grid_eps(m, L);
            bool ok = true;
            for (int j = 0; j <= L && ok; ++j) {
                const double target = corrected_sequence_prob(n, k, L, j, eps_star);
                const double have = corrected_sequence_prob(n, k, L, j, eps_m);
                if (target > have * factor) ok = false;
            }
            covered = ok;
        }
        if (!covered) return false;
    }
    return true;
}

}  // namespace apm
