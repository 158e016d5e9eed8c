// File: extraction.cpp
// Description: Binomial agent probing, step fitting, and bound verification.
#include "apm/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apm {

namespace {

constexpr std::uint64_t kExtractStreamTag = 0x65787472ULL;  // "extr"

void check_agent_params(const AgentParams& p) {
    if (p.depth_n < 1) throw std::invalid_argument("depth_n must be at least 1");
    if (!(p.p_true >= 0.0 && p.p_true <= 1.0))
        throw std::invalid_argument("p_true must lie in [0, 1]");
    if (!(p.zeta >= 0.0 && p.zeta < 1.0))
        throw std::invalid_argument("zeta must lie in [0, 1)");
    if (!(p.delta >= 0.0 && p.delta < 0.5))
        throw std::invalid_argument("delta must lie in [0, 1/2)");
}

}  // namespace

auto binom_table(int n, double p) -> BinomTable {
    if (n < 0) throw std::invalid_argument("n must be non-negative");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");

    BinomTable t;
    t.n = n;
    t.p = p;
    t.pmf.resize(static_cast<std::size_t>(n) + 1, 0.0);
    t.cdf.resize(static_cast<std::size_t>(n) + 1, 0.0);

    // Per-entry evaluation: exact binomial coefficients (updated
    // multiplicatively) times powers.  Exact for small n and within a few ulp
    // for the n used here; entries that underflow are genuinely negligible.
    double coeff = 1.0;
    for (int k = 0; k <= n; ++k) {
        if (k > 0) coeff = coeff * static_cast<double>(n - k + 1) / static_cast<double>(k);
        t.pmf[static_cast<std::size_t>(k)] =
            coeff * std::pow(p, k) * std::pow(1.0 - p, n - k);
    }
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        acc += t.pmf[static_cast<std::size_t>(k)];
        t.cdf[static_cast<std::size_t>(k)] = std::min(acc, 1.0);
    }
    return t;
}

auto binom_pmf_cdf(int n, int k, double p) -> BinomPoint {
    if (k < 0 || k > n) throw std::invalid_argument("k must lie in [0, n]");
    const auto t = binom_table(n, p);
    return {t.pmf[static_cast<std::size_t>(k)], t.cdf[static_cast<std::size_t>(k)]};
}

auto binom_median(const BinomTable& table) -> int {
    for (int k = 0; k <= table.n; ++k)
        if (table.cdf[static_cast<std::size_t>(k)] >= 0.5) return k;
    return table.n;
}

auto agent_respond(int k, const AgentParams& params, const BinomTable& table, Rng& rng)
    -> AgentChoice {
    check_agent_params(params);
    if (k < 0 || k > table.n) throw std::invalid_argument("query k out of range");

    const double centered = 2.0 * table.cdf[static_cast<std::size_t>(k)] - 1.0;
    AgentChoice compliant;
    if (std::abs(centered) <= params.zeta) {
        switch (params.policy) {
            case BandPolicy::median_rule:
                compliant = centered >= 0.0 ? AgentChoice::at_most_k : AgentChoice::more_than_k;
                break;
            case BandPolicy::band_low:
                compliant = AgentChoice::at_most_k;
                break;
            case BandPolicy::band_high:
                compliant = AgentChoice::more_than_k;
                break;
        }
    } else {
        compliant = centered > 0.0 ? AgentChoice::at_most_k : AgentChoice::more_than_k;
    }

    if (params.delta > 0.0 && rng.bernoulli(params.delta)) {
        return compliant == AgentChoice::at_most_k ? AgentChoice::more_than_k
                                                   : AgentChoice::at_most_k;
    }
    return compliant;
}

auto collect_indicators(const AgentParams& params, Rng& rng) -> std::vector<int> {
    check_agent_params(params);
    const auto table = binom_table(params.depth_n, params.p_true);
    std::vector<int> f;
    f.reserve(static_cast<std::size_t>(params.depth_n));
    for (int k = 1; k <= params.depth_n; ++k)
        f.push_back(agent_respond(k, params, table, rng) == AgentChoice::more_than_k ? 1 : 0);
    return f;
}

auto fit_step(std::span<const int> f, int n) -> int {
    if (static_cast<int>(f.size()) != n)
        throw std::invalid_argument("indicator curve must have length n");
    // prefix[i] = sum of f over queries k = 1..i
    std::vector<int> prefix(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i)
        prefix[static_cast<std::size_t>(i)] =
            prefix[static_cast<std::size_t>(i) - 1] + f[static_cast<std::size_t>(i) - 1];

    int best_k = 0;
    int best_err = prefix[static_cast<std::size_t>(n)];  // E(0): predict all zeros
    for (int k_hat = 1; k_hat <= n; ++k_hat) {
        const int below = k_hat - 1;  // queries k < k_hat
        const int ones_below = prefix[static_cast<std::size_t>(below)];
        const int err = (below - ones_below) +
                        (prefix[static_cast<std::size_t>(n)] - ones_below);
        if (err < best_err) {
            best_err = err;
            best_k = k_hat;
        }
    }
    return best_k;
}

auto extract(const AgentParams& params, Rng& rng) -> ExtractionResult {
    check_agent_params(params);
    ExtractionResult res;
    res.indicator_curve = collect_indicators(params, rng);
    res.k_hat = fit_step(res.indicator_curve, params.depth_n);
    res.p_hat = static_cast<double>(res.k_hat) / static_cast<double>(params.depth_n);
    res.phi = 0.5 * std::sqrt((1.0 + params.zeta) /
                              (static_cast<double>(params.depth_n) * (1.0 - params.zeta)));
    res.rho = 2.0 * std::sqrt(params.delta * (1.0 - params.delta));
    return res;
}

auto bound_tail(int n, double /*zeta*/, double delta, double eps) -> double {
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (!(delta >= 0.0 && delta < 0.5))
        throw std::invalid_argument("delta must lie in [0, 1/2)");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const double rho = 2.0 * std::sqrt(delta * (1.0 - delta));
    if (rho == 0.0) return 0.0;
    const double raw = std::pow(rho, static_cast<double>(n) * eps) / (1.0 - rho);
    return std::clamp(raw, 0.0, 1.0);
}

auto extraction_outcome_flags(std::span<const AgentParams> grid, int seeds_per_point,
                              double eps, std::uint64_t master_seed, bool parallel)
    -> std::vector<unsigned char> {
    const auto total = static_cast<long long>(grid.size()) * seeds_per_point;
    std::vector<unsigned char> out(static_cast<std::size_t>(total), 0);

    auto body = [&](long long idx) {
        const auto pt = static_cast<std::size_t>(idx / seeds_per_point);
        const auto seed_idx = static_cast<std::uint64_t>(idx % seeds_per_point);
        const auto& params = grid[pt];
        Rng rng(derive_seed({kExtractStreamTag, master_seed,
                             static_cast<std::uint64_t>(pt), seed_idx}));
        const auto res = extract(params, rng);
        unsigned char flag = 0;
        if (std::abs(res.p_hat - params.p_true) >= res.phi + eps) flag |= 1u;
        if (params.delta == 0.0 && params.zeta == 0.0) {
            const double np = static_cast<double>(params.depth_n) * params.p_true;
            if (std::abs(static_cast<double>(res.k_hat) - np) > 1.0 + 1e-9) flag |= 2u;
        }
        out[static_cast<std::size_t>(idx)] = flag;
    };

    if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (long long idx = 0; idx < total; ++idx) body(idx);
    } else {
        for (long long idx = 0; idx < total; ++idx) body(idx);
    }
    return out;
}

auto verify_extraction_bound(std::span<const AgentParams> grid, int seeds_per_point,
                             double eps, std::uint64_t master_seed, bool parallel)
    -> ExtractionReport {
    if (grid.empty()) throw std::invalid_argument("parameter grid is empty");
    if (seeds_per_point < 1) throw std::invalid_argument("need at least one seed per point");

    // Band-adversarial variants: every zeta > 0 point is additionally checked
    // with the band_low policy, which pushes k_hat as low as compliance allows.
    std::vector<AgentParams> expanded;
    for (const auto& p : grid) {
        expanded.push_back(p);
        if (p.zeta > 0.0) {
            AgentParams adv = p;
            adv.policy = BandPolicy::band_low;
            expanded.push_back(adv);
        }
    }

    const auto flags =
        extraction_outcome_flags(expanded, seeds_per_point, eps, master_seed, parallel);

    ExtractionReport report;
    report.all_pass = true;
    for (std::size_t pt = 0; pt < expanded.size(); ++pt) {
        ExtractionPoint point;
        point.params = expanded[pt];
        point.eps = eps;
        point.seeds = seeds_per_point;
        for (int s = 0; s < seeds_per_point; ++s) {
            const auto flag =
                flags[pt * static_cast<std::size_t>(seeds_per_point) + static_cast<std::size_t>(s)];
            if (flag & 1u) ++point.violations;
            if (flag & 2u) ++point.bracket_violations;
        }
        point.frequency =
            static_cast<double>(point.violations) / static_cast<double>(seeds_per_point);
        point.bound = bound_tail(point.params.depth_n, point.params.zeta,
                                 point.params.delta, eps);
        point.slack = 3.0 * std::sqrt(point.bound * (1.0 - point.bound) /
                                      static_cast<double>(seeds_per_point));
        point.pass = point.frequency <= point.bound + point.slack &&
                     point.bracket_violations == 0;
        report.all_pass = report.all_pass && point.pass;
        report.points.push_back(std::move(point));
    }
    return report;
}

}  // namespace apm
