// File: extraction.hpp
// Description: Constructive extraction of an agent's internal binomial world
// model from its answers to threshold queries.  A simulated agent with
// optional indifference band (zeta) and violation rate (delta) answers
// "at most k" vs "more than k" questions; fitting a step function to the
// answer curve recovers the success parameter p up to a quantified deviation,
// and a statistical verifier checks the deviation-frequency bound.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apm/rng.hpp"

namespace apm {

// pmf/cdf table for Binomial(n, p); stable iterative computation.
struct BinomTable {
    int n = 0;
    double p = 0.0;
    std::vector<double> pmf;  // index k = 0..n
    std::vector<double> cdf;
};

auto binom_table(int n, double p) -> BinomTable;

struct BinomPoint {
    double pmf = 0.0;
    double cdf = 0.0;
};

auto binom_pmf_cdf(int n, int k, double p) -> BinomPoint;

// Smallest k with cdf(k) >= 1/2.
auto binom_median(const BinomTable& table) -> int;

// How a zeta-rational agent resolves queries inside its indifference band.
// `median_rule` answers by comparing cdf(k) to 1/2; the band_* policies are
// adversarial-but-compliant: they give a fixed answer whenever k lies in the
// band |2 cdf(k) - 1| <= zeta.
enum class BandPolicy { median_rule, band_low, band_high };

struct AgentParams {
    int depth_n = 100;     // number of latent trials n
    double p_true = 0.5;   // latent success parameter
    double zeta = 0.0;     // indifference band half-width (0 = strict)
    double delta = 0.0;    // per-query violation probability (< 1/2)
    BandPolicy policy = BandPolicy::median_rule;
};

enum class AgentChoice { at_most_k, more_than_k };

// Answer one query "is the count at most k, or more than k?".  Compliant
// answers compare P(X <= k) with P(X > k) (up to the zeta band); with
// probability delta the answer is flipped.
auto agent_respond(int k, const AgentParams& params, const BinomTable& table, Rng& rng)
    -> AgentChoice;

// Query k = 1..n and encode answers as f(k): 0 for at_most_k, 1 for
// more_than_k.  With delta = 0 this is the exact step 1{k < median}.
auto collect_indicators(const AgentParams& params, Rng& rng) -> std::vector<int>;

// Fit the best step-function threshold k_hat in {0..n} to an answer curve f
// (indexed from k = 1), minimizing the misfit
//   E(k_hat) = sum_{k < k_hat} (1 - f(k)) + sum_{k >= k_hat} f(k),
// breaking ties toward the smallest k_hat.
auto fit_step(std::span<const int> f, int n) -> int;

struct ExtractionResult {
    int k_hat = 0;
    double p_hat = 0.0;   // k_hat / n
    double phi = 0.0;     // deterministic deviation radius
    double rho = 0.0;     // 2 sqrt(delta (1 - delta))
    std::vector<int> indicator_curve;
};

// Full pipeline: query the agent, fit the step, report the estimate and the
// deviation radii phi = (1/2) sqrt((1+zeta)/(n (1-zeta))) and rho.
auto extract(const AgentParams& params, Rng& rng) -> ExtractionResult;

// Tail bound on P(|p_hat - p| >= phi + eps): rho^(n eps) / (1 - rho),
// clamped into [0, 1].  Requires delta < 1/2 and eps > 0.
auto bound_tail(int n, double zeta, double delta, double eps) -> double;

struct ExtractionPoint {
    AgentParams params;
    double eps = 0.0;
    int seeds = 0;
    long long violations = 0;       // |p_hat - p| >= phi + eps
    double frequency = 0.0;
    double bound = 0.0;
    double slack = 0.0;             // 3 sigma sampling slack on the bound
    bool pass = false;
    long long bracket_violations = 0;  // delta=0, zeta=0 only: |k_hat - np| > 1
};

struct ExtractionReport {
    std::vector<ExtractionPoint> points;
    bool all_pass = false;
};

// Monte Carlo check of the deviation bound over a parameter grid.  For every
// grid point with zeta > 0 a band-adversarial variant (band_low) is also
// checked.  `parallel` selects the OpenMP kernel; the serial path is a
// byte-identical reference.
auto verify_extraction_bound(std::span<const AgentParams> grid, int seeds_per_point,
                             double eps, std::uint64_t master_seed, bool parallel = true)
    -> ExtractionReport;

// Raw per-(point, seed) outcome flags (bit 0: deviation violation, bit 1:
// median-bracket violation); exposed for OpenMP-vs-serial equality tests.
auto extraction_outcome_flags(std::span<const AgentParams> grid, int seeds_per_point,
                              double eps, std::uint64_t master_seed, bool parallel)
    -> std::vector<unsigned char>;

}  // namespace apm
