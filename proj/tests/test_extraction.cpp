// File: test_extraction.cpp
// Description: Unit tests for world-model extraction: binomial tables against
// exact rational arithmetic, the simulated threshold-query agent, step-fit
// recovery of the latent parameter, deviation radii and tail bound, and the
// Monte Carlo bound verifier with its OpenMP/serial equivalence.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "apm/extraction.hpp"
#include "oracles.hpp"

using namespace apm;
using testo::Rat;

TEST_CASE("binomial tables match exact rational arithmetic") {
    for (const int n : {1, 7, 20}) {
        for (const int tenth : {1, 5, 9}) {
            const double p = tenth / 10.0;
            const Rat pr(tenth, 10);
            const auto table = binom_table(n, p);
            REQUIRE(table.pmf.size() == static_cast<std::size_t>(n) + 1);
            for (int k = 0; k <= n; ++k) {
                const double pmf = testo::to_double(testo::exact_binom_pmf(n, k, pr));
                const double cdf = testo::to_double(testo::exact_binom_cdf(n, k, pr));
                CHECK(std::abs(table.pmf[static_cast<std::size_t>(k)] - pmf) <= 1e-12);
                CHECK(std::abs(table.cdf[static_cast<std::size_t>(k)] - cdf) <= 1e-12);
                const auto pt = binom_pmf_cdf(n, k, p);
                CHECK(pt.pmf == doctest::Approx(pmf).epsilon(1e-12));
                CHECK(pt.cdf == doctest::Approx(cdf).epsilon(1e-12));
            }
            CHECK(table.cdf[static_cast<std::size_t>(n)] == doctest::Approx(1.0));
        }
    }
    // Degenerate parameters.
    const auto zero = binom_table(4, 0.0);
    CHECK(zero.pmf[0] == doctest::Approx(1.0));
    CHECK(zero.cdf[0] == doctest::Approx(1.0));
    const auto one = binom_table(4, 1.0);
    CHECK(one.pmf[4] == doctest::Approx(1.0));
    CHECK(one.cdf[3] == doctest::Approx(0.0));

    CHECK_THROWS_AS(binom_table(-1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(binom_table(4, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(binom_pmf_cdf(4, 5, 0.5), std::invalid_argument);
}

TEST_CASE("binomial median matches the exact rational definition") {
    for (const int n : {1, 3, 10, 50, 200}) {
        for (const int tenth : {1, 2, 3, 4, 5, 6, 7, 8, 9}) {
            const double p = tenth / 10.0;
            const auto table = binom_table(n, p);
            const int med = binom_median(table);
            CHECK(med == testo::exact_binom_median(n, Rat(tenth, 10)));
            // A binomial median always sits within one of the mean.
            CHECK(std::abs(med - n * p) <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("strict agents answer by the median rule") {
    AgentParams params;
    params.depth_n = 30;
    params.p_true = 0.4;
    const auto table = binom_table(params.depth_n, params.p_true);
    Rng rng(5);
    for (int k = 0; k <= params.depth_n; ++k) {
        const auto ans = agent_respond(k, params, table, rng);
        const bool at_most = 2.0 * table.cdf[static_cast<std::size_t>(k)] - 1.0 >= 0.0;
        CHECK((ans == AgentChoice::at_most_k) == at_most);
    }
    CHECK_THROWS_AS(agent_respond(31, params, table, rng), std::invalid_argument);
}

TEST_CASE("band policies only bend answers inside the indifference band") {
    AgentParams params;
    params.depth_n = 40;
    params.p_true = 0.5;
    params.zeta = 0.3;
    const auto table = binom_table(params.depth_n, params.p_true);
    Rng rng(6);

    for (int k = 0; k <= params.depth_n; ++k) {
        const double centered = 2.0 * table.cdf[static_cast<std::size_t>(k)] - 1.0;
        params.policy = BandPolicy::band_low;
        const auto low = agent_respond(k, params, table, rng);
        params.policy = BandPolicy::band_high;
        const auto high = agent_respond(k, params, table, rng);
        params.policy = BandPolicy::median_rule;
        const auto med = agent_respond(k, params, table, rng);

        if (std::abs(centered) <= params.zeta) {
            // Band policies commit to a fixed answer inside the band; "low"
            // answers at-most (dragging the fitted threshold down), "high"
            // answers more-than (dragging it up).
            CHECK(low == AgentChoice::at_most_k);
            CHECK(high == AgentChoice::more_than_k);
        } else {
            // Outside the band everyone answers compliantly.
            CHECK(low == med);
            CHECK(high == med);
            CHECK((med == AgentChoice::at_most_k) == (centered >= 0.0));
        }
    }
}

TEST_CASE("indicator curves are the exact step when delta is zero") {
    AgentParams params;
    params.depth_n = 25;
    params.p_true = 0.3;
    Rng rng(9);
    const auto f = collect_indicators(params, rng);
    REQUIRE(f.size() == 25);
    const int med = binom_median(binom_table(25, 0.3));
    for (int k = 1; k <= 25; ++k)
        CHECK(f[static_cast<std::size_t>(k - 1)] == (k < med ? 1 : 0));
}

TEST_CASE("noisy indicator curves are reproducible and pinned") {
    AgentParams params;
    params.depth_n = 12;
    params.p_true = 0.5;
    params.delta = 0.3;
    Rng rng(7);
    const auto f = collect_indicators(params, rng);
    CHECK(f == std::vector<int>{1, 1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0});
    Rng rng2(7);
    CHECK(collect_indicators(params, rng2) == f);
}

TEST_CASE("step fitting matches the brute-force reference") {
    // Hand-checked examples first.
    CHECK(fit_step(std::vector<int>{1, 1, 1, 0, 0, 0}, 6) == 4);  // perfect step
    CHECK(fit_step(std::vector<int>{1, 0, 1, 0, 0, 0}, 6) == 2);  // one flip
    CHECK(fit_step(std::vector<int>{0, 0, 0, 0}, 4) == 0);        // all at-most
    CHECK(fit_step(std::vector<int>{1, 1, 1, 1}, 4) == 4);        // all more-than

    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_below(30));
        std::vector<int> f(static_cast<std::size_t>(n));
        for (auto& v : f) v = static_cast<int>(rng.next_below(2));
        CHECK(fit_step(f, n) == testo::brute_fit_step(f, n));
    }

    CHECK_THROWS_AS(fit_step(std::vector<int>{1, 0}, 3), std::invalid_argument);
}

TEST_CASE("extraction recovers the parameter and reports the radii") {
    AgentParams params;
    params.depth_n = 100;
    params.p_true = 0.3;
    Rng rng(11);
    const auto res = extract(params, rng);

    // Strict agent: the fitted threshold brackets the mean by at most one.
    CHECK(std::abs(res.k_hat - 30.0) <= 1.0 + 1e-9);
    CHECK(res.p_hat == doctest::Approx(res.k_hat / 100.0));
    CHECK(res.phi == doctest::Approx(0.05));  // (1/2) sqrt(1/100)
    CHECK(res.rho == doctest::Approx(0.0));
    CHECK(res.indicator_curve.size() == 100);
    CHECK(std::abs(res.p_hat - params.p_true) < res.phi + 1e-9);

    params.zeta = 0.1;
    params.delta = 0.3;
    Rng rng2(11);
    const auto noisy = extract(params, rng2);
    CHECK(noisy.phi ==
          doctest::Approx(0.5 * std::sqrt((1.0 + 0.1) / (100.0 * (1.0 - 0.1)))));
    CHECK(noisy.rho == doctest::Approx(2.0 * std::sqrt(0.3 * 0.7)));
}

TEST_CASE("tail bound formula, clamping, and argument checks") {
    // delta = 0 gives rho = 0: deviation beyond phi is impossible.
    CHECK(bound_tail(100, 0.0, 0.0, 0.05) == doctest::Approx(0.0));

    // Closed form for moderate parameters.
    const double rho = 2.0 * std::sqrt(0.1 * 0.9);
    CHECK(bound_tail(200, 0.0, 0.1, 0.05) ==
          doctest::Approx(std::pow(rho, 200 * 0.05) / (1.0 - rho)).epsilon(1e-12));

    // The bound ignores zeta entirely.
    CHECK(bound_tail(200, 0.0, 0.1, 0.05) == doctest::Approx(bound_tail(200, 0.4, 0.1, 0.05)));

    // Monotone: larger n or eps shrink the tail.
    CHECK(bound_tail(300, 0.0, 0.1, 0.05) < bound_tail(200, 0.0, 0.1, 0.05));
    CHECK(bound_tail(200, 0.0, 0.1, 0.10) < bound_tail(200, 0.0, 0.1, 0.05));

    // Clamped into [0, 1] even when the raw expression explodes.
    const double big_rho_bound = bound_tail(2, 0.0, 0.49, 0.01);
    CHECK(big_rho_bound <= 1.0);
    CHECK(big_rho_bound >= 0.0);

    CHECK_THROWS_AS(bound_tail(0, 0.0, 0.1, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(bound_tail(100, 0.0, 0.5, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(bound_tail(100, 0.0, 0.1, 0.0), std::invalid_argument);
}

TEST_CASE("agent parameter validation") {
    AgentParams bad;
    bad.depth_n = 0;
    Rng rng(1);
    CHECK_THROWS_AS(collect_indicators(bad, rng), std::invalid_argument);
    bad = {};
    bad.p_true = -0.1;
    CHECK_THROWS_AS(collect_indicators(bad, rng), std::invalid_argument);
    bad = {};
    bad.zeta = 1.0;
    CHECK_THROWS_AS(collect_indicators(bad, rng), std::invalid_argument);
    bad = {};
    bad.delta = 0.5;
    CHECK_THROWS_AS(collect_indicators(bad, rng), std::invalid_argument);
}

TEST_CASE("bound verifier passes on a small grid and expands band adversaries") {
    std::vector<AgentParams> grid;
    for (const double p : {0.2, 0.5}) {
        for (const double zeta : {0.0, 0.1}) {
            AgentParams a;
            a.depth_n = 50;
            a.p_true = p;
            a.zeta = zeta;
            a.delta = 0.1;
            grid.push_back(a);
        }
    }

    const auto rep = verify_extraction_bound(grid, 300, 0.05, 11);
    // Two of the four points carry zeta > 0 and gain a band_low variant.
    REQUIRE(rep.points.size() == 6);
    CHECK(rep.all_pass);
    int band_low_points = 0;
    for (const auto& pt : rep.points) {
        CHECK(pt.pass);
        CHECK(pt.seeds == 300);
        CHECK(pt.frequency ==
              doctest::Approx(static_cast<double>(pt.violations) / 300.0));
        CHECK(pt.bound == doctest::Approx(bound_tail(50, pt.params.zeta, 0.1, 0.05)));
        CHECK(pt.frequency <= pt.bound + pt.slack + 1e-12);
        CHECK(pt.bracket_violations == 0);  // only tracked at delta = zeta = 0
        if (pt.params.policy == BandPolicy::band_low) ++band_low_points;
    }
    CHECK(band_low_points == 2);

    CHECK_THROWS_AS(verify_extraction_bound({}, 10, 0.05, 1), std::invalid_argument);
    CHECK_THROWS_AS(verify_extraction_bound(grid, 0, 0.05, 1), std::invalid_argument);
}

TEST_CASE("strict extraction always brackets the mean in the verifier") {
    AgentParams strict;
    strict.depth_n = 60;
    strict.p_true = 0.4;
    const std::vector<AgentParams> grid{strict};
    const auto rep = verify_extraction_bound(grid, 500, 0.05, 3);
    REQUIRE(rep.points.size() == 1);
    CHECK(rep.points[0].violations == 0);  // rho = 0: no deviations at all
    CHECK(rep.points[0].bracket_violations == 0);
    CHECK(rep.all_pass);
}

TEST_CASE("parallel and serial extraction kernels agree exactly") {
    std::vector<AgentParams> grid;
    for (const double p : {0.2, 0.8}) {
        AgentParams a;
        a.depth_n = 40;
        a.p_true = p;
        a.delta = 0.2;
        grid.push_back(a);
    }
    const auto serial = extraction_outcome_flags(grid, 250, 0.05, 17, false);
    const auto parallel = extraction_outcome_flags(grid, 250, 0.05, 17, true);
    REQUIRE(serial.size() == 500);
    CHECK(serial == parallel);
}
