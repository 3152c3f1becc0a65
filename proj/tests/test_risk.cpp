#include "doctest.h"

#include "eimlab/risk.hpp"

#include <random>
#include <vector>

using namespace eimlab;

TEST_CASE("cvar degenerate distribution") {
    std::vector<double> p{7.5, 7.5, 7.5};
    std::vector<double> pr{1.0 / 3, 1.0 / 3, 1.0 / 3};
    for (double a : {0.1, 0.5, 0.9, 0.99}) {
        const RiskAssessment r = cvar(p, pr, a);
        CHECK(r.cvar == doctest::Approx(7.5));
        CHECK(r.var == doctest::Approx(7.5));
    }
}

TEST_CASE("cvar worst-quartile example") {
    std::vector<double> p{-100, 0, 100, 200};
    std::vector<double> pr(4, 0.25);
    const RiskAssessment r = cvar(p, pr, 0.75);
    CHECK(r.cvar == doctest::Approx(-100.0));
    CHECK(r.mean_profit == doctest::Approx(50.0));
    CHECK(r.cvar <= r.mean_profit);
}

TEST_CASE("cvar input validation") {
    std::vector<double> p{1.0};
    std::vector<double> pr{1.0};
    CHECK_THROWS(cvar({}, {}, 0.5));
    CHECK_THROWS(cvar(p, pr, 0.0));
    CHECK_THROWS(cvar(p, pr, 1.0));
    std::vector<double> bad{0.7};
    CHECK_THROWS(cvar(p, bad, 0.5));
}

TEST_CASE("cvar satisfies the deviation identity") {
    // cvar = z - (1/(1-alpha)) sum pi * max(0, z - profit) at the optimum z.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-500, 500);
    for (int it = 0; it < 50; ++it) {
        const std::size_t n = 2 + rng() % 9;
        std::vector<double> p(n), pr(n, 1.0 / static_cast<double>(n));
        for (auto& v : p) v = U(rng);
        const double alpha = 0.5 + 0.45 * (static_cast<double>(rng() % 1000) / 1000.0);
        const RiskAssessment r = cvar(p, pr, alpha);
        double dev = 0.0;
        for (std::size_t i = 0; i < n; ++i) dev += pr[i] * r.tail_deviations[i];
        CHECK(r.cvar == doctest::Approx(r.var - dev / (1.0 - alpha)).epsilon(1e-9));
        CHECK(r.cvar <= r.mean_profit + 1e-9);
    }
}

TEST_CASE("cvar coherence: translation, homogeneity, monotonicity") {
    std::vector<double> p{-10, 5, 40, 80, 120};
    std::vector<double> pr(5, 0.2);
    const double alpha = 0.8;
    const double base = cvar(p, pr, alpha).cvar;

    std::vector<double> shifted = p;
    for (auto& v : shifted) v += 33.0;
    CHECK(cvar(shifted, pr, alpha).cvar == doctest::Approx(base + 33.0).epsilon(1e-12));

    std::vector<double> scaled = p;
    for (auto& v : scaled) v *= 2.5;
    CHECK(cvar(scaled, pr, alpha).cvar == doctest::Approx(2.5 * base).epsilon(1e-12));

    std::vector<double> larger = p;
    larger[0] += 1.0;
    larger[3] += 7.0;
    CHECK(cvar(larger, pr, alpha).cvar >= base - 1e-12);
}

TEST_CASE("cvar limits in alpha") {
    std::vector<double> p{-50, 10, 90};
    std::vector<double> pr{0.25, 0.5, 0.25};
    const RiskAssessment lo = cvar(p, pr, 1e-9);
    CHECK(lo.cvar == doctest::Approx(lo.mean_profit).epsilon(1e-6));
    double prev = lo.cvar;
    for (double a : {0.2, 0.4, 0.6, 0.8, 0.95, 0.999}) {
        const double c = cvar(p, pr, a).cvar;
        CHECK(c <= prev + 1e-12);
        prev = c;
    }
    CHECK(cvar(p, pr, 0.9999).cvar == doctest::Approx(-50.0).epsilon(1e-6));
}

TEST_CASE("LP-form cvar equals the closed form") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1000, 1000);
    for (int it = 0; it < 25; ++it) {
        const std::size_t n = 2 + rng() % 12;
        std::vector<double> p(n), pr(n, 1.0 / static_cast<double>(n));
        for (auto& v : p) v = U(rng);
        const double alpha = 0.55 + 0.4 * (static_cast<double>(rng() % 1000) / 1000.0);
        const double closed = cvar(p, pr, alpha).cvar;
        const double lp = cvar_lp(p, pr, alpha);
        CHECK(lp == doctest::Approx(closed).epsilon(1e-9));
    }
}

TEST_CASE("prudential check") {
    RiskAssessment a;
    a.cvar = -250e6;
    CHECK(prudential_check(a, 250e6).pass);
    CHECK(prudential_check(a, 250e6).slack == doctest::Approx(0.0));
    a.cvar = -300e6;
    const PrudentialResult r = prudential_check(a, 250e6);
    CHECK(!r.pass);
    CHECK(r.slack == doctest::Approx(-50e6));
    a.cvar = 10e6;
    CHECK(prudential_check(a, 0.0).pass);
}

TEST_CASE("financing check") {
    GeneratorTech t;
    t.equity_rate = 0.10;
    t.debt_rate = 0.05;
    t.gearing = 0.5;
    t.investment_cost = 1000.0;

    // Zero capacity passes trivially.
    CHECK(financing_check(0.0, 0.0, t, 0.0).pass());
    // wacc = 0.075; requirement = 0.075 * 1000 * 1 = 75.
    FinancingResult r = financing_check(8.0, 100.0, t, 1.0);
    CHECK(!r.equity_pass);
    r = financing_check(80.0, 100.0, t, 1.0);
    CHECK(r.equity_pass);
    // Debt service = 0.05 * 0.5 * 1000 = 25.
    r = financing_check(80.0, 20.0, t, 1.0);
    CHECK(r.equity_pass);
    CHECK(!r.debt_pass);

    // Tail-loss construction: CVaR binds before the equity test.
    // Two scenarios, mean fine, tail negative.
    r = financing_check(100.0, -5.0, t, 1.0);
    CHECK(r.equity_pass);
    CHECK(!r.debt_pass);
}

TEST_CASE("expected value premium") {
    CHECK(expected_value_premium(100.0, 0.0) == doctest::Approx(100.0));
    CHECK(expected_value_premium(100.0, 0.25) == doctest::Approx(125.0));
    CHECK_THROWS(expected_value_premium(-1.0, 0.1));
}
