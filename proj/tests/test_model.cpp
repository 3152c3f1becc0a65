#include "doctest.h"

#include "eimlab/model.hpp"

#include <cmath>

using namespace eimlab;

namespace {

Market toy_market() {
    Market m;
    GeneratorTech t;
    t.name = "gas";
    t.variable_cost = 50.0;
    t.fixed_cost = 30000.0;
    t.investment_cost = 700000.0;
    t.asset_life = 20.0;
    t.equity_rate = 0.12;
    t.debt_rate = 0.06;
    t.gearing = 0.6;
    t.finalize();
    m.techs.push_back(t);

    GeneratorUnit u;
    u.id = "g1";
    u.tech_index = 0;
    u.capacity = 100.0;
    m.units.push_back(u);

    Scenario sc;
    sc.id = "s1";
    sc.probability = 1.0;
    RepDay rd;
    rd.weight = 365.0;
    rd.vre_availability.assign(48, 0.5);
    rd.strip_demand = {std::vector<double>(48, 40.0), std::vector<double>(48, 40.0)};
    sc.rep_days.push_back(rd);
    m.scenarios.scenarios.push_back(sc);
    m.scenarios.n_strips = 2;

    DemandStrip d1;
    d1.id = "essential";
    d1.compensation_value = 15000.0;
    d1.premium_rate = 1000.0;
    d1.peak_demand = 40.0;
    DemandStrip d2 = d1;
    d2.id = "non_essential";
    d2.compensation_value = 7500.0;
    m.strips = {d1, d2};
    return m;
}

} // namespace

TEST_CASE("annuity factor closed form") {
    CHECK(annuity_factor(0.0, 20) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(annuity_factor(0.10, 1) == doctest::Approx(1.10).epsilon(1e-12));
    // Independent evaluation of rate/(1-(1+rate)^-life).
    const double expect = 0.08 / (1.0 - std::pow(1.08, -20.0));
    CHECK(annuity_factor(0.08, 20) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(annuity_factor(0.08, 20) == doctest::Approx(0.1018522088).epsilon(1e-9));
    CHECK_THROWS(annuity_factor(std::nan(""), 20));
    CHECK_THROWS(annuity_factor(0.05, 0.5));
}

TEST_CASE("annuity factor monotonicity") {
    double prev = annuity_factor(0.0, 15);
    for (double r = 0.01; r < 0.2; r += 0.01) {
        const double v = annuity_factor(r, 15);
        CHECK(v > prev);
        prev = v;
    }
    prev = annuity_factor(0.07, 1);
    for (double life = 2; life <= 40; ++life) {
        const double v = annuity_factor(0.07, life);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("wacc") {
    GeneratorTech t;
    t.equity_rate = 0.10;
    t.debt_rate = 0.05;
    t.gearing = 0.0;
    CHECK(wacc(t) == doctest::Approx(0.10));
    t.gearing = 1.0;
    CHECK(wacc(t) == doctest::Approx(0.05));
    t.equity_rate = 0.12;
    t.debt_rate = 0.06;
    t.gearing = 0.6;
    CHECK(wacc(t) == doctest::Approx(0.084).epsilon(1e-12));
    // Bounded by the two rates for any gearing.
    for (double k = 0.0; k <= 1.0; k += 0.05) {
        t.gearing = k;
        CHECK(wacc(t) >= std::min(t.equity_rate, t.debt_rate) - 1e-15);
        CHECK(wacc(t) <= std::max(t.equity_rate, t.debt_rate) + 1e-15);
    }
}

TEST_CASE("validate_model passes a consistent toy") {
    const Market m = toy_market();
    const ValidationReport rep = validate_model(m);
    CHECK(rep.ok());
    // Idempotent and side-effect free.
    const ValidationReport rep2 = validate_model(m);
    CHECK(rep2.ok());
}

TEST_CASE("validate_model flags negative strip demand with location") {
    Market m = toy_market();
    m.scenarios.scenarios[0].rep_days[0].strip_demand[1][7] = -1.0;
    const ValidationReport rep = validate_model(m);
    REQUIRE(!rep.ok());
    bool found = false;
    for (const auto& v : rep.violations)
        if (v.where.find("non_essential") != std::string::npos &&
            v.what.find("t=7") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("validate_model flags probabilities not summing to one") {
    Market m = toy_market();
    m.scenarios.scenarios[0].probability = 0.95;
    const ValidationReport rep = validate_model(m);
    REQUIRE(!rep.ok());
    bool found = false;
    for (const auto& v : rep.violations)
        if (v.what.find("must sum to 1") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("validate_model checks capacity step multiples and annuity consistency") {
    Market m = toy_market();
    m.units[0].capacity = 110.0; // not a multiple of 25
    CHECK(!validate_model(m).ok());
    m = toy_market();
    m.techs[0].annuity += 0.01;
    CHECK(!validate_model(m).ok());
}
