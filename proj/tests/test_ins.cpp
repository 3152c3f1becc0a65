#include "doctest.h"

#include "eimlab/ins.hpp"
#include "eimlab/oracle.hpp"

#include <cmath>
#include <random>

using namespace eimlab;

namespace {

// Market skeleton for INS tests: scenario weights/strips only, plus one
// contractable tech. Ex-ante shed is injected directly.
struct InsToy {
    Market market;
    InsInput input;
};

InsToy ins_toy(unsigned seed, double premium_ess, double premium_non, double reserves,
               int scarce_intervals = 4, double shed_scale = 120.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    InsToy toy;
    Market& m = toy.market;
    m.config.design = MarketDesign::EIM;
    m.iolr.technical_reserves = reserves;
    m.iolr.cvar_confidence = 0.8;
    m.iolr.risk_weight = 0.5;

    GeneratorTech tech;
    tech.name = "peaker";
    tech.variable_cost = 60.0;
    tech.fixed_cost = 21000.0;
    tech.investment_cost = 400000.0;
    tech.asset_life = 20.0;
    tech.equity_rate = 0.10;
    tech.debt_rate = 0.05;
    tech.gearing = 0.5;
    tech.capacity_step = 25.0;
    tech.expansion_bits = 3;
    tech.finalize();
    m.techs.push_back(tech);

    for (int w = 0; w < 3; ++w) {
        Scenario sc;
        sc.id = "s" + std::to_string(w + 1);
        sc.probability = 1.0 / 3.0;
        RepDay rd;
        rd.weight = 365.0;
        rd.vre_availability.assign(48, 0.0);
        rd.strip_demand = {std::vector<double>(48, 150.0), std::vector<double>(48, 150.0)};
        sc.rep_days.push_back(rd);
        m.scenarios.scenarios.push_back(sc);
    }
    m.scenarios.n_strips = 2;

    DemandStrip ess;
    ess.id = "essential";
    ess.compensation_value = 15000.0;
    ess.premium_rate = premium_ess;
    ess.peak_demand = 150.0;
    DemandStrip non = ess;
    non.id = "non_essential";
    non.compensation_value = 7500.0;
    non.premium_rate = premium_non;
    m.strips = {ess, non};

    InsInput& in = toy.input;
    in.market = &m;
    in.candidates = {{0, 3}};
    in.ex_ante_shed.assign(3, std::vector<std::vector<double>>(2, std::vector<double>(48, 0.0)));
    // Scenario 3 is the bad tail: deep shedding that spills into essentials.
    for (int w = 0; w < 3; ++w) {
        const double severity = w == 2 ? 1.0 : 0.15 * U(rng);
        for (int k = 0; k < scarce_intervals; ++k) {
            const std::size_t t = 10 + 3 * static_cast<std::size_t>(k);
            const double total = shed_scale * severity * (1.0 + 0.3 * U(rng));
            const double non_part = std::min(total, 150.0);
            in.ex_ante_shed[static_cast<std::size_t>(w)][1][t] = non_part;
            in.ex_ante_shed[static_cast<std::size_t>(w)][0][t] = std::max(0.0, total - 150.0);
        }
    }
    return toy;
}

bool solved(const IolrDecision& dec) {
    return dec.status == solver::Status::optimal || dec.status == solver::Status::gap_reached;
}

} // namespace

TEST_CASE("eom flag forces zero contracts and zero cashflows") {
    InsToy toy = ins_toy(1, 9000.0, 4000.0, 5e6);
    const IolrDecision dec = solve_ins(toy.input, GammaLink::paper_literal_link, true, 1e-4);
    REQUIRE(solved(dec));
    for (int q : dec.contracts) CHECK(q == 0);
    for (double c : dec.contracted_capacity) CHECK(c == doctest::Approx(0.0));
    for (double p : dec.scenario_profit) CHECK(p == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("zero premiums settle on no contracts") {
    InsToy toy = ins_toy(2, 0.0, 0.0, 5e6);
    const IolrDecision dec = solve_ins(toy.input, GammaLink::paper_literal_link, false, 1e-4);
    REQUIRE(solved(dec));
    for (int q : dec.contracts) CHECK(q == 0);
    CHECK(dec.utility == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("solve_ins matches exhaustive enumeration") {
    for (unsigned seed : {3u, 4u, 5u}) {
        for (auto link : {GammaLink::paper_literal_link, GammaLink::cascade_link}) {
            InsToy toy = ins_toy(seed, 2.2e5, 1.4e5, 4e7, 5, 190.0);
            const IolrDecision dec = solve_ins(toy.input, link, false, 1e-4);
            REQUIRE(solved(dec));
            const oracle::InsEnumerateResult ref = oracle::ins_enumerate(toy.input, link);
            INFO("seed ", seed, " link ", static_cast<int>(link), " milp cap ",
                 dec.contracted_capacity[0], " oracle cap ", ref.contracted_capacity[0]);
            CHECK(std::abs(dec.utility - ref.utility) <=
                  1e-3 * std::max(1.0, std::abs(ref.utility)) + 1e-6);
        }
    }
}

TEST_CASE("audit recomputes profits term by term") {
    InsToy toy = ins_toy(7, 2.2e5, 1.4e5, 4e7, 5, 190.0);
    const IolrDecision dec = solve_ins(toy.input, GammaLink::paper_literal_link, false, 1e-4);
    REQUIRE(solved(dec));
    const InsAudit audit = audit_ins(dec, toy.input);
    CHECK(audit.max_profit_divergence <= 1.0); // dollars, against ~1e5 scale flows
    CHECK(audit.max_envelope_violation <= 1e-6);
    CHECK(audit.prudential_slack >= -1e-5);
    CHECK(audit.expectation_slack >= -1e-5);
    CHECK(audit.pass);
}

TEST_CASE("gamma is the pointwise maximum in literal mode") {
    InsToy toy = ins_toy(8, 2.2e5, 1.4e5, 4e7, 5, 190.0);
    const IolrDecision dec = solve_ins(toy.input, GammaLink::paper_literal_link, false, 1e-4);
    REQUIRE(solved(dec));
    double total_cap = 0.0;
    for (double c : dec.contracted_capacity) total_cap += c;
    for (std::size_t w = 0; w < 3; ++w)
        for (std::size_t d = 0; d < 2; ++d)
            for (std::size_t t = 0; t < 48; ++t)
                CHECK(dec.ex_post_shed[w][d][t] ==
                      doctest::Approx(std::max(0.0, toy.input.ex_ante_shed[w][d][t] - total_cap))
                          .epsilon(1e-9));
}

TEST_CASE("cascade restores the essential strip first and conserves totals") {
    InsToy toy = ins_toy(9, 2.2e5, 1.4e5, 4e7, 5, 260.0);
    const IolrDecision dec = solve_ins(toy.input, GammaLink::cascade_link, false, 1e-4);
    REQUIRE(solved(dec));
    double total_cap = 0.0;
    for (double c : dec.contracted_capacity) total_cap += c;
    for (std::size_t w = 0; w < 3; ++w)
        for (std::size_t t = 0; t < 48; ++t) {
            const double ante = toy.input.ex_ante_shed[w][0][t] + toy.input.ex_ante_shed[w][1][t];
            const double post = dec.ex_post_shed[w][0][t] + dec.ex_post_shed[w][1][t];
            CHECK(post == doctest::Approx(std::max(0.0, ante - total_cap)).epsilon(1e-9));
            // Essential load is restored before any non-essential load.
            CHECK(dec.ex_post_shed[w][0][t] ==
                  doctest::Approx(std::max(0.0, toy.input.ex_ante_shed[w][0][t] - total_cap))
                      .epsilon(1e-9));
        }
}

TEST_CASE("binding reserves produce zero prudential slack") {
    // Hand-built instance: no contractable capacity, one tail scenario whose
    // payout T exceeds premium income P, reserves set exactly to T - P so the
    // prudential constraint binds with zero slack at the optimal Q = 1.
    InsToy toy = ins_toy(10, 0.0, 0.0, 0.0, 0, 0.0);
    toy.input.candidates.clear();
    const double payout_mw = 21.9178; // tail shed on the non-essential strip
    toy.input.ex_ante_shed[2][1][20] = payout_mw;
    const double T = 182.5 * 7500.0 * payout_mw; // ~3.0e7
    const double P = 2.2e7;                      // income; P > (2/3) T so Q=1 wins
    toy.market.strips[1].premium_rate = P / toy.market.strips[1].peak_demand;
    toy.market.iolr.technical_reserves = T - P;

    const IolrDecision dec = solve_ins(toy.input, GammaLink::paper_literal_link, false, 1e-4);
    REQUIRE(solved(dec));
    CHECK(dec.contracts[1] == 1);
    const InsAudit audit = audit_ins(dec, toy.input);
    CHECK(audit.prudential_slack == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(audit.prudential_slack >= -1e-5);
    const oracle::InsEnumerateResult ref =
        oracle::ins_enumerate(toy.input, GammaLink::paper_literal_link);
    CHECK(std::abs(dec.utility - ref.utility) <=
          1e-3 * std::max(1.0, std::abs(ref.utility)) + 1e-6);
    // Slightly smaller reserves flip the optimum to no insurance.
    toy.market.iolr.technical_reserves = (T - P) * 0.999;
    const IolrDecision drop = solve_ins(toy.input, GammaLink::paper_literal_link, false, 1e-4);
    REQUIRE(solved(drop));
    CHECK(drop.contracts[1] == 0);
}

TEST_CASE("raising reserves never lowers utility") {
    InsToy toy = ins_toy(11, 2.2e5, 1.4e5, 1e6, 5, 260.0);
    double prev = -1e300;
    for (double phi : {1e6, 5e6, 5e7, 5e8}) {
        toy.market.iolr.technical_reserves = phi;
        const IolrDecision dec = solve_ins(toy.input, GammaLink::paper_literal_link, false, 1e-4);
        REQUIRE(solved(dec));
        CHECK(dec.utility >= prev - 1e-3 * std::max(1.0, std::abs(prev)));
        prev = dec.utility;
    }
}
