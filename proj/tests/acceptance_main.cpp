// Acceptance suite: one line per criterion, every tolerance pinned in code.
// Usage: acceptance <source_dir>   (source_dir holds configs/)

#include "eimlab/dispatch.hpp"
#include "eimlab/equilibrium.hpp"
#include "eimlab/gmp.hpp"
#include "eimlab/ins.hpp"
#include "eimlab/oracle.hpp"
#include "eimlab/report.hpp"
#include "eimlab/risk.hpp"
#include "eimlab/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <cstdarg>
#include <cstring>

using namespace eimlab;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// Random dispatch market: <= 5 units, one scenario whose rep day count gives
// <= 48 meaningful intervals.
Market random_dispatch_market(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0, 1);
    Market m;
    m.config.price_cap = 2000.0;
    const std::size_t nu = 1 + rng() % 5;
    for (std::size_t g = 0; g < nu; ++g) {
        GeneratorTech t;
        t.name = "t" + std::to_string(g);
        t.variable_cost = 5.0 + 140.0 * U(rng);
        t.finalize();
        m.techs.push_back(t);
        GeneratorUnit u;
        u.id = "g" + std::to_string(g);
        u.tech_index = static_cast<int>(g);
        u.capacity = 40.0 + 180.0 * U(rng);
        m.units.push_back(u);
    }
    Scenario sc;
    sc.id = "s1";
    sc.probability = 1.0;
    RepDay rd;
    rd.weight = 365.0;
    rd.vre_availability.assign(48, 0.0);
    std::vector<double> ess(48), non(48);
    for (int t = 0; t < 48; ++t) {
        const double d = 40.0 + 420.0 * U(rng);
        ess[static_cast<std::size_t>(t)] = 0.5 * d;
        non[static_cast<std::size_t>(t)] = 0.5 * d;
    }
    rd.strip_demand = {ess, non};
    sc.rep_days.push_back(rd);
    m.scenarios.scenarios.push_back(sc);
    m.scenarios.n_strips = 2;
    DemandStrip e;
    e.id = "essential";
    e.compensation_value = 15000.0;
    e.peak_demand = 500.0;
    DemandStrip n = e;
    n.id = "non_essential";
    n.compensation_value = 7500.0;
    m.strips = {e, n};
    return m;
}

Market gmp_toy(unsigned seed, int bits, bool aggregate) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    Market m;
    m.config.price_cap = 2000.0;
    m.config.shed_cost_mode = ShedCostMode::capped_settlement;
    m.config.aggregate_dual_products = aggregate;
    GeneratorTech acting;
    acting.name = "peaker";
    acting.variable_cost = 45.0 + 10.0 * U(rng);
    acting.fixed_cost = 28000.0;
    acting.investment_cost = 480000.0;
    acting.asset_life = 20.0;
    acting.equity_rate = 0.11;
    acting.debt_rate = 0.055;
    acting.gearing = 0.55;
    acting.risk_weight = 0.5;
    acting.cvar_confidence = 0.75;
    acting.capacity_step = 25.0;
    acting.expansion_bits = bits;
    acting.finalize();
    m.techs.push_back(acting);
    GeneratorTech base = acting;
    base.name = "mid";
    base.variable_cost = 18.0 + 5.0 * U(rng);
    base.finalize();
    m.techs.push_back(base);
    GeneratorUnit g1;
    g1.id = "acting";
    g1.tech_index = 0;
    m.units.push_back(g1);
    GeneratorUnit g2;
    g2.id = "rival";
    g2.tech_index = 1;
    g2.capacity = 100.0;
    m.units.push_back(g2);
    for (int w = 0; w < 2; ++w) {
        Scenario sc;
        sc.id = "s" + std::to_string(w + 1);
        sc.probability = 0.5;
        RepDay rd;
        rd.weight = 365.0;
        rd.vre_availability.assign(48, 0.0);
        std::vector<double> half(48);
        for (int t = 0; t < 48; ++t) {
            const double swing = std::sin(3.14159 * t / 24.0);
            const double level = w == 0 ? 120.0 : 205.0;
            half[static_cast<std::size_t>(t)] = (level + 95.0 * swing * swing + 17.0 * U(rng)) / 2.0;
        }
        rd.strip_demand = {half, half};
        sc.rep_days.push_back(rd);
        m.scenarios.scenarios.push_back(sc);
    }
    m.scenarios.n_strips = 2;
    DemandStrip ess;
    ess.id = "essential";
    ess.compensation_value = 15000.0;
    ess.peak_demand = 200.0;
    DemandStrip non = ess;
    non.id = "non_essential";
    non.compensation_value = 7500.0;
    m.strips = {ess, non};
    return m;
}

Market eq_toy(MarketDesign design) {
    Market m;
    m.config.design = design;
    m.config.price_cap = 2000.0;
    m.config.aggregate_dual_products = true;
    m.config.optimality_gap = 1e-3;
    m.config.eps_i = 0.0;
    m.config.eps_j = 25.0;
    m.config.eps_k = 25.0;
    m.config.max_inner_iters = 12;
    m.config.max_outer_iters = 6;
    m.iolr.technical_reserves = 4e8;
    m.iolr.cvar_confidence = 0.8;
    m.iolr.risk_weight = 0.5;
    GeneratorTech mid;
    mid.name = "mid";
    mid.variable_cost = 35.0;
    mid.fixed_cost = 42000.0;
    mid.investment_cost = 820000.0;
    mid.asset_life = 20.0;
    mid.equity_rate = 0.10;
    mid.debt_rate = 0.05;
    mid.gearing = 0.6;
    mid.risk_weight = 0.5;
    mid.cvar_confidence = 0.75;
    mid.capacity_step = 25.0;
    mid.expansion_bits = 3;
    mid.finalize();
    m.techs.push_back(mid);
    GeneratorTech peak = mid;
    peak.name = "peaker";
    peak.variable_cost = 70.0;
    peak.fixed_cost = 19000.0;
    peak.investment_cost = 430000.0;
    peak.finalize();
    m.techs.push_back(peak);
    GeneratorUnit g1;
    g1.id = "g1";
    g1.tech_index = 0;
    m.units.push_back(g1);
    GeneratorUnit g2;
    g2.id = "g2";
    g2.tech_index = 1;
    m.units.push_back(g2);
    for (int w = 0; w < 2; ++w) {
        Scenario sc;
        sc.id = "s" + std::to_string(w + 1);
        sc.probability = 0.5;
        RepDay rd;
        rd.weight = 365.0;
        rd.vre_availability.assign(48, 0.0);
        std::vector<double> half(48);
        for (int t = 0; t < 48; ++t) {
            const double s = std::sin(3.14159 * (t - 14) / 24.0);
            const double level = w == 0 ? 170.0 : 260.0;
            half[static_cast<std::size_t>(t)] = (level + 130.0 * s * s + 2.0 * std::cos(0.9 * t)) / 2.0;
        }
        rd.strip_demand = {half, half};
        sc.rep_days.push_back(rd);
        m.scenarios.scenarios.push_back(sc);
    }
    m.scenarios.n_strips = 2;
    DemandStrip ess;
    ess.id = "essential";
    ess.compensation_value = 15000.0;
    ess.premium_rate = 2.4e5;
    ess.peak_demand = 196.0;
    DemandStrip non = ess;
    non.id = "non_essential";
    non.compensation_value = 7500.0;
    non.premium_rate = 1.2e5;
    m.strips = {ess, non};
    return m;
}

// INS toy mirroring the unit fixtures.
struct InsToy {
    Market market;
    InsInput input;
};

InsToy ins_toy(unsigned seed, double shed_scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    InsToy toy;
    Market& m = toy.market;
    m.config.design = MarketDesign::EIM;
    m.iolr.technical_reserves = 4e7;
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
    ess.premium_rate = 2.2e5;
    ess.peak_demand = 150.0;
    DemandStrip non = ess;
    non.id = "non_essential";
    non.compensation_value = 7500.0;
    non.premium_rate = 1.4e5;
    m.strips = {ess, non};
    InsInput& in = toy.input;
    in.market = &m;
    in.candidates = {{0, 3}};
    in.ex_ante_shed.assign(3, std::vector<std::vector<double>>(2, std::vector<double>(48, 0.0)));
    for (int w = 0; w < 3; ++w) {
        const double severity = w == 2 ? 1.0 : 0.15 * U(rng);
        for (int k = 0; k < 5; ++k) {
            const std::size_t t = 10 + 3 * static_cast<std::size_t>(k);
            const double total = shed_scale * severity * (1.0 + 0.3 * U(rng));
            const double non_part = std::min(total, 150.0);
            in.ex_ante_shed[static_cast<std::size_t>(w)][1][t] = non_part;
            in.ex_ante_shed[static_cast<std::size_t>(w)][0][t] = std::max(0.0, total - 150.0);
        }
    }
    return toy;
}

} // namespace

int main(int argc, char** argv) {
    const std::string source_dir = argc > 1 ? argv[1] : ".";
    const fs::path bin_dir = fs::absolute(fs::path(argv[0])).parent_path();
    const std::string work = (fs::temp_directory_path() / "eimlab_acceptance").string();
    fs::create_directories(work);

    // ---- 1. Duality suite: 100 randomized dispatch instances. ----------
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(20260808);
        double max_sd = 0.0, max_lemma = 0.0;
        for (int it = 0; it < 100; ++it) {
            Market m = random_dispatch_market(rng);
            const DispatchOutcome o = clear_scenario(m, 0, ShedCostMode::capped_settlement);
            max_sd = std::max(max_sd, verify_strong_duality(o));
            const Lemma1Report rep = verify_lemma1(o);
            double limit = 0.0;
            for (const auto& gl : o.gen_limit)
                for (double v : gl) limit = std::max(limit, v);
            const double scale = m.config.price_cap * std::max(1.0, limit);
            max_lemma = std::max(max_lemma, std::max(rep.max_residual, rep.max_slackness) / scale);
        }
        const double secs = seconds_since(t0);
        report(1, max_sd <= 1e-6 && max_lemma <= 1e-6 && secs < 30.0,
               fmt("duality suite on 100 random dispatches: max strong-duality gap %.2e (<=1e-6), "
                   "max Lemma-1 residual %.2e of price scale (<=1e-6), %.1f s (<30)",
                   max_sd, max_lemma, secs));
    }

    // ---- 2. CVaR oracle equivalence + coherence. ------------------------
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> U(-1e4, 1e4);
        double max_diff = 0.0;
        for (int it = 0; it < 1000; ++it) {
            const std::size_t n = 2 + rng() % 14;
            std::vector<double> p(n), pr(n);
            double tot = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = U(rng);
                pr[i] = 0.05 + static_cast<double>(rng() % 100);
                tot += pr[i];
            }
            for (auto& q : pr) q /= tot;
            const double alpha = 0.5 + 0.45 * static_cast<double>(rng() % 1000) / 1000.0;
            const double closed = cvar(p, pr, alpha).cvar;
            const double lp = cvar_lp(p, pr, alpha);
            max_diff = std::max(max_diff, std::abs(closed - lp) / std::max(1.0, std::abs(closed)));
        }
        bool coherent = true;
        {
            // Dyadic values and alpha=0.75 keep every step of the closed
            // form exact, so the coherence identities hold with equality.
            std::vector<double> p{-10.0, 5.0, 40.0, 80.0};
            std::vector<double> pr(4, 0.25);
            const double base = cvar(p, pr, 0.75).cvar;
            coherent &= base == -10.0;
            std::vector<double> shifted = p;
            for (auto& v : shifted) v += 17.5;
            coherent &= cvar(shifted, pr, 0.75).cvar == base + 17.5;
            std::vector<double> scaled = p;
            for (auto& v : scaled) v *= 3.0;
            coherent &= cvar(scaled, pr, 0.75).cvar == 3.0 * base;
            std::vector<double> larger = p;
            larger[1] += 2.0;
            coherent &= cvar(larger, pr, 0.75).cvar >= base;
        }
        const double secs = seconds_since(t0);
        report(2, max_diff <= 1e-9 && coherent && secs < 10.0,
               fmt("LP-form vs sorted-tail CVaR on 1000 distributions: max rel diff %.2e (<=1e-9), "
                   "coherence exact %s, %.1f s (<10)",
                   max_diff, coherent ? "yes" : "NO", secs));
    }

    // ---- 3. GMP oracle equivalence. --------------------------------------
    {
        const auto t0 = std::chrono::steady_clock::now();
        double worst = 0.0;
        int count = 0;
        bool ok = true;
        const std::pair<unsigned, bool> cases[] = {
            {11u, true}, {12u, true}, {13u, true}, {14u, false}, {15u, false}};
        for (const auto& [seed, aggregate] : cases) {
            Market m = gmp_toy(seed, 3, aggregate);
            GmpInstance inst;
            inst.market = &m;
            inst.acting = 0;
            const GmpSolution sol = solve_gmp(inst, 1e-3);
            const auto grid = oracle::full_capacity_grid(m.techs[0]);
            const oracle::GridSearchResult ref = oracle::grid_search_gmp(inst, grid);
            const double diff =
                std::abs(sol.utility - ref.utility) / std::max(1.0, std::abs(ref.utility));
            worst = std::max(worst, diff);
            ok &= sol.feasible() && diff <= 1e-3;
            ++count;
        }
        const double secs = seconds_since(t0);
        report(3, ok && secs < 120.0,
               fmt("solve_gmp vs exhaustive grid search on %d toys: worst utility gap %.2e "
                   "(<=1e-3), %.1f s (<120)",
                   count, worst, secs));
    }

    // ---- 4. INS oracle equivalence. --------------------------------------
    {
        const auto t0 = std::chrono::steady_clock::now();
        double worst = 0.0, min_slack = 1e300;
        bool ok = true;
        int count = 0;
        for (unsigned seed : {3u, 4u, 5u, 6u, 7u}) {
            InsToy toy = ins_toy(seed, 190.0);
            const GammaLink link = seed % 2 ? GammaLink::paper_literal_link : GammaLink::cascade_link;
            const IolrDecision dec = solve_ins(toy.input, link, false, 1e-3);
            const oracle::InsEnumerateResult ref = oracle::ins_enumerate(toy.input, link);
            const double diff =
                std::abs(dec.utility - ref.utility) / std::max(1.0, std::abs(ref.utility));
            worst = std::max(worst, diff);
            const InsAudit audit = audit_ins(dec, toy.input);
            min_slack = std::min(min_slack, audit.prudential_slack);
            ok &= (dec.status == solver::Status::optimal || dec.status == solver::Status::gap_reached) &&
                  diff <= 1e-3;
            ++count;
        }
        // EOM mode: identically zero cashflows.
        InsToy eom = ins_toy(8, 190.0);
        const IolrDecision dec = solve_ins(eom.input, GammaLink::paper_literal_link, true, 1e-3);
        bool zero = true;
        for (double p : dec.scenario_profit) zero &= p == 0.0;
        for (double c : dec.contracted_capacity) zero &= c == 0.0;
        const double secs = seconds_since(t0);
        report(4, ok && min_slack >= -1e-6 && zero && secs < 60.0,
               fmt("solve_ins vs enumeration on %d toys: worst utility gap %.2e (<=1e-3), min "
                   "prudential slack %.2e (>=0), EOM cashflows identically zero %s, %.1f s (<60)",
                   count, worst, min_slack, zero ? "yes" : "NO", secs));
    }

    // ---- 5. Equilibrium certification on the 2-generator toy. -----------
    {
        const auto t0 = std::chrono::steady_clock::now();
        Market m = eq_toy(MarketDesign::EOM);
        EquilibriumOptions opts;
        const EquilibriumState st = run_equilibrium(m, opts);
        bool ok = st.status == EqStatus::converged;
        double max_gain = 1e300, bad_gain = 0.0;
        if (ok) {
            const DeviationReport dev = verify_equilibrium(st, opts);
            max_gain = dev.max_relative_gain;
            ok &= max_gain <= 1e-3;
            EquilibriumState bad = st;
            const std::size_t u0 = bad.independent_units[0];
            bad.market.units[u0].capacity = std::max(0.0, bad.market.units[u0].capacity - 25.0);
            bad.independent_capacity[0] = bad.market.units[u0].capacity;
            const DeviationReport devb = verify_equilibrium(bad, opts);
            bad_gain = devb.generator_gain[0];
            ok &= bad_gain > 1e-3;
        }
        const double secs = seconds_since(t0);
        report(5, ok && secs < 120.0,
               fmt("two-generator toy: converged, max unilateral gain %.2e (<=1e-3), perturbed "
                   "state gain %.2e (>1e-3), %.1f s (<120)",
                   max_gain, bad_gain, secs));
    }

    // ---- 6. Priority cascade property on the toy EIM / EOM runs. --------
    {
        const std::string cfg = source_dir + "/configs/toy.json";
        const RunResult eim = run_case_file(cfg, work + "/toy_eim", MarketDesign::EIM);
        bool cascade_ok = eim.exit_code == 0;
        int scarce = 0;
        if (cascade_ok) {
            const Market& mkt = eim.state.market;
            for (std::size_t w = 0; w < mkt.scenarios.n_scenarios(); ++w) {
                const DispatchOutcome o = clear_scenario(mkt, w, mkt.config.shed_cost_mode);
                const ShedAllocation a = allocate_shed(o, mkt, AllocationMode::priority, 0);
                for (std::size_t t = 0; t < o.n_intervals; ++t) {
                    if (o.total_shed[t] <= 1e-9) continue;
                    ++scarce;
                    // essential (strip 0) sheds only once non-essential is
                    // fully curtailed.
                    if (a.shed[0][t] > 1e-6)
                        cascade_ok &= a.shed[1][t] >= o.strip_demand[1][t] - 1e-6;
                }
            }
            cascade_ok &= scarce > 0;
        }
        const RunResult eom = run_case_file(cfg, work + "/toy_eom", MarketDesign::EOM);
        bool prorata_both = eom.exit_code == 0;
        if (prorata_both) {
            const Market& mkt = eom.state.market;
            int both = 0, scarce_eom = 0;
            for (std::size_t w = 0; w < mkt.scenarios.n_scenarios(); ++w) {
                const DispatchOutcome o = clear_scenario(mkt, w, mkt.config.shed_cost_mode);
                const ShedAllocation a = allocate_shed(o, mkt, AllocationMode::pro_rata, 0);
                for (std::size_t t = 0; t < o.n_intervals; ++t) {
                    if (o.total_shed[t] <= 1e-9) continue;
                    ++scarce_eom;
                    if (a.shed[0][t] > 1e-9 && a.shed[1][t] > 1e-9) ++both;
                }
            }
            prorata_both &= scarce_eom > 0 && both == scarce_eom;
        }
        report(6, cascade_ok && prorata_both,
               fmt("priority cascade: essential sheds only after non-essential is exhausted in "
                   "%d scarcity intervals; EOM pro-rata sheds both strips simultaneously %s",
                   scarce, prorata_both ? "yes" : "NO"));
    }

    // ---- 7. EIM vs EOM directional comparison on the synthetic set. -----
    {
        const auto t0 = std::chrono::steady_clock::now();
        const std::string cfg = source_dir + "/configs/synthetic.json";
        const RunResult eom = run_case_file(cfg, work + "/syn_eom", MarketDesign::EOM);
        const RunResult eim = run_case_file(cfg, work + "/syn_eim", MarketDesign::EIM);
        auto cap_hours = [](const RunReport& r) {
            double h = 0.0;
            for (const auto& p : r.prices) h += p.hours_at_cap;
            return h;
        };
        const bool both = eom.exit_code == 0 && eim.exit_code == 0;
        const double cap_eom = eom.report.total_capacity, cap_eim = eim.report.total_capacity;
        const double voll_eom = eom.report.voll_mean, voll_eim = eim.report.voll_mean;
        const double hrs_eom = cap_hours(eom.report), hrs_eim = cap_hours(eim.report);
        const bool directional = cap_eim >= cap_eom && voll_eim <= voll_eom && hrs_eim <= hrs_eom;
        const bool strict = cap_eim > cap_eom && voll_eim < voll_eom && hrs_eim < hrs_eom;
        const double secs = seconds_since(t0);
        report(7, both && directional && secs < 600.0,
               fmt("synthetic EIM vs EOM: capacity %.0f vs %.0f MW, lost-load value %.3g vs %.3g "
                   "$/yr, cap hours %.1f vs %.1f%s, %.0f s (<600)",
                   cap_eim, cap_eom, voll_eim, voll_eom, hrs_eim, hrs_eom,
                   strict ? "" : " [equality: investigation flag]", secs));
    }

    // ---- 8. Ward clustering checks. --------------------------------------
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> U(-1, 1);
        bool seq_ok = true;
        for (int rep = 0; rep < 3; ++rep) {
            std::vector<std::vector<double>> days(30, std::vector<double>(10));
            for (auto& d : days)
                for (auto& v : d) v = U(rng);
            const WardResult mine = ward_cluster(days, 4);
            const auto ref = oracle::ward_reference_merges(days, 4);
            seq_ok &= mine.merges.size() == ref.size();
            for (std::size_t i = 0; seq_ok && i < ref.size(); ++i)
                seq_ok &= mine.merges[i] == ref[i];
        }
        std::vector<std::vector<double>> regimes;
        for (int i = 0; i < 10; ++i) regimes.push_back({0.0, 1.0});
        for (int i = 0; i < 10; ++i) regimes.push_back({7.0, -2.0});
        const WardResult two = ward_cluster(regimes, 2);
        bool pure = two.weights.size() == 2 && two.weights[0] == 10.0 && two.weights[1] == 10.0;
        for (int i = 1; i < 10; ++i) pure &= two.assignment[static_cast<std::size_t>(i)] == two.assignment[0];
        for (int i = 11; i < 20; ++i) pure &= two.assignment[static_cast<std::size_t>(i)] == two.assignment[10];
        double wsum = 0.0;
        for (double w : two.weights) wsum += w;
        const double secs = seconds_since(t0);
        report(8, seq_ok && pure && wsum == 20.0 && secs < 10.0,
               fmt("Ward merges match the O(n^3) reference on 3x30-day fixtures %s, two-regime "
                   "recovery pure %s, weights sum to source days, %.1f s (<10)",
                   seq_ok ? "yes" : "NO", pure ? "yes" : "NO", secs));
    }

    // ---- 9. Determinism: byte-identical reports. -------------------------
    {
        const std::string cfg = source_dir + "/configs/toy.json";
        run_case_file(cfg, work + "/det_a", MarketDesign::EIM);
        run_case_file(cfg, work + "/det_b", MarketDesign::EIM);
        auto slurp = [](const std::string& p) {
            std::ifstream f(p);
            return std::string{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
        };
        const bool same = slurp(work + "/det_a/report.json") == slurp(work + "/det_b/report.json") &&
                          !slurp(work + "/det_a/report.json").empty();
        report(9, same, "two runs with identical config+seed produce byte-identical reports");
    }

    // ---- 10. Oscillation handling through the CLI. -----------------------
    {
        const std::string cfg = source_dir + "/configs/cycling.json";
        const std::string out = work + "/cycle";
        const std::string cmd = (bin_dir / "eimlab").string() + " run --config " + cfg + " --out " +
                                out + " >/dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        const int exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
        bool ok = exit_code == 3;
        double band_lo = 0, band_hi = 0, avg = 0;
        std::string status;
        if (ok && fs::exists(out + "/equilibrium.json")) {
            std::ifstream f(out + "/equilibrium.json");
            std::stringstream ss;
            ss << f.rdbuf();
            const std::string j = ss.str();
            // Scripted cycle totals: 150 / 250 / 350 repeating.
            auto grab = [&](const char* key) {
                const auto pos = j.find(key);
                return pos == std::string::npos ? -1.0 : std::atof(j.c_str() + pos + std::strlen(key));
            };
            band_lo = grab("\"band_low\": ");
            band_hi = grab("\"band_high\": ");
            avg = grab("\"average\": ");
            status = j.find("\"oscillating\"") != std::string::npos ? "oscillating" : "other";
            ok &= status == "oscillating" && band_lo == 150.0 && band_hi == 350.0 && avg == 250.0;
            for (const char* f2 : {"report.json", "table.csv", "dispatch.csv", "trace.jsonl"})
                ok &= fs::exists(out + "/" + f2);
        } else {
            ok = false;
        }
        report(10, ok,
               fmt("cycling fixture: exit code %d (=3), status %s, band [%.0f, %.0f] MW, average "
                   "%.0f MW, artifacts intact",
                   exit_code, status.c_str(), band_lo, band_hi, avg));
    }

    std::printf("%s: %d/10 criteria passed\n", g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                10 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
