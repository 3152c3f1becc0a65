#include "eimlab/report.hpp"

#include "eimlab/ins.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace eimlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Probability-weighted empirical quantile with linear interpolation on the
// midpoint CDF.
double weighted_quantile(std::vector<std::pair<double, double>> value_prob, double q) {
    if (value_prob.empty()) return 0.0;
    std::sort(value_prob.begin(), value_prob.end());
    double total = 0.0;
    for (const auto& [v, p] : value_prob) total += p;
    if (total <= 0.0) return value_prob.back().first;
    double cum = 0.0;
    std::vector<double> pos(value_prob.size());
    for (std::size_t i = 0; i < value_prob.size(); ++i) {
        pos[i] = (cum + value_prob[i].second / 2.0) / total;
        cum += value_prob[i].second;
    }
    if (q <= pos.front()) return value_prob.front().first;
    if (q >= pos.back()) return value_prob.back().first;
    for (std::size_t i = 1; i < pos.size(); ++i)
        if (q <= pos[i]) {
            const double f = (q - pos[i - 1]) / (pos[i] - pos[i - 1]);
            return value_prob[i - 1].first + f * (value_prob[i].first - value_prob[i - 1].first);
        }
    return value_prob.back().first;
}

struct IolrFigures {
    bool present = false;
    double mean = 0.0;
    double cvar = 0.0;
    std::vector<double> scenario_profit;
};

// Insurer cashflows recomputed from first principles (the same path the
// audit uses) so that stored and regenerated reports agree bit for bit.
IolrFigures iolr_figures(const Market& final_market, const std::vector<std::size_t>& indep_units,
                         const std::vector<double>& indep_caps, const std::vector<int>& contracts,
                         const std::vector<InsCandidate>& candidates,
                         const std::vector<double>& contracted_caps, GammaLink link) {
    IolrFigures out;
    if (final_market.config.design != MarketDesign::EIM) return out;
    out.present = true;

    // Shed basis: the market without the contracted fleet.
    Market basis = final_market;
    std::size_t keep = basis.units.size();
    while (keep > 0 && basis.units[keep - 1].kind == UnitKind::iolr_contracted) --keep;
    basis.units.resize(keep);
    for (std::size_t i = 0; i < indep_units.size(); ++i)
        basis.units[indep_units[i]].capacity = indep_caps[i];

    InsInput input;
    input.market = &basis;
    input.ex_ante_shed.resize(basis.scenarios.n_scenarios());
    for (std::size_t w = 0; w < basis.scenarios.n_scenarios(); ++w) {
        const DispatchOutcome o = clear_scenario(basis, w, basis.config.shed_cost_mode);
        input.ex_ante_shed[w] = allocate_shed(o, basis, AllocationMode::priority, basis.config.seed).shed;
    }
    input.candidates = candidates;

    IolrDecision dec;
    dec.contracts = contracts;
    dec.contracted_capacity = contracted_caps;
    dec.scenario_profit.assign(basis.scenarios.n_scenarios(), 0.0);
    // Fill ex-post shed analytically for the audit recomputation.
    const double total_cap = std::accumulate(contracted_caps.begin(), contracted_caps.end(), 0.0);
    std::vector<std::size_t> order(basis.strips.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return basis.strips[a].compensation_value > basis.strips[b].compensation_value;
    });
    dec.ex_post_shed.resize(basis.scenarios.n_scenarios());
    for (std::size_t w = 0; w < basis.scenarios.n_scenarios(); ++w) {
        const std::size_t T = basis.scenarios.n_intervals(w);
        dec.ex_post_shed[w].assign(basis.strips.size(), std::vector<double>(T, 0.0));
        for (std::size_t t = 0; t < T; ++t) {
            if (link == GammaLink::paper_literal_link) {
                for (std::size_t d = 0; d < basis.strips.size(); ++d)
                    dec.ex_post_shed[w][d][t] =
                        std::max(0.0, input.ex_ante_shed[w][d][t] - total_cap);
            } else {
                double remaining = total_cap;
                for (std::size_t d : order) {
                    const double ante = input.ex_ante_shed[w][d][t];
                    const double restored = std::min(ante, remaining);
                    dec.ex_post_shed[w][d][t] = ante - restored;
                    remaining -= restored;
                }
            }
        }
    }

    double premium = 0.0, avail_cost = 0.0;
    for (std::size_t d = 0; d < basis.strips.size(); ++d)
        premium += contracts[d] * basis.strips[d].premium_rate * basis.strips[d].peak_demand;
    for (std::size_t c = 0; c < candidates.size(); ++c)
        avail_cost += contracted_caps[c] * availability_price(basis, candidates[c]);
    for (std::size_t w = 0; w < basis.scenarios.n_scenarios(); ++w) {
        double payout = 0.0;
        for (std::size_t d = 0; d < basis.strips.size(); ++d) {
            if (!contracts[d]) continue;
            for (std::size_t t = 0; t < basis.scenarios.n_intervals(w); ++t)
                payout += basis.scenarios.interval_weight(w, t) *
                          basis.strips[d].compensation_value * dec.ex_post_shed[w][d][t];
        }
        dec.scenario_profit[w] = premium - payout - avail_cost;
    }
    std::vector<double> probs(basis.scenarios.n_scenarios());
    for (std::size_t w = 0; w < probs.size(); ++w) probs[w] = basis.scenarios.scenarios[w].probability;
    const RiskAssessment risk = cvar(dec.scenario_profit, probs, basis.iolr.cvar_confidence);
    out.mean = risk.mean_profit;
    out.cvar = risk.cvar;
    out.scenario_profit = dec.scenario_profit;
    return out;
}

struct ReportInputs {
    const Market* market = nullptr; // final market incl contracted fleet
    std::string status;
    std::vector<std::size_t> independent_units;
    std::vector<double> independent_capacity;
    std::vector<int> contracts;
    std::vector<double> contracted_capacity;
    std::vector<InsCandidate> candidates;
    GammaLink link = GammaLink::paper_literal_link;
    OscillationReport oscillation;
    std::int64_t total_sweeps = 0;
    int outer_iterations = 0;
    bool multistart_agree = true;
    std::vector<double> price_bands;
};

RunReport compute_report(const ReportInputs& in,
                         std::vector<DispatchOutcome>* outcomes_out = nullptr,
                         std::vector<ShedAllocation>* allocs_out = nullptr) {
    const Market& mkt = *in.market;
    RunReport rep;
    rep.design = mkt.config.design == MarketDesign::EOM ? "eom" : "eim";
    rep.status = in.status;
    rep.oscillation = in.oscillation;
    rep.total_sweeps = in.total_sweeps;
    rep.outer_iterations = in.outer_iterations;
    rep.multistart_agree = in.multistart_agree;
    rep.price_bands = in.price_bands;

    for (const auto& u : mkt.units) {
        if (u.kind == UnitKind::independent) rep.independent_capacity += u.capacity;
        else if (u.kind == UnitKind::iolr_contracted) rep.contracted_capacity += u.capacity;
        else rep.vre_capacity += u.capacity;
    }
    rep.total_capacity = rep.independent_capacity + rep.contracted_capacity;

    // Final dispatch at the equilibrium capacities.
    const AllocationMode alloc_mode =
        mkt.config.design == MarketDesign::EIM
            ? AllocationMode::priority
            : (mkt.config.eom_allocation == EomAllocation::pro_rata ? AllocationMode::pro_rata
                                                                    : AllocationMode::seeded_random);
    const std::size_t W = mkt.scenarios.n_scenarios();
    const std::size_t D = mkt.strips.size();
    std::vector<DispatchOutcome> outcomes;
    std::vector<ShedAllocation> allocs;
    for (std::size_t w = 0; w < W; ++w) {
        outcomes.push_back(clear_scenario(mkt, w, mkt.config.shed_cost_mode));
        allocs.push_back(allocate_shed(outcomes.back(), mkt, alloc_mode, mkt.config.seed));
    }

    // Lost load per strip: % of strip annual energy, mean and P95 across
    // scenarios; VOLL in dollars.
    std::vector<std::vector<double>> ll_pct(D, std::vector<double>(W, 0.0));
    std::vector<double> voll(W, 0.0), probs(W);
    for (std::size_t w = 0; w < W; ++w) {
        probs[w] = mkt.scenarios.scenarios[w].probability;
        for (std::size_t d = 0; d < D; ++d) {
            double lost = 0.0, energy = 0.0;
            for (std::size_t t = 0; t < outcomes[w].n_intervals; ++t) {
                const double wt = mkt.scenarios.interval_weight(w, t);
                lost += wt * allocs[w].shed[d][t];
                energy += wt * mkt.scenarios.strip_demand(w, d, t);
            }
            ll_pct[d][w] = energy > 0.0 ? 100.0 * lost / energy : 0.0;
            voll[w] += mkt.strips[d].compensation_value * lost;
        }
    }
    for (std::size_t d = 0; d < D; ++d) {
        StripLostLoad s;
        s.id = mkt.strips[d].id;
        for (std::size_t w = 0; w < W; ++w) s.mean_pct += probs[w] * ll_pct[d][w];
        std::vector<std::pair<double, double>> vp;
        for (std::size_t w = 0; w < W; ++w) vp.emplace_back(ll_pct[d][w], probs[w]);
        s.p95_pct = weighted_quantile(std::move(vp), 0.95);
        rep.lost_load.push_back(std::move(s));
    }
    for (std::size_t w = 0; w < W; ++w) rep.voll_mean += probs[w] * voll[w];
    {
        std::vector<std::pair<double, double>> vp;
        for (std::size_t w = 0; w < W; ++w) vp.emplace_back(voll[w], probs[w]);
        rep.voll_p95 = weighted_quantile(std::move(vp), 0.95);
    }

    const Settlement settle_res = settle(mkt, outcomes);
    rep.consumer_energy_cost = settle_res.consumer_energy_cost;
    for (std::size_t d = 0; d < D; ++d)
        if (!in.contracts.empty() && in.contracts[d])
            rep.consumer_insurance_cost += mkt.strips[d].premium_rate * mkt.strips[d].peak_demand;

    const IolrFigures iolr = iolr_figures(mkt, in.independent_units, in.independent_capacity,
                                          in.contracts.empty() ? std::vector<int>(D, 0) : in.contracts,
                                          in.candidates, in.contracted_capacity, in.link);
    rep.has_iolr = iolr.present;
    rep.iolr_mean_profit = iolr.mean;
    rep.iolr_cvar = iolr.cvar;

    // Price duration data.
    const double cap = mkt.config.price_cap;
    for (std::size_t w = 0; w < W; ++w) {
        ScenarioPrices sp;
        sp.scenario = mkt.scenarios.scenarios[w].id;
        sp.band_hours.assign(rep.price_bands.size(), 0.0);
        double hours = 0.0, price_sum = 0.0;
        for (std::size_t t = 0; t < outcomes[w].n_intervals; ++t) {
            const double wt = mkt.scenarios.interval_weight(w, t);
            const double p = outcomes[w].settled_price[t];
            hours += wt;
            price_sum += wt * p;
            if (p >= cap - 1e-9) sp.hours_at_cap += wt;
            for (std::size_t b = 0; b < rep.price_bands.size(); ++b) {
                const double lo = rep.price_bands[b];
                const double hi = b + 1 < rep.price_bands.size()
                                      ? rep.price_bands[b + 1]
                                      : std::numeric_limits<double>::infinity();
                if (p >= lo && p < hi) sp.band_hours[b] += wt;
            }
        }
        sp.average_price = hours > 0.0 ? price_sum / hours : 0.0;
        rep.prices.push_back(std::move(sp));
    }

    if (outcomes_out) *outcomes_out = std::move(outcomes);
    if (allocs_out) *allocs_out = std::move(allocs);
    return rep;
}

json report_to_json(const RunReport& r) {
    json j;
    j["design"] = r.design;
    j["status"] = r.status;
    j["capacity"] = {{"total", r.total_capacity},
                     {"independent", r.independent_capacity},
                     {"iolr_contracted", r.contracted_capacity},
                     {"vre", r.vre_capacity}};
    for (const auto& s : r.lost_load)
        j["lost_load"].push_back({{"strip", s.id}, {"mean_pct", s.mean_pct}, {"p95_pct", s.p95_pct}});
    j["voll"] = {{"mean", r.voll_mean}, {"p95", r.voll_p95}};
    if (r.has_iolr) j["iolr_profit"] = {{"mean", r.iolr_mean_profit}, {"cvar", r.iolr_cvar}};
    j["consumer_costs"] = {{"energy", r.consumer_energy_cost},
                           {"insurance", r.consumer_insurance_cost},
                           {"total", r.consumer_energy_cost + r.consumer_insurance_cost}};
    j["price_bands"] = r.price_bands;
    for (const auto& p : r.prices)
        j["prices"].push_back({{"scenario", p.scenario},
                               {"hours_at_cap", p.hours_at_cap},
                               {"average_price", p.average_price},
                               {"band_hours", p.band_hours}});
    j["iterations"] = {{"sweeps", r.total_sweeps}, {"outer", r.outer_iterations}};
    j["multistart_agree"] = r.multistart_agree;
    if (r.oscillation.cycling || r.status != "converged")
        j["oscillation"] = {{"cycling", r.oscillation.cycling},
                            {"period", r.oscillation.period},
                            {"band_low", r.oscillation.band_low},
                            {"band_high", r.oscillation.band_high},
                            {"average", r.oscillation.average}};
    // P95 convention: probability-weighted empirical quantile at 0.95 with
    // linear interpolation on the midpoint CDF.
    j["conventions"] = {{"p95", "weighted midpoint-CDF quantile, linear interpolation"},
                        {"average_price", "time-weighted settled price"},
                        {"scenario_probabilities", "uniform unless configured"}};
    return j;
}

} // namespace

void write_report_json(const RunReport& report, const std::string& path) {
    std::ofstream f(path);
    f << report_to_json(report).dump(1) << "\n";
}

RunReport read_report_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_report_json: cannot open " + path);
    json j;
    f >> j;
    RunReport r;
    r.design = j["design"].get<std::string>();
    r.status = j["status"].get<std::string>();
    r.total_capacity = j["capacity"]["total"].get<double>();
    r.independent_capacity = j["capacity"]["independent"].get<double>();
    r.contracted_capacity = j["capacity"]["iolr_contracted"].get<double>();
    r.vre_capacity = j["capacity"]["vre"].get<double>();
    if (j.contains("lost_load"))
        for (const auto& js : j["lost_load"])
            r.lost_load.push_back({js["strip"].get<std::string>(), js["mean_pct"].get<double>(),
                                   js["p95_pct"].get<double>()});
    r.voll_mean = j["voll"]["mean"].get<double>();
    r.voll_p95 = j["voll"]["p95"].get<double>();
    r.has_iolr = j.contains("iolr_profit");
    if (r.has_iolr) {
        r.iolr_mean_profit = j["iolr_profit"]["mean"].get<double>();
        r.iolr_cvar = j["iolr_profit"]["cvar"].get<double>();
    }
    r.consumer_energy_cost = j["consumer_costs"]["energy"].get<double>();
    r.consumer_insurance_cost = j["consumer_costs"]["insurance"].get<double>();
    r.price_bands = j["price_bands"].get<std::vector<double>>();
    if (j.contains("prices"))
        for (const auto& jp : j["prices"]) {
            ScenarioPrices p;
            p.scenario = jp["scenario"].get<std::string>();
            p.hours_at_cap = jp["hours_at_cap"].get<double>();
            p.average_price = jp["average_price"].get<double>();
            p.band_hours = jp["band_hours"].get<std::vector<double>>();
            r.prices.push_back(std::move(p));
        }
    r.total_sweeps = j["iterations"]["sweeps"].get<std::int64_t>();
    r.outer_iterations = j["iterations"]["outer"].get<int>();
    r.multistart_agree = j.value("multistart_agree", true);
    return r;
}

void emit_duration_csv(const RunReport& r, const std::string& path) {
    std::ofstream f(path);
    f << "scenario,hours_at_cap,average_price";
    for (std::size_t b = 0; b < r.price_bands.size(); ++b) {
        const std::string hi = b + 1 < r.price_bands.size() ? num(r.price_bands[b + 1]) : "inf";
        f << ",hours_" << num(r.price_bands[b]) << "_" << hi;
    }
    f << "\n";
    for (const auto& p : r.prices) {
        f << p.scenario << "," << num(p.hours_at_cap) << "," << num(p.average_price);
        for (double h : p.band_hours) f << "," << num(h);
        f << "\n";
    }
}

namespace {

void write_table_csv(const RunReport& r, const std::string& path) {
    std::ofstream f(path);
    f << "metric,value\n";
    f << "design," << r.design << "\n";
    f << "status," << r.status << "\n";
    f << "total_capacity_mw," << num(r.total_capacity) << "\n";
    f << "independent_capacity_mw," << num(r.independent_capacity) << "\n";
    f << "iolr_contracted_capacity_mw," << num(r.contracted_capacity) << "\n";
    f << "vre_capacity_mw," << num(r.vre_capacity) << "\n";
    for (const auto& s : r.lost_load) {
        f << "lost_load_mean_pct_" << s.id << "," << num(s.mean_pct) << "\n";
        f << "lost_load_p95_pct_" << s.id << "," << num(s.p95_pct) << "\n";
    }
    f << "voll_mean_usd," << num(r.voll_mean) << "\n";
    f << "voll_p95_usd," << num(r.voll_p95) << "\n";
    if (r.has_iolr) {
        f << "iolr_profit_mean_usd," << num(r.iolr_mean_profit) << "\n";
        f << "iolr_profit_cvar_usd," << num(r.iolr_cvar) << "\n";
    }
    f << "consumer_energy_cost_usd," << num(r.consumer_energy_cost) << "\n";
    f << "consumer_insurance_cost_usd," << num(r.consumer_insurance_cost) << "\n";
    f << "consumer_total_cost_usd," << num(r.consumer_energy_cost + r.consumer_insurance_cost) << "\n";
}

void write_dispatch_csv(const Market& mkt, const std::vector<DispatchOutcome>& outcomes,
                        const std::vector<ShedAllocation>& allocs, const std::string& path) {
    std::ofstream f(path);
    f << "scenario,day,interval,price,settled_price";
    for (const auto& u : mkt.units) f << ",dispatch_" << u.id;
    for (const auto& s : mkt.strips) f << ",shed_" << s.id;
    f << "\n";
    for (std::size_t w = 0; w < outcomes.size(); ++w) {
        const auto& o = outcomes[w];
        for (std::size_t t = 0; t < o.n_intervals; ++t) {
            f << mkt.scenarios.scenarios[w].id << "," << t / 48 << "," << t % 48 << ","
              << num(o.price[t]) << "," << num(o.settled_price[t]);
            for (std::size_t g = 0; g < mkt.units.size(); ++g) f << "," << num(o.dispatch[g][t]);
            for (std::size_t d = 0; d < mkt.strips.size(); ++d) f << "," << num(allocs[w].shed[d][t]);
            f << "\n";
        }
    }
}

void write_equilibrium_json(const RunConfig& rc, const EquilibriumState& st, bool agree,
                            const std::string& path) {
    json j;
    j["status"] = to_string(st.status);
    j["outer_iterations"] = st.outer_count;
    j["total_sweeps"] = st.total_sweeps;
    j["multistart_agree"] = agree;
    for (std::size_t i = 0; i < st.independent_units.size(); ++i)
        j["independent"].push_back(
            {{"unit", rc.market.units[st.independent_units[i]].id},
             {"capacity", st.independent_capacity[i]}});
    for (std::size_t c = 0; c < rc.equilibrium.candidates.size(); ++c) {
        const auto& cand = rc.equilibrium.candidates[c];
        j["contracted"].push_back(
            {{"tech", rc.market.techs[static_cast<std::size_t>(cand.tech_index)].name},
             {"capacity", st.iolr.contracted_capacity.empty() ? 0.0 : st.iolr.contracted_capacity[c]}});
    }
    j["contracts"] = st.iolr.contracts.empty()
                         ? std::vector<int>(rc.market.strips.size(), 0)
                         : st.iolr.contracts;
    j["iolr_scenario_profit"] = st.iolr.scenario_profit;
    j["oscillation"] = {{"cycling", st.oscillation.cycling},
                        {"period", st.oscillation.period},
                        {"band_low", st.oscillation.band_low},
                        {"band_high", st.oscillation.band_high},
                        {"average", st.oscillation.average}};
    json tr = json::array();
    for (const auto& rec : st.trace)
        tr.push_back({{"outer", rec.outer}, {"inner", rec.inner}, {"capacity", rec.capacity}});
    j["trace"] = tr;
    std::ofstream f(path);
    f << j.dump(1) << "\n";
}

} // namespace

RunResult run_case(const RunConfig& rc, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    RunResult res;
    const ValidationReport vr = validate_model(rc.market);
    {
        std::ofstream vf(fs::path(out_dir) / "validation.txt");
        vf << (vr.ok() ? "ok\n" : vr.to_string());
    }
    if (!vr.ok()) {
        res.exit_code = 1;
        res.report.status = "validation_failed";
        return res;
    }
    {
        std::ofstream cf(fs::path(out_dir) / "config.json");
        cf << rc.raw_json << "\n";
    }
    save_scenario_set({rc.market.scenarios, rc.market.strips, rc.diagnostics},
                      (fs::path(out_dir) / "scenario_set.json").string());

    EquilibriumOptions eopts = rc.equilibrium;
    eopts.trace_path = (fs::path(out_dir) / "trace.jsonl").string();
    const auto starts = expand_starts(rc);
    MultiStartResult ms;
    try {
        ms = run_multistart(rc.market, eopts, starts);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.report.status = std::string("solver_failure: ") + e.what();
        std::ofstream ef(fs::path(out_dir) / "error.txt");
        ef << res.report.status << "\n";
        return res;
    }

    // Primary run: first converged start, else the first run.
    std::size_t primary = 0;
    for (std::size_t i = 0; i < ms.runs.size(); ++i)
        if (ms.runs[i].status == EqStatus::converged) {
            primary = i;
            break;
        }
    const EquilibriumState& st = ms.runs[primary];
    res.state = st;

    ReportInputs in;
    in.market = &st.market;
    in.status = to_string(st.status);
    in.independent_units = st.independent_units;
    in.independent_capacity = st.independent_capacity;
    in.contracts = st.iolr.contracts;
    in.contracted_capacity = st.iolr.contracted_capacity;
    in.candidates = rc.equilibrium.candidates;
    in.link = rc.equilibrium.link;
    in.oscillation = st.oscillation;
    in.total_sweeps = st.total_sweeps;
    in.outer_iterations = st.outer_count;
    in.multistart_agree = ms.agree;
    in.price_bands = rc.price_bands;

    std::vector<DispatchOutcome> outcomes;
    std::vector<ShedAllocation> allocs;
    res.report = compute_report(in, &outcomes, &allocs);

    write_report_json(res.report, (fs::path(out_dir) / "report.json").string());
    write_table_csv(res.report, (fs::path(out_dir) / "table.csv").string());
    write_dispatch_csv(st.market, outcomes, allocs, (fs::path(out_dir) / "dispatch.csv").string());
    emit_duration_csv(res.report, (fs::path(out_dir) / "price_duration.csv").string());
    write_equilibrium_json(rc, st, ms.agree, (fs::path(out_dir) / "equilibrium.json").string());
    {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json stats;
        stats["wall_seconds"] = secs; // excluded from determinism guarantees
        stats["runs"] = ms.runs.size();
        std::ofstream sf(fs::path(out_dir) / "stats.json");
        sf << stats.dump(1) << "\n";
    }

    res.exit_code = st.status == EqStatus::converged ? 0 : 3;
    return res;
}

RunResult run_case_file(const std::string& config_path, const std::string& out_dir,
                        std::optional<MarketDesign> design_override) {
    RunConfig rc = load_config(config_path);
    if (design_override) {
        rc.market.config.design = *design_override;
        json j = json::parse(rc.raw_json);
        j["design"] = *design_override == MarketDesign::EOM ? "eom" : "eim";
        rc.raw_json = j.dump(1);
    }
    return run_case(rc, out_dir);
}

std::vector<SweepPoint> sweep(const RunConfig& base, const std::string& axis,
                              const std::vector<double>& values, const std::string& out_dir) {
    std::vector<SweepPoint> points;
    fs::create_directories(out_dir);
    json base_json = json::parse(base.raw_json);
    for (double v : values) {
        SweepPoint pt;
        pt.axis_value = v;
        json j = base_json;
        if (axis == "rps") {
            j["rps"] = v;
        } else if (axis == "competitors") {
            // Round-robin the configured unit groups to n independents total.
            const int n = static_cast<int>(v);
            json units = json::array();
            const json orig = j.value("units", json::array());
            if (orig.empty()) {
                pt.failed = true;
                pt.error = "competitors axis requires units[]";
                points.push_back(pt);
                continue;
            }
            for (int i = 0; i < n; ++i) {
                json u = orig[static_cast<std::size_t>(i) % orig.size()];
                u["count"] = 1;
                u["id"] = u.value("id", "g") + "_n" + std::to_string(i + 1);
                units.push_back(u);
            }
            j["units"] = units;
        } else {
            pt.failed = true;
            pt.error = "unknown sweep axis: " + axis;
            points.push_back(pt);
            continue;
        }
        const fs::path pt_dir = fs::path(out_dir) / (axis + "_" + num(v));
        fs::create_directories(pt_dir);
        const fs::path cfg_path = pt_dir / "sweep_config.json";
        {
            std::ofstream cf(cfg_path);
            cf << j.dump(1) << "\n";
        }
        try {
            // Re-load so relative paths resolve against the new location.
            json jj = j;
            if (jj.contains("traces")) {
                const fs::path orig_dir = fs::path(base.source_path).parent_path();
                jj["traces"]["path"] =
                    fs::absolute(orig_dir / jj["traces"]["path"].get<std::string>()).string();
            }
            if (jj.contains("scenario_set")) {
                const fs::path orig_dir = fs::path(base.source_path).parent_path();
                jj["scenario_set"]["path"] =
                    fs::absolute(orig_dir / jj["scenario_set"]["path"].get<std::string>()).string();
            }
            {
                std::ofstream cf(cfg_path);
                cf << jj.dump(1) << "\n";
            }
            const RunResult rr = run_case_file(cfg_path.string(), pt_dir.string(), std::nullopt);
            pt.report = rr.report;
            if (rr.exit_code != 0 && rr.exit_code != 3) {
                pt.failed = true;
                pt.error = "exit code " + std::to_string(rr.exit_code);
            }
        } catch (const std::exception& e) {
            pt.failed = true;
            pt.error = e.what();
        }
        points.push_back(std::move(pt));
    }
    // Summary tables: capacity vs axis and lost load vs axis.
    std::ofstream sf(fs::path(out_dir) / "sweep.csv");
    sf << axis << ",failed,total_capacity_mw,independent_mw,iolr_contracted_mw,voll_mean_usd";
    if (!points.empty() && !points.front().report.lost_load.empty())
        for (const auto& s : points.front().report.lost_load) sf << ",lost_load_mean_pct_" << s.id;
    sf << "\n";
    for (const auto& pt : points) {
        sf << num(pt.axis_value) << "," << (pt.failed ? 1 : 0) << ","
           << num(pt.report.total_capacity) << "," << num(pt.report.independent_capacity) << ","
           << num(pt.report.contracted_capacity) << "," << num(pt.report.voll_mean);
        for (const auto& s : pt.report.lost_load) sf << "," << num(s.mean_pct);
        sf << "\n";
    }
    return points;
}

RunReport regenerate_report(const std::string& run_dir) {
    const fs::path dir(run_dir);
    json cfg;
    {
        std::ifstream f(dir / "config.json");
        if (!f) throw std::runtime_error("regenerate_report: missing config.json in " + run_dir);
        f >> cfg;
    }
    // Rebuild the market against the stored scenario set for bit-stable
    // inputs, bypassing re-clustering.
    cfg.erase("traces");
    cfg["scenario_set"] = {{"path", "scenario_set.json"}};
    const fs::path tmp_cfg = dir / "_regen_config.json";
    {
        std::ofstream f(tmp_cfg);
        f << cfg.dump(1) << "\n";
    }
    RunConfig rc = load_config(tmp_cfg.string());
    fs::remove(tmp_cfg);

    json eq;
    {
        std::ifstream f(dir / "equilibrium.json");
        if (!f) throw std::runtime_error("regenerate_report: missing equilibrium.json in " + run_dir);
        f >> eq;
    }

    Market mkt = rc.market;
    std::vector<std::size_t> indep_units;
    std::vector<double> indep_caps;
    if (eq.contains("independent"))
        for (const auto& ji : eq["independent"]) {
            const std::string uid = ji["unit"].get<std::string>();
            for (std::size_t g = 0; g < mkt.units.size(); ++g)
                if (mkt.units[g].id == uid) {
                    mkt.units[g].capacity = ji["capacity"].get<double>();
                    indep_units.push_back(g);
                    indep_caps.push_back(mkt.units[g].capacity);
                }
        }
    std::vector<double> contracted;
    if (eq.contains("contracted"))
        for (const auto& jc : eq["contracted"]) {
            const double capv = jc["capacity"].get<double>();
            contracted.push_back(capv);
            if (capv <= 0.0) continue;
            GeneratorUnit u;
            u.id = "iolr_" + jc["tech"].get<std::string>();
            for (std::size_t ti = 0; ti < mkt.techs.size(); ++ti)
                if (mkt.techs[ti].name == jc["tech"].get<std::string>()) u.tech_index = static_cast<int>(ti);
            u.kind = UnitKind::iolr_contracted;
            u.capacity = capv;
            mkt.units.push_back(std::move(u));
        }

    ReportInputs in;
    in.market = &mkt;
    in.status = eq["status"].get<std::string>();
    in.independent_units = indep_units;
    in.independent_capacity = indep_caps;
    in.contracts = eq["contracts"].get<std::vector<int>>();
    in.contracted_capacity = contracted;
    in.candidates = rc.equilibrium.candidates;
    in.link = rc.equilibrium.link;
    in.total_sweeps = eq["total_sweeps"].get<std::int64_t>();
    in.outer_iterations = eq["outer_iterations"].get<int>();
    in.multistart_agree = eq.value("multistart_agree", true);
    in.price_bands = rc.price_bands;
    if (eq.contains("oscillation")) {
        in.oscillation.cycling = eq["oscillation"]["cycling"].get<bool>();
        in.oscillation.period = eq["oscillation"]["period"].get<int>();
        in.oscillation.band_low = eq["oscillation"]["band_low"].get<double>();
        in.oscillation.band_high = eq["oscillation"]["band_high"].get<double>();
        in.oscillation.average = eq["oscillation"]["average"].get<double>();
    }
    return compute_report(in);
}

} // namespace eimlab
