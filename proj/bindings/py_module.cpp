// Python bindings for the main operations: financial primitives, CVaR,
// clustering, single-interval dispatch, and full case runs.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eimlab/model.hpp"
#include "eimlab/oracle.hpp"
#include "eimlab/report.hpp"
#include "eimlab/risk.hpp"
#include "eimlab/scenario.hpp"

namespace py = pybind11;
using namespace eimlab;

namespace {

py::dict report_to_dict(const RunReport& r) {
    py::dict d;
    d["design"] = r.design;
    d["status"] = r.status;
    d["total_capacity_mw"] = r.total_capacity;
    d["independent_capacity_mw"] = r.independent_capacity;
    d["iolr_contracted_capacity_mw"] = r.contracted_capacity;
    d["vre_capacity_mw"] = r.vre_capacity;
    py::dict ll;
    for (const auto& s : r.lost_load) {
        py::dict e;
        e["mean_pct"] = s.mean_pct;
        e["p95_pct"] = s.p95_pct;
        ll[py::str(s.id)] = e;
    }
    d["lost_load"] = ll;
    d["voll_mean_usd"] = r.voll_mean;
    d["voll_p95_usd"] = r.voll_p95;
    if (r.has_iolr) {
        d["iolr_profit_mean_usd"] = r.iolr_mean_profit;
        d["iolr_profit_cvar_usd"] = r.iolr_cvar;
    }
    d["consumer_energy_cost_usd"] = r.consumer_energy_cost;
    d["consumer_insurance_cost_usd"] = r.consumer_insurance_cost;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "electricity market with a central reliability insurer: equilibrium laboratory";

    m.def("annuity_factor", &annuity_factor, py::arg("rate"), py::arg("life"),
          "annual payment per unit principal for a loan at `rate` over `life` years");

    m.def(
        "wacc",
        [](double equity_rate, double debt_rate, double gearing) {
            GeneratorTech t;
            t.equity_rate = equity_rate;
            t.debt_rate = debt_rate;
            t.gearing = gearing;
            return t.wacc();
        },
        py::arg("equity_rate"), py::arg("debt_rate"), py::arg("gearing"));

    m.def(
        "cvar",
        [](const std::vector<double>& profits, const std::vector<double>& probs, double alpha) {
            const RiskAssessment r = cvar(profits, probs, alpha);
            py::dict d;
            d["var"] = r.var;
            d["cvar"] = r.cvar;
            d["mean"] = r.mean_profit;
            return d;
        },
        py::arg("profits"), py::arg("probs"), py::arg("alpha"),
        "scenario CVaR (tail expectation of the worst 1-alpha probability mass)");

    m.def("expected_value_premium", &expected_value_premium, py::arg("expected_annual_payout"),
          py::arg("loading"));

    m.def(
        "ward_cluster",
        [](const std::vector<std::vector<double>>& features, std::size_t k) {
            const WardResult r = ward_cluster(features, k);
            py::dict d;
            d["assignment"] = r.assignment;
            d["weights"] = r.weights;
            d["merges"] = r.merges;
            return d;
        },
        py::arg("features"), py::arg("k"), "agglomerative Ward minimum-variance clustering");

    m.def(
        "reference_dispatch",
        [](const std::vector<std::pair<double, double>>& units,
           const std::vector<std::pair<double, double>>& strips) {
            std::vector<oracle::RefUnit> us;
            for (const auto& [cost, limit] : units) us.push_back({cost, limit});
            std::vector<oracle::RefStrip> ss;
            for (const auto& [demand, shed_cost] : strips) ss.push_back({demand, shed_cost});
            const oracle::RefDispatch r = oracle::reference_dispatch(us, ss);
            py::dict d;
            d["price"] = r.price;
            d["dispatch"] = r.dispatch;
            d["shed"] = r.shed;
            return d;
        },
        py::arg("units"), py::arg("strips"),
        "single-interval merit-order dispatch; units are (cost, limit), strips (demand, shed_cost)");

    m.def(
        "run_case",
        [](const std::string& config_path, const std::string& out_dir, const std::string& design) {
            std::optional<MarketDesign> ov;
            if (design == "eom") ov = MarketDesign::EOM;
            else if (design == "eim") ov = MarketDesign::EIM;
            else if (!design.empty()) throw std::invalid_argument("design must be eom or eim");
            const RunResult res = run_case_file(config_path, out_dir, ov);
            py::dict d = report_to_dict(res.report);
            d["exit_code"] = res.exit_code;
            return d;
        },
        py::arg("config_path"), py::arg("out_dir"), py::arg("design") = std::string(),
        "run one case end to end and write artifacts");

    m.def(
        "regenerate_report",
        [](const std::string& run_dir) { return report_to_dict(regenerate_report(run_dir)); },
        py::arg("run_dir"), "recompute a report from a run directory's raw artifacts");
}
