// Command-line front end: run one case, sweep an axis, or rebuild a report
// from a run directory. Exit codes: 0 success, 1 validation failure,
// 2 solver failure, 3 non-convergence (artifacts are kept in all cases).

#include "eimlab/report.hpp"

#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace {

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

void print_report(const eimlab::RunReport& r) {
    std::cout << "design: " << r.design << "  status: " << r.status << "\n";
    std::cout << "total capacity (MW): " << r.total_capacity
              << "  (independent " << r.independent_capacity << ", iolr " << r.contracted_capacity
              << ", vre " << r.vre_capacity << ")\n";
    for (const auto& s : r.lost_load)
        std::cout << "lost load " << s.id << ": mean " << s.mean_pct << "%  p95 " << s.p95_pct
                  << "%\n";
    std::cout << "value of lost load ($/yr): mean " << r.voll_mean << "  p95 " << r.voll_p95 << "\n";
    if (r.has_iolr)
        std::cout << "iolr profit ($/yr): mean " << r.iolr_mean_profit << "  cvar " << r.iolr_cvar
                  << "\n";
    std::cout << "consumer costs ($/yr): energy " << r.consumer_energy_cost << "  insurance "
              << r.consumer_insurance_cost << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"electricity market with a central reliability insurer: equilibrium laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", from_dir, axis_spec, design;

    CLI::App* run = app.add_subcommand("run", "run one case end to end");
    run->add_option("--config", config_path, "run configuration (JSON)")->required();
    run->add_option("--design", design, "override market design: eom|eim");
    run->add_option("--out", out_dir, "artifact directory");

    CLI::App* sw = app.add_subcommand("sweep", "run a sensitivity sweep");
    sw->add_option("--config", config_path, "run configuration (JSON)")->required();
    sw->add_option("--axis", axis_spec, "axis spec, e.g. rps=0,0.2,0.4 or competitors=3,6,9")
        ->required();
    sw->add_option("--out", out_dir, "artifact directory");

    CLI::App* rep = app.add_subcommand("report", "recompute a report from run artifacts");
    rep->add_option("--from", from_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            std::optional<eimlab::MarketDesign> ov;
            if (design == "eom") ov = eimlab::MarketDesign::EOM;
            else if (design == "eim") ov = eimlab::MarketDesign::EIM;
            else if (!design.empty()) {
                std::cerr << "unknown design: " << design << "\n";
                return 1;
            }
            const eimlab::RunResult res = eimlab::run_case_file(config_path, out_dir, ov);
            if (res.exit_code == 1) {
                std::cerr << "validation failed; see " << out_dir << "/validation.txt\n";
                return 1;
            }
            print_report(res.report);
            if (res.exit_code == 3)
                std::cerr << "no equilibrium: " << res.report.status << " (artifacts in " << out_dir
                          << ")\n";
            return res.exit_code;
        }
        if (sw->parsed()) {
            const auto eq = axis_spec.find('=');
            if (eq == std::string::npos) {
                std::cerr << "axis must look like rps=0,0.2,0.4\n";
                return 1;
            }
            const std::string axis = axis_spec.substr(0, eq);
            const std::vector<double> values = parse_values(axis_spec.substr(eq + 1));
            const eimlab::RunConfig rc = eimlab::load_config(config_path);
            const auto points = eimlab::sweep(rc, axis, values, out_dir);
            int failures = 0;
            for (const auto& pt : points) {
                std::cout << axis << "=" << pt.axis_value << ": "
                          << (pt.failed ? "FAILED " + pt.error
                                        : "total " + std::to_string(pt.report.total_capacity) + " MW")
                          << "\n";
                if (pt.failed) ++failures;
            }
            return failures == static_cast<int>(points.size()) && !points.empty() ? 2 : 0;
        }
        if (rep->parsed()) {
            const eimlab::RunReport regen = eimlab::regenerate_report(from_dir);
            const eimlab::RunReport stored = eimlab::read_report_json(from_dir + "/report.json");
            print_report(regen);
            const bool match = std::abs(regen.total_capacity - stored.total_capacity) < 1e-9 &&
                               std::abs(regen.voll_mean - stored.voll_mean) < 1e-6 &&
                               std::abs(regen.consumer_energy_cost - stored.consumer_energy_cost) <
                                   1e-6;
            if (!match) {
                std::cerr << "regenerated report diverges from stored report.json\n";
                return 2;
            }
            return 0;
        }
    } catch (const eimlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
