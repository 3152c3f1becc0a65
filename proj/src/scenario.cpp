#include "eimlab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace eimlab {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, std::size_t line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("trace parse error at line " + std::to_string(line_no) + ": bad " +
                                 what + " value '" + s + "'");
    }
}

} // namespace

std::vector<RawTrace> load_traces(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_traces: cannot open " + path);
    std::string header;
    if (!std::getline(f, header)) throw std::runtime_error("load_traces: empty file " + path);
    auto cols = split_csv(header);
    int c_scen = -1, c_ts = -1, c_dem = -1, c_av = -1;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] == "scenario") c_scen = static_cast<int>(i);
        else if (cols[i] == "timestamp") c_ts = static_cast<int>(i);
        else if (cols[i] == "demand_mw") c_dem = static_cast<int>(i);
        else if (cols[i] == "vre_availability") c_av = static_cast<int>(i);
    }
    if (c_ts < 0 || c_dem < 0 || c_av < 0)
        throw std::runtime_error("load_traces: header must contain timestamp,demand_mw,vre_availability");

    std::vector<RawTrace> traces;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != cols.size())
            throw std::runtime_error("trace parse error at line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(cols.size()) + " fields");
        const std::string sid = c_scen >= 0 ? fields[static_cast<std::size_t>(c_scen)] : "s1";
        auto [it, inserted] = index.try_emplace(sid, traces.size());
        if (inserted) {
            traces.push_back({});
            traces.back().scenario_id = sid;
        }
        RawTrace& tr = traces[it->second];
        const double ts = parse_number(fields[static_cast<std::size_t>(c_ts)], line_no, "timestamp");
        const double dem = parse_number(fields[static_cast<std::size_t>(c_dem)], line_no, "demand");
        const double av = parse_number(fields[static_cast<std::size_t>(c_av)], line_no, "availability");
        if (dem < 0.0)
            throw std::runtime_error("trace parse error at line " + std::to_string(line_no) +
                                     ": negative demand");
        if (av < 0.0 || av > 1.0)
            throw std::runtime_error("trace parse error at line " + std::to_string(line_no) +
                                     ": availability outside [0,1]");
        tr.timestamps.push_back(ts);
        tr.system_demand.push_back(dem);
        tr.vre_availability.push_back(av);
    }
    if (traces.empty()) throw std::runtime_error("load_traces: no data rows in " + path);

    for (const auto& tr : traces) {
        if (tr.system_demand.size() % 48 != 0)
            throw std::runtime_error("load_traces: scenario " + tr.scenario_id + " has " +
                                     std::to_string(tr.system_demand.size()) +
                                     " intervals, not whole half-hourly days");
        // Half-hourly spacing check where timestamps carry spacing info.
        if (tr.timestamps.size() > 2) {
            const double d0 = tr.timestamps[1] - tr.timestamps[0];
            for (std::size_t i = 2; i < tr.timestamps.size(); ++i) {
                const double d = tr.timestamps[i] - tr.timestamps[i - 1];
                if (std::abs(d - d0) > 1e-6 * std::max(1.0, std::abs(d0)))
                    throw std::runtime_error("load_traces: scenario " + tr.scenario_id +
                                             " has mixed interval lengths");
            }
        }
    }
    return traces;
}

double size_vre_capacity(const std::vector<RawTrace>& traces, double rps) {
    if (rps < 0.0 || rps > 1.0) throw std::invalid_argument("size_vre_capacity: rps outside [0,1]");
    if (rps == 0.0) return 0.0;
    double demand_energy = 0.0, avail_sum = 0.0, hours = 0.0;
    std::size_t n_avail = 0;
    for (const auto& tr : traces) {
        for (double d : tr.system_demand) demand_energy += 0.5 * d;
        for (double a : tr.vre_availability) avail_sum += a;
        n_avail += tr.vre_availability.size();
        hours += 0.5 * static_cast<double>(tr.system_demand.size());
    }
    const double n_scen = static_cast<double>(traces.size());
    const double mean_demand_energy = demand_energy / n_scen; // MWh per scenario-year
    const double mean_avail = n_avail ? avail_sum / static_cast<double>(n_avail) : 0.0;
    const double mean_hours = hours / n_scen;
    if (mean_avail <= 0.0)
        throw std::runtime_error("size_vre_capacity: rps > 0 with zero VRE availability");
    return rps * mean_demand_energy / (mean_avail * mean_hours);
}

WardResult ward_cluster(const std::vector<std::vector<double>>& x, std::size_t k) {
    const std::size_t n = x.size();
    if (k < 1 || k > n) throw std::invalid_argument("ward_cluster: k must lie in [1, n_days]");
    for (const auto& v : x)
        if (v.size() != x[0].size()) throw std::invalid_argument("ward_cluster: ragged features");

    // Active clusters; id = smallest member index, for deterministic ties.
    struct Cl {
        int id;
        double size;
        std::vector<std::size_t> members;
    };
    std::vector<Cl> cl;
    for (std::size_t i = 0; i < n; ++i) cl.push_back({static_cast<int>(i), 1.0, {i}});

    // Pairwise squared distances; Lance-Williams keeps them equal to twice
    // the Ward variance increase throughout.
    std::vector<std::vector<double>> d2(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t f = 0; f < x[0].size(); ++f) {
                const double d = x[i][f] - x[j][f];
                s += d * d;
            }
            d2[i][j] = d2[j][i] = s;
        }

    WardResult res;
    while (cl.size() > k) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < cl.size(); ++i)
            for (std::size_t j = i + 1; j < cl.size(); ++j) {
                const double v = d2[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                int ia = std::min(cl[i].id, cl[j].id), ib = std::max(cl[i].id, cl[j].id);
                int ba = std::min(cl[bi].id, cl[bj].id), bb = std::max(cl[bi].id, cl[bj].id);
                if (v < best || (v == best && (ia < ba || (ia == ba && ib < bb)))) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        res.merges.emplace_back(std::min(cl[bi].id, cl[bj].id), std::max(cl[bi].id, cl[bj].id));
        const double ni = cl[bi].size, nj = cl[bj].size;
        // Lance-Williams update of every other distance to the merged pair.
        for (std::size_t t = 0; t < cl.size(); ++t) {
            if (t == bi || t == bj) continue;
            const double nk = cl[t].size;
            const double upd = ((ni + nk) * d2[bi][t] + (nj + nk) * d2[bj][t] - nk * d2[bi][bj]) /
                               (ni + nj + nk);
            d2[bi][t] = d2[t][bi] = upd;
        }
        cl[bi].size += cl[bj].size;
        cl[bi].id = std::min(cl[bi].id, cl[bj].id);
        cl[bi].members.insert(cl[bi].members.end(), cl[bj].members.begin(), cl[bj].members.end());
        cl.erase(cl.begin() + static_cast<std::ptrdiff_t>(bj));
        for (auto& row : d2) row.erase(row.begin() + static_cast<std::ptrdiff_t>(bj));
        d2.erase(d2.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    // Stable cluster numbering: by cluster id ascending.
    std::vector<std::size_t> cidx(cl.size());
    std::iota(cidx.begin(), cidx.end(), 0);
    std::sort(cidx.begin(), cidx.end(), [&](std::size_t a, std::size_t b) { return cl[a].id < cl[b].id; });
    res.assignment.assign(n, -1);
    for (std::size_t c = 0; c < cidx.size(); ++c) {
        const Cl& cc = cl[cidx[c]];
        for (std::size_t mem : cc.members) res.assignment[mem] = static_cast<int>(c);
        res.weights.push_back(cc.size);
        std::vector<double> centroid(x[0].size(), 0.0);
        for (std::size_t mem : cc.members)
            for (std::size_t f = 0; f < x[0].size(); ++f) centroid[f] += x[mem][f];
        for (double& v : centroid) v /= cc.size;
        res.centroids.push_back(std::move(centroid));
    }
    return res;
}

namespace {

// Feature matrix for one scenario-year: per day, 48 demand values then 48
// availability values, z-scored per feature type across the whole year.
std::vector<std::vector<double>> day_features(const RawTrace& tr) {
    const std::size_t days = tr.n_days();
    double dmean = 0.0, dsd = 0.0, amean = 0.0, asd = 0.0;
    const double N = static_cast<double>(tr.system_demand.size());
    for (double v : tr.system_demand) dmean += v;
    for (double v : tr.vre_availability) amean += v;
    dmean /= N;
    amean /= N;
    for (double v : tr.system_demand) dsd += (v - dmean) * (v - dmean);
    for (double v : tr.vre_availability) asd += (v - amean) * (v - amean);
    dsd = std::sqrt(dsd / N);
    asd = std::sqrt(asd / N);
    if (dsd == 0.0) dsd = 1.0;
    if (asd == 0.0) asd = 1.0;

    std::vector<std::vector<double>> x(days, std::vector<double>(96, 0.0));
    for (std::size_t day = 0; day < days; ++day)
        for (std::size_t h = 0; h < 48; ++h) {
            x[day][h] = (tr.system_demand[day * 48 + h] - dmean) / dsd;
            x[day][48 + h] = (tr.vre_availability[day * 48 + h] - amean) / asd;
        }
    return x;
}

} // namespace

ScenarioBuild build_scenario_set(const std::vector<RawTrace>& traces,
                                 const std::vector<StripSpec>& strip_specs, double rps,
                                 const BuildOptions& opt) {
    if (traces.empty()) throw std::invalid_argument("build_scenario_set: no traces");
    if (strip_specs.empty()) throw std::invalid_argument("build_scenario_set: no strips");
    double share_sum = 0.0;
    for (const auto& s : strip_specs) share_sum += s.share;
    if (std::abs(share_sum - 1.0) > 1e-9)
        throw std::invalid_argument("build_scenario_set: strip shares must sum to 1");

    ScenarioBuild out;
    out.set.vre_capacity = size_vre_capacity(traces, rps);
    out.set.n_strips = strip_specs.size();
    out.diagnostics.tolerance = opt.energy_tolerance;

    const std::size_t D = strip_specs.size();
    for (std::size_t d = 0; d < D; ++d) {
        DemandStrip ds;
        ds.id = strip_specs[d].id;
        ds.compensation_value = strip_specs[d].compensation_value;
        ds.premium_rate = strip_specs[d].premium_rate;
        ds.peak_demand = 0.0;
        out.strips.push_back(std::move(ds));
    }

    for (const RawTrace& tr : traces) {
        const std::size_t days = tr.n_days();
        const std::size_t k = std::min(opt.rep_days, days);
        const auto feats = day_features(tr);
        const WardResult ward = ward_cluster(feats, k);

        Scenario sc;
        sc.id = tr.scenario_id;
        sc.rep_days.resize(k);
        std::vector<std::vector<std::size_t>> members(k);
        for (std::size_t day = 0; day < days; ++day)
            members[static_cast<std::size_t>(ward.assignment[day])].push_back(day);

        for (std::size_t c = 0; c < k; ++c) {
            RepDay rd;
            rd.weight = static_cast<double>(members[c].size());
            rd.vre_availability.assign(48, 0.0);
            rd.strip_demand.assign(D, std::vector<double>(48, 0.0));
            std::vector<double> sysd(48, 0.0);
            if (!opt.medoid) {
                for (std::size_t day : members[c])
                    for (std::size_t h = 0; h < 48; ++h) {
                        sysd[h] += tr.system_demand[day * 48 + h];
                        rd.vre_availability[h] += tr.vre_availability[day * 48 + h];
                    }
                for (std::size_t h = 0; h < 48; ++h) {
                    sysd[h] /= rd.weight;
                    rd.vre_availability[h] /= rd.weight;
                }
            } else {
                // Medoid: member closest to the cluster centroid in feature space.
                const auto& centroid = ward.centroids[c];
                std::size_t best_day = members[c][0];
                double best_d = std::numeric_limits<double>::infinity();
                for (std::size_t day : members[c]) {
                    double dd = 0.0;
                    for (std::size_t f = 0; f < centroid.size(); ++f) {
                        const double dl = feats[day][f] - centroid[f];
                        dd += dl * dl;
                    }
                    if (dd < best_d) {
                        best_d = dd;
                        best_day = day;
                    }
                }
                for (std::size_t h = 0; h < 48; ++h) {
                    sysd[h] = tr.system_demand[best_day * 48 + h];
                    rd.vre_availability[h] = tr.vre_availability[best_day * 48 + h];
                }
            }
            // Strip split: earlier strips take their share, the last takes
            // the remainder so the sum is exact.
            for (std::size_t h = 0; h < 48; ++h) {
                double rest = sysd[h];
                for (std::size_t d = 0; d + 1 < D; ++d) {
                    const double v = strip_specs[d].share * sysd[h];
                    rd.strip_demand[d][h] = v;
                    rest -= v;
                }
                rd.strip_demand[D - 1][h] = rest;
            }
            sc.rep_days[c] = std::move(rd);
        }
        out.set.scenarios.push_back(std::move(sc));

        // Energy conservation diagnostic.
        double src = 0.0, rep = 0.0;
        for (double v : tr.system_demand) src += 0.5 * v;
        for (const RepDay& rd : out.set.scenarios.back().rep_days)
            for (std::size_t d = 0; d < D; ++d)
                for (double v : rd.strip_demand[d]) rep += 0.5 * v * rd.weight;
        out.diagnostics.energy_error.push_back(std::abs(rep - src) / std::max(1.0, src));

        // Billing peaks from raw traces.
        for (std::size_t i = 0; i < tr.system_demand.size(); ++i) {
            double rest = tr.system_demand[i];
            for (std::size_t d = 0; d + 1 < D; ++d) {
                const double v = strip_specs[d].share * tr.system_demand[i];
                out.strips[d].peak_demand = std::max(out.strips[d].peak_demand, v);
                rest -= v;
            }
            out.strips[D - 1].peak_demand = std::max(out.strips[D - 1].peak_demand, rest);
        }
    }

    const double pi = 1.0 / static_cast<double>(out.set.scenarios.size());
    for (auto& sc : out.set.scenarios) sc.probability = pi;

    // Strip demand matrices for validation and engines.
    for (std::size_t d = 0; d < D; ++d) {
        out.strips[d].demand.resize(out.set.n_scenarios());
        for (std::size_t w = 0; w < out.set.n_scenarios(); ++w) {
            const std::size_t T = out.set.n_intervals(w);
            out.strips[d].demand[w].resize(T);
            for (std::size_t t = 0; t < T; ++t)
                out.strips[d].demand[w][t] = out.set.strip_demand(w, d, t);
        }
    }
    return out;
}

void save_scenario_set(const ScenarioBuild& build, const std::string& path) {
    nlohmann::json j;
    j["format"] = "eimlab-scenario-set";
    j["version"] = 1;
    j["vre_capacity_mw"] = build.set.vre_capacity;
    j["energy_error"] = build.diagnostics.energy_error;
    j["energy_tolerance"] = build.diagnostics.tolerance;
    for (const auto& s : build.strips) {
        nlohmann::json js;
        js["id"] = s.id;
        js["compensation_value"] = s.compensation_value;
        js["premium_rate"] = s.premium_rate;
        js["peak_demand"] = s.peak_demand;
        j["strips"].push_back(js);
    }
    for (const auto& sc : build.set.scenarios) {
        nlohmann::json js;
        js["id"] = sc.id;
        js["probability"] = sc.probability;
        for (const auto& rd : sc.rep_days) {
            nlohmann::json jd;
            jd["weight"] = rd.weight;
            jd["vre_availability"] = rd.vre_availability;
            jd["strip_demand"] = rd.strip_demand;
            js["rep_days"].push_back(jd);
        }
        j["scenarios"].push_back(js);
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_scenario_set: cannot open " + path);
    f << j.dump(1) << "\n";
}

ScenarioBuild load_scenario_set(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_scenario_set: cannot open " + path);
    nlohmann::json j;
    f >> j;
    if (j.value("format", "") != "eimlab-scenario-set")
        throw std::runtime_error("load_scenario_set: not a scenario-set document");
    ScenarioBuild out;
    out.set.vre_capacity = j["vre_capacity_mw"].get<double>();
    out.diagnostics.tolerance = j.value("energy_tolerance", 0.02);
    if (j.contains("energy_error"))
        out.diagnostics.energy_error = j["energy_error"].get<std::vector<double>>();
    for (const auto& js : j["strips"]) {
        DemandStrip s;
        s.id = js["id"].get<std::string>();
        s.compensation_value = js["compensation_value"].get<double>();
        s.premium_rate = js["premium_rate"].get<double>();
        s.peak_demand = js["peak_demand"].get<double>();
        out.strips.push_back(std::move(s));
    }
    out.set.n_strips = out.strips.size();
    for (const auto& js : j["scenarios"]) {
        Scenario sc;
        sc.id = js["id"].get<std::string>();
        sc.probability = js["probability"].get<double>();
        for (const auto& jd : js["rep_days"]) {
            RepDay rd;
            rd.weight = jd["weight"].get<double>();
            rd.vre_availability = jd["vre_availability"].get<std::vector<double>>();
            rd.strip_demand = jd["strip_demand"].get<std::vector<std::vector<double>>>();
            sc.rep_days.push_back(std::move(rd));
        }
        out.set.scenarios.push_back(std::move(sc));
    }
    for (std::size_t d = 0; d < out.strips.size(); ++d) {
        out.strips[d].demand.resize(out.set.n_scenarios());
        for (std::size_t w = 0; w < out.set.n_scenarios(); ++w) {
            const std::size_t T = out.set.n_intervals(w);
            out.strips[d].demand[w].resize(T);
            for (std::size_t t = 0; t < T; ++t)
                out.strips[d].demand[w][t] = out.set.strip_demand(w, d, t);
        }
    }
    return out;
}

} // namespace eimlab
