#include "eimlab/solver/model.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace eimlab::solver {

namespace {

std::string sanitize(const std::string& s, const char* fallback, int index) {
    std::string out;
    for (char c : s)
        out.push_back(std::isspace(static_cast<unsigned char>(c)) ? '_' : c);
    if (out.empty()) out = std::string(fallback) + std::to_string(index);
    return out;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct ColumnView {
    // (row, coef) per variable, in row order.
    std::vector<std::vector<std::pair<int, double>>> cols;
};

ColumnView columns_of(const ModelHandle& m) {
    ColumnView cv;
    cv.cols.resize(static_cast<std::size_t>(m.n_vars()));
    for (int r = 0; r < m.n_rows(); ++r)
        for (const auto& t : m.row_terms(r)) cv.cols[static_cast<std::size_t>(t.var)].emplace_back(r, t.coef);
    return cv;
}

} // namespace

void write_mps(const ModelHandle& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_mps: cannot open " + path);
    std::vector<std::string> vn(static_cast<std::size_t>(m.n_vars())), rn(static_cast<std::size_t>(m.n_rows()));
    for (int v = 0; v < m.n_vars(); ++v) vn[static_cast<std::size_t>(v)] = sanitize(m.var_name(v), "x", v);
    for (int r = 0; r < m.n_rows(); ++r) rn[static_cast<std::size_t>(r)] = sanitize(m.row_name(r), "c", r);

    f << "NAME          eimlab_model\n";
    if (m.objective_sense() == ObjSense::maximize) f << "OBJSENSE\n    MAX\n";
    f << "ROWS\n N  OBJ\n";
    for (int r = 0; r < m.n_rows(); ++r) {
        const char s = m.row_sense(r) == RowSense::le ? 'L' : m.row_sense(r) == RowSense::ge ? 'G' : 'E';
        f << " " << s << "  " << rn[static_cast<std::size_t>(r)] << "\n";
    }
    f << "COLUMNS\n";
    const ColumnView cv = columns_of(m);
    bool in_int = false;
    for (int v = 0; v < m.n_vars(); ++v) {
        const bool is_int = m.kind(v) == VarKind::binary;
        if (is_int && !in_int) {
            f << "    MARKER    'MARKER'    'INTORG'\n";
            in_int = true;
        } else if (!is_int && in_int) {
            f << "    MARKER    'MARKER'    'INTEND'\n";
            in_int = false;
        }
        const auto& name = vn[static_cast<std::size_t>(v)];
        if (m.obj_coef(v) != 0.0) f << "    " << name << "  OBJ  " << num(m.obj_coef(v)) << "\n";
        for (const auto& [r, c] : cv.cols[static_cast<std::size_t>(v)])
            f << "    " << name << "  " << rn[static_cast<std::size_t>(r)] << "  " << num(c) << "\n";
    }
    if (in_int) f << "    MARKER    'MARKER'    'INTEND'\n";
    f << "RHS\n";
    for (int r = 0; r < m.n_rows(); ++r)
        if (m.row_rhs(r) != 0.0) f << "    RHS  " << rn[static_cast<std::size_t>(r)] << "  " << num(m.row_rhs(r)) << "\n";
    f << "BOUNDS\n";
    for (int v = 0; v < m.n_vars(); ++v) {
        const auto& name = vn[static_cast<std::size_t>(v)];
        const double lo = m.lb(v), hi = m.ub(v);
        if (m.kind(v) == VarKind::binary && lo == 0.0 && hi == 1.0) {
            f << " BV BND  " << name << "\n";
            continue;
        }
        if (std::isinf(lo) && std::isinf(hi)) {
            f << " FR BND  " << name << "\n";
            continue;
        }
        if (lo == hi) {
            f << " FX BND  " << name << "  " << num(lo) << "\n";
            continue;
        }
        if (std::isinf(lo)) f << " MI BND  " << name << "\n";
        else if (lo != 0.0) f << " LO BND  " << name << "  " << num(lo) << "\n";
        if (!std::isinf(hi)) f << " UP BND  " << name << "  " << num(hi) << "\n";
    }
    f << "ENDATA\n";
}

void write_lp(const ModelHandle& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_lp: cannot open " + path);
    std::vector<std::string> vn(static_cast<std::size_t>(m.n_vars()));
    for (int v = 0; v < m.n_vars(); ++v) vn[static_cast<std::size_t>(v)] = sanitize(m.var_name(v), "x", v);

    f << (m.objective_sense() == ObjSense::maximize ? "Maximize\n" : "Minimize\n") << " obj:";
    bool first = true;
    for (int v = 0; v < m.n_vars(); ++v) {
        const double c = m.obj_coef(v);
        if (c == 0.0) continue;
        f << (c < 0 ? " - " : first ? " " : " + ") << num(std::abs(c)) << " " << vn[static_cast<std::size_t>(v)];
        first = false;
    }
    if (first) f << " 0 " << (m.n_vars() > 0 ? vn[0] : "x0");
    f << "\nSubject To\n";
    for (int r = 0; r < m.n_rows(); ++r) {
        f << " " << sanitize(m.row_name(r), "c", r) << ":";
        bool fst = true;
        for (const auto& t : m.row_terms(r)) {
            f << (t.coef < 0 ? " - " : fst ? " " : " + ") << num(std::abs(t.coef)) << " "
              << vn[static_cast<std::size_t>(t.var)];
            fst = false;
        }
        if (fst) f << " 0 " << (m.n_vars() > 0 ? vn[0] : "x0");
        const char* op = m.row_sense(r) == RowSense::le ? "<=" : m.row_sense(r) == RowSense::ge ? ">=" : "=";
        f << " " << op << " " << num(m.row_rhs(r)) << "\n";
    }
    f << "Bounds\n";
    for (int v = 0; v < m.n_vars(); ++v) {
        const double lo = m.lb(v), hi = m.ub(v);
        if (std::isinf(lo) && std::isinf(hi)) f << " " << vn[static_cast<std::size_t>(v)] << " free\n";
        else if (std::isinf(hi)) f << " " << num(lo) << " <= " << vn[static_cast<std::size_t>(v)] << "\n";
        else if (std::isinf(lo)) f << " -inf <= " << vn[static_cast<std::size_t>(v)] << " <= " << num(hi) << "\n";
        else f << " " << num(lo) << " <= " << vn[static_cast<std::size_t>(v)] << " <= " << num(hi) << "\n";
    }
    bool any_bin = false;
    for (int v = 0; v < m.n_vars(); ++v)
        if (m.kind(v) == VarKind::binary) {
            if (!any_bin) f << "Binaries\n";
            any_bin = true;
            f << " " << vn[static_cast<std::size_t>(v)] << "\n";
        }
    f << "End\n";
}

ModelHandle read_mps(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_mps: cannot open " + path);
    ModelHandle m;
    enum Sect { none, objsense, rows, columns, rhs, bounds, done } sect = none;
    std::map<std::string, int> row_ids;
    std::map<std::string, int> var_ids;
    std::vector<RowSense> senses;
    std::vector<std::string> row_names;
    // Terms are accumulated and rows materialized at the end.
    std::vector<std::vector<Term>> row_terms;
    std::vector<double> row_rhs_v;
    struct VarInfo {
        double lo = 0.0, hi = kInf, obj = 0.0;
        bool binary = false;
        bool lo_set = false, hi_set = false;
    };
    std::vector<VarInfo> vars;
    std::vector<std::string> var_names;
    bool in_int = false;
    bool maximize = false;

    auto var_of = [&](const std::string& name) {
        auto it = var_ids.find(name);
        if (it != var_ids.end()) return it->second;
        const int id = static_cast<int>(vars.size());
        var_ids[name] = id;
        vars.push_back({});
        vars.back().binary = in_int;
        var_names.push_back(name);
        return id;
    };

    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '*') continue;
        std::istringstream is(line);
        std::vector<std::string> tok;
        std::string t;
        while (is >> t) tok.push_back(t);
        if (tok.empty()) continue;
        if (!std::isspace(static_cast<unsigned char>(line[0]))) {
            const std::string& s = tok[0];
            if (s == "NAME") sect = none;
            else if (s == "OBJSENSE") sect = objsense;
            else if (s == "ROWS") sect = rows;
            else if (s == "COLUMNS") sect = columns;
            else if (s == "RHS") sect = rhs;
            else if (s == "RANGES") throw std::runtime_error("read_mps: RANGES not supported");
            else if (s == "BOUNDS") sect = bounds;
            else if (s == "ENDATA") sect = done;
            else throw std::runtime_error("read_mps: unknown section " + s);
            continue;
        }
        switch (sect) {
            case objsense:
                maximize = tok[0] == "MAX" || tok[0] == "MAXIMIZE";
                break;
            case rows: {
                if (tok.size() < 2) throw std::runtime_error("read_mps: bad ROWS line");
                if (tok[0] == "N") break; // objective row
                RowSense sn = tok[0] == "L" ? RowSense::le : tok[0] == "G" ? RowSense::ge : RowSense::eq;
                row_ids[tok[1]] = static_cast<int>(senses.size());
                senses.push_back(sn);
                row_names.push_back(tok[1]);
                row_terms.emplace_back();
                row_rhs_v.push_back(0.0);
                break;
            }
            case columns: {
                if (tok.size() >= 3 && tok[1] == "'MARKER'") {
                    in_int = tok[2] == "'INTORG'";
                    break;
                }
                const int v = var_of(tok[0]);
                for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
                    const double val = std::stod(tok[k + 1]);
                    if (tok[k] == "OBJ") vars[static_cast<std::size_t>(v)].obj = val;
                    else {
                        auto it = row_ids.find(tok[k]);
                        if (it == row_ids.end()) throw std::runtime_error("read_mps: unknown row " + tok[k]);
                        row_terms[static_cast<std::size_t>(it->second)].push_back({v, val});
                    }
                }
                break;
            }
            case rhs: {
                for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
                    auto it = row_ids.find(tok[k]);
                    if (it == row_ids.end()) throw std::runtime_error("read_mps: unknown rhs row " + tok[k]);
                    row_rhs_v[static_cast<std::size_t>(it->second)] = std::stod(tok[k + 1]);
                }
                break;
            }
            case bounds: {
                if (tok.size() < 3) throw std::runtime_error("read_mps: bad BOUNDS line");
                const std::string& kind = tok[0];
                const int v = var_of(tok[2]);
                auto& vi = vars[static_cast<std::size_t>(v)];
                const double val = tok.size() > 3 ? std::stod(tok[3]) : 0.0;
                if (kind == "UP") vi.hi = val;
                else if (kind == "LO") vi.lo = val;
                else if (kind == "FX") vi.lo = vi.hi = val;
                else if (kind == "FR") { vi.lo = -kInf; vi.hi = kInf; }
                else if (kind == "MI") vi.lo = -kInf;
                else if (kind == "PL") vi.hi = kInf;
                else if (kind == "BV") { vi.binary = true; vi.lo = 0.0; vi.hi = 1.0; }
                else throw std::runtime_error("read_mps: unknown bound kind " + kind);
                break;
            }
            default: break;
        }
    }

    for (std::size_t v = 0; v < vars.size(); ++v)
        m.add_var(var_names[v], vars[v].lo, vars[v].hi,
                  vars[v].binary ? VarKind::binary : VarKind::continuous, vars[v].obj);
    for (std::size_t r = 0; r < senses.size(); ++r)
        m.add_row(row_names[r], senses[r], row_rhs_v[r],
                  std::span<const Term>(row_terms[r].data(), row_terms[r].size()));
    m.set_objective_sense(maximize ? ObjSense::maximize : ObjSense::minimize);
    return m;
}

} // namespace eimlab::solver
