#ifndef UAVRIS_CONE_HPP
#define UAVRIS_CONE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace uavris {

/// min c^T x  s.t.  equality rows, x_i >= 0 for nonneg_vars,
/// ||x_rest|| <= x_first for each SOC block, ||x_rest||^2 <= 2 a b (a, b >= 0) for each RSOC block.
struct ConeProgram {
    struct Term {
        std::size_t var;
        double coeff;
    };
    struct EqRow {
        std::vector<Term> terms;
        double rhs = 0.0;
        std::string name;
    };

    std::size_t num_vars = 0;
    std::vector<Term> objective;
    std::vector<EqRow> eq_constraints;
    std::vector<std::size_t> nonneg_vars;
    std::vector<std::vector<std::size_t>> soc_blocks;
    std::vector<std::vector<std::size_t>> rsoc_blocks;
    std::vector<std::string> var_names;

    std::size_t add_var(std::string name) {
        var_names.push_back(std::move(name));
        return num_vars++;
    }
    std::size_t add_nonneg_var(std::string name) {
        const std::size_t v = add_var(std::move(name));
        nonneg_vars.push_back(v);
        return v;
    }
    void add_cost(std::size_t var, double coeff) { objective.push_back({var, coeff}); }
    void add_eq(std::vector<Term> terms, double rhs, std::string name = {}) {
        eq_constraints.push_back({std::move(terms), rhs, std::move(name)});
    }
    void add_soc(std::vector<std::size_t> block) { soc_blocks.push_back(std::move(block)); }
    void add_rsoc(std::vector<std::size_t> block) { rsoc_blocks.push_back(std::move(block)); }

    std::string name_of(std::size_t v) const {
        if (v < var_names.size() && !var_names[v].empty()) return var_names[v];
        return "x" + std::to_string(v);
    }

    std::vector<double> dense_objective() const {
        std::vector<double> c(num_vars, 0.0);
        for (const auto& t : objective) c.at(t.var) += t.coeff;
        return c;
    }

    double objective_value(const std::vector<double>& x) const {
        double v = 0.0;
        for (const auto& t : objective) v += t.coeff * x.at(t.var);
        return v;
    }
};

/// Structural checks. Empty result means the program is well formed.
inline std::vector<std::string> validate(const ConeProgram& p) {
    std::vector<std::string> errors;
    auto in_range = [&](std::size_t v, const std::string& where) {
        if (v >= p.num_vars) {
            errors.push_back(where + ": index out of range (" + std::to_string(v) + " >= " + std::to_string(p.num_vars) +
                             ")");
            return false;
        }
        return true;
    };
    if (!p.var_names.empty() && p.var_names.size() != p.num_vars) errors.push_back("var_names: size mismatch");
    for (const auto& t : p.objective) {
        if (in_range(t.var, "objective") && !std::isfinite(t.coeff))
            errors.push_back("objective: non-finite coefficient on " + p.name_of(t.var));
    }
    for (std::size_t i = 0; i < p.eq_constraints.size(); ++i) {
        const auto& row = p.eq_constraints[i];
        const std::string where = "eq[" + std::to_string(i) + (row.name.empty() ? "" : " " + row.name) + "]";
        if (!std::isfinite(row.rhs)) errors.push_back(where + ": non-finite rhs");
        for (const auto& t : row.terms)
            if (in_range(t.var, where) && !std::isfinite(t.coeff))
                errors.push_back(where + ": non-finite coefficient on " + p.name_of(t.var));
    }
    for (std::size_t v : p.nonneg_vars) in_range(v, "nonneg");
    auto check_block = [&](const std::vector<std::size_t>& b, std::size_t min_size, const std::string& where) {
        if (b.size() < min_size) {
            errors.push_back(where + ": needs at least " + std::to_string(min_size) + " entries");
            return;
        }
        std::set<std::size_t> seen;
        for (std::size_t v : b) {
            if (!in_range(v, where)) continue;
            if (!seen.insert(v).second) errors.push_back(where + ": variable " + p.name_of(v) + " repeated in block");
        }
    };
    for (std::size_t i = 0; i < p.soc_blocks.size(); ++i) check_block(p.soc_blocks[i], 1, "soc[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < p.rsoc_blocks.size(); ++i)
        check_block(p.rsoc_blocks[i], 2, "rsoc[" + std::to_string(i) + "]");
    return errors;
}

struct ResidualReport {
    double primal_residual = 0.0;  // max_i |a_i^T x - b_i| / (1 + |b_i|)
    double cone_violation = 0.0;   // largest distance-like violation over all cone constraints
};

/// Substitutes x into every constraint. Independent of any solver state.
inline ResidualReport check_residuals(const ConeProgram& p, const std::vector<double>& x) {
    ResidualReport r;
    for (const auto& row : p.eq_constraints) {
        double lhs = 0.0;
        for (const auto& t : row.terms) lhs += t.coeff * x.at(t.var);
        r.primal_residual = std::max(r.primal_residual, std::abs(lhs - row.rhs) / (1.0 + std::abs(row.rhs)));
    }
    for (std::size_t v : p.nonneg_vars) r.cone_violation = std::max(r.cone_violation, -x.at(v));
    for (const auto& b : p.soc_blocks) {
        double nrm = 0.0;
        for (std::size_t i = 1; i < b.size(); ++i) nrm += x.at(b[i]) * x.at(b[i]);
        r.cone_violation = std::max(r.cone_violation, std::sqrt(nrm) - x.at(b[0]));
    }
    for (const auto& b : p.rsoc_blocks) {
        // same test as the rotated form ||((a-b)/sqrt2, x)|| <= (a+b)/sqrt2
        const double a = x.at(b[0]), c = x.at(b[1]);
        double nrm = (a - c) * (a - c) / 2.0;
        for (std::size_t i = 2; i < b.size(); ++i) nrm += x.at(b[i]) * x.at(b[i]);
        r.cone_violation = std::max(r.cone_violation, std::sqrt(nrm) - (a + c) / std::sqrt(2.0));
    }
    r.cone_violation = std::max(r.cone_violation, 0.0);
    return r;
}

/// Plain-text dump, one constraint per line.
inline void dump_program(const ConeProgram& p, std::ostream& os) {
    os << "vars " << p.num_vars << '\n';
    os << "minimize";
    for (const auto& t : p.objective) os << ' ' << (t.coeff >= 0 ? "+" : "") << t.coeff << '*' << p.name_of(t.var);
    os << '\n';
    for (const auto& row : p.eq_constraints) {
        os << "eq";
        if (!row.name.empty()) os << " [" << row.name << ']';
        for (const auto& t : row.terms) os << ' ' << (t.coeff >= 0 ? "+" : "") << t.coeff << '*' << p.name_of(t.var);
        os << " = " << row.rhs << '\n';
    }
    for (std::size_t v : p.nonneg_vars) os << "nonneg " << p.name_of(v) << '\n';
    for (const auto& b : p.soc_blocks) {
        os << "soc";
        for (std::size_t v : b) os << ' ' << p.name_of(v);
        os << '\n';
    }
    for (const auto& b : p.rsoc_blocks) {
        os << "rsoc";
        for (std::size_t v : b) os << ' ' << p.name_of(v);
        os << '\n';
    }
}

inline std::string dump_program(const ConeProgram& p) {
    std::ostringstream os;
    dump_program(p, os);
    return os.str();
}

}  // namespace uavris

#endif  // UAVRIS_CONE_HPP
