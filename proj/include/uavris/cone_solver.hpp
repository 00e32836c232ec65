#ifndef UAVRIS_CONE_SOLVER_HPP
#define UAVRIS_CONE_SOLVER_HPP

// Primal-dual interior point method on the homogeneous self-dual embedding of
//   min c^T x  s.t.  A x = b,  G x + s = h,  s in R+^l x Q^q1 x ... x Q^qN
// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.

#include <algorithm>
#include <cmath>
#include <optional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "cone.hpp"

namespace uavris {

enum class ConeStatus { Optimal, AlmostOptimal, Infeasible, Unbounded, MaxIter, NumericalError };

inline const char* to_string(ConeStatus s) {
    switch (s) {
        case ConeStatus::Optimal: return "optimal";
        case ConeStatus::AlmostOptimal: return "almost_optimal";
        case ConeStatus::Infeasible: return "infeasible";
        case ConeStatus::Unbounded: return "unbounded";
        case ConeStatus::MaxIter: return "max_iter";
        case ConeStatus::NumericalError: return "numerical_error";
    }
    return "unknown";
}

inline bool usable(ConeStatus s) { return s == ConeStatus::Optimal || s == ConeStatus::AlmostOptimal; }

struct ConeSolution {
    ConeStatus status = ConeStatus::NumericalError;
    std::vector<double> x;
    double objective_value = 0.0;
    double primal_residual = 0.0;
    double cone_violation = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

struct ConeSolverOptions {
    double tol = 1e-8;
    double loose_tol = 1e-6;  // accepted after a breakdown
    int max_iter = 200;
    double static_reg = 1e-9;
    int refine_steps = 8;
    double step_fraction = 0.99;
};

namespace ipm {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

struct SocScaling {
    double eta = 1.0;
    Vec w;  // normalized NT point, w0^2 - ||w1||^2 = 1
};

/// Cone layout: `lp` nonnegative rows followed by second-order blocks.
struct Cones {
    int lp = 0;
    std::vector<int> soc_dims;
    std::vector<int> soc_offsets;
    int dim = 0;

    int degree() const { return lp + static_cast<int>(soc_dims.size()); }
};

inline Vec identity_element(const Cones& k) {
    Vec e = Vec::Zero(k.dim);
    e.head(k.lp).setOnes();
    for (int off : k.soc_offsets) e[off] = 1.0;
    return e;
}

inline Vec jordan_product(const Cones& k, const Vec& u, const Vec& v) {
    Vec out(k.dim);
    out.head(k.lp) = u.head(k.lp).cwiseProduct(v.head(k.lp));
    for (std::size_t i = 0; i < k.soc_dims.size(); ++i) {
        const int off = k.soc_offsets[i], d = k.soc_dims[i];
        out[off] = u.segment(off, d).dot(v.segment(off, d));
        out.segment(off + 1, d - 1) = u[off] * v.segment(off + 1, d - 1) + v[off] * u.segment(off + 1, d - 1);
    }
    return out;
}

/// Solves lambda o x = v for x.
inline Vec jordan_divide(const Cones& k, const Vec& lambda, const Vec& v) {
    Vec out(k.dim);
    out.head(k.lp) = v.head(k.lp).cwiseQuotient(lambda.head(k.lp));
    for (std::size_t i = 0; i < k.soc_dims.size(); ++i) {
        const int off = k.soc_offsets[i], d = k.soc_dims[i];
        const double l0 = lambda[off];
        const auto l1 = lambda.segment(off + 1, d - 1);
        const double det = l0 * l0 - l1.squaredNorm();
        const double x0 = (l0 * v[off] - l1.dot(v.segment(off + 1, d - 1))) / det;
        out[off] = x0;
        out.segment(off + 1, d - 1) = (v.segment(off + 1, d - 1) - x0 * l1) / l0;
    }
    return out;
}

/// Largest alpha with u + alpha du in the cone (infinity if unbounded).
inline double max_step(const Cones& k, const Vec& u, const Vec& du) {
    double alpha = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k.lp; ++i)
        if (du[i] < 0.0) alpha = std::min(alpha, -u[i] / du[i]);
    for (std::size_t i = 0; i < k.soc_dims.size(); ++i) {
        const int off = k.soc_offsets[i], d = k.soc_dims[i];
        const double u0 = u[off], d0 = du[off];
        const auto u1 = u.segment(off + 1, d - 1);
        const auto d1 = du.segment(off + 1, d - 1);
        // f(a) = a2 a^2 + 2 b1 a + c0 = (u0 + a d0)^2 - ||u1 + a d1||^2
        const double a2 = d0 * d0 - d1.squaredNorm();
        const double b1 = u0 * d0 - u1.dot(d1);
        const double c0 = std::max(0.0, (u0 - u1.norm()) * (u0 + u1.norm()));
        double root = std::numeric_limits<double>::infinity();
        if (a2 == 0.0) {
            if (b1 < 0.0) root = -c0 / (2.0 * b1);
        } else {
            const double disc = b1 * b1 - a2 * c0;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                const double q = -(b1 + (b1 >= 0.0 ? sq : -sq));
                const double r1 = q / a2;
                const double r2 = q != 0.0 ? c0 / q : std::numeric_limits<double>::infinity();
                for (double r : {r1, r2})
                    if (r > 0.0) root = std::min(root, r);
            }
        }
        if (d0 < 0.0) root = std::min(root, -u0 / d0);
        alpha = std::min(alpha, root);
    }
    return alpha;
}

/// Distance-like measure of how far u is outside the cone (negative inside).
inline double cone_margin(const Cones& k, const Vec& u) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < k.lp; ++i) worst = std::max(worst, -u[i]);
    for (std::size_t i = 0; i < k.soc_dims.size(); ++i) {
        const int off = k.soc_offsets[i], d = k.soc_dims[i];
        worst = std::max(worst, u.segment(off + 1, d - 1).norm() - u[off]);
    }
    return worst;
}

struct Scaling {
    Vec lp_w;  // sqrt(s/z)
    std::vector<SocScaling> soc;
    Vec lambda;
};

inline Scaling nt_scaling(const Cones& k, const Vec& s, const Vec& z) {
    Scaling sc;
    sc.lp_w = (s.head(k.lp).cwiseQuotient(z.head(k.lp))).cwiseSqrt();
    sc.lambda.resize(k.dim);
    sc.lambda.head(k.lp) = (s.head(k.lp).cwiseProduct(z.head(k.lp))).cwiseSqrt();
    sc.soc.resize(k.soc_dims.size());
    for (std::size_t i = 0; i < k.soc_dims.size(); ++i) {
        const int off = k.soc_offsets[i], d = k.soc_dims[i];
        const Vec si = s.segment(off, d), zi = z.segment(off, d);
        const double sn1 = si.tail(d - 1).norm(), zn1 = zi.tail(d - 1).norm();
        const double sres = (si[0] - sn1) * (si[0] + sn1);
        const double zres = (zi[0] - zn1) * (zi[0] + zn1);
        const Vec sb = si / std::sqrt(sres);
        const Vec zb = zi / std::sqrt(zres);
        const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
        SocScaling& w = sc.soc[i];
        w.w.resize(d);
        w.w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
        w.w.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
        w.eta = std::pow(sres / zres, 0.25);
    }
    return sc;
}

/// y = W v (inverse = false) or W^{-1} v. W is symmetric.
inline Vec apply_scaling(const Cones& k, const Scaling& sc, const Vec& v, bool inverse) {
    Vec out(k.dim);
    if (inverse)
        out.head(k.lp) = v.head(k.lp).cwiseQuotient(sc.lp_w);
    else
        out.head(k.lp) = v.head(k.lp).cwiseProduct(sc.lp_w);
    for (std::size_t i = 0; i < k.soc_dims.size(); ++i) {
        const int off = k.soc_offsets[i], d = k.soc_dims[i];
        const SocScaling& w = sc.soc[i];
        const double w0 = w.w[0];
        const auto w1 = w.w.tail(d - 1);
        const double v0 = v[off];
        const auto v1 = v.segment(off + 1, d - 1);
        const double sgn = inverse ? -1.0 : 1.0;
        const double f = inverse ? 1.0 / w.eta : w.eta;
        const double w1v1 = w1.dot(v1);
        out[off] = f * (w0 * v0 + sgn * w1v1);
        out.segment(off + 1, d - 1) = f * (sgn * v0 * w1 + v1 + (w1v1 / (1.0 + w0)) * w1);
    }
    return out;
}

inline Scaling refresh_lambda(const Cones& k, Scaling sc, const Vec& z) {
    const Vec l = apply_scaling(k, sc, z, false);
    sc.lambda.segment(k.lp, k.dim - k.lp) = l.segment(k.lp, k.dim - k.lp);
    return sc;
}

class KktSystem {
public:
    KktSystem(const SpMat& A, const SpMat& G, const Cones& k, double reg) : A_(A), G_(G), k_(k), base_reg_(reg), reg_(reg) {
        n_ = static_cast<int>(A.cols());
        p_ = static_cast<int>(A.rows());
        dim_ = n_ + p_ + k.dim;
    }

    /// Retries with stronger regularization when a pivot breaks down, then falls back to LU.
    bool factor(const Scaling* sc) {
        for (double r = base_reg_; r <= 1e-4; r *= 100.0) {
            reg_ = r;
            if (factor_once(sc)) return true;
        }
        reg_ = base_reg_;
        factor_once(sc);
        ldlt_ok_ = false;
        return use_lu();
    }

    bool factor_once(const Scaling* sc) {
        lu_.reset();
        lu_failed_ = false;
        ldlt_ok_ = true;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(A_.nonZeros() + G_.nonZeros() + dim_ * 2);
        for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, reg_);
        for (int j = 0; j < A_.outerSize(); ++j)
            for (SpMat::InnerIterator it(A_, j); it; ++it) trip.emplace_back(n_ + it.row(), j, it.value());
        for (int i = 0; i < p_; ++i) trip.emplace_back(n_ + i, n_ + i, -reg_);
        for (int j = 0; j < G_.outerSize(); ++j)
            for (SpMat::InnerIterator it(G_, j); it; ++it) trip.emplace_back(n_ + p_ + it.row(), j, it.value());
        const int zo = n_ + p_;
        for (int i = 0; i < k_.lp; ++i) {
            const double w = sc ? sc->lp_w[i] : 1.0;
            trip.emplace_back(zo + i, zo + i, -w * w - reg_);
        }
        for (std::size_t c = 0; c < k_.soc_dims.size(); ++c) {
            const int off = k_.soc_offsets[c], d = k_.soc_dims[c];
            // W^T W = eta^2 (2 w w^T - J)
            for (int a = 0; a < d; ++a) {
                for (int b = 0; b <= a; ++b) {
                    double v = 0.0;
                    if (sc) {
                        const auto& w = sc->soc[c];
                        v = 2.0 * w.w[a] * w.w[b];
                        if (a == b) v += (a == 0 ? -1.0 : 1.0);
                        v *= w.eta * w.eta;
                    } else if (a == b) {
                        v = 1.0;
                    }
                    trip.emplace_back(zo + off + a, zo + off + b, -v - (a == b ? reg_ : 0.0));
                }
            }
        }
        K_.resize(dim_, dim_);
        K_.setFromTriplets(trip.begin(), trip.end());
        if (!analyzed_) {
            ldlt_.analyzePattern(K_);
            analyzed_ = true;
        }
        ldlt_.factorize(K_);
        if (ldlt_.info() != Eigen::Success) return false;
        return ldlt_.vectorD().allFinite();
    }

    /// Solves the unregularized system by iterative refinement on the regularized factor.
    /// Falls back to a pivoting LU when refinement stalls.
    Vec solve(const Vec& rhs, int refine_steps) const {
        const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
        if (!ldlt_ok_) return refine(rhs, lu_->solve(rhs), refine_steps, [&](const Vec& r) { return Vec(lu_->solve(r)); });
        Vec x = refine(rhs, ldlt_.solve(rhs), refine_steps, [&](const Vec& r) { return Vec(ldlt_.solve(r)); });
        const double res = (rhs - true_product(x)).lpNorm<Eigen::Infinity>();
        if (res <= 1e-10 * scale || !use_lu()) return x;
        Vec y = refine(rhs, lu_->solve(rhs), refine_steps, [&](const Vec& r) { return Vec(lu_->solve(r)); });
        return (rhs - true_product(y)).lpNorm<Eigen::Infinity>() < res ? y : x;
    }

private:
    template <class F>
    Vec refine(const Vec& rhs, Vec x, int steps, F&& inv) const {
        const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
        for (int i = 0; i < steps; ++i) {
            const Vec r = rhs - true_product(x);
            if (!r.allFinite()) break;
            if (r.lpNorm<Eigen::Infinity>() <= 1e-15 * scale) break;
            x += inv(r);
        }
        return x;
    }

    bool use_lu() const {
        if (lu_failed_) return false;
        if (!lu_) {
            SpMat full = K_.selfadjointView<Eigen::Lower>();
            full.makeCompressed();
            lu_ = std::make_unique<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>>();
            lu_->compute(full);
            if (lu_->info() != Eigen::Success) {
                lu_.reset();
                lu_failed_ = true;
                return false;
            }
        }
        return true;
    }

    Vec true_product(const Vec& v) const {
        Vec out = K_.selfadjointView<Eigen::Lower>() * v;
        out.head(n_) -= reg_ * v.head(n_);
        out.tail(dim_ - n_) += reg_ * v.tail(dim_ - n_);
        return out;
    }

    const SpMat& A_;
    const SpMat& G_;
    const Cones& k_;
    double base_reg_;
    double reg_;
    int n_ = 0, p_ = 0, dim_ = 0;
    SpMat K_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
    bool analyzed_ = false;
    mutable std::unique_ptr<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>> lu_;
    mutable bool lu_failed_ = false;
    bool ldlt_ok_ = true;
};

struct StandardForm {
    SpMat A, G;
    Vec b, c, h;
    Cones cones;
};

inline StandardForm lower(const ConeProgram& p) {
    StandardForm f;
    const int n = static_cast<int>(p.num_vars);
    f.c = Vec::Zero(n);
    for (const auto& t : p.objective) f.c[static_cast<int>(t.var)] += t.coeff;

    std::vector<Eigen::Triplet<double>> at;
    f.b.resize(static_cast<int>(p.eq_constraints.size()));
    for (std::size_t i = 0; i < p.eq_constraints.size(); ++i) {
        for (const auto& t : p.eq_constraints[i].terms) at.emplace_back(static_cast<int>(i), static_cast<int>(t.var), t.coeff);
        f.b[static_cast<int>(i)] = p.eq_constraints[i].rhs;
    }
    f.A.resize(static_cast<int>(p.eq_constraints.size()), n);
    f.A.setFromTriplets(at.begin(), at.end());

    std::vector<Eigen::Triplet<double>> gt;
    int row = 0;
    for (std::size_t v : p.nonneg_vars) gt.emplace_back(row++, static_cast<int>(v), -1.0);
    f.cones.lp = row;
    for (const auto& blk : p.soc_blocks) {
        f.cones.soc_offsets.push_back(row);
        f.cones.soc_dims.push_back(static_cast<int>(blk.size()));
        for (std::size_t v : blk) gt.emplace_back(row++, static_cast<int>(v), -1.0);
    }
    const double r2 = 1.0 / std::sqrt(2.0);
    for (const auto& blk : p.rsoc_blocks) {
        f.cones.soc_offsets.push_back(row);
        f.cones.soc_dims.push_back(static_cast<int>(blk.size()));
        const int a = static_cast<int>(blk[0]), b = static_cast<int>(blk[1]);
        gt.emplace_back(row, a, -r2);
        gt.emplace_back(row, b, -r2);
        ++row;
        gt.emplace_back(row, a, -r2);
        gt.emplace_back(row, b, r2);
        ++row;
        for (std::size_t i = 2; i < blk.size(); ++i) gt.emplace_back(row++, static_cast<int>(blk[i]), -1.0);
    }
    f.cones.dim = row;
    f.G.resize(row, n);
    f.G.setFromTriplets(gt.begin(), gt.end());
    f.h = Vec::Zero(row);
    return f;
}

inline void shift_into_cone(const Cones& k, Vec& u) {
    const double margin = cone_margin(k, u);
    if (k.dim == 0) return;
    if (margin >= 0.0) u += (1.0 + margin) * identity_element(k);
}

}  // namespace ipm

inline ConeSolution solve(const ConeProgram& program, double tol = 1e-8, int max_iter = 200,
                          ConeSolverOptions opts = {}) {
    using namespace ipm;
    opts.tol = tol;
    opts.max_iter = max_iter;
    ConeSolution out;
    if (!validate(program).empty()) {
        out.status = ConeStatus::NumericalError;
        return out;
    }
    const StandardForm f = lower(program);
    const Cones& k = f.cones;
    const int n = static_cast<int>(program.num_vars);
    const int p = static_cast<int>(f.b.size());
    const int m = k.dim;

    auto finish = [&](ConeStatus st, const Vec& xs) {
        out.status = st;
        out.x.assign(xs.data(), xs.data() + xs.size());
        const ResidualReport r = check_residuals(program, out.x);
        out.primal_residual = r.primal_residual;
        out.cone_violation = r.cone_violation;
        out.objective_value = program.objective_value(out.x);
        if (st == ConeStatus::Optimal && (r.primal_residual > opts.tol || r.cone_violation > opts.tol))
            out.status = ConeStatus::NumericalError;
        return out;
    };

    if (n == 0) return finish(f.b.size() == 0 || f.b.lpNorm<Eigen::Infinity>() == 0.0 ? ConeStatus::Optimal
                                                                                       : ConeStatus::Infeasible,
                              Vec());

    KktSystem kkt(f.A, f.G, k, opts.static_reg);
    auto stack = [&](const Vec& a, const Vec& b, const Vec& c) {
        Vec v(n + p + m);
        v << a, b, c;
        return v;
    };

    // initial point
    if (!kkt.factor(nullptr)) return finish(ConeStatus::NumericalError, Vec::Zero(n));
    Vec sol = kkt.solve(stack(Vec::Zero(n), f.b, f.h), opts.refine_steps);
    Vec x = sol.head(n);
    Vec s = -sol.tail(m);
    shift_into_cone(k, s);
    sol = kkt.solve(stack(-f.c, Vec::Zero(p), Vec::Zero(m)), opts.refine_steps);
    Vec y = sol.segment(n, p);
    Vec z = sol.tail(m);
    shift_into_cone(k, z);
    double tau = 1.0, kappa = 1.0;
    if (!x.allFinite() || !y.allFinite() || !z.allFinite() || !s.allFinite())
        return finish(ConeStatus::NumericalError, Vec::Zero(n));

    const double cnorm = 1.0 + f.c.lpNorm<Eigen::Infinity>();
    // infeasibility / unboundedness rays on the current homogeneous iterate
    auto certificate = [&](double dual_ray, double cx, double ctol) -> std::optional<ConeSolution> {
        ConeStatus st = ConeStatus::Optimal;
        if (dual_ray < 0.0 &&
            (f.A.transpose() * y + f.G.transpose() * z).lpNorm<Eigen::Infinity>() / -dual_ray <= ctol)
            st = ConeStatus::Infeasible;
        else if (cx < 0.0 &&
                 std::max((f.A * x).lpNorm<Eigen::Infinity>(), (f.G * x + s).lpNorm<Eigen::Infinity>()) / -cx <= ctol)
            st = ConeStatus::Unbounded;
        if (st == ConeStatus::Optimal) return std::nullopt;
        out.status = st;
        out.x.assign(n, 0.0);
        return out;
    };
    // best nearly optimal iterate seen so far
    Vec near_x;
    double near_score = std::numeric_limits<double>::infinity();
    // after a breakdown, accept a looser ray or a nearly optimal point before calling it numerical
    auto bail = [&](const Vec& xs) {
        if (auto st = certificate(f.b.dot(y) + f.h.dot(z), f.c.dot(x), 1e3 * opts.tol)) return *st;
        if (near_x.size()) return finish(ConeStatus::AlmostOptimal, near_x);
        return finish(ConeStatus::NumericalError, xs);
    };
    const Vec e = identity_element(k);

    for (int it = 0; it <= opts.max_iter; ++it) {
        out.iterations = it;
        const Vec rx = f.A.transpose() * y + f.G.transpose() * z + f.c * tau;
        const Vec ry = f.A * x - f.b * tau;
        const Vec rz = s + f.G * x - f.h * tau;
        const double cx = f.c.dot(x), by = f.b.dot(y), hz = f.h.dot(z);
        const double rtau = kappa + cx + by + hz;

        // convergence on the de-homogenized point
        const Vec xs = x / tau;
        const ResidualReport rep = check_residuals(program, std::vector<double>(xs.data(), xs.data() + n));
        const double dres = rx.lpNorm<Eigen::Infinity>() / tau / cnorm;
        const double pcost = cx / tau, dcost = -(by + hz) / tau;
        const double gap = s.dot(z) / (tau * tau);
        const double rel_gap = gap / std::max(std::min(std::abs(pcost), std::abs(dcost)), 1e-300);
        const double pinf_lin = (ry.lpNorm<Eigen::Infinity>() + rz.lpNorm<Eigen::Infinity>()) / tau;
        out.dual_residual = dres;
        out.gap = gap;
        if (rep.primal_residual <= opts.tol && rep.cone_violation <= opts.tol && dres <= opts.tol &&
            (gap <= 0.1 * opts.tol || rel_gap <= 0.1 * opts.tol) && pinf_lin <= 1e3 * opts.tol * (1.0 + f.b.lpNorm<Eigen::Infinity>()))
            return finish(ConeStatus::Optimal, xs);
        const double score = std::max({rep.primal_residual, rep.cone_violation, dres, std::min(gap, rel_gap),
                                       pinf_lin / (1e3 * (1.0 + f.b.lpNorm<Eigen::Infinity>()))});
        if (score <= opts.loose_tol && score < near_score) {
            near_score = score;
            near_x = xs;
        }

        if (tau < kappa)
            if (auto st = certificate(by + hz, cx, opts.tol)) return *st;
        if (it == opts.max_iter) break;

        Scaling sc = nt_scaling(k, s, z);
        sc = refresh_lambda(k, sc, z);
        if (!sc.lambda.allFinite() || !kkt.factor(&sc)) return bail(xs);
        const Vec& lam = sc.lambda;

        const Vec sol1 = kkt.solve(stack(-f.c, f.b, f.h), opts.refine_steps);
        const Vec x1 = sol1.head(n), y1 = sol1.segment(n, p), z1 = sol1.tail(m);
        const double den = f.c.dot(x1) + f.b.dot(y1) + f.h.dot(z1) - kappa / tau;

        struct Dir {
            Vec dx, dy, dz, ds;
            double dtau, dkappa;
        };
        auto direction = [&](double sigma, const Vec& ds_target, double dk_target) {
            const Vec w_term = apply_scaling(k, sc, jordan_divide(k, lam, ds_target), false);
            const Vec sol2 = kkt.solve(stack(-(1.0 - sigma) * rx, -(1.0 - sigma) * ry, -(1.0 - sigma) * rz - w_term),
                                       opts.refine_steps);
            Dir d;
            const Vec x2 = sol2.head(n), y2 = sol2.segment(n, p), z2 = sol2.tail(m);
            d.dtau = (-(1.0 - sigma) * rtau - dk_target / tau - (f.c.dot(x2) + f.b.dot(y2) + f.h.dot(z2))) / den;
            d.dx = x2 + d.dtau * x1;
            d.dy = y2 + d.dtau * y1;
            d.dz = z2 + d.dtau * z1;
            d.ds = w_term - apply_scaling(k, sc, apply_scaling(k, sc, d.dz, false), false);
            d.dkappa = (dk_target - kappa * d.dtau) / tau;
            return d;
        };
        auto step_length = [&](const Dir& d) {
            double a = std::min(max_step(k, s, d.ds), max_step(k, z, d.dz));
            if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
            if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
            return a;
        };

        const Vec ds_aff = -jordan_product(k, lam, lam);
        const Dir aff = direction(0.0, ds_aff, -tau * kappa);
        const double a_aff = std::min(1.0, step_length(aff));
        const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);
        const double mu = (s.dot(z) + tau * kappa) / (k.degree() + 1);

        const Vec corr = jordan_product(k, apply_scaling(k, sc, aff.ds, true), apply_scaling(k, sc, aff.dz, false));
        const Vec ds_comb = ds_aff - corr + sigma * mu * e;
        const double dk_comb = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
        const Dir d = direction(sigma, ds_comb, dk_comb);
        const double alpha = std::min(1.0, opts.step_fraction * step_length(d));
        if (!(alpha > 0.0) || !d.dx.allFinite()) return bail(xs);

        x += alpha * d.dx;
        y += alpha * d.dy;
        z += alpha * d.dz;
        s += alpha * d.ds;
        tau += alpha * d.dtau;
        kappa += alpha * d.dkappa;
    }
    if (auto st = certificate(f.b.dot(y) + f.h.dot(z), f.c.dot(x), 1e3 * opts.tol)) return *st;
    if (near_x.size()) return finish(ConeStatus::AlmostOptimal, near_x);
    return finish(ConeStatus::MaxIter, x / tau);
}

}  // namespace uavris

#endif  // UAVRIS_CONE_SOLVER_HPP
