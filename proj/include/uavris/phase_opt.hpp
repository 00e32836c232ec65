#ifndef UAVRIS_PHASE_OPT_HPP
#define UAVRIS_PHASE_OPT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "channel.hpp"
#include "power.hpp"
#include "scenario.hpp"

namespace uavris {

/// Block l of sensor k: B_l = weight*quad*psi*psi^H, b_l = weight*half_cross*psi.
struct QuadBlock {
    double weight = 0.0;      // eta * t_l / E_k
    double quad = 0.0;        // quad_coeff of the expected power
    double half_cross = 0.0;  // cross_coeff / 2
    Eigen::VectorXcd psi;
};

/// h(phi) = phi^H B phi + 2 Re{b^H phi} + constant with block-diagonal rank-one B.
struct SensorQuadratic {
    std::vector<QuadBlock> blocks;  // one per radiating slot, in stacking order
    double constant = 0.0;
    int m = 0;  // elements per block

    Eigen::Index size() const { return static_cast<Eigen::Index>(blocks.size()) * m; }
};

inline std::vector<SensorQuadratic> assemble_quadratics(const Trajectory& traj, const ScenarioConfig& cfg) {
    const std::size_t slots = traj.durations.size();
    std::vector<SensorQuadratic> out(cfg.num_sensors());
    for (std::size_t k = 0; k < cfg.num_sensors(); ++k) {
        SensorQuadratic& sq = out[k];
        sq.m = cfg.ris_elements;
        sq.blocks.resize(slots);
        for (std::size_t l = 0; l < slots; ++l) {
            const LinkGeometry g = link_geometry(traj.radiating_point(l), k, cfg);
            const ExpectedPowerTerms t = expected_power_terms(large_scale_gains(g, cfg), cfg);
            const double w = cfg.conversion_efficiency * traj.durations[l] / cfg.sensor_energy_req[k];
            QuadBlock& b = sq.blocks[l];
            b.weight = w;
            b.quad = t.quad_coeff;
            b.half_cross = 0.5 * t.cross_coeff;
            b.psi = psi_vector(g, cfg);
            sq.constant += w * t.constant;
        }
    }
    return out;
}

inline double h_value(const Eigen::VectorXcd& phi, const SensorQuadratic& q) {
    if (phi.size() != q.size()) throw std::invalid_argument("h_value: dimension mismatch");
    double h = q.constant;
    for (std::size_t l = 0; l < q.blocks.size(); ++l) {
        const QuadBlock& b = q.blocks[l];
        if (b.weight == 0.0 || q.m == 0) continue;
        const std::complex<double> ip = b.psi.dot(phi.segment(static_cast<Eigen::Index>(l) * q.m, q.m));
        h += b.weight * (b.quad * std::norm(ip) + 2.0 * b.half_cross * ip.real());
    }
    return h;
}

inline std::vector<double> h_values(const Eigen::VectorXcd& phi, const std::vector<SensorQuadratic>& quads) {
    std::vector<double> h(quads.size());
    for (std::size_t k = 0; k < quads.size(); ++k) h[k] = h_value(phi, quads[k]);
    return h;
}

inline double min_h(const Eigen::VectorXcd& phi, const std::vector<SensorQuadratic>& quads) {
    const auto h = h_values(phi, quads);
    return *std::min_element(h.begin(), h.end());
}

/// -(1/mu) log sum_k exp(-mu h_k), shifted by min_k h_k.
inline double smooth_min(const std::vector<double>& h, double mu) {
    if (h.empty()) throw std::invalid_argument("smooth_min: empty");
    if (!(mu > 0.0)) throw std::invalid_argument("smooth_min: mu must be > 0");
    const double lo = *std::min_element(h.begin(), h.end());
    double s = 0.0;
    for (double v : h) s += std::exp(-mu * (v - lo));
    return lo - std::log(s) / mu;
}

inline double smooth_objective(const Eigen::VectorXcd& phi, const std::vector<SensorQuadratic>& quads, double mu) {
    return smooth_min(h_values(phi, quads), mu);
}

inline std::vector<double> softmin_weights(const std::vector<double>& h, double mu) {
    const double lo = *std::min_element(h.begin(), h.end());
    std::vector<double> g(h.size());
    double s = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) s += g[k] = std::exp(-mu * (h[k] - lo));
    for (double& v : g) v /= s;
    return g;
}

/// B^H phi + b for one sensor.
inline Eigen::VectorXcd gradient_part(const Eigen::VectorXcd& phi, const SensorQuadratic& q) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(q.size());
    for (std::size_t l = 0; l < q.blocks.size(); ++l) {
        const QuadBlock& b = q.blocks[l];
        if (b.weight == 0.0 || q.m == 0) continue;
        const Eigen::Index off = static_cast<Eigen::Index>(l) * q.m;
        const std::complex<double> ip = b.psi.dot(phi.segment(off, q.m));
        out.segment(off, q.m) = b.weight * (b.quad * ip + b.half_cross) * b.psi;
    }
    return out;
}

/// Curvature bound term for one sensor: M sum_l lambda_max(B_l^2) + b^H b + 2 ||B b||_1.
inline double curvature_term(const SensorQuadratic& q) {
    const double m = q.m;
    double eig = 0.0, bb = 0.0, bb1 = 0.0;
    for (const QuadBlock& b : q.blocks) {
        const double wq = b.weight * b.quad;
        const double wc = b.weight * b.half_cross;
        eig += (wq * m) * (wq * m);
        bb += wc * wc * m;
        bb1 += wq * wc * m * m;
    }
    return m * eig + bb + 2.0 * bb1;
}

struct MinorizerParams {
    Eigen::VectorXcd c;
    double alpha = 0.0;
    Eigen::VectorXcd u;
    double const_mm = 0.0;
};

inline MinorizerParams minorizer_params(const Eigen::VectorXcd& phi_r, const std::vector<SensorQuadratic>& quads,
                                        double mu) {
    const auto h = h_values(phi_r, quads);
    const auto g = softmin_weights(h, mu);
    MinorizerParams p;
    p.c = Eigen::VectorXcd::Zero(phi_r.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < quads.size(); ++k) {
        p.c += g[k] * gradient_part(phi_r, quads[k]);
        worst = std::max(worst, curvature_term(quads[k]));
    }
    p.alpha = -2.0 * mu * worst;
    p.u = p.c - p.alpha * phi_r;
    const double n = static_cast<double>(phi_r.size());
    p.const_mm = smooth_min(h, mu) - 2.0 * p.c.dot(phi_r).real() + 2.0 * p.alpha * n;
    return p;
}

inline double minorizer_value(const MinorizerParams& p, const Eigen::VectorXcd& phi) {
    return 2.0 * p.u.dot(phi).real() + p.const_mm;
}

/// exp(j angle(u)) elementwise, with angle(0) = 0.
inline Eigen::VectorXcd unit_modulus_projection(const Eigen::VectorXcd& u) {
    Eigen::VectorXcd out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = u[i] == 0.0 ? 1.0 : std::polar(1.0, std::arg(u[i]));
    return out;
}

inline Eigen::VectorXcd mm_update(const MinorizerParams& p) { return unit_modulus_projection(p.u); }

inline Eigen::VectorXcd mm_map(const Eigen::VectorXcd& phi, const std::vector<SensorQuadratic>& quads, double mu) {
    return mm_update(minorizer_params(phi, quads, mu));
}

struct MmOptions {
    double eps = 1e-6;
    int r_max = 10;
    int max_backtracks = 20;
};

struct MmIterate {
    int iteration = 0;
    double f = 0.0;
    double min_h = 0.0;
    double sigma = 0.0;
    int backtracks = 0;
};

struct MmReport {
    std::vector<MmIterate> iterates;  // index 0 is the initial point
    bool reverted = false;
    bool monotone = true;
};

struct MmResult {
    Eigen::VectorXcd phi;
    MmReport report;
};

/// Max-min phase optimization with SQUAREM-accelerated MM steps.
inline MmResult optimize_phases(const std::vector<SensorQuadratic>& quads, const Eigen::VectorXcd& phi_init, double mu,
                                const MmOptions& opts = {}) {
    MmResult res;
    res.phi = phi_init;
    auto objective = [&](const Eigen::VectorXcd& p) { return smooth_objective(p, quads, mu); };
    double f_r = objective(phi_init);
    const double h_init = min_h(phi_init, quads);
    res.report.iterates.push_back({0, f_r, h_init, 0.0, 0});
    if (phi_init.size() == 0) return res;

    Eigen::VectorXcd phi_r = phi_init;
    for (int r = 1;; ++r) {
        const Eigen::VectorXcd p1 = mm_map(phi_r, quads, mu);
        const Eigen::VectorXcd p2 = mm_map(p1, quads, mu);
        const Eigen::VectorXcd v1 = p1 - phi_r;
        const Eigen::VectorXcd v2 = p2 - p1 - v1;
        const double n1 = v1.norm(), n2 = v2.norm();

        Eigen::VectorXcd next = p2;
        double f_next = objective(p2);
        double sigma = -1.0;
        int bt = 0;
        if (n2 > 0.0) {
            sigma = -n1 / n2;
            bool accepted = false;
            for (; bt <= opts.max_backtracks; ++bt) {
                const Eigen::VectorXcd cand = unit_modulus_projection(phi_r - 2.0 * sigma * v1 + sigma * sigma * v2);
                const double fc = objective(cand);
                if (fc >= f_r) {
                    next = cand;
                    f_next = fc;
                    accepted = true;
                    break;
                }
                sigma = (sigma - 1.0) / 2.0;
            }
            if (!accepted) {
                sigma = -1.0;
                next = p2;
                f_next = objective(p2);
            }
        }
        if (f_next < f_r) res.report.monotone = false;
        res.report.iterates.push_back({r, f_next, min_h(next, quads), sigma, bt});
        const double change = std::abs(f_next - f_r);
        const double scale = std::abs(f_r);
        phi_r = next;
        f_r = f_next;
        if (change < opts.eps * scale || r >= opts.r_max) break;
    }
    if (min_h(phi_r, quads) < h_init) {
        res.report.reverted = true;
        res.phi = phi_init;
    } else {
        res.phi = phi_r;
    }
    return res;
}

// ---------------------------------------------------------------------------
// plan <-> stacked vector

inline Eigen::VectorXcd stack_plan(const PhasePlan& plan, int m) {
    Eigen::VectorXcd phi(static_cast<Eigen::Index>(plan.theta.size()) * m);
    for (std::size_t l = 0; l < plan.theta.size(); ++l)
        phi.segment(static_cast<Eigen::Index>(l) * m, m) = plan.phi(l);
    return phi;
}

/// Slots with zero duration get angle 0.
inline PhasePlan unstack_plan(const Eigen::VectorXcd& phi, const Trajectory& traj, int m) {
    PhasePlan plan;
    plan.theta.resize(traj.durations.size());
    for (std::size_t l = 0; l < plan.theta.size(); ++l) {
        Eigen::VectorXd th(m);
        for (int i = 0; i < m; ++i) {
            const auto v = phi[static_cast<Eigen::Index>(l) * m + i];
            th[i] = traj.durations[l] == 0.0 ? 0.0 : wrap_angle(std::arg(v));
        }
        plan.theta[l] = th;
    }
    return plan;
}

struct PhaseResult {
    PhasePlan plan;
    MmReport report;
};

inline PhaseResult optimize_phases(const Trajectory& traj, const ScenarioConfig& cfg, const PhasePlan& init, double mu,
                                   const MmOptions& opts = {}) {
    const auto quads = assemble_quadratics(traj, cfg);
    MmResult r = optimize_phases(quads, stack_plan(init, cfg.ris_elements), mu, opts);
    return {unstack_plan(r.phi, traj, cfg.ris_elements), std::move(r.report)};
}

}  // namespace uavris

#endif  // UAVRIS_PHASE_OPT_HPP
