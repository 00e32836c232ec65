#ifndef UAVRIS_TESTS_SUPPORT_HPP
#define UAVRIS_TESTS_SUPPORT_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "uavris/phase_opt.hpp"

namespace uavris::testing {

inline Eigen::VectorXcd random_unit(Eigen::Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> a(0.0, 2.0 * std::numbers::pi);
    Eigen::VectorXcd p(n);
    for (Eigen::Index i = 0; i < n; ++i) p[i] = std::polar(1.0, a(rng));
    return p;
}

struct SmallInstance {
    ScenarioConfig cfg;
    Trajectory traj;
    std::vector<SensorQuadratic> quads;
    double mu = 100.0;
};

// FHB-style instance with m elements and `slots` hover points scattered over the scene.
// Durations are drawn so that the charge ratios land around 1.
inline SmallInstance random_instance(std::mt19937_64& rng, int m, std::size_t slots, std::size_t sensors = 5) {
    SmallInstance in;
    in.cfg = default_scenario();
    in.cfg.ris_elements = m;
    in.cfg.sensors.resize(sensors);
    in.cfg.sensor_energy_req.resize(sensors);
    std::uniform_real_distribution<double> ux(-35.0, 35.0), uy(-5.0, 35.0), ut(0.0, 150.0), umu(1.0, 1000.0);
    in.traj.protocol = Protocol::FHB;
    in.traj.waypoints.push_back(in.cfg.start);
    for (std::size_t l = 0; l < slots; ++l) {
        in.traj.waypoints.push_back({ux(rng), uy(rng)});
        in.traj.durations.push_back(ut(rng));
    }
    in.traj.waypoints.push_back(in.cfg.finish);
    in.quads = assemble_quadratics(in.traj, in.cfg);
    in.mu = umu(rng);
    return in;
}

struct DenseQuadratic {
    Eigen::MatrixXcd B;
    Eigen::VectorXcd b;
    double c = 0.0;
};

// B_k, b_k as full matrices, built from the per-slot power terms.
inline DenseQuadratic dense(const SensorQuadratic& q) {
    const Eigen::Index n = q.size();
    DenseQuadratic d;
    d.B = Eigen::MatrixXcd::Zero(n, n);
    d.b = Eigen::VectorXcd::Zero(n);
    d.c = q.constant;
    for (std::size_t l = 0; l < q.blocks.size(); ++l) {
        const QuadBlock& blk = q.blocks[l];
        const Eigen::Index off = static_cast<Eigen::Index>(l) * q.m;
        d.B.block(off, off, q.m, q.m) = blk.weight * blk.quad * blk.psi * blk.psi.adjoint();
        d.b.segment(off, q.m) = blk.weight * blk.half_cross * blk.psi;
    }
    return d;
}

inline double dense_h(const DenseQuadratic& d, const Eigen::VectorXcd& phi) {
    return (phi.adjoint() * d.B * phi)(0, 0).real() + 2.0 * d.b.dot(phi).real() + d.c;
}

// Smallest eigenvalue of the second-derivative matrix of f along the cut phi_r + gamma (phi_t - phi_r).
inline double lambda_min_cut(const std::vector<DenseQuadratic>& ds, const Eigen::VectorXcd& phi_r,
                             const Eigen::VectorXcd& phi_t, double gamma, double mu) {
    const Eigen::Index n = phi_r.size();
    const Eigen::VectorXcd phi = phi_r + gamma * (phi_t - phi_r);
    std::vector<double> h;
    for (const auto& d : ds) h.push_back(dense_h(d, phi));
    const double lo = *std::min_element(h.begin(), h.end());
    std::vector<double> g(h.size());
    double s = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) s += g[k] = std::exp(-mu * (h[k] - lo));
    for (double& v : g) v /= s;

    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    Eigen::VectorXcd ebar = Eigen::VectorXcd::Zero(2 * n);
    for (std::size_t k = 0; k < ds.size(); ++k) {
        const Eigen::VectorXcd e = ds[k].B.adjoint() * phi + ds[k].b;
        Eigen::VectorXcd ee(2 * n);
        ee << e, e.conjugate();
        L.topLeftCorner(n, n) += g[k] * ds[k].B;
        L.bottomRightCorner(n, n) += g[k] * ds[k].B.transpose();
        L -= g[k] * mu * ee * ee.adjoint();
        ebar += g[k] * ee;
    }
    L += mu * ebar * ebar.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(L, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace uavris::testing

#endif  // UAVRIS_TESTS_SUPPORT_HPP
