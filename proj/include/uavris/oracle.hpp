#ifndef UAVRIS_ORACLE_HPP
#define UAVRIS_ORACLE_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "power.hpp"
#include "scenario.hpp"

namespace uavris {

struct PowerCase {
    int m = 0;
    PlanarPoint q;
    std::size_t sensor = 0;
    Eigen::VectorXd theta;
    double closed_form = 0.0;
    double monte_carlo = 0.0;
    double std_error = 0.0;
    double rel_error = 0.0;
};

// Closed-form expected power against its Monte-Carlo mean on random geometries and phases.
// UAV positions are drawn from the bounding box of start, finish, sensors and RIS.
inline std::vector<PowerCase> power_oracle_suite(const ScenarioConfig& base, std::size_t configs, std::size_t samples,
                                                 std::uint64_t seed, unsigned jobs = 1) {
    static const int ms[] = {1, 2, 4, 8};
    std::mt19937_64 rng(seed);
    double x0 = std::min(base.start.real(), base.finish.real()), x1 = std::max(base.start.real(), base.finish.real());
    double y0 = std::min(base.start.imag(), base.finish.imag()), y1 = std::max(base.start.imag(), base.finish.imag());
    for (PlanarPoint p : base.sensors) {
        x0 = std::min(x0, p.real()), x1 = std::max(x1, p.real());
        y0 = std::min(y0, p.imag()), y1 = std::max(y1, p.imag());
    }
    x0 = std::min(x0, base.ris_position.real()), x1 = std::max(x1, base.ris_position.real());
    y0 = std::min(y0, base.ris_position.imag()), y1 = std::max(y1, base.ris_position.imag());
    std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1), ang(0.0, 2.0 * std::numbers::pi);
    std::uniform_int_distribution<std::size_t> pick(0, base.num_sensors() - 1);

    std::vector<PowerCase> out;
    for (std::size_t c = 0; c < configs; ++c) {
        PowerCase pc;
        pc.m = ms[c % 4];
        pc.q = PlanarPoint(ux(rng), uy(rng));
        pc.sensor = pick(rng);
        pc.theta.resize(pc.m);
        for (int i = 0; i < pc.m; ++i) pc.theta[i] = ang(rng);
        ScenarioConfig cfg = base;
        cfg.ris_elements = pc.m;
        Eigen::VectorXcd phi(pc.m);
        for (int i = 0; i < pc.m; ++i) phi[i] = std::polar(1.0, pc.theta[i]);
        pc.closed_form = expected_power(pc.q, phi, pc.sensor, cfg);
        const MonteCarloEstimate mc = monte_carlo_power(pc.q, phi, pc.sensor, cfg, samples, seed + 1 + c, jobs);
        pc.monte_carlo = mc.mean;
        pc.std_error = mc.std_error;
        pc.rel_error = std::abs(mc.mean - pc.closed_form) / pc.closed_form;
        out.push_back(pc);
    }
    return out;
}

}  // namespace uavris

#endif  // UAVRIS_ORACLE_HPP
