#ifndef UAVRIS_POWER_HPP
#define UAVRIS_POWER_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <future>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "channel.hpp"
#include "scenario.hpp"

namespace uavris {

enum class Protocol { FHB, PD };

inline const char* protocol_name(Protocol p) { return p == Protocol::FHB ? "fhb" : "pd"; }

/// FHB: durations[i] is the hover time at waypoints[i + 1] (L-1 entries).
/// PD: durations[i] is the flight time of segment waypoints[i] -> waypoints[i + 1] (L entries).
struct Trajectory {
    Protocol protocol = Protocol::FHB;
    std::vector<PlanarPoint> waypoints;
    std::vector<double> durations;

    std::size_t num_segments() const { return waypoints.empty() ? 0 : waypoints.size() - 1; }

    /// Position used for radiating slot i (hover point or segment end point).
    PlanarPoint radiating_point(std::size_t i) const { return waypoints.at(i + 1); }

    double segment_length(std::size_t l) const { return std::abs(waypoints.at(l + 1) - waypoints.at(l)); }
};

/// Phase angles per radiating slot, each in [0, 2pi).
struct PhasePlan {
    std::vector<Eigen::VectorXd> theta;

    static PhasePlan zeros(std::size_t slots, int m) {
        PhasePlan p;
        p.theta.assign(slots, Eigen::VectorXd::Zero(m));
        return p;
    }

    Eigen::VectorXcd phi(std::size_t l) const {
        const auto& t = theta.at(l);
        Eigen::VectorXcd v(t.size());
        for (Eigen::Index m = 0; m < t.size(); ++m) v[m] = std::polar(1.0, t[m]);
        return v;
    }
};

inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a, two_pi);
    if (w < 0.0) w += two_pi;
    if (w >= two_pi) w = 0.0;
    return w;
}

// ---------------------------------------------------------------------------
// propulsion

inline double propulsion_power(double v, const RotorParams& r) {
    if (v < 0.0) throw std::invalid_argument("propulsion_power: negative speed");
    const double u2 = r.tip_speed * r.tip_speed;
    const double v02 = r.mean_induced_velocity * r.mean_induced_velocity;
    const double blade = r.p0_hover_blade_power * (1.0 + 3.0 * v * v / u2);
    const double ratio = v * v / (2.0 * v02);
    // sqrt(1 + a^2) - a in a cancellation-free form
    const double induced_sq = 1.0 / (std::sqrt(1.0 + ratio * ratio) + ratio);
    const double induced = r.p_induced_hover * std::sqrt(induced_sq);
    const double parasite = 0.5 * r.fuselage_drag_ratio * r.air_density * r.rotor_solidity * r.rotor_disc_area * v * v * v;
    return blade + induced + parasite;
}

inline double propulsion_power_segment(double delta, double t, const RotorParams& r) {
    if (!(t > 0.0)) throw std::invalid_argument("propulsion_power_segment: t must be > 0");
    if (delta < 0.0) throw std::invalid_argument("propulsion_power_segment: negative length");
    return propulsion_power(delta / t, r);
}

inline double hover_power(const RotorParams& r) { return r.p0_hover_blade_power + r.p_induced_hover; }

/// Speed minimizing energy per meter.
inline double mr_speed(const RotorParams& r) {
    auto per_meter = [&](double v) { return propulsion_power(v, r) / v; };
    const double hi = 3.0 * r.tip_speed;
    auto res = boost::math::tools::brent_find_minima(per_meter, 1e-3, hi, 40);
    return res.first;
}

// ---------------------------------------------------------------------------
// received power

struct ExpectedPowerTerms {
    double quad_coeff = 0.0;
    double cross_coeff = 0.0;
    double constant = 0.0;
};

struct RicianWeights {
    double los_t, los_r, los_d;  // kappa/(kappa+1)
    double nlos_t, nlos_r;       // 1/(kappa+1)
};

inline RicianWeights rician_weights(const ChannelParams& c) {
    if (c.los_only) return {1.0, 1.0, 1.0, 0.0, 0.0};
    auto los = [](double k) { return k / (k + 1.0); };
    auto nlos = [](double k) { return 1.0 / (k + 1.0); };
    return {los(c.rician_uav_ris), los(c.rician_ris_sensor), los(c.rician_direct), nlos(c.rician_uav_ris),
            nlos(c.rician_ris_sensor)};
}

inline ExpectedPowerTerms expected_power_terms(const LargeScaleGains& b, const ScenarioConfig& cfg) {
    const RicianWeights w = rician_weights(cfg.channel);
    const double pt = cfg.radiated_power;
    const double m = cfg.ris_elements;
    ExpectedPowerTerms t;
    t.quad_coeff = pt * w.los_r * w.los_t * b.beta_r * b.beta_t;
    t.cross_coeff = 2.0 * pt * std::sqrt(w.los_d * w.los_r * w.los_t * b.beta_d * b.beta_r * b.beta_t);
    // M(kr + kt + 1)/((kr+1)(kt+1)) written through the weights
    const double diffuse = w.los_r * w.nlos_t + w.nlos_r * w.los_t + w.nlos_r * w.nlos_t;
    t.constant = pt * (b.beta_d + m * diffuse * b.beta_r * b.beta_t);
    return t;
}

inline ExpectedPowerTerms expected_power_terms(PlanarPoint q, std::size_t k, const ScenarioConfig& cfg) {
    return expected_power_terms(large_scale_gains(link_geometry(q, k, cfg), cfg), cfg);
}

inline double expected_power(const ExpectedPowerTerms& t, const Eigen::VectorXcd& psi, const Eigen::VectorXcd& phi) {
    if (psi.size() == 0) return t.constant;
    const std::complex<double> ip = psi.dot(phi);  // psi^H phi
    return t.quad_coeff * std::norm(ip) + t.cross_coeff * ip.real() + t.constant;
}

inline double expected_power(PlanarPoint q, const Eigen::VectorXcd& phi, std::size_t k, const ScenarioConfig& cfg) {
    if (phi.size() != cfg.ris_elements) throw std::invalid_argument("expected_power: phi dimension mismatch");
    const LinkGeometry g = link_geometry(q, k, cfg);
    return expected_power(expected_power_terms(large_scale_gains(g, cfg), cfg), psi_vector(g, cfg), phi);
}

inline double instantaneous_power(const ChannelRealization& h, const Eigen::VectorXcd& phi, double radiated_power) {
    if (phi.size() != h.g_uav_ris.size() || phi.size() != h.g_ris_sensor.size())
        throw std::invalid_argument("instantaneous_power: dimension mismatch");
    std::complex<double> s = h.g_direct;
    for (Eigen::Index m = 0; m < phi.size(); ++m) s += std::conj(h.g_ris_sensor[m]) * phi[m] * h.g_uav_ris[m];
    return radiated_power * std::norm(s);
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Sample mean of the instantaneous power. Draws are split in fixed blocks, each
/// with its own generator, and reduced in block order: the result does not
/// depend on `jobs`.
inline MonteCarloEstimate monte_carlo_power(PlanarPoint q, const Eigen::VectorXcd& phi, std::size_t k,
                                            const ScenarioConfig& cfg, std::size_t samples, std::uint64_t seed,
                                            unsigned jobs = 1) {
    constexpr std::size_t block = 1 << 16;
    const std::size_t nblocks = (samples + block - 1) / block;
    struct Partial {
        double sum = 0.0, sum_sq = 0.0;
    };
    auto run_block = [&](std::size_t b) {
        std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(ss);
        const std::size_t n = std::min(block, samples - b * block);
        Partial p;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = instantaneous_power(sample_realization(q, k, cfg, rng), phi, cfg.radiated_power);
            p.sum += v;
            p.sum_sq += v * v;
        }
        return p;
    };
    std::vector<Partial> parts(nblocks);
    if (jobs <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b) parts[b] = run_block(b);
    } else {
        for (std::size_t start = 0; start < nblocks; start += jobs) {
            std::vector<std::future<Partial>> fs;
            for (std::size_t b = start; b < std::min(nblocks, start + jobs); ++b)
                fs.push_back(std::async(std::launch::async, run_block, b));
            for (std::size_t i = 0; i < fs.size(); ++i) parts[start + i] = fs[i].get();
        }
    }
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& p : parts) {
        sum += p.sum;
        sum_sq += p.sum_sq;
    }
    MonteCarloEstimate est;
    est.samples = samples;
    est.mean = sum / static_cast<double>(samples);
    const double var = std::max(0.0, sum_sq / static_cast<double>(samples) - est.mean * est.mean);
    est.std_error = std::sqrt(var / static_cast<double>(samples));
    return est;
}

// ---------------------------------------------------------------------------
// energy accounting

inline void check_endpoints(const Trajectory& traj, const ScenarioConfig& cfg) {
    if (traj.waypoints.size() < 2) throw std::invalid_argument("trajectory needs at least two waypoints");
    if (traj.waypoints.front() != cfg.start || traj.waypoints.back() != cfg.finish)
        throw std::invalid_argument("trajectory endpoints do not match start/finish");
}

inline double fhb_total_energy(const Trajectory& traj, const ScenarioConfig& cfg) {
    if (traj.protocol != Protocol::FHB) throw std::invalid_argument("fhb_total_energy: not an FHB trajectory");
    if (traj.durations.size() + 2 != traj.waypoints.size())
        throw std::invalid_argument("fhb_total_energy: expected L-1 hover times");
    const double v = mr_speed(cfg.rotor);
    const double per_meter = propulsion_power(v, cfg.rotor) / v;
    double length = 0.0;
    for (std::size_t l = 0; l < traj.num_segments(); ++l) length += traj.segment_length(l);
    double hover = 0.0;
    for (double t : traj.durations) hover += t;
    return per_meter * length + (hover_power(cfg.rotor) + cfg.radiated_power) * hover;
}

inline double pd_total_energy(const Trajectory& traj, const ScenarioConfig& cfg) {
    if (traj.protocol != Protocol::PD) throw std::invalid_argument("pd_total_energy: not a PD trajectory");
    if (traj.durations.size() != traj.num_segments())
        throw std::invalid_argument("pd_total_energy: expected one duration per segment");
    double e = 0.0;
    for (std::size_t l = 0; l < traj.num_segments(); ++l) {
        const double t = traj.durations[l];
        const double d = traj.segment_length(l);
        if (t <= 0.0) {
            if (d > 0.0) throw std::invalid_argument("pd_total_energy: zero-duration segment with nonzero length");
            continue;
        }
        e += t * (cfg.radiated_power + propulsion_power(d / t, cfg.rotor));
    }
    return e;
}

inline double total_energy(const Trajectory& traj, const ScenarioConfig& cfg) {
    return traj.protocol == Protocol::FHB ? fhb_total_energy(traj, cfg) : pd_total_energy(traj, cfg);
}

/// eta * sum_l t_l * expected power, per sensor.
inline std::vector<double> harvested_energy(const Trajectory& traj, const PhasePlan& plan, const ScenarioConfig& cfg) {
    const std::size_t slots = traj.durations.size();
    const std::size_t expected_slots = traj.protocol == Protocol::FHB ? traj.waypoints.size() - 2 : traj.num_segments();
    if (slots != expected_slots) throw std::invalid_argument("harvested_energy: duration count mismatch");
    if (plan.theta.size() != slots) throw std::invalid_argument("harvested_energy: phase plan size mismatch");
    std::vector<double> out(cfg.num_sensors(), 0.0);
    for (std::size_t l = 0; l < slots; ++l) {
        if (plan.theta[l].size() != cfg.ris_elements)
            throw std::invalid_argument("harvested_energy: phase vector dimension mismatch");
        const double t = traj.durations[l];
        if (t == 0.0) continue;
        const Eigen::VectorXcd phi = plan.phi(l);
        for (std::size_t k = 0; k < cfg.num_sensors(); ++k)
            out[k] += cfg.conversion_efficiency * t * expected_power(traj.radiating_point(l), phi, k, cfg);
    }
    return out;
}

}  // namespace uavris

#endif  // UAVRIS_POWER_HPP
