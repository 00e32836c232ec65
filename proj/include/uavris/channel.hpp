#ifndef UAVRIS_CHANNEL_HPP
#define UAVRIS_CHANNEL_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "scenario.hpp"

namespace uavris {

struct LinkGeometry {
    double dist_uav_ris = 0.0;
    double dist_ris_sensor = 0.0;
    double dist_uav_sensor = 0.0;
    double cos_aoa = 0.0;  // at the RIS, from the UAV
    double cos_aod = 0.0;  // from the RIS, towards the sensor
};

struct LargeScaleGains {
    double beta_t = 0.0;
    double beta_r = 0.0;
    double beta_d = 0.0;
};

struct ChannelRealization {
    std::complex<double> g_direct;
    Eigen::VectorXcd g_uav_ris;
    Eigen::VectorXcd g_ris_sensor;
};

inline LinkGeometry link_geometry(PlanarPoint q, std::size_t sensor_index, const ScenarioConfig& cfg) {
    if (sensor_index >= cfg.sensors.size()) throw std::out_of_range("link_geometry: sensor index");
    const PlanarPoint qs = cfg.sensors[sensor_index];
    const PlanarPoint qr = cfg.ris_position;
    const double dh = cfg.uav_height - cfg.ris_height;
    LinkGeometry g;
    g.dist_uav_ris = std::sqrt(std::norm(q - qr) + dh * dh);
    g.dist_ris_sensor = std::sqrt(std::norm(qs - qr) + cfg.ris_height * cfg.ris_height);
    g.dist_uav_sensor = std::sqrt(std::norm(q - qs) + cfg.uav_height * cfg.uav_height);
    g.cos_aoa = (qr.real() - q.real()) / g.dist_uav_ris;
    const double ref_x = cfg.channel.aod_reference == AodReference::Ris ? qr.real() : q.real();
    g.cos_aod = (qs.real() - ref_x) / g.dist_ris_sensor;
    return g;
}

inline LargeScaleGains large_scale_gains(const LinkGeometry& g, const ScenarioConfig& cfg) {
    const ChannelParams& c = cfg.channel;
    return {c.beta0_ref_gain / std::pow(g.dist_uav_ris, c.pathloss_uav_ris),
            c.beta0_ref_gain / std::pow(g.dist_ris_sensor, c.pathloss_ris_sensor),
            c.beta0_ref_gain / std::pow(g.dist_uav_sensor, c.pathloss_direct)};
}

/// Angles psi_m (radians, unwrapped) behind the phase-offset vector.
inline Eigen::VectorXd psi_angles(const LinkGeometry& g, const ScenarioConfig& cfg) {
    const int m_count = cfg.ris_elements;
    const double k0 = 2.0 * std::numbers::pi / cfg.channel.wavelength;
    const double common = g.dist_uav_sensor + g.dist_ris_sensor - g.dist_uav_ris;
    const double step = cfg.channel.element_spacing * (g.cos_aod - g.cos_aoa);
    Eigen::VectorXd a(m_count);
    for (int m = 0; m < m_count; ++m) a[m] = k0 * (common + step * m);
    return a;
}

inline Eigen::VectorXcd psi_vector(const LinkGeometry& g, const ScenarioConfig& cfg) {
    const Eigen::VectorXd a = psi_angles(g, cfg);
    Eigen::VectorXcd v(a.size());
    for (Eigen::Index m = 0; m < a.size(); ++m) v[m] = std::polar(1.0, -a[m]);
    return v;
}

inline Eigen::VectorXcd ula_response(double dist, double cos_angle, const ScenarioConfig& cfg) {
    const double k0 = 2.0 * std::numbers::pi / cfg.channel.wavelength;
    const int m_count = cfg.ris_elements;
    Eigen::VectorXcd v(m_count);
    for (int m = 0; m < m_count; ++m)
        v[m] = std::polar(1.0, -k0 * (dist + m * cfg.channel.element_spacing * cos_angle));
    return v;
}

/// Deterministic LoS parts (g_d, g_t, g_r) of the three links.
inline ChannelRealization los_components(PlanarPoint q, std::size_t k, const ScenarioConfig& cfg) {
    const LinkGeometry g = link_geometry(q, k, cfg);
    const double k0 = 2.0 * std::numbers::pi / cfg.channel.wavelength;
    return {std::polar(1.0, -k0 * g.dist_uav_sensor), ula_response(g.dist_uav_ris, g.cos_aoa, cfg),
            ula_response(g.dist_ris_sensor, g.cos_aod, cfg)};
}

/// Zero-mean circularly symmetric complex Gaussian, E|x|^2 = 1.
template <class Rng>
std::complex<double> sample_cn01(Rng& rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

template <class Rng>
ChannelRealization sample_realization(PlanarPoint q, std::size_t k, const ScenarioConfig& cfg, Rng& rng) {
    const LinkGeometry g = link_geometry(q, k, cfg);
    const LargeScaleGains b = large_scale_gains(g, cfg);
    ChannelRealization los = los_components(q, k, cfg);
    const ChannelParams& c = cfg.channel;
    auto mix = [&](double kappa) {
        if (c.los_only) return std::pair<double, double>{1.0, 0.0};
        return std::pair<double, double>{std::sqrt(kappa / (kappa + 1.0)), std::sqrt(1.0 / (kappa + 1.0))};
    };
    const auto [ld, nd] = mix(c.rician_direct);
    const auto [lt, nt] = mix(c.rician_uav_ris);
    const auto [lr, nr] = mix(c.rician_ris_sensor);

    ChannelRealization out;
    std::complex<double> wd = nd > 0.0 ? sample_cn01(rng) : 0.0;
    out.g_direct = std::sqrt(b.beta_d) * (ld * los.g_direct + nd * wd);
    const auto m_count = los.g_uav_ris.size();
    out.g_uav_ris.resize(m_count);
    out.g_ris_sensor.resize(m_count);
    for (Eigen::Index m = 0; m < m_count; ++m) {
        std::complex<double> w = nt > 0.0 ? sample_cn01(rng) : 0.0;
        out.g_uav_ris[m] = std::sqrt(b.beta_t) * (lt * los.g_uav_ris[m] + nt * w);
    }
    for (Eigen::Index m = 0; m < m_count; ++m) {
        std::complex<double> w = nr > 0.0 ? sample_cn01(rng) : 0.0;
        out.g_ris_sensor[m] = std::sqrt(b.beta_r) * (lr * los.g_ris_sensor[m] + nr * w);
    }
    return out;
}

}  // namespace uavris

#endif  // UAVRIS_CHANNEL_HPP
