#ifndef UAVRIS_SCENARIO_HPP
#define UAVRIS_SCENARIO_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace uavris {

/// Planar coordinate stored as x + j*y (meters).
using PlanarPoint = std::complex<double>;

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rotary-wing propulsion constants (all strictly positive).
struct RotorParams {
    double p0_hover_blade_power = 79.8563;  // P0 [W]
    double p_induced_hover = 88.6279;       // Pi [W]
    double tip_speed = 120.0;               // U_tip [m/s]
    double mean_induced_velocity = 4.03;    // v0 [m/s]
    double fuselage_drag_ratio = 0.6;       // d0
    double air_density = 1.225;             // rho [kg/m^3]
    double rotor_solidity = 0.05;           // s
    double rotor_disc_area = 0.503;         // A [m^2]

    bool operator==(const RotorParams&) const = default;
};

/// Which x-coordinate the RIS-to-sensor departure cosine is measured from.
enum class AodReference {
    Ris,  // (x_S - x_R) / d_r, fixed per sensor
    Uav,  // (x_S - x_q) / d_r, moves with the UAV
};

struct ChannelParams {
    double beta0_ref_gain = 1e-3;  // linear gain at 1 m
    double pathloss_uav_ris = 2.2;
    double pathloss_ris_sensor = 2.2;
    double pathloss_direct = 2.6;
    double rician_uav_ris = 10.0;  // linear
    double rician_ris_sensor = 10.0;
    double rician_direct = 10.0;
    double wavelength = 1.0;       // [m]
    double element_spacing = 0.5;  // [m]
    // Deterministic LoS limit (kappa -> infinity) for tests; not representable by finite kappa.
    bool los_only = false;
    AodReference aod_reference = AodReference::Ris;

    bool operator==(const ChannelParams&) const = default;
};

struct ScenarioConfig {
    std::vector<PlanarPoint> sensors;
    std::vector<double> sensor_energy_req;  // [J]
    PlanarPoint ris_position{0.0, 0.0};
    double ris_height = 10.0;
    int ris_elements = 8;
    double uav_height = 20.0;
    double uav_max_speed = 30.0;
    double radiated_power = 10.0;  // [W]
    PlanarPoint start{-35.0, 0.0};
    PlanarPoint finish{35.0, 0.0};
    double conversion_efficiency = 0.6;
    double max_segment_length = 0.5;
    RotorParams rotor;
    ChannelParams channel;

    std::size_t num_sensors() const { return sensors.size(); }

    bool operator==(const ScenarioConfig&) const = default;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Five sensors on a semicircle (upper half-plane) split into four equal
/// sectors by five radii. Sensor 5 sits at radius/2 on the radius at
/// `sensor5_angle_deg`; sensors 1-4 sit on the arc at the remaining radii in
/// order of decreasing polar angle.
inline std::vector<PlanarPoint> semicircle_layout(double radius, std::size_t count,
                                                  double sensor5_angle_deg = 90.0) {
    if (count != 5) {
        throw ScenarioError("semicircle_layout: unsupported sensor count " + std::to_string(count) +
                            " (layout is defined for 5 sensors)");
    }
    if (!(radius > 0.0)) throw ScenarioError("semicircle_layout: radius must be positive");
    const double radii_deg[] = {180.0, 135.0, 90.0, 45.0, 0.0};
    bool found = false;
    for (double a : radii_deg) found = found || a == sensor5_angle_deg;
    if (!found) throw ScenarioError("semicircle_layout: sensor 5 must lie on one of the five radii");

    auto at = [](double r, double deg) {
        const double rad = deg * std::numbers::pi / 180.0;
        // Snap the trig values on the axes so that e.g. (0, 30) is exact.
        double c = std::cos(rad), s = std::sin(rad);
        if (std::abs(c) < 1e-15) c = 0.0;
        if (std::abs(s) < 1e-15) s = 0.0;
        return PlanarPoint(r * c, r * s);
    };
    std::vector<PlanarPoint> out;
    for (double a : radii_deg) {
        if (a != sensor5_angle_deg) out.push_back(at(radius, a));
    }
    out.push_back(at(radius / 2.0, sensor5_angle_deg));
    return out;
}

/// Validates every invariant; throws ScenarioError naming the first violation.
inline void validate_scenario(const ScenarioConfig& cfg) {
    auto fail = [](const std::string& msg) { throw ScenarioError(msg); };
    auto finite_pt = [](PlanarPoint p) { return std::isfinite(p.real()) && std::isfinite(p.imag()); };

    if (cfg.sensors.empty()) fail("sensors: at least one sensor required");
    for (const auto& s : cfg.sensors)
        if (!finite_pt(s)) fail("sensors: non-finite coordinate");
    if (cfg.sensor_energy_req.size() != cfg.sensors.size())
        fail("sensor_energy_req: length must match sensors");
    for (double e : cfg.sensor_energy_req)
        if (!(e > 0.0) || !std::isfinite(e)) fail("sensor_energy_req must be > 0");
    if (!finite_pt(cfg.ris_position)) fail("ris_position: non-finite coordinate");
    if (!finite_pt(cfg.start) || !finite_pt(cfg.finish)) fail("start/finish: non-finite coordinate");
    if (cfg.ris_elements < 0) fail("ris_elements must be >= 0");
    if (!(cfg.ris_height > 0.0)) fail("ris_height must be > 0");
    if (!(cfg.uav_height > cfg.ris_height)) fail("uav_height must exceed ris_height");
    if (!(cfg.uav_max_speed > 0.0)) fail("uav_max_speed must be > 0");
    if (!(cfg.radiated_power >= 0.0) || !std::isfinite(cfg.radiated_power))
        fail("radiated_power must be >= 0");
    if (!(cfg.conversion_efficiency > 0.0 && cfg.conversion_efficiency <= 1.0))
        fail("conversion_efficiency out of (0,1]");
    if (!(cfg.max_segment_length > 0.0)) fail("max_segment_length must be > 0");

    const RotorParams& r = cfg.rotor;
    const std::pair<const char*, double> rotor_fields[] = {
        {"p0_hover_blade_power", r.p0_hover_blade_power},
        {"p_induced_hover", r.p_induced_hover},
        {"tip_speed", r.tip_speed},
        {"mean_induced_velocity", r.mean_induced_velocity},
        {"fuselage_drag_ratio", r.fuselage_drag_ratio},
        {"air_density", r.air_density},
        {"rotor_solidity", r.rotor_solidity},
        {"rotor_disc_area", r.rotor_disc_area},
    };
    for (const auto& [name, v] : rotor_fields)
        if (!(v > 0.0) || !std::isfinite(v)) fail(std::string("rotor.") + name + " must be > 0");

    const ChannelParams& c = cfg.channel;
    if (!(c.beta0_ref_gain > 0.0)) fail("channel.beta0_ref_gain must be > 0");
    if (!(c.pathloss_uav_ris >= 2.0 && c.pathloss_ris_sensor >= 2.0 && c.pathloss_direct >= 2.0))
        fail("channel: path-loss exponents must be >= 2");
    if (!(c.rician_uav_ris >= 0.0 && c.rician_ris_sensor >= 0.0 && c.rician_direct >= 0.0))
        fail("channel: Rician factors must be >= 0");
    if (!(c.wavelength > 0.0)) fail("channel.wavelength must be > 0");
    if (!(c.element_spacing > 0.0)) fail("channel.element_spacing must be > 0");
}

/// The evaluation setup: 5 sensors on a 30 m semicircle around the RIS.
inline ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    cfg.sensors = semicircle_layout(30.0, 5);
    cfg.sensor_energy_req.assign(cfg.sensors.size(), 0.2e-3);
    cfg.ris_position = {0.0, 0.0};
    cfg.ris_height = 10.0;
    cfg.ris_elements = 8;
    cfg.uav_height = 20.0;
    cfg.uav_max_speed = 30.0;
    cfg.radiated_power = dbm_to_watt(40.0);
    cfg.start = {-35.0, 0.0};
    cfg.finish = {35.0, 0.0};
    cfg.conversion_efficiency = 0.6;
    cfg.max_segment_length = 0.5;
    return cfg;
}

// ---------------------------------------------------------------------------
// Structured-text (JSON) serialization. Schema: docs/scenario_schema.md

namespace detail {

inline nlohmann::json point_to_json(PlanarPoint p) { return nlohmann::json::array({p.real(), p.imag()}); }

inline PlanarPoint point_from_json(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ScenarioError("parse error: '" + key + "' must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

/// Accepts a bare number (already in `base_unit`) or a string "<value> <unit>".
inline double quantity_from_json(const nlohmann::json& j, const std::string& key, const std::string& base_unit) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) throw ScenarioError("parse error: '" + key + "' must be a number or quantity string");
    std::istringstream in(j.get<std::string>());
    double value = 0.0;
    std::string unit;
    if (!(in >> value)) throw ScenarioError("parse error: '" + key + "' has no numeric value");
    in >> unit;
    if (unit.empty() || unit == base_unit) return value;
    if (base_unit == "W") {
        if (unit == "dBm") return dbm_to_watt(value);
        if (unit == "dBW") return std::pow(10.0, value / 10.0);
        if (unit == "mW") return value * 1e-3;
    } else if (base_unit == "J") {
        if (unit == "mJ") return value * 1e-3;
        if (unit == "uJ") return value * 1e-6;
    } else if (base_unit == "m") {
        if (unit == "km") return value * 1e3;
    }
    throw ScenarioError("parse error: unsupported unit '" + unit + "' for '" + key + "'");
}

template <class T>
void read_number(const nlohmann::json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ScenarioError(std::string("parse error: '") + key + "' must be boolean");
        out = v.get<bool>();
    } else {
        if (!v.is_number()) throw ScenarioError(std::string("parse error: '") + key + "' must be a number");
        out = v.get<T>();
    }
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
    using nlohmann::json;
    json sensors = json::array();
    for (auto p : cfg.sensors) sensors.push_back(detail::point_to_json(p));
    const RotorParams& r = cfg.rotor;
    const ChannelParams& c = cfg.channel;
    return json{
        {"sensors", sensors},
        {"sensor_energy_req", cfg.sensor_energy_req},
        {"ris_position", detail::point_to_json(cfg.ris_position)},
        {"ris_height", cfg.ris_height},
        {"ris_elements", cfg.ris_elements},
        {"uav_height", cfg.uav_height},
        {"uav_max_speed", cfg.uav_max_speed},
        {"radiated_power", cfg.radiated_power},
        {"start", detail::point_to_json(cfg.start)},
        {"finish", detail::point_to_json(cfg.finish)},
        {"conversion_efficiency", cfg.conversion_efficiency},
        {"max_segment_length", cfg.max_segment_length},
        {"rotor",
         {{"p0_hover_blade_power", r.p0_hover_blade_power},
          {"p_induced_hover", r.p_induced_hover},
          {"tip_speed", r.tip_speed},
          {"mean_induced_velocity", r.mean_induced_velocity},
          {"fuselage_drag_ratio", r.fuselage_drag_ratio},
          {"air_density", r.air_density},
          {"rotor_solidity", r.rotor_solidity},
          {"rotor_disc_area", r.rotor_disc_area}}},
        {"channel",
         {{"beta0_ref_gain", c.beta0_ref_gain},
          {"pathloss_uav_ris", c.pathloss_uav_ris},
          {"pathloss_ris_sensor", c.pathloss_ris_sensor},
          {"pathloss_direct", c.pathloss_direct},
          {"rician_uav_ris", c.rician_uav_ris},
          {"rician_ris_sensor", c.rician_ris_sensor},
          {"rician_direct", c.rician_direct},
          {"wavelength", c.wavelength},
          {"element_spacing", c.element_spacing},
          {"los_only", c.los_only},
          {"aod_reference", c.aod_reference == AodReference::Ris ? "ris" : "uav"}}},
    };
}

/// Missing keys fall back to the defaults of default_scenario(); the result is validated.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ScenarioError("parse error: scenario root must be an object");
    ScenarioConfig cfg = default_scenario();

    if (j.contains("sensors")) {
        const auto& arr = j.at("sensors");
        if (!arr.is_array()) throw ScenarioError("parse error: 'sensors' must be an array");
        cfg.sensors.clear();
        for (const auto& p : arr) cfg.sensors.push_back(detail::point_from_json(p, "sensors[]"));
        if (!j.contains("sensor_energy_req"))
            cfg.sensor_energy_req.assign(cfg.sensors.size(), default_scenario().sensor_energy_req.front());
    }
    if (j.contains("sensor_energy_req")) {
        const auto& e = j.at("sensor_energy_req");
        if (e.is_array()) {
            cfg.sensor_energy_req.clear();
            for (const auto& v : e) cfg.sensor_energy_req.push_back(detail::quantity_from_json(v, "sensor_energy_req[]", "J"));
        } else {
            cfg.sensor_energy_req.assign(cfg.sensors.size(), detail::quantity_from_json(e, "sensor_energy_req", "J"));
        }
    }
    if (j.contains("ris_position")) cfg.ris_position = detail::point_from_json(j.at("ris_position"), "ris_position");
    if (j.contains("start")) cfg.start = detail::point_from_json(j.at("start"), "start");
    if (j.contains("finish")) cfg.finish = detail::point_from_json(j.at("finish"), "finish");
    if (j.contains("ris_height")) cfg.ris_height = detail::quantity_from_json(j.at("ris_height"), "ris_height", "m");
    if (j.contains("uav_height")) cfg.uav_height = detail::quantity_from_json(j.at("uav_height"), "uav_height", "m");
    if (j.contains("max_segment_length"))
        cfg.max_segment_length = detail::quantity_from_json(j.at("max_segment_length"), "max_segment_length", "m");
    if (j.contains("radiated_power"))
        cfg.radiated_power = detail::quantity_from_json(j.at("radiated_power"), "radiated_power", "W");
    detail::read_number(j, "ris_elements", cfg.ris_elements);
    detail::read_number(j, "uav_max_speed", cfg.uav_max_speed);
    detail::read_number(j, "conversion_efficiency", cfg.conversion_efficiency);

    if (j.contains("rotor")) {
        const auto& r = j.at("rotor");
        if (!r.is_object()) throw ScenarioError("parse error: 'rotor' must be an object");
        detail::read_number(r, "p0_hover_blade_power", cfg.rotor.p0_hover_blade_power);
        detail::read_number(r, "p_induced_hover", cfg.rotor.p_induced_hover);
        detail::read_number(r, "tip_speed", cfg.rotor.tip_speed);
        detail::read_number(r, "mean_induced_velocity", cfg.rotor.mean_induced_velocity);
        detail::read_number(r, "fuselage_drag_ratio", cfg.rotor.fuselage_drag_ratio);
        detail::read_number(r, "air_density", cfg.rotor.air_density);
        detail::read_number(r, "rotor_solidity", cfg.rotor.rotor_solidity);
        detail::read_number(r, "rotor_disc_area", cfg.rotor.rotor_disc_area);
    }
    if (j.contains("channel")) {
        const auto& c = j.at("channel");
        if (!c.is_object()) throw ScenarioError("parse error: 'channel' must be an object");
        detail::read_number(c, "beta0_ref_gain", cfg.channel.beta0_ref_gain);
        detail::read_number(c, "pathloss_uav_ris", cfg.channel.pathloss_uav_ris);
        detail::read_number(c, "pathloss_ris_sensor", cfg.channel.pathloss_ris_sensor);
        detail::read_number(c, "pathloss_direct", cfg.channel.pathloss_direct);
        detail::read_number(c, "rician_uav_ris", cfg.channel.rician_uav_ris);
        detail::read_number(c, "rician_ris_sensor", cfg.channel.rician_ris_sensor);
        detail::read_number(c, "rician_direct", cfg.channel.rician_direct);
        detail::read_number(c, "wavelength", cfg.channel.wavelength);
        detail::read_number(c, "element_spacing", cfg.channel.element_spacing);
        detail::read_number(c, "los_only", cfg.channel.los_only);
        if (c.contains("aod_reference")) {
            const auto s = c.at("aod_reference").get<std::string>();
            if (s == "ris") cfg.channel.aod_reference = AodReference::Ris;
            else if (s == "uav") cfg.channel.aod_reference = AodReference::Uav;
            else throw ScenarioError("parse error: channel.aod_reference must be 'ris' or 'uav'");
        }
    }
    validate_scenario(cfg);
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError("parse error in " + path + ": " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError("parse error in " + path + ": " + e.what());
    }
}

inline void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write scenario file: " + path);
    out << scenario_to_json(cfg).dump(2) << '\n';
}

}  // namespace uavris

#endif  // UAVRIS_SCENARIO_HPP
