#ifndef UAVRIS_REPORT_HPP
#define UAVRIS_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "orchestrate.hpp"
#include "power.hpp"
#include "scenario.hpp"

namespace uavris {

// ---------------------------------------------------------------------------
// CSV

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : os_(path) {
        if (!os_) throw std::runtime_error("cannot write " + path.string());
        os_ << std::setprecision(12);
    }

    template <class... Ts>
    void row(const Ts&... cells) {
        bool first = true;
        ((os_ << (first ? "" : ",") << cells, first = false), ...);
        os_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
    }

private:
    std::ofstream os_;
};

inline void write_convergence_csv(const RunReport& r, const std::filesystem::path& path) {
    CsvWriter w(path);
    w.row("iter", "E_U_J", "min_hk", "mu", "status", "cone_iterations", "mm_iterations", "surrogate_reference",
          "surrogate_solution", "reference_residual", "solution_residual", "reference_repair", "repair", "seconds");
    for (const auto& it : r.iterations)
        w.row(it.n, it.energy, it.min_hk, it.mu, to_string(it.status), it.cone_iterations, it.mm_iterations,
              it.surrogate_reference, it.surrogate_solution, it.reference_residual, it.solution_residual,
              it.reference_repair, it.repair, it.seconds);
}

/// One row per waypoint; slot_duration_s is the hover (FHB) or the incoming segment time (PD).
inline void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    CsvWriter w(path);
    w.row("index", "x_m", "y_m", "slot_duration_s");
    for (std::size_t i = 0; i < traj.waypoints.size(); ++i) {
        const bool radiating = i >= 1 && i - 1 < traj.durations.size();
        std::ostringstream d;
        d << std::setprecision(12);
        if (radiating) d << traj.durations[i - 1];
        w.row(i, traj.waypoints[i].real(), traj.waypoints[i].imag(), d.str());
    }
}

struct SegmentSpeed {
    double length = 0.0;
    double time = 0.0;
    double speed = 0.0;
};

/// FHB segments are flown at the maximum-range speed.
inline std::vector<SegmentSpeed> segment_speeds(const Trajectory& traj, const ScenarioConfig& cfg) {
    std::vector<SegmentSpeed> out;
    const double vmr = mr_speed(cfg.rotor);
    for (std::size_t l = 0; l < traj.num_segments(); ++l) {
        SegmentSpeed s;
        s.length = traj.segment_length(l);
        if (traj.protocol == Protocol::FHB) {
            s.speed = vmr;
            s.time = s.length / vmr;
        } else {
            s.time = traj.durations.at(l);
            s.speed = s.time > 0.0 ? s.length / s.time : 0.0;
        }
        out.push_back(s);
    }
    return out;
}

inline void write_speed_csv(const Trajectory& traj, const ScenarioConfig& cfg, const std::filesystem::path& path) {
    CsvWriter w(path);
    w.row("segment", "length_m", "time_s", "speed_mps");
    const auto sp = segment_speeds(traj, cfg);
    for (std::size_t l = 0; l < sp.size(); ++l) w.row(l, sp[l].length, sp[l].time, sp[l].speed);
}

/// Expected received power [W] at every sensor for each radiating slot.
inline std::vector<std::vector<double>> received_power(const Trajectory& traj, const PhasePlan& plan,
                                                       const ScenarioConfig& cfg) {
    std::vector<std::vector<double>> out(traj.durations.size(), std::vector<double>(cfg.num_sensors()));
    for (std::size_t l = 0; l < traj.durations.size(); ++l) {
        const Eigen::VectorXcd phi = plan.phi(l);
        for (std::size_t k = 0; k < cfg.num_sensors(); ++k)
            out[l][k] = expected_power(traj.radiating_point(l), phi, k, cfg);
    }
    return out;
}

inline void write_received_power_csv(const Trajectory& traj, const PhasePlan& plan, const ScenarioConfig& cfg,
                                     const std::filesystem::path& path) {
    CsvWriter w(path);
    std::vector<std::string> head{"slot", "x_m", "y_m", "duration_s"};
    for (std::size_t k = 0; k < cfg.num_sensors(); ++k) head.push_back("P_" + std::to_string(k + 1) + "_W");
    w.row(head);
    const auto p = received_power(traj, plan, cfg);
    for (std::size_t l = 0; l < p.size(); ++l) {
        std::ostringstream os;
        os << std::setprecision(12);
        const PlanarPoint q = traj.radiating_point(l);
        os << l << ',' << q.real() << ',' << q.imag() << ',' << traj.durations[l];
        for (double v : p[l]) os << ',' << v;
        w.row(std::vector<std::string>{os.str()});
    }
}

inline void write_harvested_csv(const RunReport& r, const ScenarioConfig& cfg, const std::filesystem::path& path) {
    CsvWriter w(path);
    w.row("sensor", "x_m", "y_m", "required_J", "harvested_J", "ratio");
    for (std::size_t k = 0; k < r.harvested.size(); ++k)
        w.row(k + 1, cfg.sensors[k].real(), cfg.sensors[k].imag(), cfg.sensor_energy_req[k], r.harvested[k],
              r.harvested[k] / cfg.sensor_energy_req[k]);
}

// ---------------------------------------------------------------------------
// SVG

struct PlotSeries {
    std::string name;
    std::vector<double> x, y;
    bool scatter = false;
};

/// Lines and markers on linear axes with a legend.
inline std::string svg_plot(const std::vector<PlotSeries>& series, const std::string& title, const std::string& xlabel,
                            const std::string& ylabel, bool equal_aspect = false) {
    const double W = 640, H = 440, ml = 80, mr = 150, mt = 40, mb = 55;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 <= 0) y0 -= 0.5 * std::max(1.0, std::abs(y0)), y1 += 0.5 * std::max(1.0, std::abs(y1));
    const double pw = W - ml - mr, ph = H - mt - mb;
    double sx = pw / (x1 - x0), sy = ph / (y1 - y0);
    if (equal_aspect) sx = sy = std::min(sx, sy);
    const double padx = 0.03 * pw, pady = 0.05 * ph;
    auto X = [&](double v) { return ml + padx / 2 + (v - x0) * sx * (pw - padx) / pw; };
    auto Y = [&](double v) { return mt + ph - pady / 2 - (v - y0) * sy * (ph - pady) / ph; };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    os << "<text transform=\"translate(18," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel
       << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        os << "<text x=\"" << X(xv) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << Y(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
    }
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* c = colors[si % 7];
        if (s.scatter) {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                os << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i]) << "\" r=\"4\" fill=\"" << c << "\"/>\n";
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) os << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
            os << "\"/>\n";
        }
        const double ly = mt + 14 + 18 * static_cast<double>(si);
        os << "<rect x=\"" << ml + pw + 12 << "\" y=\"" << ly - 8 << "\" width=\"12\" height=\"8\" fill=\"" << c
           << "\"/>\n";
        os << "<text x=\"" << ml + pw + 30 << "\" y=\"" << ly << "\">" << s.name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

// ---------------------------------------------------------------------------
// bundle

inline std::string summary_text(const RunReport& r) {
    std::ostringstream os;
    os << std::setprecision(10);
    os << "label " << r.label << '\n';
    os << "protocol " << protocol_name(r.protocol) << '\n';
    os << "ris_elements " << r.ris_elements << '\n';
    os << "status " << (r.ok ? "ok" : "failed") << '\n';
    if (!r.message.empty()) os << "message " << r.message << '\n';
    os << "iterations " << r.iterations.size() << '\n';
    os << "energy_J " << r.energy << '\n';
    os << "repair_factor " << r.repair_factor << '\n';
    double worst = std::numeric_limits<double>::infinity();
    for (double h : r.harvested) worst = std::min(worst, h);
    if (!r.harvested.empty()) os << "min_harvested_J " << worst << '\n';
    os << "reference_feasible " << r.reference_feasible << '\n';
    os << "surrogate_descent " << r.surrogate_descent << '\n';
    os << "wall_seconds " << r.wall_seconds << '\n';
    if (r.bits > 0) {
        os << "bits " << r.bits << '\n';
        os << "continuous_energy_J " << r.continuous_energy << '\n';
        os << "quantized_over_continuous " << r.energy / r.continuous_energy << '\n';
    }
    return os.str();
}

/// convergence, trajectory, speed, received power and harvested CSVs plus two SVG plots and a summary.
inline void write_bundle(const RunReport& r, const ScenarioConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_convergence_csv(r, dir / "convergence.csv");
    write_text(dir / "summary.txt", summary_text(r));
    if (r.trajectory.waypoints.empty()) return;
    ScenarioConfig c = cfg;
    c.ris_elements = r.ris_elements;
    write_trajectory_csv(r.trajectory, dir / "trajectory.csv");
    write_speed_csv(r.trajectory, c, dir / "speed.csv");
    write_received_power_csv(r.trajectory, r.plan, c, dir / "received_power.csv");
    write_harvested_csv(r, c, dir / "harvested.csv");

    PlotSeries path{"UAV", {}, {}, false}, sensors{"sensors", {}, {}, true}, ris{"RIS", {}, {}, true};
    for (PlanarPoint q : r.trajectory.waypoints) path.x.push_back(q.real()), path.y.push_back(q.imag());
    for (PlanarPoint q : c.sensors) sensors.x.push_back(q.real()), sensors.y.push_back(q.imag());
    ris.x.push_back(c.ris_position.real());
    ris.y.push_back(c.ris_position.imag());
    write_text(dir / "trajectory.svg", svg_plot({path, sensors, ris}, r.label + " trajectory", "x [m]", "y [m]", true));

    PlotSeries conv{"E_U", {}, {}, false};
    for (const auto& it : r.iterations) conv.x.push_back(it.n), conv.y.push_back(it.energy);
    write_text(dir / "convergence.svg", svg_plot({conv}, r.label + " convergence", "iteration", "E_U [J]"));
}

}  // namespace uavris

#endif  // UAVRIS_REPORT_HPP
