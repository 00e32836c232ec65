#ifndef UAVRIS_SCA_HPP
#define UAVRIS_SCA_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "channel.hpp"
#include "cone.hpp"
#include "cone_solver.hpp"
#include "power.hpp"
#include "scenario.hpp"

namespace uavris {

class ScaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Taylor lower bounds of the large-scale gains

/// beta0 / (|q - anchor|^2 + h^2)^(alpha/2), linearized in |q - anchor|^2 at q_ref.
inline double taylor_gain_lower(PlanarPoint q, PlanarPoint q_ref, PlanarPoint anchor, double height, double alpha,
                                double beta0) {
    const double d0 = std::norm(q_ref - anchor) + height * height;
    const double b = beta0 / std::pow(d0, alpha / 2.0);
    return b - alpha * b * (std::norm(q - anchor) - std::norm(q_ref - anchor)) / (2.0 * d0);
}

inline double taylor_beta_d(PlanarPoint q, PlanarPoint q_ref, std::size_t k, const ScenarioConfig& cfg) {
    return taylor_gain_lower(q, q_ref, cfg.sensors.at(k), cfg.uav_height, cfg.channel.pathloss_direct,
                             cfg.channel.beta0_ref_gain);
}

inline double taylor_beta_t(PlanarPoint q, PlanarPoint q_ref, const ScenarioConfig& cfg) {
    return taylor_gain_lower(q, q_ref, cfg.ris_position, cfg.uav_height - cfg.ris_height,
                             cfg.channel.pathloss_uav_ris, cfg.channel.beta0_ref_gain);
}

/// Largest Hessian eigenvalue (over the whole plane) of q -> beta0 (|q - a|^2 + h^2)^(-alpha/2),
/// given the gain `beta` at a point with squared 3D distance d0. Gives beta(q) <= linearization + curv/2 |dq|^2.
inline double gain_curvature(double beta, double d0, double height, double alpha) {
    const double beta0 = beta * std::pow(d0, alpha / 2.0);
    const double h2 = height * height;
    // radial second derivative peaks at |q - a|^2 = 3 h^2 / (alpha + 1)
    const double s = h2 * (alpha + 4.0) / (alpha + 1.0);
    return 2.0 * alpha * beta0 * h2 * std::pow(s, -alpha / 2.0 - 2.0);
}

// ---------------------------------------------------------------------------
// phase coefficients, frozen at the current position and phases

/// P ~ Pt((U1 + U3) beta_t + U2 sqrt(beta_d beta_t) + beta_d).
/// U1 and U2 carry no beta_t factor here; it is applied through beta_t itself.
struct PhaseCoefficients {
    double u1 = 0.0, u2 = 0.0, u3 = 0.0;
    double beta_t = 0.0, beta_d = 0.0;  // at the expansion point
};

inline PhaseCoefficients phase_coefficients(PlanarPoint q, const Eigen::VectorXcd& phi, std::size_t k,
                                            const ScenarioConfig& cfg) {
    const LinkGeometry g = link_geometry(q, k, cfg);
    const LargeScaleGains b = large_scale_gains(g, cfg);
    const RicianWeights w = rician_weights(cfg.channel);
    PhaseCoefficients c;
    c.beta_t = b.beta_t;
    c.beta_d = b.beta_d;
    if (cfg.ris_elements == 0) return c;
    const std::complex<double> ip = psi_vector(g, cfg).dot(phi);
    c.u1 = w.los_r * w.los_t * b.beta_r * std::norm(ip);
    c.u2 = 2.0 * std::sqrt(w.los_d * w.los_r * w.los_t * b.beta_r) * ip.real();
    c.u3 = cfg.ris_elements * (w.los_r * w.nlos_t + w.nlos_r * w.los_t + w.nlos_r * w.nlos_t) * b.beta_r;
    return c;
}

/// Surrogate power at the expansion point; equals expected_power there.
inline double surrogate_power(const PhaseCoefficients& c, double pt) {
    return pt * ((c.u1 + c.u3) * c.beta_t + c.u2 * std::sqrt(c.beta_d * c.beta_t) + c.beta_d);
}

// ---------------------------------------------------------------------------
// subproblem container

struct ScaOptions {
    double t_floor = 1e-6;       // PD lower bound on every duration
    double delta_floor = 1e-6;   // PD reference floor for the parasitic slack
    double bound_margin = 1e-7;  // relative inset on segment-length bounds
};

struct ScaSubproblem {
    Protocol protocol = Protocol::FHB;
    ConeProgram program;
    std::vector<double> reference;  // feasible point built from the (repaired) iterate
    Trajectory reference_traj;
    double reference_repair = 1.0;  // common factor applied to durations before building
    double objective_scale = 1.0;   // objective is E / objective_scale
    // variable map
    std::vector<std::ptrdiff_t> dq_x, dq_y;  // per waypoint, -1 when pinned
    std::vector<std::size_t> t;              // per duration slot
    std::vector<std::size_t> delta;          // per segment
    double time_unit = 1.0;                  // t variables are in units of this many seconds
};

namespace detail {

/// ConeProgram plus a running reference vector.
struct Builder {
    ConeProgram p;
    std::vector<double> ref;

    std::size_t var(std::string name, double r) {
        ref.push_back(r);
        return p.add_var(std::move(name));
    }
    std::size_t nonneg(std::string name, double r) {
        ref.push_back(r);
        return p.add_nonneg_var(std::move(name));
    }
};

inline std::string idx(const char* base, std::size_t i) { return std::string(base) + "[" + std::to_string(i) + "]"; }
inline std::string idx(const char* base, std::size_t k, std::size_t l) {
    return std::string(base) + "[" + std::to_string(k) + "," + std::to_string(l) + "]";
}

/// Scale durations so that sum_l t_l nu_kl >= 1 for every sensor; returns the factor.
inline double repair_durations(std::vector<double>& t, const std::vector<std::vector<double>>& nu) {
    double worst = 1.0;
    for (const auto& row : nu) {
        double r = 0.0;
        for (std::size_t l = 0; l < t.size(); ++l) r += t[l] * row[l];
        if (!(r > 0.0)) throw ScaError("degenerate iterate: a sensor receives no energy");
        worst = std::max(worst, 1.0 / r);
    }
    if (worst > 1.0)
        for (double& v : t) v *= worst;
    return worst;
}

struct Slot {
    std::size_t waypoint;  // index of the radiating waypoint
    std::size_t t_var;
};

/// Caps, power coefficients, geometric-mean cones and the linearized e-sum for every (k, slot).
inline void add_energy_block(Builder& b, ScaSubproblem& sp, const std::vector<Slot>& slots,
                             const std::vector<std::vector<PhaseCoefficients>>& coef,
                             const std::vector<double>& t_ref, const std::vector<std::ptrdiff_t>& s_var,
                             double time_unit, const ScenarioConfig& cfg) {
    const std::size_t K = cfg.num_sensors();
    const std::size_t n = slots.size();
    const auto& wp = sp.reference_traj.waypoints;
    const bool with_ris = cfg.ris_elements > 0;
    const double pt = cfg.radiated_power;
    const double eta = cfg.conversion_efficiency;

    // cap row: y + g s + 2 g (q_ref - anchor) . dq + slack = 1
    auto add_cap = [&](std::size_t y, std::size_t l, PlanarPoint anchor, double height, double alpha,
                       const std::string& name) {
        const std::size_t wi = slots[l].waypoint;
        const PlanarPoint qr = wp[wi];
        const double g = alpha / (2.0 * (std::norm(qr - anchor) + height * height));
        const std::size_t slack = b.nonneg("aux:cap_slack_" + name, 0.0);
        std::vector<ConeProgram::Term> row{{y, 1.0}, {slack, 1.0}};
        if (s_var[wi] >= 0) {
            const PlanarPoint lin = 2.0 * g * (qr - anchor);
            row.push_back({static_cast<std::size_t>(s_var[wi]), g});
            row.push_back({static_cast<std::size_t>(sp.dq_x[wi]), lin.real()});
            row.push_back({static_cast<std::size_t>(sp.dq_y[wi]), lin.imag()});
        }
        b.p.add_eq(std::move(row), 1.0, "cap " + name);
    };

    std::vector<std::ptrdiff_t> yt(n, -1);
    if (with_ris) {
        for (std::size_t l = 0; l < n; ++l) {
            yt[l] = static_cast<std::ptrdiff_t>(b.nonneg(idx("y_t", l), 1.0));
            add_cap(static_cast<std::size_t>(yt[l]), l, cfg.ris_position, cfg.uav_height - cfg.ris_height,
                    cfg.channel.pathloss_uav_ris, idx("y_t", l));
        }
    }

    for (std::size_t k = 0; k < K; ++k) {
        const double ereq = cfg.sensor_energy_req[k];
        std::vector<double> nu(n);
        double total = 0.0;
        std::vector<std::vector<ConeProgram::Term>> s_rows(n);
        std::vector<double> s_const(n, 0.0);
        for (std::size_t l = 0; l < n; ++l) {
            const PhaseCoefficients& c = coef[k][l];
            const std::size_t wi = slots[l].waypoint;
            // w = T (eta Pt / 2E) * (surrogate power in normalized variables)
            const double scale = time_unit * eta * pt / (2.0 * ereq);
            auto& row = s_rows[l];

            // coefficients on beta_t, beta_d and sqrt(beta_t beta_d)
            double at = with_ris ? c.u1 + c.u3 : 0.0, ad = 1.0, ag = 0.0;
            if (with_ris && c.u2 >= 0.0) {
                ag = c.u2;
            } else if (with_ris) {
                // -|U2| sqrt(bt bd) >= -|U2| (r bt + bd / r) / 2, tight at r = sqrt(bd/bt)
                const double r = std::sqrt(c.beta_d / c.beta_t);
                at -= std::abs(c.u2) * r / 2.0;
                ad -= std::abs(c.u2) / (2.0 * r);
            }

            // nonnegative coefficient: capped slack y <= Taylor lower bound;
            // negative coefficient: quadratic upper bound of the gain itself
            auto gain_term = [&](double coeff, double beta, PlanarPoint anchor, double height, double alpha,
                                 std::ptrdiff_t y) {
                if (coeff >= 0.0) {
                    row.push_back({static_cast<std::size_t>(y), scale * coeff * beta});
                    return;
                }
                const PlanarPoint qr = wp[wi];
                const double d0 = std::norm(qr - anchor) + height * height;
                const double curv = gain_curvature(beta, d0, height, alpha);
                s_const[l] += scale * coeff * beta;
                if (s_var[wi] >= 0) {
                    const PlanarPoint lin = -alpha * beta / d0 * (qr - anchor);
                    row.push_back({static_cast<std::size_t>(sp.dq_x[wi]), scale * coeff * lin.real()});
                    row.push_back({static_cast<std::size_t>(sp.dq_y[wi]), scale * coeff * lin.imag()});
                    row.push_back({static_cast<std::size_t>(s_var[wi]), scale * coeff * curv / 2.0});
                }
            };

            std::ptrdiff_t yd = -1;
            if (ad >= 0.0 || ag > 0.0) {
                yd = static_cast<std::ptrdiff_t>(b.nonneg(idx("y_d", k, l), 1.0));
                add_cap(static_cast<std::size_t>(yd), l, cfg.sensors[k], cfg.uav_height,
                        cfg.channel.pathloss_direct, idx("y_d", k, l));
            }
            if (with_ris)
                gain_term(at, c.beta_t, cfg.ris_position, cfg.uav_height - cfg.ris_height,
                          cfg.channel.pathloss_uav_ris, yt[l]);
            gain_term(ad, c.beta_d, cfg.sensors[k], cfg.uav_height, cfg.channel.pathloss_direct, yd);
            if (ag > 0.0) {
                // ya^2 <= 2 y_t y_d in normalized units
                const std::size_t ya = b.var(idx("y_a", k, l), std::sqrt(2.0));
                b.p.add_rsoc({static_cast<std::size_t>(yt[l]), static_cast<std::size_t>(yd), ya});
                row.push_back({ya, scale * ag * std::sqrt(c.beta_t * c.beta_d) / std::sqrt(2.0)});
            }
            const double g_ref = at * c.beta_t + ad * c.beta_d + ag * std::sqrt(c.beta_t * c.beta_d);
            nu[l] = eta * pt * g_ref / ereq;
            total += t_ref[l] * nu[l];
        }
        if (!(total > 0.0)) throw ScaError("degenerate iterate: a sensor receives no energy");

        std::vector<ConeProgram::Term> esum;
        double esum_rhs = 1.0;
        for (std::size_t l = 0; l < n; ++l) {
            // e_ref^2 = t nu / R, so sum e_ref^2 = 1 and e_ref^2 <= t nu
            const double e_ref = std::sqrt(std::max(t_ref[l] * nu[l], 0.0) / total);
            // w = ws * w', e = sqrt(ws) * e' keeps every slot's cone near unit size
            const double w_ref = time_unit * nu[l] / 2.0;
            const double ws = w_ref > 0.0 ? w_ref : 1.0;
            const double es = std::sqrt(ws);
            const std::size_t w = b.var(idx("aux:w", k, l), w_ref / ws);
            const std::size_t e = b.var(idx("aux:e", k, l), e_ref / es);
            auto row = std::move(s_rows[l]);
            for (auto& term : row) term.coeff /= ws;
            row.push_back({w, -1.0});
            b.p.add_eq(std::move(row), -s_const[l] / ws, idx("power", k, l));
            // e^2 <= 2 t w, t in units of T
            b.p.add_rsoc({slots[l].t_var, w, e});
            esum.push_back({e, 2.0 * e_ref * es});
            esum_rhs += e_ref * e_ref;
        }
        double lhs = 0.0;
        for (const auto& term : esum) lhs += term.coeff * b.ref[term.var];
        const std::size_t slack = b.nonneg(idx("aux:esum_slack", k), std::max(lhs - esum_rhs, 0.0));
        esum.push_back({slack, -1.0});
        b.p.add_eq(std::move(esum), esum_rhs, idx("esum", k));
    }
}

/// Displacement variables for interior waypoints and s >= |dq|^2 through RSOC(1/2, s, dq).
inline std::vector<std::ptrdiff_t> add_displacements(Builder& b, ScaSubproblem& sp, std::size_t half_var) {
    const std::size_t npts = sp.reference_traj.waypoints.size();
    sp.dq_x.assign(npts, -1);
    sp.dq_y.assign(npts, -1);
    std::vector<std::ptrdiff_t> s(npts, -1);
    for (std::size_t i = 1; i + 1 < npts; ++i) {
        sp.dq_x[i] = static_cast<std::ptrdiff_t>(b.var(idx("dq_x", i), 0.0));
        sp.dq_y[i] = static_cast<std::ptrdiff_t>(b.var(idx("dq_y", i), 0.0));
        s[i] = static_cast<std::ptrdiff_t>(b.var(idx("aux:dq_sq", i), 0.0));
        b.p.add_rsoc({half_var, static_cast<std::size_t>(s[i]), static_cast<std::size_t>(sp.dq_x[i]),
                      static_cast<std::size_t>(sp.dq_y[i])});
    }
    return s;
}

/// delta_l >= |q_l - q_{l-1}| with explicit segment components.
inline void add_segment_norms(Builder& b, ScaSubproblem& sp) {
    const auto& wp = sp.reference_traj.waypoints;
    sp.delta.clear();
    for (std::size_t l = 0; l + 1 < wp.size(); ++l) {
        const PlanarPoint d = wp[l + 1] - wp[l];
        const std::size_t dl = b.var(idx("delta", l), std::abs(d));
        const std::size_t dx = b.var(idx("aux:seg_x", l), d.real());
        const std::size_t dy = b.var(idx("aux:seg_y", l), d.imag());
        std::vector<ConeProgram::Term> rx{{dx, 1.0}}, ry{{dy, 1.0}};
        if (sp.dq_x[l + 1] >= 0) {
            rx.push_back({static_cast<std::size_t>(sp.dq_x[l + 1]), -1.0});
            ry.push_back({static_cast<std::size_t>(sp.dq_y[l + 1]), -1.0});
        }
        if (sp.dq_x[l] >= 0) {
            rx.push_back({static_cast<std::size_t>(sp.dq_x[l]), 1.0});
            ry.push_back({static_cast<std::size_t>(sp.dq_y[l]), 1.0});
        }
        b.p.add_eq(std::move(rx), d.real(), idx("seg_x", l));
        b.p.add_eq(std::move(ry), d.imag(), idx("seg_y", l));
        b.p.add_soc({dl, dx, dy});
        sp.delta.push_back(dl);
    }
}

inline std::vector<std::vector<PhaseCoefficients>> all_coefficients(const Trajectory& traj, const PhasePlan& plan,
                                                                    const ScenarioConfig& cfg) {
    const std::size_t n = traj.durations.size();
    if (plan.theta.size() != n) throw ScaError("phase plan does not match trajectory");
    std::vector<std::vector<PhaseCoefficients>> c(cfg.num_sensors(), std::vector<PhaseCoefficients>(n));
    for (std::size_t l = 0; l < n; ++l) {
        const Eigen::VectorXcd phi = plan.phi(l);
        for (std::size_t k = 0; k < cfg.num_sensors(); ++k)
            c[k][l] = phase_coefficients(traj.radiating_point(l), phi, k, cfg);
    }
    return c;
}

inline std::vector<std::vector<double>> energy_rates(const std::vector<std::vector<PhaseCoefficients>>& coef,
                                                     const ScenarioConfig& cfg) {
    std::vector<std::vector<double>> nu(coef.size());
    for (std::size_t k = 0; k < coef.size(); ++k)
        for (const auto& c : coef[k])
            nu[k].push_back(cfg.conversion_efficiency * surrogate_power(c, cfg.radiated_power) /
                            cfg.sensor_energy_req[k]);
    return nu;
}

inline double mean_positive(const std::vector<double>& v) {
    double s = 0.0;
    std::size_t n = 0;
    for (double x : v)
        if (x > 0.0) s += x, ++n;
    return n ? s / static_cast<double>(n) : 1.0;
}

inline void normalize_objective(Builder& b, ScaSubproblem& sp) {
    const double e = b.p.objective_value(b.ref);
    sp.objective_scale = e > 0.0 ? e : 1.0;
    for (auto& term : b.p.objective) term.coeff /= sp.objective_scale;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// FHB

inline ScaSubproblem build_fhb_subproblem(const Trajectory& traj, const PhasePlan& plan, const ScenarioConfig& cfg,
                                          const ScaOptions& opts = {}) {
    (void)opts;
    if (traj.protocol != Protocol::FHB) throw ScaError("build_fhb_subproblem: not an FHB trajectory");
    check_endpoints(traj, cfg);
    if (traj.durations.size() + 2 != traj.waypoints.size()) throw ScaError("FHB trajectory needs L-1 hover times");
    for (double t : traj.durations)
        if (!(t >= 0.0)) throw ScaError("negative hover time");

    ScaSubproblem sp;
    sp.protocol = Protocol::FHB;
    const auto coef = detail::all_coefficients(traj, plan, cfg);
    std::vector<double> t_ref = traj.durations;
    sp.reference_repair = detail::repair_durations(t_ref, detail::energy_rates(coef, cfg));
    sp.reference_traj = traj;
    sp.reference_traj.durations = t_ref;

    detail::Builder b;
    const std::size_t half = b.var("aux:half", 0.5);
    b.p.add_eq({{half, 1.0}}, 0.5, "half");
    const auto s_var = detail::add_displacements(b, sp, half);
    detail::add_segment_norms(b, sp);

    const double v = mr_speed(cfg.rotor);
    const double per_meter = propulsion_power(v, cfg.rotor) / v;
    for (std::size_t dl : sp.delta) b.p.add_cost(dl, per_meter);

    const double T = detail::mean_positive(t_ref);
    sp.time_unit = T;
    std::vector<detail::Slot> slots;
    for (std::size_t l = 0; l < t_ref.size(); ++l) {
        const std::size_t tv = b.nonneg(detail::idx("t", l), t_ref[l] / T);
        sp.t.push_back(tv);
        b.p.add_cost(tv, (hover_power(cfg.rotor) + cfg.radiated_power) * T);
        slots.push_back({l + 1, tv});
    }
    detail::add_energy_block(b, sp, slots, coef, t_ref, s_var, T, cfg);
    detail::normalize_objective(b, sp);
    sp.program = std::move(b.p);
    sp.reference = std::move(b.ref);
    return sp;
}

// ---------------------------------------------------------------------------
// PD

/// x^2 = sqrt(t^4 + delta^4/(4 v0^4)) - delta^2/(2 v0^2), written without cancellation.
inline double induced_slack_sq(double t, double delta, double v0) {
    const double a = delta * delta / (2.0 * v0 * v0);
    const double t2 = t * t;
    return t2 * t2 / (std::sqrt(t2 * t2 + a * a) + a);
}

inline ScaSubproblem build_pd_subproblem(const Trajectory& traj, const PhasePlan& plan, const ScenarioConfig& cfg,
                                         const ScaOptions& opts = {}) {
    if (traj.protocol != Protocol::PD) throw ScaError("build_pd_subproblem: not a PD trajectory");
    check_endpoints(traj, cfg);
    if (traj.durations.size() != traj.num_segments()) throw ScaError("PD trajectory needs one duration per segment");
    for (double t : traj.durations)
        if (!(t >= opts.t_floor)) throw ScaError("PD durations must be >= t_floor");

    ScaSubproblem sp;
    sp.protocol = Protocol::PD;
    const auto coef = detail::all_coefficients(traj, plan, cfg);
    std::vector<double> t_ref = traj.durations;
    sp.reference_repair = detail::repair_durations(t_ref, detail::energy_rates(coef, cfg));
    sp.reference_traj = traj;
    sp.reference_traj.durations = t_ref;

    const RotorParams& rp = cfg.rotor;
    const double v0 = rp.mean_induced_velocity;
    const double dmax = cfg.max_segment_length * (1.0 - opts.bound_margin);
    const double vmax = cfg.uav_max_speed * (1.0 - opts.bound_margin);
    for (std::size_t l = 0; l < t_ref.size(); ++l) {
        const double d = sp.reference_traj.segment_length(l);
        if (d > cfg.max_segment_length * (1.0 + 1e-6) || d > cfg.uav_max_speed * t_ref[l] * (1.0 + 1e-6))
            throw ScaError("PD iterate violates a segment bound");
    }

    detail::Builder b;
    const std::size_t half = b.var("aux:half", 0.5);
    b.p.add_eq({{half, 1.0}}, 0.5, "half");
    const auto s_var = detail::add_displacements(b, sp, half);
    detail::add_segment_norms(b, sp);
    const auto& wp = sp.reference_traj.waypoints;

    const double drag = rp.fuselage_drag_ratio * rp.air_density * rp.rotor_solidity * rp.rotor_disc_area;
    // time-like quantities are carried in units of T, their reciprocals in units of 1/T
    const double T = detail::mean_positive(t_ref);
    sp.time_unit = T;
    const double cv = 1.0 / (v0 * v0 * T * T);
    std::vector<detail::Slot> slots;
    for (std::size_t l = 0; l < t_ref.size(); ++l) {
        const double tr = t_ref[l] / T;
        const PlanarPoint seg = wp[l + 1] - wp[l];
        const double dr = std::abs(seg);
        const std::size_t dl = sp.delta[l];

        const std::size_t t = b.var(detail::idx("t", l), tr);
        sp.t.push_back(t);
        slots.push_back({l + 1, t});
        b.p.add_cost(t, (cfg.radiated_power + rp.p0_hover_blade_power) * T);

        const std::size_t tf = b.nonneg(detail::idx("aux:t_floor_slack", l), tr - opts.t_floor / T);
        b.p.add_eq({{t, 1.0}, {tf, -1.0}}, opts.t_floor / T, detail::idx("t_floor", l));
        // bounds never cut off the reference itself
        const double len_l = std::max(dmax, dr);
        const double spd_l = std::max(vmax * T, dr / tr);
        const std::size_t sl = b.nonneg(detail::idx("aux:len_slack", l), len_l - dr);
        b.p.add_eq({{dl, 1.0}, {sl, 1.0}}, len_l, detail::idx("len_max", l));
        const std::size_t sv = b.nonneg(detail::idx("aux:speed_slack", l), spd_l * tr - dr);
        b.p.add_eq({{t, spd_l}, {dl, -1.0}, {sv, -1.0}}, 0.0, detail::idx("speed_max", l));

        // blade: 3 P0 delta^2 / (U^2 t), p >= delta^2 / (2t)
        const std::size_t p = b.var(detail::idx("aux:blade", l), dr * dr / (2.0 * tr));
        b.p.add_rsoc({t, p, dl});
        b.p.add_cost(p, 6.0 * rp.p0_hover_blade_power / (rp.tip_speed * rp.tip_speed) / T);

        // induced: t^4 / x^2 <= 2 x_n x - x_n^2 + (2 d_n.seg - |d_n|^2) / v0^2
        const double xr = std::sqrt(induced_slack_sq(tr, dr, v0 * T));
        const std::size_t x = b.var(detail::idx("x", l), xr);
        b.p.add_cost(x, rp.p_induced_hover * T);
        const double s1r = tr * tr / (2.0 * xr);
        const std::size_t s1 = b.var(detail::idx("aux:induced_s", l), s1r);
        b.p.add_rsoc({s1, x, t});
        const std::size_t r1 = b.var(detail::idx("aux:induced_r", l), s1r * s1r);
        b.p.add_rsoc({half, r1, s1});
        {
            std::vector<ConeProgram::Term> row{{r1, 4.0}, {x, -2.0 * xr}};
            auto add_dq = [&](std::size_t i, double sign) {
                if (sp.dq_x[i] < 0) return;
                row.push_back({static_cast<std::size_t>(sp.dq_x[i]), -sign * 2.0 * cv * seg.real()});
                row.push_back({static_cast<std::size_t>(sp.dq_y[i]), -sign * 2.0 * cv * seg.imag()});
            };
            add_dq(l + 1, 1.0);
            add_dq(l, -1.0);
            b.p.add_eq(std::move(row), -xr * xr + dr * dr * cv, detail::idx("induced", l));
        }

        // parasitic: delta <= dbar, dbar^4 / t^2 <= 2 z_n z - z_n^2, w >= z^2 / dbar
        const double dbr = std::max(dr, opts.delta_floor);
        const std::size_t dbar = b.var(detail::idx("delta_bar", l), dbr);
        const std::size_t gap = b.nonneg(detail::idx("aux:delta_bar_slack", l), dbr - dr);
        b.p.add_eq({{dbar, 1.0}, {dl, -1.0}, {gap, -1.0}}, 0.0, detail::idx("delta_bar", l));
        const double zr = dbr * dbr / tr;
        const double p2r = dbr * dbr / (2.0 * tr);
        const std::size_t p2 = b.var(detail::idx("aux:parasite_p", l), p2r);
        b.p.add_rsoc({p2, t, dbar});
        const std::size_t r2 = b.var(detail::idx("aux:parasite_r", l), p2r * p2r);
        b.p.add_rsoc({half, r2, p2});
        const std::size_t z = b.var(detail::idx("z", l), zr);
        b.p.add_eq({{r2, 4.0}, {z, -2.0 * zr}}, -zr * zr, detail::idx("parasite", l));
        const std::size_t w = b.var(detail::idx("w_half", l), zr * zr / (2.0 * dbr));
        b.p.add_rsoc({w, dbar, z});
        b.p.add_cost(w, drag / (T * T));
    }
    detail::add_energy_block(b, sp, slots, coef, t_ref, s_var, T, cfg);
    detail::normalize_objective(b, sp);
    sp.program = std::move(b.p);
    sp.reference = std::move(b.ref);
    return sp;
}

inline ScaSubproblem build_subproblem(const Trajectory& traj, const PhasePlan& plan, const ScenarioConfig& cfg,
                                      const ScaOptions& opts = {}) {
    return traj.protocol == Protocol::FHB ? build_fhb_subproblem(traj, plan, cfg, opts)
                                          : build_pd_subproblem(traj, plan, cfg, opts);
}

/// Reads waypoints and durations back. PD durations are floored at t_floor and
/// raised where needed so the speed bound holds on the realized segment lengths.
inline Trajectory extract(const ScaSubproblem& sp, const ConeSolution& sol, const ScenarioConfig& cfg,
                          const ScaOptions& opts = {}) {
    if (!usable(sol.status))
        throw ScaError(std::string("subproblem not solved: ") + to_string(sol.status));
    if (sol.x.size() != sp.program.num_vars) throw ScaError("solution size mismatch");
    Trajectory out = sp.reference_traj;
    for (std::size_t i = 0; i < out.waypoints.size(); ++i) {
        if (sp.dq_x[i] < 0) continue;
        out.waypoints[i] += PlanarPoint(sol.x[static_cast<std::size_t>(sp.dq_x[i])],
                                        sol.x[static_cast<std::size_t>(sp.dq_y[i])]);
    }
    for (std::size_t l = 0; l < sp.t.size(); ++l) {
        double t = sol.x[sp.t[l]] * sp.time_unit;
        if (sp.protocol == Protocol::FHB) {
            out.durations[l] = std::max(t, 0.0);
        } else {
            t = std::max(t, opts.t_floor);
            t = std::max(t, out.segment_length(l) / cfg.uav_max_speed);
            out.durations[l] = t;
        }
    }
    if (sp.protocol == Protocol::PD)
        for (std::size_t l = 0; l < out.num_segments(); ++l)
            if (out.segment_length(l) > cfg.max_segment_length * (1.0 + 1e-6))
                throw ScaError("extracted segment exceeds the maximum length");
    return out;
}

}  // namespace uavris

#endif  // UAVRIS_SCA_HPP
