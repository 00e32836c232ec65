#ifndef UAVRIS_ORCHESTRATE_HPP
#define UAVRIS_ORCHESTRATE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cone_solver.hpp"
#include "phase_opt.hpp"
#include "power.hpp"
#include "sca.hpp"
#include "scenario.hpp"

namespace uavris {

enum class MuSchedule {
    Capped,   // mu <- min(mu^iota, mu_max)
    Literal,  // mu <- max(mu^iota, mu_max), jumps to the cap
};

struct SolverOptions {
    int n_max = 60;
    double mm_eps = 1e-6;
    int mm_rmax = 10;
    double mu0 = 100.0;
    double mu_max = 1000.0;
    double mu_growth = 1.07;
    double cone_tol = 1e-8;
    int cone_max_iter = 200;
    double t_floor = 1e-6;
    double outer_rel_stop = 1e-4;
    int stop_window = 5;
    int min_iters = 8;
    MuSchedule mu_schedule = MuSchedule::Capped;
    // surrogate checks on every outer iteration
    double reference_tol = 1e-9;
    double descent_tol = 1e-7;
};

inline void validate_options(const SolverOptions& o) {
    if (o.n_max < 1 || o.mm_rmax < 1 || o.cone_max_iter < 1 || o.stop_window < 1 || o.min_iters < 0)
        throw std::invalid_argument("solver options: iteration counts must be positive");
    if (!(o.mm_eps > 0 && o.mu0 > 0 && o.mu_max > 0 && o.mu_growth > 0 && o.cone_tol > 0 && o.t_floor > 0 &&
          o.outer_rel_stop > 0))
        throw std::invalid_argument("solver options: tolerances and smoothing factors must be > 0");
    if (o.mu0 > o.mu_max) throw std::invalid_argument("solver options: mu0 > mu_max");
}

inline double next_mu(double mu, const SolverOptions& o) {
    const double grown = std::pow(mu, o.mu_growth);
    return o.mu_schedule == MuSchedule::Capped ? std::min(grown, o.mu_max) : std::max(grown, o.mu_max);
}

struct IterationRecord {
    int n = 0;
    double energy = 0.0;  // exact, after repair
    double min_hk = 0.0;
    double mu = 0.0;
    ConeStatus status = ConeStatus::Optimal;
    int cone_iterations = 0;
    int mm_iterations = 0;
    double surrogate_reference = 0.0;  // normalized objective at the reference point
    double surrogate_solution = 0.0;
    double reference_residual = 0.0;  // max of primal residual and cone violation at the reference
    double solution_residual = 0.0;
    double reference_repair = 1.0;  // duration scaling applied before building the subproblem
    double repair = 1.0;
    double seconds = 0.0;
};

struct RunReport {
    std::string label;
    Protocol protocol = Protocol::FHB;
    int ris_elements = 0;
    std::vector<IterationRecord> iterations;
    Trajectory trajectory;
    PhasePlan plan;
    std::vector<double> harvested;  // per sensor [J]
    double repair_factor = 1.0;
    double energy = 0.0;
    bool ok = false;
    std::string message;
    double wall_seconds = 0.0;
    // surrogate checks over all iterations
    bool reference_feasible = true;
    bool surrogate_descent = true;
    // quantized runs
    int bits = 0;
    double continuous_energy = 0.0;

    bool converged(double rel, int window) const {
        if (static_cast<int>(iterations.size()) < window + 1) return false;
        for (std::size_t i = iterations.size() - window; i < iterations.size(); ++i) {
            const double a = iterations[i - 1].energy, b = iterations[i].energy;
            if (std::abs(b - a) / a >= rel) return false;
        }
        return true;
    }
};

// ---------------------------------------------------------------------------
// initialization

/// Sensors sorted along the sweep from start to finish.
inline std::vector<PlanarPoint> visiting_order(const ScenarioConfig& cfg) {
    std::vector<PlanarPoint> pts = cfg.sensors;
    const PlanarPoint dir = cfg.finish - cfg.start;
    std::stable_sort(pts.begin(), pts.end(), [&](PlanarPoint a, PlanarPoint b) {
        return (std::conj(dir) * (a - cfg.start)).real() < (std::conj(dir) * (b - cfg.start)).real();
    });
    return pts;
}

inline std::pair<Trajectory, PhasePlan> init_fhb(const ScenarioConfig& cfg) {
    Trajectory tr;
    tr.protocol = Protocol::FHB;
    tr.waypoints.push_back(cfg.start);
    for (PlanarPoint p : visiting_order(cfg)) tr.waypoints.push_back(p);
    tr.waypoints.push_back(cfg.finish);
    const std::size_t hovers = tr.waypoints.size() - 2;
    const double e_max = *std::max_element(cfg.sensor_energy_req.begin(), cfg.sensor_energy_req.end());
    const double beta_above = cfg.channel.beta0_ref_gain / std::pow(cfg.uav_height, cfg.channel.pathloss_direct);
    const double t = e_max * cfg.num_sensors() /
                     (cfg.conversion_efficiency * cfg.radiated_power * beta_above * static_cast<double>(hovers));
    tr.durations.assign(hovers, t);
    return {tr, PhasePlan::zeros(hovers, cfg.ris_elements)};
}

inline std::pair<Trajectory, PhasePlan> init_pd(const ScenarioConfig& cfg) {
    const Trajectory base = init_fhb(cfg).first;
    const double piece = cfg.max_segment_length / 1.8;
    const double v = mr_speed(cfg.rotor);
    Trajectory tr;
    tr.protocol = Protocol::PD;
    tr.waypoints.push_back(base.waypoints.front());
    for (std::size_t i = 0; i + 1 < base.waypoints.size(); ++i) {
        const PlanarPoint a = base.waypoints[i], b = base.waypoints[i + 1];
        const double len = std::abs(b - a);
        const int parts = std::max(1, static_cast<int>(std::ceil(len / piece - 1e-12)));
        for (int j = 1; j <= parts; ++j) {
            tr.waypoints.push_back(j == parts ? b : a + (b - a) * (static_cast<double>(j) / parts));
            tr.durations.push_back(len / parts / v);
        }
    }
    return {tr, PhasePlan::zeros(tr.durations.size(), cfg.ris_elements)};
}

inline std::pair<Trajectory, PhasePlan> init_protocol(const ScenarioConfig& cfg, Protocol p) {
    return p == Protocol::FHB ? init_fhb(cfg) : init_pd(cfg);
}

// ---------------------------------------------------------------------------
// exact-constraint repair and quantization

struct RepairResult {
    Trajectory trajectory;
    double factor = 1.0;
};

/// Smallest common scaling rho >= 1 of the radiating durations restoring every requirement.
inline RepairResult feasibility_repair(const Trajectory& traj, const PhasePlan& plan, const ScenarioConfig& cfg) {
    const auto h = harvested_energy(traj, plan, cfg);
    double rho = 1.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        if (!(h[k] > 0.0)) throw ScaError("feasibility_repair: sensor " + std::to_string(k + 1) + " receives nothing");
        rho = std::max(rho, cfg.sensor_energy_req[k] / h[k]);
    }
    if (rho <= 1.0 + 1e-12) rho = 1.0;
    RepairResult r{traj, rho};
    if (rho > 1.0 + 1e-12)
        for (double& t : r.trajectory.durations) t *= rho;
    return r;
}

inline double quantize_angle(double theta, int bits) {
    if (bits < 1) throw std::invalid_argument("quantize: bits must be >= 1");
    const double levels = std::ldexp(1.0, bits);
    const double step = 2.0 * std::numbers::pi / levels;
    const double x = wrap_angle(theta) / step;
    double f = std::floor(x);
    if (x - f > 0.5) f += 1.0;  // ties stay down
    if (f >= levels) f -= levels;
    return f * step;
}

inline PhasePlan quantize_plan(const PhasePlan& plan, int bits) {
    PhasePlan out = plan;
    for (auto& th : out.theta)
        for (Eigen::Index i = 0; i < th.size(); ++i) th[i] = quantize_angle(th[i], bits);
    return out;
}

inline std::vector<double> charge_ratios(const Trajectory& traj, const PhasePlan& plan, const ScenarioConfig& cfg) {
    auto h = harvested_energy(traj, plan, cfg);
    for (std::size_t k = 0; k < h.size(); ++k) h[k] /= cfg.sensor_energy_req[k];
    return h;
}

// ---------------------------------------------------------------------------
// SCA-MM loop

namespace detail {

inline RunReport sca_mm_loop(const ScenarioConfig& cfg, const SolverOptions& opts, Trajectory traj, PhasePlan plan,
                             bool optimize_phase_stage) {
    validate_scenario(cfg);
    validate_options(opts);
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    RunReport rep;
    rep.protocol = traj.protocol;
    rep.ris_elements = cfg.ris_elements;
    ScaOptions sopt;
    sopt.t_floor = opts.t_floor;
    MmOptions mopt;
    mopt.eps = opts.mm_eps;
    mopt.r_max = opts.mm_rmax;
    ConeSolverOptions copt;
    double mu = opts.mu0;

    // frozen phases: the surrogate cannot re-align the cascade after a move, so keep the cheapest iterate
    const bool keep_best = !optimize_phase_stage;
    Trajectory best;
    double best_energy = 0.0, best_factor = 1.0;
    if (keep_best) {
        const RepairResult fix = feasibility_repair(traj, plan, cfg);
        best = traj = fix.trajectory;
        best_factor = fix.factor;
        best_energy = total_energy(traj, cfg);
    }

    auto finalize = [&]() {
        if (keep_best) {
            traj = best;
            rep.repair_factor = best_factor;
        }
        rep.trajectory = traj;
        rep.plan = plan;
        rep.harvested = harvested_energy(traj, plan, cfg);
        rep.energy = total_energy(traj, cfg);
        rep.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
        return rep;
    };

    try {
        for (int n = 1; n <= opts.n_max; ++n) {
            const auto t0 = clock::now();
            IterationRecord rec;
            rec.n = n;
            rec.mu = mu;

            ScaSubproblem sp = build_subproblem(traj, plan, cfg, sopt);
            const ResidualReport rr = check_residuals(sp.program, sp.reference);
            rec.reference_residual = std::max(rr.primal_residual, rr.cone_violation);
            rec.surrogate_reference = sp.program.objective_value(sp.reference);
            rec.reference_repair = sp.reference_repair;
            if (rec.reference_residual > opts.reference_tol) rep.reference_feasible = false;

            const ConeSolution sol = solve(sp.program, opts.cone_tol, opts.cone_max_iter, copt);
            rec.status = sol.status;
            rec.cone_iterations = sol.iterations;
            if (!usable(sol.status)) {
                rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
                rep.iterations.push_back(rec);
                rep.ok = false;
                rep.message = std::string("cone solver failed at iteration ") + std::to_string(n) + ": " +
                              to_string(sol.status);
                return finalize();
            }
            rec.surrogate_solution = sol.objective_value;
            rec.solution_residual = std::max(sol.primal_residual, sol.cone_violation);
            if (rec.surrogate_solution > rec.surrogate_reference + opts.descent_tol) rep.surrogate_descent = false;

            traj = extract(sp, sol, cfg, sopt);
            if (optimize_phase_stage && cfg.ris_elements > 0) {
                const PhaseResult pr = optimize_phases(traj, cfg, plan, mu, mopt);
                plan = pr.plan;
                rec.mm_iterations = static_cast<int>(pr.report.iterates.size()) - 1;
            }
            const RepairResult fix = feasibility_repair(traj, plan, cfg);
            traj = fix.trajectory;
            rec.repair = fix.factor;
            const auto ratios = charge_ratios(traj, plan, cfg);
            rec.min_hk = *std::min_element(ratios.begin(), ratios.end());
            rec.energy = total_energy(traj, cfg);
            rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
            rep.iterations.push_back(rec);
            rep.repair_factor = fix.factor;
            if (keep_best && rec.energy < best_energy) {
                best = traj;
                best_energy = rec.energy;
                best_factor = fix.factor;
            }

            mu = next_mu(mu, opts);
            if (n >= opts.min_iters && rec.min_hk >= 1.0 - 1e-9 &&
                rep.converged(opts.outer_rel_stop, opts.stop_window))
                break;
        }
        rep.ok = true;
    } catch (const std::exception& e) {
        rep.ok = false;
        rep.message = e.what();
    }
    return finalize();
}

}  // namespace detail

inline RunReport run_protocol(const ScenarioConfig& cfg, const SolverOptions& opts, Protocol p) {
    auto [traj, plan] = init_protocol(cfg, p);
    RunReport r = detail::sca_mm_loop(cfg, opts, std::move(traj), std::move(plan), true);
    r.label = std::string(protocol_name(p)) + "-M" + std::to_string(cfg.ris_elements);
    return r;
}

inline RunReport run_fhb(const ScenarioConfig& cfg, const SolverOptions& opts = {}) {
    return run_protocol(cfg, opts, Protocol::FHB);
}

inline RunReport run_pd(const ScenarioConfig& cfg, const SolverOptions& opts = {}) {
    return run_protocol(cfg, opts, Protocol::PD);
}

inline RunReport run_noris(const ScenarioConfig& cfg, const SolverOptions& opts, Protocol p) {
    ScenarioConfig c = cfg;
    c.ris_elements = 0;
    RunReport r = run_protocol(c, opts, p);
    r.label = std::string(protocol_name(p)) + "-noRIS";
    return r;
}

/// Quantizes the final plan of a continuous run and re-optimizes trajectory and times with phases frozen.
/// Returns the cheapest repaired iterate, the quantized starting point included.
inline RunReport run_quantized(const ScenarioConfig& cfg, const SolverOptions& opts, int bits,
                               const RunReport& continuous) {
    if (!continuous.ok) throw std::invalid_argument("run_quantized: continuous run did not complete");
    PhasePlan q = quantize_plan(continuous.plan, bits);
    RunReport r = detail::sca_mm_loop(cfg, opts, continuous.trajectory, std::move(q), false);
    r.label = std::string(protocol_name(continuous.protocol)) + "-M" + std::to_string(cfg.ris_elements) + "-" +
              std::to_string(bits) + "bit";
    r.bits = bits;
    r.continuous_energy = continuous.energy;
    return r;
}

inline RunReport run_quantized(const ScenarioConfig& cfg, const SolverOptions& opts, int bits, Protocol p) {
    return run_quantized(cfg, opts, bits, run_protocol(cfg, opts, p));
}

}  // namespace uavris

#endif  // UAVRIS_ORCHESTRATE_HPP
