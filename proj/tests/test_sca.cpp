#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <regex>

#include "uavris/orchestrate.hpp"
#include "uavris/sca.hpp"

using namespace uavris;

namespace {

ScenarioConfig pd_profile() {
    ScenarioConfig cfg = default_scenario();
    cfg.max_segment_length = 2.0;
    return cfg;
}

double max_residual(const ConeProgram& p, const std::vector<double>& x) {
    const ResidualReport r = check_residuals(p, x);
    return std::max(r.primal_residual, r.cone_violation);
}

// FHB iterate: init waypoints jittered, hover times scaled, random phases.
std::pair<Trajectory, PhasePlan> jittered_fhb(const ScenarioConfig& cfg, std::mt19937_64& rng) {
    auto [traj, plan] = init_fhb(cfg);
    std::normal_distribution<double> nd(0.0, 3.0);
    std::uniform_real_distribution<double> us(0.3, 3.0), ua(0.0, 6.28);
    for (std::size_t i = 1; i + 1 < traj.waypoints.size(); ++i) traj.waypoints[i] += PlanarPoint(nd(rng), nd(rng));
    for (double& t : traj.durations) t *= us(rng);
    for (auto& th : plan.theta)
        for (int m = 0; m < th.size(); ++m) th[m] = ua(rng);
    return {traj, plan};
}

ConeProgram nested_induced(double t, double x, double a) {
    // t^4 / x^2 <= a  as  t^2 <= 2 s x,  s^2 <= 2 (1/2) r,  4 r <= a
    ConeProgram p;
    const auto vt = p.add_var("t"), vx = p.add_var("x"), s = p.add_var("s"), half = p.add_var("half"),
               r = p.add_var("r"), slack = p.add_nonneg_var("slack");
    p.add_eq({{vt, 1.0}}, t);
    p.add_eq({{vx, 1.0}}, x);
    p.add_eq({{half, 1.0}}, 0.5);
    p.add_rsoc({s, vx, vt});
    p.add_rsoc({half, r, s});
    p.add_eq({{r, 4.0}, {slack, 1.0}}, a);
    return p;
}

ConeProgram nested_parasitic(double dbar, double t, double b) {
    // dbar^4 / t^2 <= b  as  dbar^2 <= 2 p t,  p^2 <= r,  4 r <= b
    ConeProgram p;
    const auto vd = p.add_var("dbar"), vt = p.add_var("t"), pp = p.add_var("p"), half = p.add_var("half"),
               r = p.add_var("r"), slack = p.add_nonneg_var("slack");
    p.add_eq({{vd, 1.0}}, dbar);
    p.add_eq({{vt, 1.0}}, t);
    p.add_eq({{half, 1.0}}, 0.5);
    p.add_rsoc({pp, vt, vd});
    p.add_rsoc({half, r, pp});
    p.add_eq({{r, 4.0}, {slack, 1.0}}, b);
    return p;
}

}  // namespace

TEST(Sca, TaylorBoundsAreLowerBounds) {
    const ScenarioConfig cfg = default_scenario();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ur(0.0, 50.0), ua(0.0, 6.283185307179586), uc(-40.0, 40.0);
    for (int i = 0; i < 1000; ++i) {
        const PlanarPoint qn(uc(rng), uc(rng));
        const PlanarPoint q = qn + std::polar(ur(rng), ua(rng));
        const std::size_t k = i % cfg.num_sensors();
        const LargeScaleGains b = large_scale_gains(link_geometry(q, k, cfg), cfg);
        EXPECT_LE(taylor_beta_d(q, qn, k, cfg), b.beta_d * (1 + 1e-12));
        EXPECT_LE(taylor_beta_t(q, qn, cfg), b.beta_t * (1 + 1e-12));
        const LargeScaleGains bn = large_scale_gains(link_geometry(qn, k, cfg), cfg);
        EXPECT_NEAR(taylor_beta_d(qn, qn, k, cfg), bn.beta_d, 1e-15);
        EXPECT_NEAR(taylor_beta_t(qn, qn, cfg), bn.beta_t, 1e-15);
    }
}

TEST(Sca, GainCurvatureIsUpperBound) {
    const ScenarioConfig cfg = default_scenario();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> uc(-40.0, 40.0);
    const double h = cfg.uav_height, alpha = cfg.channel.pathloss_direct, b0 = cfg.channel.beta0_ref_gain;
    const PlanarPoint anchor = cfg.sensors[2];
    for (int i = 0; i < 1000; ++i) {
        const PlanarPoint qn(uc(rng), uc(rng)), q(uc(rng), uc(rng));
        const double d0 = std::norm(qn - anchor) + h * h;
        const double bn = b0 / std::pow(d0, alpha / 2);
        const double curv = gain_curvature(bn, d0, h, alpha);
        const PlanarPoint grad = -alpha * bn / d0 * (qn - anchor);
        const PlanarPoint dq = q - qn;
        const double upper = bn + grad.real() * dq.real() + grad.imag() * dq.imag() + curv / 2 * std::norm(dq);
        const double actual = b0 / std::pow(std::norm(q - anchor) + h * h, alpha / 2);
        EXPECT_GE(upper, actual * (1 - 1e-12));
    }
}

TEST(Sca, FhbReferenceFeasible) {
    const ScenarioConfig cfg = default_scenario();
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        auto [traj, plan] = i == 0 ? init_fhb(cfg) : jittered_fhb(cfg, rng);
        const ScaSubproblem sp = build_fhb_subproblem(traj, plan, cfg);
        ASSERT_TRUE(validate(sp.program).empty());
        EXPECT_LE(max_residual(sp.program, sp.reference), 1e-9);
    }
}

TEST(Sca, PdReferenceFeasibleAndTight) {
    const ScenarioConfig cfg = pd_profile();
    auto [traj, plan] = init_pd(cfg);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> us(0.5, 2.0), ua(0.0, 6.28);
    for (int i = 0; i < 3; ++i) {
        if (i > 0) {
            for (double& t : traj.durations) t *= us(rng);
            for (auto& th : plan.theta)
                for (int m = 0; m < th.size(); ++m) th[m] = ua(rng);
        }
        const ScaSubproblem sp = build_pd_subproblem(traj, plan, cfg);
        ASSERT_TRUE(validate(sp.program).empty());
        EXPECT_LE(max_residual(sp.program, sp.reference), 1e-9);
        const double e_hat = sp.program.objective_value(sp.reference) * sp.objective_scale;
        EXPECT_NEAR(e_hat, pd_total_energy(sp.reference_traj, cfg), 1e-9 * e_hat);
    }
}

TEST(Sca, FhbObjectiveTightAtReference) {
    const ScenarioConfig cfg = default_scenario();
    auto [traj, plan] = init_fhb(cfg);
    const ScaSubproblem sp = build_fhb_subproblem(traj, plan, cfg);
    const double e_hat = sp.program.objective_value(sp.reference) * sp.objective_scale;
    EXPECT_NEAR(e_hat, fhb_total_energy(sp.reference_traj, cfg), 1e-9 * e_hat);
}

TEST(Sca, FhbSolveDescendsAndPinsEndpoints) {
    const ScenarioConfig cfg = default_scenario();
    std::mt19937_64 rng(5);
    for (int i = 0; i < 5; ++i) {
        auto [traj, plan] = i == 0 ? init_fhb(cfg) : jittered_fhb(cfg, rng);
        const ScaSubproblem sp = build_fhb_subproblem(traj, plan, cfg);
        const ConeSolution sol = solve(sp.program);
        ASSERT_TRUE(usable(sol.status)) << to_string(sol.status);
        EXPECT_LE(sol.objective_value, sp.program.objective_value(sp.reference) + 1e-9);
        const Trajectory out = extract(sp, sol, cfg);
        EXPECT_EQ(out.waypoints.front(), cfg.start);
        EXPECT_EQ(out.waypoints.back(), cfg.finish);
        for (double t : out.durations) EXPECT_GE(t, 0.0);
    }
}

TEST(Sca, PdSolveRespectsSegmentBounds) {
    const ScenarioConfig cfg = pd_profile();
    auto [traj, plan] = init_pd(cfg);
    const ScaSubproblem sp = build_pd_subproblem(traj, plan, cfg);
    const ConeSolution sol = solve(sp.program);
    ASSERT_TRUE(usable(sol.status)) << to_string(sol.status);
    EXPECT_LE(sol.objective_value, sp.program.objective_value(sp.reference) + 1e-9);
    const Trajectory out = extract(sp, sol, cfg);
    EXPECT_EQ(out.waypoints.front(), cfg.start);
    EXPECT_EQ(out.waypoints.back(), cfg.finish);
    for (std::size_t l = 0; l < out.num_segments(); ++l) {
        EXPECT_LE(out.segment_length(l), cfg.max_segment_length + 1e-6);
        EXPECT_GE(out.durations[l], 1e-6);
        EXPECT_LE(out.segment_length(l) / out.durations[l], cfg.uav_max_speed * (1 + 1e-9));
    }
}

TEST(Sca, OverProvisionedHoverShrinks) {
    ScenarioConfig cfg = default_scenario();
    cfg.sensors = {cfg.sensors[2]};
    cfg.sensor_energy_req = {2e-4};
    Trajectory traj;
    traj.protocol = Protocol::FHB;
    traj.waypoints = {cfg.start, cfg.sensors[0], cfg.finish};
    traj.durations = {1e4};
    const PhasePlan plan = PhasePlan::zeros(1, cfg.ris_elements);
    const ScaSubproblem sp = build_fhb_subproblem(traj, plan, cfg);
    const ConeSolution sol = solve(sp.program);
    ASSERT_TRUE(usable(sol.status));
    EXPECT_LT(extract(sp, sol, cfg).durations[0], 1e4);
}

TEST(Sca, VanishingRequirementGivesStraightLine) {
    ScenarioConfig cfg = default_scenario();
    for (double& e : cfg.sensor_energy_req) e = 1e-12;
    auto [traj, plan] = init_fhb(cfg);
    double energy = 0.0;
    for (int it = 0; it < 30; ++it) {
        const ScaSubproblem sp = build_fhb_subproblem(traj, plan, cfg);
        const ConeSolution sol = solve(sp.program);
        ASSERT_TRUE(usable(sol.status));
        traj = extract(sp, sol, cfg);
        energy = sol.objective_value * sp.objective_scale;
    }
    double hover = 0.0;
    for (double t : traj.durations) hover += t;
    EXPECT_LT(hover, 1e-3);
    const double v = mr_speed(cfg.rotor);
    const double straight = propulsion_power(v, cfg.rotor) * 70.0 / v;
    EXPECT_NEAR(energy, straight, 1e-4 * straight);
}

TEST(Sca, DegenerateIteratesRejected) {
    const ScenarioConfig cfg = default_scenario();
    auto [traj, plan] = init_fhb(cfg);
    for (double& t : traj.durations) t = 0.0;
    EXPECT_THROW(build_fhb_subproblem(traj, plan, cfg), ScaError);
    auto [pd, pplan] = init_pd(pd_profile());
    pd.durations[3] = 0.0;
    EXPECT_THROW(build_pd_subproblem(pd, pplan, pd_profile()), ScaError);
    EXPECT_THROW(build_fhb_subproblem(pd, pplan, pd_profile()), ScaError);
}

TEST(Sca, PinnedProgramExtractsReference) {
    for (Protocol proto : {Protocol::FHB, Protocol::PD}) {
        const ScenarioConfig cfg = proto == Protocol::FHB ? default_scenario() : pd_profile();
        auto [traj, plan] = init_protocol(cfg, proto);
        ScaSubproblem sp = build_subproblem(traj, plan, cfg);
        for (std::size_t i = 0; i < sp.dq_x.size(); ++i) {
            if (sp.dq_x[i] < 0) continue;
            sp.program.add_eq({{static_cast<std::size_t>(sp.dq_x[i]), 1.0}}, 0.0);
            sp.program.add_eq({{static_cast<std::size_t>(sp.dq_y[i]), 1.0}}, 0.0);
        }
        for (std::size_t v : sp.t) sp.program.add_eq({{v, 1.0}}, sp.reference[v]);
        const ConeSolution sol = solve(sp.program);
        ASSERT_TRUE(usable(sol.status)) << to_string(sol.status);
        const Trajectory out = extract(sp, sol, cfg);
        ASSERT_EQ(out.waypoints.size(), sp.reference_traj.waypoints.size());
        for (std::size_t i = 0; i < out.waypoints.size(); ++i)
            EXPECT_NEAR(std::abs(out.waypoints[i] - sp.reference_traj.waypoints[i]), 0.0, 1e-6);
        for (std::size_t l = 0; l < out.durations.size(); ++l)
            EXPECT_NEAR(out.durations[l], sp.reference_traj.durations[l], 1e-6 * sp.time_unit);
    }
}

TEST(Sca, ExtractRejectsFailedSolve) {
    const ScenarioConfig cfg = default_scenario();
    auto [traj, plan] = init_fhb(cfg);
    const ScaSubproblem sp = build_fhb_subproblem(traj, plan, cfg);
    ConeSolution bad;
    bad.status = ConeStatus::Infeasible;
    EXPECT_THROW(extract(sp, bad, cfg), ScaError);
}

TEST(Sca, EveryVariableNamed) {
    const std::regex known(
        R"(^(aux:.+|dq_[xy]\[\d+\]|delta\[\d+\]|delta_bar\[\d+\]|t\[\d+\]|x\[\d+\]|z\[\d+\]|w_half\[\d+\]|y_t\[\d+\]|y_[da]\[\d+,\d+\])$)");
    for (Protocol proto : {Protocol::FHB, Protocol::PD}) {
        const ScenarioConfig cfg = proto == Protocol::FHB ? default_scenario() : pd_profile();
        auto [traj, plan] = init_protocol(cfg, proto);
        const ScaSubproblem sp = build_subproblem(traj, plan, cfg);
        ASSERT_EQ(sp.program.var_names.size(), sp.program.num_vars);
        for (const auto& n : sp.program.var_names) EXPECT_TRUE(std::regex_match(n, known)) << n;
    }
}

TEST(Sca, NoRisProgramHasNoCascadeVariables) {
    ScenarioConfig cfg = default_scenario();
    cfg.ris_elements = 0;
    auto [traj, plan] = init_fhb(cfg);
    const ScaSubproblem sp = build_fhb_subproblem(traj, plan, cfg);
    for (const auto& n : sp.program.var_names) {
        EXPECT_EQ(n.rfind("y_t", 0), std::string::npos);
        EXPECT_EQ(n.rfind("y_a", 0), std::string::npos);
    }
    EXPECT_LE(max_residual(sp.program, sp.reference), 1e-9);
}

TEST(Sca, NestedConeLoweringEquivalence) {
    const double grid[] = {0.1, 0.35, 0.8, 1.7, 3.2};
    int checked = 0;
    for (double u : grid)
        for (double v : grid)
            for (double a : {0.01, 0.2, 1.0, 5.0, 40.0, 300.0}) {
                const double lhs = std::pow(u, 4) / (v * v);
                if (std::abs(lhs - a) < 1e-3 * a) continue;
                const bool holds = lhs <= a;
                const ConeStatus s1 = solve(nested_induced(u, v, a)).status;
                const ConeStatus s2 = solve(nested_parasitic(u, v, a)).status;
                EXPECT_EQ(usable(s1), holds) << u << ' ' << v << ' ' << a << ' ' << to_string(s1);
                EXPECT_EQ(usable(s2), holds) << u << ' ' << v << ' ' << a << ' ' << to_string(s2);
                ++checked;
            }
    EXPECT_GT(checked, 100);
}

TEST(Sca, InducedSlackMatchesDefinition) {
    const double v0 = 4.03;
    for (double t : {0.01, 0.1, 1.0})
        for (double d : {0.0, 0.2, 0.5, 2.0}) {
            const double a = d * d / (2 * v0 * v0);
            const double direct = std::sqrt(std::pow(t, 4) + a * a) - a;
            EXPECT_NEAR(induced_slack_sq(t, d, v0), direct, 1e-8 * direct + 1e-20);
        }
}
