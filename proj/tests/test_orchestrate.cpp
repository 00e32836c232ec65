#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "uavris/orchestrate.hpp"

using namespace uavris;

namespace {

constexpr double kPi = std::numbers::pi;

double brute_quantize(double theta, int bits) {
    const int levels = 1 << bits;
    const double step = 2 * kPi / levels;
    double best = 0.0, best_d = 1e300;
    for (int i = 0; i < levels; ++i) {
        double d = std::fmod(std::abs(theta - i * step), 2 * kPi);
        d = std::min(d, 2 * kPi - d);
        if (d < best_d - 1e-12) best_d = d, best = i * step;
    }
    return best;
}

const RunReport& fhb_report(int m) {
    static std::map<int, RunReport> cache;
    auto it = cache.find(m);
    if (it == cache.end()) {
        ScenarioConfig cfg = default_scenario();
        cfg.ris_elements = m;
        it = cache.emplace(m, run_fhb(cfg)).first;
    }
    return it->second;
}

double mission_time(const Trajectory& t) { return std::accumulate(t.durations.begin(), t.durations.end(), 0.0); }

}  // namespace

TEST(Init, FhbLayout) {
    const ScenarioConfig cfg = default_scenario();
    auto [traj, plan] = init_fhb(cfg);
    EXPECT_EQ(traj.num_segments(), 6u);
    EXPECT_EQ(traj.durations.size(), 5u);
    EXPECT_EQ(traj.waypoints.front(), PlanarPoint(-35, 0));
    EXPECT_EQ(traj.waypoints.back(), PlanarPoint(35, 0));
    for (double t : traj.durations) EXPECT_GT(t, 0.0);
    for (const auto& th : plan.theta) EXPECT_EQ(th.cwiseAbs().maxCoeff(), 0.0);
    // sweep order from start to finish
    for (std::size_t i = 1; i + 2 < traj.waypoints.size(); ++i)
        EXPECT_LE(traj.waypoints[i].real(), traj.waypoints[i + 1].real());
}

TEST(Init, PdSubdivision) {
    const ScenarioConfig cfg = default_scenario();
    auto [traj, plan] = init_pd(cfg);
    EXPECT_EQ(traj.num_segments(), 362u);
    EXPECT_EQ(plan.theta.size(), 362u);
    const double v = mr_speed(cfg.rotor);
    for (std::size_t l = 0; l < traj.num_segments(); ++l) {
        EXPECT_LE(traj.segment_length(l), 0.5 / 1.8 + 1e-12);
        EXPECT_NEAR(traj.segment_length(l) / traj.durations[l], v, 1e-9);
    }
    for (const auto& th : plan.theta) EXPECT_EQ(th.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Quantize, NearestGridWithWrap) {
    EXPECT_DOUBLE_EQ(quantize_angle(0.7, 2), 0.0);
    EXPECT_DOUBLE_EQ(quantize_angle(0.9, 2), kPi / 2);
    EXPECT_DOUBLE_EQ(quantize_angle(kPi / 4, 2), 0.0);
    EXPECT_DOUBLE_EQ(quantize_angle(6.1, 2), 0.0);
    EXPECT_DOUBLE_EQ(quantize_angle(-0.2, 2), 0.0);
    EXPECT_DOUBLE_EQ(quantize_angle(3 * kPi / 4 + 0.01, 2), kPi);
    EXPECT_THROW(quantize_angle(1.0, 0), std::invalid_argument);
}

TEST(Quantize, MatchesBruteForce) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int bits : {1, 2, 3, 5})
        for (int i = 0; i < 2000; ++i) {
            const double th = u(rng);
            EXPECT_NEAR(quantize_angle(th, bits), brute_quantize(th, bits), 1e-12) << th << ' ' << bits;
        }
}

TEST(Quantize, PlanLevelsOnGrid) {
    PhasePlan p = PhasePlan::zeros(3, 4);
    p.theta[1] << 0.1, 1.7, 3.3, 5.0;
    const PhasePlan q = quantize_plan(p, 2);
    for (const auto& th : q.theta)
        for (int m = 0; m < th.size(); ++m) {
            const double r = th[m] / (kPi / 2);
            EXPECT_NEAR(r, std::round(r), 1e-12);
        }
}

TEST(Repair, FeasibleUnchanged) {
    const RunReport& r = fhb_report(8);
    ScenarioConfig cfg = default_scenario();
    cfg.ris_elements = 8;
    const RepairResult fix = feasibility_repair(r.trajectory, r.plan, cfg);
    EXPECT_EQ(fix.factor, 1.0);
    EXPECT_EQ(fix.trajectory.durations, r.trajectory.durations);
}

TEST(Repair, HalvedHoversRestoredByTwo) {
    ScenarioConfig cfg = default_scenario();
    cfg.ris_elements = 8;
    const RunReport& r = fhb_report(8);
    Trajectory half = r.trajectory;
    for (double& t : half.durations) t /= 2;
    const double before = *std::min_element(r.harvested.begin(), r.harvested.end()) /
                          cfg.sensor_energy_req[0];
    const RepairResult fix = feasibility_repair(half, r.plan, cfg);
    // the binding sensor sits exactly at its requirement, so halving needs rho = 2 / min ratio
    EXPECT_NEAR(fix.factor, 2.0 / before, 1e-9);
    const auto ratios = charge_ratios(fix.trajectory, r.plan, cfg);
    EXPECT_GE(*std::min_element(ratios.begin(), ratios.end()), 1.0 - 1e-12);
}

TEST(Repair, PdClosedForm) {
    ScenarioConfig cfg = default_scenario();
    cfg.max_segment_length = 2.0;
    auto [traj, plan] = init_pd(cfg);
    const auto h = harvested_energy(traj, plan, cfg);
    double rho = 1.0;
    for (std::size_t k = 0; k < h.size(); ++k) rho = std::max(rho, cfg.sensor_energy_req[k] / h[k]);
    const RepairResult fix = feasibility_repair(traj, plan, cfg);
    EXPECT_NEAR(fix.factor, rho, 1e-12 * rho);
    EXPECT_EQ(fix.trajectory.waypoints, traj.waypoints);
    for (std::size_t l = 0; l < traj.durations.size(); ++l)
        EXPECT_NEAR(fix.trajectory.durations[l], rho * traj.durations[l], 1e-12 * rho * traj.durations[l]);
    const auto after = charge_ratios(fix.trajectory, plan, cfg);
    EXPECT_NEAR(*std::min_element(after.begin(), after.end()), 1.0, 1e-9);
}

TEST(Repair, SilentSensorIsAnError) {
    ScenarioConfig cfg = default_scenario();
    auto [traj, plan] = init_fhb(cfg);
    for (double& t : traj.durations) t = 0.0;
    EXPECT_THROW(feasibility_repair(traj, plan, cfg), ScaError);
}

TEST(Schedule, CappedGrowth) {
    SolverOptions o;
    double mu = o.mu0;
    std::vector<double> seq;
    for (int i = 0; i < 40; ++i) seq.push_back(mu = next_mu(mu, o));
    EXPECT_NEAR(seq[0], std::pow(100.0, 1.07), 1e-9);
    for (std::size_t i = 1; i < seq.size(); ++i) EXPECT_GE(seq[i], seq[i - 1]);
    EXPECT_EQ(seq.back(), 1000.0);
    o.mu_schedule = MuSchedule::Literal;
    EXPECT_EQ(next_mu(100.0, o), 1000.0);
}

TEST(Schedule, OptionValidation) {
    SolverOptions o;
    EXPECT_NO_THROW(validate_options(o));
    o.mu0 = 2000;
    EXPECT_THROW(validate_options(o), std::invalid_argument);
    o = {};
    o.cone_tol = 0;
    EXPECT_THROW(validate_options(o), std::invalid_argument);
    o = {};
    o.n_max = 0;
    EXPECT_THROW(validate_options(o), std::invalid_argument);
}

TEST(Run, FhbFeasibleAndConverged) {
    ScenarioConfig cfg = default_scenario();
    cfg.ris_elements = 8;
    const RunReport& r = fhb_report(8);
    ASSERT_TRUE(r.ok) << r.message;
    EXPECT_LE(r.iterations.size(), 60u);
    EXPECT_TRUE(r.converged(1e-3, 5));
    EXPECT_TRUE(r.reference_feasible);
    EXPECT_TRUE(r.surrogate_descent);
    ASSERT_EQ(r.harvested.size(), cfg.num_sensors());
    for (std::size_t k = 0; k < r.harvested.size(); ++k)
        EXPECT_GE(r.harvested[k], cfg.sensor_energy_req[k] * (1 - 1e-6));
    EXPECT_NEAR(r.energy, total_energy(r.trajectory, cfg), 1e-9 * r.energy);
    EXPECT_EQ(r.energy, r.iterations.back().energy);
    for (std::size_t i = 5; i < r.iterations.size(); ++i)
        EXPECT_LT(std::abs(r.iterations[i].energy - r.iterations[i - 1].energy) / r.iterations[i - 1].energy, 0.1);
    for (std::size_t i = 0; i < r.iterations.size(); ++i) {
        EXPECT_EQ(r.iterations[i].n, static_cast<int>(i) + 1);
        EXPECT_GE(r.iterations[i].min_hk, 1 - 1e-9);
    }
}

TEST(Run, Deterministic) {
    ScenarioConfig cfg = default_scenario();
    cfg.ris_elements = 8;
    const RunReport a = run_fhb(cfg);
    const RunReport& b = fhb_report(8);
    ASSERT_EQ(a.iterations.size(), b.iterations.size());
    for (std::size_t i = 0; i < a.iterations.size(); ++i) {
        EXPECT_EQ(a.iterations[i].energy, b.iterations[i].energy);
        EXPECT_EQ(a.iterations[i].mu, b.iterations[i].mu);
        EXPECT_EQ(a.iterations[i].min_hk, b.iterations[i].min_hk);
    }
    EXPECT_EQ(a.trajectory.waypoints, b.trajectory.waypoints);
    EXPECT_EQ(a.trajectory.durations, b.trajectory.durations);
    EXPECT_EQ(a.harvested, b.harvested);
}

TEST(Run, RisHelpsFhb) {
    const RunReport& m0 = fhb_report(0);
    const RunReport& m8 = fhb_report(8);
    const RunReport& m16 = fhb_report(16);
    ASSERT_TRUE(m0.ok && m8.ok && m16.ok);
    EXPECT_LT(m16.energy, m8.energy);
    EXPECT_LT(m8.energy, m0.energy);
    ScenarioConfig cfg = default_scenario();
    cfg.ris_elements = 8;
    const RunReport noris = run_noris(cfg, {}, Protocol::FHB);
    ASSERT_TRUE(noris.ok);
    EXPECT_EQ(noris.ris_elements, 0);
    EXPECT_GE(noris.energy, m8.energy);
}

TEST(Run, QuantizedBaselines) {
    ScenarioConfig cfg = default_scenario();
    cfg.ris_elements = 8;
    const RunReport& cont = fhb_report(8);
    const RunReport fine = run_quantized(cfg, {}, 16, cont);
    ASSERT_TRUE(fine.ok) << fine.message;
    EXPECT_NEAR(fine.energy, cont.energy, 1e-3 * cont.energy);
    const RunReport two = run_quantized(cfg, {}, 2, cont);
    ASSERT_TRUE(two.ok) << two.message;
    EXPECT_EQ(two.bits, 2);
    EXPECT_EQ(two.continuous_energy, cont.energy);
    EXPECT_GE(two.energy, cont.energy);
    for (std::size_t k = 0; k < two.harvested.size(); ++k)
        EXPECT_GE(two.harvested[k], cfg.sensor_energy_req[k] * (1 - 1e-6));
    for (const auto& th : two.plan.theta)
        for (int m = 0; m < th.size(); ++m) {
            const double r = th[m] / (kPi / 2);
            EXPECT_NEAR(r, std::round(r), 1e-12);
        }
}

TEST(Run, LowerRequirementShortensPdMission) {
    ScenarioConfig cfg = default_scenario();
    cfg.max_segment_length = 2.0;
    SolverOptions o;
    o.n_max = 12;
    const RunReport high = run_pd(cfg, o);
    for (double& e : cfg.sensor_energy_req) e = 2e-5;
    const RunReport low = run_pd(cfg, o);
    ASSERT_TRUE(high.ok) << high.message;
    ASSERT_TRUE(low.ok) << low.message;
    EXPECT_LT(mission_time(low.trajectory), mission_time(high.trajectory));
    EXPECT_LT(low.energy, high.energy);
    for (std::size_t l = 0; l < low.trajectory.num_segments(); ++l)
        EXPECT_LE(low.trajectory.segment_length(l) / low.trajectory.durations[l], cfg.uav_max_speed * (1 + 1e-9));
}

TEST(Run, InvalidOptionsRejected) {
    SolverOptions o;
    o.mu0 = 5000;
    EXPECT_THROW(run_fhb(default_scenario(), o), std::invalid_argument);
}
