#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "uavris/report.hpp"

using namespace uavris;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream is(p);
    std::vector<std::string> out;
    for (std::string s; std::getline(is, s);) out.push_back(s);
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<double> fields(const std::string& row) {
    std::vector<double> out;
    std::size_t at = 0;
    while (true) {
        const std::size_t end = row.find(',', at);
        const std::string f = row.substr(at, end == std::string::npos ? std::string::npos : end - at);
        char* stop = nullptr;
        const double v = std::strtod(f.c_str(), &stop);
        out.push_back(f.empty() || *stop ? NAN : v);
        if (end == std::string::npos) break;
        at = end + 1;
    }
    return out;
}

struct Fixture {
    ScenarioConfig cfg;
    RunReport report;
    fs::path dir;
};

const Fixture& fixture() {
    static Fixture f = [] {
        Fixture x;
        x.cfg = default_scenario();
        x.cfg.ris_elements = 8;
        x.report = run_fhb(x.cfg);
        x.dir = fs::temp_directory_path() / ("uavris_report_" + std::to_string(::getpid()));
        write_bundle(x.report, x.cfg, x.dir / "a");
        write_bundle(x.report, x.cfg, x.dir / "b");
        return x;
    }();
    return f;
}

}  // namespace

TEST(Report, BundleFiles) {
    const auto& f = fixture();
    for (const char* name : {"convergence.csv", "trajectory.csv", "speed.csv", "received_power.csv", "harvested.csv",
                             "trajectory.svg", "convergence.svg", "summary.txt"})
        EXPECT_TRUE(fs::exists(f.dir / "a" / name)) << name;
}

TEST(Report, ConvergenceRows) {
    const auto& f = fixture();
    const auto rows = lines(f.dir / "a" / "convergence.csv");
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows[0].rfind("iter,E_U_J,min_hk,mu,status", 0), 0u);
    EXPECT_EQ(rows.size() - 1, f.report.iterations.size());
    EXPECT_LE(rows.size() - 1, 60u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto v = fields(rows[i]);
        EXPECT_EQ(v[0], static_cast<double>(i));
        EXPECT_NEAR(v[1], f.report.iterations[i - 1].energy, 1e-9 * v[1]);
    }
}

TEST(Report, TrajectoryAndSpeed) {
    const auto& f = fixture();
    const auto traj = lines(f.dir / "a" / "trajectory.csv");
    EXPECT_EQ(traj[0], "index,x_m,y_m,slot_duration_s");
    ASSERT_EQ(traj.size() - 1, f.report.trajectory.waypoints.size());
    const auto first = fields(traj[1]), last = fields(traj.back());
    EXPECT_EQ(first[1], -35.0);
    EXPECT_EQ(last[1], 35.0);
    EXPECT_TRUE(std::isnan(first[3]));
    EXPECT_TRUE(std::isnan(last[3]));
    const auto sp = segment_speeds(f.report.trajectory, f.cfg);
    const double vmr = mr_speed(f.cfg.rotor);
    for (const auto& s : sp) EXPECT_NEAR(s.speed, vmr, 1e-12);
    EXPECT_EQ(lines(f.dir / "a" / "speed.csv").size() - 1, sp.size());
}

TEST(Report, ReceivedPowerIntegratesToHarvested) {
    const auto& f = fixture();
    const auto rows = lines(f.dir / "a" / "received_power.csv");
    ASSERT_EQ(rows.size() - 1, f.report.trajectory.durations.size());
    std::vector<double> acc(f.cfg.num_sensors(), 0.0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto v = fields(rows[i]);
        ASSERT_EQ(v.size(), 4 + f.cfg.num_sensors());
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += f.cfg.conversion_efficiency * v[3] * v[4 + k];
    }
    for (std::size_t k = 0; k < acc.size(); ++k) EXPECT_NEAR(acc[k], f.report.harvested[k], 1e-9 * acc[k]);
}

TEST(Report, HarvestedMeetsRequirement) {
    const auto& f = fixture();
    const auto rows = lines(f.dir / "a" / "harvested.csv");
    EXPECT_EQ(rows[0], "sensor,x_m,y_m,required_J,harvested_J,ratio");
    ASSERT_EQ(rows.size() - 1, f.cfg.num_sensors());
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(fields(rows[i])[5], 1 - 1e-6);
}

TEST(Report, DeterministicNumericFiles) {
    const auto& f = fixture();
    for (const char* name : {"trajectory.csv", "speed.csv", "received_power.csv", "harvested.csv", "trajectory.svg"})
        EXPECT_EQ(slurp(f.dir / "a" / name), slurp(f.dir / "b" / name)) << name;
}

TEST(Report, SummaryFields) {
    const auto& f = fixture();
    const std::string s = slurp(f.dir / "a" / "summary.txt");
    EXPECT_NE(s.find("status ok"), std::string::npos);
    EXPECT_NE(s.find("energy_J "), std::string::npos);
    EXPECT_EQ(s.find("quantized_over_continuous"), std::string::npos);
    RunReport q = f.report;
    q.bits = 2;
    q.continuous_energy = f.report.energy / 1.01;
    const std::string t = summary_text(q);
    const auto at = t.find("quantized_over_continuous ");
    ASSERT_NE(at, std::string::npos);
    EXPECT_NEAR(std::stod(t.substr(at + 26)), 1.01, 1e-9);
}

TEST(Report, SvgWellFormed) {
    const std::string svg = svg_plot({{"a", {0, 1, 2}, {3, 1, 2}, false}, {"b", {1}, {1}, true}}, "t", "x", "y");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
    EXPECT_NE(svg.find("<circle"), std::string::npos);
    const std::string empty = svg_plot({}, "t", "x", "y");
    EXPECT_NE(empty.find("</svg>"), std::string::npos);
}

TEST(Report, PdSpeedsFromDurations) {
    ScenarioConfig cfg = default_scenario();
    Trajectory t;
    t.protocol = Protocol::PD;
    t.waypoints = {{0, 0}, {3, 4}, {3, 10}};
    t.durations = {1.0, 0.5};
    const auto sp = segment_speeds(t, cfg);
    EXPECT_DOUBLE_EQ(sp[0].speed, 5.0);
    EXPECT_DOUBLE_EQ(sp[1].speed, 12.0);
}
