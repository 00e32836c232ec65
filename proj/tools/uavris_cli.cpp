#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <uavris/uavris.hpp>

namespace fs = std::filesystem;
using namespace uavris;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

struct Common {
    std::string scenario;
    std::string out_dir;
    std::uint64_t seed = 42;
    unsigned jobs = 1;
    int m = -1;
    double delta_max = 0.0;
    double ereq = 0.0;
    SolverOptions opts;
    std::string mu_schedule = "capped";
};

void add_common(CLI::App* sub, Common& c, bool with_m = true) {
    sub->add_option("--scenario", c.scenario, "scenario JSON (default: built-in layout)");
    sub->add_option("--out", c.out_dir, "output directory (env UAVRIS_OUT_DIR, else ./out)");
    sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
    sub->add_option("--jobs", c.jobs, "parallel jobs")->check(CLI::PositiveNumber)->capture_default_str();
    if (with_m) sub->add_option("--m", c.m, "RIS elements override")->check(CLI::NonNegativeNumber);
    sub->add_option("--delta-max", c.delta_max, "max PD segment length override [m]")->check(CLI::PositiveNumber);
    sub->add_option("--ereq", c.ereq, "per-sensor energy requirement override [J]")->check(CLI::PositiveNumber);
    sub->add_option("--n-max", c.opts.n_max, "outer iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--mu0", c.opts.mu0, "initial smoothing factor")->capture_default_str();
    sub->add_option("--mu-max", c.opts.mu_max, "smoothing factor cap")->capture_default_str();
    sub->add_option("--mu-schedule", c.mu_schedule, "capped | literal")
        ->check(CLI::IsMember({"capped", "literal"}))
        ->capture_default_str();
    sub->add_option("--cone-tol", c.opts.cone_tol, "cone solver tolerance")->capture_default_str();
    sub->add_option("--outer-rel-stop", c.opts.outer_rel_stop, "early-exit relative change")->capture_default_str();
}

ScenarioConfig load(const Common& c) {
    ScenarioConfig cfg = c.scenario.empty() ? default_scenario() : load_scenario(c.scenario);
    if (c.m >= 0) cfg.ris_elements = c.m;
    if (c.delta_max > 0.0) cfg.max_segment_length = c.delta_max;
    if (c.ereq > 0.0) cfg.sensor_energy_req.assign(cfg.sensors.size(), c.ereq);
    validate_scenario(cfg);
    return cfg;
}

SolverOptions options(const Common& c) {
    SolverOptions o = c.opts;
    o.mu_schedule = c.mu_schedule == "literal" ? MuSchedule::Literal : MuSchedule::Capped;
    validate_options(o);
    return o;
}

fs::path out_dir(const Common& c) {
    if (!c.out_dir.empty()) return c.out_dir;
    if (const char* env = std::getenv("UAVRIS_OUT_DIR"); env && *env) return env;
    return "out";
}

Protocol parse_protocol(const std::string& s) { return s == "pd" ? Protocol::PD : Protocol::FHB; }

/// Runs f(i) for i in [0, n) with at most `jobs` in flight; results keep index order.
template <class F>
auto parallel_map(std::size_t n, unsigned jobs, F f) {
    using R = decltype(f(std::size_t{}));
    std::vector<R> out(n);
    for (std::size_t start = 0; start < n; start += jobs) {
        std::vector<std::future<R>> fs;
        for (std::size_t i = start; i < std::min(n, start + jobs); ++i) fs.push_back(std::async(std::launch::async, f, i));
        for (std::size_t i = 0; i < fs.size(); ++i) out[start + i] = fs[i].get();
    }
    return out;
}

double min_ratio(const RunReport& r, const ScenarioConfig& cfg) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r.harvested.size(); ++k) worst = std::min(worst, r.harvested[k] / cfg.sensor_energy_req[k]);
    return r.harvested.empty() ? 0.0 : worst;
}

void print_brief(const RunReport& r) {
    std::cout << r.label << ": " << (r.ok ? "ok" : "FAILED") << "  E_U = " << r.energy << " J  iterations "
              << r.iterations.size() << "  " << r.wall_seconds << " s";
    if (!r.message.empty()) std::cout << "  (" << r.message << ")";
    std::cout << '\n';
}

// ---------------------------------------------------------------------------

int cmd_run(const Common& c, const std::string& protocol, int bits, bool noris) {
    if (noris && bits > 0) throw std::invalid_argument("--bits needs an RIS");
    const ScenarioConfig cfg = load(c);
    const SolverOptions o = options(c);
    const Protocol p = parse_protocol(protocol);
    const fs::path dir = out_dir(c);
    RunReport r = noris ? run_noris(cfg, o, p) : run_protocol(cfg, o, p);
    print_brief(r);
    write_bundle(r, cfg, dir / r.label);
    if (!r.ok) return kDomainFailure;
    if (bits > 0) {
        RunReport q = run_quantized(cfg, o, bits, r);
        print_brief(q);
        write_bundle(q, cfg, dir / q.label);
        std::cout << "quantized/continuous energy ratio " << q.energy / r.energy << '\n';
        if (!q.ok) return kDomainFailure;
    }
    std::cout << "wrote " << (dir / r.label).string() << '\n';
    return kOk;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

int cmd_sweep_m(const Common& c, const std::vector<int>& ms, const std::vector<std::string>& protocols, int bits) {
    const ScenarioConfig base = load(c);
    const SolverOptions o = options(c);
    const fs::path dir = out_dir(c);
    fs::create_directories(dir);

    struct Cell {
        int m;
        Protocol p;
    };
    std::vector<Cell> cells;
    for (int m : ms)
        for (const auto& s : protocols) cells.push_back({m, parse_protocol(s)});

    struct Result {
        RunReport cont, quant;
    };
    const auto results = parallel_map(cells.size(), c.jobs, [&](std::size_t i) {
        ScenarioConfig cfg = base;
        cfg.ris_elements = cells[i].m;
        Result res;
        res.cont = cells[i].m == 0 ? run_noris(cfg, o, cells[i].p) : run_protocol(cfg, o, cells[i].p);
        if (bits > 0 && cells[i].m > 0 && res.cont.ok) res.quant = run_quantized(cfg, o, bits, res.cont);
        return res;
    });

    std::map<int, std::map<Protocol, double>> energy;
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (results[i].cont.ok) energy[cells[i].m][cells[i].p] = results[i].cont.energy;
    auto pd_lt_fhb = [&](int m) -> std::string {
        const auto& e = energy[m];
        if (!e.count(Protocol::PD) || !e.count(Protocol::FHB)) return "";
        return e.at(Protocol::PD) < e.at(Protocol::FHB) ? "1" : "0";
    };

    bool all_ok = true;
    CsvWriter w(dir / "energy_vs_m.csv");
    w.row("M", "protocol", "baseline", "E_U_J", "ok", "iterations", "converged", "repair_factor", "min_charge_ratio",
          "pd_lt_fhb");
    std::map<std::string, PlotSeries> series;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        ScenarioConfig cfg = base;
        cfg.ris_elements = cells[i].m;
        auto emit = [&](const RunReport& r, const std::string& baseline) {
            print_brief(r);
            write_bundle(r, cfg, dir / r.label);
            all_ok = all_ok && r.ok;
            w.row(cells[i].m, protocol_name(cells[i].p), baseline, r.energy, r.ok ? 1 : 0, r.iterations.size(),
                  r.converged(1e-3, 5) ? 1 : 0, r.repair_factor, min_ratio(r, cfg), pd_lt_fhb(cells[i].m));
            if (r.ok) {
                auto& s = series[std::string(protocol_name(cells[i].p)) + (baseline == "continuous" || baseline == "noRIS" ? "" : "-" + baseline)];
                s.x.push_back(cells[i].m);
                s.y.push_back(r.energy);
            }
        };
        emit(results[i].cont, cells[i].m == 0 ? "noRIS" : "continuous");
        if (bits > 0 && cells[i].m > 0) {
            if (results[i].quant.iterations.empty() && !results[i].cont.ok) continue;
            emit(results[i].quant, std::to_string(bits) + "bit");
        }
    }
    std::vector<PlotSeries> plot;
    for (auto& [name, s] : series) {
        s.name = name;
        plot.push_back(s);
    }
    write_text(dir / "energy_vs_m.svg", svg_plot(plot, "UAV energy vs RIS elements", "M", "E_U [J]"));

    for (const auto& s : protocols) {
        const Protocol p = parse_protocol(s);
        std::vector<std::pair<int, double>> pts;
        for (int m : ms)
            if (energy[m].count(p)) pts.push_back({m, energy[m][p]});
        std::sort(pts.begin(), pts.end());
        bool mono = true;
        for (std::size_t i = 1; i < pts.size(); ++i) mono = mono && pts[i].second < pts[i - 1].second;
        std::cout << protocol_name(p) << ": energy decreasing in M: " << (mono ? "yes" : "no") << '\n';
    }
    for (int m : ms)
        if (!pd_lt_fhb(m).empty()) std::cout << "M=" << m << ": PD < FHB: " << (pd_lt_fhb(m) == "1" ? "yes" : "no") << '\n';
    std::cout << "wrote " << (dir / "energy_vs_m.csv").string() << '\n';
    return all_ok ? kOk : kDomainFailure;
}

int cmd_sweep_ereq(const Common& c, const std::vector<double>& ereqs, const std::vector<std::string>& protocols) {
    const ScenarioConfig base = load(c);
    const SolverOptions o = options(c);
    const fs::path dir = out_dir(c);
    fs::create_directories(dir);
    struct Cell {
        double e;
        Protocol p;
    };
    std::vector<Cell> cells;
    for (double e : ereqs)
        for (const auto& s : protocols) cells.push_back({e, parse_protocol(s)});
    const auto results = parallel_map(cells.size(), c.jobs, [&](std::size_t i) {
        ScenarioConfig cfg = base;
        cfg.sensor_energy_req.assign(cfg.sensors.size(), cells[i].e);
        return run_protocol(cfg, o, cells[i].p);
    });
    bool all_ok = true;
    CsvWriter w(dir / "energy_vs_ereq.csv");
    w.row("E_req_J", "protocol", "M", "E_U_J", "ok", "iterations", "repair_factor");
    std::map<std::string, PlotSeries> series;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const RunReport& r = results[i];
        ScenarioConfig cfg = base;
        cfg.sensor_energy_req.assign(cfg.sensors.size(), cells[i].e);
        print_brief(r);
        std::ostringstream sub;
        sub << r.label << "-E" << cells[i].e;
        write_bundle(r, cfg, dir / sub.str());
        all_ok = all_ok && r.ok;
        w.row(cells[i].e, protocol_name(cells[i].p), base.ris_elements, r.energy, r.ok ? 1 : 0, r.iterations.size(),
              r.repair_factor);
        if (r.ok) {
            auto& s = series[protocol_name(cells[i].p)];
            s.name = protocol_name(cells[i].p);
            s.x.push_back(cells[i].e * 1e3);
            s.y.push_back(r.energy);
        }
    }
    std::vector<PlotSeries> plot;
    for (auto& [name, s] : series) plot.push_back(s);
    write_text(dir / "energy_vs_ereq.svg", svg_plot(plot, "UAV energy vs requirement", "E_req [mJ]", "E_U [J]"));
    std::cout << "wrote " << (dir / "energy_vs_ereq.csv").string() << '\n';
    return all_ok ? kOk : kDomainFailure;
}

int cmd_validate(const Common& c, const std::string& write_default) {
    if (!write_default.empty()) {
        save_scenario(default_scenario(), write_default);
        std::cout << "wrote " << write_default << '\n';
        return kOk;
    }
    const ScenarioConfig cfg = load(c);
    std::cout << "scenario ok: " << cfg.num_sensors() << " sensors, M=" << cfg.ris_elements
              << ", v_mr=" << mr_speed(cfg.rotor) << " m/s\n";
    return kOk;
}

double oracle_bound(std::size_t samples) { return samples >= 1000000 ? 0.01 : 0.1; }

int cmd_oracle_check(const Common& c, std::size_t samples, std::size_t configs) {
    const ScenarioConfig cfg = load(c);
    const auto cases = power_oracle_suite(cfg, configs, samples, c.seed, c.jobs);
    const PowerCase* worst = &cases.front();
    for (const auto& pc : cases) {
        std::cout << "M=" << pc.m << " sensor " << pc.sensor + 1 << " q=(" << pc.q.real() << ", " << pc.q.imag()
                  << ")  closed " << pc.closed_form << "  mc " << pc.monte_carlo << "  rel " << pc.rel_error << '\n';
        if (pc.rel_error > worst->rel_error) worst = &pc;
    }
    const double bound = oracle_bound(samples);
    std::cout << "max relative error " << worst->rel_error << " (bound " << bound << ", N=" << samples << ")\n";
    if (worst->rel_error < bound) return kOk;
    std::cerr << "worst case: M=" << worst->m << " sensor " << worst->sensor + 1 << " q=(" << worst->q.real() << ", "
              << worst->q.imag() << ") theta=[";
    for (Eigen::Index i = 0; i < worst->theta.size(); ++i) std::cerr << (i ? ", " : "") << worst->theta[i];
    std::cerr << "]\n";
    return kDomainFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UAV trajectory, time and RIS phase optimization for wireless power transfer"};
    app.require_subcommand(1);

    Common c;
    std::string protocol = "fhb";
    int bits = 0;
    bool noris = false;
    auto* run = app.add_subcommand("run", "optimize one protocol and write the CSV bundle");
    add_common(run, c);
    run->add_option("--protocol", protocol, "fhb | pd")->check(CLI::IsMember({"fhb", "pd"}))->capture_default_str();
    run->add_option("--bits", bits, "also run a quantized baseline with this many bits")->check(CLI::PositiveNumber);
    run->add_flag("--noris", noris, "disable the RIS (M = 0)");

    std::string m_values = "0,8,16", protocols = "fhb,pd";
    auto* sweep_m = app.add_subcommand("sweep-m", "energy versus number of RIS elements");
    add_common(sweep_m, c, false);
    sweep_m->add_option("--m-values", m_values, "comma separated M list")->capture_default_str();
    sweep_m->add_option("--protocols", protocols, "comma separated protocols")->capture_default_str();
    sweep_m->add_option("--bits", bits, "add quantized baselines")->check(CLI::PositiveNumber);

    std::string ereq_values = "0.1e-3,0.2e-3,0.3e-3,0.4e-3";
    auto* sweep_e = app.add_subcommand("sweep-ereq", "energy versus per-sensor requirement");
    add_common(sweep_e, c);
    sweep_e->add_option("--ereq-values", ereq_values, "comma separated requirements [J]")->capture_default_str();
    sweep_e->add_option("--protocols", protocols, "comma separated protocols")->capture_default_str();

    std::string write_default;
    auto* val = app.add_subcommand("validate", "load and check a scenario file");
    add_common(val, c);
    val->add_option("--write-default", write_default, "write the built-in scenario to this path and exit");

    std::size_t samples = 1000000, configs = 20;
    auto* oracle = app.add_subcommand("oracle-check", "Monte-Carlo check of the closed-form expected power");
    add_common(oracle, c, false);
    oracle->add_option("--samples", samples, "realizations per configuration")
        ->check(CLI::Range(std::size_t{1000}, std::size_t{1} << 40))
        ->capture_default_str();
    oracle->add_option("--configs", configs, "random configurations")->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(c, protocol, bits, noris);
        if (*sweep_m || *sweep_e) {
            std::vector<std::string> ps = split(protocols);
            for (const auto& p : ps)
                if (p != "fhb" && p != "pd") {
                    std::cerr << "unknown protocol: " << p << '\n';
                    return kUsage;
                }
            if (*sweep_m) {
                std::vector<int> ms;
                for (const auto& s : split(m_values)) ms.push_back(std::stoi(s));
                return cmd_sweep_m(c, ms, ps, bits);
            }
            std::vector<double> es;
            for (const auto& s : split(ereq_values)) es.push_back(std::stod(s));
            return cmd_sweep_ereq(c, es, ps);
        }
        if (*val) return cmd_validate(c, write_default);
        if (*oracle) return cmd_oracle_check(c, samples, configs);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDomainFailure;
    }
    return kUsage;
}
