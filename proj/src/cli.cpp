#include "ammlab/cli.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ammlab/backtest.hpp"
#include "ammlab/csv.hpp"
#include "ammlab/dynamics.hpp"
#include "ammlab/estimation.hpp"
#include "ammlab/pde.hpp"
#include "ammlab/strategy.hpp"
#include "ammlab/synthetic.hpp"

namespace amm::cli {

namespace {

namespace fs = std::filesystem;

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kData = 3,
    kConvergence = 4,
};

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct GlobalOpts {
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::string output = "out";
};

// resolved configuration echoed next to the outputs; its hash is the
// provenance fingerprint carried by every artifact. The output directory is
// excluded from the hash so reruns into different directories fingerprint
// identically.
std::string echo_config(CLI::App& app, const GlobalOpts& g) {
    fs::create_directories(g.output);
    const std::string resolved = app.config_to_str(true, false);
    std::ofstream out(fs::path(g.output) / "config_resolved.ini");
    out << resolved;

    std::string hashed;
    std::istringstream lines(resolved);
    std::string line;
    while (std::getline(lines, line))
        if (line.rfind("output=", 0) != 0) hashed += line + '\n';
    return fnv1a_hex(hashed);
}

void write_json(const fs::path& file, nlohmann::json j, const std::string& fingerprint) {
    j["config_fingerprint"] = fingerprint;
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << j.dump(2) << '\n';
}

nlohmann::json bound_report_json(const pde::BoundReport& report) {
    nlohmann::json j;
    j["pass"] = report.pass;
    j["worst_margin"] = report.worst_margin;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks)
        checks.push_back({{"field", c.field},
                          {"min_margin", c.min_margin},
                          {"violations", c.violations},
                          {"worst_value", c.worst_value},
                          {"worst_lower", c.worst_lower},
                          {"worst_upper", c.worst_upper},
                          {"level", c.level},
                          {"i", c.i},
                          {"j", c.j}});
    j["checks"] = checks;
    return j;
}

struct SimulateOpts {
    int model = 1;
    double sigma = 0.045, beta = 657.9, gamma = 0.034, varsigma = 0.0;
    double S0 = 2000.0, Z0 = 2000.0, kappa0 = 1e7, T = 0.083, dt = 0.0;
    bool emit_events = false;
    double trade_interval_s = 13.0;
    double order_scale = 1.0;
};

int cmd_simulate(const GlobalOpts& g, const SimulateOpts& o, const std::string& fingerprint) {
    const double dt = o.dt > 0.0 ? o.dt : o.T / 5000.0;
    dynamics::MarketPath path;
    if (o.model == 1) {
        dynamics::Model1Params p{o.sigma, o.beta, o.gamma, o.S0, o.Z0, o.T};
        path = dynamics::simulate_model1(p, dt, g.seed, o.kappa0);
        if (o.emit_events) {
            backtest::SyntheticSpec spec;
            spec.market = p;
            spec.kappa0 = o.kappa0;
            spec.trade_interval_s = o.trade_interval_s;
            spec.order_scale = o.order_scale;
            spec.seed = g.seed;
            const auto events = backtest::make_synthetic_model1(spec);
            backtest::write_events_csv(events, (fs::path(g.output) / "swaps.csv").string(),
                                       (fs::path(g.output) / "oracle.csv").string());
        }
    } else {
        dynamics::Model2Params p{o.gamma, o.varsigma, o.Z0, o.kappa0, o.T};
        path = dynamics::simulate_model2(p, dt, g.seed);
    }
    const auto file = fs::path(g.output) / "path.csv";
    dynamics::write_path_csv(path, file.string(), "config " + fingerprint);
    std::cout << "seed " << g.seed << "\n";
    std::cout << "wrote " << file.string() << " (" << path.size() << " samples)\n";
    return kOk;
}

struct EstimateOpts {
    std::string swaps, oracle;
    std::int64_t start_ms = 0, end_ms = 0; // 0,0 = full span
};

int cmd_estimate(const GlobalOpts& g, const EstimateOpts& o, const std::string& fingerprint) {
    const auto data = backtest::load_events(o.swaps, "", o.oracle);
    if (data.swaps.empty()) throw backtest::ReplayError("no pool trades in the swaps file");
    backtest::Window w{o.start_ms, o.end_ms};
    if (w.start_ms == 0 && w.end_ms == 0) {
        w.start_ms = data.swaps.front().timestamp_ms - 1;
        w.end_ms = data.swaps.back().timestamp_ms;
    }
    if (!(w.end_ms > w.start_ms))
        throw backtest::ReplayError("estimation window is empty or outside the data span");

    std::vector<double> Z, S, depths;
    std::vector<std::int64_t> ts;
    std::size_t oi = 0;
    double s_last = 0.0;
    bool has_s = false;
    for (const auto& e : data.swaps) {
        if (e.timestamp_ms < w.start_ms || e.timestamp_ms > w.end_ms) continue;
        while (oi < data.oracle.size() && data.oracle[oi].timestamp_ms <= e.timestamp_ms) {
            s_last = data.oracle[oi++].rate;
            has_s = true;
        }
        if (!has_s) continue;
        Z.push_back(e.rate);
        S.push_back(s_last);
        ts.push_back(e.timestamp_ms);
        if (e.has_depth) depths.push_back(e.depth);
    }
    if (ts.size() < 31)
        throw backtest::ReplayError("insufficient data: need at least 31 aligned trades");

    estimation::EstimationResult est;
    est.window_start_ms = w.start_ms;
    est.window_end_ms = w.end_ms;
    est.execution = estimation::calibrate_execution(
        ts, depths.empty() ? std::vector<double>{0.0} : depths);
    est.oracle = estimation::estimate_oracle_vol(S, est.execution.dt_bar);
    est.pool = estimation::estimate_pool_dynamics(Z, S, est.execution.dt_bar);

    write_json(fs::path(g.output) / "estimate.json", est.to_json(), fingerprint);
    std::cout << "wrote " << (fs::path(g.output) / "estimate.json").string() << "\n";
    return kOk;
}

struct SolveOpts {
    int model = 1;
    double phi = 1e-5, alpha = 5.0, eta = 1.0, T = 0.1;
    double beta = 1.0, gamma = 0.02, sigma = 0.03, varsigma = 0.1;
    double kappa = 1e7, Z0 = 2000.0, S0 = 2000.0, kappa_lo = 0.0, kappa_hi = 0.0;
    std::size_t nt = 200, nz = 201, na = 201;
    int picard_max = 50;
    double picard_tol = 1e-8, picard_damping = 1.0;
    std::size_t field_stride = 0; // 0 = auto (~20 slices)
    bool closed_form = false;
};

pde::GridSpec solve_grid(const SolveOpts& o) {
    if (o.model == 1)
        return pde::GridSpec::log_spaced(o.nt, o.T, o.Z0 / 2.0, 2.0 * o.Z0, o.nz,
                                         o.S0 / 2.0, 2.0 * o.S0, o.na);
    const double klo = o.kappa_lo > 0.0 ? o.kappa_lo : o.kappa / 4.0;
    const double khi = o.kappa_hi > 0.0 ? o.kappa_hi : o.kappa * 4.0;
    return pde::GridSpec::log_spaced(o.nt, o.T, o.Z0 / 2.0, 2.0 * o.Z0, o.nz, klo, khi, o.na);
}

int cmd_solve(const GlobalOpts& g, const SolveOpts& o, const std::string& fingerprint) {
    strategy::ControlParams params;
    params.phi = o.phi;
    params.alpha = o.alpha;
    params.eta = o.eta;
    params.T = o.T;
    params.beta = o.beta;
    params.gamma = o.gamma;
    params.sigma = o.sigma;
    params.kappa = o.kappa;

    const auto grid = solve_grid(o);
    pde::PicardConfig cfg{o.picard_max, o.picard_tol, o.picard_damping};

    pde::SolvedFields fields = o.model == 1 ? pde::solve_model1(params, grid, cfg)
                                            : pde::solve_model2(params, o.varsigma, grid, cfg);
    const auto report = o.model == 1 ? pde::check_bounds_model1(fields, params)
                                     : pde::check_bounds_model2(fields);

    const std::size_t stride =
        o.field_stride > 0 ? o.field_stride : std::max<std::size_t>(1, grid.times.size() / 20);
    fields.write_bundle((fs::path(g.output) / "fields").string(), stride,
                        "config " + fingerprint);
    write_json(fs::path(g.output) / "bounds.json", bound_report_json(report), fingerprint);

    if (o.closed_form) {
        const double zeta = o.Z0 * std::sqrt(o.Z0) / o.kappa;
        const auto table =
            strategy::solve_constant_zeta(params, zeta, strategy::uniform_grid(o.T, 10000));
        table.write_csv((fs::path(g.output) / "coefficients.csv").string(),
                        "config " + fingerprint);
    }

    nlohmann::json diag;
    diag["picard_levels"] = fields.diagnostics.levels;
    diag["picard_total_iterations"] = fields.diagnostics.total_iterations;
    diag["picard_monotone_levels"] = fields.diagnostics.monotone_levels;
    diag["picard_worst_residual"] = fields.diagnostics.worst_residual;
    diag["bounds_pass"] = report.pass;
    write_json(fs::path(g.output) / "solve_diagnostics.json", diag, fingerprint);

    std::cout << "bounds " << (report.pass ? "pass" : "FAIL") << ", worst margin "
              << report.worst_margin << "\n";
    return kOk;
}

struct CompareOpts {
    SolveOpts solve;
    std::vector<double> inventories{-100.0, 0.0, 100.0};
    double panel_span = 0.2; // panel covers [Z0 (1-span), Z0 (1+span)]
    std::size_t panel_nodes = 21;
};

int cmd_compare(const GlobalOpts& g, const CompareOpts& o, const std::string& fingerprint) {
    const auto& so = o.solve;
    strategy::ControlParams params;
    params.phi = so.phi;
    params.alpha = so.alpha;
    params.eta = so.eta;
    params.T = so.T;
    params.beta = so.beta;
    params.gamma = so.gamma;
    params.sigma = so.sigma;
    params.kappa = so.kappa;

    const auto grid = solve_grid(so);
    pde::PicardConfig cfg{so.picard_max, so.picard_tol, so.picard_damping};
    const auto fields = pde::solve_model1(params, grid, cfg);
    strategy::ClosedFormStrategy closed(params, so.Z0 / 2.0, 2.0 * so.Z0);

    const auto file = fs::path(g.output) / "comparison.csv";
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << "# config " << fingerprint << "\n";
    out << "inventory,Z,S,speed_numerical,speed_closed_form,abs_diff\n";

    nlohmann::json metrics = nlohmann::json::array();
    for (double y : o.inventories) {
        double max_speed = 0.0, max_diff_diag = 0.0;
        for (std::size_t i = 0; i < o.panel_nodes; ++i) {
            const double z = so.Z0 * (1.0 - o.panel_span) +
                             2.0 * so.Z0 * o.panel_span * static_cast<double>(i) /
                                 static_cast<double>(o.panel_nodes - 1);
            for (std::size_t j = 0; j < o.panel_nodes; ++j) {
                const double s = so.S0 * (1.0 - o.panel_span) +
                                 2.0 * so.S0 * o.panel_span * static_cast<double>(j) /
                                     static_cast<double>(o.panel_nodes - 1);
                const double vn = pde::speed_numerical_model1(fields, 0.0, y, z, s);
                const double vc = closed.speed(0.0, y, z, s);
                const double diff = std::abs(vn - vc);
                max_speed = std::max(max_speed, std::max(std::abs(vn), std::abs(vc)));
                if (i == j) max_diff_diag = std::max(max_diff_diag, diff);
                out << io::format_double(y) << ',' << io::format_double(z) << ','
                    << io::format_double(s) << ',' << io::format_double(vn) << ','
                    << io::format_double(vc) << ',' << io::format_double(diff) << '\n';
            }
        }
        metrics.push_back({{"inventory", y},
                           {"max_abs_speed", max_speed},
                           {"max_abs_diff_at_equal_rates", max_diff_diag}});
    }
    write_json(fs::path(g.output) / "comparison_metrics.json",
               nlohmann::json{{"panels", metrics}}, fingerprint);
    std::cout << "wrote " << file.string() << "\n";
    return kOk;
}

struct BacktestOpts {
    std::string swaps, oracle, lp;
    double in_sample_hours = 24.0, horizon_hours = 2.0, shift_hours = 2.0;
    double participation = 0.5;
    double phi = 0.005, phi_spec = 0.001, alpha = 10.0;
    double gas = 5.0, fee_bps = 1.0;
    double default_kappa = 0.0;
    std::string strategy = "all";
};

int cmd_backtest(const GlobalOpts& g, const BacktestOpts& o, const std::string& fingerprint) {
    const auto data = backtest::load_events(o.swaps, o.lp, o.oracle);

    backtest::CampaignConfig cfg;
    cfg.in_sample_days = o.in_sample_hours / 24.0;
    cfg.horizon_days = o.horizon_hours / 24.0;
    cfg.shift_days = o.shift_hours / 24.0;
    cfg.participation = o.participation;
    cfg.phi_liquidation = o.phi;
    cfg.phi_speculative = o.phi_spec;
    cfg.alpha = o.alpha;
    cfg.fees = backtest::FeeModel{o.gas, o.fee_bps};
    cfg.jobs = g.jobs;
    cfg.default_kappa = o.default_kappa;
    if (o.strategy != "all") cfg.strategies = {o.strategy};

    const auto result = backtest::rolling_campaign(data, cfg);

    for (std::size_t k = 0; k < result.windows.size(); ++k) {
        const auto& w = result.windows[k];
        if (w.skipped) continue;
        nlohmann::json j;
        j["window_index"] = k;
        j["in_sample"] = {{"start_ms", w.in_sample.start_ms}, {"end_ms", w.in_sample.end_ms}};
        j["horizon"] = {{"start_ms", w.horizon.start_ms}, {"end_ms", w.horizon.end_ms}};
        j["estimates"] = w.estimates.to_json();
        j["y0"] = w.y0;
        for (const auto& [name, report] : w.reports) j["reports"][name] = report.to_json();
        write_json(fs::path(g.output) / ("window_" + std::to_string(k) + ".json"), j,
                   fingerprint);
    }
    result.write_summary_csv((fs::path(g.output) / "campaign.csv").string(), fingerprint);

    std::cout << "windows run " << (result.windows.size() - result.skipped) << ", skipped "
              << result.skipped << "\n";
    for (const auto& s : result.summary)
        std::cout << s.strategy << ": mean gross " << s.mean_gross_pnl << ", sd "
                  << s.sd_gross_pnl << ", trades " << s.mean_trades << ", fees " << s.mean_fees
                  << "\n";
    return kOk;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"constant-product AMM execution laboratory"};
    app.require_subcommand(1);
    app.set_config("--config");

    GlobalOpts g;
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--jobs", g.jobs, "parallel window cap");
    app.add_option("--output", g.output, "output directory");

    SimulateOpts sim;
    auto* simulate = app.add_subcommand("simulate", "simulate market paths");
    simulate->add_option("--model", sim.model, "1 or 2")->check(CLI::IsMember({1, 2}));
    simulate->add_option("--sigma", sim.sigma, "oracle volatility (model 1)");
    simulate->add_option("--beta", sim.beta, "mean reversion (model 1)");
    simulate->add_option("--gamma", sim.gamma, "pool rate volatility");
    simulate->add_option("--varsigma", sim.varsigma, "depth volatility (model 2)");
    simulate->add_option("--S0", sim.S0, "initial oracle rate");
    simulate->add_option("--Z0", sim.Z0, "initial pool rate");
    simulate->add_option("--kappa", sim.kappa0, "pool depth");
    simulate->add_option("--T", sim.T, "horizon in days");
    simulate->add_option("--dt", sim.dt, "step in days (default T/5000)");
    simulate->add_flag("--emit-events", sim.emit_events,
                       "also write swaps.csv/oracle.csv fixtures (model 1)");
    simulate->add_option("--trade-interval-s", sim.trade_interval_s,
                         "event spacing for --emit-events");
    simulate->add_option("--order-scale", sim.order_scale, "event size scale");

    EstimateOpts est;
    auto* estimate = app.add_subcommand("estimate", "in-sample parameter estimation");
    estimate->add_option("--swaps", est.swaps, "swaps.csv")->required();
    estimate->add_option("--oracle", est.oracle, "oracle.csv")->required();
    estimate->add_option("--start-ms", est.start_ms, "window start (epoch ms)");
    estimate->add_option("--end-ms", est.end_ms, "window end (epoch ms)");

    SolveOpts sol;
    auto* solve = app.add_subcommand("solve", "solve the control problem fields");
    solve->add_option("--model", sol.model, "1 or 2")->check(CLI::IsMember({1, 2}));
    solve->add_option("--phi", sol.phi, "running inventory penalty");
    solve->add_option("--alpha", sol.alpha, "terminal penalty");
    solve->add_option("--eta", sol.eta, "execution cost scale (days)");
    solve->add_option("--T", sol.T, "horizon (days)");
    solve->add_option("--beta", sol.beta, "mean reversion");
    solve->add_option("--gamma", sol.gamma, "pool rate volatility");
    solve->add_option("--sigma", sol.sigma, "oracle volatility");
    solve->add_option("--varsigma", sol.varsigma, "depth volatility (model 2)");
    solve->add_option("--kappa", sol.kappa, "pool depth");
    solve->add_option("--Z0", sol.Z0, "rate box center");
    solve->add_option("--S0", sol.S0, "oracle box center (model 1)");
    solve->add_option("--kappa-lo", sol.kappa_lo, "depth axis low (model 2)");
    solve->add_option("--kappa-hi", sol.kappa_hi, "depth axis high (model 2)");
    solve->add_option("--nt", sol.nt, "time steps");
    solve->add_option("--nz", sol.nz, "rate nodes");
    solve->add_option("--na", sol.na, "second axis nodes");
    solve->add_option("--picard-max", sol.picard_max, "max Picard iterations");
    solve->add_option("--picard-tol", sol.picard_tol, "Picard tolerance");
    solve->add_option("--picard-damping", sol.picard_damping, "Picard damping in (0,1]");
    solve->add_option("--field-stride", sol.field_stride, "time stride for the field bundle");
    solve->add_flag("--closed-form", sol.closed_form,
                    "also export the constant-impact coefficient table");

    CompareOpts cmp;
    auto* compare = app.add_subcommand(
        "compare", "numerical vs closed-form speeds on a rate/oracle panel");
    compare->add_option("--phi", cmp.solve.phi, "running inventory penalty");
    compare->add_option("--alpha", cmp.solve.alpha, "terminal penalty");
    compare->add_option("--eta", cmp.solve.eta, "execution cost scale (days)");
    compare->add_option("--T", cmp.solve.T, "horizon (days)");
    compare->add_option("--beta", cmp.solve.beta, "mean reversion");
    compare->add_option("--gamma", cmp.solve.gamma, "pool rate volatility");
    compare->add_option("--sigma", cmp.solve.sigma, "oracle volatility");
    compare->add_option("--kappa", cmp.solve.kappa, "pool depth");
    compare->add_option("--Z0", cmp.solve.Z0, "rate box center");
    compare->add_option("--S0", cmp.solve.S0, "oracle box center");
    compare->add_option("--nt", cmp.solve.nt, "time steps");
    compare->add_option("--nz", cmp.solve.nz, "rate nodes");
    compare->add_option("--na", cmp.solve.na, "second axis nodes");
    compare->add_option("--inventories", cmp.inventories, "panel inventory values");
    compare->add_option("--panel-span", cmp.panel_span, "relative half width of the panel");
    compare->add_option("--panel-nodes", cmp.panel_nodes, "nodes per panel axis");

    BacktestOpts bt;
    auto* backtest_cmd = app.add_subcommand("backtest", "rolling estimation/execution campaign");
    backtest_cmd->add_option("--swaps", bt.swaps, "swaps.csv")->required();
    backtest_cmd->add_option("--oracle", bt.oracle, "oracle.csv")->required();
    backtest_cmd->add_option("--lp", bt.lp, "lp_events.csv (optional)");
    backtest_cmd->add_option("--in-sample-hours", bt.in_sample_hours, "estimation window");
    backtest_cmd->add_option("--horizon-hours", bt.horizon_hours, "execution window");
    backtest_cmd->add_option("--shift-hours", bt.shift_hours, "window shift");
    backtest_cmd->add_option("--participation", bt.participation, "inventory sizing fraction");
    backtest_cmd->add_option("--phi", bt.phi, "liquidation running penalty");
    backtest_cmd->add_option("--phi-spec", bt.phi_spec, "speculative running penalty");
    backtest_cmd->add_option("--alpha", bt.alpha, "terminal penalty");
    backtest_cmd->add_option("--gas", bt.gas, "gas fee per transaction (X units)");
    backtest_cmd->add_option("--fee-bps", bt.fee_bps, "AMM fee in basis points");
    backtest_cmd->add_option("--default-kappa", bt.default_kappa,
                             "fallback depth when the feed has none");
    backtest_cmd->add_option("--strategy", bt.strategy,
                             "all | liquidation | twap | single_order | speculative");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        const std::string fingerprint = echo_config(app, g);
        if (simulate->parsed()) return cmd_simulate(g, sim, fingerprint);
        if (estimate->parsed()) return cmd_estimate(g, est, fingerprint);
        if (solve->parsed()) return cmd_solve(g, sol, fingerprint);
        if (compare->parsed()) return cmd_compare(g, cmp, fingerprint);
        if (backtest_cmd->parsed()) return cmd_backtest(g, bt, fingerprint);
        return kUsage;
    } catch (const pde::PicardError& e) {
        std::cerr << "convergence failure: " << e.what() << " (residual " << e.residual
                  << " after " << e.iterations << " iterations)\n";
        return kConvergence;
    } catch (const pde::StepInstabilityError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return kConvergence;
    } catch (const dynamics::StepTooCoarseError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return kConvergence;
    } catch (const io::SchemaError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const backtest::ReplayError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const backtest::DepthUnderflowError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
}

} // namespace amm::cli
