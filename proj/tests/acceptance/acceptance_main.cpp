// Acceptance suite: every criterion prints one PASS/FAIL line and the binary
// exits nonzero when anything fails. Run a single criterion with
// `acceptance_tests --criterion N`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "ammlab/backtest.hpp"
#include "ammlab/cpmm.hpp"
#include "ammlab/dynamics.hpp"
#include "ammlab/estimation.hpp"
#include "ammlab/pde.hpp"
#include "ammlab/rng.hpp"
#include "ammlab/strategy.hpp"
#include "ammlab/synthetic.hpp"

#include "../oracles.hpp"

using namespace amm;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
    void note(const std::string& what) {
        if (ok) detail = what;
    }
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

// adaptive step-doubling RK4 for the backward Riccati integration; kept local
// so the acceptance oracle shares nothing with the library's solution path
double adaptive_rk4_scalar(const std::function<double(double, double)>& f, double y,
                           double t0, double t1, double tol) {
    double t = t0;
    double h = (t1 - t0) / 64.0;
    const double direction = t1 > t0 ? 1.0 : -1.0;
    auto rk4_step = [&](double yy, double tt, double hh) {
        const double k1 = f(tt, yy);
        const double k2 = f(tt + 0.5 * hh, yy + 0.5 * hh * k1);
        const double k3 = f(tt + 0.5 * hh, yy + 0.5 * hh * k2);
        const double k4 = f(tt + hh, yy + hh * k3);
        return yy + hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    while (direction * (t1 - t) > 1e-300) {
        if (direction * h > direction * (t1 - t)) h = t1 - t;
        const double full = rk4_step(y, t, h);
        const double half = rk4_step(rk4_step(y, t, 0.5 * h), t + 0.5 * h, 0.5 * h);
        const double err = std::abs(full - half);
        const double scale = tol * std::max(1.0, std::abs(half));
        if (err <= scale) {
            y = half;
            t += h;
            h *= std::min(4.0, 0.9 * std::pow(scale / std::max(err, 1e-300), 0.2));
        } else {
            h *= std::max(0.1, 0.9 * std::pow(scale / err, 0.2));
        }
    }
    return y;
}

template <typename F>
std::vector<typename std::invoke_result_t<F, std::uint64_t>> parallel_seeds(
    std::uint64_t n, F&& fn) {
    using R = typename std::invoke_result_t<F, std::uint64_t>;
    std::vector<R> out(n);
    const unsigned jobs = std::min<unsigned>(std::thread::hardware_concurrency(), 8u);
    std::atomic<std::uint64_t> next{0};
    std::vector<std::future<void>> futures;
    for (unsigned j = 0; j < std::max(1u, jobs); ++j)
        futures.push_back(std::async(std::launch::async, [&] {
            for (std::uint64_t s = next.fetch_add(1); s < n; s = next.fetch_add(1))
                out[s] = fn(s);
        }));
    for (auto& f : futures) f.get();
    return out;
}

strategy::ControlParams fig6_params() {
    strategy::ControlParams p;
    p.phi = 1e-5;
    p.alpha = 5.0;
    p.eta = 1.0;
    p.T = 0.1;
    p.beta = 1.0;
    p.gamma = 0.02;
    p.sigma = 0.03;
    p.kappa = 1e7;
    return p;
}

// ---------------------------------------------------------------------------
// 1. convexity identity
// ---------------------------------------------------------------------------
Check criterion_convexity_identity() {
    Check check;
    Philox rng(20240501, 0);
    double worst_identity = 0.0, worst_bound = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double y = 50.0 * std::exp(6.0 * rng.uniform());
        const double kappa = 10.0 * std::exp(9.0 * rng.uniform());
        double dy = y * (rng.uniform() - 0.5); // |dy|/y <= 0.5
        if (dy == 0.0) dy = 1e-3 * y;
        const cpmm::PoolState pool{kappa * kappa / y, y, kappa};
        const double z = cpmm::instantaneous_rate(pool);
        const double exact = cpmm::unitary_execution_cost_exact(pool, dy);
        const double approx = cpmm::execution_cost_approx(z, kappa, dy);

        const double identity = approx * y / (y + dy);
        worst_identity = std::max(worst_identity,
                                  std::abs(exact - identity) / std::max(identity, 1e-300));
        // approximation error relative to the approximate cost
        const double rel = std::abs(exact - approx) / approx;
        worst_bound = std::max(worst_bound, rel - std::abs(dy) / (y + dy));
    }
    check.require(worst_identity < 1e-12,
                  fmt("identity failed: worst rel err %.3e", worst_identity));
    check.require(worst_bound <= 1e-12,
                  fmt("approximation bound violated by %.3e", worst_bound));
    check.note(fmt("worst identity err %.2e, bound slack %.2e", worst_identity, worst_bound));
    return check;
}

// ---------------------------------------------------------------------------
// 2. riccati closed form vs adaptive backward integration
// ---------------------------------------------------------------------------
Check criterion_riccati_oracle() {
    Check check;
    const double T = 0.1, eta = 1.0;
    double worst = 0.0;
    for (double phi : {0.0, 1e-5, 0.005, 0.05}) {
        for (double alpha : {5.0, 10.0}) {
            for (double zeta : {1e-3, 3.16e-3, 1e-2, 3.16e-2, 1e-1}) {
                const double ez = eta * zeta;
                auto f = [&](double, double a) { return phi - a * a / ez; };
                double a_ode = -alpha;
                double t = T;
                for (int k = 1; k <= 100; ++k) {
                    const double t_next = T * (1.0 - static_cast<double>(k) / 100.0);
                    a_ode = adaptive_rk4_scalar(f, a_ode, t, t_next, 1e-11);
                    t = t_next;
                    const double a_cf = strategy::riccati_a(phi, alpha, ez, T - t);
                    worst = std::max(worst, std::abs(a_cf - a_ode) / std::abs(a_ode));
                }
            }
        }
    }
    check.require(worst < 1e-8, fmt("closed form vs adaptive ODE: rel err %.3e", worst));

    // phi = 0 separable form
    double worst0 = 0.0;
    for (double alpha : {5.0, 10.0})
        for (double zeta : {1e-3, 1e-2, 1e-1})
            for (int k = 0; k <= 50; ++k) {
                const double tau = T * k / 50.0;
                const double want = -1.0 / (1.0 / alpha + tau / (eta * zeta));
                const double got = strategy::riccati_a(0.0, alpha, eta * zeta, tau);
                worst0 = std::max(worst0, std::abs(got - want) / std::abs(want));
            }
    check.require(worst0 < 1e-8, fmt("phi=0 analytic form: rel err %.3e", worst0));
    check.note(fmt("rel err vs ODE %.2e, phi=0 form %.2e", worst, worst0));
    return check;
}

// ---------------------------------------------------------------------------
// 3. theorem-1 convergence of the piecewise strategies
// ---------------------------------------------------------------------------
Check criterion_piecewise_convergence() {
    Check check;
    const auto params = fig6_params();
    const double z_lo = 1000.0, z_hi = 4000.0;
    const strategy::ClosedFormStrategy closed(params, z_lo, z_hi, {512, 2000});

    auto sup_gap = [&](std::size_t n) {
        const strategy::PiecewiseStrategy pw(
            params, strategy::build_partition(z_lo, z_hi, n, params.kappa), 2000);
        double worst = 0.0;
        for (double t : {0.0, 0.05, 0.09})
            for (double y : {-100.0, 0.0, 100.0})
                for (double s : {1700.0, 2000.0, 2300.0})
                    for (double z = 1050.0; z <= 3950.0; z += 50.0)
                        worst = std::max(worst, std::abs(pw.speed(t, y, z, s) -
                                                         closed.speed(t, y, z, s)));
        return worst;
    };
    const double g10 = sup_gap(10), g100 = sup_gap(100), g1000 = sup_gap(1000);
    check.require(g100 < g10 && g1000 < g100,
                  fmt("sup gaps not decreasing: %.3e, %.3e, %.3e", g10, g100, g1000));

    // max interior jump at a fixed state scales like 1/N
    std::vector<double> log_n, log_jump;
    for (std::size_t n : {10UL, 32UL, 100UL, 316UL, 1000UL}) {
        const strategy::PiecewiseStrategy pw(
            params, strategy::build_partition(z_lo, z_hi, n, params.kappa), 2000);
        double jump = 0.0;
        for (std::size_t j = 1; j < n; ++j)
            jump = std::max(jump, pw.boundary_jump(j, 0.02, 100.0, 2000.0));
        log_n.push_back(std::log(static_cast<double>(n)));
        log_jump.push_back(std::log(jump));
    }
    const double slope = oracles::ls_slope(log_n, log_jump);
    check.require(std::abs(slope + 1.0) <= 0.2, fmt("jump log-log slope %.3f", slope));
    check.note(fmt("gaps %.2e -> %.2e, jump slope %.3f", g10, g1000, slope));
    return check;
}

// ---------------------------------------------------------------------------
// 4. figure-6 scale comparison of the PDE and closed-form speeds
// ---------------------------------------------------------------------------
Check criterion_fig6_reproduction() {
    Check check;
    const auto params = fig6_params();
    const auto grid =
        pde::GridSpec::log_spaced(200, params.T, 1000.0, 4000.0, 201, 1000.0, 4000.0, 201);
    const auto fields = pde::solve_model1(params, grid);
    const strategy::ClosedFormStrategy closed(params, 1000.0, 4000.0);

    for (double y : {-100.0, 0.0, 100.0}) {
        std::vector<double> spread, diff;
        double max_speed = 0.0, max_diag_diff = 0.0;
        for (int i = 0; i < 21; ++i) {
            const double z = 1600.0 + 800.0 * i / 20.0;
            for (int j = 0; j < 21; ++j) {
                const double s = 1600.0 + 800.0 * j / 20.0;
                const double vn = pde::speed_numerical_model1(fields, 0.0, y, z, s);
                const double vc = closed.speed(0.0, y, z, s);
                spread.push_back(std::abs(s - z));
                diff.push_back(std::abs(vn - vc));
                max_speed = std::max({max_speed, std::abs(vn), std::abs(vc)});
                if (i == j) max_diag_diff = std::max(max_diag_diff, std::abs(vn - vc));
            }
        }
        check.require(max_diag_diff <= 0.05 * max_speed,
                      fmt("inventory %+.0f: diff at S=Z %.3e exceeds 5%% of scale %.3e", y,
                          max_diag_diff, max_speed));
        const double rho = oracles::spearman(spread, diff);
        check.require(rho > 0.8, fmt("inventory %+.0f: spearman rho %.3f", y, rho));
        if (y == 100.0) check.note(fmt("scale %.1f, diag diff %.2e", max_speed, max_diag_diff));
    }
    return check;
}

// ---------------------------------------------------------------------------
// 5. a-priori bounds for both models
// ---------------------------------------------------------------------------
Check criterion_apriori_bounds() {
    Check check;

    // Model II solves across parameter sets
    struct M2 {
        double phi, alpha, eta, T, gamma, varsigma;
        std::size_t nt;
    };
    for (const auto& m : {M2{0.05, 10.0, 1.0, 0.5, 0.3, 0.4, 2500},
                          M2{0.005, 5.0, 1.0, 0.1, 0.02, 0.1, 500},
                          M2{0.005, 0.2, 1.0, 0.1, 0.0, 0.0, 2000}}) {
        strategy::ControlParams params;
        params.phi = m.phi;
        params.alpha = m.alpha;
        params.eta = m.eta;
        params.T = m.T;
        params.gamma = m.gamma;
        const auto grid =
            pde::GridSpec::log_spaced(m.nt, m.T, 1000.0, 4000.0, 41, 2.5e6, 4e7, 41);
        const auto fields = pde::solve_model2(params, m.varsigma, grid);

        for (double v : fields.theta1)
            check.require(std::abs(v) <= 1e-12, "model 2 theta1 not identically zero");
        for (double v : fields.theta0)
            check.require(std::abs(v) <= 1e-12, "model 2 theta0 not identically zero");

        const auto report = pde::check_bounds_model2(fields);
        check.require(report.pass, fmt("model 2 bounds violated, worst margin %.3e",
                                       report.worst_margin));
    }

    // Model I envelope at the figure-6 scale
    const auto params = fig6_params();
    const auto grid =
        pde::GridSpec::log_spaced(200, params.T, 1000.0, 4000.0, 101, 1000.0, 4000.0, 101);
    const auto fields = pde::solve_model1(params, grid);
    const auto report = pde::check_bounds_model1(fields, params);
    check.require(report.pass,
                  fmt("model 1 envelope violated, worst margin %.3e", report.worst_margin));

    // Merton coefficients against an RK4 oracle
    const double b = params.beta, phi = params.phi, g2 = params.gamma * params.gamma,
                 s2 = params.sigma * params.sigma;
    auto f = [&](double, const std::vector<double>& y) {
        return std::vector<double>{-s2 * y[0] - b * b / (4.0 * phi) - 0.5 * b * y[1],
                                   b * y[1] + b * b / phi - 4.0 * b * y[2],
                                   -(g2 - 2.0 * b) * y[2] - b * b / (4.0 * phi)};
    };
    std::vector<double> y{0.0, 0.0, 0.0};
    double worst = 0.0;
    for (int k = 20; k-- > 0;) {
        const double t1 = params.T * (k + 1) / 20.0;
        const double t0 = params.T * k / 20.0;
        y = oracles::rk4(f, y, t1, t0, 1000);
        const auto got = pde::merton_bound_coeffs(params, t0);
        worst = std::max({worst, std::abs(got.A - y[0]) / std::abs(y[0]),
                          std::abs(got.B - y[1]) / std::abs(y[1]),
                          std::abs(got.C - y[2]) / std::abs(y[2])});
    }
    check.require(worst < 1e-8, fmt("merton coefficients vs RK4: rel err %.3e", worst));
    check.note(fmt("model 1 worst margin %.3e, merton rel err %.2e", report.worst_margin,
                   worst));
    return check;
}

// ---------------------------------------------------------------------------
// 6. degenerate-diffusion equivalence with the frozen riccati
// ---------------------------------------------------------------------------
Check criterion_degenerate_equivalence() {
    Check check;
    strategy::ControlParams params;
    params.phi = 0.005;
    params.alpha = 0.2;
    params.eta = 1.0;
    params.T = 0.1;
    params.kappa = 1e7;

    const auto grid1 =
        pde::GridSpec::log_spaced(4000, params.T, 1000.0, 4000.0, 201, 1000.0, 4000.0, 3);
    const auto fields1 = pde::solve_model1(params, grid1);
    double worst1 = 0.0;
    for (std::size_t k = 0; k < grid1.times.size(); ++k)
        for (std::size_t i = 0; i < grid1.axis1.size(); ++i) {
            const double z = grid1.axis1[i];
            const double ez = params.eta * z * std::sqrt(z) / params.kappa;
            const double want =
                strategy::riccati_a(params.phi, params.alpha, ez, params.T - grid1.times[k]);
            for (std::size_t j = 0; j < grid1.axis2.size(); ++j)
                worst1 = std::max(worst1,
                                  std::abs(fields1.theta2[fields1.index(k, i, j)] - want));
        }
    check.require(worst1 < 1e-4, fmt("model 1 sup error %.3e", worst1));

    const auto grid2 =
        pde::GridSpec::log_spaced(4000, params.T, 1000.0, 4000.0, 201, 2.5e6, 1e7, 3);
    const auto fields2 = pde::solve_model2(params, 0.0, grid2);
    double worst2 = 0.0;
    for (std::size_t k = 0; k < grid2.times.size(); ++k)
        for (std::size_t i = 0; i < grid2.axis1.size(); ++i)
            for (std::size_t j = 0; j < grid2.axis2.size(); ++j) {
                const double z = grid2.axis1[i];
                const double ez = params.eta * z * std::sqrt(z) / grid2.axis2[j];
                const double want = strategy::riccati_a(params.phi, params.alpha, ez,
                                                        params.T - grid2.times[k]);
                worst2 = std::max(worst2,
                                  std::abs(fields2.theta2[fields2.index(k, i, j)] - want));
            }
    check.require(worst2 < 1e-4, fmt("model 2 sup error %.3e", worst2));
    check.note(fmt("sup errors %.2e / %.2e", worst1, worst2));
    return check;
}

// ---------------------------------------------------------------------------
// 7. estimation recovery at the empirical parameter scale
// ---------------------------------------------------------------------------
Check criterion_estimation_recovery() {
    Check check;
    const double dt = 13.0 / 86400.0;
    const double beta = 657.9, gamma = 0.034, sigma = 0.045;

    struct Est {
        double beta, gamma, sigma;
    };
    const auto results = parallel_seeds(20, [&](std::uint64_t seed) {
        dynamics::Model1Params p{sigma, beta, gamma, 2690.0, 2690.0, dt * 100000.0};
        const auto path = dynamics::simulate_model1(p, dt, seed + 1);
        const auto pool = estimation::estimate_pool_dynamics(path.Z, path.S, dt);
        const auto vol = estimation::estimate_oracle_vol(path.S, dt);
        return Est{pool.beta_hat, pool.gamma_hat, vol.sigma_hat};
    });

    double mb = 0.0, mg = 0.0, ms = 0.0;
    for (const auto& r : results) {
        mb += r.beta;
        mg += r.gamma;
        ms += r.sigma;
    }
    mb /= results.size();
    mg /= results.size();
    ms /= results.size();

    check.require(std::abs(mb - beta) <= 0.10 * beta,
                  fmt("beta recovered %.1f vs %.1f", mb, beta));
    check.require(std::abs(mg - gamma) <= 0.02 * gamma,
                  fmt("gamma recovered %.4f vs %.4f", mg, gamma));
    check.require(std::abs(ms - sigma) <= 0.02 * sigma,
                  fmt("sigma recovered %.4f vs %.4f", ms, sigma));
    check.note(fmt("beta %.1f, gamma %.4f, sigma %.4f", mb, mg, ms));
    return check;
}

// ---------------------------------------------------------------------------
// 8/9. synthetic campaigns
// ---------------------------------------------------------------------------
backtest::CampaignConfig campaign_config() {
    backtest::CampaignConfig cfg;
    cfg.in_sample_days = 1.0;
    cfg.horizon_days = 2.0 / 24.0;
    cfg.shift_days = 2.0 / 24.0;
    cfg.participation = 0.5;
    cfg.phi_liquidation = 0.005; // running penalties from the liquidation table
    cfg.phi_speculative = 0.001;
    cfg.alpha = 10.0;
    cfg.fees = backtest::FeeModel{5.0, 1.0};
    cfg.lattice = {128, 2000};
    return cfg;
}

backtest::WindowResult run_synthetic_window(std::uint64_t seed,
                                            const std::vector<std::string>& strategies) {
    backtest::SyntheticSpec spec;
    spec.market = dynamics::Model1Params{0.045, 657.9, 0.034, 2690.0, 2690.0,
                                         1.0 + 2.0 / 24.0 + 0.01};
    spec.kappa0 = 2.2561783e7;
    spec.trade_interval_s = 13.0;
    spec.order_scale = 30.0;
    spec.seed = seed + 1;
    const auto data = backtest::make_synthetic_model1(spec);

    auto cfg = campaign_config();
    cfg.strategies = strategies;
    const auto in_ms = static_cast<std::int64_t>(cfg.in_sample_days * 86400.0 * 1000.0);
    const auto hz_ms = static_cast<std::int64_t>(cfg.horizon_days * 86400.0 * 1000.0);
    return backtest::run_window(data, backtest::Window{0, in_ms},
                                backtest::Window{in_ms, in_ms + hz_ms}, cfg);
}

struct GapStats {
    double mean = 0.0;
    double se = 0.0;
};

GapStats paired_gap(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return {oracles::mean(d), oracles::standard_error(d)};
}

Check criterion_strategy_ordering() {
    Check check;
    const std::size_t n = 200;
    const auto windows = parallel_seeds(n, [&](std::uint64_t seed) {
        return run_synthetic_window(seed, {"liquidation", "twap", "single_order"});
    });

    std::vector<double> cf, twap, single;
    std::size_t skipped = 0;
    for (const auto& w : windows) {
        if (w.skipped) {
            ++skipped;
            continue;
        }
        cf.push_back(w.reports.at("liquidation").gross_pnl);
        twap.push_back(w.reports.at("twap").gross_pnl);
        single.push_back(w.reports.at("single_order").gross_pnl);
    }
    check.require(skipped == 0, fmt("%g synthetic windows skipped", (double)skipped));
    if (!check.ok) return check;

    const auto g1 = paired_gap(cf, twap);
    const auto g2 = paired_gap(twap, single);
    check.require(g1.mean > 0.0 && g1.mean >= 2.0 * g1.se,
                  fmt("closed-form vs TWAP gap %.1f (se %.1f)", g1.mean, g1.se));
    check.require(g2.mean > 0.0 && g2.mean >= 2.0 * g2.se,
                  fmt("TWAP vs single-order gap %.1f (se %.1f)", g2.mean, g2.se));
    check.note(fmt("mean gross: cf-twap %+.0f (se %.0f), twap-single %+.0f", g1.mean, g1.se,
                   g2.mean));
    return check;
}

Check criterion_speculative_sign() {
    Check check;
    const std::size_t n = 200;
    const auto windows = parallel_seeds(
        n, [&](std::uint64_t seed) { return run_synthetic_window(seed, {"speculative"}); });

    std::vector<double> pnl;
    std::size_t skipped = 0;
    for (const auto& w : windows) {
        if (w.skipped) {
            ++skipped;
            continue;
        }
        pnl.push_back(w.reports.at("speculative").gross_pnl);
    }
    check.require(skipped == 0, fmt("%g synthetic windows skipped", (double)skipped));
    if (!check.ok) return check;

    const double m = oracles::mean(pnl);
    const double se = oracles::standard_error(pnl);
    check.require(m > 0.0 && m >= 2.0 * se,
                  fmt("speculative mean gross %.1f (se %.1f)", m, se));
    check.note(fmt("mean gross %+.0f, se %.0f over %g windows", m, se, (double)pnl.size()));
    return check;
}

// ---------------------------------------------------------------------------
// 10. replay integrity
// ---------------------------------------------------------------------------
Check criterion_replay_integrity() {
    Check check;

    // accounting identity and determinism on a synthetic liquidation
    {
        backtest::SyntheticSpec spec;
        spec.market = dynamics::Model1Params{0.045, 657.9, 0.034, 2690.0, 2690.0, 0.1};
        spec.kappa0 = 2.2561783e7;
        spec.order_scale = 30.0;
        spec.seed = 99;
        const auto data = backtest::make_synthetic_model1(spec);
        const backtest::Window w{0, static_cast<std::int64_t>(2.0 / 24.0 * 86400000.0)};

        backtest::StrategyRunConfig cfg;
        cfg.control.phi = 0.005;
        cfg.control.alpha = 10.0;
        cfg.control.eta = 1.5046e-4;
        cfg.control.T = w.days();
        cfg.control.beta = 657.9;
        cfg.control.gamma = 0.034;
        cfg.control.sigma = 0.045;
        cfg.control.kappa = spec.kappa0;
        cfg.y0 = 9000.0;
        cfg.lattice = {128, 2000};

        const auto a = backtest::run_liquidation(data, w, cfg, backtest::FeeModel{5.0, 1.0});
        const auto b = backtest::run_liquidation(data, w, cfg, backtest::FeeModel{5.0, 1.0});
        check.require(std::abs(a.recompute_gross() - a.gross_pnl) <= 1e-9 *
                          std::max(1.0, std::abs(a.gross_pnl)),
                      "accounting identity violated");
        check.require(a.to_json().dump() == b.to_json().dump(), "replay not deterministic");
        check.require(a.net_pnl <= a.gross_pnl, "fees increased the PnL");
    }

    // no-trade invariance: zero-speed strategy marks to market exactly
    {
        backtest::EventDataset ds;
        for (int i = 0; i <= 30; ++i) {
            backtest::SwapEvent e;
            e.timestamp_ms = i * 1000;
            e.rate = 2000.0 + 2.5 * i;
            e.delta_y = 1.0;
            e.delta_x = -e.rate;
            e.depth = 1e7;
            e.has_depth = true;
            ds.swaps.push_back(e);
            ds.oracle.push_back(backtest::OracleTick{e.timestamp_ms, e.rate});
        }
        backtest::StrategyRunConfig cfg;
        cfg.control.alpha = 0.0;
        cfg.control.phi = 0.0;
        cfg.control.eta = 1.1574e-5;
        cfg.control.T = backtest::Window{0, 30000}.days();
        cfg.control.beta = 50.0;
        cfg.control.kappa = 1e7;
        cfg.y0 = 300.0;
        cfg.lattice = {64, 500};
        const auto r =
            backtest::run_liquidation(ds, backtest::Window{0, 30000}, cfg, backtest::FeeModel{});
        check.require(r.trade_count == 0, "zero-speed strategy still traded");
        check.require(r.gross_pnl == 300.0 * (r.z_terminal - r.z0),
                      "no-trade PnL is not pure mark-to-market");
    }

    // tick-walk equals the micro-step replay over randomized profiles
    {
        Philox rng(777, 0);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n_ranges = 2 + static_cast<std::size_t>(rng.uniform() * 5);
            std::vector<double> boundaries{40.0 + 60.0 * rng.uniform()};
            for (std::size_t r = 0; r < n_ranges; ++r)
                boundaries.push_back(boundaries.back() * (1.15 + 0.7 * rng.uniform()));
            std::vector<double> depths;
            for (std::size_t r = 0; r < n_ranges; ++r)
                depths.push_back(1500.0 + 9000.0 * rng.uniform());
            const cpmm::LiquidityProfile profile(boundaries, depths);

            const double z0 =
                boundaries.front() * 1.05 +
                (boundaries.back() * 0.95 - boundaries.front() * 1.05) * rng.uniform();
            const bool sell = rng.uniform() < 0.5;
            const double z_stop =
                sell ? boundaries.front() * 1.01 : boundaries.back() * 0.99;

            // directional capacity, summed range by range
            double cap = 0.0;
            {
                std::size_t idx = profile.range_index(z0);
                double z_cur = z0;
                while (true) {
                    const double z_next =
                        sell ? std::max(boundaries[idx], z_stop)
                             : std::min(boundaries[idx + 1], z_stop);
                    cap += depths[idx] * (1.0 / std::sqrt(z_next) - 1.0 / std::sqrt(z_cur));
                    if (z_next == z_stop || (sell && idx == 0) ||
                        (!sell && idx + 1 == profile.num_ranges()))
                        break;
                    z_cur = z_next;
                    idx += sell ? -1 : 1;
                }
            }
            const double dy = cap * (0.95 * rng.uniform());
            if (std::abs(dy) < 1e-9) continue;

            const auto [rate_after, dx] = cpmm::swap_across_ticks(profile, z0, dy);
            const auto oracle = oracles::micro_swap_replay(boundaries, depths, z0, dy, 100000);
            worst = std::max(worst, std::abs(dx - oracle.delta_x) / std::abs(oracle.delta_x));
            worst = std::max(worst, std::abs(rate_after - oracle.rate_after) /
                                        oracle.rate_after);
        }
        check.require(worst < 1e-8, fmt("micro-step mismatch %.3e", worst));
        check.note(fmt("tick-walk vs micro replay worst rel err %.2e", worst));
    }
    return check;
}

struct Criterion {
    int id;
    const char* name;
    Check (*run)();
};

const Criterion kCriteria[] = {
    {1, "convexity identity", criterion_convexity_identity},
    {2, "riccati closed form vs adaptive ODE", criterion_riccati_oracle},
    {3, "piecewise-strategy convergence", criterion_piecewise_convergence},
    {4, "figure-6 scale speed comparison", criterion_fig6_reproduction},
    {5, "a-priori bounds with merton cross-check", criterion_apriori_bounds},
    {6, "degenerate-diffusion equivalence", criterion_degenerate_equivalence},
    {7, "estimation recovery", criterion_estimation_recovery},
    {8, "strategy ordering on synthetic campaigns", criterion_strategy_ordering},
    {9, "speculative sign on synthetic campaigns", criterion_speculative_sign},
    {10, "replay integrity", criterion_replay_integrity},
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::strcmp(argv[i], "--criterion") == 0) only = std::atoi(argv[i + 1]);

    bool all_ok = true;
    for (const auto& c : kCriteria) {
        if (only != 0 && c.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Check check;
        try {
            check = c.run();
        } catch (const std::exception& e) {
            check.ok = false;
            check.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %2d: %s (%s; %.1f s)\n", check.ok ? "PASS" : "FAIL", c.id,
                    c.name, check.detail.c_str(), secs);
        std::fflush(stdout);
        all_ok = all_ok && check.ok;
    }
    return all_ok ? 0 : 1;
}
