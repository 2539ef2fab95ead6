"""End-to-end smoke tests for the python bindings."""

import math

import pytest

import ammlab


def test_pool_mechanics_round_trip():
    pool = ammlab.PoolState.from_reserves(2000.0, 500.0)
    assert pool.kappa == pytest.approx(1000.0)
    assert ammlab.instantaneous_rate(pool) == pytest.approx(4.0)

    after, fill = ammlab.apply_swap(pool, 500.0)
    assert after.y == pytest.approx(1000.0)
    assert fill.exec_rate == pytest.approx(2.0)
    assert fill.rate_after == pytest.approx(1.0)

    back, _ = ammlab.apply_swap(after, -500.0)
    assert back.x == pytest.approx(pool.x, rel=1e-12)

    with pytest.raises(ammlab.PoolDrainError):
        ammlab.apply_swap(pool, -500.0)


def test_concentrated_liquidity_walk():
    profile = ammlab.LiquidityProfile([100.0, 200.0, 300.0], [4000.0, 4000.0])
    rate_after, dx = ammlab.swap_across_ticks(profile, 250.0, 5.0)
    assert rate_after < 250.0
    assert dx > 0.0

    with pytest.raises(ammlab.LiquidityExhaustedError):
        ammlab.swap_across_ticks(profile, 250.0, 1e9)


def test_simulation_is_deterministic():
    params = ammlab.Model1Params(sigma=0.045, beta=657.9, gamma=0.034,
                                 S0=2690.0, Z0=2690.0, T=0.01)
    a = ammlab.simulate_model1(params, 1e-5, 7)
    b = ammlab.simulate_model1(params, 1e-5, 7)
    c = ammlab.simulate_model1(params, 1e-5, 8)
    assert a.Z == b.Z
    assert a.Z != c.Z
    assert min(a.Z) > 0.0

    expected = ammlab.expected_terminal_rate(2000.0, 2100.0, 1.0, 0.0, 0.1)
    assert expected == pytest.approx(2009.516, abs=1e-3)


def test_closed_form_strategy_signs():
    params = ammlab.ControlParams(phi=1e-5, alpha=5.0, eta=1.0, T=0.1,
                                  beta=1.0, gamma=0.02, sigma=0.03, kappa=1e7)
    assert ammlab.riccati_a(params.phi, params.alpha, 8.9e-3, 0.0) == pytest.approx(-5.0)

    cfg = ammlab.ClosedFormConfig()
    cfg.lattice_nodes = 64
    cfg.time_steps = 500
    strat = ammlab.ClosedFormStrategy(params, 1000.0, 4000.0, cfg)
    assert strat.speed(0.0, 0.0, 2000.0, 2000.0) == 0.0
    assert strat.speed(0.0, 0.0, 2000.0, 2100.0) < 0.0  # buys when the oracle is rich
    assert strat.speed(0.0, 100.0, 2000.0, 2000.0) > 0.0  # sells down inventory


def test_pde_solver_and_bounds():
    params = ammlab.ControlParams(phi=0.01, alpha=5.0, eta=1.0, T=0.1,
                                  beta=0.0, gamma=0.2, sigma=0.0, kappa=1e7)
    grid = ammlab.GridSpec.log_spaced(100, 0.1, 1000.0, 4000.0, 21, 2.5e6, 1e7, 11)
    fields = ammlab.solve_model2(params, 0.3, grid)
    report = ammlab.check_bounds_model2(fields)
    assert report.pass_
    assert max(abs(v) for v in fields.theta1) <= 1e-12
    nu = ammlab.speed_model2(fields, 0.05, 100.0, 2000.0, 5e6)
    assert nu > 0.0


def test_estimation_recovers_simulated_parameters():
    dt = 13.0 / 86400.0
    params = ammlab.Model1Params(sigma=0.045, beta=657.9, gamma=0.034,
                                 S0=2690.0, Z0=2690.0, T=dt * 20000)
    path = ammlab.simulate_model1(params, dt, 3)
    pool = ammlab.estimate_pool_dynamics(path.Z, path.S, dt)
    vol = ammlab.estimate_oracle_vol(path.S, dt)
    assert pool.beta_defined
    assert pool.beta_hat == pytest.approx(657.9, rel=0.15)
    assert vol.sigma_hat == pytest.approx(0.045, rel=0.05)
    assert ammlab.size_inventory(4031.0, 1.0, 0.5, 0.5) == pytest.approx(1007.75)


def test_backtest_replay():
    spec = ammlab.SyntheticSpec()
    spec.market = ammlab.Model1Params(sigma=0.045, beta=657.9, gamma=0.034,
                                      S0=2690.0, Z0=2690.0, T=0.05)
    spec.kappa0 = 2.2561783e7
    spec.order_scale = 30.0
    spec.seed = 11
    data = ammlab.make_synthetic_model1(spec)

    window = ammlab.Window(0, int(0.04 * 86400 * 1000))
    fees = ammlab.FeeModel(5.0, 1.0)

    twap = ammlab.run_twap(data, window, 2000.0, fees)
    assert twap.trade_count > 0
    assert twap.recompute_gross() == pytest.approx(twap.gross_pnl, abs=1e-6)
    assert twap.net_pnl <= twap.gross_pnl

    single = ammlab.run_single_order(data, window, 2000.0, fees)
    assert single.trade_count == 1

    cfg = ammlab.StrategyRunConfig()
    cfg.control = ammlab.ControlParams(phi=0.005, alpha=10.0, eta=1.5046e-4,
                                       T=window.days(), beta=657.9, gamma=0.034,
                                       sigma=0.045, kappa=spec.kappa0)
    cfg.y0 = 2000.0
    report = ammlab.run_liquidation(data, window, cfg, fees)
    assert abs(report.terminal_inventory()) <= 1e-3 * cfg.y0
    assert math.isfinite(report.gross_pnl)
