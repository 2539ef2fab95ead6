#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ammlab/backtest.hpp"
#include "ammlab/cpmm.hpp"
#include "ammlab/dynamics.hpp"
#include "ammlab/estimation.hpp"
#include "ammlab/pde.hpp"
#include "ammlab/strategy.hpp"
#include "ammlab/synthetic.hpp"

namespace py = pybind11;

using namespace amm;

PYBIND11_MODULE(_ammlab, m) {
    m.doc() = "constant-product AMM execution laboratory";

    // ---- pool mechanics ----
    py::register_exception<cpmm::PoolDrainError>(m, "PoolDrainError");
    py::register_exception<cpmm::RateOutOfRangeError>(m, "RateOutOfRangeError");
    py::register_exception<cpmm::LiquidityExhaustedError>(m, "LiquidityExhaustedError");
    py::register_exception<cpmm::ZeroDepthRangeError>(m, "ZeroDepthRangeError");

    py::class_<cpmm::PoolState>(m, "PoolState")
        .def(py::init(&cpmm::PoolState::from_reserves), py::arg("x"), py::arg("y"))
        .def_static("from_reserves", &cpmm::PoolState::from_reserves)
        .def_static("from_rate_depth", &cpmm::PoolState::from_rate_depth)
        .def_readonly("x", &cpmm::PoolState::x)
        .def_readonly("y", &cpmm::PoolState::y)
        .def_readonly("kappa", &cpmm::PoolState::kappa)
        .def("validate", &cpmm::PoolState::validate);

    py::class_<cpmm::SwapFill>(m, "SwapFill")
        .def_readonly("delta_y", &cpmm::SwapFill::delta_y)
        .def_readonly("delta_x", &cpmm::SwapFill::delta_x)
        .def_readonly("exec_rate", &cpmm::SwapFill::exec_rate)
        .def_readonly("rate_after", &cpmm::SwapFill::rate_after);

    py::class_<cpmm::LiquidityProfile>(m, "LiquidityProfile")
        .def(py::init<std::vector<double>, std::vector<double>>(),
             py::arg("boundaries"), py::arg("depths"))
        .def_readonly("boundaries", &cpmm::LiquidityProfile::boundaries)
        .def_readonly("depths", &cpmm::LiquidityProfile::depths)
        .def("range_index", &cpmm::LiquidityProfile::range_index);

    m.def("instantaneous_rate", &cpmm::instantaneous_rate);
    m.def("execution_rate_exact", &cpmm::execution_rate_exact);
    m.def("unitary_execution_cost_exact", &cpmm::unitary_execution_cost_exact);
    m.def("execution_cost_approx", &cpmm::execution_cost_approx);
    m.def("execution_rate_with_speed", &cpmm::execution_rate_with_speed);
    m.def("apply_swap", &cpmm::apply_swap);
    m.def("apply_liquidity_change", &cpmm::apply_liquidity_change);
    m.def("level_function_cl", &cpmm::level_function_cl);
    m.def("swap_across_ticks", &cpmm::swap_across_ticks);

    // ---- dynamics ----
    py::register_exception<dynamics::StepTooCoarseError>(m, "StepTooCoarseError");

    py::class_<dynamics::Model1Params>(m, "Model1Params")
        .def(py::init([](double sigma, double beta, double gamma, double S0, double Z0,
                         double T) {
                 return dynamics::Model1Params{sigma, beta, gamma, S0, Z0, T};
             }),
             py::arg("sigma"), py::arg("beta"), py::arg("gamma"), py::arg("S0"),
             py::arg("Z0"), py::arg("T"))
        .def_readwrite("sigma", &dynamics::Model1Params::sigma)
        .def_readwrite("beta", &dynamics::Model1Params::beta)
        .def_readwrite("gamma", &dynamics::Model1Params::gamma)
        .def_readwrite("S0", &dynamics::Model1Params::S0)
        .def_readwrite("Z0", &dynamics::Model1Params::Z0)
        .def_readwrite("T", &dynamics::Model1Params::T);

    py::class_<dynamics::Model2Params>(m, "Model2Params")
        .def(py::init([](double gamma, double varsigma, double Z0, double kappa0, double T) {
                 return dynamics::Model2Params{gamma, varsigma, Z0, kappa0, T};
             }),
             py::arg("gamma"), py::arg("varsigma"), py::arg("Z0"), py::arg("kappa0"),
             py::arg("T"))
        .def_readwrite("gamma", &dynamics::Model2Params::gamma)
        .def_readwrite("varsigma", &dynamics::Model2Params::varsigma)
        .def_readwrite("Z0", &dynamics::Model2Params::Z0)
        .def_readwrite("kappa0", &dynamics::Model2Params::kappa0)
        .def_readwrite("T", &dynamics::Model2Params::T);

    py::class_<dynamics::MarketPath>(m, "MarketPath")
        .def_readonly("times", &dynamics::MarketPath::times)
        .def_readonly("S", &dynamics::MarketPath::S)
        .def_readonly("Z", &dynamics::MarketPath::Z)
        .def_readonly("kappa", &dynamics::MarketPath::kappa)
        .def("__len__", &dynamics::MarketPath::size);

    m.def("simulate_model1", &dynamics::simulate_model1, py::arg("params"), py::arg("dt"),
          py::arg("seed"), py::arg("kappa_const") = 0.0);
    m.def("simulate_model2", &dynamics::simulate_model2, py::arg("params"), py::arg("dt"),
          py::arg("seed"));
    m.def("expected_terminal_rate", &dynamics::expected_terminal_rate);
    m.def("write_path_csv", &dynamics::write_path_csv, py::arg("path"), py::arg("file"),
          py::arg("comment") = "");
    m.def("read_path_csv", &dynamics::read_path_csv);

    // ---- closed-form strategies ----
    py::class_<strategy::ControlParams>(m, "ControlParams")
        .def(py::init([](double phi, double alpha, double eta, double T, double beta,
                         double gamma, double sigma, double kappa) {
                 return strategy::ControlParams{phi, alpha, eta, T, beta, gamma, sigma, kappa};
             }),
             py::arg("phi"), py::arg("alpha"), py::arg("eta"), py::arg("T"),
             py::arg("beta") = 0.0, py::arg("gamma") = 0.0, py::arg("sigma") = 0.0,
             py::arg("kappa") = 1.0)
        .def_readwrite("phi", &strategy::ControlParams::phi)
        .def_readwrite("alpha", &strategy::ControlParams::alpha)
        .def_readwrite("eta", &strategy::ControlParams::eta)
        .def_readwrite("T", &strategy::ControlParams::T)
        .def_readwrite("beta", &strategy::ControlParams::beta)
        .def_readwrite("gamma", &strategy::ControlParams::gamma)
        .def_readwrite("sigma", &strategy::ControlParams::sigma)
        .def_readwrite("kappa", &strategy::ControlParams::kappa);

    m.def("riccati_a", &strategy::riccati_a, py::arg("phi"), py::arg("alpha"),
          py::arg("eta_zeta"), py::arg("time_to_go"));

    py::class_<strategy::CoefficientTable>(m, "CoefficientTable")
        .def_readonly("zeta", &strategy::CoefficientTable::zeta)
        .def_readonly("times", &strategy::CoefficientTable::times)
        .def_readonly("A", &strategy::CoefficientTable::A)
        .def_readonly("B", &strategy::CoefficientTable::B)
        .def_readonly("E", &strategy::CoefficientTable::E)
        .def_readonly("F", &strategy::CoefficientTable::F)
        .def_readonly("G", &strategy::CoefficientTable::G)
        .def("a", &strategy::CoefficientTable::a)
        .def("b", &strategy::CoefficientTable::b)
        .def("write_csv", &strategy::CoefficientTable::write_csv, py::arg("file"),
             py::arg("comment") = "");

    m.def("uniform_grid", &strategy::uniform_grid);
    m.def("solve_constant_zeta", &strategy::solve_constant_zeta);
    m.def("speed_constant_zeta", &strategy::speed_constant_zeta);

    py::class_<strategy::RatePartition>(m, "RatePartition")
        .def_readonly("z_lo", &strategy::RatePartition::z_lo)
        .def_readonly("z_hi", &strategy::RatePartition::z_hi)
        .def_readonly("segments", &strategy::RatePartition::segments)
        .def_readonly("nodes", &strategy::RatePartition::nodes)
        .def_readonly("zetas", &strategy::RatePartition::zetas);

    m.def("build_partition", &strategy::build_partition);

    py::class_<strategy::PiecewiseStrategy>(m, "PiecewiseStrategy")
        .def(py::init<const strategy::ControlParams&, const strategy::RatePartition&,
                      std::size_t>(),
             py::arg("params"), py::arg("partition"), py::arg("time_steps") = 10000)
        .def("speed", &strategy::PiecewiseStrategy::speed)
        .def("boundary_jump", &strategy::PiecewiseStrategy::boundary_jump);

    py::class_<strategy::ClosedFormStrategy::Config>(m, "ClosedFormConfig")
        .def(py::init<>())
        .def_readwrite("lattice_nodes", &strategy::ClosedFormStrategy::Config::lattice_nodes)
        .def_readwrite("time_steps", &strategy::ClosedFormStrategy::Config::time_steps);

    py::class_<strategy::ClosedFormStrategy>(m, "ClosedFormStrategy")
        .def(py::init<const strategy::ControlParams&, double, double,
                      strategy::ClosedFormStrategy::Config>(),
             py::arg("params"), py::arg("z_lo"), py::arg("z_hi"),
             py::arg("config") = strategy::ClosedFormStrategy::Config{})
        .def("speed", &strategy::ClosedFormStrategy::speed);

    m.def("speed_closed_form_exact", &strategy::speed_closed_form_exact, py::arg("params"),
          py::arg("t"), py::arg("inventory"), py::arg("Z"), py::arg("S"),
          py::arg("time_steps") = 10000);

    // ---- PDE engine ----
    py::register_exception<pde::PicardError>(m, "PicardError");
    py::register_exception<pde::StepInstabilityError>(m, "StepInstabilityError");

    py::class_<pde::GridSpec>(m, "GridSpec")
        .def_static("log_spaced", &pde::GridSpec::log_spaced, py::arg("n_t"), py::arg("T"),
                    py::arg("z_lo"), py::arg("z_hi"), py::arg("n_z"), py::arg("a_lo"),
                    py::arg("a_hi"), py::arg("n_a"))
        .def_readwrite("times", &pde::GridSpec::times)
        .def_readwrite("axis1", &pde::GridSpec::axis1)
        .def_readwrite("axis2", &pde::GridSpec::axis2);

    py::class_<pde::PicardConfig>(m, "PicardConfig")
        .def(py::init<>())
        .def_readwrite("max_iterations", &pde::PicardConfig::max_iterations)
        .def_readwrite("tolerance", &pde::PicardConfig::tolerance)
        .def_readwrite("damping", &pde::PicardConfig::damping);

    py::class_<pde::SolvedFields>(m, "SolvedFields")
        .def_readonly("theta0", &pde::SolvedFields::theta0)
        .def_readonly("theta1", &pde::SolvedFields::theta1)
        .def_readonly("theta2", &pde::SolvedFields::theta2)
        .def_readonly("grid", &pde::SolvedFields::grid)
        .def("write_bundle", &pde::SolvedFields::write_bundle, py::arg("dir"),
             py::arg("t_stride") = 1, py::arg("comment") = "")
        .def_static("read_bundle", &pde::SolvedFields::read_bundle);

    m.def("solve_model1", &pde::solve_model1, py::arg("params"), py::arg("grid"),
          py::arg("config") = pde::PicardConfig{});
    m.def("solve_model2", &pde::solve_model2, py::arg("params"), py::arg("varsigma"),
          py::arg("grid"), py::arg("config") = pde::PicardConfig{});
    m.def("speed_numerical_model1", &pde::speed_numerical_model1);
    m.def("speed_model2", &pde::speed_model2);

    py::class_<pde::MertonCoeffs>(m, "MertonCoeffs")
        .def_readonly("A", &pde::MertonCoeffs::A)
        .def_readonly("B", &pde::MertonCoeffs::B)
        .def_readonly("C", &pde::MertonCoeffs::C);

    m.def("merton_bound_coeffs", &pde::merton_bound_coeffs);

    py::class_<pde::FieldBoundCheck>(m, "FieldBoundCheck")
        .def_readonly("field", &pde::FieldBoundCheck::field)
        .def_readonly("min_margin", &pde::FieldBoundCheck::min_margin)
        .def_readonly("violations", &pde::FieldBoundCheck::violations);

    py::class_<pde::BoundReport>(m, "BoundReport")
        .def_readonly("pass_", &pde::BoundReport::pass)
        .def_readonly("worst_margin", &pde::BoundReport::worst_margin)
        .def_readonly("checks", &pde::BoundReport::checks);

    m.def("check_bounds_model1", &pde::check_bounds_model1);
    m.def("check_bounds_model2", &pde::check_bounds_model2);

    // ---- estimation ----
    py::class_<estimation::VolEstimate>(m, "VolEstimate")
        .def_readonly("sigma_hat", &estimation::VolEstimate::sigma_hat)
        .def_readonly("std_error", &estimation::VolEstimate::std_error)
        .def_readonly("increments", &estimation::VolEstimate::increments);

    py::class_<estimation::PoolDynEstimate>(m, "PoolDynEstimate")
        .def_readonly("beta_hat", &estimation::PoolDynEstimate::beta_hat)
        .def_readonly("gamma_hat", &estimation::PoolDynEstimate::gamma_hat)
        .def_readonly("beta_se", &estimation::PoolDynEstimate::beta_se)
        .def_readonly("gamma_se", &estimation::PoolDynEstimate::gamma_se)
        .def_readonly("beta_defined", &estimation::PoolDynEstimate::beta_defined);

    py::class_<estimation::ExecutionCalibration>(m, "ExecutionCalibration")
        .def_readonly("dt_bar", &estimation::ExecutionCalibration::dt_bar)
        .def_readonly("eta", &estimation::ExecutionCalibration::eta)
        .def_readonly("kappa0", &estimation::ExecutionCalibration::kappa0)
        .def_readonly("trades", &estimation::ExecutionCalibration::trades);

    m.def("estimate_oracle_vol",
          [](const std::vector<double>& S, double dt) {
              return estimation::estimate_oracle_vol(S, dt);
          });
    m.def("estimate_pool_dynamics",
          [](const std::vector<double>& Z, const std::vector<double>& S, double dt) {
              return estimation::estimate_pool_dynamics(Z, S, dt);
          });
    m.def("calibrate_execution",
          [](const std::vector<std::int64_t>& ts, const std::vector<double>& depths) {
              return estimation::calibrate_execution(ts, depths);
          });
    m.def("size_inventory", &estimation::size_inventory);

    // ---- backtest ----
    py::register_exception<backtest::ReplayError>(m, "ReplayError");
    py::register_exception<backtest::DepthUnderflowError>(m, "DepthUnderflowError");

    py::class_<backtest::FeeModel>(m, "FeeModel")
        .def(py::init<>())
        .def(py::init([](double gas, double bps) {
                 return backtest::FeeModel{gas, bps};
             }),
             py::arg("gas_per_tx"), py::arg("amm_fee_bps"))
        .def_readwrite("gas_per_tx", &backtest::FeeModel::gas_per_tx)
        .def_readwrite("amm_fee_bps", &backtest::FeeModel::amm_fee_bps);

    py::class_<backtest::Window>(m, "Window")
        .def(py::init([](std::int64_t a, std::int64_t b) {
                 return backtest::Window{a, b};
             }),
             py::arg("start_ms"), py::arg("end_ms"))
        .def_readwrite("start_ms", &backtest::Window::start_ms)
        .def_readwrite("end_ms", &backtest::Window::end_ms)
        .def("days", &backtest::Window::days);

    py::class_<backtest::Fill>(m, "Fill")
        .def_readonly("timestamp_ms", &backtest::Fill::timestamp_ms)
        .def_readonly("delta_y", &backtest::Fill::delta_y)
        .def_readonly("exec_rate", &backtest::Fill::exec_rate)
        .def_readonly("gas_fee", &backtest::Fill::gas_fee)
        .def_readonly("amm_fee", &backtest::Fill::amm_fee);

    py::class_<backtest::ExecutionReport>(m, "ExecutionReport")
        .def_readonly("strategy", &backtest::ExecutionReport::strategy)
        .def_readonly("y0", &backtest::ExecutionReport::y0)
        .def_readonly("z0", &backtest::ExecutionReport::z0)
        .def_readonly("z_terminal", &backtest::ExecutionReport::z_terminal)
        .def_readonly("fills", &backtest::ExecutionReport::fills)
        .def_readonly("gross_pnl", &backtest::ExecutionReport::gross_pnl)
        .def_readonly("net_pnl", &backtest::ExecutionReport::net_pnl)
        .def_readonly("gas_total", &backtest::ExecutionReport::gas_total)
        .def_readonly("amm_total", &backtest::ExecutionReport::amm_total)
        .def_readonly("trade_count", &backtest::ExecutionReport::trade_count)
        .def("terminal_inventory", &backtest::ExecutionReport::terminal_inventory)
        .def("recompute_gross", &backtest::ExecutionReport::recompute_gross)
        .def("to_json", [](const backtest::ExecutionReport& r) { return r.to_json().dump(); });

    py::class_<backtest::SwapEvent>(m, "SwapEvent")
        .def_readonly("timestamp_ms", &backtest::SwapEvent::timestamp_ms)
        .def_readonly("delta_y", &backtest::SwapEvent::delta_y)
        .def_readonly("rate", &backtest::SwapEvent::rate)
        .def_readonly("depth", &backtest::SwapEvent::depth);

    py::class_<backtest::EventDataset>(m, "EventDataset")
        .def_readonly("swaps", &backtest::EventDataset::swaps)
        .def_readonly("oracle", &backtest::EventDataset::oracle);

    m.def("load_events", &backtest::load_events, py::arg("swaps_csv"), py::arg("lp_csv") = "",
          py::arg("oracle_csv") = "");

    py::class_<backtest::StrategyRunConfig>(m, "StrategyRunConfig")
        .def(py::init<>())
        .def_readwrite("control", &backtest::StrategyRunConfig::control)
        .def_readwrite("y0", &backtest::StrategyRunConfig::y0)
        .def_readwrite("min_trade", &backtest::StrategyRunConfig::min_trade)
        .def_readwrite("bracket_lo", &backtest::StrategyRunConfig::bracket_lo)
        .def_readwrite("bracket_hi", &backtest::StrategyRunConfig::bracket_hi);

    m.def("run_liquidation", &backtest::run_liquidation);
    m.def("run_speculative", &backtest::run_speculative);
    m.def("run_twap", &backtest::run_twap, py::arg("data"), py::arg("window"), py::arg("y0"),
          py::arg("fees"), py::arg("min_trade") = 1e-6, py::arg("fallback_kappa") = 0.0);
    m.def("run_single_order", &backtest::run_single_order, py::arg("data"), py::arg("window"),
          py::arg("y0"), py::arg("fees"), py::arg("fallback_kappa") = 0.0);

    py::class_<backtest::SyntheticSpec>(m, "SyntheticSpec")
        .def(py::init<>())
        .def_readwrite("market", &backtest::SyntheticSpec::market)
        .def_readwrite("kappa0", &backtest::SyntheticSpec::kappa0)
        .def_readwrite("start_ms", &backtest::SyntheticSpec::start_ms)
        .def_readwrite("trade_interval_s", &backtest::SyntheticSpec::trade_interval_s)
        .def_readwrite("order_scale", &backtest::SyntheticSpec::order_scale)
        .def_readwrite("seed", &backtest::SyntheticSpec::seed);

    m.def("make_synthetic_model1", &backtest::make_synthetic_model1);
    m.def("write_events_csv", &backtest::write_events_csv);
}
