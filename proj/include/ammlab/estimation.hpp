#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace amm::estimation {

struct VolEstimate {
    double sigma_hat = 0.0;       // day^-1/2
    double std_error = 0.0;
    double implied_intercept = 0.0;      // -sigma_hat^2 dt / 2
    double realized_mean_increment = 0.0; // mean of dlog S, diagnostic
    std::size_t increments = 0;
};

// sigma from the sample dispersion of dlog S over a uniform step dt (days);
// needs at least 30 increments.
VolEstimate estimate_oracle_vol(std::span<const double> S, double dt);
VolEstimate estimate_oracle_vol(std::span<const double> S, std::span<const double> dts);

struct PoolDynEstimate {
    double beta_hat = 0.0;   // day^-1
    double gamma_hat = 0.0;  // day^-1/2
    double beta_se = 0.0;
    double gamma_se = 0.0;
    double intercept = 0.0;           // fitted, free
    double implied_intercept = 0.0;   // -gamma_hat^2 dt / 2, specification diagnostic
    bool beta_defined = true;         // false when S == Z throughout
    std::size_t increments = 0;
};

// OLS of dlog Z on ((S-Z)/Z) dt with a free intercept; gamma from the
// residual dispersion.
PoolDynEstimate estimate_pool_dynamics(std::span<const double> Z, std::span<const double> S,
                                       double dt);
PoolDynEstimate estimate_pool_dynamics(std::span<const double> Z, std::span<const double> S,
                                       std::span<const double> dts);

struct ExecutionCalibration {
    double dt_bar = 0.0;   // mean inter-trade interval, days
    double eta = 0.0;      // execution-cost scale, = dt_bar
    double kappa0 = 0.0;   // last observed depth
    std::size_t trades = 0;
};

ExecutionCalibration calibrate_execution(std::span<const std::int64_t> trade_ts_ms,
                                         std::span<const double> depths);

// y0 = participation * volume * horizon / span
double size_inventory(double in_sample_volume, double in_sample_span_days,
                      double horizon_days, double participation);

// One in-sample window, bundled for the backtester and the CLI.
struct EstimationResult {
    VolEstimate oracle;
    PoolDynEstimate pool;
    ExecutionCalibration execution;
    std::int64_t window_start_ms = 0;
    std::int64_t window_end_ms = 0;

    nlohmann::json to_json() const;
};

} // namespace amm::estimation
