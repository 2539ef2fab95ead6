#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace amm::dynamics {

// Euler step of the pool rate went non-positive; refine dt.
struct StepTooCoarseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Oracle + mean-reverting pool rate (constant depth).
struct Model1Params {
    double sigma = 0.0;  // oracle volatility, day^-1/2
    double beta = 0.0;   // mean-reversion speed, day^-1
    double gamma = 0.0;  // pool-rate dispersion, day^-1/2
    double S0 = 0.0;
    double Z0 = 0.0;
    double T = 0.0;      // horizon, days
    void validate() const;
};

// Driftless pool rate + stochastic depth, both GBM.
struct Model2Params {
    double gamma = 0.0;     // pool-rate volatility
    double varsigma = 0.0;  // depth volatility
    double Z0 = 0.0;
    double kappa0 = 0.0;
    double T = 0.0;
    void validate() const;
};

// Sampled market environment. S is empty for Model II paths; kappa is a
// constant column for Model I (or empty when no depth was supplied).
struct MarketPath {
    std::vector<double> times;
    std::vector<double> S;
    std::vector<double> Z;
    std::vector<double> kappa;

    std::size_t size() const { return times.size(); }
};

// S stepped by exact log-normal increments, Z by Euler-Maruyama in levels
// (its mean-reverting drift is not log-linear). Two independent Philox
// sub-streams; identical (params, dt, seed) give identical paths.
MarketPath simulate_model1(const Model1Params& params, double dt,
                           std::uint64_t seed, double kappa_const = 0.0);

// Z and kappa stepped by exact log-normal increments (positivity preserved).
MarketPath simulate_model2(const Model2Params& params, double dt,
                           std::uint64_t seed);

// E[Z_T | Z_t, S_t] = Z e^{-beta (T-t)} + S (1 - e^{-beta (T-t)}).
double expected_terminal_rate(double Z, double S, double beta, double t, double T);

// CSV schema: t,S,Z,kappa (header row; empty cells for absent columns).
// A nonempty comment is written as a leading '#' line.
void write_path_csv(const MarketPath& path, const std::string& file,
                    const std::string& comment = "");
MarketPath read_path_csv(const std::string& file);

} // namespace amm::dynamics
