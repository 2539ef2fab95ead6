#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace amm::cpmm {

// A swap would leave the pool with (near-)zero reserves.
struct PoolDrainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Queried rate lies outside the profile's tick boundaries.
struct RateOutOfRangeError : std::domain_error {
    using std::domain_error::domain_error;
};

// Order pushes the rate past the outermost tick of the profile.
struct LiquidityExhaustedError : std::domain_error {
    using std::domain_error::domain_error;
};

// Order must traverse a tick range with zero depth.
struct ZeroDepthRangeError : std::domain_error {
    using std::domain_error::domain_error;
};

// Constant-product pool: reserves x (asset X) and y (asset Y), depth
// kappa = sqrt(x*y). The depth is stored redundantly and checked against
// the reserves so drift in long replays shows up as an error.
struct PoolState {
    double x = 0.0;
    double y = 0.0;
    double kappa = 0.0;

    static PoolState from_reserves(double x, double y);
    // Builds the unique pool with instantaneous rate Z and depth kappa:
    // y = kappa / sqrt(Z), x = kappa * sqrt(Z).
    static PoolState from_rate_depth(double rate, double kappa);

    // Throws std::invalid_argument on violated invariants
    // (positivity, kappa^2 == x*y beyond 1e-9 relative).
    void validate() const;
};

// Result of one liquidity-taking trade. delta_y > 0 sells Y to the pool.
struct SwapFill {
    double delta_y = 0.0;
    double delta_x = 0.0;    // X received (sell) or paid (buy), delta_y * exec_rate
    double exec_rate = 0.0;  // average rate actually obtained, X/Y
    double rate_after = 0.0; // pool instantaneous rate after the fill
};

// Piecewise-constant depth across tick ranges [Z_i, Z_{i+1}); boundaries
// strictly increasing, one depth per range (zero allowed, not all zero).
struct LiquidityProfile {
    std::vector<double> boundaries; // N+1 tick rates
    std::vector<double> depths;     // N per-range depths

    LiquidityProfile(std::vector<double> boundaries, std::vector<double> depths);

    std::size_t num_ranges() const { return depths.size(); }
    // Index i with rate in [Z_i, Z_{i+1}); throws RateOutOfRangeError.
    std::size_t range_index(double rate) const;
};

// Marginal exchange rate Z = x/y = kappa^2/y^2.
double instantaneous_rate(const PoolState& pool);

// Average rate for a finite trade: kappa^2 / (y * (y + delta_y)).
// Equals the instantaneous rate in the limit delta_y -> 0.
double execution_rate_exact(const PoolState& pool, double delta_y);

// |Z - Z~(delta_y)| = kappa^2 |delta_y| / (y^2 (y + delta_y)).
double unitary_execution_cost_exact(const PoolState& pool, double delta_y);

// Small-trade approximation of the unitary cost: Z^{3/2} |delta_y| / kappa.
double execution_cost_approx(double rate, double kappa, double delta_y);

// Execution rate for an agent trading at speed nu with time scale eta:
// Z - (eta/kappa) Z^{3/2} nu. May cross zero if nu is implausibly large
// for the pool depth; callers should treat a non-positive result as a
// warning signal.
double execution_rate_with_speed(double rate, double kappa, double eta, double nu);

// Trades delta_y against the pool, keeping kappa constant.
// Rejects fills that would leave y' < 1e-9 * y.
std::pair<PoolState, SwapFill> apply_swap(const PoolState& pool, double delta_y);

// LP deposit/withdrawal as a fraction rho > -1 of current reserves;
// scales depth by (1+rho) and leaves the rate unchanged.
PoolState apply_liquidity_change(const PoolState& pool, double rho);

// Concentrated-liquidity level function: kappa_i^2 / y for the range
// containing the rate.
double level_function_cl(const LiquidityProfile& profile, double rate, double y);

// Executes an order across tick boundaries: constant-product mechanics with
// the local depth inside each range, rate continuous at the joins.
// Returns (rate_after, delta_x).
std::pair<double, double> swap_across_ticks(const LiquidityProfile& profile,
                                            double z0, double delta_y);

} // namespace amm::cpmm
