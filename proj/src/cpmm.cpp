#include "ammlab/cpmm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace amm::cpmm {

namespace {

constexpr double kDrainFraction = 1e-9;   // reject swaps leaving y' < 1e-9 * y
constexpr double kDepthDriftTol = 1e-9;   // kappa^2 vs x*y relative mismatch

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

} // namespace

PoolState PoolState::from_reserves(double x, double y) {
    require(x > 0.0 && std::isfinite(x), "pool reserve x must be positive");
    require(y > 0.0 && std::isfinite(y), "pool reserve y must be positive");
    return PoolState{x, y, std::sqrt(x * y)};
}

PoolState PoolState::from_rate_depth(double rate, double kappa) {
    require(rate > 0.0 && std::isfinite(rate), "rate must be positive");
    require(kappa > 0.0 && std::isfinite(kappa), "depth must be positive");
    const double root = std::sqrt(rate);
    return PoolState{kappa * root, kappa / root, kappa};
}

void PoolState::validate() const {
    require(x > 0.0 && y > 0.0 && kappa > 0.0, "pool state must be positive");
    const double prod = x * y;
    const double k2 = kappa * kappa;
    if (std::abs(k2 - prod) > kDepthDriftTol * std::max(k2, prod))
        throw std::invalid_argument("pool depth inconsistent with reserves");
}

LiquidityProfile::LiquidityProfile(std::vector<double> b, std::vector<double> d)
    : boundaries(std::move(b)), depths(std::move(d)) {
    require(boundaries.size() >= 2, "profile needs at least one range");
    require(depths.size() + 1 == boundaries.size(), "boundaries/depths size mismatch");
    for (std::size_t i = 0; i + 1 < boundaries.size(); ++i)
        require(boundaries[i] > 0.0 && boundaries[i] < boundaries[i + 1],
                "boundaries must be positive and strictly increasing");
    bool any_positive = false;
    for (double k : depths) {
        require(k >= 0.0, "depths must be nonnegative");
        any_positive = any_positive || k > 0.0;
    }
    require(any_positive, "profile needs at least one positive depth");
}

std::size_t LiquidityProfile::range_index(double rate) const {
    if (!(rate >= boundaries.front()) || !(rate < boundaries.back()))
        throw RateOutOfRangeError("rate " + std::to_string(rate) + " outside profile ticks");
    // left-closed ranges: rate exactly at an interior tick belongs to the upper range
    auto it = std::upper_bound(boundaries.begin(), boundaries.end(), rate);
    return static_cast<std::size_t>(it - boundaries.begin()) - 1;
}

double instantaneous_rate(const PoolState& pool) {
    return pool.x / pool.y;
}

double execution_rate_exact(const PoolState& pool, double delta_y) {
    const double y_new = pool.y + delta_y;
    if (!(y_new > kDrainFraction * pool.y))
        throw PoolDrainError("buy order would drain the pool");
    return pool.kappa * pool.kappa / (pool.y * y_new);
}

double unitary_execution_cost_exact(const PoolState& pool, double delta_y) {
    const double y_new = pool.y + delta_y;
    if (!(y_new > kDrainFraction * pool.y))
        throw PoolDrainError("buy order would drain the pool");
    return pool.kappa * pool.kappa * std::abs(delta_y) / (pool.y * pool.y * y_new);
}

double execution_cost_approx(double rate, double kappa, double delta_y) {
    require(rate > 0.0, "rate must be positive");
    require(kappa > 0.0, "depth must be positive");
    return rate * std::sqrt(rate) * std::abs(delta_y) / kappa;
}

double execution_rate_with_speed(double rate, double kappa, double eta, double nu) {
    require(rate > 0.0, "rate must be positive");
    require(kappa > 0.0, "depth must be positive");
    require(eta >= 0.0, "eta must be nonnegative");
    return rate - (eta / kappa) * rate * std::sqrt(rate) * nu;
}

std::pair<PoolState, SwapFill> apply_swap(const PoolState& pool, double delta_y) {
    const double z = instantaneous_rate(pool);
    if (delta_y == 0.0)
        return {pool, SwapFill{0.0, 0.0, z, z}};

    // exec rate in closed form; delta_x defined as delta_y * exec_rate so the
    // fill invariant holds to rounding
    const double exec = execution_rate_exact(pool, delta_y);
    const double delta_x = delta_y * exec;
    PoolState next{pool.x - delta_x, pool.y + delta_y, pool.kappa};
    return {next, SwapFill{delta_y, delta_x, exec, instantaneous_rate(next)}};
}

PoolState apply_liquidity_change(const PoolState& pool, double rho) {
    if (!(rho > -1.0))
        throw std::invalid_argument("liquidity change must keep the pool non-empty (rho > -1)");
    const double s = 1.0 + rho;
    return PoolState{pool.x * s, pool.y * s, pool.kappa * s};
}

double level_function_cl(const LiquidityProfile& profile, double rate, double y) {
    require(y > 0.0, "y must be positive");
    const double k = profile.depths[profile.range_index(rate)];
    return k * k / y;
}

std::pair<double, double> swap_across_ticks(const LiquidityProfile& profile,
                                            double z0, double delta_y) {
    std::size_t idx = profile.range_index(z0);
    double rate = z0;
    double remaining = delta_y;
    double total_dx = 0.0;

    if (remaining == 0.0) return {rate, 0.0};
    const bool selling = remaining > 0.0; // selling Y pushes the rate down

    while (remaining != 0.0) {
        const double k = profile.depths[idx];
        if (k == 0.0)
            throw ZeroDepthRangeError("order traverses a zero-depth tick range");
        const double k2 = k * k;
        const double y_cur = k / std::sqrt(rate);
        const double z_edge = selling ? profile.boundaries[idx] : profile.boundaries[idx + 1];
        const double y_edge = k / std::sqrt(z_edge);
        const double cap = y_edge - y_cur; // same sign as remaining (or zero)

        if ((selling && remaining <= cap) || (!selling && remaining >= cap)) {
            const double y_new = y_cur + remaining;
            total_dx += remaining * k2 / (y_cur * y_new);
            rate = k2 / (y_new * y_new);
            remaining = 0.0;
        } else {
            total_dx += cap * k2 / (y_cur * y_edge);
            rate = z_edge;
            remaining -= cap;
            if (selling) {
                if (idx == 0)
                    throw LiquidityExhaustedError("order exhausts liquidity below the lowest tick");
                --idx;
            } else {
                if (idx + 1 == profile.num_ranges())
                    throw LiquidityExhaustedError("order exhausts liquidity above the highest tick");
                ++idx;
            }
        }
    }
    return {rate, total_dx};
}

} // namespace amm::cpmm
