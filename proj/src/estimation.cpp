#include "ammlab/estimation.hpp"

#include <cmath>
#include <stdexcept>

namespace amm::estimation {

namespace {

constexpr std::size_t kMinIncrements = 30;
constexpr double kMsPerDay = 86400000.0;

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

std::vector<double> log_increments(std::span<const double> series) {
    require(series.size() >= 2, "series too short");
    std::vector<double> d(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        require(series[i] > 0.0 && series[i + 1] > 0.0, "series must be positive");
        d[i] = std::log(series[i + 1] / series[i]);
    }
    return d;
}

} // namespace

VolEstimate estimate_oracle_vol(std::span<const double> S, std::span<const double> dts) {
    require(S.size() >= kMinIncrements + 1, "need at least 30 increments");
    require(dts.size() == S.size() - 1, "dt vector must match increments");
    const auto d = log_increments(S);
    const std::size_t n = d.size();

    // scale each increment to unit step: dlogS / sqrt(dt) has dispersion sigma
    double mean_scaled = 0.0, mean_raw = 0.0, mean_dt = 0.0;
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
        require(dts[i] > 0.0, "dt must be positive");
        scaled[i] = d[i] / std::sqrt(dts[i]);
        mean_scaled += scaled[i];
        mean_raw += d[i];
        mean_dt += dts[i];
    }
    mean_scaled /= static_cast<double>(n);
    mean_raw /= static_cast<double>(n);
    mean_dt /= static_cast<double>(n);

    double ss = 0.0;
    for (double v : scaled) ss += (v - mean_scaled) * (v - mean_scaled);
    const double sigma = std::sqrt(ss / static_cast<double>(n - 1));

    VolEstimate est;
    est.sigma_hat = sigma;
    est.std_error = sigma / std::sqrt(2.0 * static_cast<double>(n - 1));
    est.implied_intercept = -0.5 * sigma * sigma * mean_dt;
    est.realized_mean_increment = mean_raw;
    est.increments = n;
    return est;
}

VolEstimate estimate_oracle_vol(std::span<const double> S, double dt) {
    require(dt > 0.0, "dt must be positive");
    std::vector<double> dts(S.empty() ? 0 : S.size() - 1, dt);
    return estimate_oracle_vol(S, dts);
}

PoolDynEstimate estimate_pool_dynamics(std::span<const double> Z, std::span<const double> S,
                                       std::span<const double> dts) {
    require(Z.size() == S.size(), "Z and S series must be aligned");
    require(Z.size() >= kMinIncrements + 1, "need at least 30 increments");
    require(dts.size() == Z.size() - 1, "dt vector must match increments");

    const auto d = log_increments(Z);
    const std::size_t n = d.size();
    std::vector<double> x(n);
    double mean_dt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        require(dts[i] > 0.0, "dt must be positive");
        x[i] = (S[i] - Z[i]) / Z[i] * dts[i];
        mean_dt += dts[i];
    }
    mean_dt /= static_cast<double>(n);

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += d[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (d[i] - my);
    }

    PoolDynEstimate est;
    est.increments = n;

    const double x_scale = std::sqrt(sxx / static_cast<double>(n));
    if (x_scale < 1e-15) {
        // S == Z throughout: the regressor is degenerate and beta is unidentified
        est.beta_defined = false;
        est.intercept = my;
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (d[i] - my) * (d[i] - my);
        est.gamma_hat = std::sqrt(ss / static_cast<double>(n - 1) / mean_dt);
        est.implied_intercept = -0.5 * est.gamma_hat * est.gamma_hat * mean_dt;
        est.gamma_se = est.gamma_hat / std::sqrt(2.0 * static_cast<double>(n - 1));
        return est;
    }

    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = d[i] - intercept - slope * x[i];
        rss += r * r;
    }
    const double res_var = rss / static_cast<double>(n - 2);

    est.beta_hat = slope;
    est.intercept = intercept;
    est.gamma_hat = std::sqrt(res_var / mean_dt);
    est.implied_intercept = -0.5 * est.gamma_hat * est.gamma_hat * mean_dt;
    est.beta_se = std::sqrt(res_var / sxx);
    est.gamma_se = est.gamma_hat / std::sqrt(2.0 * static_cast<double>(n - 2));
    return est;
}

PoolDynEstimate estimate_pool_dynamics(std::span<const double> Z, std::span<const double> S,
                                       double dt) {
    require(dt > 0.0, "dt must be positive");
    std::vector<double> dts(Z.empty() ? 0 : Z.size() - 1, dt);
    return estimate_pool_dynamics(Z, S, dts);
}

ExecutionCalibration calibrate_execution(std::span<const std::int64_t> trade_ts_ms,
                                         std::span<const double> depths) {
    require(trade_ts_ms.size() >= 2, "need at least two trades");
    require(!depths.empty(), "need at least one depth observation");
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < trade_ts_ms.size(); ++i) {
        require(trade_ts_ms[i + 1] >= trade_ts_ms[i], "trade timestamps must be sorted");
        total += static_cast<double>(trade_ts_ms[i + 1] - trade_ts_ms[i]);
    }
    ExecutionCalibration cal;
    cal.trades = trade_ts_ms.size();
    cal.dt_bar = total / static_cast<double>(trade_ts_ms.size() - 1) / kMsPerDay;
    require(cal.dt_bar > 0.0, "trades must span a positive interval");
    cal.eta = cal.dt_bar;
    cal.kappa0 = depths.back();
    return cal;
}

double size_inventory(double in_sample_volume, double in_sample_span_days,
                      double horizon_days, double participation) {
    require(participation >= 0.0 && participation <= 1.0, "participation must be in [0,1]");
    require(in_sample_span_days > 0.0 && horizon_days > 0.0, "spans must be positive");
    require(in_sample_volume >= 0.0, "volume must be nonnegative");
    return participation * in_sample_volume * horizon_days / in_sample_span_days;
}

nlohmann::json EstimationResult::to_json() const {
    nlohmann::json j;
    j["window"] = {{"start_ms", window_start_ms}, {"end_ms", window_end_ms}};
    j["sigma_hat"] = oracle.sigma_hat;
    j["sigma_se"] = oracle.std_error;
    j["sigma_implied_intercept"] = oracle.implied_intercept;
    j["sigma_realized_mean_increment"] = oracle.realized_mean_increment;
    j["beta_hat"] = pool.beta_defined ? nlohmann::json(pool.beta_hat) : nlohmann::json();
    j["beta_defined"] = pool.beta_defined;
    j["beta_se"] = pool.beta_se;
    j["gamma_hat"] = pool.gamma_hat;
    j["gamma_se"] = pool.gamma_se;
    j["regression_intercept"] = pool.intercept;
    j["regression_implied_intercept"] = pool.implied_intercept;
    j["dt_bar_days"] = execution.dt_bar;
    j["eta_days"] = execution.eta;
    j["kappa0"] = execution.kappa0;
    j["samples"] = {{"oracle_increments", oracle.increments},
                    {"pool_increments", pool.increments},
                    {"trades", execution.trades}};
    return j;
}

} // namespace amm::estimation
