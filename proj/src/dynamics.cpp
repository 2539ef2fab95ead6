#include "ammlab/dynamics.hpp"

#include <cmath>
#include <fstream>

#include "ammlab/csv.hpp"
#include "ammlab/rng.hpp"

namespace amm::dynamics {

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

// number of uniform steps covering [0,T] with step <= dt
std::size_t step_count(double T, double dt) {
    require(dt > 0.0, "dt must be positive");
    require(dt <= T, "dt must not exceed the horizon");
    const double n = T / dt;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) < 1e-9 * n) return static_cast<std::size_t>(rounded);
    return static_cast<std::size_t>(std::ceil(n));
}

} // namespace

void Model1Params::validate() const {
    require(sigma >= 0.0, "sigma must be nonnegative");
    require(beta >= 0.0, "beta must be nonnegative");
    require(gamma >= 0.0, "gamma must be nonnegative");
    require(S0 > 0.0, "S0 must be positive");
    require(Z0 > 0.0, "Z0 must be positive");
    require(T > 0.0, "T must be positive");
}

void Model2Params::validate() const {
    require(gamma >= 0.0, "gamma must be nonnegative");
    require(varsigma >= 0.0, "varsigma must be nonnegative");
    require(Z0 > 0.0, "Z0 must be positive");
    require(kappa0 > 0.0, "kappa0 must be positive");
    require(T > 0.0, "T must be positive");
}

MarketPath simulate_model1(const Model1Params& params, double dt,
                           std::uint64_t seed, double kappa_const) {
    params.validate();
    const std::size_t n = step_count(params.T, dt);
    const double h = params.T / static_cast<double>(n);
    const double sqrt_h = std::sqrt(h);

    Philox oracle_noise(seed, 0);
    Philox pool_noise(seed, 1);

    MarketPath path;
    path.times.resize(n + 1);
    path.S.resize(n + 1);
    path.Z.resize(n + 1);
    path.S[0] = params.S0;
    path.Z[0] = params.Z0;
    path.times[0] = 0.0;

    const double log_drift = -0.5 * params.sigma * params.sigma * h;
    for (std::size_t k = 0; k < n; ++k) {
        path.times[k + 1] = (k + 1 == n) ? params.T : (k + 1) * h;
        path.S[k + 1] = path.S[k] * std::exp(log_drift + params.sigma * sqrt_h * oracle_noise.normal());
        const double z = path.Z[k];
        const double z_next = z + params.beta * (path.S[k] - z) * h
                              + params.gamma * z * sqrt_h * pool_noise.normal();
        if (!(z_next > 0.0))
            throw StepTooCoarseError("pool rate went non-positive at step " +
                                     std::to_string(k + 1) + "; refine dt");
        path.Z[k + 1] = z_next;
    }
    if (kappa_const > 0.0) path.kappa.assign(n + 1, kappa_const);
    return path;
}

MarketPath simulate_model2(const Model2Params& params, double dt,
                           std::uint64_t seed) {
    params.validate();
    const std::size_t n = step_count(params.T, dt);
    const double h = params.T / static_cast<double>(n);
    const double sqrt_h = std::sqrt(h);

    Philox rate_noise(seed, 0);
    Philox depth_noise(seed, 1);

    MarketPath path;
    path.times.resize(n + 1);
    path.Z.resize(n + 1);
    path.kappa.resize(n + 1);
    path.times[0] = 0.0;
    path.Z[0] = params.Z0;
    path.kappa[0] = params.kappa0;

    const double z_drift = -0.5 * params.gamma * params.gamma * h;
    const double k_drift = -0.5 * params.varsigma * params.varsigma * h;
    for (std::size_t k = 0; k < n; ++k) {
        path.times[k + 1] = (k + 1 == n) ? params.T : (k + 1) * h;
        path.Z[k + 1] = path.Z[k] * std::exp(z_drift + params.gamma * sqrt_h * rate_noise.normal());
        path.kappa[k + 1] = path.kappa[k] * std::exp(k_drift + params.varsigma * sqrt_h * depth_noise.normal());
    }
    return path;
}

double expected_terminal_rate(double Z, double S, double beta, double t, double T) {
    require(beta > 0.0, "beta must be positive");
    require(T >= t, "need T >= t");
    const double decay = std::exp(-beta * (T - t));
    return Z * decay + S * (1.0 - decay);
}

void write_path_csv(const MarketPath& path, const std::string& file,
                    const std::string& comment) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file);
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "t,S,Z,kappa\n";
    for (std::size_t i = 0; i < path.size(); ++i) {
        out << io::format_double(path.times[i]) << ',';
        if (i < path.S.size()) out << io::format_double(path.S[i]);
        out << ',';
        out << io::format_double(path.Z[i]) << ',';
        if (i < path.kappa.size()) out << io::format_double(path.kappa[i]);
        out << '\n';
    }
}

MarketPath read_path_csv(const std::string& file) {
    io::CsvReader reader(file, {"t", "S", "Z", "kappa"});
    MarketPath path;
    std::vector<std::string> f;
    while (reader.next(f)) {
        path.times.push_back(io::parse_double(f[0], file, reader.row(), "t"));
        if (!f[1].empty()) path.S.push_back(io::parse_double(f[1], file, reader.row(), "S"));
        path.Z.push_back(io::parse_double(f[2], file, reader.row(), "Z"));
        if (!f[3].empty()) path.kappa.push_back(io::parse_double(f[3], file, reader.row(), "kappa"));
    }
    return path;
}

} // namespace amm::dynamics
