#include "ammlab/strategy.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <thread>

#include <boost/numeric/odeint.hpp>

#include "ammlab/csv.hpp"

namespace amm::strategy {

namespace odeint = boost::numeric::odeint;

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

constexpr double kOdeAbsTol = 1e-12;
constexpr double kOdeRelTol = 1e-10;

// time grid in tau = T - t for backward integration (ascending from 0)
std::vector<double> to_tau_grid(const std::vector<double>& times, double T) {
    std::vector<double> tau(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        tau[i] = T - times[times.size() - 1 - i];
    if (tau.front() != 0.0) tau.front() = 0.0;
    return tau;
}

// tables for different zetas are independent; build them in parallel
std::vector<std::vector<double>> solve_b_batch(const ControlParams& params,
                                               const std::vector<double>& zetas,
                                               const std::vector<double>& time_grid) {
    std::vector<std::vector<double>> tables(zetas.size());
    const unsigned jobs =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                           zetas.size() >= 16 ? 4u : 1u);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < zetas.size(); ++i)
            tables[i] = detail::solve_b(params, zetas[i], time_grid);
        return tables;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> futures;
    for (unsigned j = 0; j < jobs; ++j)
        futures.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next.fetch_add(1); i < zetas.size(); i = next.fetch_add(1))
                tables[i] = detail::solve_b(params, zetas[i], time_grid);
        }));
    for (auto& f : futures) f.get();
    return tables;
}

} // namespace

void ControlParams::validate() const {
    require(phi >= 0.0, "phi must be nonnegative");
    require(alpha >= 0.0, "alpha must be nonnegative");
    require(eta > 0.0, "eta must be positive");
    require(T > 0.0, "T must be positive");
    require(beta >= 0.0, "beta must be nonnegative");
    require(gamma >= 0.0, "gamma must be nonnegative");
    require(sigma >= 0.0, "sigma must be nonnegative");
    require(kappa > 0.0, "kappa must be positive");
}

double riccati_a(double phi, double alpha, double eta_zeta, double tau) {
    require(eta_zeta > 0.0, "eta*zeta must be positive");
    require(tau >= 0.0, "time to go must be nonnegative");
    if (phi == 0.0) {
        if (alpha == 0.0) return 0.0;
        return -1.0 / (1.0 / alpha + tau / eta_zeta); // separable branch
    }
    const double m = std::sqrt(phi * eta_zeta);
    const double r = std::sqrt(phi / eta_zeta);
    const double g0 = alpha / m;
    const double th = std::tanh(r * tau);
    // tanh addition formula covers both |alpha| < m and |alpha| > m regimes
    return -m * (g0 + th) / (1.0 + g0 * th);
}

std::vector<double> uniform_grid(double T, std::size_t steps) {
    require(T > 0.0 && steps >= 1, "invalid grid");
    std::vector<double> g(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i)
        g[i] = T * static_cast<double>(i) / static_cast<double>(steps);
    g.back() = T;
    return g;
}

double detail::interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + w * (ys[i] - ys[i - 1]);
}

std::vector<double> detail::solve_b(const ControlParams& params, double zeta,
                                    const std::vector<double>& time_grid) {
    const double ez = params.eta * zeta;
    const double beta = params.beta;
    const auto tau_grid = to_tau_grid(time_grid, params.T);

    using state = std::array<double, 1>;
    auto rhs = [&](const state& y, state& dy, double tau) {
        const double a = riccati_a(params.phi, params.alpha, ez, tau);
        dy[0] = -beta * (1.0 + y[0]) + a * y[0] / ez;
    };

    std::vector<double> b_rev;
    b_rev.reserve(tau_grid.size());
    state y{0.0};
    auto stepper = odeint::make_controlled(kOdeAbsTol, kOdeRelTol,
                                           odeint::runge_kutta_dopri5<state>());
    odeint::integrate_times(stepper, rhs, y, tau_grid.begin(), tau_grid.end(),
                            1e-6 * params.T,
                            [&](const state& s, double) { b_rev.push_back(s[0]); });

    std::vector<double> b(b_rev.rbegin(), b_rev.rend());
    b.back() = 0.0; // terminal condition exactly
    return b;
}

CoefficientTable solve_constant_zeta(const ControlParams& params, double zeta,
                                     const std::vector<double>& time_grid) {
    params.validate();
    require(zeta > 0.0, "zeta must be positive");
    require(time_grid.size() >= 2, "time grid needs at least two nodes");
    for (std::size_t i = 0; i + 1 < time_grid.size(); ++i)
        require(time_grid[i] < time_grid[i + 1], "time grid must be increasing");
    require(time_grid.front() >= 0.0 && time_grid.front() < 1e-12 * params.T,
            "time grid must start at 0");
    require(std::abs(time_grid.back() - params.T) < 1e-9 * params.T,
            "time grid must end at T");

    const double ez = params.eta * zeta;
    const double beta = params.beta;
    const double g2 = params.gamma * params.gamma;
    const double s2 = params.sigma * params.sigma;
    const auto tau_grid = to_tau_grid(time_grid, params.T);

    // state: B, E, F, G in tau = T - t; C = -B.
    using state = std::array<double, 4>;
    auto rhs = [&](const state& y, state& dy, double tau) {
        const double a = riccati_a(params.phi, params.alpha, ez, tau);
        const double B = y[0], E = y[1], F = y[2], G = y[3];
        dy[0] = -beta * (1.0 + B) + a * B / ez;
        dy[1] = (g2 - 2.0 * beta) * E + B * B / (4.0 * ez);
        dy[2] = beta * G + s2 * F + B * B / (4.0 * ez);
        dy[3] = 2.0 * beta * E - beta * G - B * B / (2.0 * ez);
    };

    std::vector<state> rev;
    rev.reserve(tau_grid.size());
    state y{0.0, 0.0, 0.0, 0.0};
    auto stepper = odeint::make_controlled(kOdeAbsTol, kOdeRelTol,
                                           odeint::runge_kutta_dopri5<state>());
    odeint::integrate_times(stepper, rhs, y, tau_grid.begin(), tau_grid.end(),
                            1e-6 * params.T,
                            [&](const state& s, double) { rev.push_back(s); });

    CoefficientTable table;
    table.zeta = zeta;
    table.eta = params.eta;
    table.times = time_grid;
    const std::size_t n = time_grid.size();
    table.A.resize(n);
    table.B.resize(n);
    table.E.resize(n);
    table.F.resize(n);
    table.G.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = rev[n - 1 - i];
        table.A[i] = riccati_a(params.phi, params.alpha, ez, params.T - time_grid[i]);
        table.B[i] = s[0];
        table.E[i] = s[1];
        table.F[i] = s[2];
        table.G[i] = s[3];
    }
    table.A.back() = -params.alpha;
    table.B.back() = table.E.back() = table.F.back() = table.G.back() = 0.0;
    return table;
}

double CoefficientTable::a(double t) const { return detail::interp(times, A, t); }
double CoefficientTable::b(double t) const { return detail::interp(times, B, t); }

void CoefficientTable::write_csv(const std::string& file, const std::string& comment) const {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file);
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "t,A,B,E,F,G\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        out << io::format_double(times[i]) << ',' << io::format_double(A[i]) << ','
            << io::format_double(B[i]) << ',' << io::format_double(E[i]) << ','
            << io::format_double(F[i]) << ',' << io::format_double(G[i]) << '\n';
}

double speed_constant_zeta(const CoefficientTable& table, double t,
                           double inventory, double Z, double S) {
    const double ez = table.eta * table.zeta;
    return -table.a(t) / ez * inventory + table.b(t) / (2.0 * ez) * (S - Z);
}

RatePartition build_partition(double z_lo, double z_hi, std::size_t n, double kappa) {
    require(z_lo > 0.0 && z_lo < z_hi, "need 0 < z_lo < z_hi");
    require(n >= 1, "need at least one segment");
    require(kappa > 0.0, "kappa must be positive");
    RatePartition part;
    part.z_lo = z_lo;
    part.z_hi = z_hi;
    part.segments = n;
    part.nodes.resize(n + 1);
    part.zetas.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        const double z = z_lo + (z_hi - z_lo) * static_cast<double>(j) / static_cast<double>(n);
        part.nodes[j] = z;
        part.zetas[j] = z * std::sqrt(z) / kappa;
    }
    part.nodes.back() = z_hi;
    return part;
}

PiecewiseStrategy::PiecewiseStrategy(const ControlParams& params,
                                     const RatePartition& partition,
                                     std::size_t time_steps)
    : params_(params), part_(partition), times_(uniform_grid(params.T, time_steps)) {
    params_.validate();
    b_tables_ = solve_b_batch(params_, part_.zetas, times_);
}

std::size_t PiecewiseStrategy::segment_of(double Z) const {
    const auto& nodes = part_.nodes;
    const std::size_t n = part_.segments;
    if (Z < nodes[1]) return 0;           // includes everything below the bracket
    if (Z >= nodes[n]) return n;          // and everything above it
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), Z);
    return static_cast<std::size_t>(it - nodes.begin()) - 1;
}

double PiecewiseStrategy::segment_speed(std::size_t j, double t, double inventory,
                                        double Z, double S) const {
    const double ez = params_.eta * part_.zetas[j];
    const double a = riccati_a(params_.phi, params_.alpha, ez, params_.T - t);
    const double b = detail::interp(times_, b_tables_[j], t);
    return -a / ez * inventory + b / (2.0 * ez) * (S - Z);
}

double PiecewiseStrategy::speed(double t, double inventory, double Z, double S) const {
    return segment_speed(segment_of(Z), t, inventory, Z, S);
}

double PiecewiseStrategy::boundary_jump(std::size_t j, double t, double inventory,
                                        double S) const {
    require(j >= 1 && j < part_.segments, "interior node index required");
    const double z = part_.nodes[j];
    return std::abs(segment_speed(j - 1, t, inventory, z, S) -
                    segment_speed(j, t, inventory, z, S));
}

ClosedFormStrategy::ClosedFormStrategy(const ControlParams& params, double z_lo,
                                       double z_hi, Config cfg)
    : params_(params), z_lo_(z_lo), z_hi_(z_hi),
      times_(uniform_grid(params.T, cfg.time_steps)) {
    params_.validate();
    require(z_lo > 0.0 && z_lo < z_hi, "need 0 < z_lo < z_hi");
    require(cfg.lattice_nodes >= 2, "lattice needs at least two nodes");

    const double log_lo = std::log(z_lo);
    const double ratio = std::log(z_hi) - log_lo;
    lattice_.resize(cfg.lattice_nodes);
    for (std::size_t i = 0; i < cfg.lattice_nodes; ++i)
        lattice_[i] = std::exp(log_lo + ratio * static_cast<double>(i) /
                                            static_cast<double>(cfg.lattice_nodes - 1));
    lattice_.front() = z_lo;
    lattice_.back() = z_hi;

    std::vector<double> zetas(lattice_.size());
    for (std::size_t i = 0; i < lattice_.size(); ++i)
        zetas[i] = lattice_[i] * std::sqrt(lattice_[i]) / params_.kappa;
    b_tables_ = solve_b_batch(params_, zetas, times_);
}

double ClosedFormStrategy::b_at(double t, double Z) const {
    if (Z <= lattice_.front()) return detail::interp(times_, b_tables_.front(), t);
    if (Z >= lattice_.back()) return detail::interp(times_, b_tables_.back(), t);
    const auto it = std::upper_bound(lattice_.begin(), lattice_.end(), Z);
    const std::size_t i = static_cast<std::size_t>(it - lattice_.begin());
    const double w = (Z - lattice_[i - 1]) / (lattice_[i] - lattice_[i - 1]);
    const double b_lo = detail::interp(times_, b_tables_[i - 1], t);
    const double b_hi = detail::interp(times_, b_tables_[i], t);
    return b_lo + w * (b_hi - b_lo);
}

double ClosedFormStrategy::speed(double t, double inventory, double Z, double S) const {
    const double z_eff = std::clamp(Z, z_lo_, z_hi_);
    const double ez = params_.eta * z_eff * std::sqrt(z_eff) / params_.kappa;
    const double a = riccati_a(params_.phi, params_.alpha, ez, params_.T - t);
    return -a / ez * inventory + b_at(t, z_eff) / (2.0 * ez) * (S - Z);
}

double speed_closed_form_exact(const ControlParams& params, double t,
                               double inventory, double Z, double S,
                               std::size_t time_steps) {
    require(Z > 0.0, "rate must be positive");
    const double zeta = Z * std::sqrt(Z) / params.kappa;
    const auto grid = uniform_grid(params.T, time_steps);
    const auto b = detail::solve_b(params, zeta, grid);
    const double ez = params.eta * zeta;
    const double a = riccati_a(params.phi, params.alpha, ez, params.T - t);
    return -a / ez * inventory + detail::interp(grid, b, t) / (2.0 * ez) * (S - Z);
}

} // namespace amm::strategy
