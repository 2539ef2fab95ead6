#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace amm::strategy {

// Inputs of the Model I control problem over one execution window.
struct ControlParams {
    double phi = 0.0;    // running inventory penalty, X * Y^-2
    double alpha = 0.0;  // terminal penalty, X * Y^-2
    double eta = 0.0;    // execution-cost time scale, days
    double T = 0.0;      // horizon, days
    double beta = 0.0;   // day^-1
    double gamma = 0.0;  // day^-1/2
    double sigma = 0.0;  // day^-1/2
    double kappa = 1.0;  // pool depth, constant over the window

    void validate() const;
};

// Closed-form solution of A' = phi - A^2/(eta zeta), A(T) = -alpha,
// evaluated at time-to-go tau = T - t. Branch-robust for any alpha,
// phi >= 0 (the tanh and coth regimes are covered by one expression).
double riccati_a(double phi, double alpha, double eta_zeta, double tau);

// Coefficients of the quadratic value-function ansatz for one frozen
// impact parameter zeta. C = -B; D, H, I, J vanish identically.
struct CoefficientTable {
    double zeta = 0.0;
    double eta = 0.0;
    std::vector<double> times; // ascending, covering [0, T]
    std::vector<double> A, B, E, F, G;

    double a(double t) const;
    double b(double t) const;
    // columns t,A,B,E,F,G; a nonempty comment becomes a leading '#' line
    void write_csv(const std::string& file, const std::string& comment = "") const;
};

// uniform grid with `steps` intervals on [0, T]
std::vector<double> uniform_grid(double T, std::size_t steps);

// A from the closed form; B, E, F, G by adaptive backward integration of
// their linear ODEs from zero terminal data (Dormand-Prince, tol 1e-10).
CoefficientTable solve_constant_zeta(const ControlParams& params, double zeta,
                                     const std::vector<double>& time_grid);

// nu = -A/(eta zeta) * inventory + B/(2 eta zeta) * (S - Z), coefficients
// linearly interpolated in time.
double speed_constant_zeta(const CoefficientTable& table, double t,
                           double inventory, double Z, double S);

// Uniform partition of [z_lo, z_hi] with per-node impact parameters
// zeta_j = Z_j^{3/2} / kappa.
struct RatePartition {
    double z_lo = 0.0;
    double z_hi = 0.0;
    std::size_t segments = 0;   // N
    std::vector<double> nodes;  // N+1 rates
    std::vector<double> zetas;  // N+1, strictly increasing
};

RatePartition build_partition(double z_lo, double z_hi, std::size_t n, double kappa);

// Piecewise strategy: one constant-zeta solution per partition node, selected
// by the current rate (clamped to the edge segments outside the bracket).
class PiecewiseStrategy {
public:
    PiecewiseStrategy(const ControlParams& params, const RatePartition& partition,
                      std::size_t time_steps = 10000);

    double speed(double t, double inventory, double Z, double S) const;
    // jump of the strategy across interior node j (1..N-1), evaluated exactly
    // from the two segment solutions
    double boundary_jump(std::size_t j, double t, double inventory, double S) const;
    const RatePartition& partition() const { return part_; }

private:
    std::size_t segment_of(double Z) const;
    double segment_speed(std::size_t j, double t, double inventory, double Z, double S) const;

    ControlParams params_;
    RatePartition part_;
    std::vector<double> times_;
    std::vector<std::vector<double>> b_tables_; // B per node
};

struct ClosedFormConfig {
    std::size_t lattice_nodes = 512;
    std::size_t time_steps = 10000;
};

// Limit strategy of the piecewise family: frozen-rate coefficients evaluated
// at zeta = Z^{3/2}/kappa. A is exact (closed form); B is memoized on a
// log-spaced rate lattice and linearly interpolated between lattice nodes.
class ClosedFormStrategy {
public:
    using Config = ClosedFormConfig;

    ClosedFormStrategy(const ControlParams& params, double z_lo, double z_hi,
                       Config cfg = Config());

    double speed(double t, double inventory, double Z, double S) const;
    double bracket_lo() const { return z_lo_; }
    double bracket_hi() const { return z_hi_; }

private:
    double b_at(double t, double Z) const;

    ControlParams params_;
    double z_lo_, z_hi_;
    std::vector<double> lattice_;  // rates, log-spaced
    std::vector<double> times_;
    std::vector<std::vector<double>> b_tables_;
};

// Single-point evaluation without a lattice: solves B at zeta(Z) on demand.
// Exact but slow; intended for tests and spot checks.
double speed_closed_form_exact(const ControlParams& params, double t,
                               double inventory, double Z, double S,
                               std::size_t time_steps = 10000);

namespace detail {
// B alone by backward integration (A closed form inside the RHS);
// used by the strategy evaluators.
std::vector<double> solve_b(const ControlParams& params, double zeta,
                            const std::vector<double>& time_grid);
double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x);
} // namespace detail

} // namespace amm::strategy
