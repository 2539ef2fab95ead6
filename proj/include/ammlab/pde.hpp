#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ammlab/strategy.hpp"

namespace amm::pde {

// Picard loop failed to reach the tolerance within max_iterations.
struct PicardError : std::runtime_error {
    PicardError(const std::string& what, double final_residual, int iterations)
        : std::runtime_error(what), residual(final_residual), iterations(iterations) {}
    double residual;
    int iterations;
};

// Sup norm of the solution grew past its a-priori scale; refine the step.
struct StepInstabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridSpec {
    std::vector<double> times;  // ascending, times.front()=0, times.back()=T
    std::vector<double> axis1;  // Z nodes, positive increasing
    std::vector<double> axis2;  // S (Model I) or kappa (Model II) nodes

    // uniform time steps, log-spaced space nodes
    static GridSpec log_spaced(std::size_t n_t, double T,
                               double z_lo, double z_hi, std::size_t n_z,
                               double a_lo, double a_hi, std::size_t n_a);
    void validate() const;
};

struct PicardConfig {
    int max_iterations = 50;
    double tolerance = 1e-8;  // sup-norm change between consecutive iterates
    double damping = 1.0;     // 1 = undamped
};

struct PicardDiagnostics {
    std::size_t levels = 0;
    std::size_t total_iterations = 0;
    std::size_t monotone_levels = 0; // levels with non-increasing residuals
    double worst_residual = 0.0;     // largest final residual across levels
};

enum class ModelTag { model1 = 1, model2 = 2 };

// Value-function coefficients theta0/1/2 on the (t, axis1, axis2) grid,
// flattened as [level][i][j] with level 0 at t=0.
struct SolvedFields {
    ModelTag model = ModelTag::model1;
    GridSpec grid;
    std::vector<double> theta0, theta1, theta2;
    strategy::ControlParams params;
    double varsigma = 0.0; // Model II depth volatility
    PicardDiagnostics diagnostics;

    std::size_t index(std::size_t level, std::size_t i, std::size_t j) const {
        return (level * grid.axis1.size() + i) * grid.axis2.size() + j;
    }
    // trilinear interpolation; throws std::domain_error outside the hull
    double value(const std::vector<double>& field, double t, double a1, double a2) const;

    // one CSV per field plus grid metadata; t_stride subsamples time levels;
    // a nonempty comment becomes an extra '#' header line
    void write_bundle(const std::string& dir, std::size_t t_stride = 1,
                      const std::string& comment = "") const;
    static SolvedFields read_bundle(const std::string& dir);
};

// Backward solve of the Model I system: theta2 semilinear (Picard-linearised
// quadratic term), then theta1 and theta0 linear. Implicit Euler per level
// with alternating-direction line solves; zero-derivative closure at all
// space edges.
SolvedFields solve_model1(const strategy::ControlParams& params, const GridSpec& grid,
                          const PicardConfig& cfg = {});

// Model II on (Z, kappa): pure diffusion, same machinery. theta1 and theta0
// are identically zero and kept as solved fields for verification.
SolvedFields solve_model2(const strategy::ControlParams& params, double varsigma,
                          const GridSpec& grid, const PicardConfig& cfg = {});

// nu = -(kappa/2 eta) Z^{-3/2} (2 theta2 y + theta1)
double speed_numerical_model1(const SolvedFields& fields, double t,
                              double inventory, double Z, double S);

// nu = -(kappa/2 eta) (2 theta2 y + theta1) Z^{-3/2}, kappa the query point
double speed_model2(const SolvedFields& fields, double t,
                    double inventory, double Z, double kappa);

// Coefficients of the Merton-problem quadratic that caps the Model I fields.
struct MertonCoeffs {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
};

// C from its exponential form, B and A by backward quadrature of the nested
// integrals. Requires phi > 0.
MertonCoeffs merton_bound_coeffs(const strategy::ControlParams& params, double t);
std::vector<MertonCoeffs> merton_coeffs_on_grid(const strategy::ControlParams& params,
                                                const std::vector<double>& times);

struct FieldBoundCheck {
    std::string field;
    double min_margin = 0.0;   // min over nodes of distance inside the envelope
    std::size_t violations = 0;
    double worst_value = 0.0, worst_lower = 0.0, worst_upper = 0.0;
    std::size_t level = 0, i = 0, j = 0; // location of the worst margin
};

struct BoundReport {
    bool pass = true;
    double worst_margin = 0.0;
    std::vector<FieldBoundCheck> checks;
};

// A-priori envelope for Model I (Merton quadratic caps, report-only).
BoundReport check_bounds_model1(const SolvedFields& fields,
                                const strategy::ControlParams& params);

// Model II: -alpha - phi (T-t) <= theta2 <= 0; theta1, theta0 within 1e-12 of 0.
BoundReport check_bounds_model2(const SolvedFields& fields);

} // namespace amm::pde
