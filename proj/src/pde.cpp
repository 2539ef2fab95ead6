#include "ammlab/pde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ammlab/csv.hpp"
#include "ammlab/dynamics.hpp"

namespace amm::pde {

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

double sup_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Tridiagonal Thomas solve; lower/diag/upper/rhs all length n, solution in rhs.
void thomas(std::vector<double>& lower, std::vector<double>& diag,
            std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// 3-point stencils on a nonuniform axis. Edge rows carry the reflected
// (zero-derivative) closure of the second difference only.
struct AxisStencil {
    std::vector<double> dl, dc, dr; // second derivative
    std::vector<double> cl, cc, cr; // central first derivative
    std::vector<double> h_lo, h_hi;

    explicit AxisStencil(const std::vector<double>& x) {
        const std::size_t n = x.size();
        dl.assign(n, 0.0); dc.assign(n, 0.0); dr.assign(n, 0.0);
        cl.assign(n, 0.0); cc.assign(n, 0.0); cr.assign(n, 0.0);
        h_lo.assign(n, 0.0); h_hi.assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hm = x[i] - x[i - 1];
            const double hp = x[i + 1] - x[i];
            h_lo[i] = hm; h_hi[i] = hp;
            dl[i] = 2.0 / (hm * (hm + hp));
            dc[i] = -2.0 / (hm * hp);
            dr[i] = 2.0 / (hp * (hm + hp));
            cl[i] = -hp / (hm * (hm + hp));
            cc[i] = (hp - hm) / (hm * hp);
            cr[i] = hm / (hp * (hm + hp));
        }
        const double h0 = x[1] - x[0];
        const double h1 = x[n - 1] - x[n - 2];
        dc[0] = -2.0 / (h0 * h0); dr[0] = 2.0 / (h0 * h0);
        dc[n - 1] = -2.0 / (h1 * h1); dl[n - 1] = 2.0 / (h1 * h1);
        h_hi[0] = h0; h_lo[n - 1] = h1;
    }
};

// One implicit Euler level of d_tau theta = L1 theta + L2 theta + c theta + f,
// approximately factorised as (I - dtau (L1 + c)) (I - dtau L2).
// L1 acts along axis1 (diffusion d1 + optional advection), L2 along axis2
// (diffusion only). Advection is centrally differenced and falls back to the
// one-sided difference wherever the central stencil breaks row monotonicity.
class DouglasStepper {
public:
    DouglasStepper(const GridSpec& grid, std::vector<double> d1, std::vector<double> d2,
                   std::vector<double> advection /* n1*n2 or empty */)
        : n1_(grid.axis1.size()), n2_(grid.axis2.size()),
          s1_(grid.axis1), s2_(grid.axis2),
          d1_(std::move(d1)), d2_(std::move(d2)), adv_(std::move(advection)) {}

    void step(const std::vector<double>& theta_old, const std::vector<double>& reaction,
              const std::vector<double>& source, double dtau, std::vector<double>& out) const {
        std::vector<double> rhs(theta_old);
        if (!source.empty())
            for (std::size_t m = 0; m < rhs.size(); ++m) rhs[m] += dtau * source[m];

        // sweep along axis1 (strided lines)
        std::vector<double> lo(n1_), di(n1_), up(n1_), d(n1_);
        std::vector<double> mid(n1_ * n2_);
        for (std::size_t j = 0; j < n2_; ++j) {
            for (std::size_t i = 0; i < n1_; ++i) {
                double Ll = 0.0, Lc = 0.0, Lr = 0.0;
                if (i == 0) {
                    Lc = d1_[i] * s1_.dc[0];
                    Lr = d1_[i] * s1_.dr[0];
                } else if (i == n1_ - 1) {
                    Ll = d1_[i] * s1_.dl[i];
                    Lc = d1_[i] * s1_.dc[i];
                } else {
                    Ll = d1_[i] * s1_.dl[i];
                    Lc = d1_[i] * s1_.dc[i];
                    Lr = d1_[i] * s1_.dr[i];
                    if (!adv_.empty()) {
                        const double a = adv_[i * n2_ + j];
                        const double tl = Ll + a * s1_.cl[i];
                        const double tr = Lr + a * s1_.cr[i];
                        if (tl >= 0.0 && tr >= 0.0) {
                            Ll = tl; Lc += a * s1_.cc[i]; Lr = tr;
                        } else if (a > 0.0) { // forward difference keeps the row monotone
                            Lc += -a / s1_.h_hi[i]; Lr += a / s1_.h_hi[i];
                        } else {
                            Ll += -a / s1_.h_lo[i]; Lc += a / s1_.h_lo[i];
                        }
                    }
                }
                if (!reaction.empty()) Lc += reaction[i * n2_ + j];
                lo[i] = -dtau * Ll;
                di[i] = 1.0 - dtau * Lc;
                up[i] = -dtau * Lr;
                d[i] = rhs[i * n2_ + j];
            }
            thomas(lo, di, up, d);
            for (std::size_t i = 0; i < n1_; ++i) mid[i * n2_ + j] = d[i];
        }

        // sweep along axis2 (contiguous lines)
        out.resize(n1_ * n2_);
        std::vector<double> lo2(n2_), di2(n2_), up2(n2_), d2row(n2_);
        for (std::size_t i = 0; i < n1_; ++i) {
            for (std::size_t j = 0; j < n2_; ++j) {
                double Ll = 0.0, Lc = 0.0, Lr = 0.0;
                if (j == 0) {
                    Lc = d2_[j] * s2_.dc[0];
                    Lr = d2_[j] * s2_.dr[0];
                } else if (j == n2_ - 1) {
                    Ll = d2_[j] * s2_.dl[j];
                    Lc = d2_[j] * s2_.dc[j];
                } else {
                    Ll = d2_[j] * s2_.dl[j];
                    Lc = d2_[j] * s2_.dc[j];
                    Lr = d2_[j] * s2_.dr[j];
                }
                lo2[j] = -dtau * Ll;
                di2[j] = 1.0 - dtau * Lc;
                up2[j] = -dtau * Lr;
                d2row[j] = mid[i * n2_ + j];
            }
            thomas(lo2, di2, up2, d2row);
            for (std::size_t j = 0; j < n2_; ++j) out[i * n2_ + j] = d2row[j];
        }
    }

private:
    std::size_t n1_, n2_;
    AxisStencil s1_, s2_;
    std::vector<double> d1_, d2_, adv_;
};

SolvedFields solve_common(ModelTag model, const strategy::ControlParams& params,
                          double varsigma, const GridSpec& grid, const PicardConfig& cfg) {
    params.validate();
    grid.validate();
    require(cfg.max_iterations >= 1, "need at least one Picard iteration");
    require(cfg.tolerance > 0.0, "Picard tolerance must be positive");
    require(cfg.damping > 0.0 && cfg.damping <= 1.0, "damping must be in (0,1]");
    require(std::abs(grid.times.back() - params.T) <= 1e-9 * params.T,
            "grid horizon must match params.T");

    const std::size_t n1 = grid.axis1.size();
    const std::size_t n2 = grid.axis2.size();
    const std::size_t nt = grid.times.size();
    const std::size_t nn = n1 * n2;

    std::vector<double> d1(n1), d2(n2), r(nn), adv;
    for (std::size_t i = 0; i < n1; ++i) {
        const double z = grid.axis1[i];
        d1[i] = 0.5 * params.gamma * params.gamma * z * z;
    }
    if (model == ModelTag::model1) {
        for (std::size_t j = 0; j < n2; ++j) {
            const double s = grid.axis2[j];
            d2[j] = 0.5 * params.sigma * params.sigma * s * s;
        }
        adv.resize(nn);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j)
                adv[i * n2 + j] = params.beta * (grid.axis2[j] - grid.axis1[i]);
        for (std::size_t i = 0; i < n1; ++i) {
            const double z = grid.axis1[i];
            const double coef = params.kappa / (params.eta * z * std::sqrt(z));
            for (std::size_t j = 0; j < n2; ++j) r[i * n2 + j] = coef;
        }
    } else {
        for (std::size_t j = 0; j < n2; ++j) {
            const double k = grid.axis2[j];
            d2[j] = 0.5 * varsigma * varsigma * k * k;
        }
        for (std::size_t i = 0; i < n1; ++i) {
            const double z = grid.axis1[i];
            const double zfac = 1.0 / (params.eta * z * std::sqrt(z));
            for (std::size_t j = 0; j < n2; ++j) r[i * n2 + j] = grid.axis2[j] * zfac;
        }
    }

    DouglasStepper stepper(grid, d1, d2, adv);

    SolvedFields fields;
    fields.model = model;
    fields.grid = grid;
    fields.params = params;
    fields.varsigma = varsigma;
    fields.theta0.assign(nt * nn, 0.0);
    fields.theta1.assign(nt * nn, 0.0);
    fields.theta2.assign(nt * nn, 0.0);
    for (std::size_t m = 0; m < nn; ++m)
        fields.theta2[(nt - 1) * nn + m] = -params.alpha;

    const std::vector<double> phi_source(nn, -params.phi);
    std::vector<double> theta1_source;
    if (model == ModelTag::model1) {
        theta1_source.resize(nn);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j)
                theta1_source[i * n2 + j] = params.beta * (grid.axis2[j] - grid.axis1[i]);
    }

    const double scale_bound = 10.0 * (params.alpha + params.phi * params.T) + 1.0;

    struct LevelState {
        std::vector<double> theta2, theta1, theta0;
    };

    std::vector<double> iter(nn), cand, reaction(nn), theta0_source(nn);

    // one implicit Euler step of the coupled system: theta2 by Picard on the
    // quadratic term, then theta1 and theta0 with their linear equations
    auto advance = [&](const LevelState& old, double dtau, std::size_t level) {
        LevelState next;

        // the Picard loop starts from the exact pointwise implicit solution of
        // the reaction part (stable root of dtau r x^2 - x + rhs = 0), which
        // leaves only the spatial coupling to the iteration; without it the
        // stiff terminal layer contracts slowly
        iter.resize(nn);
        for (std::size_t m = 0; m < nn; ++m) {
            const double rhs = old.theta2[m] - dtau * params.phi;
            const double disc = 1.0 - 4.0 * dtau * r[m] * rhs;
            iter[m] = 2.0 * rhs / (1.0 + std::sqrt(std::max(disc, 0.0)));
        }
        bool converged = false;
        bool monotone = true;
        double last_res = std::numeric_limits<double>::infinity();
        int used = 0;
        for (int it = 0; it < cfg.max_iterations; ++it) {
            for (std::size_t m = 0; m < nn; ++m) reaction[m] = r[m] * iter[m];
            stepper.step(old.theta2, reaction, phi_source, dtau, cand);
            if (cfg.damping < 1.0)
                for (std::size_t m = 0; m < nn; ++m)
                    cand[m] = cfg.damping * cand[m] + (1.0 - cfg.damping) * iter[m];
            const double res = sup_abs_diff(cand, iter);
            iter.swap(cand);
            ++used;
            if (res > last_res) monotone = false;
            last_res = res;
            if (res < cfg.tolerance) { converged = true; break; }
            if (!std::isfinite(res) || res > 1e12)
                throw PicardError("Picard iteration diverged at level " + std::to_string(level),
                                  res, it + 1);
        }
        fields.diagnostics.levels += 1;
        fields.diagnostics.total_iterations += static_cast<std::size_t>(used);
        if (monotone) fields.diagnostics.monotone_levels += 1;
        fields.diagnostics.worst_residual =
            std::max(fields.diagnostics.worst_residual, last_res);
        if (!converged)
            throw PicardError("Picard did not converge in " + std::to_string(cfg.max_iterations) +
                                  " iterations at level " + std::to_string(level) +
                                  " (residual " + std::to_string(last_res) + ")",
                              last_res, cfg.max_iterations);
        next.theta2 = iter;

        // theta1: linear, reaction r * theta2(new)
        for (std::size_t m = 0; m < nn; ++m) reaction[m] = r[m] * next.theta2[m];
        stepper.step(old.theta1, reaction, theta1_source, dtau, next.theta1);

        // theta0: linear, source r/4 * theta1(new)^2
        for (std::size_t m = 0; m < nn; ++m)
            theta0_source[m] = 0.25 * r[m] * next.theta1[m] * next.theta1[m];
        stepper.step(old.theta0, {}, theta0_source, dtau, next.theta0);
        return next;
    };

    LevelState current;
    current.theta2.assign(nn, -params.alpha);
    current.theta1.assign(nn, 0.0);
    current.theta0.assign(nn, 0.0);

    for (std::size_t level = nt - 1; level-- > 0;) {
        const double dtau = grid.times[level + 1] - grid.times[level];

        // local Richardson extrapolation of the implicit Euler step (one full
        // step against two half steps) removes the O(dtau) bias of the smooth
        // tail while keeping the scheme's strong damping of the terminal layer
        const LevelState full = advance(current, dtau, level);
        const LevelState half = advance(advance(current, 0.5 * dtau, level), 0.5 * dtau, level);
        LevelState next;
        next.theta2.resize(nn);
        next.theta1.resize(nn);
        next.theta0.resize(nn);
        for (std::size_t m = 0; m < nn; ++m) {
            next.theta2[m] = 2.0 * half.theta2[m] - full.theta2[m];
            next.theta1[m] = 2.0 * half.theta1[m] - full.theta1[m];
            next.theta0[m] = 2.0 * half.theta0[m] - full.theta0[m];
        }

        double sup = 0.0;
        for (double v : next.theta2) sup = std::max(sup, std::abs(v));
        if (sup > scale_bound)
            throw StepInstabilityError("theta2 sup norm " + std::to_string(sup) +
                                       " exceeds its a-priori scale; refine the time step");

        std::copy(next.theta2.begin(), next.theta2.end(), fields.theta2.begin() + level * nn);
        std::copy(next.theta1.begin(), next.theta1.end(), fields.theta1.begin() + level * nn);
        std::copy(next.theta0.begin(), next.theta0.end(), fields.theta0.begin() + level * nn);
        current = std::move(next);
    }
    return fields;
}

std::size_t locate(const std::vector<double>& xs, double x) {
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs.begin());
    if (i == 0) i = 1;
    if (i >= xs.size()) i = xs.size() - 1;
    return i - 1;
}

} // namespace

GridSpec GridSpec::log_spaced(std::size_t n_t, double T, double z_lo, double z_hi,
                              std::size_t n_z, double a_lo, double a_hi, std::size_t n_a) {
    require(n_t >= 1 && T > 0.0, "invalid time grid");
    require(z_lo > 0.0 && z_lo < z_hi && n_z >= 3, "invalid axis1 spec");
    require(a_lo > 0.0 && a_lo < a_hi && n_a >= 3, "invalid axis2 spec");
    GridSpec g;
    g.times.resize(n_t + 1);
    for (std::size_t k = 0; k <= n_t; ++k)
        g.times[k] = T * static_cast<double>(k) / static_cast<double>(n_t);
    g.times.back() = T;
    auto geom = [](double lo, double hi, std::size_t n) {
        std::vector<double> v(n);
        const double l0 = std::log(lo), dl = (std::log(hi) - l0) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(l0 + dl * static_cast<double>(i));
        v.front() = lo;
        v.back() = hi;
        return v;
    };
    g.axis1 = geom(z_lo, z_hi, n_z);
    g.axis2 = geom(a_lo, a_hi, n_a);
    return g;
}

void GridSpec::validate() const {
    require(times.size() >= 2, "need at least two time levels");
    require(times.front() == 0.0, "time grid must start at 0");
    for (std::size_t k = 0; k + 1 < times.size(); ++k)
        require(times[k] < times[k + 1], "time grid must be increasing");
    for (const auto* axis : {&axis1, &axis2}) {
        require(axis->size() >= 3, "each space axis needs at least 3 nodes");
        require(axis->front() > 0.0, "space nodes must be positive");
        for (std::size_t i = 0; i + 1 < axis->size(); ++i)
            require((*axis)[i] < (*axis)[i + 1], "space nodes must be increasing");
    }
}

double SolvedFields::value(const std::vector<double>& field, double t, double a1,
                           double a2) const {
    const auto& ts = grid.times;
    const auto& x = grid.axis1;
    const auto& y = grid.axis2;
    if (t < ts.front() - 1e-12 || t > ts.back() + 1e-12 ||
        a1 < x.front() || a1 > x.back() || a2 < y.front() || a2 > y.back())
        throw std::domain_error("query outside the solved grid hull");

    const std::size_t k = locate(ts, std::clamp(t, ts.front(), ts.back()));
    const std::size_t i = locate(x, a1);
    const std::size_t j = locate(y, a2);
    const double wt = std::clamp((t - ts[k]) / (ts[k + 1] - ts[k]), 0.0, 1.0);
    const double wi = (a1 - x[i]) / (x[i + 1] - x[i]);
    const double wj = (a2 - y[j]) / (y[j + 1] - y[j]);

    auto bilinear = [&](std::size_t level) {
        const double v00 = field[index(level, i, j)];
        const double v01 = field[index(level, i, j + 1)];
        const double v10 = field[index(level, i + 1, j)];
        const double v11 = field[index(level, i + 1, j + 1)];
        return (1.0 - wi) * ((1.0 - wj) * v00 + wj * v01) +
               wi * ((1.0 - wj) * v10 + wj * v11);
    };
    return (1.0 - wt) * bilinear(k) + wt * bilinear(k + 1);
}

SolvedFields solve_model1(const strategy::ControlParams& params, const GridSpec& grid,
                          const PicardConfig& cfg) {
    return solve_common(ModelTag::model1, params, 0.0, grid, cfg);
}

SolvedFields solve_model2(const strategy::ControlParams& params, double varsigma,
                          const GridSpec& grid, const PicardConfig& cfg) {
    require(varsigma >= 0.0, "varsigma must be nonnegative");
    return solve_common(ModelTag::model2, params, varsigma, grid, cfg);
}

double speed_numerical_model1(const SolvedFields& fields, double t,
                              double inventory, double Z, double S) {
    require(fields.model == ModelTag::model1, "Model I fields required");
    const double t2 = fields.value(fields.theta2, t, Z, S);
    const double t1 = fields.value(fields.theta1, t, Z, S);
    return -fields.params.kappa / (2.0 * fields.params.eta) *
           (2.0 * t2 * inventory + t1) / (Z * std::sqrt(Z));
}

double speed_model2(const SolvedFields& fields, double t,
                    double inventory, double Z, double kappa) {
    require(fields.model == ModelTag::model2, "Model II fields required");
    const double t2 = fields.value(fields.theta2, t, Z, kappa);
    const double t1 = fields.value(fields.theta1, t, Z, kappa);
    return -kappa / (2.0 * fields.params.eta) *
           (2.0 * t2 * inventory + t1) / (Z * std::sqrt(Z));
}

std::vector<MertonCoeffs> merton_coeffs_on_grid(const strategy::ControlParams& params,
                                                const std::vector<double>& times) {
    params.validate();
    require(params.phi > 0.0, "Merton bound coefficients need phi > 0");
    for (double t : times) require(t >= 0.0 && t <= params.T + 1e-12, "time outside [0, T]");

    const double beta = params.beta;
    const double phi = params.phi;
    const double x = params.gamma * params.gamma - 2.0 * beta;
    const double s2 = params.sigma * params.sigma;
    const double T = params.T;

    auto C_of = [&](double t) {
        const double tau = T - t;
        if (std::abs(x * tau) < 1e-12)
            return beta * beta * tau * (1.0 + 0.5 * x * tau) / (4.0 * phi);
        return beta * beta * std::expm1(x * tau) / (4.0 * phi * x);
    };

    // fine backward recurrence, exact exponential kernels, Simpson local integrals
    const std::size_t M = 8192;
    const double h = T / static_cast<double>(M);
    std::vector<double> B(M + 1, 0.0), A(M + 1, 0.0);
    auto gB = [&](double t) { return 4.0 * beta * C_of(t) - beta * beta / phi; };
    const double ebh = std::exp(-beta * h), ebh2 = std::exp(-beta * h * 0.5);
    for (std::size_t m = M; m-- > 0;) {
        const double t0 = h * static_cast<double>(m);
        B[m] = ebh * B[m + 1] +
               h / 6.0 * (gB(t0) + 4.0 * ebh2 * gB(t0 + 0.5 * h) + ebh * gB(t0 + h));
    }
    // B at half nodes by 4-point interpolation keeps the quadrature O(h^4)
    auto B_mid = [&](std::size_t m) {
        if (m == 0 || m + 2 > M) {
            const std::size_t base = (m == 0) ? 0 : M - 3;
            const double u = (static_cast<double>(m) + 0.5) - static_cast<double>(base);
            // cubic Lagrange at offsets 0,1,2,3
            const double l0 = (u - 1) * (u - 2) * (u - 3) / -6.0;
            const double l1 = u * (u - 2) * (u - 3) / 2.0;
            const double l2 = u * (u - 1) * (u - 3) / -2.0;
            const double l3 = u * (u - 1) * (u - 2) / 6.0;
            return l0 * B[base] + l1 * B[base + 1] + l2 * B[base + 2] + l3 * B[base + 3];
        }
        return (-B[m - 1] + 9.0 * B[m] + 9.0 * B[m + 1] - B[m + 2]) / 16.0;
    };
    auto gA_node = [&](std::size_t m) { return 0.5 * beta * B[m] + beta * beta / (4.0 * phi); };
    const double esh = std::exp(s2 * h), esh2 = std::exp(s2 * h * 0.5);
    for (std::size_t m = M; m-- > 0;) {
        const double gmid = 0.5 * beta * B_mid(m) + beta * beta / (4.0 * phi);
        A[m] = esh * A[m + 1] +
               h / 6.0 * (gA_node(m) + 4.0 * esh2 * gmid + esh * gA_node(m + 1));
    }

    auto interp = [&](const std::vector<double>& v, double t) {
        const double pos = std::clamp(t / h, 0.0, static_cast<double>(M));
        const std::size_t m = std::min(static_cast<std::size_t>(pos), M - 1);
        const double w = pos - static_cast<double>(m);
        return v[m] + w * (v[m + 1] - v[m]);
    };

    std::vector<MertonCoeffs> out;
    out.reserve(times.size());
    for (double t : times)
        out.push_back(MertonCoeffs{interp(A, t), interp(B, t), C_of(t)});
    return out;
}

MertonCoeffs merton_bound_coeffs(const strategy::ControlParams& params, double t) {
    return merton_coeffs_on_grid(params, {t}).front();
}

namespace {

struct EnvelopeAccumulator {
    FieldBoundCheck check;
    bool first = true;

    void observe(double value, double lo, double hi, std::size_t level, std::size_t i,
                 std::size_t j) {
        const double tol = 1e-8 * (1.0 + std::abs(lo) + std::abs(hi));
        const double margin = std::min(value - lo, hi - value);
        if (margin < -tol) ++check.violations;
        if (first || margin < check.min_margin) {
            first = false;
            check.min_margin = margin;
            check.worst_value = value;
            check.worst_lower = lo;
            check.worst_upper = hi;
            check.level = level;
            check.i = i;
            check.j = j;
        }
    }
};

BoundReport finalize(std::vector<EnvelopeAccumulator>& accs) {
    BoundReport report;
    report.worst_margin = std::numeric_limits<double>::infinity();
    for (auto& a : accs) {
        report.pass = report.pass && a.check.violations == 0;
        report.worst_margin = std::min(report.worst_margin, a.check.min_margin);
        report.checks.push_back(a.check);
    }
    return report;
}

} // namespace

BoundReport check_bounds_model1(const SolvedFields& fields,
                                const strategy::ControlParams& params) {
    require(fields.model == ModelTag::model1, "Model I fields required");
    const auto merton = merton_coeffs_on_grid(params, fields.grid.times);

    std::vector<EnvelopeAccumulator> accs(3);
    accs[0].check.field = "theta0";
    accs[1].check.field = "theta1";
    accs[2].check.field = "theta2";

    const std::size_t n1 = fields.grid.axis1.size();
    const std::size_t n2 = fields.grid.axis2.size();
    for (std::size_t k = 0; k < fields.grid.times.size(); ++k) {
        const double t = fields.grid.times[k];
        const double pen = params.alpha + params.phi * (params.T - t);
        const auto& mc = merton[k];
        for (std::size_t i = 0; i < n1; ++i) {
            const double z = fields.grid.axis1[i];
            for (std::size_t j = 0; j < n2; ++j) {
                const double s = fields.grid.axis2[j];
                const double quad = mc.A * s * s + 0.5 * mc.B * s * z + mc.C * z * z;
                const double ezt = params.beta > 0.0
                    ? dynamics::expected_terminal_rate(z, s, params.beta, t, params.T)
                    : z;
                const std::size_t idx = fields.index(k, i, j);
                accs[0].observe(fields.theta0[idx], 0.0, quad, k, i, j);
                accs[1].observe(fields.theta1[idx], (ezt - z) - pen - quad, quad + pen, k, i, j);
                accs[2].observe(fields.theta2[idx], -pen, quad, k, i, j);
            }
        }
    }
    return finalize(accs);
}

BoundReport check_bounds_model2(const SolvedFields& fields) {
    require(fields.model == ModelTag::model2, "Model II fields required");
    const auto& params = fields.params;

    std::vector<EnvelopeAccumulator> accs(3);
    accs[0].check.field = "theta0";
    accs[1].check.field = "theta1";
    accs[2].check.field = "theta2";

    const std::size_t n1 = fields.grid.axis1.size();
    const std::size_t n2 = fields.grid.axis2.size();
    for (std::size_t k = 0; k < fields.grid.times.size(); ++k) {
        const double pen = params.alpha + params.phi * (params.T - fields.grid.times[k]);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) {
                const std::size_t idx = fields.index(k, i, j);
                accs[0].observe(fields.theta0[idx], -1e-12, 1e-12, k, i, j);
                accs[1].observe(fields.theta1[idx], -1e-12, 1e-12, k, i, j);
                accs[2].observe(fields.theta2[idx], -pen, 0.0, k, i, j);
            }
    }
    return finalize(accs);
}

void SolvedFields::write_bundle(const std::string& dir, std::size_t t_stride,
                                const std::string& comment) const {
    namespace fs = std::filesystem;
    require(t_stride >= 1, "stride must be positive");
    fs::create_directories(dir);

    const std::array<const std::vector<double>*, 3> data{&theta0, &theta1, &theta2};
    const std::array<const char*, 3> names{"theta0", "theta1", "theta2"};
    for (int f = 0; f < 3; ++f) {
        std::ofstream out(fs::path(dir) / (std::string(names[f]) + ".csv"));
        if (!out) throw std::runtime_error("cannot write field bundle in " + dir);
        out << "# ammlab-fields v1\n";
        if (!comment.empty()) out << "# " << comment << '\n';
        out << "# model," << (model == ModelTag::model1 ? 1 : 2) << '\n';
        out << "# params,phi=" << io::format_double(params.phi)
            << ",alpha=" << io::format_double(params.alpha)
            << ",eta=" << io::format_double(params.eta)
            << ",T=" << io::format_double(params.T)
            << ",beta=" << io::format_double(params.beta)
            << ",gamma=" << io::format_double(params.gamma)
            << ",sigma=" << io::format_double(params.sigma)
            << ",kappa=" << io::format_double(params.kappa)
            << ",varsigma=" << io::format_double(varsigma) << '\n';
        auto write_axis = [&](const char* name, const std::vector<double>& v,
                              std::size_t stride) {
            out << "# " << name;
            for (std::size_t k = 0; k < v.size(); k += stride)
                out << ',' << io::format_double(v[k]);
            if (stride > 1 && (v.size() - 1) % stride != 0)
                out << ',' << io::format_double(v.back());
            out << '\n';
        };
        write_axis("times", grid.times, t_stride);
        write_axis("axis1", grid.axis1, 1);
        write_axis("axis2", grid.axis2, 1);
        out << "t,axis1,axis2,value\n";
        auto put_level = [&](std::size_t k) {
            for (std::size_t i = 0; i < grid.axis1.size(); ++i)
                for (std::size_t j = 0; j < grid.axis2.size(); ++j)
                    out << io::format_double(grid.times[k]) << ','
                        << io::format_double(grid.axis1[i]) << ','
                        << io::format_double(grid.axis2[j]) << ','
                        << io::format_double((*data[f])[index(k, i, j)]) << '\n';
        };
        bool wrote_last = false;
        for (std::size_t k = 0; k < grid.times.size(); k += t_stride) {
            put_level(k);
            wrote_last = (k + 1 == grid.times.size());
        }
        if (!wrote_last) put_level(grid.times.size() - 1);
    }
}

SolvedFields SolvedFields::read_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    SolvedFields fields;
    const std::array<const char*, 3> names{"theta0", "theta1", "theta2"};
    std::array<std::vector<double>*, 3> data{&fields.theta0, &fields.theta1, &fields.theta2};

    for (int f = 0; f < 3; ++f) {
        const std::string file = (fs::path(dir) / (std::string(names[f]) + ".csv")).string();
        std::ifstream in(file);
        if (!in) throw io::SchemaError(file + ": cannot open");
        std::string line;
        std::vector<double> times, axis1, axis2;
        while (std::getline(in, line) && !line.empty() && line[0] == '#') {
            const auto fieldsv = io::split_csv_line(line);
            const std::string tag = fieldsv[0];
            auto parse_axis = [&](std::vector<double>& dst) {
                dst.clear();
                for (std::size_t i = 1; i < fieldsv.size(); ++i)
                    dst.push_back(io::parse_double(fieldsv[i], file, 0, tag));
            };
            if (tag == "# model") fields.model = fieldsv[1] == "1" ? ModelTag::model1 : ModelTag::model2;
            else if (tag == "# times") parse_axis(times);
            else if (tag == "# axis1") parse_axis(axis1);
            else if (tag == "# axis2") parse_axis(axis2);
            else if (tag == "# params") {
                for (std::size_t i = 1; i < fieldsv.size(); ++i) {
                    const auto eq = fieldsv[i].find('=');
                    const std::string key = fieldsv[i].substr(0, eq);
                    const double v = io::parse_double(fieldsv[i].substr(eq + 1), file, 0, key);
                    if (key == "phi") fields.params.phi = v;
                    else if (key == "alpha") fields.params.alpha = v;
                    else if (key == "eta") fields.params.eta = v;
                    else if (key == "T") fields.params.T = v;
                    else if (key == "beta") fields.params.beta = v;
                    else if (key == "gamma") fields.params.gamma = v;
                    else if (key == "sigma") fields.params.sigma = v;
                    else if (key == "kappa") fields.params.kappa = v;
                    else if (key == "varsigma") fields.varsigma = v;
                }
            }
        }
        if (f == 0) {
            fields.grid.times = times;
            fields.grid.axis1 = axis1;
            fields.grid.axis2 = axis2;
        }
        const std::size_t nn = axis1.size() * axis2.size();
        data[f]->assign(times.size() * nn, 0.0);
        // header row already consumed by the comment loop's last getline
        if (line != "t,axis1,axis2,value")
            throw io::SchemaError(file + ": missing field header row");
        std::size_t row = 0;
        std::size_t flat = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ++row;
            const auto cols = io::split_csv_line(line);
            if (cols.size() != 4)
                throw io::SchemaError(file + " row " + std::to_string(row) + ": expected 4 fields");
            (*data[f])[flat++] = io::parse_double(cols[3], file, row, "value");
        }
        if (flat != data[f]->size())
            throw io::SchemaError(file + ": field size mismatch");
    }
    return fields;
}

} // namespace amm::pde
