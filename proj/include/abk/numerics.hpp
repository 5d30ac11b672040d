#pragma once

/**
 * @file numerics.hpp
 * @brief Dimension-generic numerical kernel.
 *
 * Everything here works on dense Eigen vectors whose sizes are runtime
 * values. Derivatives are central differences
 *
 *     dF(x)[e_j] ~ (F(x + h e_j) - F(x - h e_j)) / (2h),
 *
 * which are O(h^2) accurate for C^3 maps. The default step
 * h = 1e-5 * max(1, |x|_inf) sits near the cube root of machine epsilon,
 * where truncation and round-off errors balance for doubles.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "abk/errors.hpp"

namespace abk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Point -> matrix, e.g. an anchor rho_U(x) or a fibre transition M(x).
using MatrixFunction = std::function<Matrix(const Vector&)>;

inline std::string format_point(const Vector& x) {
    std::ostringstream os;
    os.precision(6);
    os << '[';
    for (Index i = 0; i < x.size(); ++i) {
        if (i) os << ',';
        os << x[i];
    }
    os << ']';
    return os.str();
}

/**
 * A smooth map R^dom -> R^cod given by an evaluation callback and an
 * optional analytic Jacobian. Immutable once built; copies share nothing
 * mutable, so concurrent evaluation is safe as long as the callbacks are.
 *
 * dom_dim may be zero: maps out of a point base (m = 0) are constants.
 */
class SmoothMap {
public:
    using Eval = std::function<Vector(const Vector&)>;

    SmoothMap() = default;

    SmoothMap(Index dom_dim, Index cod_dim, Eval eval, MatrixFunction jacobian = {})
        : dom_dim_(dom_dim), cod_dim_(cod_dim), eval_(std::move(eval)), jacobian_(std::move(jacobian)) {
        if (dom_dim < 0 || cod_dim < 0) throw DimensionError("SmoothMap: negative dimension");
        if (!eval_) throw PreconditionError("SmoothMap: empty evaluation callback");
    }

    Index dom_dim() const noexcept { return dom_dim_; }
    Index cod_dim() const noexcept { return cod_dim_; }
    bool has_analytic_jacobian() const noexcept { return static_cast<bool>(jacobian_); }

    Vector operator()(const Vector& x) const {
        if (x.size() != dom_dim_) {
            throw DimensionError("SmoothMap: argument has length " + std::to_string(x.size()) +
                                 ", expected " + std::to_string(dom_dim_));
        }
        Vector y = eval_(x);
        if (y.size() != cod_dim_) {
            throw DimensionError("SmoothMap: value has length " + std::to_string(y.size()) +
                                 ", expected " + std::to_string(cod_dim_));
        }
        return y;
    }

    Matrix analytic_jacobian(const Vector& x) const {
        if (!jacobian_) throw PreconditionError("SmoothMap: no analytic Jacobian");
        Matrix j = jacobian_(x);
        if (j.rows() != cod_dim_ || j.cols() != dom_dim_) throw DimensionError("SmoothMap: Jacobian has wrong shape");
        return j;
    }

    static SmoothMap constant(Index dom_dim, Vector value) {
        const Index cod = value.size();
        return SmoothMap(
            dom_dim, cod, [value = std::move(value)](const Vector&) { return value; },
            [cod, dom_dim](const Vector&) { return Matrix::Zero(cod, dom_dim); });
    }

    static SmoothMap linear(Matrix a) {
        const Index rows = a.rows(), cols = a.cols();
        return SmoothMap(
            cols, rows, [a](const Vector& x) -> Vector { return a * x; },
            [a](const Vector&) { return a; });
    }

    static SmoothMap identity(Index dim) { return linear(Matrix::Identity(dim, dim)); }

private:
    Index dom_dim_ = 0;
    Index cod_dim_ = 0;
    Eval eval_;
    MatrixFunction jacobian_;
};

/// Scalar-valued convenience wrapper: builds a SmoothMap with cod_dim 1.
inline SmoothMap scalar_map(Index dom_dim, std::function<double(const Vector&)> f) {
    return SmoothMap(dom_dim, 1, [f = std::move(f)](const Vector& x) {
        Vector y(1);
        y[0] = f(x);
        return y;
    });
}

inline double default_step(const Vector& x) {
    const double scale = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
    return 1e-5 * std::max(1.0, scale);
}

namespace detail {

inline Vector checked_eval(const SmoothMap& f, const Vector& probe) {
    Vector y = f(probe);
    if (!y.allFinite()) throw NonFiniteError("non-finite evaluation at probe " + format_point(probe), probe);
    return y;
}

} // namespace detail

/// Central-difference Jacobian; always differences, even if an analytic Jacobian exists.
inline Matrix fd_jacobian(const SmoothMap& f, const Vector& x, double h) {
    if (!(h > 0.0)) throw PreconditionError("fd_jacobian: step must be positive");
    Matrix jac(f.cod_dim(), f.dom_dim());
    Vector probe = x;
    for (Index j = 0; j < f.dom_dim(); ++j) {
        probe[j] = x[j] + h;
        const Vector plus = detail::checked_eval(f, probe);
        probe[j] = x[j] - h;
        const Vector minus = detail::checked_eval(f, probe);
        probe[j] = x[j];
        jac.col(j) = (plus - minus) / (2.0 * h);
    }
    return jac;
}

inline Matrix fd_jacobian(const SmoothMap& f, const Vector& x) { return fd_jacobian(f, x, default_step(x)); }

/// Analytic Jacobian when present, central differences otherwise.
inline Matrix jacobian(const SmoothMap& f, const Vector& x) {
    if (f.has_analytic_jacobian()) return f.analytic_jacobian(x);
    return fd_jacobian(f, x);
}

/**
 * dF(x)[v] by one central difference along v. The step is divided by
 * max(1, |v|_inf) so that the probe points stay within h of x.
 */
inline Vector directional_derivative(const SmoothMap& f, const Vector& x, const Vector& v,
                                     std::optional<double> step = std::nullopt) {
    if (v.size() != f.dom_dim()) throw DimensionError("directional_derivative: direction has wrong length");
    const double vnorm = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    if (vnorm == 0.0) return Vector::Zero(f.cod_dim());
    const double h = step.value_or(default_step(x)) / std::max(1.0, vnorm);
    if (!(h > 0.0)) throw PreconditionError("directional_derivative: step must be positive");
    const Vector plus = detail::checked_eval(f, x + h * v);
    const Vector minus = detail::checked_eval(f, x - h * v);
    return (plus - minus) / (2.0 * h);
}

/// Derivative of a matrix-valued map x -> M(x) in direction y, entrywise central differences.
inline Matrix matrix_directional_derivative(const MatrixFunction& m, const Vector& x, const Vector& y) {
    const double ynorm = y.size() ? y.cwiseAbs().maxCoeff() : 0.0;
    const Matrix base = m(x);
    if (ynorm == 0.0) return Matrix::Zero(base.rows(), base.cols());
    const double h = default_step(x) / std::max(1.0, ynorm);
    const Matrix plus = m(x + h * y);
    const Matrix minus = m(x - h * y);
    if (!plus.allFinite()) throw NonFiniteError("non-finite matrix at probe " + format_point(x + h * y), x + h * y);
    if (!minus.allFinite()) throw NonFiniteError("non-finite matrix at probe " + format_point(x - h * y), x - h * y);
    return (plus - minus) / (2.0 * h);
}

// -----------------------------------------------------------------------------
// Fixed-step integration
// -----------------------------------------------------------------------------

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;

    std::size_t size() const noexcept { return times.size(); }
    const Vector& back() const { return states.back(); }
};

/// Trajectory plus an error flag; on failure the trajectory holds every finite step taken.
struct Integration {
    Trajectory trajectory;
    bool ok = true;
    std::string error;
};

/// Classical fourth-order Runge-Kutta for the autonomous system x' = vf(x).
inline Integration rk4_integrate(const SmoothMap& vf, const Vector& x0, double t0, double t1, int steps) {
    if (vf.dom_dim() != vf.cod_dim()) throw DimensionError("rk4_integrate: vector field must map R^n to R^n");
    if (x0.size() != vf.dom_dim()) throw DimensionError("rk4_integrate: initial state has wrong length");
    if (steps < 1) throw PreconditionError("rk4_integrate: steps must be >= 1");
    if (!(t1 > t0)) throw PreconditionError("rk4_integrate: t1 must exceed t0");

    Integration out;
    out.trajectory.times.reserve(static_cast<std::size_t>(steps) + 1);
    out.trajectory.states.reserve(static_cast<std::size_t>(steps) + 1);
    out.trajectory.times.push_back(t0);
    out.trajectory.states.push_back(x0);

    const double h = (t1 - t0) / steps;
    Vector x = x0;
    for (int n = 0; n < steps; ++n) {
        const Vector k1 = vf(x);
        const Vector k2 = vf(x + 0.5 * h * k1);
        const Vector k3 = vf(x + 0.5 * h * k2);
        const Vector k4 = vf(x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
        if (!x.allFinite()) {
            out.ok = false;
            out.error = "non-finite state at step " + std::to_string(n + 1);
            return out;
        }
        // t0 + (n+1)h rather than accumulating h keeps the last time equal to t1.
        out.trajectory.times.push_back(n + 1 == steps ? t1 : t0 + (n + 1) * h);
        out.trajectory.states.push_back(x);
    }
    return out;
}

// -----------------------------------------------------------------------------
// Defects
// -----------------------------------------------------------------------------

/// Max-norm residual of an identity over a sample set, with the sample that attains it.
/// A NaN residual sticks, so broken inputs never report as passing.
struct Defect {
    double value = 0.0;
    Vector at;
    bool sampled = false;

    void absorb(double residual, const Vector& point) {
        if (std::isnan(value)) return;
        if (!sampled || std::isnan(residual) || residual > value) {
            value = residual;
            at = point;
        }
        sampled = true;
    }

    void absorb(const Defect& other) {
        if (other.sampled) absorb(other.value, other.at);
    }
};

/// Tolerance tiers used by verification reports.
namespace tolerance {
inline constexpr double exact = 1e-9;   // derivative-free identities
inline constexpr double single = 1e-5;  // one finite-difference layer
inline constexpr double nested = 1e-4;  // differences of differences
} // namespace tolerance

inline double max_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
inline double max_norm(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

} // namespace abk
