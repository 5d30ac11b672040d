#pragma once

// Semisprays and sprays on an anchored bundle.
//
// On a chart the semispray is stored through its coefficients G(x, u); the
// vector field on the total space is (x, u) -> (rho_U(x) u, -2 G(x, u)), so
// the base-velocity slot equals the anchor by construction. Points of the
// total space are packed as a single vector (x_1..x_m, u_1..u_k).

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "abk/bundle.hpp"

namespace abk {

inline const std::vector<double> default_lambdas{0.5, 2.0, 3.0};

/// Fibre samples closer than this to the zero section are skipped by homogeneity checks.
inline constexpr double zero_section_exclusion = 0.1;

inline Vector join(const Vector& x, const Vector& u) {
    Vector xu(x.size() + u.size());
    xu << x, u;
    return xu;
}

struct SemisprayLocal {
    AnchoredBundleSpec bundle;
    std::map<std::string, SmoothMap> coefficients;  // G_phi : R^{m+k} -> R^k

    Index base_dim() const noexcept { return bundle.base_dim; }
    Index fibre_dim() const noexcept { return bundle.fibre_dim; }

    const SmoothMap& coefficient(const std::string& chart) const {
        auto it = coefficients.find(chart);
        if (it == coefficients.end()) throw ChartError("semispray has no coefficients on chart '" + chart + "'");
        return it->second;
    }

    /// (x, u) -> (rho_U(x) u, -2 G(x, u)), the vector part of S on this chart.
    SmoothMap field(const std::string& chart) const {
        const Index m = base_dim(), k = fibre_dim();
        return SmoothMap(m + k, m + k,
                         [rho = bundle.anchor_function(chart), g = coefficient(chart), m, k](const Vector& xu) -> Vector {
                             const Vector x = xu.head(m);
                             const Vector u = xu.tail(k);
                             Vector out(m + k);
                             out << rho(x) * u, -2.0 * g(xu);
                             return out;
                         });
    }

    /// Full local representative (x, u, rho_U(x) u, -2 G(x, u)).
    Vector local_representative(const std::string& chart, const Vector& xu) const {
        return join(xu, field(chart)(xu));
    }
};

inline SemisprayLocal build_semispray(AnchoredBundleSpec bundle, std::map<std::string, SmoothMap> coefficients) {
    const Index m = bundle.base_dim, k = bundle.fibre_dim;
    for (const auto& [chart, g] : coefficients) {
        bundle.require_chart(chart);
        if (!bundle.anchors.count(chart)) throw ChartError("semispray chart '" + chart + "' has no anchor");
        if (g.dom_dim() != m + k || g.cod_dim() != k)
            throw DimensionError("semispray coefficients on chart '" + chart + "' must map R^" + std::to_string(m + k) +
                                 " to R^" + std::to_string(k));
    }
    return SemisprayLocal{std::move(bundle), std::move(coefficients)};
}

/// A curve t -> (x(t), w(t)) in one chart of the total space.
struct BundleCurve {
    Index base_dim = 0;
    Index fibre_dim = 0;
    Trajectory trajectory;

    Vector x(std::size_t i) const { return trajectory.states[i].head(base_dim); }
    Vector w(std::size_t i) const { return trajectory.states[i].tail(fibre_dim); }
};

/**
 * max over interior grid times of |x'(t) - rho_U(x(t)) w(t)|_inf, with x'
 * taken by central differences on the curve's own grid.
 */
inline Defect admissibility_defect(const AnchoredBundleSpec& bundle, const std::string& chart, const BundleCurve& c) {
    const auto& tr = c.trajectory;
    if (tr.size() < 3) throw PreconditionError("admissibility_defect: curve needs at least 3 samples");
    if (c.base_dim != bundle.base_dim || c.fibre_dim != bundle.fibre_dim)
        throw DimensionError("admissibility_defect: curve dimensions do not match the bundle");
    for (std::size_t i = 1; i < tr.size(); ++i)
        if (!(tr.times[i] > tr.times[i - 1])) throw PreconditionError("admissibility_defect: times must increase");

    Defect d;
    for (std::size_t i = 1; i + 1 < tr.size(); ++i) {
        const Vector xdot = (c.x(i + 1) - c.x(i - 1)) / (tr.times[i + 1] - tr.times[i - 1]);
        const Vector predicted = bundle.anchor(chart, c.x(i)) * c.w(i);
        Vector where(1);
        where[0] = tr.times[i];
        d.absorb(max_norm(Vector(xdot - predicted)), where);
    }
    return d;
}

struct SemisprayFlow {
    BundleCurve curve;
    bool ok = true;
    std::string error;
};

/// RK4 integral curve of the semispray starting at start = (x0, u0).
inline SemisprayFlow integrate_semispray(const SemisprayLocal& s, const std::string& chart, const Vector& start,
                                         double t0, double t1, int steps) {
    if (start.size() != s.base_dim() + s.fibre_dim())
        throw DimensionError("integrate_semispray: start point must have length m+k = " +
                             std::to_string(s.base_dim() + s.fibre_dim()));
    Integration run = rk4_integrate(s.field(chart), start, t0, t1, steps);
    return {BundleCurve{s.base_dim(), s.fibre_dim(), std::move(run.trajectory)}, run.ok, std::move(run.error)};
}

namespace detail {

inline void check_lambdas(const std::vector<double>& lambdas) {
    if (lambdas.empty()) throw PreconditionError("at least one lambda is required");
    for (double l : lambdas)
        if (!(l > 0.0)) throw PreconditionError("lambda must be positive (positive homogeneity only)");
}

inline void check_off_zero_section(const Vector& u) {
    if (u.norm() == 0.0) throw PreconditionError("sample lies on the zero section");
}

} // namespace detail

/// max over samples (x, v) and lambdas of |G(x, lambda v) - lambda^2 G(x, v)|_inf
inline Defect spray_defect(const SemisprayLocal& s, const std::string& chart, const std::vector<double>& lambdas,
                           const std::vector<Vector>& samples) {
    detail::check_lambdas(lambdas);
    const Index m = s.base_dim(), k = s.fibre_dim();
    const SmoothMap& g = s.coefficient(chart);
    Defect d;
    for (const auto& xu : samples) {
        if (xu.size() != m + k) throw DimensionError("spray_defect: sample must have length m+k");
        const Vector x = xu.head(m), v = xu.tail(k);
        detail::check_off_zero_section(v);
        const Vector gv = g(xu);
        for (double l : lambdas) {
            const Vector scaled = g(join(x, l * v));
            d.absorb(max_norm(Vector(scaled - l * l * gv)), xu);
        }
    }
    return d;
}

/**
 * Homothety relation on the full local representative: compares
 * S(x, lambda v) with lambda (h_lambda)_* S(x, v) slot by slot, where
 * (h_lambda)_* (x, v, y, w) = (x, lambda v, y, lambda w).
 */
inline Defect field_homothety_defect(const SemisprayLocal& s, const std::string& chart,
                                     const std::vector<double>& lambdas, const std::vector<Vector>& samples) {
    detail::check_lambdas(lambdas);
    const Index m = s.base_dim(), k = s.fibre_dim();
    Defect d;
    for (const auto& xu : samples) {
        const Vector x = xu.head(m), v = xu.tail(k);
        detail::check_off_zero_section(v);
        const Vector rep = s.local_representative(chart, xu);
        for (double l : lambdas) {
            const Vector lhs = s.local_representative(chart, join(x, l * v));
            Vector rhs(2 * (m + k));
            rhs << x, l * v, l * rep.segment(m + k, m), l * l * rep.tail(k);
            d.absorb(max_norm(Vector(lhs - rhs)), xu);
        }
    }
    return d;
}

struct EulerReport {
    Defect residual;
    std::optional<double> estimated_degree;  // empty when every sample had |G(v)| <= 1e-9
};

/**
 * Euler test for positive homogeneity of degree r of a fibre map G : R^k -> R^k:
 * residual = max |dG_v(v) - r G(v)|, and the degree estimated as the median of
 * log(|G(lambda v)| / |G(v)|) / log(lambda) over samples and lambda in {2, 4}.
 */
inline EulerReport euler_check(const SmoothMap& g, double degree, const std::vector<Vector>& samples) {
    if (g.dom_dim() != g.cod_dim()) throw DimensionError("euler_check: G must map R^k to R^k");
    EulerReport report;
    std::vector<double> estimates;
    for (const auto& v : samples) {
        detail::check_off_zero_section(v);
        const Vector gv = g(v);
        report.residual.absorb(max_norm(Vector(directional_derivative(g, v, v) - degree * gv)), v);
        const double base = gv.norm();
        if (base <= 1e-9) continue;
        for (double l : {2.0, 4.0}) estimates.push_back(std::log(g(l * v).norm() / base) / std::log(l));
    }
    if (!estimates.empty()) {
        const auto mid = estimates.begin() + static_cast<std::ptrdiff_t>(estimates.size() / 2);
        std::nth_element(estimates.begin(), mid, estimates.end());
        double median = *mid;
        if (estimates.size() % 2 == 0) median = 0.5 * (median + *std::max_element(estimates.begin(), mid));
        report.estimated_degree = median;
    }
    return report;
}

/// G(x, .) with the base point frozen.
inline SmoothMap freeze_base(const SmoothMap& g, const Vector& x) {
    const Index k = g.dom_dim() - x.size();
    return SmoothMap(k, g.cod_dim(), [g, x](const Vector& v) { return g(join(x, v)); });
}

/// Default fibre stencil: +-e_j and the all-ones vector.
inline std::vector<Vector> fibre_stencil(Index k) {
    std::vector<Vector> out;
    for (Index j = 0; j < k; ++j) {
        out.push_back(Vector::Unit(k, j));
        out.push_back(-Vector::Unit(k, j));
    }
    out.push_back(Vector::Ones(k));
    return out;
}

/**
 * Overlap law for the coefficients:
 *   G_psi(h(x), M(x) u) = M(x) G_phi(x, u) - 1/2 M'(x)(rho_U(x) u) u,
 * with M' taken entrywise by central differences. The anchor half of the
 * law is anchor_compat_defect.
 */
inline Defect transformation_defect(const SemisprayLocal& s, const TransitionMap& t,
                                    std::optional<std::vector<Vector>> fibre_samples = std::nullopt) {
    detail::require_samples(t);
    const Index k = s.fibre_dim();
    const std::vector<Vector> us = fibre_samples.value_or(fibre_stencil(k));
    const SmoothMap& g_src = s.coefficient(t.from.name);
    const SmoothMap& g_dst = s.coefficient(t.to.name);
    Defect d;
    for (const auto& x : t.overlap_samples) {
        const Vector hx = t.base_map(x);
        const Matrix mx = s.bundle.fibre_transition(t, x);
        const Matrix rho = s.bundle.anchor(t.from.name, x);
        for (const auto& u : us) {
            if (u.size() != k) throw DimensionError("transformation_defect: fibre sample has wrong length");
            const Matrix dm = matrix_directional_derivative(t.fibre_map, x, rho * u);
            const Vector residual = g_dst(join(hx, mx * u)) - mx * g_src(join(x, u)) + 0.5 * dm * u;
            d.absorb(max_norm(residual), join(x, u));
        }
    }
    return d;
}

/// Uniform (x, u) samples: x from the box, u from [-radius, radius]^k with |u| >= 0.1.
template <class Rng>
std::vector<Vector> sample_total_space(const Box& base, Index fibre_dim, std::size_t count, Rng& rng,
                                       double radius = 2.0) {
    std::uniform_real_distribution<double> fibre(-radius, radius);
    std::vector<Vector> out;
    out.reserve(count);
    while (out.size() < count) {
        Vector u(fibre_dim);
        for (Index j = 0; j < fibre_dim; ++j) u[j] = fibre(rng);
        if (u.norm() < zero_section_exclusion) continue;
        out.push_back(join(base.sample(rng), u));
    }
    return out;
}

// -----------------------------------------------------------------------------
// Recovering the anchor from a homogeneous field
// -----------------------------------------------------------------------------

/// A vector field on E in one chart, split as (x, u) -> (S01(x, u), S02(x, u)).
struct HomogeneousField {
    SmoothMap base_part;   // R^{m+k} -> R^m
    SmoothMap fibre_part;  // R^{m+k} -> R^k
};

struct AnchorRecovery {
    Defect homothety;             // precheck: S01 degree 1, S02 degree 2
    bool homothetic = false;
    Defect linearity;             // |S01(x, v) - rho_U(x) v| on the samples
    bool linear = false;
    std::optional<AnchoredBundleSpec> bundle;  // only when both checks pass
    std::optional<Defect> spray;  // spray_defect of the field over the recovered bundle
};

/**
 * A field that commutes with homotheties forces its base part to be linear
 * in the fibre; the columns S01(x, e_j) then assemble an anchor. Nothing is
 * claimed unless the homothety precheck and the linearity check both pass.
 */
inline AnchorRecovery recover_anchor(Index base_dim, Index fibre_dim,
                                     const std::map<std::string, HomogeneousField>& field,
                                     const std::map<std::string, std::vector<Vector>>& samples,
                                     const std::vector<double>& lambdas = default_lambdas,
                                     double homothety_tol = tolerance::exact, double linearity_tol = 1e-6) {
    detail::check_lambdas(lambdas);
    const Index m = base_dim, k = fibre_dim;
    AnchorRecovery out;

    for (const auto& [chart, f] : field) {
        if (f.base_part.dom_dim() != m + k || f.base_part.cod_dim() != m || f.fibre_part.dom_dim() != m + k ||
            f.fibre_part.cod_dim() != k)
            throw DimensionError("recover_anchor: field on chart '" + chart + "' has wrong shape");
        auto it = samples.find(chart);
        if (it == samples.end() || it->second.empty()) throw PreconditionError("recover_anchor: no samples on chart '" + chart + "'");
        for (const auto& xu : it->second) {
            const Vector x = xu.head(m), v = xu.tail(k);
            detail::check_off_zero_section(v);
            const Vector s1 = f.base_part(xu), s2 = f.fibre_part(xu);
            for (double l : lambdas) {
                const Vector xlu = join(x, l * v);
                const double r1 = max_norm(Vector(f.base_part(xlu) - l * s1));
                const double r2 = max_norm(Vector(f.fibre_part(xlu) - l * l * s2));
                out.homothety.absorb(std::max(r1, r2), xu);
            }
        }
    }
    out.homothetic = out.homothety.value < homothety_tol;
    if (!out.homothetic) return out;

    AnchoredBundleSpec bundle;
    bundle.base_dim = m;
    bundle.fibre_dim = k;
    std::map<std::string, SmoothMap> coefficients;
    for (const auto& [chart, f] : field) {
        bundle.charts.push_back({chart});
        bundle.anchors.emplace(chart, [s01 = f.base_part, m, k](const Vector& x) -> Matrix {
            Matrix rho(m, k);
            for (Index j = 0; j < k; ++j) rho.col(j) = s01(join(x, Vector::Unit(k, j)));
            return rho;
        });
        coefficients.emplace(chart, SmoothMap(m + k, k, [s02 = f.fibre_part](const Vector& xu) -> Vector {
                                 return -0.5 * s02(xu);
                             }));
        for (const auto& xu : samples.at(chart)) {
            const Vector x = xu.head(m), v = xu.tail(k);
            out.linearity.absorb(max_norm(Vector(f.base_part(xu) - bundle.anchor(chart, x) * v)), xu);
        }
    }
    out.linear = out.linearity.value < linearity_tol;
    if (!out.linear) return out;

    SemisprayLocal s = build_semispray(bundle, std::move(coefficients));
    Defect spray;
    for (const auto& [chart, f] : field) spray.absorb(spray_defect(s, chart, lambdas, samples.at(chart)));
    out.spray = spray;
    out.bundle = std::move(bundle);
    return out;
}

} // namespace abk
