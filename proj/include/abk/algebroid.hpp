#pragma once

// Lie algebroid structure in a local frame {e_alpha}.
//
// The bracket of frame sections is [e_a, e_b] = C^g_ab(x) e_g. Together with
// the Leibniz rule this fixes the bracket of arbitrary sections:
//
//   [s1, s2]^g = s1^a s2^b C^g_ab + (rho s1)^i d_i s2^g - (rho s2)^i d_i s1^g.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "abk/bundle.hpp"

namespace abk {

/// k x k x k array, entry (g, a, b) = C^g_ab.
class StructureTensor {
public:
    StructureTensor() = default;
    explicit StructureTensor(Index k) : k_(k), data_(static_cast<std::size_t>(k * k * k), 0.0) {}

    Index dim() const noexcept { return k_; }

    double& operator()(Index g, Index a, Index b) { return data_[offset(g, a, b)]; }
    double operator()(Index g, Index a, Index b) const { return data_[offset(g, a, b)]; }

    /// Sum_ab C^g_ab v^a w^b for every g.
    Vector contract(const Vector& v, const Vector& w) const {
        Vector out = Vector::Zero(k_);
        for (Index g = 0; g < k_; ++g)
            for (Index a = 0; a < k_; ++a)
                for (Index b = 0; b < k_; ++b) out[g] += (*this)(g, a, b) * v[a] * w[b];
        return out;
    }

    StructureTensor antisymmetrized() const {
        StructureTensor out(k_);
        for (Index g = 0; g < k_; ++g)
            for (Index a = 0; a < k_; ++a)
                for (Index b = 0; b < k_; ++b) out(g, a, b) = 0.5 * ((*this)(g, a, b) - (*this)(g, b, a));
        return out;
    }

private:
    std::size_t offset(Index g, Index a, Index b) const {
        return static_cast<std::size_t>((g * k_ + a) * k_ + b);
    }

    Index k_ = 0;
    std::vector<double> data_;
};

using StructureFunction = std::function<StructureTensor(const Vector&)>;

struct AlgebroidStructure {
    AnchoredBundleSpec bundle;
    std::map<std::string, StructureFunction> structure;

    Index base_dim() const noexcept { return bundle.base_dim; }
    Index fibre_dim() const noexcept { return bundle.fibre_dim; }
    bool over_point() const noexcept { return bundle.base_dim == 0; }

    StructureTensor structure_at(const std::string& chart, const Vector& x) const {
        auto it = structure.find(chart);
        if (it == structure.end()) throw ChartError("no structure functions on chart '" + chart + "'");
        StructureTensor c = it->second(x);
        if (c.dim() != fibre_dim()) throw DimensionError("structure functions on chart '" + chart + "' have wrong size");
        return c;
    }
};

/// Builds the structure; every structure function is antisymmetrized in its lower indices.
inline AlgebroidStructure make_algebroid(AnchoredBundleSpec bundle, std::map<std::string, StructureFunction> structure) {
    AlgebroidStructure a;
    for (auto& [chart, fn] : structure) {
        bundle.require_chart(chart);
        if (!bundle.anchors.count(chart)) throw ChartError("algebroid chart '" + chart + "' has no anchor");
        a.structure.emplace(chart, [fn = std::move(fn)](const Vector& x) { return fn(x).antisymmetrized(); });
    }
    a.bundle = std::move(bundle);
    return a;
}

inline StructureFunction constant_structure(StructureTensor c) {
    return [c = std::move(c)](const Vector&) { return c; };
}

/// Constant frame section e_alpha over an m-dimensional chart (analytic zero Jacobian).
inline SmoothMap frame_section(Index base_dim, Index fibre_dim, Index alpha) {
    return SmoothMap::constant(base_dim, Vector::Unit(fibre_dim, alpha));
}

namespace detail {

inline void check_section(const AlgebroidStructure& a, const SmoothMap& s) {
    if (s.dom_dim() != a.base_dim() || s.cod_dim() != a.fibre_dim())
        throw DimensionError("section has shape R^" + std::to_string(s.dom_dim()) + " -> R^" +
                             std::to_string(s.cod_dim()) + ", expected R^" + std::to_string(a.base_dim()) + " -> R^" +
                             std::to_string(a.fibre_dim()));
}

} // namespace detail

/// [s1, s2]_E at a single point of the chart.
inline Vector bracket_value(const AlgebroidStructure& a, const std::string& chart, const SmoothMap& s1,
                            const SmoothMap& s2, const Vector& x) {
    const Vector v1 = s1(x), v2 = s2(x);
    Vector out = a.structure_at(chart, x).contract(v1, v2);
    if (a.base_dim() > 0) {
        const Matrix rho = a.bundle.anchor(chart, x);
        out += jacobian(s2, x) * (rho * v1) - jacobian(s1, x) * (rho * v2);
    }
    return out;
}

/// Local representative of [s1, s2]_E on one chart.
inline SmoothMap bracket(const AlgebroidStructure& a, const std::string& chart, const SmoothMap& s1,
                         const SmoothMap& s2) {
    detail::check_section(a, s1);
    detail::check_section(a, s2);
    a.bundle.require_chart(chart);
    return SmoothMap(a.base_dim(), a.fibre_dim(),
                     [a, chart, s1, s2](const Vector& x) { return bracket_value(a, chart, s1, s2, x); });
}

/// [s1, s2]_E on every chart both sections share.
inline SectionLocal bracket(const AlgebroidStructure& a, const SectionLocal& s1, const SectionLocal& s2) {
    SectionLocal out;
    for (const auto& [chart, rep] : s1.reps)
        if (s2.defined_on(chart)) out.reps.emplace(chart, bracket(a, chart, rep, s2.on(chart)));
    if (out.reps.empty()) throw ChartError("bracket: sections share no chart");
    return out;
}

/// f s as a section.
inline SmoothMap scale_section(const SmoothMap& f, const SmoothMap& s) {
    return SmoothMap(s.dom_dim(), s.cod_dim(), [f, s](const Vector& x) -> Vector { return f(x)[0] * s(x); });
}

/// rho(s)(f) at x: derivative of the scalar f along rho_U(x) s(x).
inline double anchor_derivative(const AlgebroidStructure& a, const std::string& chart, const SmoothMap& s,
                                const SmoothMap& f, const Vector& x) {
    if (a.base_dim() == 0) return 0.0;
    return directional_derivative(f, x, a.bundle.anchor(chart, x) * s(x))[0];
}

/// |[s1, f s2] - f [s1, s2] - rho(s1)(f) s2| over the samples.
inline Defect leibniz_defect(const AlgebroidStructure& a, const std::string& chart, const SmoothMap& s1,
                             const SmoothMap& s2, const SmoothMap& f, const std::vector<Vector>& samples) {
    if (f.dom_dim() != a.base_dim() || f.cod_dim() != 1) throw DimensionError("leibniz_defect: f must be scalar on the base");
    const SmoothMap fs2 = scale_section(f, s2);
    const SmoothMap lhs = bracket(a, chart, s1, fs2);
    const SmoothMap plain = bracket(a, chart, s1, s2);
    Defect d;
    for (const auto& x : samples) {
        const Vector residual = lhs(x) - f(x)[0] * plain(x) - anchor_derivative(a, chart, s1, f, x) * s2(x);
        d.absorb(max_norm(residual), x);
    }
    return d;
}

/// |[[s1,s2],s3] + [[s2,s3],s1] + [[s3,s1],s2]| over the samples.
inline Defect jacobi_defect(const AlgebroidStructure& a, const std::string& chart, const SmoothMap& s1,
                            const SmoothMap& s2, const SmoothMap& s3, const std::vector<Vector>& samples) {
    const SmoothMap b12 = bracket(a, chart, s1, s2);
    const SmoothMap b23 = bracket(a, chart, s2, s3);
    const SmoothMap b31 = bracket(a, chart, s3, s1);
    Defect d;
    for (const auto& x : samples) {
        const Vector jacobiator = bracket_value(a, chart, b12, s3, x) + bracket_value(a, chart, b23, s1, x) +
                                  bracket_value(a, chart, b31, s2, x);
        d.absorb(max_norm(jacobiator), x);
    }
    return d;
}

/// Jacobi-Lie bracket of vector fields on the base: [X, Y] = dY X - dX Y.
inline Vector vector_field_bracket(const SmoothMap& xf, const SmoothMap& yf, const Vector& x) {
    return jacobian(yf, x) * xf(x) - jacobian(xf, x) * yf(x);
}

/// |rho([s1, s2]_E) - [rho s1, rho s2]| over the samples; needs m >= 1.
inline Defect anchor_hom_defect(const AlgebroidStructure& a, const std::string& chart, const SmoothMap& s1,
                                const SmoothMap& s2, const std::vector<Vector>& samples) {
    if (a.base_dim() < 1) throw PreconditionError("anchor_hom_defect: base must have dimension >= 1");
    const AnchoredBundleSpec& b = a.bundle;
    const SmoothMap x1 = anchor_apply(b, SectionLocal::single(chart, s1)).on(chart);
    const SmoothMap x2 = anchor_apply(b, SectionLocal::single(chart, s2)).on(chart);
    Defect d;
    for (const auto& x : samples) {
        const Vector lhs = b.anchor(chart, x) * bracket_value(a, chart, s1, s2, x);
        d.absorb(max_norm(Vector(lhs - vector_field_bracket(x1, x2, x))), x);
    }
    return d;
}

} // namespace abk
