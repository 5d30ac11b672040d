#pragma once

// Algebroid morphisms: a base map f0 and a fibrewise linear map F(x) whose
// pullback on forms intertwines the differentials,
//
//   d_source (f* w') = f* (d_target w').
//
// Source and target each live on a single chart.

#include <string>
#include <vector>

#include "abk/forms.hpp"

namespace abk {

struct MorphismLocal {
    AlgebroidStructure source;
    AlgebroidStructure target;
    std::string source_chart;
    std::string target_chart;
    SmoothMap base_map;         // f0 : R^m -> R^m'
    MatrixFunction fibre_map;   // F(x) : k' x k

    Matrix fibre_at(const Vector& x) const {
        Matrix f = fibre_map(x);
        if (f.rows() != target.fibre_dim() || f.cols() != source.fibre_dim())
            throw DimensionError("morphism fibre map is " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                                 ", expected " + std::to_string(target.fibre_dim()) + "x" +
                                 std::to_string(source.fibre_dim()));
        return f;
    }
};

inline MorphismLocal make_morphism(AlgebroidStructure source, std::string source_chart, AlgebroidStructure target,
                                   std::string target_chart, SmoothMap base_map, MatrixFunction fibre_map) {
    source.bundle.require_chart(source_chart);
    target.bundle.require_chart(target_chart);
    if (base_map.dom_dim() != source.base_dim() || base_map.cod_dim() != target.base_dim())
        throw DimensionError("morphism base map must map R^" + std::to_string(source.base_dim()) + " to R^" +
                             std::to_string(target.base_dim()));
    return MorphismLocal{std::move(source), std::move(target),  std::move(source_chart),
                         std::move(target_chart), std::move(base_map), std::move(fibre_map)};
}

inline MorphismLocal identity_morphism(const AlgebroidStructure& a, const std::string& chart) {
    const Index k = a.fibre_dim();
    return make_morphism(a, chart, a, chart, SmoothMap::identity(a.base_dim()),
                         [k](const Vector&) -> Matrix { return Matrix::Identity(k, k); });
}

/// (f* w')_x(s_1..s_q) = w'_{f0(x)}(F s_1, .., F s_q), as components on the source chart.
inline FormLocal pullback_form(const MorphismLocal& phi, const FormLocal& w) {
    if (w.fibre_dim != phi.target.fibre_dim()) throw DimensionError("pullback_form: form does not live on the target");
    const int q = w.degree;
    const Index k = phi.source.fibre_dim();
    if (q > k) throw DimensionError("pullback_form: degree exceeds the source fibre dimension");
    const auto src_indices = increasing_multi_indices(static_cast<int>(k), q);
    FormLocal out{q, k, {}};
    out.components.emplace(
        phi.source_chart,
        SmoothMap(phi.source.base_dim(), static_cast<Index>(src_indices.size()),
                  [phi, comps = w.on(phi.target_chart), src_indices, q, kt = w.fibre_dim](const Vector& x) {
                      const Vector wy = comps(phi.base_map(x));
                      const Matrix f = phi.fibre_at(x);
                      Vector v(static_cast<Index>(src_indices.size()));
                      for (std::size_t n = 0; n < src_indices.size(); ++n) {
                          std::vector<Vector> args;
                          for (int alpha : src_indices[n]) args.push_back(f.col(alpha));
                          v[static_cast<Index>(n)] = contract_form(wy, q, kt, args);
                      }
                      return v;
                  }));
    return out;
}

/// Probe set: target coordinate functions (degree 0) and the dual frame theta^gamma (degree 1).
inline std::vector<FormLocal> dual_frame_probes(const AlgebroidStructure& target, const std::string& chart) {
    const Index m = target.base_dim(), k = target.fibre_dim();
    std::vector<FormLocal> probes;
    probes.push_back(function_form(k, chart, SmoothMap::constant(m, Vector::Ones(1))));
    for (Index i = 0; i < m; ++i)
        probes.push_back(function_form(k, chart, SmoothMap::linear(Matrix(Matrix::Identity(m, m).row(i)))));
    for (Index g = 0; g < k; ++g) probes.push_back(dual_frame_form(m, k, chart, g));
    return probes;
}

/// max over forms, samples and multi-indices of |d(f* w') - f*(d w')|.
inline Defect morphism_defect(const MorphismLocal& phi, const std::vector<FormLocal>& test_forms,
                              const std::vector<Vector>& samples) {
    if (test_forms.empty()) throw PreconditionError("morphism_defect: supply at least degree-0 and degree-1 probe forms");
    Defect d;
    for (const auto& w : test_forms) {
        if (w.degree + 1 > phi.source.fibre_dim())
            throw PreconditionError("morphism_defect: probe degree must satisfy q + 1 <= source fibre dimension");
        const FormLocal lhs = exterior_derivative_components(phi.source, pullback_form(phi, w));
        const FormLocal rhs = pullback_form(phi, exterior_derivative_components(phi.target, w));
        const SmoothMap& l = lhs.on(phi.source_chart);
        const SmoothMap& r = rhs.on(phi.source_chart);
        for (const auto& x : samples) d.absorb(max_norm(Vector(l(x) - r(x))), x);
    }
    return d;
}

/// second o first: base f0 = f0_2 o f0_1, fibre x -> F_2(f0_1(x)) F_1(x).
inline MorphismLocal compose(const MorphismLocal& second, const MorphismLocal& first) {
    if (first.target_chart != second.source_chart || first.target.base_dim() != second.source.base_dim() ||
        first.target.fibre_dim() != second.source.fibre_dim())
        throw DimensionError("compose: target of the first morphism is not the source of the second");
    const SmoothMap f01 = first.base_map, f02 = second.base_map;
    SmoothMap base(f01.dom_dim(), f02.cod_dim(), [f01, f02](const Vector& x) { return f02(f01(x)); });
    MatrixFunction fibre = [first, second](const Vector& x) -> Matrix {
        return second.fibre_at(first.base_map(x)) * first.fibre_at(x);
    };
    return make_morphism(first.source, first.source_chart, second.target, second.target_chart, std::move(base),
                         std::move(fibre));
}

} // namespace abk
