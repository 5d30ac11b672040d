#pragma once

// Algebroid differential forms and the exterior differential.
//
// A degree-q form is stored per chart as a map x -> R^{C(k,q)} holding its
// values on strictly increasing frame multi-indices in lexicographic order.
// The differential is the Cartan formula
//
//   (d w)(s_0..s_q) = sum_i (-1)^i rho(s_i)(w(s_0..^s_i..s_q))
//                   + sum_{i<j} (-1)^{i+j} w([s_i,s_j], s_0..^s_i..^s_j..s_q).

#include <map>
#include <string>
#include <vector>

#include "abk/algebroid.hpp"
#include "abk/multi_index.hpp"

namespace abk {

struct FormLocal {
    int degree = 0;
    Index fibre_dim = 0;
    std::map<std::string, SmoothMap> components;

    std::size_t component_count() const { return binomial(static_cast<int>(fibre_dim), degree); }

    const SmoothMap& on(const std::string& chart) const {
        auto it = components.find(chart);
        if (it == components.end()) throw ChartError("form is not defined on chart '" + chart + "'");
        return it->second;
    }

    /// Component on an arbitrary index tuple; the sign comes from the sorting permutation.
    double component(const std::string& chart, const Vector& x, const MultiIndex& idx) const {
        if (static_cast<int>(idx.size()) != degree) throw DimensionError("component: index tuple has wrong length");
        auto canon = canonicalize(idx);
        if (!canon) return 0.0;
        return canon->second * on(chart)(x)[static_cast<Index>(multi_index_position(canon->first, static_cast<int>(fibre_dim)))];
    }
};

/// Degree k+1 and beyond: no nonzero antisymmetric forms exist.
inline bool is_top_degree_overflow(const FormLocal& w) { return w.degree > w.fibre_dim; }

/// w(v_1..v_q) from component values: sum over increasing I of w_I det(V[I, :]).
inline double contract_form(const Vector& comps, int degree, Index fibre_dim, const std::vector<Vector>& values) {
    if (static_cast<int>(values.size()) != degree) throw DimensionError("contract_form: wrong number of arguments");
    if (degree == 0) return comps[0];
    if (degree > fibre_dim) return 0.0;
    Matrix v(fibre_dim, degree);
    for (int j = 0; j < degree; ++j) v.col(j) = values[static_cast<std::size_t>(j)];
    const auto indices = increasing_multi_indices(static_cast<int>(fibre_dim), degree);
    double out = 0.0;
    Matrix sub(degree, degree);
    for (std::size_t n = 0; n < indices.size(); ++n) {
        if (comps[static_cast<Index>(n)] == 0.0) continue;
        for (int r = 0; r < degree; ++r) sub.row(r) = v.row(indices[n][static_cast<std::size_t>(r)]);
        out += comps[static_cast<Index>(n)] * sub.determinant();
    }
    return out;
}

/// Degree-0 form from a scalar function on one chart.
inline FormLocal function_form(Index fibre_dim, const std::string& chart, SmoothMap f) {
    if (f.cod_dim() != 1) throw DimensionError("function_form: function must be scalar");
    FormLocal w{0, fibre_dim, {}};
    w.components.emplace(chart, std::move(f));
    return w;
}

/// The dual frame covector theta^gamma on one chart.
inline FormLocal dual_frame_form(Index base_dim, Index fibre_dim, const std::string& chart, Index gamma) {
    FormLocal w{1, fibre_dim, {}};
    w.components.emplace(chart, SmoothMap::constant(base_dim, Vector::Unit(fibre_dim, gamma)));
    return w;
}

/// The zero form of any degree on one chart.
inline FormLocal zero_form(Index base_dim, Index fibre_dim, const std::string& chart, int degree) {
    FormLocal w{degree, fibre_dim, {}};
    w.components.emplace(chart, SmoothMap::constant(base_dim, Vector::Zero(static_cast<Index>(w.component_count()))));
    return w;
}

/// (d w)(s_0..s_q) at x.
inline double exterior_derivative_eval(const AlgebroidStructure& a, const std::string& chart, const FormLocal& w,
                                       const std::vector<SmoothMap>& sections, const Vector& x) {
    const int q = w.degree;
    if (static_cast<int>(sections.size()) != q + 1)
        throw DimensionError("exterior_derivative_eval: a degree-" + std::to_string(q) + " form needs " +
                             std::to_string(q + 1) + " sections, got " + std::to_string(sections.size()));
    if (w.fibre_dim != a.fibre_dim()) throw DimensionError("exterior_derivative_eval: form and algebroid fibres differ");
    for (const auto& s : sections) detail::check_section(a, s);
    const SmoothMap& comps = w.on(chart);
    const Index k = a.fibre_dim();

    auto omitted = [&](std::size_t skip_i, std::size_t skip_j) {
        std::vector<SmoothMap> rest;
        for (std::size_t n = 0; n < sections.size(); ++n)
            if (n != skip_i && n != skip_j) rest.push_back(sections[n]);
        return rest;
    };

    double out = 0.0;
    if (a.base_dim() > 0) {
        const Matrix rho = a.bundle.anchor(chart, x);
        for (std::size_t i = 0; i < sections.size(); ++i) {
            const Vector direction = rho * sections[i](x);
            if (max_norm(direction) == 0.0) continue;
            const std::vector<SmoothMap> rest = omitted(i, sections.size());
            const SmoothMap value = scalar_map(a.base_dim(), [&](const Vector& y) {
                std::vector<Vector> args;
                for (const auto& s : rest) args.push_back(s(y));
                return contract_form(comps(y), q, k, args);
            });
            const double sign = (i % 2 == 0) ? 1.0 : -1.0;
            out += sign * directional_derivative(value, x, direction)[0];
        }
    }

    const Vector wx = comps(x);
    for (std::size_t i = 0; i < sections.size(); ++i) {
        for (std::size_t j = i + 1; j < sections.size(); ++j) {
            std::vector<Vector> args{bracket_value(a, chart, sections[i], sections[j], x)};
            for (const auto& s : omitted(i, j)) args.push_back(s(x));
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            out += sign * contract_form(wx, q, k, args);
        }
    }
    return out;
}

/// d w as a form of degree q+1, one component per increasing multi-index of frame sections.
inline FormLocal exterior_derivative_components(const AlgebroidStructure& a, const FormLocal& w) {
    const Index m = a.base_dim(), k = a.fibre_dim();
    FormLocal out{w.degree + 1, k, {}};
    for (const auto& [chart, comps] : w.components) {
        if (w.degree + 1 > k) {
            out.components.emplace(chart, SmoothMap::constant(m, Vector::Zero(0)));
            continue;
        }
        const auto indices = increasing_multi_indices(static_cast<int>(k), w.degree + 1);
        std::vector<std::vector<SmoothMap>> frames;
        for (const auto& idx : indices) {
            std::vector<SmoothMap> sections;
            for (int alpha : idx) sections.push_back(frame_section(m, k, alpha));
            frames.push_back(std::move(sections));
        }
        out.components.emplace(chart, SmoothMap(m, static_cast<Index>(indices.size()),
                                                [a, chart = chart, w, frames](const Vector& x) {
                                                    Vector v(static_cast<Index>(frames.size()));
                                                    for (std::size_t n = 0; n < frames.size(); ++n)
                                                        v[static_cast<Index>(n)] =
                                                            exterior_derivative_eval(a, chart, w, frames[n], x);
                                                    return v;
                                                }));
    }
    return out;
}

/// max over samples of |components of d(d w)|.
inline Defect d_squared_defect(const AlgebroidStructure& a, const std::string& chart, const FormLocal& w,
                               const std::vector<Vector>& samples) {
    if (w.degree + 2 > a.fibre_dim())
        throw PreconditionError("d_squared_defect: need degree + 2 <= fibre dimension");
    const FormLocal dd = exterior_derivative_components(a, exterior_derivative_components(a, w));
    const SmoothMap& comps = dd.on(chart);
    Defect d;
    for (const auto& x : samples) d.absorb(max_norm(comps(x)), x);
    return d;
}

} // namespace abk
