#pragma once

// Anchored vector bundles in local representation.
//
// A bundle is described chart by chart: base coordinates x in R^m, fibre
// coordinates u in R^k, an anchor matrix rho_U(x) (m x k) per chart, and
// transition data (h, M) on overlaps, where h = psi o phi^-1 changes base
// coordinates and M(x) changes fibre coordinates. Overlaps are given as
// explicit sample lists in the source chart.

#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "abk/numerics.hpp"

namespace abk {

struct ChartId {
    std::string name;

    friend bool operator==(const ChartId&, const ChartId&) = default;
    friend auto operator<=>(const ChartId&, const ChartId&) = default;
};

/// Axis-aligned box used to draw verification points in a chart.
struct Box {
    std::vector<std::pair<double, double>> bounds;

    Index dim() const noexcept { return static_cast<Index>(bounds.size()); }

    template <class Rng>
    Vector sample(Rng& rng) const {
        Vector x(dim());
        for (Index i = 0; i < dim(); ++i) {
            std::uniform_real_distribution<double> dist(bounds[i].first, bounds[i].second);
            x[i] = dist(rng);
        }
        return x;
    }

    template <class Rng>
    std::vector<Vector> samples(Rng& rng, std::size_t count) const {
        std::vector<Vector> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) out.push_back(sample(rng));
        return out;
    }
};

struct TransitionMap {
    ChartId from;
    ChartId to;
    SmoothMap base_map;        // h = psi o phi^-1, R^m -> R^m
    MatrixFunction fibre_map;  // M(x), k x k, invertible on the overlap
    std::vector<Vector> overlap_samples;
};

struct AnchoredBundleSpec {
    Index base_dim = 0;
    Index fibre_dim = 0;
    std::vector<ChartId> charts;
    std::vector<TransitionMap> transitions;
    std::map<std::string, MatrixFunction> anchors;
    std::map<std::string, Box> sample_domains;

    bool has_chart(const std::string& name) const {
        for (const auto& c : charts)
            if (c.name == name) return true;
        return false;
    }

    void require_chart(const std::string& name) const {
        if (!has_chart(name)) throw ChartError("unknown chart '" + name + "'");
    }

    /// rho_U(x), shape-checked.
    Matrix anchor(const std::string& chart, const Vector& x) const {
        auto it = anchors.find(chart);
        if (it == anchors.end()) throw ChartError("no anchor data on chart '" + chart + "'");
        Matrix a = it->second(x);
        if (a.rows() != base_dim || a.cols() != fibre_dim) {
            throw DimensionError("anchor on chart '" + chart + "' is " + std::to_string(a.rows()) + "x" +
                                 std::to_string(a.cols()) + ", expected " + std::to_string(base_dim) + "x" +
                                 std::to_string(fibre_dim));
        }
        return a;
    }

    /// Self-contained copy of rho_U that outlives the spec.
    MatrixFunction anchor_function(const std::string& chart) const {
        auto it = anchors.find(chart);
        if (it == anchors.end()) throw ChartError("no anchor data on chart '" + chart + "'");
        return [fn = it->second, m = base_dim, k = fibre_dim, chart](const Vector& x) -> Matrix {
            Matrix a = fn(x);
            if (a.rows() != m || a.cols() != k) throw DimensionError("anchor on chart '" + chart + "' has wrong shape");
            return a;
        };
    }

    Matrix fibre_transition(const TransitionMap& t, const Vector& x) const {
        Matrix m = t.fibre_map(x);
        if (m.rows() != fibre_dim || m.cols() != fibre_dim) {
            throw DimensionError("fibre map " + t.from.name + "->" + t.to.name + " is not " + std::to_string(fibre_dim) +
                                 "x" + std::to_string(fibre_dim));
        }
        return m;
    }

    /// Checks the structural invariants; anchors and fibre maps are probed at the overlap samples.
    void validate() const {
        if (base_dim < 0 || fibre_dim < 1) throw DimensionError("bundle needs base_dim >= 0 and fibre_dim >= 1");
        if (charts.empty()) throw PreconditionError("bundle has no charts");
        for (std::size_t i = 0; i < charts.size(); ++i)
            for (std::size_t j = i + 1; j < charts.size(); ++j)
                if (charts[i] == charts[j]) throw ChartError("duplicate chart '" + charts[i].name + "'");
        for (const auto& [name, box] : sample_domains) {
            require_chart(name);
            if (box.dim() != base_dim) throw DimensionError("sample domain of chart '" + name + "' has wrong dimension");
        }
        for (const auto& t : transitions) {
            require_chart(t.from.name);
            require_chart(t.to.name);
            if (t.base_map.dom_dim() != base_dim || t.base_map.cod_dim() != base_dim)
                throw DimensionError("base map " + t.from.name + "->" + t.to.name + " must map R^m to R^m");
            for (const auto& x : t.overlap_samples) {
                if (x.size() != base_dim) throw DimensionError("overlap sample has wrong dimension");
                Eigen::FullPivLU<Matrix> lu(fibre_transition(t, x));
                if (!lu.isInvertible())
                    throw PreconditionError("fibre map " + t.from.name + "->" + t.to.name + " is singular at " +
                                            format_point(x));
                if (anchors.count(t.from.name)) (void)anchor(t.from.name, x);
            }
        }
    }
};

// Tags keep sections and vector fields from being mixed up.
struct SectionTag {};
struct VectorFieldTag {};

/// Per-chart local representatives of a global object.
template <class Tag>
struct LocalObject {
    std::map<std::string, SmoothMap> reps;

    bool defined_on(const std::string& chart) const { return reps.count(chart) != 0; }

    const SmoothMap& on(const std::string& chart) const {
        auto it = reps.find(chart);
        if (it == reps.end()) throw ChartError("object is not defined on chart '" + chart + "'");
        return it->second;
    }

    static LocalObject single(std::string chart, SmoothMap rep) {
        LocalObject obj;
        obj.reps.emplace(std::move(chart), std::move(rep));
        return obj;
    }
};

/// s_phi : R^m -> R^k on each chart.
using SectionLocal = LocalObject<SectionTag>;
/// X_phi : R^m -> R^m on each chart.
using VectorFieldLocal = LocalObject<VectorFieldTag>;

/// rho(s)(x) = rho_U(x) s_phi(x) on every chart where s is defined.
inline VectorFieldLocal anchor_apply(const AnchoredBundleSpec& bundle, const SectionLocal& s) {
    if (s.reps.empty()) throw ChartError("anchor_apply: section is not defined on any chart");
    VectorFieldLocal out;
    for (const auto& [chart, rep] : s.reps) {
        bundle.require_chart(chart);
        if (rep.dom_dim() != bundle.base_dim || rep.cod_dim() != bundle.fibre_dim)
            throw DimensionError("anchor_apply: section on chart '" + chart + "' has wrong shape");
        auto field = [rho = bundle.anchor_function(chart), rep = rep](const Vector& x) -> Vector {
            return rho(x) * rep(x);
        };
        out.reps.emplace(chart, SmoothMap(bundle.base_dim, bundle.base_dim, field));
    }
    return out;
}

namespace detail {

inline void require_samples(const TransitionMap& t) {
    if (t.overlap_samples.empty())
        throw PreconditionError("transition " + t.from.name + "->" + t.to.name + " has no overlap samples");
}

} // namespace detail

/// max over overlap samples of |s_psi(h(x)) - M(x) s_phi(x)|_inf
inline Defect cocycle_defect(const AnchoredBundleSpec& bundle, const SectionLocal& s, const TransitionMap& t) {
    detail::require_samples(t);
    const SmoothMap& src = s.on(t.from.name);
    const SmoothMap& dst = s.on(t.to.name);
    Defect d;
    for (const auto& x : t.overlap_samples) {
        const Vector lhs = dst(t.base_map(x));
        const Vector rhs = bundle.fibre_transition(t, x) * src(x);
        d.absorb(max_norm(Vector(lhs - rhs)), x);
    }
    return d;
}

/// max over overlap samples of |X_psi(h(x)) - dh(x) X_phi(x)|_inf
inline Defect cocycle_defect(const AnchoredBundleSpec&, const VectorFieldLocal& field, const TransitionMap& t) {
    detail::require_samples(t);
    const SmoothMap& src = field.on(t.from.name);
    const SmoothMap& dst = field.on(t.to.name);
    Defect d;
    for (const auto& x : t.overlap_samples) {
        const Vector lhs = dst(t.base_map(x));
        const Vector rhs = jacobian(t.base_map, x) * src(x);
        d.absorb(max_norm(Vector(lhs - rhs)), x);
    }
    return d;
}

/// Worst cocycle defect over every transition the object is defined across; 0 when there is none.
template <class Tag>
Defect cocycle_defect(const AnchoredBundleSpec& bundle, const LocalObject<Tag>& obj) {
    Defect d;
    for (const auto& t : bundle.transitions) {
        if (obj.defined_on(t.from.name) && obj.defined_on(t.to.name)) d.absorb(cocycle_defect(bundle, obj, t));
    }
    return d;
}

/// max over overlap samples of the entrywise max of rho_V(h(x)) M(x) - dh(x) rho_U(x).
inline Defect anchor_compat_defect(const AnchoredBundleSpec& bundle, const TransitionMap& t) {
    detail::require_samples(t);
    Defect d;
    for (const auto& x : t.overlap_samples) {
        const Matrix lhs = bundle.anchor(t.to.name, t.base_map(x)) * bundle.fibre_transition(t, x);
        const Matrix rhs = jacobian(t.base_map, x) * bundle.anchor(t.from.name, x);
        d.absorb(max_norm(Matrix(lhs - rhs)), x);
    }
    return d;
}

/// Checks that `inverse` undoes `t` on the base: h_inv(h(x)) = x at t's samples.
inline Defect transition_inverse_defect(const TransitionMap& t, const TransitionMap& inverse) {
    if (!(t.from == inverse.to && t.to == inverse.from)) throw ChartError("transitions are not mutually inverse");
    detail::require_samples(t);
    Defect d;
    for (const auto& x : t.overlap_samples) d.absorb(max_norm(Vector(inverse.base_map(t.base_map(x)) - x)), x);
    return d;
}

/// A (1,1) tensor field A viewed as an anchor TM -> TM on a single chart "U".
inline AnchoredBundleSpec tensor_anchor(Index base_dim, MatrixFunction a, Box domain = {}) {
    AnchoredBundleSpec b;
    b.base_dim = base_dim;
    b.fibre_dim = base_dim;
    b.charts.push_back({"U"});
    b.anchors.emplace("U", std::move(a));
    if (domain.dim() == base_dim && base_dim > 0) b.sample_domains.emplace("U", std::move(domain));
    return b;
}

} // namespace abk
