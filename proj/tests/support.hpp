#pragma once

#include <random>
#include <string>
#include <vector>

#include "abk/morphism.hpp"
#include "abk/semispray.hpp"

namespace abk::testing {

inline std::string fixture(const std::string& name) { return std::string(ABK_FIXTURE_DIR) + "/" + name; }

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = d(rng);
    return v;
}

inline Matrix random_matrix(std::mt19937_64& rng, Index r, Index c, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Matrix a(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) a(i, j) = d(rng);
    return a;
}

inline std::vector<Vector> random_points(std::mt19937_64& rng, Index n, std::size_t count, double lo = -1.0,
                                         double hi = 1.0) {
    std::vector<Vector> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_vector(rng, n, lo, hi));
    return out;
}

/// Algebroid over a point: a Lie algebra with structure constants C.
inline AlgebroidStructure point_algebroid(const StructureTensor& c) {
    AnchoredBundleSpec b;
    b.base_dim = 0;
    b.fibre_dim = c.dim();
    b.charts.push_back({"pt"});
    const Index k = c.dim();
    b.anchors.emplace("pt", [k](const Vector&) -> Matrix { return Matrix(0, k); });
    return make_algebroid(b, {{"pt", constant_structure(c)}});
}

/// so(3): [e1,e2]=e3 and cyclic; eps adds C^1_12 = eps.
inline StructureTensor so3_table(double eps = 0.0) {
    StructureTensor c(3);
    auto set = [&c](Index g, Index a, Index b, double v) {
        c(g, a, b) += v;
        c(g, b, a) -= v;
    };
    set(2, 0, 1, 1.0);
    set(0, 1, 2, 1.0);
    set(1, 2, 0, 1.0);
    set(0, 0, 1, eps);
    return c;
}

inline AlgebroidStructure so3(double eps = 0.0) { return point_algebroid(so3_table(eps)); }

/// Tangent algebroid of R^m on one chart: identity anchor, zero structure.
inline AlgebroidStructure tangent(Index m, double half_width = 1.0) {
    AnchoredBundleSpec b;
    b.base_dim = m;
    b.fibre_dim = m;
    b.charts.push_back({"U"});
    b.anchors.emplace("U", [m](const Vector&) -> Matrix { return Matrix::Identity(m, m); });
    Box box;
    for (Index i = 0; i < m; ++i) box.bounds.emplace_back(-half_width, half_width);
    b.sample_domains.emplace("U", box);
    return make_algebroid(b, {{"U", constant_structure(StructureTensor(m))}});
}

/**
 * Action algebroid of the planar rotation field on R^2 with k = 1:
 * rho(x) = (-x2, x1)^T, C = 0. The image of rho is a single vector field,
 * so the anchor homomorphism and Jacobi hold for every section.
 */
inline AlgebroidStructure rotation_action() {
    AnchoredBundleSpec b;
    b.base_dim = 2;
    b.fibre_dim = 1;
    b.charts.push_back({"U"});
    b.anchors.emplace("U", [](const Vector& x) -> Matrix {
        Matrix r(2, 1);
        r << -x[1], x[0];
        return r;
    });
    b.sample_domains.emplace("U", Box{{{-1.0, 1.0}, {-1.0, 1.0}}});
    return make_algebroid(b, {{"U", constant_structure(StructureTensor(1))}});
}

inline SmoothMap poly_section(Index m, Index k, unsigned salt) {
    return SmoothMap(m, k, [m, k, salt](const Vector& x) {
        Vector v(k);
        for (Index a = 0; a < k; ++a) {
            double s = 0.3 * (a + 1) + 0.1 * salt;
            for (Index i = 0; i < m; ++i) s += std::sin((salt + 1.0) * x[i] + a) * (i + 1) / (m + 1.0);
            v[a] = s;
        }
        return v;
    });
}

} // namespace abk::testing
