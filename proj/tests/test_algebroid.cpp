#include <gtest/gtest.h>

#include "support.hpp"

using namespace abk;
using abk::testing::vec;

namespace {

std::vector<SmoothMap> frames(Index m, Index k) {
    std::vector<SmoothMap> out;
    for (Index a = 0; a < k; ++a) out.push_back(frame_section(m, k, a));
    return out;
}

const std::vector<Vector> kPoint{Vector(0)};

// Non-integrable anchor: rho = [[1, 0], [0, x1]] with zero structure.
AlgebroidStructure skew_anchor() {
    AnchoredBundleSpec b;
    b.base_dim = 2;
    b.fibre_dim = 2;
    b.charts.push_back({"U"});
    b.anchors.emplace("U", [](const Vector& x) -> Matrix { return (Matrix(2, 2) << 1, 0, 0, x[0]).finished(); });
    return make_algebroid(b, {{"U", constant_structure(StructureTensor(2))}});
}

} // namespace

TEST(Bracket, So3Table) {
    const auto a = abk::testing::so3();
    const auto e = frames(0, 3);
    EXPECT_EQ(bracket_value(a, "pt", e[0], e[1], Vector(0)), vec({0, 0, 1}));
    EXPECT_EQ(bracket_value(a, "pt", e[1], e[2], Vector(0)), vec({1, 0, 0}));
    EXPECT_EQ(bracket_value(a, "pt", e[2], e[0], Vector(0)), vec({0, 1, 0}));
    EXPECT_EQ(bracket_value(a, "pt", e[1], e[0], Vector(0)), vec({0, 0, -1}));
}

TEST(Bracket, TangentIsVectorFieldBracket) {
    const auto a = abk::testing::tangent(2);
    // [x2 d1, d2] = -d1
    const SmoothMap s1(2, 2, [](const Vector& x) { return vec({x[1], 0}); });
    const SmoothMap s2 = frame_section(2, 2, 1);
    EXPECT_LT(max_norm(Vector(bracket_value(a, "U", s1, s2, vec({0.3, 0.4})) - vec({-1, 0}))), 1e-9);
}

TEST(Bracket, MakeAlgebroidAntisymmetrizes) {
    StructureTensor c(2);
    c(0, 0, 1) = 2.0;  // one-sided entry
    const auto a = abk::testing::point_algebroid(c);
    const auto s = a.structure_at("pt", Vector(0));
    EXPECT_EQ(s(0, 0, 1), 1.0);
    EXPECT_EQ(s(0, 1, 0), -1.0);
}

// Property: antisymmetry of the bracket on random sections of several algebroids.
TEST(Bracket, AntisymmetricOnRandomSections) {
    std::mt19937_64 rng(21);
    const std::vector<std::pair<AlgebroidStructure, std::string>> cases = {
        {abk::testing::tangent(3), "U"}, {abk::testing::rotation_action(), "U"}, {skew_anchor(), "U"}};
    for (const auto& [a, chart] : cases) {
        for (unsigned salt = 0; salt < 4; ++salt) {
            const SmoothMap s1 = abk::testing::poly_section(a.base_dim(), a.fibre_dim(), salt);
            const SmoothMap s2 = abk::testing::poly_section(a.base_dim(), a.fibre_dim(), salt + 7);
            for (const auto& x : abk::testing::random_points(rng, a.base_dim(), 16)) {
                const Vector sum = bracket_value(a, chart, s1, s2, x) + bracket_value(a, chart, s2, s1, x);
                EXPECT_LT(max_norm(sum), 1e-9);
            }
        }
    }
}

TEST(Leibniz, HoldsOnTangentAndActionAlgebroids) {
    std::mt19937_64 rng(22);
    const SmoothMap f = scalar_map(2, [](const Vector& x) { return std::exp(x[0]) * std::cos(x[1]); });
    for (const auto& a : {abk::testing::tangent(2), abk::testing::rotation_action(), skew_anchor()}) {
        const auto xs = abk::testing::random_points(rng, 2, 32);
        const SmoothMap s1 = abk::testing::poly_section(2, a.fibre_dim(), 1);
        const SmoothMap s2 = abk::testing::poly_section(2, a.fibre_dim(), 2);
        EXPECT_LT(leibniz_defect(a, "U", s1, s2, f, xs).value, 1e-5);
    }
}

TEST(Leibniz, OverAPointIsExact) {
    const auto a = abk::testing::so3();
    const SmoothMap f = SmoothMap::constant(0, vec({3.0}));
    const auto e = frames(0, 3);
    EXPECT_LT(leibniz_defect(a, "pt", e[0], e[1], f, kPoint).value, 1e-12);
}

TEST(Jacobi, So3HoldsExactly) {
    const auto a = abk::testing::so3();
    const auto e = frames(0, 3);
    EXPECT_LT(jacobi_defect(a, "pt", e[0], e[1], e[2], kPoint).value, 1e-12);
}

TEST(Jacobi, PerturbationDefectEqualsEpsilon) {
    for (double eps : {0.01, 0.1, 0.5}) {
        const auto a = abk::testing::so3(eps);
        const auto e = frames(0, 3);
        EXPECT_NEAR(jacobi_defect(a, "pt", e[0], e[1], e[2], kPoint).value, eps, 1e-12);
    }
}

TEST(Jacobi, TangentAndActionOnRandomSections) {
    std::mt19937_64 rng(23);
    for (const auto& a : {abk::testing::tangent(2), abk::testing::rotation_action()}) {
        const auto xs = abk::testing::random_points(rng, 2, 16);
        const Index k = a.fibre_dim();
        EXPECT_LT(jacobi_defect(a, "U", abk::testing::poly_section(2, k, 1), abk::testing::poly_section(2, k, 2),
                                abk::testing::poly_section(2, k, 3), xs)
                      .value,
                  1e-4);
    }
}

TEST(AnchorHom, TangentAndAction) {
    std::mt19937_64 rng(24);
    for (const auto& a : {abk::testing::tangent(2), abk::testing::rotation_action()}) {
        const Index k = a.fibre_dim();
        EXPECT_LT(anchor_hom_defect(a, "U", abk::testing::poly_section(2, k, 4), abk::testing::poly_section(2, k, 5),
                                    abk::testing::random_points(rng, 2, 32))
                      .value,
                  1e-5);
    }
}

TEST(AnchorHom, NonIntegrableAnchorFails) {
    // [d1, x1 d2] = d2 while rho([e1, e2]) = 0
    const auto a = skew_anchor();
    const auto e = frames(2, 2);
    EXPECT_NEAR(anchor_hom_defect(a, "U", e[0], e[1], {vec({0.3, 0.1})}).value, 1.0, 1e-6);
}

TEST(AnchorHom, NeedsPositiveBaseDimension) {
    const auto a = abk::testing::so3();
    const auto e = frames(0, 3);
    EXPECT_THROW(anchor_hom_defect(a, "pt", e[0], e[1], kPoint), PreconditionError);
}

TEST(Bracket, SectionShapeChecked) {
    const auto a = abk::testing::tangent(2);
    EXPECT_THROW(bracket(a, "U", frame_section(2, 3, 0), frame_section(2, 2, 0)), DimensionError);
    EXPECT_THROW(bracket(a, "V", frame_section(2, 2, 0), frame_section(2, 2, 0)), ChartError);
}

TEST(Bracket, SectionLocalOnSharedCharts) {
    const auto a = abk::testing::so3();
    const auto s = bracket(a, SectionLocal::single("pt", frame_section(0, 3, 0)), SectionLocal::single("pt", frame_section(0, 3, 1)));
    EXPECT_EQ(s.on("pt")(Vector(0)), vec({0, 0, 1}));
}
