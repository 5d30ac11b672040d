#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace abk;
using abk::testing::vec;

TEST(Jacobian, PolynomialMatchesHandDerivative) {
    // f(x, y) = (x^2 y, sin x + y^3), Df = [[2xy, x^2], [cos x, 3y^2]]
    const SmoothMap f(2, 2, [](const Vector& x) { return vec({x[0] * x[0] * x[1], std::sin(x[0]) + x[1] * x[1] * x[1]}); });
    const Vector x = vec({0.7, -1.3});
    Matrix expected(2, 2);
    expected << 2 * 0.7 * -1.3, 0.49, std::cos(0.7), 3 * 1.69;
    EXPECT_LT(max_norm(Matrix(fd_jacobian(f, x) - expected)), 1e-8);
}

TEST(Jacobian, PrefersAnalytic) {
    Matrix a(2, 3);
    a << 1, 2, 3, 4, 5, 6;
    const SmoothMap f = SmoothMap::linear(a);
    EXPECT_TRUE(f.has_analytic_jacobian());
    EXPECT_EQ(jacobian(f, vec({1, 2, 3})), a);
}

TEST(Jacobian, StepScalesWithPoint) {
    EXPECT_DOUBLE_EQ(default_step(vec({0.1, -0.2})), 1e-5);
    EXPECT_DOUBLE_EQ(default_step(vec({30.0, -400.0})), 4e-3);
}

TEST(Jacobian, NonFiniteProbeIsReported) {
    const SmoothMap f = scalar_map(1, [](const Vector& x) { return std::log(x[0]); });
    try {
        fd_jacobian(f, vec({0.0}));
        FAIL() << "expected NonFiniteError";
    } catch (const NonFiniteError& e) {
        EXPECT_EQ(e.probe().size(), 1);
    }
}

TEST(Jacobian, ZeroDimensionalBase) {
    const SmoothMap c = SmoothMap::constant(0, vec({1, 2}));
    const Matrix j = fd_jacobian(c, Vector(0));
    EXPECT_EQ(j.rows(), 2);
    EXPECT_EQ(j.cols(), 0);
}

TEST(DirectionalDerivative, MatchesJacobianTimesDirection) {
    std::mt19937_64 rng(7);
    const SmoothMap f(3, 2, [](const Vector& x) { return vec({std::exp(x[0]) * x[1], x[2] * x[2] - x[0] * x[1]}); });
    for (int n = 0; n < 50; ++n) {
        const Vector x = abk::testing::random_vector(rng, 3);
        const Vector v = abk::testing::random_vector(rng, 3, -5, 5);
        EXPECT_LT(max_norm(Vector(directional_derivative(f, x, v) - fd_jacobian(f, x) * v)), 1e-7);
    }
}

TEST(DirectionalDerivative, ZeroDirectionIsExactlyZero) {
    const SmoothMap f = scalar_map(2, [](const Vector& x) { return 1.0 / x[0]; });
    EXPECT_EQ(directional_derivative(f, vec({0.0, 1.0}), vec({0.0, 0.0}))[0], 0.0);
}

TEST(Rk4, HarmonicOscillatorEndpoint) {
    const SmoothMap vf = SmoothMap::linear((Matrix(2, 2) << 0, 1, -1, 0).finished());
    const Integration run = rk4_integrate(vf, vec({1, 0}), 0.0, 2.0, 200);
    ASSERT_TRUE(run.ok);
    EXPECT_EQ(run.trajectory.size(), 201u);
    EXPECT_EQ(run.trajectory.times.back(), 2.0);
    EXPECT_NEAR(run.trajectory.back()[0], std::cos(2.0), 1e-8);
    EXPECT_NEAR(run.trajectory.back()[1], -std::sin(2.0), 1e-8);
}

TEST(Rk4, FourthOrderConvergence) {
    // x' = x^2, x(0) = 1/2 has x(t) = 1/(2 - t)
    const SmoothMap vf(1, 1, [](const Vector& x) { return Vector(x.cwiseProduct(x)); });
    const double exact = 1.0 / (2.0 - 1.0);
    const double e1 = std::abs(rk4_integrate(vf, vec({0.5}), 0.0, 1.0, 40).trajectory.back()[0] - exact);
    const double e2 = std::abs(rk4_integrate(vf, vec({0.5}), 0.0, 1.0, 80).trajectory.back()[0] - exact);
    const double ratio = e1 / e2;
    EXPECT_GE(ratio, 12.0);
    EXPECT_LE(ratio, 20.0);
}

TEST(Rk4, BlowUpStopsWithPartialTrajectory) {
    // x' = x^2 from x(0) = 1 blows up at t = 1
    const SmoothMap vf(1, 1, [](const Vector& x) { return Vector(x.cwiseProduct(x)); });
    const Integration run = rk4_integrate(vf, vec({1.0}), 0.0, 3.0, 30);
    EXPECT_FALSE(run.ok);
    EXPECT_FALSE(run.error.empty());
    EXPECT_LT(run.trajectory.size(), 31u);
    for (const auto& s : run.trajectory.states) EXPECT_TRUE(s.allFinite());
}

TEST(Rk4, RejectsBadArguments) {
    const SmoothMap vf = SmoothMap::identity(2);
    EXPECT_THROW(rk4_integrate(vf, vec({1.0}), 0, 1, 10), DimensionError);
    EXPECT_THROW(rk4_integrate(vf, vec({1.0, 2.0}), 0, 1, 0), PreconditionError);
    EXPECT_THROW(rk4_integrate(vf, vec({1.0, 2.0}), 1, 1, 10), PreconditionError);
}

TEST(Defect, KeepsMaximumAndItsPoint) {
    Defect d;
    d.absorb(0.5, vec({1}));
    d.absorb(2.0, vec({2}));
    d.absorb(1.0, vec({3}));
    EXPECT_EQ(d.value, 2.0);
    EXPECT_EQ(d.at[0], 2.0);
}

TEST(Defect, NanSticks) {
    Defect d;
    d.absorb(1.0, vec({1}));
    d.absorb(std::numeric_limits<double>::quiet_NaN(), vec({2}));
    d.absorb(5.0, vec({3}));
    EXPECT_TRUE(std::isnan(d.value));
    EXPECT_EQ(d.at[0], 2.0);
}

TEST(SmoothMap, ShapeChecked) {
    const SmoothMap bad(2, 3, [](const Vector&) { return Vector::Zero(2); });
    EXPECT_THROW(bad(vec({1, 2})), DimensionError);
    EXPECT_THROW(bad(vec({1})), DimensionError);
}

TEST(FormatPoint, Compact) {
    EXPECT_EQ(format_point(vec({0.5, -1.25})), "[0.5,-1.25]");
    EXPECT_EQ(format_point(Vector(0)), "[]");
}
