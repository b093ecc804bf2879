#include <perihelion/retarded_field.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace perihelion;
using namespace perihelion::field;

namespace {

constexpr double c = 1.0;

// Closed-form delay for x_s(t) = x0 + v (t - t0): |R0 + v tau| = c tau with R0 = x - x_s(t).
double uniform_delay(const Event& obs, const Vec3& x0, const Vec3& v, double t0) {
    const Vec3 R0 = obs.x - (x0 + v * (obs.t - t0));
    const double a = c * c - v.squaredNorm();
    const double b = R0.dot(v);
    return (b + std::sqrt(b * b + a * R0.squaredNorm())) / a;
}

} // namespace

TEST(RetardedTime, StaticSource) {
    StaticWorldline src(Vec3::Zero());
    const auto r = retarded_time({10.0, Vec3(3.0, 0, 0)}, src, c);
    EXPECT_DOUBLE_EQ(r.t_ret, 7.0);
    EXPECT_LT(std::abs(r.residual), 1e-12);
}

TEST(RetardedTime, UniformSourceMatchesQuadraticRoot) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        Vec3 v(U(rng), U(rng), U(rng));
        v *= 0.95 * std::abs(U(rng)) / v.norm();
        const Vec3 x0(U(rng), U(rng), U(rng));
        UniformWorldline src(x0, v, 0.5);
        const Event obs{3.0 + U(rng), Vec3(5 * U(rng), 5 * U(rng), 5 * U(rng))};
        const auto r = retarded_time(obs, src, c);
        EXPECT_NEAR(r.t_ret, obs.t - uniform_delay(obs, x0, v, 0.5), 1e-12 * std::abs(obs.t));
        EXPECT_LT(std::abs(r.residual), 1e-9);
    }
}

TEST(RetardedTime, ResidualBelowNanometreScaleOnCircularSource) {
    CircularWorldline src(Vec3::Zero(), 1.0, 0.7);
    for (int i = 0; i < 20; ++i) {
        const Event obs{0.37 * i, Vec3(4.0 * std::cos(i), 3.0, 0.5 * i)};
        const auto r = retarded_time(obs, src, c);
        EXPECT_LT(std::abs(r.residual), 1e-9);
        EXPECT_LT(r.t_ret, obs.t);
    }
}

TEST(RetardedTime, PlanetaryScaleRelativeResidual) {
    const double cs = 299792458.0;
    StaticWorldline sun(Vec3::Zero());
    const Event obs{1e7, Vec3(0.5791e11, 1e10, 0)};
    const auto r = retarded_time(obs, sun, cs);
    EXPECT_LT(std::abs(r.residual) / obs.x.norm(), 1e-15);
}

TEST(RetardedTime, ShortSampledHistoryUnderruns) {
    std::vector<WorldlineSample> samples;
    for (int i = 0; i <= 10; ++i) samples.push_back({0.1 * i, Vec3(1e-4 * i, 0, 0), Vec3(1e-3, 0, 0)});
    SampledWorldline src(samples);
    EXPECT_THROW(retarded_time({1.0, Vec3(50, 0, 0)}, src, c), HistoryUnderrun);
}

TEST(RetardedTime, SuperluminalSourceRejected) {
    UniformWorldline src(Vec3::Zero(), Vec3(1.5, 0, 0));
    EXPECT_THROW(retarded_time({1.0, Vec3(0, 2, 0)}, src, c), DomainError);
}

TEST(LienardWiechert, StaticSourceReducesToNewtonPotential) {
    const double G = 6.673e-11, m = 1.989e30, cs = 299792458.0;
    StaticWorldline sun(Vec3::Zero());
    const auto k = Coupling::gravity(G, m);
    const Event obs{100.0, Vec3(0.5791e11, -2e10, 3e9)};
    const Vec4 A = lw_potential(obs, sun, k, cs);
    const double r = obs.x.norm();
    EXPECT_NEAR(A[0] / (m * G / r), 1.0, 4e-16);
    EXPECT_EQ(A[1], 0.0);
    EXPECT_EQ(A[2], 0.0);
    EXPECT_EQ(A[3], 0.0);

    const auto F = field_strength(obs, sun, k, cs);
    const Vec3 expect = -m * G * obs.x / (r * r * r);
    EXPECT_LT((F.electric() - expect).norm() / expect.norm(), 4e-16);
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) EXPECT_EQ(F(i, j), 0.0);
}

TEST(LienardWiechert, ZeroCouplingGivesZeroPotential) {
    CircularWorldline src(Vec3::Zero(), 1.0, 0.5);
    EXPECT_EQ(lw_potential({2.0, Vec3(3, 0, 0)}, src, Coupling{0.0, 1.0}, c).norm(), 0.0);
}

TEST(LienardWiechert, BoostedStaticSourceMatchesLorentzTransform) {
    const double s = 2.5;
    const Coupling k{-1.0, s};
    for (double beta : {0.1, 0.5, 0.9}) {
        const double g = 1.0 / std::sqrt(1 - beta * beta);
        UniformWorldline src(Vec3::Zero(), Vec3(beta * c, 0, 0));
        for (const Event& obs : {Event{1.0, Vec3(3, 1, 0)}, Event{-2.0, Vec3(-1, 0.5, 2)}, Event{5.0, Vec3(2, -3, 1)}}) {
            // rest-frame coordinates of the observation event
            const double x0 = c * obs.t;
            const Vec3 xr(g * (obs.x.x() - beta * x0), obs.x.y(), obs.x.z());
            const double Rp = xr.norm();
            const Vec4 A = lw_potential(obs, src, k, c);
            EXPECT_NEAR(A[0], g * s / Rp, 1e-10 * g * s / Rp);
            EXPECT_NEAR(A[1], -g * beta * s / Rp, 1e-10 * g * s / Rp);
            EXPECT_NEAR(A[2], 0.0, 1e-15);
        }
    }
}

TEST(FieldStrength, AnalyticMatchesFiniteDifferences) {
    CircularWorldline src(Vec3(0.2, -0.1, 0.0), 1.0, 0.6, 0.3);
    const Coupling k{-1.0, 1.0};
    const Event obs{2.0, Vec3(3.0, 1.5, -0.7)};
    const auto Fa = field_strength(obs, src, k, c);
    const auto Ff = field_strength(obs, src, k, c, FieldMethod::finite_difference, 1e-2);
    EXPECT_LT((Fa.matrix() - Ff.matrix()).norm() / Fa.norm(), 1e-7);

    // plain central differences converge at second order
    std::vector<double> err;
    for (double h : {0.1, 0.05, 0.025}) {
        Mat4 dA;
        for (int mu = 0; mu < 4; ++mu) dA.row(mu) = potential_gradient_fd(obs, src, k, c, mu, h, false).transpose();
        err.push_back(((dA - dA.transpose()) - Fa.matrix()).norm());
    }
    EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.1);
    EXPECT_NEAR(std::log2(err[1] / err[2]), 2.0, 0.1);
}

TEST(FieldStrength, AntisymmetryAndContractionOnRandomConfigurations) {
    std::mt19937 rng(20240611);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double radius = 0.5 + std::abs(U(rng));
        const double speed = 0.95 * std::abs(U(rng));
        CircularWorldline src(Vec3(U(rng), U(rng), U(rng)), radius, speed / radius, U(rng));
        const Event obs{5 * U(rng), Vec3(4 + 3 * U(rng), 4 * U(rng), 4 * U(rng))};
        const auto F = field_strength(obs, src, Coupling{-1.0, 1.0 + U(rng)}, c);
        const Mat4 m = F.matrix();
        EXPECT_EQ((m + m.transpose()).norm(), 0.0);
        Vec3 v(U(rng), U(rng), U(rng));
        v *= 0.99 * std::abs(U(rng)) / v.norm();
        const Vec4 u = four_velocity(v, c);
        EXPECT_NEAR(minkowski_square(u), 1.0, 1e-13);
        EXPECT_LT(std::abs(contraction_identity(F, u)), 1e-12 * F.norm() * u.squaredNorm());
    }
}

TEST(FieldStrength, StaticSunOnCircularOrbitContraction) {
    StaticWorldline sun(Vec3::Zero());
    const double r = 10.0, w = std::sqrt(1.0 / (r * r * r));
    const Vec3 x(r, 0, 0), v(0, r * w, 0);
    const auto F = field_strength({0.0, x}, sun, Coupling{-1.0, 1.0}, c);
    EXPECT_LT(std::abs(contraction_identity(F, four_velocity(v, c))), 1e-16);
}

TEST(FieldStrength, AttractionAndRepulsionSigns) {
    StaticWorldline src(Vec3::Zero());
    const Vec3 x(2.0, 1.0, 0.0);
    const auto F = field_strength({0.0, x}, src, Coupling::gravity(1.0, 3.0), c);
    // equal-sign masses: force toward the source
    EXPECT_LT(lorentz_force(F, Vec3::Zero(), c, 1.0).dot(x), 0.0);
    // test body of opposite sign: pushed away
    EXPECT_GT(lorentz_force(F, Vec3::Zero(), c, -1.0).dot(x), 0.0);
    const auto Fneg = field_strength({0.0, x}, src, Coupling::gravity(1.0, -3.0), c);
    EXPECT_GT(lorentz_force(Fneg, Vec3::Zero(), c, 1.0).dot(x), 0.0);
}

TEST(GaugeResidual, StaticSourceVanishes) {
    StaticWorldline src(Vec3(0.1, 0.2, 0.3));
    const std::vector<Event> probes = {{0.0, Vec3(2, 0, 0)}, {1.0, Vec3(-1, 3, 2)}};
    const auto rep = gauge_residual(src, Coupling{-1.0, 1.0}, c, probes, 0.1);
    for (double r : rep.residuals) EXPECT_LT(r, 1e-14);
}

TEST(GaugeResidual, SecondOrderForMovingSources) {
    const std::vector<Event> probes = {{0.0, Vec3(3, 0, 0)}, {1.0, Vec3(-2, 3, 1)}, {2.5, Vec3(0.5, -2.5, -1)}};
    UniformWorldline uni(Vec3::Zero(), Vec3(0.3, -0.4, 0.2));
    CircularWorldline circ(Vec3::Zero(), 1.0, 0.5);
    for (const Worldline* src : {static_cast<const Worldline*>(&uni), static_cast<const Worldline*>(&circ)}) {
        const auto rep = gauge_residual(*src, Coupling{-1.0, 1.0}, c, probes, 0.2, 4);
        ASSERT_EQ(rep.orders.size(), 3u);
        for (double o : rep.orders) EXPECT_GE(o, 1.8);
    }
}

TEST(Continuity, WeakFormVanishesAlongWorldline) {
    CircularWorldline src(Vec3::Zero(), 1.0, 0.8);
    const auto rep = continuity_residual(src, 1.0, Vec3(0.5, 0.5, 0.0), 0.7, 0.9);
    EXPECT_GT(rep.scale, 0.1);
    EXPECT_LT(std::abs(rep.residual), 1e-12 * rep.scale);
}

TEST(DeltaIdentity, SmearedIntegralApproachesClosedForm) {
    CircularWorldline src(Vec3::Zero(), 1.0, 0.6);
    const Event obs{3.0, Vec3(4.0, 1.0, 0.5)};
    auto u = [&](double t) { return 1.0 + 0.3 * src.at(t).v.x(); };
    std::vector<double> err;
    for (double eps : {1e-1, 5e-2, 2.5e-2}) {
        const auto rep = retarded_delta_identity(obs, src, c, u, eps);
        err.push_back(std::abs(rep.smeared - rep.closed) / std::abs(rep.closed));
    }
    EXPECT_LT(err.back(), 1e-4);
    EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.3);
}

TEST(SampledWorldline, CubicInterpolationOfCircle) {
    CircularWorldline exact(Vec3::Zero(), 1.0, 0.5);
    std::vector<WorldlineSample> samples;
    const double dt = 0.01;
    for (int i = 0; i <= 2000; ++i) samples.push_back(exact.at(-10.0 + dt * i));
    SampledWorldline src(samples);
    for (double t : {-5.003, 0.0, 3.14159, 9.5}) {
        EXPECT_LT((src.at(t).x - exact.at(t).x).norm(), 1e-8);
        EXPECT_LT((src.at(t).v - exact.at(t).v).norm(), 1e-6);
        EXPECT_LT((src.acceleration(t) - exact.acceleration(t)).norm(), 1e-3);
    }
    const Event obs{9.0, Vec3(5, 2, 1)};
    EXPECT_NEAR(retarded_time(obs, src, c).t_ret, retarded_time(obs, exact, c).t_ret, 1e-8);
    const auto Fs = field_strength(obs, src, Coupling{-1.0, 1.0}, c);
    const auto Fe = field_strength(obs, exact, Coupling{-1.0, 1.0}, c);
    EXPECT_LT((Fs.matrix() - Fe.matrix()).norm() / Fe.norm(), 1e-4);
}
