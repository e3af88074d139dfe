#include <doctest.h>

#include "canard_lab/hopf_melnikov.hpp"
#include "canard_lab/io.hpp"
#include "canard_lab/layer_dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace canard;

namespace {

constexpr double kPi = std::numbers::pi;

MelnikovOptions opts()
{
    MelnikovOptions o;
    o.manifold.N = 30;
    return o;
}

// -2 int_0^T0 e^{int_t^T0 2 z} (z/h)^2 dt along the h-scaled layer orbit, integrated on its own
double dy2_closed_form(double h)
{
    VectorField f = [h](double, const double* s, double* ds) {
        ds[0] = -s[1];
        ds[1] = s[0] + h * s[1] * s[1];
        ds[2] = 2 * h * s[1];
        ds[3] = std::exp(-s[2]) * s[1] * s[1];
    };
    Tolerances tol;
    tol.abs_tol = tol.rel_tol = 1e-12;
    SectionSpec sec{[](const double* s) { return s[1]; }, -1};
    auto hit = integrate_to_section(f, {-1, 0, 0, 0}, sec, 100, tol);
    return -2 * std::exp(hit.state[2]) * hit.state[3];
}

} // namespace

TEST_CASE("Delta vanishes on the layer family")
{
    auto sys = SlowFastSystem::canonical();
    for (double h : {0.0, 0.2, 0.5, 1.0}) {
        auto mv = delta_hat(sys, h, 0, 0, 0, opts());
        CHECK(std::abs(mv.d1) <= 1e-9);
        CHECK(std::abs(mv.d1_hat) <= 1e-9);
        CHECK(std::abs(mv.d2) <= 1e-9);
        CHECK(std::abs(mv.d1_hat_adjoint) <= 1e-9);
    }
}

TEST_CASE("Jacobian of Delta-hat matches the column formulas")
{
    auto sys = SlowFastSystem::canonical();
    for (double h : {0.0, 0.25, 0.5, 1.0}) {
        auto J = delta_hat_jacobian(sys, h, 0, 0, 0, opts());
        double T0 = AdjointSolution(h).period();
        double ref = dy2_closed_form(h);
        CHECK(std::abs(J[0][0] - ref) <= 1e-4 * std::abs(ref));
        CHECK(std::abs(J[0][1]) <= 1e-4);
        CHECK(std::abs(J[1][1] - T0 / 2) <= 1e-4 * T0 / 2);
        MESSAGE("h = " << h << ", starred entry = " << J[1][0]);
        CHECK(std::abs(J[0][0] * J[1][1] - J[0][1] * J[1][0]) >= 0.1 * 2 * kPi * kPi);
    }
    auto J0 = delta_hat_jacobian(sys, 0.0, 0, 0, 0, opts());
    CHECK(std::abs(J0[0][0] + 2 * kPi) <= 1e-3);
    CHECK(std::abs(J0[1][1] - kPi) <= 1e-4);
}

TEST_CASE("adjoint closed form agrees with the exact mismatch to second order")
{
    auto sys = SlowFastSystem::canonical();
    double prev = 0;
    for (double s : {0.02, 0.01}) {
        auto mv = delta_hat(sys, 0.5, s, 0.5 * s, 0.5 * s, opts());
        double gap = std::abs(mv.d1_hat - mv.d1_hat_adjoint);
        if (prev > 0) CHECK(prev / gap >= 3.0);
        prev = gap;
    }
}

TEST_CASE("adjoint solution")
{
    for (double h : {0.1, 0.5, 1.0}) {
        AdjointSolution psi(h);
        double T = psi.period();
        auto end = psi(T);
        CHECK(std::abs(end[0] - 1) <= 1e-10);
        CHECK(std::abs(end[1]) <= 1e-10);

        // integrate psi' = -A^T psi backwards from (1, 0) and compare with the closed form
        VectorField adj = [&](double t, const double* p, double* dp) {
            auto A = psi.A(t);
            dp[0] = -(A[0][0] * p[0] + A[1][0] * p[1]);
            dp[1] = -(A[0][1] * p[0] + A[1][1] * p[1]);
        };
        Tolerances tol;
        tol.abs_tol = tol.rel_tol = 1e-12;
        auto back = integrate(adj, {1.0, 0.0}, {T, 0.0}, tol);
        for (int i = 0; i <= 20; ++i) {
            double t = T * i / 20.0;
            auto a = back.eval(t);
            auto b = psi(t);
            CHECK(std::hypot(a[0] - b[0], a[1] - b[1]) <= 1e-8);
        }
    }
    // bounded as h -> 0
    for (double h : {1e-2, 1e-4, 0.0}) {
        AdjointSolution psi(h);
        for (int i = 0; i <= 10; ++i) {
            auto p = psi(psi.period() * i / 10.0);
            CHECK(std::hypot(p[0], p[1]) <= 1.5);
        }
    }
    CHECK(adjoint_solution(0.5, 1.0, AdjointSolution(0.5).period())[0] == AdjointSolution(0.5)(1.0)[0]);
}

TEST_CASE("straightened field")
{
    auto sys = SlowFastSystem::canonical();
    auto res = solve_invariant_series(sys, 0.05, 0.0, opts().manifold);
    for (double y2 : {-0.15, -0.05, 0.0, 0.1}) {
        auto v = straightened_field(sys, res, {{0, 0}, y2}, 0.05, 0.0);
        CHECK(std::hypot(v[0], v[1]) <= 1e-7);
    }

    auto flat = solve_invariant_series(sys, 0.0, 0.0, opts().manifold);
    auto lf = layer_field();
    for (auto u : {Vec2{-0.3, 0.2}, Vec2{0.1, -0.4}}) {
        auto v = straightened_field(sys, flat, {u, 0.0}, 0.0, 0.0);
        double ref[2];
        lf(0, u.data(), ref);
        CHECK(std::abs(v[0] - ref[0]) <= 1e-12);
        CHECK(std::abs(v[1] - ref[1]) <= 1e-12);
    }

    // linearisation at u = 0: trace 0, determinant 1
    double d = 1e-6;
    auto col = [&](int k) {
        Vec2 up{0, 0}, um{0, 0};
        up[k] = d;
        um[k] = -d;
        auto a = straightened_field(sys, flat, {up, 0.0}, 0.0, 0.0), b = straightened_field(sys, flat, {um, 0.0}, 0.0, 0.0);
        return Vec2{(a[0] - b[0]) / (2 * d), (a[1] - b[1]) / (2 * d)};
    };
    auto c0 = col(0), c1 = col(1);
    CHECK(std::abs(c0[0] + c1[1]) <= 1e-9);
    CHECK(std::abs(c0[0] * c1[1] - c1[0] * c0[1] - 1) <= 1e-9);
}

TEST_CASE("small branch")
{
    auto sys = SlowFastSystem::canonical();
    auto o = opts();
    auto z = solve_small_branch(sys, 0.5, 0.0, o);
    CHECK(std::abs(z.y2_bar) <= 1e-12);
    CHECK(std::abs(z.mu2_bar) <= 1e-12);

    auto b = solve_small_branch(sys, 0.5, 0.05, o);
    CHECK(b.residual <= o.tol.newton_tol);
    auto mv = delta_hat(sys, 0.5, b.y2_bar, 0.05, b.mu2_bar, o);
    CHECK(std::hypot(mv.d1_hat, mv.d2) <= 1e-9);
    auto rm = return_map_fixed_point(sys, 0.5, 0.05, o, {0, 0});
    CHECK(std::abs(rm[0] - b.y2_bar) <= 1e-6);
    CHECK(std::abs(rm[1] - b.mu2_bar) <= 1e-6);

    // branch values grow like r2
    std::vector<double> ratio;
    for (double r2 : {0.01, 0.02, 0.04}) {
        auto p = solve_small_branch(sys, 0.5, r2, o);
        ratio.push_back(std::hypot(p.y2_bar, p.mu2_bar) / r2);
    }
    for (double r : ratio) CHECK(r == doctest::Approx(ratio[0]).epsilon(0.2));
}

TEST_CASE("Melnikov roots agree with the return map on a grid")
{
    auto sys = SlowFastSystem::canonical();
    auto o = opts();
    for (double h : {0.2, 0.5, 0.8})
        for (double r2 : {0.01, 0.025, 0.04}) {
            auto b = solve_small_branch(sys, h, r2, o);
            auto rm = return_map_fixed_point(sys, h, r2, o, {b.y2_bar, b.mu2_bar});
            auto rm0 = return_map_fixed_point(sys, h, r2, o, {0, 0});
            CHECK(std::abs(rm[0] - b.y2_bar) <= 1e-5);
            CHECK(std::abs(rm[1] - b.mu2_bar) <= 1e-5);
            CHECK(std::abs(rm0[1] - rm[1]) <= 1e-8);
        }
}

TEST_CASE("return map transition time")
{
    auto sys = SlowFastSystem::canonical();
    double T = 0;
    auto rm = return_map_fixed_point(sys, 1e-3, 0.0, opts(), {0, 0}, &T);
    CHECK(std::abs(rm[0]) <= 1e-8);
    CHECK(std::abs(rm[1]) <= 1e-8);
    CHECK(std::abs(T - 2 * kPi) <= 1e-3);
    CHECK_THROWS_AS(return_map_fixed_point(sys, 0.0, 0.05), std::domain_error);
}

TEST_CASE("Hopf curve")
{
    auto sys = SlowFastSystem::canonical();
    auto o = opts();
    double prev = 1;
    for (double r2 : {0.1, 0.05, 0.02}) {
        double mu = hopf_mu(sys, r2, o);
        auto e = hopf_by_eigenvalues(sys, r2, mu);
        CHECK(std::abs(e.mu - mu) <= 1e-6);
        CHECK(std::abs(e.eigenvalues[0].real()) <= 1e-10);
        CHECK(std::abs(e.eigenvalues[0].imag() - 1) <= 2 * r2);
        CHECK(std::abs(e.eigenvalues[2].imag()) == 0.0);
        CHECK(std::abs(e.eigenvalues[2].real() - r2 * sys.lambda()) <= 2 * r2 * r2);
        CHECK(std::abs(mu) < prev);
        prev = std::abs(mu);
    }
    auto eq = chart2_equilibrium(sys, 1e-3, 0.0);
    CHECK(std::abs(eq[1]) <= 1e-12);
    CHECK_THROWS_AS(hopf_mu(sys, 0.0), std::domain_error);
}

TEST_CASE("branch CSV")
{
    std::ostringstream os;
    SmallBranchPoint p;
    p.h = 0.5;
    p.r2 = 0.1;
    p.mu2_bar = -0.2;
    write_branch_csv({p}, os);
    auto s = os.str();
    CHECK(s.rfind("h,r2,y2_bar,mu2_bar,mu,residual\n", 0) == 0);
    CHECK(s.find(io::fmt(0.1 * -0.2)) != std::string::npos);
}

TEST_CASE("branch and return map agree on a system with higher-order terms")
{
    auto sys = system_from_json(nlohmann::json::parse(R"({
        "a1": 0.3, "a2": 0.9,
        "F": [{"vars":{"y":2},"coeff":0.4}],
        "G": [{"vars":{"x":1},"coeff":-0.2},{"vars":{"z":2},"coeff":0.6}],
        "H": [{"vars":{"x":1,"z":1},"coeff":0.8},{"vars":{"z":2},"coeff":-0.6}]
    })"));
    auto o = opts();
    auto b = solve_small_branch(sys, 0.5, 0.03, o);
    auto rm = return_map_fixed_point(sys, 0.5, 0.03, o, {0, 0});
    CHECK(std::abs(rm[0] - b.y2_bar) <= 1e-6);
    CHECK(std::abs(rm[1] - b.mu2_bar) <= 1e-6);
    double mu = hopf_mu(sys, 0.03, o);
    CHECK(std::abs(hopf_by_eigenvalues(sys, 0.03, mu).mu - mu) <= 1e-6);
}
