#include <doctest.h>

#include "canard_lab/slow_manifold.hpp"

#include <cmath>
#include <random>

using namespace canard;

namespace {

ManifoldConfig cfg30()
{
    ManifoldConfig c;
    c.N = 30;
    return c;
}

double max_ratio(const std::vector<double>& d)
{
    double r = 0;
    for (std::size_t i = 1; i < d.size(); ++i)
        if (d[i - 1] > 1e-12) r = std::max(r, d[i] / d[i - 1]);
    return r;
}

SlowFastSystem rich_system()
{
    return system_from_json(nlohmann::json::parse(R"({
        "a1": 0.3, "a2": 0.9,
        "F": [{"vars":{"y":2},"coeff":0.4}],
        "G": [{"vars":{"x":1},"coeff":-0.2},{"vars":{"z":2},"coeff":0.6}],
        "H": [{"vars":{"x":1,"z":1},"coeff":0.8},{"vars":{"z":2},"coeff":-0.6}]
    })"));
}

} // namespace

TEST_CASE("series arithmetic")
{
    auto a = Series::from_coeffs(4, {1, 2, 0, 0, 0});
    auto b = Series::from_coeffs(4, {0, 1, 1, 0, 0});
    auto p = a * b;
    CHECK(p.coeffs() == std::vector<double>{0, 1, 3, 2, 0});
    CHECK(a.derivative().coeffs() == std::vector<double>{2, 0, 0, 0, 0});
    CHECK(p.eval(0.5) == doctest::Approx(a.eval(0.5) * b.eval(0.5)));
    CHECK(p.eval_derivative(0.3) == doctest::Approx(p.derivative().eval(0.3)));
}

TEST_CASE("formal coefficients")
{
    auto sys = SlowFastSystem::canonical();
    auto h = formal_coefficients(sys, 0.0, 3);
    double at[5] = {0, 0.3, 0, 0, 0};
    CHECK(h[0][0].eval(at) == doctest::Approx(-0.09).epsilon(1e-15));
    CHECK(h[0][1].eval(at) == doctest::Approx(0.3).epsilon(1e-15));

    // the defect of the order-K truncation scales like r2^(K+1)
    for (auto s : {SlowFastSystem::canonical(), rich_system()})
        for (double mu2 : {0.0, 0.07}) {
            auto hk = formal_coefficients(s, mu2, 3);
            for (int K = 0; K <= 3; ++K) {
                std::vector<std::array<Polynomial, 2>> part(hk.begin(), hk.begin() + K + 1);
                double a = formal_defect(s, part, 1e-2, mu2, 0.1), b = formal_defect(s, part, 1e-3, mu2, 0.1);
                CHECK(std::log10(a / b) >= K + 0.8);
            }
        }
}

TEST_CASE("recentring is the identity at mu2 = 0")
{
    auto res = solve_invariant_series(SlowFastSystem::canonical(), 0.0, 0.0, cfg30());
    CHECK(res.offset == 0.0);
    for (double v : {-0.15, 0.0, 0.1}) {
        auto m = eval_manifold(res, v);
        CHECK(m[0] == -v * v);
        CHECK(m[1] == v);
    }
}

TEST_CASE("T operator")
{
    VectorPowerSeries F;
    F.coeffs.assign(5, Vec2{0, 0});
    F.coeffs[0] = {1, 0};
    auto G = apply_T(F, 0.1, 0.0, 1.0);
    CHECK(std::abs(G.coeffs[0][0]) < 1e-15);
    CHECK(G.coeffs[0][1] == doctest::Approx(1.0));
    for (int n = 1; n < 5; ++n) CHECK(G.coeffs[n] == Vec2{0, 0});

    VectorPowerSeries Z;
    Z.coeffs.assign(5, Vec2{0, 0});
    CHECK(apply_T(Z, 0.1, 0.03).norm() == 0.0);

    double C = calibrate_T_constant(0.0, 1.0);
    CHECK(T_norm(100, 0.1, 0.0, 1.0) <= C / 11);
    for (int k : {0, 1, 5, 20, 1000}) CHECK(T_norm(k, 0.05, 0.04, 1.0) <= calibrate_T_constant(0.04, 1.0) / (0.05 * k + 1) * (1 + 1e-9));
}

TEST_CASE("T is bounded by the calibrated constant on random series")
{
    std::mt19937_64 rng(21);
    std::normal_distribution<double> N01;
    double C = calibrate_T_constant(0.05, 1.0);
    for (int i = 0; i < 50; ++i) {
        VectorPowerSeries F;
        F.nu = 0.2;
        F.coeffs.resize(25);
        for (auto& c : F.coeffs) c = {N01(rng), N01(rng)};
        CHECK(apply_T(F, 0.07, 0.05, 1.0).norm() <= C * F.norm() * (1 + 1e-12));
    }
}

TEST_CASE("r2 = 0 gives the critical manifold")
{
    auto res = solve_invariant_series(SlowFastSystem::canonical(), 0.0, 0.05, cfg30());
    CHECK(res.series.norm() == 0.0);
    auto m = eval_manifold(res, 0.1);
    CHECK(std::abs(m[0] + 0.01) <= 1e-12);
    CHECK(std::abs(m[1] - 0.1) <= 1e-12);
    CHECK(invariance_residual(res, default_grid(0.2)) == 0.0);
}

TEST_CASE("fixed point at r2 = 0.05")
{
    auto sys = SlowFastSystem::canonical();
    auto res = solve_invariant_series(sys, 0.05, 0.0, cfg30());
    CHECK(res.residual <= 1e-8);
    CHECK(max_ratio(res.distances) <= 0.5);

    // distance from the order-one graph is r2 |u~| (the remainder is scaled by r2 once)
    auto m = eval_manifold(res, 0.0);
    double at[5] = {0, 0, 0, 0, 0};
    double d = std::hypot(m[0] - 0.05 * res.h1[0].eval(at), m[1] - 0.05 * res.h1[1].eval(at));
    CHECK(d <= 0.05 * res.series.norm() + 1e-15);

    // tangency of the chart-2 field, an oracle independent of the scaled polynomials
    for (int i = 0; i < 10; ++i) {
        double y2 = -0.18 + 0.04 * i;
        auto p = eval_manifold(res, y2);
        auto dp = eval_manifold_derivative(res, y2);
        auto f = field_chart2(sys, {0.05, p[0], y2, p[1]}, 0.0);
        CHECK(std::hypot(f[0] - dp[0] * f[1], f[2] - dp[1] * f[1]) <= 1e-7);
    }
}

TEST_CASE("truncation study")
{
    auto sys = rich_system();
    double prev = 1e300;
    for (int N : {10, 20, 30}) {
        ManifoldConfig c;
        c.N = N;
        auto res = solve_invariant_series(sys, 0.05, 0.03, c);
        CHECK(res.residual < prev);
        prev = res.residual;
    }
    CHECK(prev <= 1e-8);
}

TEST_CASE("fixed point does not depend on the start")
{
    auto sys = rich_system();
    auto c = cfg30();
    auto a = solve_invariant_series(sys, 0.05, 0.02, c);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-0.01, 0.01);
    VectorPowerSeries init;
    init.nu = c.nu;
    init.coeffs.resize(c.N + 1);
    for (auto& x : init.coeffs) x = {U(rng), U(rng)};
    auto b = solve_invariant_series(sys, 0.05, 0.02, c, &init);
    // coefficient n is compared with the weight nu^n of the series norm
    for (int n = 0; n <= c.N; ++n) {
        double w = std::pow(c.nu, n);
        CHECK(std::abs(a.series.coeffs[n][0] - b.series.coeffs[n][0]) * w <= 10 * c.fp_tol);
        CHECK(std::abs(a.series.coeffs[n][1] - b.series.coeffs[n][1]) * w <= 10 * c.fp_tol);
    }
}

TEST_CASE("manifold is continuous in the parameters")
{
    auto sys = SlowFastSystem::canonical();
    std::vector<double> vals;
    for (int i = 0; i <= 8; ++i) {
        double r2 = 0.01 + 0.005 * i;
        vals.push_back(eval_manifold(solve_invariant_series(sys, r2, 0.03, cfg30()), 0.05)[0]);
    }
    for (std::size_t i = 2; i < vals.size(); ++i) {
        double prev = std::abs(vals[i - 1] - vals[i - 2]), cur = std::abs(vals[i] - vals[i - 1]);
        CHECK(cur <= 10 * prev + 1e-12);
    }
    std::vector<double> mus;
    for (int i = 0; i <= 8; ++i) mus.push_back(eval_manifold(solve_invariant_series(sys, 0.05, -0.08 + 0.02 * i, cfg30()), 0.0)[1]);
    for (std::size_t i = 2; i < mus.size(); ++i)
        CHECK(std::abs(mus[i] - mus[i - 1]) <= 10 * std::abs(mus[i - 1] - mus[i - 2]) + 1e-12);
}

TEST_CASE("errors")
{
    auto sys = SlowFastSystem::canonical();
    CHECK_THROWS_AS(solve_invariant_series(sys, 0.5, 0.0, cfg30()), std::domain_error);
    auto res = solve_invariant_series(sys, 0.05, 0.0, cfg30());
    CHECK_THROWS_AS(eval_manifold(res, 0.3), std::domain_error);
    ManifoldConfig bad;
    bad.N = 0;
    CHECK_THROWS_AS(solve_invariant_series(sys, 0.05, 0.0, bad), ConfigError);
    auto j = manifold_to_json(res);
    CHECK(j["coefficients"].size() == 31);
}
