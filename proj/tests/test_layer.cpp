#include <doctest.h>

#include "canard_lab/layer_dynamics.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace canard;

TEST_CASE("first integral values")
{
    CHECK(first_integral(0.5, 0) == 0.0);
    CHECK(first_integral(-0.5, 0) == doctest::Approx(-std::exp(-1.0)).epsilon(1e-15));
    for (double t : {-1.0, 0.0, 2.0}) {
        auto p = strong_canard_point(0, t);
        CHECK(std::abs(first_integral(p.x2, p.z2)) < 1e-15);
    }
}

TEST_CASE("first integral is conserved symbolically")
{
    CHECK(first_integral_rate(SlowFastSystem::canonical()).is_zero());
    // higher-order terms vanish at r2 = 0, so the layer problem is the same
    auto sys = system_from_json(nlohmann::json::parse(R"({"a1":0.4,"a2":0.2,"F":[{"vars":{"y":2},"coeff":1}],"H":[{"vars":{"z":2},"coeff":0.5}]})"));
    CHECK(first_integral_rate(sys).is_zero());
}

TEST_CASE("strong canard points")
{
    auto p = strong_canard_point(0, 0);
    CHECK(p.x2 == 0.5);
    CHECK(p.y2 == 0.0);
    CHECK(p.z2 == 0.0);
    p = strong_canard_point(0, 2);
    CHECK(p.x2 == -0.5);
    CHECK(p.z2 == 1.0);
    p = strong_canard_point(0.3, 2);
    CHECK(p.y2 == doctest::Approx(0.3));

    auto sys = SlowFastSystem::canonical();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int i = 0; i < 20; ++i) {
        double mu = 0.2 * U(rng), t = U(rng);
        auto q = strong_canard_point(mu, t);
        auto v = field_chart2(sys, q, mu);
        CHECK(std::abs(v[0] + t / 2) <= 1e-12);
        CHECK(std::abs(v[1] - mu / 2) <= 1e-12);
        CHECK(std::abs(v[2] - 0.5) <= 1e-12);
    }
}

TEST_CASE("separatrix follows the closed form")
{
    Tolerances tol;
    for (double t1 : {2.0, -2.0}) {
        auto tr = integrate(layer_field(), {0.5, 0.0}, {0, t1}, tol);
        for (int k = 0; k <= 40; ++k) {
            double t = t1 * k / 40.0;
            auto s = tr.eval(t);
            CHECK(std::abs(s[0] - (-t * t / 4 + 0.5)) <= 1e-8);
            CHECK(std::abs(s[1] - t / 2) <= 1e-8);
        }
    }
}

TEST_CASE("periodic orbits conserve the first integral")
{
    for (double h : {0.1, 0.5, 1.0, 2.0}) {
        auto o = periodic_orbit(h, Tolerances{});
        CHECK(o.H_drift <= 1e-9);
        CHECK(o.period > 0);
        const auto& end = o.samples.back();
        CHECK(std::abs(end[0] + h) < 1e-8);
        CHECK(std::abs(end[1]) < 1e-11);
    }
}

TEST_CASE("orbits are time-reversible")
{
    auto o = periodic_orbit(0.5, Tolerances{});
    for (int k = 1; k < 20; ++k) {
        double t = o.period * k / 20.0;
        CHECK(std::abs(o.samples.eval(t)[0] - o.samples.eval(o.period - t)[0]) < 1e-8);
        CHECK(std::abs(o.samples.eval(t)[1] + o.samples.eval(o.period - t)[1]) < 1e-8);
    }
}

TEST_CASE("period tends to 2 pi")
{
    CHECK(std::abs(periodic_orbit(1e-3, Tolerances{}).period - 2 * std::numbers::pi) <= 1e-2);
    double prev = 1e300;
    for (int k = 1; k <= 8; ++k) {
        double T = periodic_orbit(std::ldexp(1.0, -k), Tolerances{}).period;
        double gap = std::abs(T - 2 * std::numbers::pi);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("orbits are nested")
{
    double prev = -1e300;
    for (double h = 0.05; h <= 3.0; h += 0.05) {
        double H = first_integral(-h, 0);
        CHECK(H > prev);
        prev = H;
    }
    CHECK(prev < 0);
}

TEST_CASE("critical manifold classification")
{
    auto sys = SlowFastSystem::canonical();
    CHECK(classify_C2(-0.2) == SheetType::attracting);
    CHECK(classify_C2(0.2) == SheetType::repelling);
    CHECK(classify_C2(0.0) == SheetType::degenerate);
    auto ev = layer_eigenvalues(sys, 0.0);
    CHECK(std::abs(ev[0] - std::complex<double>(0, 1)) <= 1e-12);
    CHECK(std::abs(ev[1] - std::complex<double>(0, -1)) <= 1e-12);
    CHECK(layer_eigenvalues(sys, -0.2)[0].real() < 0);
    CHECK(layer_eigenvalues(sys, 0.2)[0].real() > 0);
}

TEST_CASE("orbit csv")
{
    auto o = periodic_orbit(0.5, Tolerances{});
    std::ostringstream os;
    write_orbit_csv(o, os);
    std::string s = os.str();
    CHECK(s.rfind("t,x2,z2,H\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == long(o.samples.size()) + 1);
}
