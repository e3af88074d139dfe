#include "canard_lab/layer_dynamics.hpp"

#include "canard_lab/io.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace canard {

std::string to_string(SheetType t)
{
    switch (t) {
    case SheetType::attracting: return "attracting";
    case SheetType::repelling: return "repelling";
    case SheetType::degenerate: return "degenerate";
    }
    return "?";
}

double first_integral(double x2, double z2) { return (x2 + z2 * z2 - 0.5) * std::exp(2 * x2); }

Polynomial first_integral_rate(const SlowFastSystem& sys)
{
    // restrict the chart-2 field to r2 = mu = y2 = 0
    const auto& c2 = sys.charts().chart2;
    Polynomial fx = c2[0].fix(kR2, 0).fix(kMu2, 0).fix(kY2, 0);
    Polynomial fz = c2[2].fix(kR2, 0).fix(kMu2, 0).fix(kY2, 0);
    const int n = 5;
    Polynomial x = Polynomial::variable(n, kX2), z = Polynomial::variable(n, kZ2);
    Polynomial P = x + z * z - Polynomial::constant(n, 0.5);
    // d/dt [P e^{2x}] = e^{2x} (P_x x' + P_z z' + 2 P x')
    return P.derivative(kX2) * fx + P.derivative(kZ2) * fz + P * fx * 2.0;
}

Chart2Point strong_canard_point(double mu, double t2)
{
    return {0.0, -t2 * t2 / 4 + 0.5, mu * t2 / 2, t2 / 2};
}

VectorField layer_field()
{
    return [](double, const double* s, double* ds) {
        ds[0] = -s[1];
        ds[1] = s[0] + s[1] * s[1];
    };
}

LayerOrbit periodic_orbit(double h, const Tolerances& tol)
{
    if (!(h > 0)) throw std::domain_error("periodic_orbit: h must be positive");
    Tolerances t = tol;
    t.abs_tol = tol.abs_tol * std::min(1.0, h);
    t.event_tol = tol.event_tol * std::min(1.0, h);
    // return to {z2 = 0, x2 < 0}: z2 decreases through zero there
    SectionSpec sec{[](const double* s) { return s[1]; }, -1};
    IntegrateOptions opt;
    opt.escape = [](const double* s) { return std::abs(s[0]) > 1e3 || std::abs(s[1]) > 1e3; };
    SectionHit hit = integrate_to_section(layer_field(), {-h, 0.0}, sec, 1e4, t, opt);
    if (!(hit.state[0] < 0)) throw SolverError("periodic_orbit: return landed on x2 >= 0");
    LayerOrbit o;
    o.h = h;
    o.period = hit.t_hit;
    o.samples = std::move(hit.path);
    double H0 = first_integral(-h, 0.0);
    for (const auto& s : o.samples.states())
        o.H_drift = std::max(o.H_drift, std::abs(first_integral(s[0], s[1]) - H0) / std::abs(H0));
    return o;
}

std::array<std::array<double, 2>, 2> layer_linearization(const SlowFastSystem& sys, double y2)
{
    const auto& c2 = sys.charts().chart2;
    double v[5] = {-y2 * y2, y2, y2, 0.0, 0.0};
    std::array<std::array<double, 2>, 2> J{};
    const int comp[2] = {0, 2};
    const int var[2] = {kX2, kZ2};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) J[i][j] = c2[comp[i]].derivative(var[j]).eval(v);
    return J;
}

std::array<std::complex<double>, 2> layer_eigenvalues(const SlowFastSystem& sys, double y2)
{
    auto J = layer_linearization(sys, y2);
    Eigen::Matrix2d A;
    A << J[0][0], J[0][1], J[1][0], J[1][1];
    Eigen::EigenSolver<Eigen::Matrix2d> es(A);
    std::array<std::complex<double>, 2> ev{es.eigenvalues()(0), es.eigenvalues()(1)};
    if (ev[0].imag() < ev[1].imag()) std::swap(ev[0], ev[1]);
    return ev;
}

SheetType classify_C2(double y2)
{
    if (y2 < 0) return SheetType::attracting;
    if (y2 > 0) return SheetType::repelling;
    return SheetType::degenerate;
}

void write_orbit_csv(const LayerOrbit& orbit, std::ostream& os)
{
    io::CsvWriter w(os, {"t", "x2", "z2", "H"});
    const auto& ts = orbit.samples.times();
    const auto& xs = orbit.samples.states();
    for (std::size_t i = 0; i < ts.size(); ++i) w.row({ts[i], xs[i][0], xs[i][1], first_integral(xs[i][0], xs[i][1])});
}

} // namespace canard
