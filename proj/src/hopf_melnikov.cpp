#include "canard_lab/hopf_melnikov.hpp"

#include "canard_lab/io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace canard {

namespace {

// [p(X + h W1, y2, Z + h W2) - p(X, y2, Z)] / h, slots (X, y2, Z, W1, W2, h); r2 and mu slots already fixed
CompiledPolynomial increment(const Polynomial& p)
{
    const int n = 6;
    Polynomial P = p.resized(n);
    Polynomial X = Polynomial::variable(n, 0), Z = Polynomial::variable(n, 2);
    Polynomial W1 = Polynomial::variable(n, 3), W2 = Polynomial::variable(n, 4), h = Polynomial::variable(n, 5);
    std::vector<Polynomial> img = {X + h * W1, Polynomial::variable(n, 1), Z + h * W2, W1, W2, h};
    return CompiledPolynomial((P.substitute(img) - P).divide_by_var_power(5, 1));
}

struct Increments {
    CompiledPolynomial dfx, dfz, dq;
    const CompiledPolynomial* q = nullptr;   // scaled y2'/r2, slots (x2, y2, z2, r2, mu2)
};

Increments make_increments(const SlowFastSystem& sys, double r2, double mu2)
{
    const auto& cf = sys.charts();
    Increments inc;
    double mu = r2 * mu2;
    inc.dfx = increment(cf.chart2[0].fix(kR2, r2).fix(kMu2, mu));
    inc.dfz = increment(cf.chart2[2].fix(kR2, r2).fix(kMu2, mu));
    inc.dq = increment(cf.chart2_scaled[1].fix(kR2, r2).fix(kMu2, mu2));
    inc.q = &cf.chart2_scaled_c[1];
    return inc;
}

} // namespace

// ---------------------------------------------------------------- straightened field

std::array<double, 3> straightened_field(const SlowFastSystem& sys, const ManifoldResult& res, const StraightenedState& s,
                                         double r2, double mu2)
{
    Vec2 m = eval_manifold(res, s.y2), dm = eval_manifold_derivative(res, s.y2);
    Chart2Point p{r2, m[0] + s.u[0], s.y2, m[1] + s.u[1]};
    auto f = field_chart2(sys, p, r2 * mu2);
    return {f[0] - dm[0] * f[1], f[2] - dm[1] * f[1], f[1]};
}

// ---------------------------------------------------------------- adjoint

AdjointSolution::AdjointSolution(double h, const Tolerances& tol) : h_(h)
{
    if (h < 0) throw std::domain_error("AdjointSolution: h must be >= 0");
    // h-scaled layer orbit from (-1, 0) plus int 2 z2h
    VectorField f = [h](double, const double* s, double* ds) {
        ds[0] = -s[1];
        ds[1] = s[0] + h * s[1] * s[1];
        ds[2] = 2 * h * s[1];
    };
    SectionSpec sec{[](const double* s) { return s[1]; }, -1};
    auto hit = integrate_to_section(f, {-1.0, 0.0, 0.0}, sec, 1e3, tol);
    period_ = hit.t_hit;
    orbit_ = integrate(f, {-1.0, 0.0, 0.0}, {0.0, 1.25 * period_}, tol);
}

double AdjointSolution::integral(double t) const { return orbit_.eval(t)[2]; }

Vec2 AdjointSolution::operator()(double t, double T) const
{
    if (T < 0) T = period_;
    auto s = orbit_.eval(t);
    double e = std::exp(integral(T) - s[2]);
    // -h^-1 e^{...} (z2h', -x2h') with x2h = h s0, z2h = h s1
    return {-e * (s[0] + h_ * s[1] * s[1]), -e * s[1]};
}

std::array<Vec2, 2> AdjointSolution::A(double t) const
{
    return {Vec2{0.0, -1.0}, Vec2{1.0, 2 * h_ * orbit_.eval(t)[1]}};
}

Vec2 adjoint_solution(double h, double t, double T, const Tolerances& tol)
{
    return AdjointSolution(h, tol)(t, T);
}

// ---------------------------------------------------------------- Melnikov

MelnikovValue melnikov(const SlowFastSystem& sys, const ManifoldResult& res, double h, double y2, double r2, double mu2,
                       const MelnikovOptions& opt)
{
    if (h < 0) throw std::domain_error("melnikov: h must be >= 0");
    if (res.r2 != r2 || res.mu2 != mu2) throw std::invalid_argument("melnikov: manifold computed for other parameters");
    Increments inc = make_increments(sys, r2, mu2);
    // state: w (2), y2, Q = int q, phi^ (2), I = int 2 z2h, K (adjoint quadrature)
    VectorField field = [&](double, const double* s, double* ds) {
        double y = s[2];
        Vec2 m = eval_manifold(res, y), dm = eval_manifold_derivative(res, y);
        double a[6] = {m[0], y, m[1], s[0], s[1], h};
        double dq = inc.dq(a);
        double x[5] = {m[0] + h * s[0], y, m[1] + h * s[1], r2, mu2};
        double qv = (*inc.q)(x);
        ds[0] = inc.dfx(a) - dm[0] * r2 * dq;
        ds[1] = inc.dfz(a) - dm[1] * r2 * dq;
        ds[2] = r2 * qv;
        ds[3] = qv;
        double p1 = s[4], p2 = s[5];
        double dp1 = -p2, dp2 = p1 + h * p2 * p2;
        ds[4] = dp1;
        ds[5] = dp2;
        ds[6] = 2 * h * p2;
        // {...}/h along the unperturbed orbit
        double e1 = s[0] - p1, e2 = s[1] - p2;
        double G0 = ds[0] - dp1 + e2;
        double G1 = ds[1] - dp2 - (e1 + 2 * h * p2 * e2);
        ds[7] = -std::exp(-s[6]) * (dp2 * G0 - dp1 * G1);
    };
    SectionSpec sec{[](const double* s) { return s[1]; }, -1};
    IntegrateOptions io;
    double nu = res.series.nu;
    io.escape = [&](const double* s) {
        return std::abs(s[0]) > 1e3 || std::abs(s[1]) > 1e3 || std::abs(s[2] + res.offset) > nu;
    };
    SectionHit hit;
    try {
        hit = integrate_to_section(field, {-1.0, 0.0, y2, 0.0, -1.0, 0.0, 0.0, 0.0}, sec, opt.t_max, opt.tol, io);
    } catch (const std::domain_error& e) {
        throw SolverError(std::string("melnikov: left the manifold chart: ") + e.what());
    }
    const auto& s = hit.state;
    MelnikovValue mv;
    mv.transition_time = hit.t_hit;
    mv.d1_hat = s[0] + 1.0;
    mv.d1 = h * mv.d1_hat;
    mv.d2 = s[3];
    mv.d1_hat_adjoint = s[4] + 1.0 + std::exp(s[6]) * s[7];
    return mv;
}

MelnikovValue delta_hat(const SlowFastSystem& sys, double h, double y2, double r2, double mu2, const MelnikovOptions& opt)
{
    auto res = solve_invariant_series(sys, r2, mu2, opt.manifold);
    return melnikov(sys, res, h, y2, r2, mu2, opt);
}

std::array<Vec2, 2> delta_hat_jacobian(const SlowFastSystem& sys, double h, double y2, double r2, double mu2,
                                       const MelnikovOptions& opt)
{
    const double d = opt.fd_step;
    auto yp = delta_hat(sys, h, y2 + d, r2, mu2, opt), ym = delta_hat(sys, h, y2 - d, r2, mu2, opt);
    auto mp = delta_hat(sys, h, y2, r2, mu2 + d, opt), mm = delta_hat(sys, h, y2, r2, mu2 - d, opt);
    return {Vec2{(yp.d1_hat - ym.d1_hat) / (2 * d), (mp.d1_hat - mm.d1_hat) / (2 * d)},
            Vec2{(yp.d2 - ym.d2) / (2 * d), (mp.d2 - mm.d2) / (2 * d)}};
}

SmallBranchPoint solve_small_branch(const SlowFastSystem& sys, double h, double r2, const MelnikovOptions& opt, Vec2 seed)
{
    if (h < 0 || r2 < 0) throw std::domain_error("solve_small_branch: h and r2 must be >= 0");
    double T = 0.0;
    auto F = [&](const State& x) {
        auto mv = delta_hat(sys, h, x[0], r2, x[1], opt);
        T = mv.transition_time;
        return State{mv.d1_hat, mv.d2};
    };
    NewtonOptions no;
    no.tol = opt.tol.newton_tol;
    no.max_iter = opt.tol.newton_max_iter;
    no.central = true;
    no.fd_step = 1e-6;
    auto r = newton_solve(F, {seed[0], seed[1]}, no);
    F(r.x);
    SmallBranchPoint bp;
    bp.h = h;
    bp.r2 = r2;
    bp.y2_bar = r.x[0];
    bp.mu2_bar = r.x[1];
    bp.residual = r.residual;
    bp.iterations = r.iterations;
    bp.transition_time = T;
    return bp;
}

Vec2 return_map_fixed_point(const SlowFastSystem& sys, double h, double r2, const MelnikovOptions& opt, Vec2 seed,
                            double* transition_time)
{
    if (!(h > 0)) throw std::domain_error("return_map_fixed_point: h must be positive");
    const auto& cf = sys.charts();
    double T = 0.0;
    auto F = [&](const State& x) {
        double y0 = x[0], mu2 = x[1];
        auto res = solve_invariant_series(sys, r2, mu2, opt.manifold);
        // chart-2 coordinates plus Q = int y2'/r2
        VectorField f = [&](double, const double* s, double* ds) {
            double a[5] = {s[0], s[1], s[2], r2, r2 * mu2};
            ds[0] = cf.chart2_c[0](a);
            ds[1] = cf.chart2_c[1](a);
            ds[2] = cf.chart2_c[2](a);
            double b[5] = {s[0], s[1], s[2], r2, mu2};
            ds[3] = cf.chart2_scaled_c[1](b);
        };
        SectionSpec sec{[&](const double* s) { return s[2] - eval_manifold(res, s[1])[1]; }, -1};
        Vec2 m0 = eval_manifold(res, y0);
        SectionHit hit;
        try {
            hit = integrate_to_section(f, {m0[0] - h, y0, m0[1], 0.0}, sec, opt.t_max, opt.tol);
        } catch (const std::domain_error& e) {
            throw SolverError(std::string("return_map_fixed_point: left the manifold chart: ") + e.what());
        }
        T = hit.t_hit;
        Vec2 m1 = eval_manifold(res, hit.state[1]);
        return State{(hit.state[0] - m1[0] + h) / h, hit.state[3]};
    };
    NewtonOptions no;
    no.tol = opt.tol.newton_tol;
    no.max_iter = opt.tol.newton_max_iter;
    no.central = true;
    no.fd_step = 1e-6;
    auto r = newton_solve(F, {seed[0], seed[1]}, no);
    F(r.x);
    if (transition_time) *transition_time = T;
    return {r.x[0], r.x[1]};
}

double hopf_mu(const SlowFastSystem& sys, double r2, const MelnikovOptions& opt)
{
    if (!(r2 > 0)) throw std::domain_error("hopf_mu: r2 must be positive");
    // mu2_H is about -r2, which leaves the default |mu2| bound at r2 = 0.1
    MelnikovOptions o = opt;
    o.manifold.max_mu2 = std::max(o.manifold.max_mu2, 0.25);
    return r2 * solve_small_branch(sys, 0.0, r2, o).mu2_bar;
}

// ---------------------------------------------------------------- eigenvalue cross-check

std::array<double, 3> chart2_equilibrium(const SlowFastSystem& sys, double r2, double mu)
{
    double lambda = sys.lambda();
    double z = -mu / (2 * r2 * lambda);
    auto F = [&](const State& x) {
        auto v = field_chart2(sys, {r2, x[0], x[1], x[2]}, mu);
        return State{v[0], v[1], v[2]};
    };
    NewtonOptions no;
    no.tol = 1e-14;
    no.central = true;
    auto r = newton_solve(F, {-z * z, z, z}, no);
    return {r.x[0], r.x[1], r.x[2]};
}

std::array<std::complex<double>, 3> chart2_eigenvalues(const SlowFastSystem& sys, double r2, double mu)
{
    auto eq = chart2_equilibrium(sys, r2, mu);
    const auto& c2 = sys.charts().chart2;
    double a[5] = {eq[0], eq[1], eq[2], r2, mu};
    Eigen::Matrix3d J;
    const int var[3] = {kX2, kY2, kZ2};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) J(i, j) = c2[i].derivative(var[j]).eval(a);
    Eigen::EigenSolver<Eigen::Matrix3d> es(J);
    std::array<std::complex<double>, 3> ev{es.eigenvalues()(0), es.eigenvalues()(1), es.eigenvalues()(2)};
    // complex pair first (positive imaginary part leading), then the real one
    std::sort(ev.begin(), ev.end(), [](auto x, auto y) { return x.imag() > y.imag(); });
    std::swap(ev[1], ev[2]);
    if (std::abs(ev[2].imag()) > std::abs(ev[1].imag())) std::swap(ev[1], ev[2]);
    return ev;
}

HopfEigenCheck hopf_by_eigenvalues(const SlowFastSystem& sys, double r2, double mu_seed)
{
    auto re = [&](const State& x) { return State{chart2_eigenvalues(sys, r2, x[0])[0].real()}; };
    NewtonOptions no;
    no.tol = 1e-14;
    no.central = true;
    no.fd_step = 1e-7;
    auto r = newton_solve(re, {mu_seed}, no);
    HopfEigenCheck out;
    out.mu = r.x[0];
    out.equilibrium = chart2_equilibrium(sys, r2, out.mu);
    out.eigenvalues = chart2_eigenvalues(sys, r2, out.mu);
    return out;
}

void write_branch_csv(const std::vector<SmallBranchPoint>& pts, std::ostream& os)
{
    io::CsvWriter w(os, {"h", "r2", "y2_bar", "mu2_bar", "mu", "residual"});
    for (const auto& p : pts) w.row({p.h, p.r2, p.y2_bar, p.mu2_bar, p.r2 * p.mu2_bar, p.residual});
}

} // namespace canard
