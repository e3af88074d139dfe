#include "canard_lab/slow_manifold.hpp"

#include "canard_lab/log.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace canard {

// ---------------------------------------------------------------- Series

Series::Series(int N, double c0) : c_(N + 1, 0.0) { c_[0] = c0; }

Series Series::from_coeffs(int N, const std::vector<double>& c)
{
    Series s(N);
    for (int n = 0; n <= N && n < static_cast<int>(c.size()); ++n) s.c_[n] = c[n];
    return s;
}

Series Series::operator+(const Series& o) const
{
    Series r = *this;
    for (std::size_t n = 0; n < c_.size(); ++n) r.c_[n] += o.c_[n];
    return r;
}

Series Series::operator-(const Series& o) const
{
    Series r = *this;
    for (std::size_t n = 0; n < c_.size(); ++n) r.c_[n] -= o.c_[n];
    return r;
}

Series Series::operator*(const Series& o) const
{
    const int N = order();
    Series r(N);
    for (int i = 0; i <= N; ++i) {
        if (c_[i] == 0.0) continue;
        for (int j = 0; i + j <= N; ++j) r.c_[i + j] += c_[i] * o.c_[j];
    }
    return r;
}

Series Series::operator*(double s) const
{
    Series r = *this;
    for (double& c : r.c_) c *= s;
    return r;
}

Series Series::derivative() const
{
    const int N = order();
    Series r(N);
    for (int n = 1; n <= N; ++n) r.c_[n - 1] = n * c_[n];
    return r;
}

Series Series::times_var() const
{
    const int N = order();
    Series r(N);
    for (int n = 0; n < N; ++n) r.c_[n + 1] = c_[n];
    return r;
}

double Series::eval(double v) const
{
    double acc = 0.0;
    for (int n = order(); n >= 0; --n) acc = acc * v + c_[n];
    return acc;
}

double Series::eval_derivative(double v) const
{
    double acc = 0.0;
    for (int n = order(); n >= 1; --n) acc = acc * v + n * c_[n];
    return acc;
}

// ---------------------------------------------------------------- VectorPowerSeries

double VectorPowerSeries::norm() const
{
    double acc = 0.0, w = 1.0;
    for (const auto& h : coeffs) {
        acc += std::hypot(h[0], h[1]) * w;
        w *= nu;
    }
    return acc;
}

double VectorPowerSeries::tail_norm() const
{
    const int N = order();
    int from = N - std::max(1, (N + 1) / 10) + 1;
    double acc = 0.0;
    for (int n = from; n <= N; ++n) acc += std::hypot(coeffs[n][0], coeffs[n][1]) * std::pow(nu, n);
    return acc;
}

Vec2 VectorPowerSeries::eval(double v) const
{
    Vec2 acc{0, 0};
    for (int n = order(); n >= 0; --n) {
        acc[0] = acc[0] * v + coeffs[n][0];
        acc[1] = acc[1] * v + coeffs[n][1];
    }
    return acc;
}

Vec2 VectorPowerSeries::eval_derivative(double v) const
{
    Vec2 acc{0, 0};
    for (int n = order(); n >= 1; --n) {
        acc[0] = acc[0] * v + n * coeffs[n][0];
        acc[1] = acc[1] * v + n * coeffs[n][1];
    }
    return acc;
}

Series VectorPowerSeries::component(int i) const
{
    Series s(order());
    for (int n = 0; n <= order(); ++n) s[n] = coeffs[n][i];
    return s;
}

VectorPowerSeries VectorPowerSeries::from_components(const Series& a, const Series& b, double nu)
{
    VectorPowerSeries r;
    r.nu = nu;
    r.coeffs.resize(a.order() + 1);
    for (int n = 0; n <= a.order(); ++n) r.coeffs[n] = {a[n], b[n]};
    return r;
}

// ---------------------------------------------------------------- formal expansion

namespace {

Polynomial drop_r2_above(const Polynomial& p, int k)
{
    Polynomial r(p.nvars());
    for (const auto& [e, c] : p.terms())
        if (e[kR2] <= k) r.add_term(e, c);
    return r;
}

Polynomial r2_coefficient(const Polynomial& p, int k)
{
    Polynomial r(p.nvars());
    for (const auto& [e, c] : p.terms())
        if (e[kR2] == k) {
            Exponent f = e;
            f[kR2] = 0;
            r.add_term(f, c);
        }
    return r;
}

} // namespace

std::vector<std::array<Polynomial, 2>> formal_coefficients(const SlowFastSystem& sys, double mu2, int order)
{
    if (order < 0) throw std::invalid_argument("formal_coefficients: order must be >= 0");
    const auto& cs = sys.charts().chart2_scaled;
    const int nv = 5;
    Polynomial y = Polynomial::variable(nv, kY2), r = Polynomial::variable(nv, kR2);
    Polynomial mu = Polynomial::constant(nv, mu2);
    std::vector<std::array<Polynomial, 2>> h;
    h.push_back({y * y * -1.0, y});
    Polynomial mx = h[0][0], mz = h[0][1];
    for (int n = 1; n <= order; ++n) {
        std::vector<Polynomial> img = {mx, y, mz, r, mu};
        Polynomial f1 = drop_r2_above(cs[0].substitute(img), n).divide_by_var_power(kR2, 1);
        Polynomial f2 = drop_r2_above(cs[2].substitute(img), n).divide_by_var_power(kR2, 1);
        Polynomial q = drop_r2_above(cs[1].substitute(img), n);
        Polynomial R1 = r2_coefficient(q * mx.derivative(kY2) - f1, n - 1);
        Polynomial R2 = r2_coefficient(q * mz.derivative(kY2) - f2, n - 1);
        // inverse of the layer Jacobian [[0,-1],[1,2y2]] along C2
        std::array<Polynomial, 2> hn = {y * R1 * 2.0 + R2, R1 * -1.0};
        h.push_back(hn);
        Polynomial rn = r.pow(n);
        mx += rn * hn[0];
        mz += rn * hn[1];
    }
    return h;
}

double formal_defect(const SlowFastSystem& sys, const std::vector<std::array<Polynomial, 2>>& h, double r2,
                     double mu2, double y2)
{
    const auto& cs = sys.charts().chart2_scaled_c;
    double m[2] = {0, 0}, dm[2] = {0, 0}, rp = 1.0;
    double at[5] = {0, y2, 0, 0, 0};
    for (const auto& hn : h) {
        for (int i = 0; i < 2; ++i) {
            m[i] += rp * hn[i].eval(at);
            dm[i] += rp * hn[i].derivative(kY2).eval(at);
        }
        rp *= r2;
    }
    double v[5] = {m[0], y2, m[1], r2, mu2};
    double q = cs[1](v);
    double d0 = r2 * q * dm[0] - cs[0](v), d1 = r2 * q * dm[1] - cs[2](v);
    return std::hypot(d0, d1);
}

// ---------------------------------------------------------------- T operator

std::array<Vec2, 2> A0_matrix(double mu2, double lambda)
{
    return {Vec2{0.0, -1.0 / lambda}, Vec2{1.0 / lambda, -mu2 / (lambda * lambda)}};
}

namespace {

// (qI - A0)^-1 as a 2x2 matrix
std::array<Vec2, 2> resolvent(double q, double mu2, double lambda)
{
    auto A = A0_matrix(mu2, lambda);
    double a = q - A[0][0], b = -A[0][1], c = -A[1][0], d = q - A[1][1];
    double det = a * d - b * c;
    return {Vec2{d / det, -b / det}, Vec2{-c / det, a / det}};
}

double spectral_norm(const std::array<Vec2, 2>& M)
{
    // largest singular value of a 2x2 matrix
    double a = M[0][0], b = M[0][1], c = M[1][0], d = M[1][1];
    double s1 = a * a + b * b + c * c + d * d;
    double det = a * d - b * c;
    double disc = std::sqrt(std::max(0.0, s1 * s1 - 4 * det * det));
    return std::sqrt(0.5 * (s1 + disc));
}

} // namespace

double T_norm(int k, double r2, double mu2, double lambda)
{
    return spectral_norm(resolvent(r2 * k, mu2, lambda));
}

double calibrate_T_constant(double mu2, double lambda)
{
    double best = 0.0;
    for (int sgn : {-1, 1})
        for (int i = 0; i <= 4000; ++i) {
            double q = sgn * (std::pow(10.0, -4.0 + 8.0 * i / 4000.0));
            best = std::max(best, spectral_norm(resolvent(q, mu2, lambda)) * (std::abs(q) + 1));
        }
    best = std::max(best, spectral_norm(resolvent(0.0, mu2, lambda)));
    return best;
}

VectorPowerSeries apply_T(const VectorPowerSeries& F, double r2, double mu2, double lambda)
{
    if (r2 < 0) throw std::domain_error("apply_T: r2 must be >= 0");
    VectorPowerSeries out = F;
    for (int n = 0; n <= F.order(); ++n) {
        auto M = resolvent(r2 * n, mu2, lambda);
        const auto& f = F.coeffs[n];
        out.coeffs[n] = {M[0][0] * f[0] + M[0][1] * f[1], M[1][0] * f[0] + M[1][1] * f[1]};
    }
    return out;
}

// ---------------------------------------------------------------- fixed point

namespace {

struct ScaledTerms {
    // f(h0 + r2 W)/r2 and q(h0 + r2 W), slots (W1, y2, W2, r2, mu2)
    std::array<Polynomial, 2> P;
    Polynomial Q;
};

ScaledTerms scaled_terms(const SlowFastSystem& sys, double r2, double mu2)
{
    const auto& cs = sys.charts().chart2_scaled;
    const int nv = 5;
    Polynomial w1 = Polynomial::variable(nv, 0), y = Polynomial::variable(nv, kY2), w2 = Polynomial::variable(nv, 2);
    Polynomial r = Polynomial::variable(nv, kR2), mu = Polynomial::variable(nv, kMu2);
    std::vector<Polynomial> img = {y * y * -1.0 + r * w1, y, y + r * w2, r, mu};
    ScaledTerms t;
    t.P[0] = cs[0].substitute(img).divide_by_var_power(kR2, 1).fix(kR2, r2).fix(kMu2, mu2);
    t.P[1] = cs[2].substitute(img).divide_by_var_power(kR2, 1).fix(kR2, r2).fix(kMu2, mu2);
    t.Q = cs[1].substitute(img).fix(kR2, r2).fix(kMu2, mu2);
    return t;
}

// scaled invariance defect [q m' - f(m)/r2] / lambda as series in v
std::array<Series, 2> defect_series(const ScaledTerms& t, const ManifoldResult& res, const VectorPowerSeries& u)
{
    const int N = u.order();
    Series y(N, -res.offset);
    y[1] = 1.0;
    Series one(N, 1.0);
    std::vector<Series> ys = {one, y, one, one, one};
    Series W1 = res.h1[0].eval_generic(ys, one) + u.component(0);
    Series W2 = res.h1[1].eval_generic(ys, one) + u.component(1);
    std::vector<Series> args = {W1, y, W2, one, one};
    Series q = t.Q.eval_generic(args, one);
    Series P1 = t.P[0].eval_generic(args, one);
    Series P2 = t.P[1].eval_generic(args, one);
    Series dm1 = y * -2.0 + W1.derivative() * res.r2;
    Series dm2 = one + W2.derivative() * res.r2;
    double il = 1.0 / res.lambda;
    return {(q * dm1 - P1) * il, (q * dm2 - P2) * il};
}

double distance(const VectorPowerSeries& a, const VectorPowerSeries& b)
{
    VectorPowerSeries d = a;
    for (std::size_t n = 0; n < d.coeffs.size(); ++n) {
        d.coeffs[n][0] -= b.coeffs[n][0];
        d.coeffs[n][1] -= b.coeffs[n][1];
    }
    return d.norm();
}

} // namespace

std::vector<double> default_grid(double nu, int n)
{
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = -nu + 2 * nu * i / (n - 1);
    return g;
}

ManifoldResult solve_invariant_series(const SlowFastSystem& sys, double r2, double mu2, const ManifoldConfig& cfg,
                                      const VectorPowerSeries* initial)
{
    if (!(cfg.nu > 0) || cfg.N < 1 || cfg.max_iter < 1 || !(cfg.fp_tol > 0))
        throw ConfigError("slow manifold: nu, N, max_iter, fp_tol must be positive");
    if (r2 < 0 || r2 > cfg.max_r2) throw std::domain_error("slow manifold: r2 outside [0, max_r2]");
    if (std::abs(mu2) > cfg.max_mu2) throw std::domain_error("slow manifold: |mu2| above max_mu2");
    double lambda = lambda_of(sys);
    if (lambda == 0.0) throw ConfigError("slow manifold: lambda = 0");

    ManifoldResult res;
    res.sys = &sys;
    res.r2 = r2;
    res.mu2 = mu2;
    res.lambda = lambda;
    res.offset = mu2 / (2 * lambda);
    auto h = formal_coefficients(sys, mu2, 1);
    res.h1 = h[1];
    for (int i = 0; i < 2; ++i) {
        res.h1_c[i] = CompiledPolynomial(res.h1[i]);
        res.dh1_c[i] = CompiledPolynomial(res.h1[i].derivative(kY2));
    }
    res.series.nu = cfg.nu;
    res.series.coeffs.assign(cfg.N + 1, Vec2{0, 0});
    if (r2 == 0.0) return res;

    ScaledTerms t = scaled_terms(sys, r2, mu2);
    auto A = A0_matrix(mu2, lambda);
    VectorPowerSeries u = res.series;
    if (initial) {
        if (initial->order() != cfg.N) throw ConfigError("slow manifold: initial series has the wrong order");
        u = *initial;
        u.nu = cfg.nu;
    }
    int rising = 0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        auto D = defect_series(t, res, u);
        // E = r2 v u' - A0 u - defect
        Series u1 = u.component(0), u2 = u.component(1);
        Series vd1 = u1.derivative().times_var() * r2, vd2 = u2.derivative().times_var() * r2;
        Series E1 = vd1 - (u1 * A[0][0] + u2 * A[0][1]) - D[0];
        Series E2 = vd2 - (u1 * A[1][0] + u2 * A[1][1]) - D[1];
        VectorPowerSeries next = apply_T(VectorPowerSeries::from_components(E1, E2, cfg.nu), r2, mu2, lambda);
        double d = distance(next, u);
        res.distances.push_back(d);
        u = std::move(next);
        res.iterations = it;
        if (u.norm() > cfg.sigma) throw SolverError("slow manifold: iterate left the sigma-ball (parameters outside the contraction regime)");
        if (d <= cfg.fp_tol) break;
        std::size_t k = res.distances.size();
        if (k >= 2 && d > res.distances[k - 2] && d > 100 * cfg.fp_tol) {
            if (++rising >= 3) throw SolverError("slow manifold: iteration is not contracting");
        } else {
            rising = 0;
        }
        if (it == cfg.max_iter) throw SolverError("slow manifold: no convergence within max_iter");
    }
    res.series = u;
    if (u.tail_norm() > 1e-6 * std::max(1.0, u.norm())) log::warn("slow manifold: truncation tail is large; increase N or decrease nu");
    res.residual = invariance_residual(res, default_grid(cfg.nu));
    return res;
}

namespace {

double recentred(const ManifoldResult& res, double y2)
{
    double v = y2 + res.offset;
    if (std::abs(v) > res.series.nu * (1 + 1e-12)) throw std::domain_error("eval_manifold: |v| exceeds the radius nu");
    return v;
}

} // namespace

Vec2 eval_manifold(const ManifoldResult& res, double y2)
{
    double v = recentred(res, y2);
    double at[5] = {0, y2, 0, 0, 0};
    Vec2 out{-y2 * y2, y2};
    if (res.r2 == 0.0) return out;
    Vec2 u = res.series.eval(v);
    for (int i = 0; i < 2; ++i) out[i] += res.r2 * (res.h1_c[i](at) + u[i]);
    return out;
}

Vec2 eval_manifold_derivative(const ManifoldResult& res, double y2)
{
    double v = recentred(res, y2);
    double at[5] = {0, y2, 0, 0, 0};
    Vec2 out{-2 * y2, 1.0};
    if (res.r2 == 0.0) return out;
    Vec2 du = res.series.eval_derivative(v);
    for (int i = 0; i < 2; ++i) out[i] += res.r2 * (res.dh1_c[i](at) + du[i]);
    return out;
}

double invariance_residual(const ManifoldResult& res, const std::vector<double>& v_grid)
{
    if (res.r2 == 0.0) return 0.0;
    const auto& cs = res.sys->charts().chart2_scaled_c;
    double worst = 0.0;
    for (double v : v_grid) {
        double y2 = v - res.offset;
        Vec2 m = eval_manifold(res, y2), dm = eval_manifold_derivative(res, y2);
        double at[5] = {m[0], y2, m[1], res.r2, res.mu2};
        double q = cs[1](at);
        double d0 = res.r2 * q * dm[0] - cs[0](at), d1 = res.r2 * q * dm[1] - cs[2](at);
        worst = std::max(worst, std::hypot(d0, d1) / std::abs(res.lambda * res.r2));
    }
    return worst;
}

nlohmann::json manifold_to_json(const ManifoldResult& res)
{
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& c : res.series.coeffs) coeffs.push_back({c[0], c[1]});
    std::vector<std::string> names = {"w1", "y2", "w2", "r2", "mu2"};
    return {{"r2", res.r2},
            {"mu2", res.mu2},
            {"lambda", res.lambda},
            {"nu", res.series.nu},
            {"N", res.series.order()},
            {"offset", res.offset},
            {"h1", {res.h1[0].to_string(names), res.h1[1].to_string(names)}},
            {"coefficients", coeffs},
            {"norm", res.series.norm()},
            {"tail_norm", res.series.tail_norm()},
            {"iterations", res.iterations},
            {"distances", res.distances},
            {"residual", res.residual}};
}

} // namespace canard
