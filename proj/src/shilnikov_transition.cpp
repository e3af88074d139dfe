#include "canard_lab/shilnikov_transition.hpp"

#include "canard_lab/log.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace canard {

std::string to_string(Side s) { return s == Side::attracting ? "attracting" : "repelling"; }

double lambda_mu(double mu) { return 0.5 * (1.0 - mu); }

// ---------------------------------------------------------------- center manifolds

double CenterManifoldGraph::operator()(double eps1, double r1, double y1) const
{
    double a[5] = {eps1, r1, y1, 0.0, mu};
    return m_c(a);
}

double CenterManifoldGraph::defect(const SlowFastSystem& sys, double eps1, double r1, double y1) const
{
    const auto& c1 = sys.charts().chart1_c;
    double a[5] = {eps1, r1, y1, (*this)(eps1, r1, y1), mu};
    double f[4];
    for (int i = 0; i < 4; ++i) f[i] = c1[i](a);
    double d = f[3];
    for (int k = 0; k < 3; ++k) d -= m.derivative(k).eval(a) * f[k];
    return d;
}

CenterManifoldGraph center_manifold_graph(const SlowFastSystem& sys, Side side, double mu, int degree)
{
    if (degree < 2) throw ConfigError("center_manifold_graph: degree must be >= 2");
    const auto& c1 = sys.charts().chart1;
    std::array<Polynomial, 4> f;
    for (int i = 0; i < 4; ++i) f[i] = c1[i].fix(kMu1, mu);

    CenterManifoldGraph g;
    g.side = side;
    g.mu = mu;
    g.degree = degree;
    g.base = side == Side::attracting ? -1.0 : 1.0;
    const int n = 5;
    Polynomial m = Polynomial::constant(n, g.base);
    // d z1'/d z1 along the base line
    double a[5] = {0, 0, 0, g.base, mu};
    double lin = c1[3].derivative(kZ1).eval(a);
    if (std::abs(lin) < 1e-12) {
        std::ostringstream os;
        os << "center_manifold_graph: base line is not normally hyperbolic (degree 1, monomial z1, side "
           << to_string(side) << ")";
        throw SolverError(os.str());
    }
    // each pass fixes the next degree of the graph
    for (int it = 0; it <= degree + 1; ++it) {
        std::vector<Polynomial> img = {Polynomial::variable(n, kE1), Polynomial::variable(n, kR1), Polynomial::variable(n, kY1),
                                       m, Polynomial::variable(n, kMu1)};
        std::array<Polynomial, 4> F;
        for (int i = 0; i < 4; ++i) F[i] = f[i].substitute(img, degree);
        Polynomial d = F[3];
        for (int k = 0; k < 3; ++k) d -= m.derivative(k).mul_truncated(F[k], degree);
        double big = 0;
        for (const auto& [e, c] : d.terms()) big = std::max(big, std::abs(c));
        if (big < 1e-16) break;
        m -= d * (1.0 / lin);
    }
    g.m = m;
    g.m_c = CompiledPolynomial(m);
    return g;
}

// ---------------------------------------------------------------- normal form

namespace {

// 1/b truncated at the given degree; b must have a nonzero constant term
Polynomial inverse_series(const Polynomial& b, int degree)
{
    Exponent zero{};
    double b0 = b.coeff(zero);
    if (std::abs(b0) < 1e-14) throw SolverError("inverse_series: vanishing constant term");
    Polynomial beta = b * (1.0 / b0) - Polynomial::constant(b.nvars(), 1.0);
    Polynomial acc = Polynomial::constant(b.nvars(), 1.0), term = acc;
    for (int k = 1; k <= degree; ++k) {
        term = term.mul_truncated(beta, degree) * -1.0;
        if (term.is_zero()) break;
        acc += term;
    }
    return acc * (1.0 / b0);
}

bool kept_monomial(int i, int j, int k)
{
    if (i == 0 && j == 0 && k == 1) return true;
    return j >= 1 && (k >= 1 || i >= 1);
}

std::string monomial_name(int i, int j, int k)
{
    std::ostringstream os;
    os << "eps1^" << i << " r1^" << j << " y^" << k;
    return os.str();
}

} // namespace

double NormalForm::to_chart(double eps1, double r1, double y) const
{
    double a[3] = {eps1, r1, y};
    return y_eq + conj.eval(a);
}

double NormalForm::from_chart(double eps1, double r1, double y1) const
{
    Polynomial d = conj.derivative(2);
    double Y = y1 - y_eq, y = Y;
    for (int it = 0; it < 50; ++it) {
        double a[3] = {eps1, r1, y};
        double step = (conj.eval(a) - Y) / d.eval(a);
        y -= step;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(y))) return y;
    }
    throw SolverError("NormalForm::from_chart: Newton did not converge");
}

NormalForm normal_form(const SlowFastSystem& sys, Side side, double mu, int degree)
{
    if (degree < 2) throw ConfigError("normal_form: degree must be >= 2");
    NormalForm nf;
    nf.side = side;
    nf.mu = mu;
    nf.degree = degree;
    nf.graph = center_manifold_graph(sys, side, mu, degree + 1);
    nf.y_eq = side == Side::attracting ? -mu : mu;

    const auto& c1 = sys.charts().chart1;
    const int n = 5;
    // reduced field on the graph, desingularised by eps1 * B with B = eps1' / eps1^2
    Polynomial B = c1[0].fix(kMu1, mu).divide_by_var_power(kE1, 2);
    Polynomial N = c1[2].fix(kMu1, mu).divide_by_var_power(kE1, 1);
    Polynomial E = Polynomial::variable(n, kE1), R = Polynomial::variable(n, kR1);
    Polynomial Y1 = Polynomial::variable(n, kY1) + Polynomial::constant(n, nf.y_eq);
    Polynomial zero(n);
    Polynomial mY = nf.graph.m.substitute({E, R, Y1, zero, zero}, degree);
    std::vector<Polynomial> img = {E, R, Y1, mY, zero};
    Polynomial g5 = N.substitute(img, degree).mul_truncated(inverse_series(B.substitute(img, degree), degree), degree);
    Polynomial g = g5.resized(3);

    Exponent e0{};
    if (std::abs(g.coeff(e0)) > 1e-10) throw SolverError("normal_form: reduced equilibrium is not at y1 = -/+ mu");
    g = g - Polynomial::constant(3, g.coeff(e0));
    nf.raw = g;
    Exponent ey{};
    ey[2] = 1;
    double a = g.coeff(ey);
    nf.lambda = a;

    Polynomial Ev = Polynomial::variable(3, 0), Rv = Polynomial::variable(3, 1), Yv = Polynomial::variable(3, 2);
    Polynomial conj = Yv;
    for (int d = 1; d <= degree; ++d) {
        Polynomial phi(3);
        for (const auto& [ex, c] : g.terms()) {
            int i = ex[0], j = ex[1], k = ex[2];
            if (i + j + k != d || kept_monomial(i, j, k)) continue;
            double div = i - 0.5 * j + (k - 1) * a;
            if (std::abs(div) < 1e-9) {
                std::ostringstream os;
                os << "normal_form: resonant monomial " << monomial_name(i, j, k) << " at degree " << d;
                throw SolverError(os.str());
            }
            phi.add_term(ex, c / div);
        }
        if (phi.is_zero()) continue;
        std::vector<Polynomial> sub = {Ev, Rv, Yv + phi};
        Polynomial rhs = g.substitute(sub, degree) - (Ev * phi.derivative(0) - Rv * phi.derivative(1) * 0.5).truncated(degree);
        g = rhs.mul_truncated(inverse_series(Polynomial::constant(3, 1.0) + phi.derivative(2), degree), degree);
        conj = conj.substitute(sub, degree);
    }
    nf.conj = conj;

    nf.L0 = Polynomial(3);
    nf.L1 = Polynomial(3);
    double scale = 1.0;
    for (const auto& [ex, c] : g.terms()) scale = std::max(scale, std::abs(c));
    for (const auto& [ex, c] : g.terms()) {
        int i = ex[0], j = ex[1], k = ex[2];
        if (i == 0 && j == 0 && k == 1) continue;
        Exponent t{};
        if (i == 0 && j >= 1 && k >= 1) {
            t[1] = j - 1;
            t[2] = k - 1;
            nf.L0.add_term(t, c);
        } else if (i >= 1 && j >= 1) {
            t[0] = i - 1;
            t[1] = j - 1;
            t[2] = k;
            nf.L1.add_term(t, c);
        } else if (std::abs(c) > 1e-10 * scale) {
            std::ostringstream os;
            os << "normal_form: non-normal monomial " << monomial_name(i, j, k) << " survived (" << c << ")";
            throw SolverError(os.str());
        }
    }
    return nf;
}

// ---------------------------------------------------------------- Shilnikov problem

namespace {

struct Cheb {
    int N;                                  // nodes 0..N, x_j = cos(pi j / N)
    std::vector<double> cosmat;             // (N+1) x (N+2): cos(pi j k / N)

    explicit Cheb(int n) : N(n - 1), cosmat(static_cast<std::size_t>(n) * (n + 1))
    {
        for (int j = 0; j <= N; ++j)
            for (int k = 0; k <= N + 1; ++k) cosmat[j * (N + 2) + k] = std::cos(std::numbers::pi * j * k / N);
    }
    double T(int j, int k) const { return cosmat[j * (N + 2) + k]; }

    std::vector<double> coeffs(const std::vector<double>& f) const
    {
        std::vector<double> a(N + 1, 0.0);
        for (int k = 0; k <= N; ++k) {
            double s = 0;
            for (int j = 0; j <= N; ++j) s += (j == 0 || j == N ? 0.5 : 1.0) * f[j] * T(j, k);
            a[k] = 2.0 * s / N;
        }
        a[0] *= 0.5;
        a[N] *= 0.5;
        return a;
    }
    // values at the nodes of int_{x=1}^{x_j} f
    std::vector<double> integral_from_right(const std::vector<double>& a) const
    {
        std::vector<double> b(N + 2, 0.0);
        auto A = [&](int k) { return k <= N ? a[k] : 0.0; };
        b[1] = A(0) - 0.5 * A(2);
        for (int k = 2; k <= N + 1; ++k) b[k] = (A(k - 1) - A(k + 1)) / (2.0 * k);
        std::vector<double> F(N + 1, 0.0);
        for (int j = 0; j <= N; ++j) {
            double s = 0;
            for (int k = 1; k <= N + 1; ++k) s += b[k] * T(j, k);
            F[j] = s;
        }
        double right = F[0];
        for (auto& v : F) v -= right;
        F[0] = 0.0;
        return F;
    }
};

double clenshaw(const std::vector<double>& a, double x)
{
    double b1 = 0, b2 = 0;
    for (int k = static_cast<int>(a.size()) - 1; k >= 1; --k) {
        double b0 = 2 * x * b1 - b2 + a[k];
        b2 = b1;
        b1 = b0;
    }
    return x * b1 - b2 + a[0];
}

std::vector<double> l0_coefficients(const Polynomial& L0)
{
    std::vector<double> l;
    for (const auto& [e, c] : L0.terms()) {
        if (e[0] != 0) throw std::invalid_argument("L0 must not depend on eps1");
        if (e[2] != 0) continue;
        if (static_cast<int>(l.size()) <= e[1]) l.resize(e[1] + 1, 0.0);
        l[e[1]] += c;
    }
    return l;
}

// int_t^inf r1 L0(r1, 0) with r1 = r10 e^{-s/2}
double tail_integral(const std::vector<double>& l0, double r10, double t)
{
    double s = 0;
    for (std::size_t j = 0; j < l0.size(); ++j) {
        double a = 0.5 * (j + 1);
        s += l0[j] * std::pow(r10, j + 1) * std::exp(-a * t) / a;
    }
    return s;
}

} // namespace

double ShilnikovSolution::integral(double s) const
{
    return tail_integral(l0_, bc.r10, bc.tau) - tail_integral(l0_, bc.r10, s);
}

double ShilnikovSolution::u(double s) const
{
    if (cheb_.empty()) return 0.0;
    return clenshaw(cheb_, 2 * s / bc.tau - 1);
}

double ShilnikovSolution::phi(double s) const
{
    double e = std::exp(integral(s));
    return (e - 1) * bc.y11 + e * u(s);
}

double ShilnikovSolution::y(double s) const
{
    return std::exp(lambda * (s - bc.tau) + integral(s)) * (bc.y11 + u(s));
}

double ShilnikovSolution::contraction_ratio() const
{
    double r = 0;
    if (distances.empty()) return 0;
    double floor = 1e-11 * distances.front();
    for (std::size_t i = 1; i < distances.size(); ++i)
        if (distances[i] > floor && distances[i - 1] > 0) r = std::max(r, distances[i] / distances[i - 1]);
    return r;
}

ShilnikovSolution shilnikov_solve(const Polynomial& L0, const Polynomial& L1, const ShilnikovBC& bc, const ShilnikovOptions& opt)
{
    if (!(opt.alpha > 0 && opt.alpha < 0.5)) throw ConfigError("shilnikov_solve: alpha must lie in (0, 1/2)");
    if (!(bc.tau > opt.tau0)) throw std::domain_error("shilnikov_solve: tau must exceed tau0");
    if (!(bc.eps11 > 0) || bc.r10 < 0) throw std::domain_error("shilnikov_solve: need eps11 > 0 and r10 >= 0");
    if (L0.nvars() != 3 || L1.nvars() != 3) throw std::invalid_argument("shilnikov_solve: L0, L1 take (eps1, r1, y)");

    ShilnikovSolution sol;
    sol.bc = bc;
    sol.lambda = std::isnan(bc.lambda) ? lambda_mu(bc.mu) : bc.lambda;
    sol.l0_ = l0_coefficients(L0);
    Polynomial L0bar = (L0 - L0.fix(2, 0.0)).divide_by_var_power(2, 1);
    CompiledPolynomial L0b(L0bar), L1c(L1);

    int n = opt.nodes > 0 ? opt.nodes : 32 + static_cast<int>(std::ceil(8 * bc.tau));
    Cheb ch(n);
    const double tau = bc.tau;
    sol.t.resize(n);
    for (int j = 0; j < n; ++j) sol.t[j] = 0.5 * tau * (1 + std::cos(std::numbers::pi * j / (n - 1)));
    std::vector<double> r1(n), e1(n), E(n);
    for (int j = 0; j < n; ++j) {
        r1[j] = sol.r1(sol.t[j]);
        e1[j] = sol.eps1(sol.t[j]);
        E[j] = std::exp(sol.lambda * (sol.t[j] - tau) + sol.integral(sol.t[j]));
    }
    const double w = std::exp(opt.alpha * tau);
    std::vector<double> u(n, 0.0), g(n);
    int rises = 0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        for (int j = 0; j < n; ++j) {
            double v = bc.y11 + u[j];
            double y = E[j] * v;
            double a[3] = {e1[j], r1[j], y};
            g[j] = r1[j] * L0b(a) * E[j] * v * v + r1[j] * e1[j] * L1c(a) / E[j];
        }
        auto ga = ch.coeffs(g);
        double gmax = 0, tail = 0;
        for (int k = 0; k < n; ++k) gmax = std::max(gmax, std::abs(ga[k]));
        for (int k = n - 3; k < n; ++k) tail = std::max(tail, std::abs(ga[k]));
        if (gmax > 0 && tail > 1e-10 * gmax) throw SolverError("shilnikov_solve: time grid does not resolve the integrand");
        auto F = ch.integral_from_right(ga);
        double dist = 0, unorm = 0;
        for (int j = 0; j < n; ++j) {
            double un = 0.5 * tau * F[j];
            dist = std::max(dist, std::abs(un - u[j]));
            u[j] = un;
            unorm = std::max(unorm, std::abs(un));
        }
        dist *= w;
        unorm *= w;
        if (unorm > opt.delta) throw SolverError("shilnikov_solve: iterate left the ball of radius delta");
        if (!sol.distances.empty() && dist >= sol.distances.back() && dist > 0) {
            if (++rises >= 3) throw SolverError("shilnikov_solve: Picard iteration is not contracting");
        } else {
            rises = 0;
        }
        sol.distances.push_back(dist);
        sol.iterations = it;
        if (dist <= opt.tol || dist <= 8 * std::numeric_limits<double>::epsilon() * unorm) break;
        if (it == opt.max_iter) throw SolverError("shilnikov_solve: no convergence within max_iter");
    }
    sol.u_nodes = u;
    sol.cheb_ = ch.coeffs(u);
    return sol;
}

double phi_infinity(const Polynomial& L0, double t, double eps11, double r10, double y11, double mu)
{
    (void)eps11;
    (void)mu;
    if (!(t > 0)) throw std::domain_error("phi_infinity: t must be positive");
    if (r10 == 0 || y11 == 0) return 0.0;
    return (std::exp(-tail_integral(l0_coefficients(L0), r10, t)) - 1) * y11;
}

nlohmann::json shilnikov_to_json(const ShilnikovSolution& s)
{
    nlohmann::json j;
    j["tau"] = s.bc.tau;
    j["eps11"] = s.bc.eps11;
    j["r10"] = s.bc.r10;
    j["y11"] = s.bc.y11;
    j["mu"] = s.bc.mu;
    j["lambda"] = s.lambda;
    j["iterations"] = s.iterations;
    j["distances"] = s.distances;
    j["contraction_ratio"] = s.contraction_ratio();
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < s.t.size(); ++i)
        pts.push_back({{"t", s.t[i]}, {"u", s.u_nodes[i]}, {"phi", s.phi(s.t[i])}, {"y", s.y(s.t[i])}});
    j["nodes"] = pts;
    return j;
}

// ---------------------------------------------------------------- transition map

TransitionCheck transition_map_check(const NormalForm& nf, const SlowFastSystem& sys, double eps1, double r1,
                                     double y_side, const TransitionOptions& opt)
{
    if (!(eps1 > 0 && eps1 < opt.eps11)) throw std::domain_error("transition_map_check: need 0 < eps1 < eps11");
    if (r1 < 0) throw std::domain_error("transition_map_check: r1 must be >= 0");
    if (std::abs(y_side) > opt.chi * std::pow(eps1 / opt.eps11, nf.lambda))
        throw std::domain_error("transition_map_check: start outside V_1(chi)");

    double y1 = nf.to_chart(eps1, r1, y_side);
    double z1 = nf.graph(eps1, r1, y1) + opt.z_offset;
    // chart-1 field plus the integrated normal rate d(z1 - m)'/dz1 along the orbit
    const auto& c1 = sys.charts().chart1;
    std::array<CompiledPolynomial, 4> fz;
    std::array<CompiledPolynomial, 3> dm;
    for (int i = 0; i < 4; ++i) fz[i] = CompiledPolynomial(c1[i].derivative(kZ1));
    for (int k = 0; k < 3; ++k) dm[k] = CompiledPolynomial(nf.graph.m.derivative(k));
    const auto& cc = sys.charts().chart1_c;
    const double mu = nf.mu;
    VectorField f = [&](double, const double* s, double* ds) {
        double a[5] = {s[0], s[1], s[2], s[3], mu};
        for (int i = 0; i < 4; ++i) ds[i] = cc[i](a);
        double rate = fz[3](a);
        for (int k = 0; k < 3; ++k) rate -= dm[k](a) * fz[k](a);
        ds[4] = rate;
    };
    SectionSpec sec{[e = opt.eps11](const double* s) { return s[0] - e; }, +1};
    IntegrateOptions io;
    io.escape = [](const double* s) { return std::abs(s[3]) > 3 || std::abs(s[2]) > 1 || s[0] < 0; };
    double horizon = 20.0 / eps1 + 100.0;
    double sign = nf.side == Side::attracting ? 1.0 : -1.0;
    SectionHit hit;
    try {
        hit = integrate_to_section(f, {eps1, r1, y1, z1, 0.0}, sec, sign * horizon, opt.tol, io);
    } catch (const SolverError& e) {
        throw SolverError(std::string("transition_map_check: ") + e.what());
    }
    const auto& s = hit.state;
    TransitionCheck tc;
    tc.time = hit.t_hit;
    tc.r1_arrival = s[1];
    tc.r1_expected = std::sqrt(eps1 / opt.eps11) * r1;
    tc.y_arrival = nf.from_chart(opt.eps11, s[1], s[2]);
    tc.leading = std::pow(opt.eps11 / eps1, nf.lambda) * y_side;
    tc.psi = tc.y_arrival - tc.leading;
    tc.z_gap = s[3] - nf.graph(opt.eps11, s[1], s[2]);
    tc.log_contraction = sign * s[4];
    return tc;
}

TransitionCheck transition_map_check(const SlowFastSystem& sys, Side side, double eps1, double r1, double y_side,
                                     double mu, const TransitionOptions& opt)
{
    return transition_map_check(normal_form(sys, side, mu, opt.degree), sys, eps1, r1, y_side, opt);
}

} // namespace canard
