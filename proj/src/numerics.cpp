#include "canard_lab/numerics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace canard {

void Tolerances::validate() const
{
    if (!(abs_tol > 0 && rel_tol > 0 && newton_tol > 0 && event_tol > 0) || newton_max_iter < 1)
        throw ConfigError("tolerances must be strictly positive and newton_max_iter >= 1");
}

double norm2(const State& v)
{
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm_inf(const State& v)
{
    double s = 0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

// ---------------------------------------------------------------- Trajectory

void Trajectory::push_start(double t, const State& x)
{
    times_.assign(1, t);
    states_.assign(1, x);
    cont_.clear();
}

void Trajectory::push_step(double t1, const State& x1, std::vector<double> cont)
{
    times_.push_back(t1);
    states_.push_back(x1);
    cont_.push_back(std::move(cont));
}

std::size_t Trajectory::segment(double t) const
{
    bool fwd = times_.back() >= times_.front();
    auto cmp = [fwd](double a, double b) { return fwd ? a < b : a > b; };
    auto it = std::upper_bound(times_.begin(), times_.end(), t, cmp);
    std::size_t i = static_cast<std::size_t>(it - times_.begin());
    if (i == 0) return 0;
    return std::min(i - 1, times_.size() - 2);
}

static State eval_cont(const std::vector<double>& c, int n, double theta)
{
    State y(n);
    double t1 = 1.0 - theta;
    for (int i = 0; i < n; ++i)
        y[i] = c[i] + theta * (c[n + i] + t1 * (c[2 * n + i] + theta * (c[3 * n + i] + t1 * c[4 * n + i])));
    return y;
}

State Trajectory::eval(double t) const
{
    if (times_.size() == 1) return states_[0];
    if (cont_.size() + 1 != times_.size()) throw SolverError("trajectory has no dense output");
    std::size_t i = segment(t);
    double h = times_[i + 1] - times_[i];
    return eval_cont(cont_[i], dim_, (t - times_[i]) / h);
}

void Trajectory::truncate_at(double t)
{
    if (times_.size() < 2) return;
    std::size_t i = segment(t);
    State x = eval(t);
    double h = times_[i + 1] - times_[i];
    double theta = (t - times_[i]) / h;
    // re-express the cut segment on [t_i, t]; keep the polynomial by rescaling is awkward,
    // so keep the original coefficients and store the cut time with a rescaled copy
    std::vector<double> c = cont_[i];
    times_.resize(i + 1);
    states_.resize(i + 1);
    cont_.resize(i);
    if (theta > 0) {
        // resample: build a 5th-degree interpolant through the old one on [0, theta]
        // by storing a polynomial in the same Hermite-like basis via collocation
        const int n = dim_;
        std::vector<double> nc(5 * n);
        // basis functions of the continuous extension at s in [0,1]
        auto basis = [](double s, double* b) {
            double u = 1.0 - s;
            b[0] = 1.0;
            b[1] = s;
            b[2] = s * u;
            b[3] = s * u * s;
            b[4] = s * u * s * u;
        };
        double nodes[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
        Eigen::Matrix<double, 5, 5> M;
        for (int r = 0; r < 5; ++r) {
            double b[5];
            basis(nodes[r], b);
            for (int k = 0; k < 5; ++k) M(r, k) = b[k];
        }
        Eigen::PartialPivLU<Eigen::Matrix<double, 5, 5>> lu(M);
        for (int comp = 0; comp < n; ++comp) {
            Eigen::Matrix<double, 5, 1> rhs;
            for (int r = 0; r < 5; ++r) rhs(r) = eval_cont(c, n, nodes[r] * theta)[comp];
            Eigen::Matrix<double, 5, 1> sol = lu.solve(rhs);
            for (int k = 0; k < 5; ++k) nc[k * n + comp] = sol(k);
        }
        push_step(t, x, std::move(nc));
    }
}

// ---------------------------------------------------------------- DOPRI5

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Stepper {
    const VectorField& f;
    int n;
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, tmp, y1, err;

    Stepper(const VectorField& f_, int n_)
        : f(f_), n(n_), k1(n_), k2(n_), k3(n_), k4(n_), k5(n_), k6(n_), k7(n_), tmp(n_), y1(n_), err(n_)
    {
    }

    void check_finite(const std::vector<double>& v) const
    {
        for (double x : v)
            if (!std::isfinite(x)) throw SolverError("field evaluation produced a non-finite value");
    }

    // k1 must hold f(t,y) on entry; on exit k7 holds f(t+h, y1) (FSAL)
    double step(double t, const State& y, double h, const Tolerances& tol)
    {
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, tmp.data(), k2.data());
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, tmp.data(), k3.data());
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, tmp.data(), k4.data());
        for (int i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, tmp.data(), k5.data());
        for (int i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f(t + h, tmp.data(), k6.data());
        for (int i = 0; i < n; ++i)
            y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        f(t + h, y1.data(), k7.data());
        double s = 0;
        for (int i = 0; i < n; ++i) {
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            double sc = tol.abs_tol + tol.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
            s += (err[i] / sc) * (err[i] / sc);
        }
        double e = std::sqrt(s / n);
        if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
        return e;
    }

    std::vector<double> dense(const State& y, double h) const
    {
        std::vector<double> c(5 * n);
        for (int i = 0; i < n; ++i) {
            double ydiff = y1[i] - y[i];
            double bspl = h * k1[i] - ydiff;
            c[i] = y[i];
            c[n + i] = ydiff;
            c[2 * n + i] = bspl;
            c[3 * n + i] = ydiff - h * k7[i] - bspl;
            c[4 * n + i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        return c;
    }
};

double initial_step(const VectorField& f, double t, const State& y, const std::vector<double>& f0, double dir,
                    const Tolerances& tol)
{
    int n = static_cast<int>(y.size());
    double dnf = 0, dny = 0;
    for (int i = 0; i < n; ++i) {
        double sk = tol.abs_tol + tol.rel_tol * std::abs(y[i]);
        dnf += (f0[i] / sk) * (f0[i] / sk);
        dny += (y[i] / sk) * (y[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    State y1(n);
    std::vector<double> f1(n);
    for (int i = 0; i < n; ++i) y1[i] = y[i] + dir * h * f0[i];
    f(t + dir * h, y1.data(), f1.data());
    double der2 = 0;
    for (int i = 0; i < n; ++i) {
        double sk = tol.abs_tol + tol.rel_tol * std::abs(y[i]);
        der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min(100 * h, h1);
}

struct EventLocator {
    const SectionSpec* sec;
    double g_prev = 0.0;
    bool crossed(double g_new) const
    {
        if (sec->direction > 0) return g_prev < 0 && g_new >= 0;
        if (sec->direction < 0) return g_prev > 0 && g_new <= 0;
        return (g_prev < 0 && g_new >= 0) || (g_prev > 0 && g_new <= 0);
    }
};

// Illinois-modified regula falsi on the dense output of one step
double locate(const std::function<double(double)>& g, double ta, double tb, double ga, double gb, double event_tol)
{
    int side = 0;
    double tc = tb, gc = gb;
    for (int it = 0; it < 200; ++it) {
        if (gb == ga) tc = 0.5 * (ta + tb);
        else tc = (ta * gb - tb * ga) / (gb - ga);
        if (!(std::min(ta, tb) <= tc && tc <= std::max(ta, tb))) tc = 0.5 * (ta + tb);
        gc = g(tc);
        if (std::abs(gc) <= event_tol * 0.5 || std::abs(tb - ta) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(tc)))
            return tc;
        if ((gc > 0) == (gb > 0)) {
            tb = tc;
            gb = gc;
            if (side == -1) ga *= 0.5;
            side = -1;
        } else {
            ta = tc;
            ga = gc;
            if (side == 1) gb *= 0.5;
            side = 1;
        }
    }
    return tc;
}

struct RunResult {
    Trajectory traj;
    bool hit = false;
    double t_hit = 0.0;
};

RunResult run(const VectorField& f, const State& x0, double t0, double t1, const Tolerances& tol,
              const IntegrateOptions& opt, const SectionSpec* sec)
{
    const int n = static_cast<int>(x0.size());
    if (t1 == t0) throw SolverError("integrate: empty time span");
    const double dir = t1 > t0 ? 1.0 : -1.0;
    Stepper st(f, n);
    RunResult out{Trajectory(n)};
    out.traj.push_start(t0, x0);
    State y = x0;
    double t = t0;
    f(t, y.data(), st.k1.data());
    st.check_finite(st.k1);
    double h = opt.h0 > 0 ? opt.h0 : initial_step(f, t, y, st.k1, dir, tol);
    double hmax = opt.h_max > 0 ? opt.h_max : std::abs(t1 - t0);
    h = std::min(h, hmax);
    EventLocator ev{sec};
    if (sec) ev.g_prev = sec->g(y.data());
    double err_prev = 1e-4;
    long steps = 0;
    bool last_rejected = false;
    while (dir * (t1 - t) > 0) {
        if (++steps > tol.max_steps) throw SolverError("integrate: maximum step count exceeded");
        if (h < 1e-14 * std::max(1.0, std::abs(t))) throw SolverError("integrate: step size underflow");
        bool final_step = false;
        if (dir * (t + dir * h - t1) >= 0) {
            h = std::abs(t1 - t);
            final_step = true;
        }
        double hs = dir * h;
        double e = st.step(t, y, hs, tol);
        if (e > 1.0) {
            double fac = std::max(0.2, 0.9 * std::pow(e, -0.2));
            h *= fac;
            last_rejected = true;
            continue;
        }
        // PI controller
        double fac = 0.9 * std::pow(std::max(e, 1e-10), -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
        fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
        err_prev = std::max(e, 1e-4);
        last_rejected = false;
        st.check_finite(st.y1);
        std::vector<double> cont = st.dense(y, hs);
        double tn = final_step ? t1 : t + hs;
        State yn(st.y1.begin(), st.y1.end());
        out.traj.push_step(tn, yn, std::move(cont));
        if (sec) {
            double gn = sec->g(yn.data());
            if (std::abs(tn - t0) > opt.t_ignore && ev.crossed(gn)) {
                const Trajectory& tr = out.traj;
                auto gfun = [&](double tt) { State s = tr.eval(tt); return sec->g(s.data()); };
                double ts = locate(gfun, t, tn, ev.g_prev, gn, tol.event_tol);
                double dt = 1e-7 * std::abs(hs);
                double slope = (gfun(ts + dir * dt * 0.5) - gfun(ts - dir * dt * 0.5)) / dt;
                if (std::abs(slope) < 1e-14) throw SolverError("integrate_to_section: tangential crossing");
                out.traj.truncate_at(ts);
                out.hit = true;
                out.t_hit = ts;
                return out;
            }
            ev.g_prev = gn;
        }
        if (opt.escape && opt.escape(yn.data())) throw SolverError("integrate: trajectory left the admissible region");
        t = tn;
        y = std::move(yn);
        std::swap(st.k1, st.k7);
        h = std::min(h * fac, hmax);
    }
    return out;
}

} // namespace

Trajectory integrate(const VectorField& f, const State& x0, std::array<double, 2> t_span, const Tolerances& tol,
                     const IntegrateOptions& opt)
{
    return run(f, x0, t_span[0], t_span[1], tol, opt, nullptr).traj;
}

SectionHit integrate_to_section(const VectorField& f, const State& x0, const SectionSpec& section, double t_max,
                                const Tolerances& tol, const IntegrateOptions& opt)
{
    RunResult r = run(f, x0, 0.0, t_max, tol, opt, &section);
    if (!r.hit) throw SolverError("integrate_to_section: no crossing within horizon");
    SectionHit hit;
    hit.state = r.traj.back();
    hit.t_hit = r.t_hit;
    hit.path = std::move(r.traj);
    return hit;
}

// ---------------------------------------------------------------- Newton

std::vector<State> fd_jacobian(const VectorMap& f, const State& x, const State& fx, double step, bool central)
{
    const std::size_t n = x.size(), m = fx.size();
    std::vector<State> J(m, State(n));
    for (std::size_t j = 0; j < n; ++j) {
        double hj = step > 0 ? step : std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(x[j]));
        State xp = x;
        xp[j] += hj;
        State fp = f(xp);
        if (central) {
            State xm = x;
            xm[j] -= hj;
            State fm = f(xm);
            for (std::size_t i = 0; i < m; ++i) J[i][j] = (fp[i] - fm[i]) / (2 * hj);
        } else {
            for (std::size_t i = 0; i < m; ++i) J[i][j] = (fp[i] - fx[i]) / hj;
        }
    }
    return J;
}

NewtonResult newton_solve(const VectorMap& f, const State& x0, const NewtonOptions& opt)
{
    NewtonResult res;
    res.x = x0;
    State fx = f(res.x);
    res.residual = norm_inf(fx);
    const int n = static_cast<int>(x0.size());
    for (int it = 0; it < opt.max_iter; ++it) {
        if (res.residual <= opt.tol) return res;
        std::vector<State> J = opt.jacobian ? opt.jacobian(res.x) : fd_jacobian(f, res.x, fx, opt.fd_step, opt.central);
        Eigen::MatrixXd A(n, n);
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i) {
            b(i) = -fx[i];
            for (int j = 0; j < n; ++j) A(i, j) = J[i][j];
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        double cond = sv(n - 1) > 0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
        res.cond = cond;
        res.jacobian = J;
        if (!(cond < opt.max_cond)) throw SolverError("newton_solve: singular Jacobian (condition " + std::to_string(cond) + ")");
        Eigen::VectorXd dx = svd.solve(b);
        double lam = 1.0;
        State xn(n);
        State fn;
        for (int ls = 0; ls < (opt.line_search ? 12 : 1); ++ls) {
            for (int i = 0; i < n; ++i) xn[i] = res.x[i] + lam * dx(i);
            if (!opt.line_search) {
                fn = f(xn);
                break;
            }
            // a trial point outside the domain of f counts as a rejected step
            try {
                fn = f(xn);
            } catch (const SolverError&) {
                if (ls == 11) throw;
                lam *= 0.5;
                continue;
            } catch (const std::domain_error&) {
                if (ls == 11) throw;
                lam *= 0.5;
                continue;
            }
            if (norm_inf(fn) < res.residual || ls == 11) break;
            lam *= 0.5;
        }
        res.x = xn;
        fx = fn;
        res.residual = norm_inf(fx);
        res.iterations = it + 1;
    }
    if (res.residual <= opt.tol) return res;
    throw SolverError("newton_solve: maximum iterations exceeded (residual " + std::to_string(res.residual) + ")");
}

} // namespace canard
