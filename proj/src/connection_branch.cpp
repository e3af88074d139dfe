#include "canard_lab/connection_branch.hpp"

#include "canard_lab/io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace canard {

namespace {

double dist(const Point3& a, const Point3& b)
{
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

Point3 ambient(const std::pair<AmbientState, double>& p) { return {p.first.x, p.first.y, p.first.z}; }

Point3 from_chart1(const State& s) { return ambient(blow_down_chart1({s[0], s[1], s[2], s[3]})); }

Point3 from_chart2(double r2, const State& s) { return ambient(blow_down_chart2({r2, s[0], s[1], s[2]})); }

// dense samples of a trajectory in traversal order, mapped to ambient coordinates
template <class Map>
void append_dense(std::vector<Point3>& out, const Trajectory& tr, bool reversed, int n, Map map)
{
    if (tr.size() == 0) return;
    double t0 = tr.t_begin(), t1 = tr.t_end();
    if (reversed) std::swap(t0, t1);
    for (int i = 0; i <= n; ++i) out.push_back(map(tr.eval(t0 + (t1 - t0) * i / n)));
}

std::vector<Point3> resample_arclength(const std::vector<Point3>& poly, int n)
{
    std::vector<double> s(poly.size(), 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i) s[i] = s[i - 1] + dist(poly[i - 1], poly[i]);
    std::vector<Point3> out;
    out.reserve(n + 1);
    std::size_t j = 1;
    for (int k = 0; k <= n; ++k) {
        double target = s.back() * k / n;
        while (j + 1 < s.size() && s[j] < target) ++j;
        double len = s[j] - s[j - 1];
        double w = len > 0 ? (target - s[j - 1]) / len : 0.0;
        w = std::clamp(w, 0.0, 1.0);
        const auto &a = poly[j - 1], &b = poly[j];
        out.push_back({a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2])});
    }
    return out;
}

double point_segment(const Point3& p, const Point3& a, const Point3& b)
{
    double d[3], v[3], L = 0, t = 0;
    for (int k = 0; k < 3; ++k) {
        d[k] = b[k] - a[k];
        v[k] = p[k] - a[k];
        L += d[k] * d[k];
        t += d[k] * v[k];
    }
    t = L > 0 ? std::clamp(t / L, 0.0, 1.0) : 0.0;
    double s = 0;
    for (int k = 0; k < 3; ++k) s += (v[k] - t * d[k]) * (v[k] - t * d[k]);
    return std::sqrt(s);
}

double directed_hausdorff(const std::vector<Point3>& a, const std::vector<Point3>& b)
{
    double worst = 0;
    for (const auto& p : a) {
        double best = b.size() == 1 ? dist(p, b[0]) : std::numeric_limits<double>::infinity();
        for (std::size_t j = 1; j < b.size(); ++j) best = std::min(best, point_segment(p, b[j - 1], b[j]));
        worst = std::max(worst, best);
    }
    return worst;
}

// strong half-branches of the reduced flow leaving the folded singularity, stopped on x = -h^2
struct StrongBranches {
    Trajectory half[2]{Trajectory(2), Trajectory(2)};   // attracting (z < 0), repelling (z > 0); state (y, z)
    State end[2];
};

StrongBranches strong_branches(const SlowFastSystem& sys, double h, double mu, const Tolerances& tol)
{
    if (!(h > 0)) throw std::domain_error("strong canard: h must be positive");
    auto J = folded_jacobian(sys, mu);
    Eigen::Matrix2d A;
    A << J[0][0], J[0][1], J[1][0], J[1][1];
    Eigen::EigenSolver<Eigen::Matrix2d> es(A);
    auto ev = es.eigenvalues();
    if (std::abs(ev(0).imag()) > 0 || std::abs(ev(1).imag()) > 0)
        throw SolverError("strong canard: folded singularity is a focus");
    int k = std::abs(ev(0).real()) > std::abs(ev(1).real()) ? 0 : 1;
    double lam = ev(k).real();
    Eigen::Vector2d v = es.eigenvectors().col(k).real().normalized();
    if (std::abs(v(1)) < 1e-8) throw SolverError("strong canard: strong direction tangent to the fold");

    VectorField f = [&](double, const double* s, double* ds) {
        auto r = eval_reduced_field(sys, s[0], s[1], mu);
        ds[0] = r[0];
        ds[1] = r[1];
    };
    SectionSpec sec{[&](const double* s) { return critical_manifold_x(sys, s[0], s[1], mu) + h * h; }, -1};
    IntegrateOptions o;
    o.escape = [h](const double* s) { return std::abs(s[1]) > 2 * h + 0.5 || std::abs(s[0]) > 2.0; };
    Tolerances t = tol;
    t.abs_tol = std::min(tol.abs_tol, 1e-13);
    StrongBranches out;
    const double delta = 1e-7;
    for (int side = 0; side < 2; ++side) {
        double sgn = (side == 0 ? -1.0 : 1.0) * (v(1) > 0 ? 1.0 : -1.0);
        State x0{sgn * delta * v(0), sgn * delta * v(1)};
        // away from the singularity along the strong direction
        double horizon = (lam < 0 ? -1.0 : 1.0) * 200.0 / std::abs(lam);
        auto hit = integrate_to_section(f, x0, sec, horizon, t, o);
        out.half[side] = std::move(hit.path);
        out.end[side] = hit.state;
    }
    return out;
}

VectorField ambient_field(const SlowFastSystem& sys, double eps, double mu)
{
    return [&sys, eps, mu](double, const double* s, double* ds) {
        auto v = eval_fast_field(sys, {s[0], s[1], s[2]}, {eps, mu});
        ds[0] = v[0];
        ds[1] = v[1];
        ds[2] = v[2];
    };
}

} // namespace

// ---------------------------------------------------------------- separation

SeparationValue separation(const SlowFastSystem& sys, Side side, double eps1, double r1, double y1, double mu,
                           const ConnectionOptions& opt)
{
    if (!(eps1 > 0 && eps1 <= opt.eps11)) throw std::domain_error("separation: eps1 must lie in (0, eps11]");
    if (!(r1 >= 0)) throw std::domain_error("separation: r1 must be non-negative");
    const double dir = side == Side::attracting ? 1.0 : -1.0;
    SeparationValue out;
    out.side = side;
    out.mu = mu;

    State s{eps1, r1, y1, 0.0};
    if (eps1 < opt.eps11) {
        const double e11 = opt.eps11;
        SectionSpec sec{[e11](const double* x) { return x[0] - e11; }, +1};
        IntegrateOptions o;
        o.escape = [](const double* x) { return std::abs(x[3]) > 3 || std::abs(x[2]) > 2 || x[0] < 0; };
        try {
            auto hit = integrate_to_section(chart1_vector_field(sys, mu), s, sec, dir * (40.0 / eps1 + 100.0), opt.tol, o);
            s = hit.state;
            out.chart1_leg = std::move(hit.path);
        } catch (const std::exception& e) {
            throw SolverError("separation (" + to_string(side) + "): chart-1 leg did not reach eps1 = eps11: " + e.what());
        }
    }

    Chart2Point p = chart1_to_chart2({s[0], s[1], s[2], s[3]});
    out.r2 = p.r2;
    SectionSpec sec2{[](const double* x) { return x[2]; }, side == Side::attracting ? +1 : -1};
    IntegrateOptions o2;
    o2.escape = [](const double* x) { return std::abs(x[0]) > 50 || std::abs(x[2]) > 50 || std::abs(x[1]) > 5; };
    try {
        auto hit = integrate_to_section(chart2_vector_field(sys, p.r2, mu), {p.x2, p.y2, p.z2}, sec2, dir * opt.t2_max,
                                        opt.tol, o2);
        out.landing = {hit.state[0], hit.state[1]};
        out.chart2_leg = std::move(hit.path);
    } catch (const std::exception& e) {
        throw SolverError("separation (" + to_string(side) + "): chart-2 leg did not reach z2 = 0: " + e.what());
    }
    if (std::hypot(out.landing[0] - 0.5, out.landing[1]) > opt.window) {
        std::ostringstream m;
        m << "separation (" << to_string(side) << "): landing (" << out.landing[0] << ", " << out.landing[1]
          << ") outside the window around (1/2, 0)";
        throw SolverError(m.str());
    }
    return out;
}

double centering_mismatch(const SlowFastSystem& sys, double eps1, double r1, double mu, const ConnectionOptions& opt)
{
    auto a = normal_form(sys, Side::attracting, mu, opt.degree);
    auto r = normal_form(sys, Side::repelling, mu, opt.degree);
    return a.to_chart(eps1, r1, 0.0) - r.to_chart(eps1, r1, 0.0);
}

double mu0_predictor(const SlowFastSystem& sys, double eps1, double r1, const ConnectionOptions& opt)
{
    double mu = 0.0;
    const double d = 1e-6;
    for (int it = 0; it < opt.tol.newton_max_iter; ++it) {
        double L = centering_mismatch(sys, eps1, r1, mu, opt);
        if (L == 0.0) return mu;
        double dL = (centering_mismatch(sys, eps1, r1, mu + d, opt) - centering_mismatch(sys, eps1, r1, mu - d, opt)) / (2 * d);
        if (!(std::abs(dL) > 1e-12)) throw SolverError("mu0_predictor: degenerate centering derivative");
        double step = L / dL;
        mu -= step;
        if (std::abs(step) <= 1e-15) return mu;
    }
    throw SolverError("mu0_predictor: Newton did not converge");
}

// ---------------------------------------------------------------- connection

BranchPoint solve_connection(const SlowFastSystem& sys, double eps1, double r1, const ConnectionOptions& opt)
{
    if (!(eps1 > 0 && eps1 <= opt.eps11)) throw std::domain_error("solve_connection: eps1 must lie in (0, eps11]");
    if (!(r1 >= 0)) throw std::domain_error("solve_connection: r1 must be non-negative");
    BranchPoint bp;
    bp.h = r1;
    bp.eps1 = eps1;
    bp.eps = r1 * r1 * eps1;
    bp.mu0 = mu0_predictor(sys, eps1, r1, opt);
    auto nf = normal_form(sys, Side::attracting, bp.mu0, opt.degree);
    bp.y1_seed = nf.to_chart(eps1, r1, 0.0);
    bp.scale = std::pow(eps1 / opt.eps11, nf.lambda);

    auto unscale = [&](const State& x) { return std::array<double, 2>{bp.y1_seed + bp.scale * x[0], bp.mu0 + bp.scale * x[1]}; };
    VectorMap F = [&](const State& x) {
        auto [y1, mu] = unscale(x);
        auto a = separation(sys, Side::attracting, eps1, r1, y1, mu, opt);
        auto r = separation(sys, Side::repelling, eps1, r1, y1, mu, opt);
        return State{r.landing[0] - a.landing[0], r.landing[1] - a.landing[1]};
    };
    NewtonOptions no;
    no.tol = opt.tol.newton_tol;
    no.max_iter = opt.tol.newton_max_iter;
    no.central = true;
    no.fd_step = opt.fd_step;
    no.max_cond = opt.max_cond;
    NewtonResult res;
    try {
        res = newton_solve(F, {0.0, 0.0}, no);
    } catch (const SolverError& e) {
        std::ostringstream m;
        m << "solve_connection at (eps1, r1) = (" << eps1 << ", " << r1 << "): " << e.what();
        throw SolverError(m.str());
    }
    auto [y1, mu] = unscale(res.x);
    bp.y1_star = y1;
    bp.mu_star = mu;
    bp.residual = res.residual;
    bp.iterations = res.iterations;
    bp.cond = res.cond;
    // Newton may stop before forming a Jacobian (exact seed at r1 = 0)
    auto J = res.jacobian.size() == 2 ? res.jacobian : fd_jacobian(F, res.x, F(res.x), opt.fd_step, true);
    bp.det_scaled = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    return bp;
}

// ---------------------------------------------------------------- cycles

CycleOrbit reconstruct_cycle(const SlowFastSystem& sys, const BranchPoint& bp, const ConnectionOptions& opt, int n_samples)
{
    auto a = separation(sys, Side::attracting, bp.eps1, bp.h, bp.y1_star, bp.mu_star, opt);
    auto r = separation(sys, Side::repelling, bp.eps1, bp.h, bp.y1_star, bp.mu_star, opt);
    CycleOrbit out;
    out.eps = bp.eps;
    out.mu = bp.mu_star;
    State la{a.landing[0], a.landing[1], 0.0}, lr{r.landing[0], r.landing[1], 0.0};
    out.closure_gap = dist(from_chart2(a.r2, la), from_chart2(r.r2, lr));
    if (out.closure_gap > 10 * opt.tol.event_tol) {
        std::ostringstream m;
        m << "reconstruct_cycle: closure gap " << out.closure_gap << " above " << 10 * opt.tol.event_tol;
        throw SolverError(m.str());
    }
    const int n = 4000;
    std::vector<Point3> poly;
    append_dense(poly, a.chart1_leg, false, n, from_chart1);
    append_dense(poly, a.chart2_leg, false, n, [&](const State& s) { return from_chart2(a.r2, s); });
    append_dense(poly, r.chart2_leg, true, n, [&](const State& s) { return from_chart2(r.r2, s); });
    append_dense(poly, r.chart1_leg, true, n, from_chart1);
    out.samples = resample_arclength(poly, n_samples);
    return out;
}

ReclosureCheck reclose_ambient(const SlowFastSystem& sys, const BranchPoint& bp, const ConnectionOptions& opt)
{
    auto a = separation(sys, Side::attracting, bp.eps1, bp.h, bp.y1_star, bp.mu_star, opt);
    auto r = separation(sys, Side::repelling, bp.eps1, bp.h, bp.y1_star, bp.mu_star, opt);
    Point3 start = from_chart1({bp.eps1, bp.h, bp.y1_star, 0.0});
    auto f = ambient_field(sys, bp.eps, bp.mu_star);
    double horizon = 50.0 * bp.h / bp.eps + 10.0 * opt.t2_max / std::sqrt(bp.eps);
    IntegrateOptions o;
    o.escape = [](const double* s) { return std::abs(s[0]) > 1 || std::abs(s[1]) > 1 || std::abs(s[2]) > 1; };
    o.keep_dense = false;
    Tolerances tol = opt.tol;
    tol.abs_tol = std::min(tol.abs_tol, 1e-14);
    tol.rel_tol = std::min(tol.rel_tol, 1e-12);
    tol.max_steps = std::max<long>(tol.max_steps, 20000000);
    auto land = [&](int direction, double sign) {
        SectionSpec sec{[](const double* s) { return s[2]; }, direction};
        auto hit = integrate_to_section(f, {start[0], start[1], start[2]}, sec, sign * horizon, tol, o);
        return Point3{hit.state[0], hit.state[1], hit.state[2]};
    };
    ReclosureCheck out;
    out.landing_a = land(+1, 1.0);
    out.landing_r = land(-1, -1.0);
    out.gap = dist(out.landing_a, out.landing_r);
    out.chart_gap = std::max(dist(out.landing_a, from_chart2(a.r2, {a.landing[0], a.landing[1], 0.0})),
                             dist(out.landing_r, from_chart2(r.r2, {r.landing[0], r.landing[1], 0.0})));
    return out;
}

double singular_mismatch(const SlowFastSystem& sys, double h, double mu, const Tolerances& tol)
{
    auto b = strong_branches(sys, h, mu, tol);
    return b.end[0][0] - b.end[1][0];
}

double singular_mu(const SlowFastSystem& sys, double h, const Tolerances& tol)
{
    double mu = 0.0;
    const double d = 1e-7;
    for (int it = 0; it < tol.newton_max_iter; ++it) {
        double m = singular_mismatch(sys, h, mu, tol);
        double dm = (singular_mismatch(sys, h, mu + d, tol) - singular_mismatch(sys, h, mu - d, tol)) / (2 * d);
        if (!(std::abs(dm) > 1e-14)) throw SolverError("singular_mu: degenerate derivative");
        double step = m / dm;
        mu -= step;
        if (std::abs(step) <= 1e-14) return mu;
    }
    throw SolverError("singular_mu: Newton did not converge");
}

SingularCycle singular_cycle(const SlowFastSystem& sys, double h, double mu, const Tolerances& tol, int n)
{
    auto b = strong_branches(sys, h, mu, tol);
    SingularCycle out;
    out.h = h;
    out.mu = mu;
    out.y_jump = 0.5 * (b.end[0][0] + b.end[1][0]);
    auto lift = [&](const State& s) { return Point3{critical_manifold_x(sys, s[0], s[1], mu), s[0], s[1]}; };
    std::vector<Point3> poly;
    const int m = 4000;
    // attracting half from its end to the fold, then the repelling half outwards
    append_dense(poly, b.half[0], true, m, lift);
    poly.push_back({0.0, 0.0, 0.0});
    append_dense(poly, b.half[1], false, m, lift);
    // fast fiber back down
    Point3 top = lift(b.end[1]), bottom = lift(b.end[0]);
    for (int i = 1; i <= m; ++i) {
        double w = double(i) / m;
        poly.push_back({top[0] + w * (bottom[0] - top[0]), top[1] + w * (bottom[1] - top[1]), top[2] + w * (bottom[2] - top[2])});
    }
    out.samples = resample_arclength(poly, n);
    return out;
}

double hausdorff_distance(const std::vector<Point3>& a, const std::vector<Point3>& b)
{
    if (a.empty() || b.empty()) throw std::invalid_argument("hausdorff_distance: empty point set");
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

double hausdorff_to_singular(const SlowFastSystem& sys, const BranchPoint& bp, double mu, const ConnectionOptions& opt)
{
    auto cyc = reconstruct_cycle(sys, bp, opt);
    auto sing = singular_cycle(sys, bp.h, mu, opt.tol);
    return hausdorff_distance(cyc.samples, sing.samples);
}

// ---------------------------------------------------------------- sweep

CycleFamily branch_sweep(const SlowFastSystem& sys, double eps, double h_min, double h_max, int n,
                         const ConnectionOptions& opt, const SweepOptions& sweep)
{
    if (!(eps > 0)) throw ConfigError("branch_sweep: eps must be positive");
    if (!(h_min > 0 && h_max > h_min)) throw ConfigError("branch_sweep: need 0 < h_min < h_max");
    if (n < 2) throw ConfigError("branch_sweep: need at least two points");
    CycleFamily fam;
    fam.eps = eps;
    const double r2 = std::sqrt(eps);
    const double h_seam = std::sqrt(eps / opt.eps11);

    std::vector<double> hs, hs_small;
    for (int i = 0; i < n; ++i) {
        double h = h_min + (h_max - h_min) * i / (n - 1);
        (h >= h_seam ? hs : hs_small).push_back(h);
    }
    // chart-2 amplitudes h2 = h^2 / eps up to the seam, plus the requested points below it
    std::vector<double> h2s;
    for (int k = 0; k < sweep.small_points; ++k) h2s.push_back((1.0 / opt.eps11) * k / sweep.small_points);
    for (double h : hs_small) h2s.push_back(h * h / eps);
    std::sort(h2s.begin(), h2s.end());

    fam.points.resize(hs.size());
    if (sweep.orbits) fam.orbits.resize(hs.size());
    fam.small.resize(h2s.size());
    SeamReport seam;
    seam.h = h_seam;
    seam.h2 = 1.0 / opt.eps11;

    const int n_conn = int(hs.size()), n_small = int(h2s.size());
    // connection points, small-cycle points, the two seam solves and mu_H in one pool
    parallel_for(n_conn + n_small + 3, sweep.jobs, [&](int i) {
        if (i < n_conn) {
            double h = hs[i];
            auto bp = solve_connection(sys, eps / (h * h), h, opt);
            if (sweep.orbits) fam.orbits[i] = reconstruct_cycle(sys, bp, opt);
            if (sweep.hausdorff) bp.hausdorff = hausdorff_to_singular(sys, bp, singular_mu(sys, h, opt.tol), opt);
            fam.points[i] = bp;
        } else if (i < n_conn + n_small) {
            fam.small[i - n_conn] = solve_small_branch(sys, h2s[i - n_conn], r2, opt.melnikov);
        } else if (i == n_conn + n_small) {
            seam.mu_connection = solve_connection(sys, opt.eps11, h_seam, opt).mu_star;
        } else if (i == n_conn + n_small + 1) {
            seam.mu_small = r2 * solve_small_branch(sys, seam.h2, r2, opt.melnikov).mu2_bar;
        } else {
            fam.mu_hopf = hopf_mu(sys, r2, opt.melnikov);
        }
    });
    seam.mismatch = std::abs(seam.mu_connection - seam.mu_small);
    fam.seam = seam;

    // merged (h, mu) profile
    std::vector<std::pair<double, double>> prof;
    for (const auto& s : fam.small) prof.emplace_back(std::sqrt(s.h * eps), r2 * s.mu2_bar);
    prof.emplace_back(h_seam, seam.mu_connection);
    for (const auto& p : fam.points) prof.emplace_back(p.h, p.mu_star);
    std::sort(prof.begin(), prof.end());
    for (std::size_t i = 1; i < prof.size(); ++i) {
        double dh = prof[i].first - prof[i - 1].first;
        if (dh > 1e-12) fam.max_slope = std::max(fam.max_slope, std::abs(prof[i].second - prof[i - 1].second) / dh);
    }

    if (seam.mismatch > sweep.seam_tol) {
        std::ostringstream m;
        m << "branch_sweep: seam mismatch " << seam.mismatch << " above " << sweep.seam_tol;
        throw SolverError(m.str());
    }
    return fam;
}

void write_family_csv(const CycleFamily& fam, std::ostream& os)
{
    io::CsvWriter w(os, {"h", "eps", "mu_bar", "y1_star", "residual", "hausdorff"});
    for (const auto& p : fam.points) w.row({p.h, p.eps, p.mu_star, p.y1_star, p.residual, p.hausdorff});
}

nlohmann::json family_to_json(const CycleFamily& fam)
{
    nlohmann::json j;
    j["eps"] = fam.eps;
    j["mu_hopf"] = fam.mu_hopf;
    j["max_slope"] = fam.max_slope;
    j["seam"] = {{"h", fam.seam.h},
                 {"h2", fam.seam.h2},
                 {"mu_connection", fam.seam.mu_connection},
                 {"mu_small", fam.seam.mu_small},
                 {"mismatch", fam.seam.mismatch}};
    auto& pts = j["points"] = nlohmann::json::array();
    for (std::size_t i = 0; i < fam.points.size(); ++i) {
        const auto& p = fam.points[i];
        nlohmann::json q = {{"h", p.h},           {"eps", p.eps},         {"eps1", p.eps1},
                            {"y1_star", p.y1_star}, {"mu_bar", p.mu_star},  {"mu0", p.mu0},
                            {"residual", p.residual}, {"det_scaled", p.det_scaled}, {"iterations", p.iterations}};
        if (std::isfinite(p.hausdorff)) q["hausdorff"] = p.hausdorff;
        if (i < fam.orbits.size()) {
            q["closure_gap"] = fam.orbits[i].closure_gap;
            auto& s = q["orbit"] = nlohmann::json::array();
            for (const auto& x : fam.orbits[i].samples) s.push_back({x[0], x[1], x[2]});
        }
        pts.push_back(std::move(q));
    }
    auto& sm = j["small_cycles"] = nlohmann::json::array();
    for (const auto& s : fam.small)
        sm.push_back({{"h2", s.h}, {"h", std::sqrt(s.h * fam.eps)}, {"mu_bar", std::sqrt(fam.eps) * s.mu2_bar},
                      {"y2_bar", s.y2_bar}, {"residual", s.residual}});
    return j;
}

} // namespace canard
