// Runs the twelve acceptance criteria and prints one PASS/FAIL line per criterion.
#include "canard_lab/connection_branch.hpp"
#include "canard_lab/hopf_melnikov.hpp"
#include "canard_lab/layer_dynamics.hpp"
#include "canard_lab/shilnikov_transition.hpp"
#include "canard_lab/slow_manifold.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>

using namespace canard;

namespace {

constexpr double kPi = std::numbers::pi;

int failures = 0;

void criterion(int id, const std::string& title, const std::function<bool(std::ostringstream&)>& body)
{
    std::ostringstream detail;
    detail.precision(3);
    auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail << " exception: " << e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!ok) ++failures;
    std::printf("[%s] %2d %s:%s (%.1f s)\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.str().c_str(), secs);
    std::fflush(stdout);
}

double max_ratio(const std::vector<double>& d)
{
    double q = 0;
    for (std::size_t i = 1; i < d.size(); ++i)
        if (d[i - 1] > 0) q = std::max(q, d[i] / d[i - 1]);
    return q;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// forward shooting for the Shilnikov problem, y' = (lambda + r1 L0) y + r1 eps1 L1
double shoot(const Polynomial& L0, const Polynomial& L1, const ShilnikovBC& bc, double lambda, double y0,
             Trajectory* path)
{
    CompiledPolynomial l0(L0), l1(L1);
    VectorField f = [&](double t, const double* s, double* ds) {
        double r1 = bc.r10 * std::exp(-0.5 * t), e1 = bc.eps11 * std::exp(t - bc.tau);
        double a[3] = {e1, r1, s[0]};
        ds[0] = (lambda + r1 * l0(a)) * s[0] + r1 * e1 * l1(a);
    };
    Tolerances tol;
    tol.abs_tol = 1e-15;
    tol.rel_tol = 1e-13;
    auto tr = integrate(f, {y0}, {0.0, bc.tau}, tol);
    if (path) *path = tr;
    return tr.back()[0];
}

} // namespace

int main()
{
    const auto sys = SlowFastSystem::canonical();
    const int jobs = int(std::max(1u, std::thread::hardware_concurrency()));

    criterion(1, "layer eigenvalues at the origin are +-i", [&](auto& d) {
        auto ev = layer_eigenvalues(sys, 0.0);
        if (ev[0].imag() < ev[1].imag()) std::swap(ev[0], ev[1]);
        double err = std::max(std::abs(ev[0] - std::complex<double>(0, 1)), std::abs(ev[1] - std::complex<double>(0, -1)));
        d << " max error " << err;
        return err <= 1e-12;
    });

    criterion(2, "separatrix matches (-t^2/4 + 1/2, t/2)", [&](auto& d) {
        double worst = 0;
        for (double t1 : {2.0, -2.0}) {
            auto tr = integrate(layer_field(), {0.5, 0.0}, {0, t1}, Tolerances{});
            for (int k = 0; k <= 200; ++k) {
                double t = t1 * k / 200.0;
                auto s = tr.eval(t);
                worst = std::max({worst, std::abs(s[0] - (-t * t / 4 + 0.5)), std::abs(s[1] - t / 2)});
            }
        }
        d << " max deviation " << worst;
        return worst <= 1e-8;
    });

    criterion(3, "first integral conserved", [&](auto& d) {
        double worst = 0;
        for (double h : {0.1, 0.5, 1.0, 2.0}) worst = std::max(worst, periodic_orbit(h, Tolerances{}).H_drift);
        bool symbolic = first_integral_rate(sys).is_zero();
        d << " max relative drift " << worst << ", symbolic rate zero " << (symbolic ? "yes" : "no");
        return worst <= 1e-9 && symbolic;
    });

    criterion(4, "period tends to 2 pi", [&](auto& d) {
        double gap = std::abs(periodic_orbit(1e-3, Tolerances{}).period - 2 * kPi);
        bool monotone = true;
        double prev = 1e300;
        for (int k = 1; k <= 8; ++k) {
            double g = std::abs(periodic_orbit(std::ldexp(1.0, -k), Tolerances{}).period - 2 * kPi);
            monotone = monotone && g < prev;
            prev = g;
        }
        d << " |T(1e-3) - 2pi| " << gap << ", monotone " << (monotone ? "yes" : "no");
        return gap <= 1e-2 && monotone;
    });

    criterion(5, "slow manifold", [&](auto& d) {
        ManifoldConfig cfg;
        cfg.N = 30;
        cfg.nu = 0.2;
        double base = 0;
        for (double mu2 : {0.0, 0.05}) {
            auto r0 = solve_invariant_series(sys, 0.0, mu2, cfg);
            for (int i = -8; i <= 8; ++i) {
                double y2 = 0.02 * i;
                auto m = eval_manifold(r0, y2);
                base = std::max({base, std::abs(m[0] + y2 * y2), std::abs(m[1] - y2)});
            }
        }
        auto res = solve_invariant_series(sys, 0.05, 0.0, cfg);
        double ratio = max_ratio(res.distances);
        d << " r2 = 0 graph error " << base << ", residual " << res.residual << ", Picard ratio " << ratio;
        return base <= 1e-12 && res.residual <= 1e-8 && ratio <= 0.5;
    });

    MelnikovOptions mo;
    mo.manifold.N = 30;

    criterion(6, "Melnikov derivatives", [&](auto& d) {
        double worst = 0;
        for (double h : {0.25, 0.5, 1.0}) {
            double half = periodic_orbit(h, Tolerances{}).period / 2;
            auto J = delta_hat_jacobian(sys, h, 0, 0, 0, mo);
            worst = std::max(worst, std::abs(J[1][1] - half) / half);
        }
        auto J0 = delta_hat_jacobian(sys, 0.0, 0, 0, 0, mo);
        double lim_mu = std::abs(J0[1][1] - kPi), lim_y = std::abs(J0[0][0] + 2 * kPi);
        d << " max rel error vs T0/2 " << worst << ", |d mu limit - pi| " << lim_mu << ", |d y limit + 2pi| " << lim_y;
        return worst <= 1e-4 && lim_mu <= 1e-4 && lim_y <= 1e-3;
    });

    criterion(7, "Hopf consistency", [&](auto& d) {
        double worst = 0;
        for (double r2 : {0.05, 0.1}) {
            double mu = hopf_mu(sys, r2, mo);
            worst = std::max(worst, std::abs(hopf_by_eigenvalues(sys, r2, mu).mu - mu));
        }
        bool shrinking = true;
        double prev = 1;
        for (double r2 : {0.04, 0.01, 0.0025}) {
            double m = std::abs(hopf_mu(sys, r2, mo));
            shrinking = shrinking && m < prev;
            prev = m;
        }
        d << " max |mu_Melnikov - mu_eigen| " << worst << ", |mu_H(0.0025)| " << prev;
        return worst <= 1e-6 && shrinking && prev < 1e-5;
    });

    criterion(8, "Shilnikov solver", [&](auto& d) {
        ShilnikovBC lin;
        lin.tau = 10;
        lin.y11 = 0.1;
        Polynomial L0c = Polynomial::constant(3, 0.7), L1c = Polynomial::variable(3, 2);
        auto s0 = shilnikov_solve(L0c, L1c, lin);
        double exact = 0;
        for (double t : {0.0, 2.5, 7.0, 10.0}) exact = std::max(exact, std::abs(s0.y(t) - 0.1 * std::exp(0.5 * (t - 10))));

        auto nf = normal_form(sys, Side::attracting, 0.0);
        ShilnikovBC bc;
        bc.tau = 10;
        bc.r10 = 0.05;
        bc.y11 = 0.1;
        auto s = shilnikov_solve(nf.L0, nf.L1, bc);
        double lam = lambda_mu(0.0), y0 = s.y(0);
        for (int it = 0; it < 20; ++it) {
            double h = 1e-7;
            double F = shoot(nf.L0, nf.L1, bc, lam, y0, nullptr) - bc.y11;
            double dF = (shoot(nf.L0, nf.L1, bc, lam, y0 + h, nullptr) - shoot(nf.L0, nf.L1, bc, lam, y0 - h, nullptr)) / (2 * h);
            y0 -= F / dF;
            if (std::abs(F) < 1e-15) break;
        }
        Trajectory path;
        shoot(nf.L0, nf.L1, bc, lam, y0, &path);
        double oracle = 0;
        for (int i = 0; i <= 40; ++i) oracle = std::max(oracle, std::abs(path.eval(10.0 * i / 40)[0] - s.y(10.0 * i / 40)));

        std::vector<double> taus = {8, 12, 16}, logs;
        for (double tau : taus) {
            bc.tau = tau;
            auto st = shilnikov_solve(nf.L0, nf.L1, bc);
            double g = 0;
            for (double t : {0.5, 1.0, 2.0, 4.0}) g = std::max(g, std::abs(st.phi(t) - phi_infinity(nf.L0, t, 0.25, 0.05, 0.1, 0.0)));
            logs.push_back(std::log(g));
        }
        double rate = -fitted_slope(taus, logs);
        d << " r10 = 0 error " << exact << ", shooting gap " << oracle << ", decay rate " << rate;
        return exact <= 1e-12 && oracle <= 1e-8 && rate >= 0.25;
    });

    criterion(9, "transition map structure", [&](auto& d) {
        double mu = 0.05, slope_err = 0, r1_err = 0;
        bool collapse = true;
        std::ostringstream cs;
        for (auto side : {Side::attracting, Side::repelling}) {
            auto nf = normal_form(sys, side, mu);
            std::vector<double> x, y;
            for (double e : {0.02, 0.01, 0.005}) {
                auto tc = transition_map_check(nf, sys, e, 0.0, 0.01);
                x.push_back(std::log(0.25 / e));
                y.push_back(std::log(std::abs(tc.y_arrival)));
            }
            slope_err = std::max(slope_err, std::abs(fitted_slope(x, y) - lambda_mu(mu)));
            auto tc = transition_map_check(nf, sys, 0.01, 0.04, 0.0);
            r1_err = std::max(r1_err, std::abs(tc.r1_arrival - 0.008));

            // log contraction of the normal direction behaves like -c (1/eps1 - 1/eps11)
            double sign = side == Side::attracting ? 1.0 : -1.0;
            double l1 = transition_map_check(nf, sys, 0.02, 0.02, 0.0).log_contraction;
            double l2 = transition_map_check(nf, sys, 0.01, 0.02, 0.0).log_contraction;
            double c = -sign * (l2 - l1) / (100.0 - 50.0);
            double shape = (l1 / l2) / ((50.0 - 4.0) / (100.0 - 4.0));
            collapse = collapse && c > 0 && std::abs(shape - 1) <= 0.05;
            cs << " c_" << to_string(side) << " " << c;
        }
        d << " slope error " << slope_err << ", r1 arrival error " << r1_err << "," << cs.str();
        return slope_err <= 1e-6 && r1_err <= 1e-10 && collapse;
    });

    // the sweep in criterion 10 also feeds criterion 12
    const double eps = 1e-4;
    CycleFamily fam;
    std::string sweep_error = "not run";

    criterion(10, "connection branch at eps = 1e-4", [&](auto& d) {
        SweepOptions so;
        so.jobs = jobs;
        so.hausdorff = false;
        try {
            fam = branch_sweep(sys, eps, 0.05, 0.4, 20, {}, so);
            sweep_error.clear();
        } catch (const std::exception& e) {
            sweep_error = e.what();
            d << " sweep failed: " << sweep_error;
            return false;
        }
        double res = 0;
        for (const auto& p : fam.points) res = std::max(res, p.residual);
        std::vector<double> gaps(fam.points.size());
        parallel_for(int(gaps.size()), jobs, [&](int i) { gaps[i] = reclose_ambient(sys, fam.points[i]).gap; });
        double gap = *std::max_element(gaps.begin(), gaps.end());

        // h -> 0 along the small-cycle part of the family, against the eigenvalue Hopf point
        double r2 = std::sqrt(eps);
        const auto &s1 = fam.small.at(1), &s2 = fam.small.at(2);
        double mu1 = r2 * s1.mu2_bar, mu2 = r2 * s2.mu2_bar;
        double mu_limit = mu1 - s1.h * (mu2 - mu1) / (s2.h - s1.h);   // linear in h2 = h^2 / eps
        double mu_eig = hopf_by_eigenvalues(sys, r2, fam.mu_hopf).mu;
        double hopf_gap = std::abs(mu_limit - mu_eig);
        d << " " << fam.points.size() << " points, max residual " << res << ", max re-closure gap " << gap
          << ", seam mismatch " << fam.seam.mismatch << ", |mu_bar(0) - mu_H| " << hopf_gap;
        return fam.points.size() >= 20 && res <= 1e-8 && gap <= 1e-5 && fam.seam.mismatch <= 1e-4 && hopf_gap <= 1e-4;
    });

    criterion(11, "Hausdorff distance decreases with eps at h = 0.3", [&](auto& d) {
        double h = 0.3, ms = singular_mu(sys, h);
        double d3 = hausdorff_to_singular(sys, solve_connection(sys, 1e-3 / (h * h), h), ms);
        double d4 = hausdorff_to_singular(sys, solve_connection(sys, 1e-4 / (h * h), h), ms);
        d << " d_H " << d3 << " (eps 1e-3), " << d4 << " (eps 1e-4)";
        return d4 < d3;
    });

    criterion(12, "no explosion along the eps = 1e-4 branch", [&](auto& d) {
        if (!sweep_error.empty()) {
            d << " sweep failed: " << sweep_error;
            return false;
        }
        // finite differences over the merged family, recomputed here
        std::vector<std::pair<double, double>> prof;
        for (const auto& s : fam.small) prof.emplace_back(std::sqrt(s.h * eps), std::sqrt(eps) * s.mu2_bar);
        for (const auto& p : fam.points) prof.emplace_back(p.h, p.mu_star);
        std::sort(prof.begin(), prof.end());
        double slope = 0;
        for (std::size_t i = 1; i < prof.size(); ++i)
            slope = std::max(slope, std::abs((prof[i].second - prof[i - 1].second) / (prof[i].first - prof[i - 1].first)));
        d << " max |dmu/dh| " << slope << " (library " << fam.max_slope << ")";
        return slope <= 100;
    });

    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
