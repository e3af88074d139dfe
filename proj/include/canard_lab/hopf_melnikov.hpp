#pragma once

#include "canard_lab/slow_manifold.hpp"

#include <complex>
#include <memory>
#include <ostream>

namespace canard {

struct StraightenedState {
    Vec2 u{0, 0};    // (x2, z2) - m(y2)
    double y2 = 0.0;
};

struct MelnikovValue {
    double d1 = 0.0, d2 = 0.0;
    double d1_hat = 0.0;           // d1 / h, finite at h = 0
    double d1_hat_adjoint = 0.0;   // closed-form adjoint assembly of d1 / h
    double transition_time = 0.0;
};

struct SmallBranchPoint {
    double h = 0.0, r2 = 0.0;
    double y2_bar = 0.0, mu2_bar = 0.0;
    double residual = 0.0;
    double transition_time = 0.0;
    int iterations = 0;
};

struct MelnikovOptions {
    Tolerances tol{};
    ManifoldConfig manifold{};
    double fd_step = 1e-5;
    double t_max = 60.0;
};

// (u', y2') of the straightened chart-2 system, mu = r2 mu2
std::array<double, 3> straightened_field(const SlowFastSystem& sys, const ManifoldResult& res, const StraightenedState& s,
                                         double r2, double mu2);

// adjoint solution along phi_h, normalised at the return time T
class AdjointSolution {
public:
    explicit AdjointSolution(double h, const Tolerances& tol = {});
    double h() const { return h_; }
    double period() const { return period_; }
    // psi_h(t) for a horizon T (default: the period)
    Vec2 operator()(double t, double T = -1.0) const;
    // the linearisation A_h(t) = [[0, -1], [1, 2 z2h(t)]]
    std::array<Vec2, 2> A(double t) const;

private:
    double integral(double t) const;   // int_0^t 2 z2h
    double h_, period_;
    Trajectory orbit_{3};              // h-scaled (x, z) and the running integral of 2 z2h
};

Vec2 adjoint_solution(double h, double t, double T, const Tolerances& tol = {});

MelnikovValue melnikov(const SlowFastSystem& sys, const ManifoldResult& res, double h, double y2, double r2, double mu2,
                       const MelnikovOptions& opt = {});
// builds the manifold at (r2, mu2) first
MelnikovValue delta_hat(const SlowFastSystem& sys, double h, double y2, double r2, double mu2, const MelnikovOptions& opt = {});
// central differences of (d1_hat, d2) in (y2, mu2); rows are components
std::array<Vec2, 2> delta_hat_jacobian(const SlowFastSystem& sys, double h, double y2, double r2, double mu2,
                                       const MelnikovOptions& opt = {});

SmallBranchPoint solve_small_branch(const SlowFastSystem& sys, double h, double r2, const MelnikovOptions& opt = {},
                                    Vec2 seed = {0, 0});

// shooting in the unstraightened chart-2 coordinates; returns (y2, mu2)
Vec2 return_map_fixed_point(const SlowFastSystem& sys, double h, double r2, const MelnikovOptions& opt = {},
                            Vec2 seed = {0, 0}, double* transition_time = nullptr);

double hopf_mu(const SlowFastSystem& sys, double r2, const MelnikovOptions& opt = {});

struct HopfEigenCheck {
    double mu = 0.0;                        // where the complex pair crosses the imaginary axis
    std::array<double, 3> equilibrium{};    // (x2, y2, z2)
    std::array<std::complex<double>, 3> eigenvalues{};
};

// equilibrium of the chart-2 field at mu, by Newton from the reduced-problem guess
std::array<double, 3> chart2_equilibrium(const SlowFastSystem& sys, double r2, double mu);
std::array<std::complex<double>, 3> chart2_eigenvalues(const SlowFastSystem& sys, double r2, double mu);
HopfEigenCheck hopf_by_eigenvalues(const SlowFastSystem& sys, double r2, double mu_seed);

void write_branch_csv(const std::vector<SmallBranchPoint>& pts, std::ostream& os);

} // namespace canard
