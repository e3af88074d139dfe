#pragma once

#include "canard_lab/hopf_melnikov.hpp"
#include "canard_lab/shilnikov_transition.hpp"

#include <limits>
#include <ostream>

#include <json.hpp>

namespace canard {

using Point3 = std::array<double, 3>;

struct ConnectionOptions {
    Tolerances tol{};
    double eps11 = 0.25;
    double window = 0.5;          // landing must stay within this distance of (1/2, 0)
    int degree = 12;              // normal forms behind the mu0 and seed predictors
    double fd_step = 1e-6;        // Newton differences in the scaled unknowns
    double max_cond = 1e8;
    double t2_max = 60.0;         // chart-2 horizon
    MelnikovOptions melnikov{};   // small-cycle side of the seam
};

struct SeparationValue {
    Side side = Side::attracting;
    double mu = 0.0;
    Vec2 landing{0, 0};           // (x2, y2) on {z2 = 0}
    double r2 = 0.0;
    Trajectory chart1_leg{4};     // (eps1, r1, y1, z1), empty when eps1 = eps11
    Trajectory chart2_leg{3};     // (x2, y2, z2) at fixed r2
};

// legs from (eps1, r1, y1, z1 = 0): forward for the attracting side, backward for the repelling side
SeparationValue separation(const SlowFastSystem& sys, Side side, double eps1, double r1, double y1, double mu,
                           const ConnectionOptions& opt = {});

// y1 of the normal-form origin on each side; their difference is the centering mismatch
double centering_mismatch(const SlowFastSystem& sys, double eps1, double r1, double mu, const ConnectionOptions& opt = {});
double mu0_predictor(const SlowFastSystem& sys, double eps1, double r1, const ConnectionOptions& opt = {});

struct BranchPoint {
    double h = 0.0;               // r1 on the section
    double eps = 0.0;             // r1^2 eps1
    double eps1 = 0.0;
    double y1_star = 0.0, mu_star = 0.0;
    double mu0 = 0.0, y1_seed = 0.0, scale = 1.0;
    double residual = 0.0;
    double det_scaled = 0.0;      // Jacobian determinant in the scaled unknowns
    double cond = 0.0;
    int iterations = 0;
    double hausdorff = std::numeric_limits<double>::quiet_NaN();
};

BranchPoint solve_connection(const SlowFastSystem& sys, double eps1, double r1, const ConnectionOptions& opt = {});

struct CycleOrbit {
    double eps = 0.0, mu = 0.0;
    double closure_gap = 0.0;     // ambient distance between the two landings
    std::vector<Point3> samples;  // ambient (x, y, z), uniform in arclength, closed
};

CycleOrbit reconstruct_cycle(const SlowFastSystem& sys, const BranchPoint& bp, const ConnectionOptions& opt = {},
                             int n_samples = 2000);

// both legs integrated again in ambient coordinates from the section point to {z = 0}
struct ReclosureCheck {
    Point3 landing_a{}, landing_r{};
    double gap = 0.0;             // |landing_a - landing_r|
    double chart_gap = 0.0;       // max distance to the blown-down chart landings
};
ReclosureCheck reclose_ambient(const SlowFastSystem& sys, const BranchPoint& bp, const ConnectionOptions& opt = {});

// singular canard cycle: strong canard segment through the fold closed by a fast fiber at x = -h^2
struct SingularCycle {
    double h = 0.0, mu = 0.0;
    double y_jump = 0.0;
    std::vector<Point3> samples;
};
// y on the attracting half minus y on the repelling half, at x = -h^2
double singular_mismatch(const SlowFastSystem& sys, double h, double mu, const Tolerances& tol = {});
// mu at which the strong canard closes with a fast fiber at x = -h^2
double singular_mu(const SlowFastSystem& sys, double h, const Tolerances& tol = {});
SingularCycle singular_cycle(const SlowFastSystem& sys, double h, double mu, const Tolerances& tol = {}, int n = 2000);

// symmetric Hausdorff distance between two polylines
double hausdorff_distance(const std::vector<Point3>& a, const std::vector<Point3>& b);
double hausdorff_to_singular(const SlowFastSystem& sys, const BranchPoint& bp, double mu, const ConnectionOptions& opt = {});

struct SeamReport {
    double h = 0.0;               // sqrt(eps / eps11)
    double h2 = 0.0;              // chart-2 amplitude 1/eps11
    double mu_connection = 0.0, mu_small = 0.0;
    double mismatch = 0.0;
};

struct CycleFamily {
    double eps = 0.0;
    std::vector<BranchPoint> points;      // ordered by h
    std::vector<CycleOrbit> orbits;
    std::vector<SmallBranchPoint> small;  // chart-2 regime below the seam, h2 ascending
    SeamReport seam;
    double mu_hopf = 0.0;                 // mu_H(sqrt eps)
    double max_slope = 0.0;               // max |d mu_bar / d h| over the merged family
};

struct SweepOptions {
    int jobs = 1;
    int small_points = 6;
    bool orbits = true;
    bool hausdorff = true;
    double seam_tol = 1e-4;
};

CycleFamily branch_sweep(const SlowFastSystem& sys, double eps, double h_min, double h_max, int n,
                         const ConnectionOptions& opt = {}, const SweepOptions& sweep = {});

void write_family_csv(const CycleFamily& fam, std::ostream& os);
nlohmann::json family_to_json(const CycleFamily& fam);

} // namespace canard
