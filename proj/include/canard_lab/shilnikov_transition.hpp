#pragma once

#include "canard_lab/blowup_charts.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace canard {

enum class Side { attracting, repelling };
std::string to_string(Side s);

double lambda_mu(double mu);

// z1 = m(eps1, r1, y1) near (0, 0, y1, -1) (attracting) or (0, 0, y1, 1) (repelling), mu frozen
struct CenterManifoldGraph {
    Side side = Side::attracting;
    double mu = 0.0;
    int degree = 0;
    double base = -1.0;
    Polynomial m;                 // chart-1 slot layout, slots kZ1 and kMu1 unused
    CompiledPolynomial m_c;

    double operator()(double eps1, double r1, double y1) const;
    // z1' - Dm . (eps1', r1', y1') on the graph, from the compiled chart-1 field
    double defect(const SlowFastSystem& sys, double eps1, double r1, double y1) const;
};

CenterManifoldGraph center_manifold_graph(const SlowFastSystem& sys, Side side, double mu, int degree);

// Finite-order normal form of the reduced flow on M_{1,side}. Variables (eps1, r1, y) with
//   eps1' = eps1, r1' = -r1/2, y' = (lambda + r1 L0(r1, y)) y + r1 eps1 L1(eps1, r1, y)
// written in the forward orientation (the repelling side is time-reversed).
struct NormalForm {
    Side side = Side::attracting;
    double mu = 0.0, lambda = 0.0;
    int degree = 0;
    double y_eq = 0.0;            // y1 of the reduced equilibrium at eps1 = r1 = 0
    Polynomial raw;               // reduced y-field before normalisation, slots (eps1, r1, Y), Y = y1 - y_eq
    Polynomial conj;              // Y = conj(eps1, r1, y)
    Polynomial L0, L1;            // slots (eps1, r1, y); L0 does not involve eps1
    CenterManifoldGraph graph;

    // chart-1 y1 from normal-form y
    double to_chart(double eps1, double r1, double y) const;
    // inverse of to_chart by Newton
    double from_chart(double eps1, double r1, double y1) const;
};

NormalForm normal_form(const SlowFastSystem& sys, Side side, double mu, int degree = 10);

struct ShilnikovBC {
    double tau = 10.0;
    double eps11 = 0.25;
    double r10 = 0.0;
    double y11 = 0.0;
    double mu = 0.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();   // NaN: lambda_mu(mu)
};

struct ShilnikovOptions {
    double alpha = 0.25;
    double delta = 1.0;
    double tol = 1e-14;
    double tau0 = 5.0;
    int max_iter = 200;
    int nodes = 0;                // 0: 32 + 8 tau
};

class ShilnikovSolution {
public:
    ShilnikovBC bc;
    double lambda = 0.0;
    std::vector<double> t;        // nodes on [0, tau], t.front() = tau
    std::vector<double> u_nodes;
    std::vector<double> distances;   // weighted sup distances of successive iterates
    int iterations = 0;

    double u(double s) const;
    double phi(double s) const;
    double y(double s) const;
    double eps1(double s) const { return std::exp(s - bc.tau) * bc.eps11; }
    double r1(double s) const { return std::exp(-0.5 * s) * bc.r10; }
    // max ratio of successive distances
    double contraction_ratio() const;

private:
    friend ShilnikovSolution shilnikov_solve(const Polynomial&, const Polynomial&, const ShilnikovBC&,
                                             const ShilnikovOptions&);
    double integral(double s) const;   // int_tau^s r1 L0(r1, 0)
    std::vector<double> cheb_;         // Chebyshev coefficients of u on [0, tau]
    std::vector<double> l0_;           // coefficients of L0(r1, 0) in powers of r1
};

// L0, L1 in slots (eps1, r1, y)
ShilnikovSolution shilnikov_solve(const Polynomial& L0, const Polynomial& L1, const ShilnikovBC& bc,
                                  const ShilnikovOptions& opt = {});

double phi_infinity(const Polynomial& L0, double t, double eps11, double r10, double y11, double mu);

nlohmann::json shilnikov_to_json(const ShilnikovSolution& s);

struct TransitionCheck {
    double leading = 0.0;         // (eps11/eps1)^lambda y_side
    double psi = 0.0;             // arrival y minus the leading term
    double y_arrival = 0.0;       // normal-form y at eps1 = eps11
    double r1_arrival = 0.0;
    double r1_expected = 0.0;     // sqrt(eps1/eps11) r1
    double z_gap = 0.0;           // z1 - m at arrival
    // log of the linear contraction of z1 - m accumulated in the transit (forward orientation)
    double log_contraction = 0.0;
    double time = 0.0;
};

struct TransitionOptions {
    double eps11 = 0.25;
    double chi = 0.1;
    double z_offset = 0.0;        // start at z1 = m + z_offset (the section z1 = 0 is z_offset = -m)
    int degree = 10;
    Tolerances tol{};
};

TransitionCheck transition_map_check(const SlowFastSystem& sys, Side side, double eps1, double r1, double y_side,
                                     double mu, const TransitionOptions& opt = {});
TransitionCheck transition_map_check(const NormalForm& nf, const SlowFastSystem& sys, double eps1, double r1,
                                     double y_side, const TransitionOptions& opt = {});

} // namespace canard
