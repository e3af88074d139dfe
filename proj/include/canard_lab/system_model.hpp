#pragma once

#include "canard_lab/numerics.hpp"
#include "canard_lab/polynomial.hpp"

#include <array>
#include <memory>
#include <string>

#include <json.hpp>

namespace canard {

// variable slots of the ambient tables
enum AmbientVar { kX = 0, kY = 1, kZ = 2, kEps = 3, kMu = 4 };
constexpr int kAmbientVars = 5;

struct ChartFields;

struct Params {
    double eps = 0.0;
    double mu = 0.0;
};

struct AmbientState {
    double x = 0.0, y = 0.0, z = 0.0;
};

enum class FoldedType { node, saddle, focus, degenerate };
std::string to_string(FoldedType t);

// Normal form x' = eps(y-(mu+1)z+F), y' = eps(mu/2+G), z' = x+z^2+zH.
// G here is the full function, a1*y + a2*z plus the table of higher-order terms.
class SlowFastSystem {
public:
    SlowFastSystem(double a1, double a2, Polynomial F, Polynomial G_higher, Polynomial H);

    static SlowFastSystem canonical(double a1 = 0.0, double a2 = 1.0);

    double a1() const { return a1_; }
    double a2() const { return a2_; }
    double lambda() const { return a1_ + a2_; }
    const Polynomial& F() const { return F_; }
    const Polynomial& G_higher() const { return Gh_; }
    const Polynomial& H() const { return H_; }
    Polynomial G() const;
    // max total degree of each table (F, G, H)
    std::array<int, 3> truncation_degrees() const;

    // ambient field components as polynomials in (x, y, z, eps, mu)
    const std::array<Polynomial, 3>& field_polynomials() const { return field_; }
    std::array<double, 3> eval_field(const double* xyz_eps_mu) const;

    // lazily generated chart data (see blowup_charts)
    const ChartFields& charts() const;

    // reasons a monomial is rejected; empty when admissible
    static std::string check_F(const Exponent& e);
    static std::string check_G(const Exponent& e);
    static std::string check_H(const Exponent& e);

private:
    double a1_, a2_;
    Polynomial F_, Gh_, H_;
    std::array<Polynomial, 3> field_;
    std::array<CompiledPolynomial, 3> field_c_;
    CompiledPolynomial V_, Vx_, Vy_, Vz_;   // critical-manifold function at eps = 0
    CompiledPolynomial slow_x_, slow_y_;   // slow right-hand sides over eps, at eps = 0
    struct Slot;
    std::shared_ptr<Slot> slot_;

    friend double critical_manifold_x(const SlowFastSystem&, double, double, double, double);
    friend std::array<double, 2> eval_reduced_field(const SlowFastSystem&, double, double, double);
    friend double reduced_factor_L(const SlowFastSystem&, double, double, double);
};

std::string monomial_to_string(const Exponent& e);

SlowFastSystem system_from_json(const nlohmann::json& j);
nlohmann::json system_to_json(const SlowFastSystem& sys);

std::array<double, 3> eval_fast_field(const SlowFastSystem& sys, const AmbientState& s, const Params& p);

// x = m(y,z) on the critical manifold by Newton from -z^2
double critical_manifold_x(const SlowFastSystem& sys, double y, double z, double mu = 0.0, double tol = 1e-14);

// desingularized reduced field (y', z'); time rescaled by m_z / eps
std::array<double, 2> eval_reduced_field(const SlowFastSystem& sys, double y, double z, double mu);

// the factor L with m_z = -2z(1+L); z must be nonzero
double reduced_factor_L(const SlowFastSystem& sys, double y, double z, double mu);

FoldedType classify_folded_singularity(const SlowFastSystem& sys, double mu);
// Jacobian of the reduced field at the folded singularity (central differences)
std::array<std::array<double, 2>, 2> folded_jacobian(const SlowFastSystem& sys, double mu);

double lambda_of(const SlowFastSystem& sys);

constexpr double kValidityBox = 0.5;

} // namespace canard
