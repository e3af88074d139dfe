#pragma once

#include "canard_lab/blowup_charts.hpp"

#include <array>
#include <vector>

#include <json.hpp>

namespace canard {

// Truncated scalar power series in one variable, fixed length N+1.
class Series {
public:
    Series() = default;
    explicit Series(int N, double c0 = 0.0);
    static Series from_coeffs(int N, const std::vector<double>& c);

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double operator[](int n) const { return c_[n]; }
    double& operator[](int n) { return c_[n]; }
    const std::vector<double>& coeffs() const { return c_; }

    Series operator+(const Series& o) const;
    Series operator-(const Series& o) const;
    Series operator*(const Series& o) const;
    Series operator*(double s) const;
    Series derivative() const;
    // multiply by the variable, dropping the top coefficient
    Series times_var() const;
    double eval(double v) const;
    double eval_derivative(double v) const;

private:
    std::vector<double> c_;
};

using Vec2 = std::array<double, 2>;

struct VectorPowerSeries {
    std::vector<Vec2> coeffs;
    double nu = 0.2;

    int order() const { return static_cast<int>(coeffs.size()) - 1; }
    // sum |h_n| nu^n with the Euclidean norm on R^2
    double norm() const;
    // weighted norm of the top 10% of coefficients
    double tail_norm() const;
    Vec2 eval(double v) const;
    Vec2 eval_derivative(double v) const;
    Series component(int i) const;
    static VectorPowerSeries from_components(const Series& a, const Series& b, double nu);
};

// h_n(y2) for n = 0..order as polynomials in the chart-2 slot kY2 (other slots unused)
std::vector<std::array<Polynomial, 2>> formal_coefficients(const SlowFastSystem& sys, double mu2, int order);

// |r2 q m' - f(m)| at y2 for the truncated formal graph m = sum r2^n h_n
double formal_defect(const SlowFastSystem& sys, const std::vector<std::array<Polynomial, 2>>& h, double r2,
                     double mu2, double y2);

// A(0, mu2) = lambda^-1 [[0, -1], [1, -mu2/lambda]]
std::array<Vec2, 2> A0_matrix(double mu2, double lambda);

VectorPowerSeries apply_T(const VectorPowerSeries& F, double r2, double mu2, double lambda = 1.0);
// ||T_k|| for the Euclidean norm
double T_norm(int k, double r2, double mu2, double lambda = 1.0);
// smallest C with ||(qI - A0)^-1|| <= C / (|q| + 1) for all real q (dense scan)
double calibrate_T_constant(double mu2, double lambda = 1.0);

struct ManifoldConfig {
    double nu = 0.2;
    int N = 40;
    int max_iter = 300;
    double fp_tol = 1e-14;
    double sigma = 1.0;        // iterates must stay in ||u|| <= sigma
    double max_r2 = 0.1;
    double max_mu2 = 0.1;
};

struct ManifoldResult {
    VectorPowerSeries series;    // u~(v)
    double r2 = 0.0, mu2 = 0.0, lambda = 1.0;
    double offset = 0.0;         // v = y2 + offset, offset = mu2 / (2 lambda)
    std::array<Polynomial, 2> h1;
    std::array<CompiledPolynomial, 2> h1_c, dh1_c;
    std::vector<double> distances;   // successive-iterate norm distances
    int iterations = 0;
    double residual = 0.0;       // invariance residual on a default grid
    const SlowFastSystem* sys = nullptr;
};

ManifoldResult solve_invariant_series(const SlowFastSystem& sys, double r2, double mu2, const ManifoldConfig& cfg = {},
                                      const VectorPowerSeries* initial = nullptr);

// (x2, z2) on the manifold; throws std::domain_error outside the radius
Vec2 eval_manifold(const ManifoldResult& res, double y2);
// d/dy2 of the graph
Vec2 eval_manifold_derivative(const ManifoldResult& res, double y2);

// scaled defect |r2 q m' - f(m)| / (lambda r2) evaluated pointwise at the given v values (0 at r2 = 0)
double invariance_residual(const ManifoldResult& res, const std::vector<double>& v_grid);
std::vector<double> default_grid(double nu, int n = 41);

nlohmann::json manifold_to_json(const ManifoldResult& res);

} // namespace canard
