#pragma once

#include "canard_lab/numerics.hpp"
#include "canard_lab/polynomial.hpp"
#include "canard_lab/system_model.hpp"

#include <array>
#include <utility>

namespace canard {

struct Chart1Point {
    double eps1 = 0.0, r1 = 0.0, y1 = 0.0, z1 = 0.0;
};

struct Chart2Point {
    double r2 = 0.0, x2 = 0.0, y2 = 0.0, z2 = 0.0;
};

// slot layouts of the chart polynomials
enum Chart2Var { kX2 = 0, kY2 = 1, kZ2 = 2, kR2 = 3, kMu2 = 4 };
enum Chart1Var { kE1 = 0, kR1 = 1, kY1 = 2, kZ1 = 3, kMu1 = 4 };

// Desingularized chart fields generated symbolically from the coefficient tables.
struct ChartFields {
    // scaling chart, (x2, y2, z2, r2, mu) -> (x2', y2', z2')
    std::array<Polynomial, 3> chart2;
    std::array<CompiledPolynomial, 3> chart2_c;
    // scaling chart with mu = r2*mu2, slots (x2, y2, z2, r2, mu2); component 1 is y2'/r2
    std::array<Polynomial, 3> chart2_scaled;
    std::array<CompiledPolynomial, 3> chart2_scaled_c;
    // entry chart, (eps1, r1, y1, z1, mu) -> (eps1', r1', y1', z1')
    std::array<Polynomial, 4> chart1;
    std::array<CompiledPolynomial, 4> chart1_c;
};

ChartFields make_chart_fields(const SlowFastSystem& sys);

std::pair<AmbientState, double> blow_down_chart1(const Chart1Point& p);
std::pair<AmbientState, double> blow_down_chart2(const Chart2Point& p);
Chart2Point chart1_to_chart2(const Chart1Point& p);
// inverse change, requires x2 < 0
Chart1Point chart2_to_chart1(const Chart2Point& p);

std::array<double, 3> field_chart2(const SlowFastSystem& sys, const Chart2Point& p, double mu);
std::array<double, 4> field_chart1(const SlowFastSystem& sys, const Chart1Point& p, double mu);

// state (x2, y2, z2) with r2 and mu frozen
VectorField chart2_vector_field(const SlowFastSystem& sys, double r2, double mu);
// state (eps1, r1, y1, z1)
VectorField chart1_vector_field(const SlowFastSystem& sys, double mu);

} // namespace canard
