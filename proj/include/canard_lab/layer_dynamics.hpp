#pragma once

#include "canard_lab/blowup_charts.hpp"
#include "canard_lab/numerics.hpp"

#include <complex>
#include <ostream>

namespace canard {

enum class SheetType { attracting, repelling, degenerate };
std::string to_string(SheetType t);

struct LayerOrbit {
    double h = 0.0;
    double period = 0.0;
    double H_drift = 0.0;     // max |H - H(start)| / |H(start)| over the samples
    Trajectory samples{2};    // (x2, z2)
};

// (x2 + z2^2 - 1/2) exp(2 x2), conserved by the layer problem at y2 = 0
double first_integral(double x2, double z2);

// d/dt of the polynomial factor: zero iff H is conserved; built from the chart field of sys
Polynomial first_integral_rate(const SlowFastSystem& sys);

Chart2Point strong_canard_point(double mu, double t2);

// layer field at y2 = 0, r2 = 0, mu = 0 on (x2, z2)
VectorField layer_field();

LayerOrbit periodic_orbit(double h, const Tolerances& tol);

// Jacobian of (x2', z2') in (x2, z2) along the critical manifold (-y2^2, y2), r2 = mu = 0
std::array<std::array<double, 2>, 2> layer_linearization(const SlowFastSystem& sys, double y2);
std::array<std::complex<double>, 2> layer_eigenvalues(const SlowFastSystem& sys, double y2);

SheetType classify_C2(double y2);

void write_orbit_csv(const LayerOrbit& orbit, std::ostream& os);

} // namespace canard
