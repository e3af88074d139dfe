#include "canard_lab/blowup_charts.hpp"

#include <cmath>
#include <stdexcept>

namespace canard {

ChartFields make_chart_fields(const SlowFastSystem& sys)
{
    const auto& amb = sys.field_polynomials();
    const int n = 5;
    ChartFields cf;
    {
        Polynomial x2 = Polynomial::variable(n, kX2), y2 = Polynomial::variable(n, kY2);
        Polynomial z2 = Polynomial::variable(n, kZ2), r2 = Polynomial::variable(n, kR2);
        Polynomial mu = Polynomial::variable(n, kMu2);
        std::vector<Polynomial> img = {r2 * r2 * x2, r2 * y2, r2 * z2, r2 * r2, mu};
        cf.chart2[0] = amb[0].substitute(img).divide_by_var_power(kR2, 3);
        cf.chart2[1] = amb[1].substitute(img).divide_by_var_power(kR2, 2);
        cf.chart2[2] = amb[2].substitute(img).divide_by_var_power(kR2, 2);
        std::vector<Polynomial> scale = {x2, y2, z2, r2, r2 * mu};
        for (int i = 0; i < 3; ++i) {
            cf.chart2_c[i] = CompiledPolynomial(cf.chart2[i]);
            cf.chart2_scaled[i] = cf.chart2[i].substitute(scale);
        }
        cf.chart2_scaled[1] = cf.chart2_scaled[1].divide_by_var_power(kR2, 1);
        for (int i = 0; i < 3; ++i) cf.chart2_scaled_c[i] = CompiledPolynomial(cf.chart2_scaled[i]);
    }
    {
        Polynomial e1 = Polynomial::variable(n, kE1), r1 = Polynomial::variable(n, kR1);
        Polynomial y1 = Polynomial::variable(n, kY1), z1 = Polynomial::variable(n, kZ1);
        Polynomial mu = Polynomial::variable(n, kMu1);
        std::vector<Polynomial> img = {r1 * r1 * -1.0, r1 * y1, r1 * z1, r1 * r1 * e1, mu};
        Polynomial Px = amb[0].substitute(img).divide_by_var_power(kR1, 3);
        Polynomial Py = amb[1].substitute(img).divide_by_var_power(kR1, 2);
        Polynomial Pz = amb[2].substitute(img).divide_by_var_power(kR1, 2);
        cf.chart1[0] = e1 * Px;
        cf.chart1[1] = r1 * Px * -0.5;
        cf.chart1[2] = Py + y1 * Px * 0.5;
        cf.chart1[3] = Pz + z1 * Px * 0.5;
        for (int i = 0; i < 4; ++i) cf.chart1_c[i] = CompiledPolynomial(cf.chart1[i]);
    }
    return cf;
}

std::pair<AmbientState, double> blow_down_chart1(const Chart1Point& p)
{
    return {{-p.r1 * p.r1, p.r1 * p.y1, p.r1 * p.z1}, p.r1 * p.r1 * p.eps1};
}

std::pair<AmbientState, double> blow_down_chart2(const Chart2Point& p)
{
    return {{p.r2 * p.r2 * p.x2, p.r2 * p.y2, p.r2 * p.z2}, p.r2 * p.r2};
}

Chart2Point chart1_to_chart2(const Chart1Point& p)
{
    if (!(p.eps1 > 0)) throw std::domain_error("chart1_to_chart2: eps1 must be positive");
    double s = std::sqrt(p.eps1);
    return {p.r1 * s, -1.0 / p.eps1, p.y1 / s, p.z1 / s};
}

Chart1Point chart2_to_chart1(const Chart2Point& p)
{
    if (!(p.x2 < 0)) throw std::domain_error("chart2_to_chart1: x2 must be negative");
    double s = std::sqrt(-p.x2);
    return {-1.0 / p.x2, p.r2 * s, p.y2 / s, p.z2 / s};
}

std::array<double, 3> field_chart2(const SlowFastSystem& sys, const Chart2Point& p, double mu)
{
    const auto& c = sys.charts().chart2_c;
    double v[5] = {p.x2, p.y2, p.z2, p.r2, mu};
    return {c[0](v), c[1](v), c[2](v)};
}

std::array<double, 4> field_chart1(const SlowFastSystem& sys, const Chart1Point& p, double mu)
{
    const auto& c = sys.charts().chart1_c;
    double v[5] = {p.eps1, p.r1, p.y1, p.z1, mu};
    return {c[0](v), c[1](v), c[2](v), c[3](v)};
}

VectorField chart2_vector_field(const SlowFastSystem& sys, double r2, double mu)
{
    const ChartFields* cf = &sys.charts();
    return [cf, r2, mu](double, const double* s, double* ds) {
        double v[5] = {s[0], s[1], s[2], r2, mu};
        for (int i = 0; i < 3; ++i) ds[i] = cf->chart2_c[i](v);
    };
}

VectorField chart1_vector_field(const SlowFastSystem& sys, double mu)
{
    const ChartFields* cf = &sys.charts();
    return [cf, mu](double, const double* s, double* ds) {
        double v[5] = {s[0], s[1], s[2], s[3], mu};
        for (int i = 0; i < 4; ++i) ds[i] = cf->chart1_c[i](v);
    };
}

} // namespace canard
