#include "canard_lab/system_model.hpp"

#include "canard_lab/blowup_charts.hpp"
#include "canard_lab/log.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

namespace canard {

struct SlowFastSystem::Slot {
    std::once_flag once;
    std::unique_ptr<ChartFields> charts;
};

std::string to_string(FoldedType t)
{
    switch (t) {
    case FoldedType::node: return "node";
    case FoldedType::saddle: return "saddle";
    case FoldedType::focus: return "focus";
    case FoldedType::degenerate: return "degenerate";
    }
    return "?";
}

std::string monomial_to_string(const Exponent& e)
{
    static const char* names[] = {"x", "y", "z", "eps", "mu"};
    std::ostringstream os;
    os << "{";
    for (int k = 0; k < kAmbientVars; ++k) os << (k ? ", " : "") << names[k] << ":" << int(e[k]);
    os << "}";
    return os.str();
}

std::string SlowFastSystem::check_F(const Exponent& e)
{
    if (e[kX] >= 1 || e[kEps] >= 1 || e[kY] + e[kZ] >= 2) return {};
    return "violates F = O(x, eps, (|y|+|z|)^2)";
}

std::string SlowFastSystem::check_G(const Exponent& e)
{
    if (e[kX] + e[kY] + e[kZ] + e[kEps] == 0) return "violates G = O(x, y, z, eps)";
    if (e[kMu] == 0 && e[kX] == 0 && e[kEps] == 0 && e[kY] + e[kZ] == 1)
        return "linear y or z term belongs in a1/a2";
    return {};
}

std::string SlowFastSystem::check_H(const Exponent& e)
{
    bool ok = (e[kX] >= 1 && (e[kZ] >= 1 || e[kY] >= 1)) || e[kZ] >= 2 || e[kEps] >= 1;
    return ok ? std::string{} : "violates H = O(xz, xy, z^2, eps)";
}

SlowFastSystem::SlowFastSystem(double a1, double a2, Polynomial F, Polynomial G_higher, Polynomial H)
    : a1_(a1), a2_(a2), F_(F.resized(kAmbientVars)), Gh_(G_higher.resized(kAmbientVars)),
      H_(H.resized(kAmbientVars)), slot_(std::make_shared<Slot>())
{
    if (!std::isfinite(a1) || !std::isfinite(a2)) throw ConfigError("a1, a2 must be finite");
    auto check = [](const Polynomial& p, const char* name, std::string (*fn)(const Exponent&)) {
        for (const auto& [e, c] : p.terms()) {
            if (!std::isfinite(c)) throw ConfigError(std::string(name) + " monomial " + monomial_to_string(e) + " has a non-finite coefficient");
            std::string why = fn(e);
            if (!why.empty()) throw ConfigError(std::string(name) + " monomial " + monomial_to_string(e) + " " + why);
        }
    };
    check(F_, "F", &check_F);
    check(Gh_, "G", &check_G);
    check(H_, "H", &check_H);

    const int n = kAmbientVars;
    Polynomial x = Polynomial::variable(n, kX), y = Polynomial::variable(n, kY), z = Polynomial::variable(n, kZ);
    Polynomial eps = Polynomial::variable(n, kEps), mu = Polynomial::variable(n, kMu);
    Polynomial one = Polynomial::constant(n, 1.0);
    field_[0] = eps * (y - (mu + one) * z + F_);
    field_[1] = eps * (mu * 0.5 + G());
    field_[2] = x + z * z + z * H_;
    for (int i = 0; i < 3; ++i) field_c_[i] = CompiledPolynomial(field_[i]);
    Polynomial V = (x + z * z + z * H_).fix(kEps, 0.0);
    V_ = CompiledPolynomial(V);
    slow_x_ = CompiledPolynomial((y - (mu + one) * z + F_).fix(kEps, 0.0));
    slow_y_ = CompiledPolynomial((mu * 0.5 + G()).fix(kEps, 0.0));
    Vx_ = CompiledPolynomial(V.derivative(kX));
    Vy_ = CompiledPolynomial(V.derivative(kY));
    Vz_ = CompiledPolynomial(V.derivative(kZ));
}

SlowFastSystem SlowFastSystem::canonical(double a1, double a2)
{
    return SlowFastSystem(a1, a2, Polynomial(kAmbientVars), Polynomial(kAmbientVars), Polynomial(kAmbientVars));
}

Polynomial SlowFastSystem::G() const
{
    const int n = kAmbientVars;
    return Polynomial::variable(n, kY) * a1_ + Polynomial::variable(n, kZ) * a2_ + Gh_;
}

std::array<int, 3> SlowFastSystem::truncation_degrees() const
{
    return {F_.degree(), G().degree(), H_.degree()};
}

std::array<double, 3> SlowFastSystem::eval_field(const double* v) const
{
    return {field_c_[0](v), field_c_[1](v), field_c_[2](v)};
}

const ChartFields& SlowFastSystem::charts() const
{
    std::call_once(slot_->once, [this] { slot_->charts = std::make_unique<ChartFields>(make_chart_fields(*this)); });
    return *slot_->charts;
}

// ---------------------------------------------------------------- JSON

static Polynomial table_from_json(const nlohmann::json& j, const char* key)
{
    Polynomial p(kAmbientVars);
    if (!j.contains(key)) return p;
    const auto& arr = j.at(key);
    if (!arr.is_array()) throw ConfigError(std::string(key) + " must be an array of monomials");
    static const char* names[] = {"x", "y", "z", "eps", "mu"};
    for (const auto& m : arr) {
        if (!m.is_object() || !m.contains("coeff")) throw ConfigError(std::string(key) + ": monomial needs 'coeff'");
        Exponent e{};
        if (m.contains("vars")) {
            const auto& v = m.at("vars");
            if (!v.is_object()) throw ConfigError(std::string(key) + ": 'vars' must be an object");
            for (auto it = v.begin(); it != v.end(); ++it) {
                int slot = -1;
                for (int k = 0; k < kAmbientVars; ++k)
                    if (it.key() == names[k]) slot = k;
                if (slot < 0) throw ConfigError(std::string(key) + ": unknown variable '" + it.key() + "'");
                if (!it.value().is_number_integer() || it.value().get<int>() < 0 || it.value().get<int>() > 20)
                    throw ConfigError(std::string(key) + ": exponent of '" + it.key() + "' must be an integer in [0,20]");
                e[slot] = static_cast<std::uint8_t>(it.value().get<int>());
            }
        }
        if (!m.at("coeff").is_number()) throw ConfigError(std::string(key) + " monomial " + monomial_to_string(e) + ": coeff must be a number");
        double c = m.at("coeff").get<double>();
        if (p.coeff(e) != 0.0) throw ConfigError(std::string(key) + " monomial " + monomial_to_string(e) + " listed twice");
        p.add_term(e, c);
        if (c == 0.0) continue;
    }
    return p;
}

SlowFastSystem system_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw ConfigError("system definition must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        if (k != "a1" && k != "a2" && k != "F" && k != "G" && k != "H")
            throw ConfigError("unknown system key '" + k + "'");
    }
    double a1 = 0.0, a2 = 1.0;
    if (j.contains("a1")) {
        if (!j["a1"].is_number()) throw ConfigError("a1 must be a number");
        a1 = j["a1"].get<double>();
    }
    if (j.contains("a2")) {
        if (!j["a2"].is_number()) throw ConfigError("a2 must be a number");
        a2 = j["a2"].get<double>();
    }
    return SlowFastSystem(a1, a2, table_from_json(j, "F"), table_from_json(j, "G"), table_from_json(j, "H"));
}

nlohmann::json system_to_json(const SlowFastSystem& sys)
{
    static const char* names[] = {"x", "y", "z", "eps", "mu"};
    auto table = [](const Polynomial& p) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [e, c] : p.terms()) {
            nlohmann::json vars = nlohmann::json::object();
            for (int k = 0; k < kAmbientVars; ++k)
                if (e[k]) vars[names[k]] = int(e[k]);
            arr.push_back({{"vars", vars}, {"coeff", c}});
        }
        return arr;
    };
    return {{"a1", sys.a1()}, {"a2", sys.a2()}, {"F", table(sys.F())}, {"G", table(sys.G_higher())}, {"H", table(sys.H())}};
}

// ---------------------------------------------------------------- operations

std::array<double, 3> eval_fast_field(const SlowFastSystem& sys, const AmbientState& s, const Params& p)
{
    double v[5] = {s.x, s.y, s.z, p.eps, p.mu};
    return sys.eval_field(v);
}

double critical_manifold_x(const SlowFastSystem& sys, double y, double z, double mu, double tol)
{
    double x = -z * z;
    double v[5] = {x, y, z, 0.0, mu};
    for (int it = 0; it < 50; ++it) {
        v[0] = x;
        double r = sys.V_(v);
        if (std::abs(r) <= tol) return x;
        double d = sys.Vx_(v);
        if (std::abs(d) < 1e-12) break;
        x -= r / d;
    }
    v[0] = x;
    if (std::abs(sys.V_(v)) <= std::max(tol, 1e-13)) return x;
    throw SolverError("critical_manifold_x: Newton failed at (y,z)=(" + std::to_string(y) + "," + std::to_string(z) + ")");
}

std::array<double, 2> eval_reduced_field(const SlowFastSystem& sys, double y, double z, double mu)
{
    double x = critical_manifold_x(sys, y, z, mu);
    double v[5] = {x, y, z, 0.0, mu};
    double Vx = sys.Vx_(v);
    double mz = -sys.Vz_(v) / Vx;
    double my = -sys.Vy_(v) / Vx;
    double fx = sys.slow_x_(v);
    double fy = sys.slow_y_(v);
    // x = m(y,z): x' = m_y y' + m_z z', time rescaled by m_z
    return {mz * fy, fx - my * fy};
}

double reduced_factor_L(const SlowFastSystem& sys, double y, double z, double mu)
{
    if (z == 0.0) throw std::domain_error("reduced_factor_L: z must be nonzero");
    double x = critical_manifold_x(sys, y, z, mu);
    double v[5] = {x, y, z, 0.0, mu};
    double mz = -sys.Vz_(v) / sys.Vx_(v);
    return -mz / (2 * z) - 1.0;
}

std::array<std::array<double, 2>, 2> folded_jacobian(const SlowFastSystem& sys, double mu)
{
    const double h = 1e-6;
    std::array<std::array<double, 2>, 2> J{};
    auto yp = eval_reduced_field(sys, h, 0, mu), ym = eval_reduced_field(sys, -h, 0, mu);
    auto zp = eval_reduced_field(sys, 0, h, mu), zm = eval_reduced_field(sys, 0, -h, mu);
    for (int i = 0; i < 2; ++i) {
        J[i][0] = (yp[i] - ym[i]) / (2 * h);
        J[i][1] = (zp[i] - zm[i]) / (2 * h);
    }
    return J;
}

FoldedType classify_folded_singularity(const SlowFastSystem& sys, double mu)
{
    auto J = folded_jacobian(sys, mu);
    double tr = J[0][0] + J[1][1];
    double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    double disc = tr * tr - 4 * det;
    double scale = std::max(1.0, std::abs(tr));
    if (std::abs(det) <= 1e-9 * scale * scale) return FoldedType::degenerate;
    if (disc < 0) return FoldedType::focus;
    return det > 0 ? FoldedType::node : FoldedType::saddle;
}

double lambda_of(const SlowFastSystem& sys)
{
    double l = sys.a1() + sys.a2();
    if (std::abs(l) < 1e-8) log::warn("lambda = a1 + a2 is (numerically) zero; the standing assumption lambda != 0 fails");
    return l;
}

} // namespace canard
