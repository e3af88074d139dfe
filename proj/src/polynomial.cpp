#include "canard_lab/polynomial.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace canard {

int total_degree(const Exponent& e)
{
    int d = 0;
    for (auto v : e) d += v;
    return d;
}

Polynomial::Polynomial(int nvars) : nvars_(nvars)
{
    if (nvars < 0 || nvars > kMaxVars) throw std::invalid_argument("Polynomial: bad variable count");
}

Polynomial Polynomial::constant(int nvars, double c)
{
    Polynomial p(nvars);
    p.add_term(Exponent{}, c);
    return p;
}

Polynomial Polynomial::variable(int nvars, int k)
{
    Exponent e{};
    e[k] = 1;
    return monomial(nvars, e, 1.0);
}

Polynomial Polynomial::monomial(int nvars, const Exponent& e, double c)
{
    Polynomial p(nvars);
    p.add_term(e, c);
    return p;
}

void Polynomial::add_term(const Exponent& e, double c)
{
    if (c == 0.0) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

double Polynomial::coeff(const Exponent& e) const
{
    auto it = terms_.find(e);
    return it == terms_.end() ? 0.0 : it->second;
}

int Polynomial::degree() const
{
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, total_degree(t.first));
    return d;
}

int Polynomial::degree_in(int k) const
{
    int d = 0;
    for (const auto& t : terms_) d = std::max<int>(d, t.first[k]);
    return d;
}

Polynomial Polynomial::operator+(const Polynomial& o) const
{
    Polynomial r = *this;
    r += o;
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const
{
    Polynomial r = *this;
    r -= o;
    return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o)
{
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o)
{
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
}

Polynomial Polynomial::operator*(double s) const
{
    Polynomial r(nvars_);
    if (s == 0.0) return r;
    for (const auto& [e, c] : terms_) r.terms_.emplace(e, c * s);
    return r;
}

Polynomial Polynomial::mul_truncated(const Polynomial& o, int max_degree) const
{
    Polynomial r(std::max(nvars_, o.nvars_));
    for (const auto& [e1, c1] : terms_) {
        int d1 = total_degree(e1);
        if (max_degree >= 0 && d1 > max_degree) continue;
        for (const auto& [e2, c2] : o.terms_) {
            if (max_degree >= 0 && d1 + total_degree(e2) > max_degree) continue;
            Exponent e{};
            for (int k = 0; k < kMaxVars; ++k) e[k] = static_cast<std::uint8_t>(e1[k] + e2[k]);
            r.add_term(e, c1 * c2);
        }
    }
    return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const { return mul_truncated(o, -1); }

Polynomial Polynomial::pow(int n) const
{
    Polynomial r = constant(nvars_, 1.0);
    for (int i = 0; i < n; ++i) r = r * *this;
    return r;
}

Polynomial Polynomial::truncated(int max_degree) const
{
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_)
        if (total_degree(e) <= max_degree) r.terms_.emplace(e, c);
    return r;
}

Polynomial Polynomial::homogeneous_part(int d) const
{
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_)
        if (total_degree(e) == d) r.terms_.emplace(e, c);
    return r;
}

Polynomial Polynomial::derivative(int k) const
{
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
        if (e[k] == 0) continue;
        Exponent f = e;
        f[k] -= 1;
        r.add_term(f, c * e[k]);
    }
    return r;
}

Polynomial Polynomial::divide_by_var_power(int k, int p, double tol) const
{
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
        if (e[k] < p) {
            if (std::abs(c) > tol) throw std::domain_error("divide_by_var_power: polynomial not divisible");
            continue;
        }
        Exponent f = e;
        f[k] = static_cast<std::uint8_t>(f[k] - p);
        r.add_term(f, c);
    }
    return r;
}

Polynomial Polynomial::fix(int k, double value) const
{
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
        Exponent f = e;
        f[k] = 0;
        r.add_term(f, c * std::pow(value, e[k]));
    }
    return r;
}

Polynomial Polynomial::substitute(const std::vector<Polynomial>& images, int max_degree) const
{
    if (static_cast<int>(images.size()) != nvars_) throw std::invalid_argument("substitute: image count");
    int nv = images.empty() ? 0 : images[0].nvars();
    std::vector<std::vector<Polynomial>> powers(nvars_);
    for (int k = 0; k < nvars_; ++k) {
        int d = degree_in(k);
        powers[k].push_back(constant(nv, 1.0));
        for (int j = 1; j <= d; ++j) powers[k].push_back(powers[k].back().mul_truncated(images[k], max_degree));
    }
    Polynomial r(nv);
    for (const auto& [e, c] : terms_) {
        Polynomial t = constant(nv, c);
        for (int k = 0; k < nvars_; ++k)
            if (e[k]) t = t.mul_truncated(powers[k][e[k]], max_degree);
        r += t;
    }
    return r;
}

Polynomial Polynomial::resized(int nvars) const
{
    Polynomial r(nvars);
    for (const auto& [e, c] : terms_) {
        for (int k = nvars; k < kMaxVars; ++k)
            if (e[k]) throw std::invalid_argument("resized: dropping a used variable");
        r.terms_.emplace(e, c);
    }
    return r;
}

double Polynomial::eval(std::span<const double> x) const
{
    double acc = 0.0;
    for (const auto& [e, c] : terms_) {
        double t = c;
        for (int k = 0; k < nvars_; ++k)
            for (int j = 0; j < e[k]; ++j) t *= x[k];
        acc += t;
    }
    return acc;
}

std::string Polynomial::to_string(const std::vector<std::string>& names) const
{
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (const auto& [e, c] : terms_) {
        if (!first) os << " + ";
        first = false;
        os << c;
        for (int k = 0; k < nvars_; ++k) {
            if (!e[k]) continue;
            os << "*" << names.at(k);
            if (e[k] > 1) os << "^" << int(e[k]);
        }
    }
    return os.str();
}

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) : nvars_(p.nvars())
{
    for (const auto& [e, c] : p.terms()) {
        coeffs_.push_back(c);
        for (int k = 0; k < nvars_; ++k) {
            exps_.push_back(e[k]);
            maxdeg_[k] = std::max<int>(maxdeg_[k], e[k]);
        }
    }
}

double CompiledPolynomial::operator()(const double* x) const
{
    // small power tables; degrees in chart fields are low
    double pw[kMaxVars][16];
    for (int k = 0; k < nvars_; ++k) {
        pw[k][0] = 1.0;
        int d = std::min(maxdeg_[k], 15);
        for (int j = 1; j <= d; ++j) pw[k][j] = pw[k][j - 1] * x[k];
    }
    double acc = 0.0;
    const std::uint8_t* e = exps_.data();
    for (double c : coeffs_) {
        double t = c;
        for (int k = 0; k < nvars_; ++k, ++e) {
            if (*e == 0) continue;
            if (*e < 16) t *= pw[k][*e];
            else t *= std::pow(x[k], *e);
        }
        acc += t;
    }
    return acc;
}

} // namespace canard
