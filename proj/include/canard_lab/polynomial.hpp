#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace canard {

constexpr int kMaxVars = 6;
using Exponent = std::array<std::uint8_t, kMaxVars>;

int total_degree(const Exponent& e);

// Sparse polynomial with real coefficients in a fixed number of variables.
class Polynomial {
public:
    explicit Polynomial(int nvars = 0);

    static Polynomial constant(int nvars, double c);
    static Polynomial variable(int nvars, int k);
    static Polynomial monomial(int nvars, const Exponent& e, double c);

    int nvars() const { return nvars_; }
    const std::map<Exponent, double>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const Exponent& e, double c);
    double coeff(const Exponent& e) const;
    int degree() const;
    int degree_in(int k) const;

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator*(double s) const;
    Polynomial operator-() const { return *this * -1.0; }
    Polynomial& operator+=(const Polynomial& o);
    Polynomial& operator-=(const Polynomial& o);

    // product keeping only monomials of total degree <= max_degree
    Polynomial mul_truncated(const Polynomial& o, int max_degree) const;
    Polynomial pow(int n) const;
    Polynomial truncated(int max_degree) const;
    // part homogeneous of total degree d
    Polynomial homogeneous_part(int d) const;

    Polynomial derivative(int k) const;
    // exact division by var_k^p; throws if a term is not divisible
    Polynomial divide_by_var_power(int k, int p, double tol = 1e-12) const;
    // replace variable k by a numeric value (variable count unchanged)
    Polynomial fix(int k, double value) const;
    // composition: variable i -> images[i]; all images share a variable count
    Polynomial substitute(const std::vector<Polynomial>& images, int max_degree = -1) const;
    // reinterpret in a different number of variables (extra vars unused / dropped vars must be absent)
    Polynomial resized(int nvars) const;

    double eval(std::span<const double> x) const;

    template <class T>
    T eval_generic(const std::vector<T>& x, const T& one) const;

    std::string to_string(const std::vector<std::string>& names) const;

private:
    int nvars_;
    std::map<Exponent, double> terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

// Flattened polynomial for fast repeated numeric evaluation.
class CompiledPolynomial {
public:
    CompiledPolynomial() = default;
    explicit CompiledPolynomial(const Polynomial& p);
    double operator()(const double* x) const;
    int nvars() const { return nvars_; }

private:
    int nvars_ = 0;
    std::vector<double> coeffs_;
    std::vector<std::uint8_t> exps_;
    std::array<int, kMaxVars> maxdeg_{};
};

template <class T>
T Polynomial::eval_generic(const std::vector<T>& x, const T& one) const
{
    std::array<std::vector<T>, kMaxVars> powers;
    for (int k = 0; k < nvars_; ++k) {
        int d = degree_in(k);
        powers[k].reserve(d + 1);
        powers[k].push_back(one);
        for (int j = 1; j <= d; ++j) powers[k].push_back(powers[k].back() * x[k]);
    }
    T acc = one * 0.0;
    for (const auto& [e, c] : terms_) {
        T term = one * c;
        for (int k = 0; k < nvars_; ++k)
            if (e[k]) term = term * powers[k][e[k]];
        acc = acc + term;
    }
    return acc;
}

} // namespace canard
