#pragma once

// Continuity moduli: w(d) = c0 + c1*d + c2*d^2 + ... with nonnegative
// rational coefficients, meaning |x - y| <= d  =>  |f(x) - f(y)| <= w(d).
// Polynomials are closed under the propagation rules used by the engine
// (sums, bounded products, composition, argument shifts).

#include "hypergrid/rational.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace hypergrid {

class Modulus {
public:
    Modulus() = default;

    explicit Modulus(std::vector<Rational> coefficients) : coeffs_(std::move(coefficients)) {
        for (const auto& c : coeffs_)
            if (c.sign() < 0) throw std::invalid_argument("modulus coefficient must be nonnegative: " + c.str());
        trim();
    }

    static Modulus zero() { return Modulus{}; }
    static Modulus constant(Rational c) { return Modulus({std::move(c)}); }
    /// w(d) = slope * d
    static Modulus lipschitz(Rational slope) { return Modulus({Rational(0), std::move(slope)}); }

    const std::vector<Rational>& coefficients() const { return coeffs_; }
    bool is_zero() const { return coeffs_.empty(); }

    Rational operator()(const Rational& d) const {
        Rational acc;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * d + *it;
        return acc;
    }

    friend Modulus operator+(const Modulus& a, const Modulus& b) {
        std::vector<Rational> out(std::max(a.coeffs_.size(), b.coeffs_.size()));
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i) out[i] += a.coeffs_[i];
        for (std::size_t i = 0; i < b.coeffs_.size(); ++i) out[i] += b.coeffs_[i];
        return Modulus(std::move(out));
    }

    friend Modulus operator*(const Rational& factor, const Modulus& m) {
        const Rational f = abs(factor);
        std::vector<Rational> out = m.coeffs_;
        for (auto& c : out) c *= f;
        return Modulus(std::move(out));
    }

    friend Modulus operator*(const Modulus& a, const Modulus& b) {
        if (a.is_zero() || b.is_zero()) return zero();
        std::vector<Rational> out(a.coeffs_.size() + b.coeffs_.size() - 1);
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
        return Modulus(std::move(out));
    }

    /// (outer o inner)(d) = outer(inner(d)); valid since moduli are monotone.
    static Modulus compose(const Modulus& outer, const Modulus& inner) {
        Modulus acc;
        for (auto it = outer.coeffs_.rbegin(); it != outer.coeffs_.rend(); ++it)
            acc = acc * inner + constant(*it);
        return acc;
    }

    /// d -> w(d + shift), for functions read through a rounding map.
    Modulus shifted(const Rational& shift) const {
        return compose(*this, Modulus({abs(shift), Rational(1)}));
    }

    std::string str() const {
        if (coeffs_.empty()) return "0";
        std::string out;
        for (std::size_t i = 0; i < coeffs_.size(); ++i) {
            if (coeffs_[i].is_zero()) continue;
            if (!out.empty()) out += " + ";
            out += coeffs_[i].str();
            if (i == 1) out += "*d";
            if (i > 1) out += "*d^" + std::to_string(i);
        }
        return out;
    }

private:
    void trim() {
        while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
    }

    std::vector<Rational> coeffs_;
};

}  // namespace hypergrid
