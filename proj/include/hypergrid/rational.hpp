#pragma once

// Exact rational numbers. Every value in the engine is one of these; there is
// no floating point anywhere on the computation path.

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hypergrid {

using BigInt = mpz_class;

/// Thrown when a computation would need more memory or time than the
/// configured resource limits allow.
class resource_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline BigInt big(std::uint64_t v) {
    BigInt r;
    mpz_import(r.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
    return r;
}

inline BigInt big_signed(std::int64_t v) {
    BigInt r = big(v < 0 ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v));
    if (v < 0) r = -r;
    return r;
}

/// Canonical fraction p/q with q > 0 and gcd(|p|, q) = 1.
class Rational {
public:
    Rational() = default;
    Rational(int v) : value_(v) {}  // NOLINT(google-explicit-constructor)
    Rational(long v) : value_(v) {}  // NOLINT(google-explicit-constructor)
    Rational(long long v) : value_(big_signed(v)) {}  // NOLINT(google-explicit-constructor)
    Rational(unsigned long v) : value_(v) {}  // NOLINT(google-explicit-constructor)
    Rational(unsigned long long v) : value_(big(v)) {}  // NOLINT(google-explicit-constructor)
    Rational(const BigInt& v) : value_(v) {}  // NOLINT(google-explicit-constructor)

    Rational(const BigInt& num, const BigInt& den) {
        if (den == 0) throw std::domain_error("rational with zero denominator: " + num.get_str() + "/0");
        value_ = mpq_class(num, den);
        value_.canonicalize();
    }

    static Rational from_mpq(mpq_class v) {
        v.canonicalize();
        Rational r;
        r.value_ = std::move(v);
        return r;
    }

    /// Accepts "p/q", signed integers, and exact decimals such as "-0.37".
    static Rational parse(std::string_view text);

    BigInt numerator() const { return value_.get_num(); }
    BigInt denominator() const { return value_.get_den(); }
    const mpq_class& mpq() const { return value_; }

    bool is_zero() const { return sgn(value_) == 0; }
    bool is_integer() const { return value_.get_den() == 1; }
    int sign() const { return sgn(value_); }

    /// Canonical "p/q" text; integers are written without the "/1".
    std::string str() const { return value_.get_str(); }

    /// Fixed-point decimal rounded half away from zero to `digits` places.
    std::string decimal(unsigned digits) const;

    Rational& operator+=(const Rational& o) { value_ += o.value_; return *this; }
    Rational& operator-=(const Rational& o) { value_ -= o.value_; return *this; }
    Rational& operator*=(const Rational& o) { value_ *= o.value_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.is_zero()) throw std::domain_error("division by zero: " + str() + " / 0");
        value_ /= o.value_;
        return *this;
    }

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
    friend Rational operator-(const Rational& a) { return from_mpq(-a.value_); }

    friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.value_, b.value_) == 0; }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        const int c = cmp(a.value_, b.value_);
        return c < 0 ? std::strong_ordering::less
                     : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    mpq_class value_{0};
};

enum class ArithOp { Add, Sub, Mul, Div };

inline Rational rational_arith(const Rational& a, const Rational& b, ArithOp op) {
    switch (op) {
        case ArithOp::Add: return a + b;
        case ArithOp::Sub: return a - b;
        case ArithOp::Mul: return a * b;
        case ArithOp::Div: return a / b;
    }
    throw std::logic_error("unknown arithmetic operation");
}

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

/// Largest integer not above r.
inline BigInt floor(const Rational& r) {
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), r.mpq().get_num_mpz_t(), r.mpq().get_den_mpz_t());
    return q;
}

/// Smallest integer not below r.
inline BigInt ceil(const Rational& r) {
    BigInt q;
    mpz_cdiv_q(q.get_mpz_t(), r.mpq().get_num_mpz_t(), r.mpq().get_den_mpz_t());
    return q;
}

inline Rational pow(const Rational& base, unsigned long exponent) {
    BigInt num, den;
    mpz_pow_ui(num.get_mpz_t(), base.mpq().get_num_mpz_t(), exponent);
    mpz_pow_ui(den.get_mpz_t(), base.mpq().get_den_mpz_t(), exponent);
    return Rational::from_mpq(mpq_class(num, den));
}

inline const Rational& min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline const Rational& max(const Rational& a, const Rational& b) { return a < b ? b : a; }

inline std::uint64_t to_u64(const BigInt& v) {
    if (sgn(v) < 0 || mpz_sizeinbase(v.get_mpz_t(), 2) > 64)
        throw std::range_error("integer does not fit in 64 bits: " + v.get_str());
    std::uint64_t out = 0;
    mpz_export(&out, nullptr, 1, sizeof(out), 0, 0, v.get_mpz_t());
    return out;
}

namespace detail {

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

inline BigInt parse_integer(std::string_view s) {
    return BigInt(std::string(s), 10);
}

}  // namespace detail

inline Rational Rational::parse(std::string_view text) {
    const auto bad = [&] { return std::invalid_argument("malformed rational literal: \"" + std::string(text) + "\""); };
    std::string_view s = text;
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    Rational out;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        auto num = s.substr(0, slash);
        auto den = s.substr(slash + 1);
        if (!detail::all_digits(num) || !detail::all_digits(den)) throw bad();
        BigInt d = detail::parse_integer(den);
        if (d == 0) throw std::domain_error("rational literal with zero denominator: \"" + std::string(text) + "\"");
        out = Rational(detail::parse_integer(num), d);
    } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
        auto whole = s.substr(0, dot);
        auto frac = s.substr(dot + 1);
        if (whole.empty() && frac.empty()) throw bad();
        if ((!whole.empty() && !detail::all_digits(whole)) || (!frac.empty() && !detail::all_digits(frac))) throw bad();
        BigInt scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
        BigInt w = whole.empty() ? BigInt(0) : detail::parse_integer(whole);
        BigInt f = frac.empty() ? BigInt(0) : detail::parse_integer(frac);
        out = Rational(w * scale + f, scale);
    } else {
        if (!detail::all_digits(s)) throw bad();
        out = Rational(detail::parse_integer(s));
    }
    return negative ? -out : out;
}

inline std::string Rational::decimal(unsigned digits) const {
    BigInt scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, digits);
    const BigInt num = abs(value_.get_num()) * scale;
    const BigInt den = value_.get_den();
    BigInt q, r;
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (2 * r >= den) q += 1;
    std::string digits_text = q.get_str();
    if (digits_text.size() <= digits) digits_text.insert(0, digits + 1 - digits_text.size(), '0');
    std::string out;
    if (sgn(value_) < 0 && q != 0) out.push_back('-');
    out += digits_text.substr(0, digits_text.size() - digits);
    if (digits > 0) {
        out.push_back('.');
        out += digits_text.substr(digits_text.size() - digits);
    }
    return out;
}

}  // namespace hypergrid

template <>
struct std::hash<hypergrid::Rational> {
    std::size_t operator()(const hypergrid::Rational& r) const noexcept {
        return std::hash<std::string>{}(r.str());
    }
};
