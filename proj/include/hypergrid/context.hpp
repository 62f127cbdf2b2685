#pragma once

// Observation contexts and the indiscernibility relation.
//
// A context fixes two scales: 1/H, below which a magnitude counts as
// infinitesimal, and K, above which a magnitude counts as infinite. Every
// "indiscernible" judgment in the engine is made at one context. The relation
// is a tolerance relation: reflexive and symmetric, but two steps of size 1/H
// can compose to 2/H, so it is not transitive.

#include "hypergrid/rational.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hypergrid {

class ObservationContext {
public:
    static constexpr std::uint64_t default_h = 1'000'000;
    static constexpr std::uint64_t default_k = 1'000'000'000'000;

    ObservationContext() : ObservationContext(default_h, default_k) {}

    ObservationContext(std::uint64_t h, std::uint64_t k) : h_(h), k_(k) {
        if (h < 2 || k < 2 || k < h)
            throw std::invalid_argument("observation context needs H >= 2, K >= 2, K >= H (got H=" +
                                        std::to_string(h) + ", K=" + std::to_string(k) + ")");
        resolution_ = Rational(BigInt(1), big(h));
        bound_ = Rational(big(k));
    }

    std::uint64_t h() const { return h_; }
    std::uint64_t k() const { return k_; }

    /// 1/H, the largest infinitesimal magnitude.
    const Rational& resolution() const { return resolution_; }
    /// K, the largest bounded magnitude.
    const Rational& bound() const { return bound_; }

    friend bool operator==(const ObservationContext& a, const ObservationContext& b) {
        return a.h_ == b.h_ && a.k_ == b.k_;
    }

private:
    std::uint64_t h_;
    std::uint64_t k_;
    Rational resolution_;
    Rational bound_;
};

inline bool is_infinitesimal(const Rational& q, const ObservationContext& ctx) {
    return abs(q) <= ctx.resolution();
}

inline bool is_bounded(const Rational& q, const ObservationContext& ctx) {
    return abs(q) <= ctx.bound();
}

inline bool indiscernible(const Rational& p, const Rational& q, const ObservationContext& ctx) {
    const Rational& k = ctx.bound();
    if (abs(p) <= k) return abs(p - q) <= ctx.resolution();
    if (p > k) return q > k;
    return q < -k;
}

/// A monad representative at a context, or one of the two infinities.
///
/// Infinities also remember the context they were judged at so that
/// functions like exp can map them back to finite values.
class ExtendedReal {
public:
    enum class Kind { Finite, PlusInfinity, MinusInfinity };

    static ExtendedReal plus_infinity(const ObservationContext& ctx) { return {Kind::PlusInfinity, {}, ctx}; }
    static ExtendedReal minus_infinity(const ObservationContext& ctx) { return {Kind::MinusInfinity, {}, ctx}; }

    Kind kind() const { return kind_; }
    bool is_finite() const { return kind_ == Kind::Finite; }
    const ObservationContext& context() const { return ctx_; }

    const Rational& representative() const {
        if (!is_finite()) throw std::domain_error("infinite real has no representative");
        return rep_;
    }

    std::string str() const {
        switch (kind_) {
            case Kind::PlusInfinity: return "+inf";
            case Kind::MinusInfinity: return "-inf";
            default: return "[" + rep_.str() + "]";
        }
    }

    /// Context-relative equality: finite values compare by indiscernibility.
    friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
        if (!(a.ctx_ == b.ctx_) || a.kind_ != b.kind_) return false;
        if (!a.is_finite()) return true;
        return indiscernible(a.rep_, b.rep_, a.ctx_);
    }

    friend ExtendedReal real_from_rational(const Rational& q, const ObservationContext& ctx);

private:
    ExtendedReal(Kind kind, Rational rep, ObservationContext ctx)
        : kind_(kind), rep_(std::move(rep)), ctx_(std::move(ctx)) {}

    Kind kind_;
    Rational rep_;
    ObservationContext ctx_;
};

inline ExtendedReal real_from_rational(const Rational& q, const ObservationContext& ctx) {
    if (q > ctx.bound()) return ExtendedReal::plus_infinity(ctx);
    if (q < -ctx.bound()) return ExtendedReal::minus_infinity(ctx);
    return ExtendedReal(ExtendedReal::Kind::Finite, q, ctx);
}

}  // namespace hypergrid
