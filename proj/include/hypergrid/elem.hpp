#pragma once

// Elementary functions built from exact series:
//   exp(q, tau) = sum_{i=0}^{tau} q^i / i!
//   log(q, tau) = (1/tau) max{ k : exp(k/tau, tau) <= q, |k| <= tau^2 }
// and countable sums of nonnegative terms, stabilized by doubling probes.

#include "hypergrid/context.hpp"
#include "hypergrid/limits.hpp"
#include "hypergrid/rational.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

namespace hypergrid {

/// Horner evaluation of sum_i coefficients[i] * x^i.
inline Rational poly_eval(std::span<const Rational> coefficients, const Rational& x) {
    Rational acc;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * x + *it;
    return acc;
}

struct TruncationPolicy {
    enum class Mode { FullTau, TailBounded };

    Mode mode = Mode::TailBounded;
    /// Tail-bounded sums stop once the remaining tail is provably < 1/(tau * 2^guard).
    unsigned guard = 64;

    static TruncationPolicy full() { return {Mode::FullTau, 64}; }
    static TruncationPolicy tail(unsigned guard = 64) { return {Mode::TailBounded, guard}; }

    std::string label() const { return mode == Mode::FullTau ? "full" : "tail"; }
};

/// Running state of a series: partial_sum is the exact sum of terms
/// 0..term_index - 1, and last_term is term term_index - 1.
struct SeriesState {
    Rational partial_sum;
    std::uint64_t term_index = 0;
    Rational last_term;
};

namespace detail {

/// sum_{i=0}^{n} x^i / i! for x = p/d, by integer Horner steps:
/// v_n = 1, v_{i-1} = 1 + x v_i / i, carried as A/B with no gcd until the end.
inline Rational exp_partial_sum(const Rational& x, std::uint64_t n) {
    const BigInt p = x.numerator();
    const BigInt d = x.denominator();
    BigInt a = 1;
    BigInt b = 1;
    BigInt scaled;
    for (std::uint64_t i = n; i >= 1; --i) {
        scaled = b * d;
        mpz_mul_ui(scaled.get_mpz_t(), scaled.get_mpz_t(), i);
        a = scaled + p * a;
        b = scaled;
    }
    return Rational(a, b);
}

/// Smallest n >= 2*ceil|q| whose geometric tail bound
/// 2 |q|^{n+1} / (n+1)! is below 1/(tau 2^guard), capped at tau.
inline std::uint64_t exp_tail_stop(const Rational& q, std::uint64_t tau, unsigned guard) {
    const BigInt c = ceil(abs(q));
    if (c == 0) return 0;
    const BigInt start_big = 2 * c;
    if (start_big >= big(tau)) return tau;
    std::uint64_t n = to_u64(start_big);
    BigInt threshold = 2 * big(tau);
    mpz_mul_2exp(threshold.get_mpz_t(), threshold.get_mpz_t(), guard);
    BigInt power;  // c^{n+1}
    mpz_pow_ui(power.get_mpz_t(), c.get_mpz_t(), n + 1);
    BigInt fact;   // (n+1)!
    mpz_fac_ui(fact.get_mpz_t(), n + 1);
    while (n < tau && power * threshold >= fact) {
        ++n;
        power *= c;
        mpz_mul_ui(fact.get_mpz_t(), fact.get_mpz_t(), n + 1);
    }
    return n;
}

}  // namespace detail

/// Number of series terms beyond i = 0 that exp_approx will sum.
inline std::uint64_t exp_terms(const Rational& q, std::uint64_t tau, const TruncationPolicy& policy) {
    return policy.mode == TruncationPolicy::Mode::FullTau ? tau : detail::exp_tail_stop(q, tau, policy.guard);
}

/// exp(q, tau). Full mode sums all tau + 1 terms; tail mode stops early and
/// differs from the full sum by less than 1/(tau 2^guard).
inline Rational exp_approx(const Rational& q, std::uint64_t tau, const TruncationPolicy& policy = {},
                           const ResourceLimits& limits = ResourceLimits::from_env()) {
    if (tau == 0) throw std::domain_error("exp needs tau >= 1");
    const std::uint64_t n = exp_terms(q, tau, policy);
    if (n > limits.max_full_series_tau)
        throw resource_error("exp(" + q.str() + ", tau=" + std::to_string(tau) + ") needs " + std::to_string(n) +
                             " series terms (limit " + std::to_string(limits.max_full_series_tau) +
                             "); use the tail-bounded policy");
    return detail::exp_partial_sum(q, n);
}

/// log(q, tau) by exponential then binary search over k in [0, tau^2]; the
/// search is sound because exp(., tau) increases on q >= 0. Arguments below
/// 1 go through log(q) = -log(1/q).
inline Rational log_approx(const Rational& q, std::uint64_t tau, const TruncationPolicy& policy = {},
                           const ResourceLimits& limits = ResourceLimits::from_env()) {
    if (q.sign() <= 0) throw std::domain_error("log of non-positive value " + q.str());
    if (q < Rational(1)) return -log_approx(Rational(1) / q, tau, policy, limits);

    const BigInt tau_big = big(tau);
    const BigInt k_max = tau_big * tau_big;
    const auto fits = [&](const BigInt& k) { return exp_approx(Rational(k, tau_big), tau, policy, limits) <= q; };

    BigInt lo = 0;  // exp(0) = 1 <= q
    BigInt hi = 1;
    while (fits(hi)) {
        if (hi == k_max)
            throw std::range_error("log(" + q.str() + ", tau=" + std::to_string(tau) +
                                   ") exceeds the search range |k| <= tau^2");
        lo = hi;
        hi = 2 * hi;
        if (hi > k_max) hi = k_max;
    }
    while (hi - lo > 1) {
        BigInt mid = (lo + hi) / 2;
        if (fits(mid))
            lo = mid;
        else
            hi = mid;
    }
    return Rational(lo, tau_big);
}

// ---------------------------------------------------------------------------
// Countable sums

/// The probe schedule ran out before the partial sums settled or diverged.
struct Unstable {
    SeriesState state;
    std::uint64_t last_probe = 0;
    Rational last_change;
    bool resource_capped = false;  // the cap came from ResourceLimits, not the caller
};

using SumOutcome = std::variant<ExtendedReal, Unstable>;

namespace detail {

inline Rational tree_sum(const std::function<Rational(std::uint64_t)>& term, std::uint64_t lo, std::uint64_t hi,
                         Rational& last_term) {
    if (hi - lo <= 16) {
        Rational acc;
        for (std::uint64_t i = lo; i < hi; ++i) {
            Rational t = term(i);
            if (t.sign() < 0)
                throw std::domain_error("countable sum needs nonnegative terms; term " + std::to_string(i) + " = " +
                                        t.str());
            acc += t;
            if (i + 1 == hi) last_term = std::move(t);
        }
        return acc;
    }
    const std::uint64_t mid = lo + (hi - lo) / 2;
    Rational left = tree_sum(term, lo, mid, last_term);
    return left + tree_sum(term, mid, hi, last_term);
}

}  // namespace detail

/// Sum of terms(0), terms(1), ... probed at m = 2, 4, 8, ... <= cap. The sum
/// is infinite once a partial sum exceeds K, and finite once two consecutive
/// doublings each move it by at most 1/(4H).
inline SumOutcome countable_sum(const std::function<Rational(std::uint64_t)>& terms, const ObservationContext& ctx,
                                std::uint64_t cap, const ResourceLimits& limits = ResourceLimits::from_env()) {
    const bool capped_by_limits = limits.max_series_terms < cap;
    const std::uint64_t effective_cap = capped_by_limits ? limits.max_series_terms : cap;
    const Rational calm_threshold = ctx.resolution() / Rational(4);

    SeriesState state;
    Rational last_change;
    int calm = 0;
    bool first = true;
    for (std::uint64_t m = 2; m <= effective_cap; m *= 2) {
        const Rational before = state.partial_sum;
        state.partial_sum += detail::tree_sum(terms, state.term_index, m, state.last_term);
        state.term_index = m;
        if (state.partial_sum > ctx.bound()) return ExtendedReal::plus_infinity(ctx);
        if (!first) {
            last_change = state.partial_sum - before;
            calm = last_change <= calm_threshold ? calm + 1 : 0;
            if (calm >= 2) return real_from_rational(state.partial_sum, ctx);
        }
        first = false;
        if (m > effective_cap / 2) break;
    }
    return Unstable{state, state.term_index, last_change, capped_by_limits};
}

// ---------------------------------------------------------------------------
// Extended-real wrappers

inline ExtendedReal exp_real(const ExtendedReal& x, std::uint64_t tau, const TruncationPolicy& policy = {},
                             const ResourceLimits& limits = ResourceLimits::from_env()) {
    switch (x.kind()) {
        case ExtendedReal::Kind::PlusInfinity: return x;
        case ExtendedReal::Kind::MinusInfinity: return real_from_rational(Rational(0), x.context());
        default: return real_from_rational(exp_approx(x.representative(), tau, policy, limits), x.context());
    }
}

inline ExtendedReal log_real(const ExtendedReal& x, std::uint64_t tau, const TruncationPolicy& policy = {},
                             const ResourceLimits& limits = ResourceLimits::from_env()) {
    switch (x.kind()) {
        case ExtendedReal::Kind::PlusInfinity: return x;
        case ExtendedReal::Kind::MinusInfinity: throw std::domain_error("log of -inf");
        default: break;
    }
    const Rational& q = x.representative();
    if (q.sign() <= 0 || is_infinitesimal(q, x.context()))
        throw std::domain_error("log needs a positive non-infinitesimal argument, got " + q.str());
    return real_from_rational(log_approx(q, tau, policy, limits), x.context());
}

}  // namespace hypergrid
