#pragma once

// Differentiation and integration on the grid.
//
// A real function on [0,1] is represented by a grid function f read through
// the rounding map: F(s) = f(kappa(s)). Its derivative is represented by the
// difference quotient (f(x+) - f(x))/e whenever that quotient is continuous,
// and its indefinite integral by the inclusive running sum
// (Sum f dx)(u) = sum_{0 <= x <= u} f(x) e.

#include "hypergrid/context.hpp"
#include "hypergrid/grid.hpp"
#include "hypergrid/gridfn.hpp"
#include "hypergrid/limits.hpp"
#include "hypergrid/rational.hpp"
#include "hypergrid/report.hpp"

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace hypergrid {

struct RealFunctionRepr {
    GridFunction f;
    /// Set on derivatives: how continuity of the representing quotient was established.
    std::optional<ContinuityVerdict> continuity;

    explicit RealFunctionRepr(GridFunction fn) : f(std::move(fn)) {}

    const GridSpec& spec() const { return f.spec(); }
    GridPoint rounding(const Rational& s) const { return round_to_grid(s, f.spec()); }
    /// F(s) = f(kappa(s)) for s in [0,1].
    Rational operator()(const Rational& s) const { return f(rounding(s)); }
};

class not_differentiable : public std::domain_error {
public:
    not_differentiable(const std::string& message, GridPoint x, GridPoint y)
        : std::domain_error(message), witness_(std::move(x), std::move(y)) {}

    const std::pair<GridPoint, GridPoint>& witness() const { return witness_; }

private:
    std::pair<GridPoint, GridPoint> witness_;
};

/// x |-> (f(x+) - f(x))/e on [0,1)_e, continued at x = 1 by its value at 1 - e.
inline GridFunction quotient_function(const GridFunction& f) {
    GridFunction q(f.spec(),
                   [f](const GridPoint& x) {
                       return difference_quotient(f, x.is_right_endpoint() ? GridPoint(x.index() - 1, x.spec()) : x);
                   },
                   "D(" + f.name() + ")");
    return q.with_modulus(f.quotient_modulus());
}

inline RealFunctionRepr derivative(const RealFunctionRepr& repr, const ObservationContext& ctx,
                                   const SamplingPlan& plan = {}) {
    RealFunctionRepr out(quotient_function(repr.f));
    ContinuityVerdict verdict = continuity_check(out.f, ctx, plan);
    if (verdict.refuted()) {
        const auto& [x, y] = *verdict.witness;
        throw not_differentiable("not differentiable at context H=" + std::to_string(ctx.h()) + ": difference quotient of " +
                                     repr.f.name() + " jumps by " + verdict.max_jump.str() + " between " + x.str() +
                                     " and " + y.str(),
                                 x, y);
    }
    out.continuity = std::move(verdict);
    return out;
}

/// (f(x) - f(a))/(x - a) - (Df)(a)
inline Rational secant_deviation(const GridFunction& f, const GridPoint& a, const GridPoint& x) {
    if (a == x) throw std::domain_error("secant needs distinct points, got a = x = " + a.str());
    const Rational secant = (f(x) - f(a)) / (x.value() - a.value());
    return secant - difference_quotient(f, a);
}

// ---------------------------------------------------------------------------
// Integration

struct IntegralOptions {
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    ResourceLimits limits = ResourceLimits::from_env();
};

/// Running sums S(n) = f(0) + ... + f(n). Chunks are summed on separate
/// threads and joined with exact offsets, so the result does not depend on
/// the thread count.
inline std::vector<Rational> cumulative_sums(const GridFunction& f, const IntegralOptions& opt = {}) {
    const std::uint64_t tau = f.spec().tau();
    if (tau > opt.limits.max_table_tau)
        throw resource_error("integral over grid tau=" + std::to_string(tau) + " exceeds table limit " +
                             std::to_string(opt.limits.max_table_tau));
    const std::uint64_t count = tau + 1;
    std::vector<Rational> sums(count);
    const std::uint64_t chunks = std::max<std::uint64_t>(1, std::min<std::uint64_t>(opt.threads, count / 1024 + 1));
    const std::uint64_t width = (count + chunks - 1) / chunks;

    const auto local_prefix = [&](std::uint64_t c) {
        const std::uint64_t lo = c * width;
        const std::uint64_t hi = std::min(count, lo + width);
        Rational acc;
        for (std::uint64_t n = lo; n < hi; ++n) {
            acc += f.at(n);
            sums[n] = acc;
        }
    };
    const auto run_parallel = [&](const std::function<void(std::uint64_t)>& job) {
        if (chunks == 1) {
            job(0);
            return;
        }
        std::vector<std::exception_ptr> errors(chunks);
        std::vector<std::thread> workers;
        workers.reserve(chunks);
        for (std::uint64_t c = 0; c < chunks; ++c)
            workers.emplace_back([&, c] {
                try {
                    job(c);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            });
        for (auto& w : workers) w.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    };

    run_parallel(local_prefix);
    std::vector<Rational> offsets(chunks);
    for (std::uint64_t c = 1; c < chunks; ++c) offsets[c] = offsets[c - 1] + sums[std::min(count, c * width) - 1];
    run_parallel([&](std::uint64_t c) {
        if (c == 0) return;
        const std::uint64_t lo = c * width;
        const std::uint64_t hi = std::min(count, lo + width);
        for (std::uint64_t n = lo; n < hi; ++n) sums[n] += offsets[c];
    });
    return sums;
}

/// The indefinite integral u |-> sum_{0 <= x <= u} f(x) e, tabulated exactly.
inline RealFunctionRepr integral(const RealFunctionRepr& repr, const IntegralOptions& opt = {}) {
    auto table = std::make_shared<const std::vector<Rational>>(cumulative_sums(repr.f, opt));
    const Rational eps = repr.spec().epsilon();
    GridFunction s(repr.spec(), [table, eps](const GridPoint& u) { return (*table)[u.index()] * eps; },
                   "Sum(" + repr.f.name() + ")");
    if (repr.f.bound()) {
        // |S(v) - S(u)| <= B (v - u), and the quotient of S at u is f(u+).
        s = s.with_modulus(Modulus::lipschitz(*repr.f.bound())).with_bound(*repr.f.bound() + *repr.f.bound() * eps);
    }
    if (repr.f.modulus()) s = s.with_quotient_modulus(repr.f.modulus());
    return RealFunctionRepr(std::move(s));
}

/// Checks that the quotient of the integral reproduces f(u+) exactly for every
/// u in [0,1)_e, and that f(u+) is within 1/H of f(u).
inline CheckReport ftc_check(const RealFunctionRepr& repr, const ObservationContext& ctx,
                             const IntegralOptions& opt = {}) {
    const GridSpec& spec = repr.spec();
    const RealFunctionRepr integ = integral(repr, opt);
    CheckReport report;
    report.check = "ftc";
    report.grids = {spec.tau()};
    report.context = ctx;
    report.tolerance = ctx.resolution().str();

    std::uint64_t violations = 0;
    std::optional<std::uint64_t> first_violation;
    Rational max_step;
    std::uint64_t worst_step_at = 0;
    Rational f_here = repr.f.at(0);
    for (std::uint64_t n = 0; n < spec.tau(); ++n) {
        const GridPoint u(n, spec);
        const Rational f_next = repr.f.at(n + 1);
        if (difference_quotient(integ.f, u) != f_next) {
            ++violations;
            if (!first_violation) first_violation = n;
        }
        const Rational step = abs(f_next - f_here);
        if (step > max_step) {
            max_step = step;
            worst_step_at = n;
        }
        f_here = f_next;
        ++report.samples;
    }
    report.max_gap = max_step;
    report.pass = violations == 0 && max_step <= ctx.resolution();
    report.details = {{"exact_identity_violations", violations},
                      {"max_step_at", GridPoint(worst_step_at, spec).str()},
                      {"function", repr.f.name()}};
    if (first_violation) report.details["first_violation"] = GridPoint(*first_violation, spec).str();
    return report;
}

// ---------------------------------------------------------------------------
// Secants

/// Pairs with band_lo <= x - a <= 1/H, band_lo = max(4e, 1/H^2).
inline Rational exclusion_band(const GridSpec& spec, const ObservationContext& ctx) {
    return max(Rational(4) * spec.epsilon(), ctx.resolution() * ctx.resolution());
}

/// |secant_deviation(f, a, x)| against the quotient modulus w(x - a) when f
/// carries one, else against 1/H. Exhaustive over all pairs when the plan is
/// exhaustive for the grid; otherwise sampled a with doubling offsets.
inline CheckReport secant_check(const GridFunction& f, const ObservationContext& ctx, const SamplingPlan& plan = {},
                                const ResourceLimits& limits = ResourceLimits::from_env()) {
    const GridSpec& spec = f.spec();
    const std::uint64_t tau = spec.tau();
    const Rational tau_r(big(tau));
    const std::uint64_t k_lo = to_u64(ceil(exclusion_band(spec, ctx) * tau_r));
    const std::uint64_t k_hi = to_u64(floor(ctx.resolution() * tau_r));

    CheckReport report;
    report.check = "secant";
    report.grids = {tau};
    report.context = ctx;
    const auto& modulus = f.quotient_modulus();
    report.tolerance = modulus ? "quotient modulus " + modulus->str() : ctx.resolution().str();

    const bool exhaustive = plan.exhaustive(spec);
    std::vector<std::uint64_t> offsets;
    if (exhaustive) {
        for (std::uint64_t k = k_lo; k <= k_hi; ++k) offsets.push_back(k);
    } else {
        for (std::uint64_t k = k_lo; k_lo > 0 && k <= k_hi; k *= 2) offsets.push_back(k);
        if (k_hi >= k_lo && (offsets.empty() || offsets.back() != k_hi)) offsets.push_back(k_hi);
    }
    std::vector<Rational> tolerance;
    for (std::uint64_t k : offsets) tolerance.push_back(modulus ? (*modulus)(Rational(big(k), big(tau))) : ctx.resolution());

    std::optional<std::vector<Rational>> table;
    if (exhaustive && tau <= limits.max_table_tau) table = materialize(f, limits);
    const auto value = [&](std::uint64_t n) { return table ? (*table)[n] : f.at(n); };

    std::vector<std::uint64_t> anchors;
    if (exhaustive) {
        for (std::uint64_t a = 0; a < tau; ++a) anchors.push_back(a);
    } else {
        for (std::uint64_t a : plan.indices(spec))
            if (a < tau) anchors.push_back(a);
    }

    std::uint64_t violations = 0;
    Rational worst_ratio;  // largest |deviation| / tolerance seen
    for (std::uint64_t a : anchors) {
        const Rational fa = value(a);
        const Rational qa = (value(a + 1) - fa) * tau_r;
        for (std::size_t i = 0; i < offsets.size(); ++i) {
            const std::uint64_t k = offsets[i];
            if (a + k > tau) break;
            const Rational dev = abs((value(a + k) - fa) * tau_r / Rational(big(k)) - qa);
            ++report.samples;
            if (dev > report.max_gap) report.max_gap = dev;
            if (dev > tolerance[i]) {
                if (violations == 0) {
                    report.details["first_violation"] = {{"a", GridPoint(a, spec).str()},
                                                         {"x", GridPoint(a + k, spec).str()},
                                                         {"deviation", dev.str()},
                                                         {"tolerance", tolerance[i].str()}};
                }
                ++violations;
            }
            if (!tolerance[i].is_zero()) {
                const Rational ratio = dev / tolerance[i];
                if (ratio > worst_ratio) worst_ratio = ratio;
            }
        }
    }
    report.pass = violations == 0 && report.samples > 0;
    report.details["violations"] = violations;
    report.details["mode"] = exhaustive ? "exhaustive" : "sampled";
    report.details["band"] = {Rational(big(k_lo), big(tau)).str(), Rational(big(k_hi), big(tau)).str()};
    report.details["worst_ratio"] = worst_ratio.decimal(6);
    report.details["function"] = f.name();
    return report;
}

// ---------------------------------------------------------------------------
// Independence of the grid

/// Compares the derivatives of two representations of one real function at
/// sampled real points a: D1(alpha_1(a)) against D2(alpha_2(a)), alpha_i
/// rounding onto grid i. Fails early if the representations are not
/// indiscernible after transporting the second onto the first grid, or if
/// either quotient is refuted as discontinuous.
inline CheckReport grid_independence_check(const RealFunctionRepr& f1, const RealFunctionRepr& f2,
                                           const ObservationContext& ctx, const SamplingPlan& plan = {},
                                           std::uint64_t sample_count = 1024) {
    CheckReport report;
    report.check = "grid-independence";
    report.grids = {f1.spec().tau(), f2.spec().tau()};
    report.context = ctx;
    report.tolerance = (Rational(2) * ctx.resolution()).str();

    const FunctionComparison same = fn_indiscernible(f1.f, transport(f2.f, f1.spec()), ctx, plan);
    report.details["representations"] = {{"indiscernible", same.indiscernible},
                                         {"mode", same.label()},
                                         {"max_gap", same.max_gap.str()}};
    if (!same) {
        report.pass = false;
        report.max_gap = same.max_gap;
        report.details["failure"] = "representations are not indiscernible";
        return report;
    }

    std::optional<RealFunctionRepr> d1, d2;
    try {
        d1 = derivative(f1, ctx, plan);
        d2 = derivative(f2, ctx, plan);
    } catch (const not_differentiable& e) {
        report.pass = false;
        report.details["failure"] = e.what();
        return report;
    }
    report.details["continuity"] = {d1->continuity->label(), d2->continuity->label()};

    for (const Rational& a : plan.real_points(sample_count)) {
        const Rational gap = abs((*d1)(a) - (*d2)(a));
        ++report.samples;
        if (gap > report.max_gap) {
            report.max_gap = gap;
            report.details["worst_point"] = a.str();
        }
    }
    report.pass = report.max_gap <= Rational(2) * ctx.resolution();
    return report;
}

// ---------------------------------------------------------------------------
// Sequence limits

/// A rational sequence with a declared limit, validated on construction: for
/// every probe q in {1/2, 1/4, ...} down to 1/H (and 1/H itself) the last
/// `min_tail` terms before `horizon` stay within q of the limit.
class ConvergentSequence {
public:
    static constexpr std::uint64_t min_tail = 4;

    ConvergentSequence(std::function<Rational(std::uint64_t)> rule, Rational declared_limit, ObservationContext ctx,
                       std::uint64_t horizon)
        : rule_(std::move(rule)), limit_(std::move(declared_limit)), ctx_(std::move(ctx)), horizon_(horizon) {
        if (horizon_ < min_tail) throw std::domain_error("sequence horizon must cover at least " + std::to_string(min_tail) + " terms");
        std::vector<Rational> probes;
        for (Rational q(BigInt(1), BigInt(2)); q >= ctx_.resolution(); q /= Rational(2)) probes.push_back(q);
        probes.push_back(ctx_.resolution());
        for (const Rational& q : probes) {
            for (std::uint64_t i = horizon_ - min_tail; i <= horizon_; ++i) {
                const Rational gap = abs((*this)(i) - limit_);
                if (gap > q)
                    throw std::domain_error("sequence does not settle within " + q.str() + " of " + limit_.str() +
                                            ": term " + std::to_string(i) + " = " + (*this)(i).str());
            }
        }
    }

    /// t_i = 2^-i, converging to 0, probed far enough to pass below 1/H.
    static ConvergentSequence dyadic(const ObservationContext& ctx) {
        const std::uint64_t horizon = 2 * mpz_sizeinbase(big(ctx.h()).get_mpz_t(), 2) + 8;
        return ConvergentSequence(
            [](std::uint64_t i) {
                BigInt den = 1;
                mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), i);
                return Rational(BigInt(1), den);
            },
            Rational(0), ctx, horizon);
    }

    Rational operator()(std::uint64_t i) const { return rule_(i); }
    const Rational& declared_limit() const { return limit_; }
    const ObservationContext& context() const { return ctx_; }
    std::uint64_t horizon() const { return horizon_; }

private:
    std::function<Rational(std::uint64_t)> rule_;
    Rational limit_;
    ObservationContext ctx_;
    std::uint64_t horizon_;
};

struct LimitProbe {
    std::uint64_t index;
    Rational t;        // sequence term
    Rational step;     // t rounded onto the grid
    Rational quotient; // (f(x + step) - f(x)) / step
    Rational deviation;
    bool included;     // inside the band and the grid
};

struct LimitResult {
    Rational target;  // (Df)(x)
    std::vector<LimitProbe> probes;
    Rational max_deviation;
    std::uint64_t included = 0;
    bool pass = false;
};

/// Difference quotients (f(x + t) - f(x))/t along a sequence t -> 0, with
/// each t rounded onto the grid so that x + t is a grid point. Probes with t
/// outside [max(4e, 1/H^2), 1/H] or x + t > 1 are excluded; the rest must
/// lie within 2/H of (Df)(x).
inline LimitResult limit_quotient(const RealFunctionRepr& repr, const GridPoint& x, const ConvergentSequence& seq,
                                  const ObservationContext& ctx) {
    if (!seq.declared_limit().is_zero())
        throw std::domain_error("limit quotient needs a sequence tending to 0, got limit " + seq.declared_limit().str());
    const GridSpec& spec = repr.spec();
    const Rational lo = exclusion_band(spec, ctx);
    const Rational& hi = ctx.resolution();
    const Rational tol = Rational(2) * ctx.resolution();
    LimitResult out;
    out.target = quotient_function(repr.f)(x);
    const Rational fx = repr.f(x);
    for (std::uint64_t i = 0; i <= seq.horizon(); ++i) {
        LimitProbe p{i, seq(i), {}, {}, {}, false};
        if (p.t.sign() <= 0) throw std::domain_error("sequence term " + std::to_string(i) + " = " + p.t.str() + " is not positive");
        if (p.t >= lo && p.t <= hi && p.t <= Rational(1)) {
            const GridPoint offset = round_to_grid(p.t, spec);
            if (offset.index() > 0 && x.index() + offset.index() <= spec.tau()) {
                p.step = offset.value();
                p.quotient = (repr.f.at(x.index() + offset.index()) - fx) / p.step;
                p.deviation = abs(p.quotient - out.target);
                p.included = true;
                ++out.included;
                if (p.deviation > out.max_deviation) out.max_deviation = p.deviation;
            }
        }
        out.probes.push_back(std::move(p));
    }
    out.pass = out.included > 0 && out.max_deviation <= tol;
    return out;
}

inline CheckReport limit_report(const RealFunctionRepr& repr, const GridPoint& x, const ConvergentSequence& seq,
                                const ObservationContext& ctx) {
    const LimitResult r = limit_quotient(repr, x, seq, ctx);
    CheckReport report;
    report.check = "limit";
    report.grids = {repr.spec().tau()};
    report.context = ctx;
    report.samples = r.included;
    report.max_gap = r.max_deviation;
    report.tolerance = (Rational(2) * ctx.resolution()).str();
    report.pass = r.pass;
    report.details["at"] = x.str();
    report.details["difference_quotient"] = r.target.str();
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& p : r.probes)
        if (p.included) probes.push_back({{"t", p.t.str()}, {"step", p.step.str()}, {"deviation", p.deviation.str()}});
    report.details["probes"] = probes;
    if (r.included == 0) report.details["failure"] = "no sequence term fell inside the band";
    return report;
}

inline CheckReport continuity_report(const GridFunction& f, const ObservationContext& ctx, const SamplingPlan& plan = {}) {
    const ContinuityVerdict v = continuity_check(f, ctx, plan);
    CheckReport report;
    report.check = "continuity";
    report.grids = {f.spec().tau()};
    report.context = ctx;
    report.samples = v.pairs_checked;
    report.max_gap = v.max_jump;
    report.tolerance = ctx.resolution().str();
    report.pass = !v.refuted();
    report.details["status"] = v.label();
    report.details["function"] = f.name();
    if (f.modulus()) report.details["modulus"] = f.modulus()->str();
    if (v.witness) report.details["witness"] = {v.witness->first.str(), v.witness->second.str()};
    return report;
}

}  // namespace hypergrid
