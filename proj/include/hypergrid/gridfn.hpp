#pragma once

// Rational-valued functions on a grid.
//
// A GridFunction is an evaluation rule, not a table: grids of 10^12 points
// are routine and only the points a check actually touches are computed.
// Optional certificates travel with the rule:
//   modulus           continuity modulus of f itself
//   quotient_modulus  continuity modulus of the difference quotient of f
//   bound             sup |f| over the grid
// Certificates are claims checked by construction (compiled expressions,
// built-ins) or by the propagation rules in the combinators below.

#include "hypergrid/context.hpp"
#include "hypergrid/grid.hpp"
#include "hypergrid/limits.hpp"
#include "hypergrid/modulus.hpp"
#include "hypergrid/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hypergrid {

class GridFunction {
public:
    using Rule = std::function<Rational(const GridPoint&)>;

    GridFunction(GridSpec spec, Rule rule, std::string name = "f")
        : spec_(std::move(spec)), rule_(std::move(rule)), name_(std::move(name)) {}

    const GridSpec& spec() const { return spec_; }
    const std::string& name() const { return name_; }
    const std::optional<Modulus>& modulus() const { return modulus_; }
    const std::optional<Modulus>& quotient_modulus() const { return quotient_modulus_; }
    const std::optional<Rational>& bound() const { return bound_; }
    bool cached() const { return cache_ != nullptr; }

    GridFunction with_modulus(std::optional<Modulus> m) const { auto f = *this; f.modulus_ = std::move(m); return f; }
    GridFunction with_quotient_modulus(std::optional<Modulus> m) const {
        auto f = *this;
        f.quotient_modulus_ = std::move(m);
        return f;
    }
    GridFunction with_bound(std::optional<Rational> b) const { auto f = *this; f.bound_ = std::move(b); return f; }
    GridFunction with_name(std::string name) const { auto f = *this; f.name_ = std::move(name); return f; }

    /// Memoize evaluations. The table is shared by copies of the returned
    /// function and is safe under concurrent evaluation.
    GridFunction with_cache() const {
        auto f = *this;
        f.cache_ = std::make_shared<MemoTable>();
        return f;
    }

    Rational operator()(const GridPoint& x) const {
        if (!(x.spec() == spec_))
            throw std::domain_error("grid mismatch: function " + name_ + " lives on tau=" + std::to_string(spec_.tau()) +
                                    ", point " + x.str() + " on tau=" + std::to_string(x.spec().tau()));
        if (!cache_) return rule_(x);
        {
            std::lock_guard lock(cache_->mutex);
            if (auto it = cache_->values.find(x.index()); it != cache_->values.end()) return it->second;
        }
        Rational value = rule_(x);
        std::lock_guard lock(cache_->mutex);
        return cache_->values.try_emplace(x.index(), std::move(value)).first->second;
    }

    Rational at(std::uint64_t index) const { return (*this)(GridPoint(index, spec_)); }

private:
    struct MemoTable {
        std::mutex mutex;
        std::unordered_map<std::uint64_t, Rational> values;
    };

    GridSpec spec_;
    Rule rule_;
    std::string name_;
    std::optional<Modulus> modulus_;
    std::optional<Modulus> quotient_modulus_;
    std::optional<Rational> bound_;
    std::shared_ptr<MemoTable> cache_;
};

inline Rational evaluate(const GridFunction& f, const GridPoint& x) { return f(x); }

/// f(x+) - f(x)
inline Rational difference(const GridFunction& f, const GridPoint& x) {
    const GridPoint next = successor(x);
    return f(next) - f(x);
}

/// (f(x+) - f(x)) / e
inline Rational difference_quotient(const GridFunction& f, const GridPoint& x) {
    return difference(f, x) * Rational(big(f.spec().tau()));
}

/// Tabulate f on the whole grid.
inline std::vector<Rational> materialize(const GridFunction& f, const ResourceLimits& limits = ResourceLimits::from_env()) {
    const std::uint64_t tau = f.spec().tau();
    if (tau > limits.max_table_tau)
        throw resource_error("cannot tabulate grid tau=" + std::to_string(tau) + " (limit " +
                             std::to_string(limits.max_table_tau) + ")");
    std::vector<Rational> out;
    out.reserve(tau + 1);
    for (std::uint64_t n = 0; n <= tau; ++n) out.push_back(f.at(n));
    return out;
}

// ---------------------------------------------------------------------------
// Sampling

/// Which points a non-exhaustive check visits: a seeded additive-recurrence
/// (golden ratio) sequence, all dyadic points of bounded depth, and any
/// pinned points. Grids no larger than the quasi-random budget are visited
/// exhaustively.
struct SamplingPlan {
    std::uint64_t seed = 0;
    std::uint64_t quasi_random = std::uint64_t{1} << 16;
    unsigned dyadic_depth = 12;
    std::vector<Rational> pinned;

    bool exhaustive(const GridSpec& spec) const { return spec.tau() < quasi_random; }

    /// Sorted, duplicate-free grid indices.
    std::vector<std::uint64_t> indices(const GridSpec& spec) const {
        std::vector<std::uint64_t> out;
        const std::uint64_t tau = spec.tau();
        if (exhaustive(spec)) {
            out.resize(tau + 1);
            for (std::uint64_t n = 0; n <= tau; ++n) out[n] = n;
            return out;
        }
        std::uint64_t state = start();
        for (std::uint64_t i = 0; i < quasi_random; ++i, state += golden) {
            const auto scaled = static_cast<unsigned __int128>(state) * (static_cast<unsigned __int128>(tau) + 1);
            out.push_back(static_cast<std::uint64_t>(scaled >> 64));
        }
        for (const auto& s : dyadics()) out.push_back(round_to_grid(s, spec).index());
        for (const auto& s : pinned) out.push_back(round_to_grid(s, spec).index());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// Rational points of [0,1] independent of any grid: quasi-random points
    /// m/2^64 (count points), then dyadics and pinned points.
    std::vector<Rational> real_points(std::uint64_t count) const {
        std::vector<Rational> out;
        out.reserve(count);
        const BigInt two64 = BigInt(1) << 64;
        std::uint64_t state = start();
        for (std::uint64_t i = 0; i < count; ++i, state += golden) out.emplace_back(big(state), two64);
        for (auto& s : dyadics()) out.push_back(std::move(s));
        for (const auto& s : pinned) out.push_back(s);
        return out;
    }

private:
    static constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;

    std::uint64_t start() const {
        // splitmix64 finalizer
        std::uint64_t z = seed + golden;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::vector<Rational> dyadics() const {
        std::vector<Rational> out;
        const std::uint64_t den = std::uint64_t{1} << dyadic_depth;
        for (std::uint64_t j = 0; j <= den; ++j) out.emplace_back(big(j), big(den));
        return out;
    }
};

// ---------------------------------------------------------------------------
// Indiscernibility of functions

struct FunctionComparison {
    bool indiscernible = true;
    bool exhaustive = false;
    std::uint64_t samples = 0;
    Rational max_gap;
    std::optional<std::uint64_t> witness;  // grid index of the first violation

    explicit operator bool() const { return indiscernible; }
    std::string label() const { return exhaustive ? "exhaustive" : "sampled"; }
};

/// |f(x) - g(x)| <= 1/H at every sampled x. With an exhaustive plan this
/// decides indiscernibility at the context; otherwise an accepted result is
/// only as good as the sample.
inline FunctionComparison fn_indiscernible(const GridFunction& f, const GridFunction& g,
                                           const ObservationContext& ctx, const SamplingPlan& plan = {}) {
    if (!(f.spec() == g.spec()))
        throw std::domain_error("grid mismatch: " + f.name() + " on tau=" + std::to_string(f.spec().tau()) + ", " +
                                g.name() + " on tau=" + std::to_string(g.spec().tau()));
    FunctionComparison out;
    out.exhaustive = plan.exhaustive(f.spec());
    for (std::uint64_t n : plan.indices(f.spec())) {
        const GridPoint x(n, f.spec());
        const Rational gap = abs(f(x) - g(x));
        ++out.samples;
        if (gap > out.max_gap) out.max_gap = gap;
        if (gap > ctx.resolution() && out.indiscernible) {
            out.indiscernible = false;
            out.witness = n;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transport between grids

/// A map between two grids.
struct GridMap {
    GridSpec source;
    GridSpec target;
    std::function<GridPoint(const GridPoint&)> apply;

    /// y |-> kappa_target(y), the canonical equivalence between grids.
    static GridMap rounding(const GridSpec& source, const GridSpec& target) {
        return {source, target, [target](const GridPoint& y) { return round_to_grid(embed(y), target); }};
    }

    static GridMap identity(const GridSpec& spec) {
        return {spec, spec, [](const GridPoint& y) { return y; }};
    }
};

/// Moves f from grid A to grid B: y |-> f(from_b(y)). Values are carried
/// unchanged, so this is G2 o f o G1^-1 with G2 the identity on Q.
inline GridFunction transport(const GridFunction& f, const GridMap& to_b, const GridMap& from_b) {
    if (!(to_b.source == f.spec()) || !(from_b.source == to_b.target) || !(from_b.target == f.spec()))
        throw std::invalid_argument("transport maps do not connect grid tau=" + std::to_string(f.spec().tau()) +
                                    " with tau=" + std::to_string(to_b.target.tau()));
    auto back = from_b.apply;
    GridFunction out(to_b.target, [f, back](const GridPoint& y) { return f(back(y)); },
                     f.name() + "@tau=" + std::to_string(to_b.target.tau()));
    if (f.modulus()) {
        // |back(y) - back(y')| <= |y - y'| + e_A when back rounds onto grid A.
        out = out.with_modulus(f.modulus()->shifted(f.spec().epsilon()));
    }
    return out.with_bound(f.bound());
}

/// Transport along the canonical rounding equivalences.
inline GridFunction transport(const GridFunction& f, const GridSpec& target) {
    return transport(f, GridMap::rounding(f.spec(), target), GridMap::rounding(target, f.spec()));
}

// ---------------------------------------------------------------------------
// Continuity

struct ContinuityVerdict {
    enum class Kind { Certified, SampledOk, Refuted };

    Kind kind = Kind::SampledOk;
    std::optional<std::pair<GridPoint, GridPoint>> witness;
    Rational max_jump;           // largest |f(x)-f(y)| seen on checked pairs
    std::uint64_t pairs_checked = 0;

    bool refuted() const { return kind == Kind::Refuted; }

    std::string label() const {
        switch (kind) {
            case Kind::Certified: return "certified";
            case Kind::Refuted: return "refuted";
            default: return "sampled-ok";
        }
    }
};

/// A modulus certifies continuity at (H, K) when points within 1/H^2 of each
/// other (the scale the grid step lives at) land within 1/H.
inline bool modulus_certifies(const Modulus& m, const ObservationContext& ctx) {
    return m(ctx.resolution() * ctx.resolution()) <= ctx.resolution();
}

/// Certified if a modulus is present and certifies; otherwise probes each
/// sampled x against its grid neighbours and against the farthest grid point
/// within 1/H, reporting the first pair that jumps by more than 1/H.
inline ContinuityVerdict continuity_check(const GridFunction& f, const ObservationContext& ctx,
                                          const SamplingPlan& plan = {}) {
    ContinuityVerdict out;
    if (f.modulus() && modulus_certifies(*f.modulus(), ctx)) {
        out.kind = ContinuityVerdict::Kind::Certified;
        return out;
    }
    const GridSpec& spec = f.spec();
    const std::uint64_t tau = spec.tau();
    out.kind = ContinuityVerdict::Kind::SampledOk;
    // Neighbours are only probed when the grid is finer than 1/H.
    if (tau < ctx.h()) return out;
    // Largest index offset whose distance is still <= 1/H^2, the scale the certificate test uses.
    const BigInt h = big(ctx.h());
    const std::uint64_t reach = to_u64(big(tau) / (h * h));

    std::vector<std::uint64_t> offsets{1};
    if (reach > 1) offsets.push_back(reach);
    for (std::uint64_t n : plan.indices(spec)) {
        const Rational fx = f.at(n);
        const auto probe = [&](std::uint64_t m) {
            const Rational jump = abs(f.at(m) - fx);
            ++out.pairs_checked;
            if (jump > out.max_jump) out.max_jump = jump;
            if (jump > ctx.resolution()) {
                out.kind = ContinuityVerdict::Kind::Refuted;
                out.witness.emplace(GridPoint(std::min(n, m), spec), GridPoint(std::max(n, m), spec));
                return true;
            }
            return false;
        };
        for (std::uint64_t off : offsets) {
            if (n + off <= tau && probe(n + off)) return out;
            if (n >= off && probe(n - off)) return out;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Combinators. Certificates propagate: sums add moduli, products use the
// bounded-factor rule, and difference-quotient moduli follow linearity.

inline void require_same_grid(const GridFunction& f, const GridFunction& g) {
    if (!(f.spec() == g.spec()))
        throw std::domain_error("grid mismatch: tau=" + std::to_string(f.spec().tau()) +
                                " vs tau=" + std::to_string(g.spec().tau()));
}

inline GridFunction add(const GridFunction& f, const GridFunction& g) {
    require_same_grid(f, g);
    GridFunction out(f.spec(), [f, g](const GridPoint& x) { return f(x) + g(x); }, "(" + f.name() + " + " + g.name() + ")");
    if (f.modulus() && g.modulus()) out = out.with_modulus(*f.modulus() + *g.modulus());
    if (f.quotient_modulus() && g.quotient_modulus())
        out = out.with_quotient_modulus(*f.quotient_modulus() + *g.quotient_modulus());
    if (f.bound() && g.bound()) out = out.with_bound(*f.bound() + *g.bound());
    return out;
}

inline GridFunction scale(const Rational& c, const GridFunction& f) {
    GridFunction out(f.spec(), [c, f](const GridPoint& x) { return c * f(x); }, c.str() + "*" + f.name());
    if (f.modulus()) out = out.with_modulus(c * *f.modulus());
    if (f.quotient_modulus()) out = out.with_quotient_modulus(c * *f.quotient_modulus());
    if (f.bound()) out = out.with_bound(abs(c) * *f.bound());
    return out;
}

inline GridFunction multiply(const GridFunction& f, const GridFunction& g) {
    require_same_grid(f, g);
    GridFunction out(f.spec(), [f, g](const GridPoint& x) { return f(x) * g(x); }, f.name() + "*" + g.name());
    if (f.bound() && g.bound()) {
        out = out.with_bound(*f.bound() * *g.bound());
        // |fg(x) - fg(y)| <= |f(x)| |g(x)-g(y)| + |g(y)| |f(x)-f(y)|
        if (f.modulus() && g.modulus())
            out = out.with_modulus(*f.bound() * *g.modulus() + *g.bound() * *f.modulus());
    }
    return out;
}

/// x |-> outer(f(x)) for an outer map on Q with its own modulus.
inline GridFunction compose(std::function<Rational(const Rational&)> outer, std::optional<Modulus> outer_modulus,
                            const GridFunction& f, std::string name) {
    GridFunction out(f.spec(), [outer, f](const GridPoint& x) { return outer(f(x)); }, std::move(name));
    if (outer_modulus && f.modulus()) out = out.with_modulus(Modulus::compose(*outer_modulus, *f.modulus()));
    return out;
}

}  // namespace hypergrid
