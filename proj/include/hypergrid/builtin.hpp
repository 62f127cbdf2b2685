#pragma once

// Named functions on a grid, with the certificates each one can honestly
// carry.

#include "hypergrid/expr.hpp"
#include "hypergrid/gridfn.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hypergrid::builtin {

inline GridFunction identity(const GridSpec& spec) {
    return GridFunction(spec, [](const GridPoint& x) { return x.value(); }, "identity")
        .with_modulus(Modulus::lipschitz(Rational(1)))
        .with_quotient_modulus(Modulus::zero())
        .with_bound(Rational(1));
}

/// x^2 with |x^2 - y^2| <= 2|x-y| + |x-y|^2 on [0,1]; its quotient 2x + e
/// has modulus 2d.
inline GridFunction square(const GridSpec& spec) {
    return GridFunction(spec, [](const GridPoint& x) { const Rational v = x.value(); return v * v; }, "square")
        .with_modulus(Modulus({Rational(0), Rational(2), Rational(1)}))
        .with_quotient_modulus(Modulus::lipschitz(Rational(2)))
        .with_bound(Rational(1));
}

inline GridFunction constant(const GridSpec& spec, const Rational& c) {
    return GridFunction(spec, [c](const GridPoint&) { return c; }, "const(" + c.str() + ")")
        .with_modulus(Modulus::zero())
        .with_quotient_modulus(Modulus::zero())
        .with_bound(abs(c));
}

inline GridFunction exp(const GridSpec& spec, const TruncationPolicy& policy = {}) {
    CompileOptions opt;
    opt.policy = policy;
    return compile(Expression::call(Expression::Kind::Exp, Expression::variable()), spec, opt).with_name("exp");
}

/// log on the grid; undefined at 0 and uncertified.
inline GridFunction log(const GridSpec& spec, const TruncationPolicy& policy = {}) {
    CompileOptions opt;
    opt.policy = policy;
    return compile(Expression::call(Expression::Kind::Log, Expression::variable()), spec, opt).with_name("log");
}

/// 0 below `at`, 1 at or above it.
inline GridFunction step(const GridSpec& spec, const Rational& at = Rational(BigInt(1), BigInt(2))) {
    return GridFunction(spec, [at](const GridPoint& x) { return x.value() >= at ? Rational(1) : Rational(0); },
                        "step(" + at.str() + ")")
        .with_bound(Rational(1));
}

/// Looks up "square", "identity", "const" (value 1), "exp", "log", "step".
inline std::optional<GridFunction> by_name(std::string_view name, const GridSpec& spec,
                                           const TruncationPolicy& policy = {}) {
    if (name == "square") return square(spec);
    if (name == "identity") return identity(spec);
    if (name == "const") return constant(spec, Rational(1));
    if (name == "exp") return exp(spec, policy);
    if (name == "log") return log(spec, policy);
    if (name == "step") return step(spec);
    return std::nullopt;
}

}  // namespace hypergrid::builtin
