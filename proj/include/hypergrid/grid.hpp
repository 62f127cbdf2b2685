#pragma once

// The grid [0,1]_e = { n/tau : 0 <= n <= tau } with e = 1/tau, the rounding
// map kappa(s) = [s*tau]/tau and its inclusion counterpart.

#include "hypergrid/rational.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hypergrid {

class GridSpec {
public:
    explicit GridSpec(std::uint64_t tau) : tau_(tau) {
        if (tau < 2) throw std::invalid_argument("grid resolution tau must be >= 2 (got " + std::to_string(tau) + ")");
        epsilon_ = Rational(BigInt(1), big(tau));
    }

    std::uint64_t tau() const { return tau_; }
    /// Grid step e = 1/tau.
    const Rational& epsilon() const { return epsilon_; }

    friend bool operator==(const GridSpec& a, const GridSpec& b) { return a.tau_ == b.tau_; }

private:
    std::uint64_t tau_;
    Rational epsilon_;
};

class GridPoint {
public:
    GridPoint(std::uint64_t index, GridSpec spec) : index_(index), spec_(std::move(spec)) {
        if (index_ > spec_.tau())
            throw std::domain_error("grid index " + std::to_string(index_) + " outside [0, " +
                                    std::to_string(spec_.tau()) + "]");
    }

    std::uint64_t index() const { return index_; }
    const GridSpec& spec() const { return spec_; }
    bool is_right_endpoint() const { return index_ == spec_.tau(); }

    /// Exact value index/tau.
    Rational value() const { return Rational(big(index_), big(spec_.tau())); }

    std::string str() const { return value().str(); }

    friend bool operator==(const GridPoint& a, const GridPoint& b) {
        return a.index_ == b.index_ && a.spec_ == b.spec_;
    }

private:
    std::uint64_t index_;
    GridSpec spec_;
};

inline void require_unit_interval(const Rational& s) {
    if (s.sign() < 0 || s > Rational(1))
        throw std::domain_error("point " + s.str() + " outside [0,1]");
}

/// kappa: index = integer part of s*tau.
inline GridPoint round_to_grid(const Rational& s, const GridSpec& spec) {
    require_unit_interval(s);
    const Rational scaled = s * Rational(big(spec.tau()));
    return GridPoint(to_u64(floor(scaled)), spec);
}

inline Rational embed(const GridPoint& x) { return x.value(); }

inline GridPoint successor(const GridPoint& x) {
    if (x.is_right_endpoint())
        throw std::domain_error("no successor at right endpoint " + x.str() + " of grid tau=" +
                                std::to_string(x.spec().tau()));
    return GridPoint(x.index() + 1, x.spec());
}

/// s - kappa(s); always in [0, e).
inline Rational quasi_identity_defect(const Rational& s, const GridSpec& spec) {
    return s - embed(round_to_grid(s, spec));
}

}  // namespace hypergrid
