#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace hypergrid {

/// Upper bounds on work the engine accepts before raising resource_error.
struct ResourceLimits {
    /// Largest grid that may be tabulated (integrals, materialization).
    std::uint64_t max_table_tau = std::uint64_t{1} << 24;
    /// Largest tau for which exp is summed literally to tau terms.
    std::uint64_t max_full_series_tau = std::uint64_t{1} << 15;
    /// Largest number of terms a countable sum may add up.
    std::uint64_t max_series_terms = std::uint64_t{1} << 20;

    /// Defaults, with HYPERGRID_MAX_TAU (if set) capping every limit.
    static ResourceLimits from_env() {
        ResourceLimits limits;
        if (const char* raw = std::getenv("HYPERGRID_MAX_TAU"); raw != nullptr && *raw != '\0') {
            std::uint64_t cap = 0;
            try {
                std::size_t used = 0;
                cap = std::stoull(raw, &used);
                if (used != std::string(raw).size()) throw std::invalid_argument(raw);
            } catch (const std::exception&) {
                throw std::invalid_argument(std::string("HYPERGRID_MAX_TAU is not an integer: ") + raw);
            }
            limits.max_table_tau = cap;
            if (limits.max_full_series_tau > cap) limits.max_full_series_tau = cap;
            if (limits.max_series_terms > cap) limits.max_series_terms = cap;
        }
        return limits;
    }
};

}  // namespace hypergrid
