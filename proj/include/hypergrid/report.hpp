#pragma once

#include "hypergrid/context.hpp"
#include "hypergrid/rational.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace hypergrid {

/// Outcome of one calculus check, serialized as a versioned JSON record.
struct CheckReport {
    static constexpr int schema_version = 1;

    std::string check;
    std::vector<std::uint64_t> grids;
    ObservationContext context;
    std::uint64_t samples = 0;
    Rational max_gap;
    std::string tolerance;
    bool pass = true;
    nlohmann::json details = nlohmann::json::object();

    std::string verdict() const { return pass ? "pass" : "fail"; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema"] = schema_version;
        j["check"] = check;
        j["grids"] = grids;
        j["context"] = {{"H", context.h()}, {"K", context.k()}};
        j["samples"] = samples;
        j["max_gap"] = max_gap.str();
        j["tolerance"] = tolerance;
        j["verdict"] = verdict();
        if (!details.empty()) j["details"] = details;
        return j;
    }
};

}  // namespace hypergrid
