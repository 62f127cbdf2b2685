#pragma once

// One CLI invocation as a value: JobConfig in, exit status and report out.
// The hypergrid executable only parses flags into a JobConfig and calls run().

#include "hypergrid/builtin.hpp"
#include "hypergrid/calculus.hpp"
#include "hypergrid/elem.hpp"
#include "hypergrid/expr.hpp"
#include "hypergrid/report.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hypergrid {

enum ExitStatus : int { ExitPass = 0, ExitUsage = 1, ExitCheckFailed = 2 };

struct JobConfig {
    std::string command;   // eval | diff | integrate | check | sum
    std::string check;     // for command "check": ftc | grid-independence | secant | limit | continuity
    std::string function;  // expression text, built-in name, or (for sum) series name
    std::optional<std::uint64_t> tau;
    std::optional<std::uint64_t> tau2;
    std::uint64_t h = ObservationContext::default_h;
    std::uint64_t k = ObservationContext::default_k;
    std::optional<Rational> at;
    std::uint64_t seed = 0;
    std::uint64_t samples = std::uint64_t{1} << 16;  // quasi-random budget of the sampling plan
    std::uint64_t points = 1024;                      // real points for grid-independence
    TruncationPolicy policy{};
    std::uint64_t sum_cap = std::uint64_t{1} << 16;
    Rational domain_lo{0};
    Rational domain_hi{1};
    bool json = false;
    unsigned digits = 20;
    unsigned threads = 0;  // 0: hardware concurrency

    static constexpr std::uint64_t default_tau = 1'000'000'000'000;
    static constexpr std::uint64_t default_integral_tau = std::uint64_t{1} << 16;

    std::uint64_t effective_tau() const {
        if (tau) return *tau;
        const bool tabulating = command == "integrate" || (command == "check" && check == "ftc");
        return tabulating ? default_integral_tau : default_tau;
    }
};

namespace detail {

struct JobFunction {
    GridFunction f;
    std::string text;
};

inline JobFunction job_function(const JobConfig& job, const GridSpec& spec) {
    const bool default_domain = job.domain_lo == Rational(0) && job.domain_hi == Rational(1);
    if (job.function == "step") {
        if (!default_domain) throw std::invalid_argument("built-in step does not support --domain");
        return {builtin::step(spec), "step"};
    }
    std::string text = job.function;
    if (text == "square") text = "x^2";
    else if (text == "identity") text = "x";
    else if (text == "const") text = "1";
    else if (text == "exp") text = "exp(x)";
    else if (text == "log") text = "log(x)";
    CompileOptions opt;
    opt.policy = job.policy;
    opt.domain_lo = job.domain_lo;
    opt.domain_hi = job.domain_hi;
    return {compile(parse(text), spec, opt), text};
}

/// --at value in user coordinates -> grid variable in [0,1].
inline Rational to_unit(const JobConfig& job, const Rational& at) {
    const Rational t = (at - job.domain_lo) / (job.domain_hi - job.domain_lo);
    if (t.sign() < 0 || t > Rational(1))
        throw std::domain_error("point " + at.str() + " outside domain [" + job.domain_lo.str() + ", " +
                                job.domain_hi.str() + "]");
    return t;
}

inline const Rational& require_at(const JobConfig& job) {
    if (!job.at) throw std::invalid_argument(job.command + " needs --at <rational>");
    return *job.at;
}

inline nlohmann::json value_json(const Rational& v, unsigned digits) {
    return {{"value", v.str()}, {"decimal", v.decimal(digits)}};
}

inline int emit_value(const JobConfig& job, std::ostream& out, const std::string& kind, const Rational& point,
                      const Rational& v, std::uint64_t tau) {
    if (job.json) {
        nlohmann::json j = value_json(v, job.digits);
        j["schema"] = CheckReport::schema_version;
        j["command"] = kind;
        j["function"] = job.function;
        j["at"] = point.str();
        j["grids"] = {tau};
        out << j.dump(2) << '\n';
    } else {
        out << v.str() << '\n' << v.decimal(job.digits) << '\n';
    }
    return ExitPass;
}

inline std::function<Rational(std::uint64_t)> named_series(const std::string& name) {
    if (name == "zeros") return [](std::uint64_t) { return Rational(0); };
    if (name == "harmonic") return [](std::uint64_t i) { return Rational(BigInt(1), big(i) + 1); };
    if (name == "inverse-squares")
        return [](std::uint64_t i) { const BigInt n = big(i) + 1; return Rational(BigInt(1), n * n); };
    if (name == "inverse-factorials")
        return [](std::uint64_t i) {
            BigInt f;
            mpz_fac_ui(f.get_mpz_t(), i);
            return Rational(BigInt(1), f);
        };
    if (name.rfind("geometric:", 0) == 0) {
        const Rational r = Rational::parse(name.substr(10));
        if (r.sign() < 0) throw std::invalid_argument("geometric ratio must be nonnegative, got " + r.str());
        return [r](std::uint64_t i) { return hypergrid::pow(r, i); };
    }
    throw std::invalid_argument("unknown series '" + name +
                                "' (known: zeros, harmonic, inverse-squares, inverse-factorials, geometric:<r>)");
}

inline int run_sum(const JobConfig& job, const ObservationContext& ctx, std::ostream& out) {
    const ResourceLimits limits = ResourceLimits::from_env();
    const SumOutcome outcome = countable_sum(named_series(job.function), ctx, job.sum_cap, limits);
    nlohmann::json j;
    j["schema"] = CheckReport::schema_version;
    j["check"] = "sum";
    j["series"] = job.function;
    j["context"] = {{"H", ctx.h()}, {"K", ctx.k()}};
    j["cap"] = job.sum_cap;
    int status = ExitPass;
    if (const auto* real = std::get_if<ExtendedReal>(&outcome)) {
        if (real->is_finite()) {
            j["status"] = "finite";
            j["value"] = real->representative().str();
            j["decimal"] = real->representative().decimal(job.digits);
        } else {
            j["status"] = real->kind() == ExtendedReal::Kind::PlusInfinity ? "+inf" : "-inf";
        }
        j["verdict"] = "pass";
    } else {
        const auto& u = std::get<Unstable>(outcome);
        j["status"] = "unstable";
        j["terms"] = u.state.term_index;
        j["partial_sum_decimal"] = u.state.partial_sum.decimal(job.digits);
        j["last_change"] = u.last_change.decimal(job.digits);
        j["resource_capped"] = u.resource_capped;
        j["verdict"] = "fail";
        status = ExitCheckFailed;
    }
    out << j.dump(2) << '\n';
    return status;
}

inline int run_check(const JobConfig& job, const ObservationContext& ctx, const GridSpec& spec,
                     const SamplingPlan& plan, std::ostream& out) {
    const JobFunction fn = job_function(job, spec);
    const RealFunctionRepr repr(fn.f);
    IntegralOptions iopt;
    if (job.threads > 0) iopt.threads = job.threads;

    CheckReport report;
    if (job.check == "ftc") {
        report = ftc_check(repr, ctx, iopt);
    } else if (job.check == "grid-independence") {
        const GridSpec spec2(job.tau2 ? *job.tau2 : 3 * spec.tau());
        report = grid_independence_check(repr, RealFunctionRepr(job_function(job, spec2).f), ctx, plan, job.points);
    } else if (job.check == "secant") {
        report = secant_check(fn.f, ctx, plan);
    } else if (job.check == "limit") {
        const GridPoint x = round_to_grid(to_unit(job, require_at(job)), spec);
        report = limit_report(repr, x, ConvergentSequence::dyadic(ctx), ctx);
    } else if (job.check == "continuity") {
        report = continuity_report(fn.f, ctx, plan);
    } else {
        throw std::invalid_argument("unknown check '" + job.check +
                                    "' (known: ftc, grid-independence, secant, limit, continuity)");
    }
    nlohmann::json j = report.to_json();
    j["function"] = fn.text;
    j["seed"] = job.seed;
    out << j.dump(2) << '\n';
    return report.pass ? ExitPass : ExitCheckFailed;
}

inline std::string describe_inputs(const JobConfig& job) {
    std::string s = "function \"" + job.function + "\"";
    if (job.at) s += ", at " + job.at->str();
    s += ", tau " + std::to_string(job.effective_tau()) + ", H " + std::to_string(job.h) + ", K " + std::to_string(job.k);
    return s;
}

}  // namespace detail

/// Runs one job. Reports go to `out`, diagnostics to `err`; the return value
/// is the process exit status (0 pass, 2 check failed, 1 usage or domain error).
inline int run(const JobConfig& job, std::ostream& out, std::ostream& err) {
    try {
        const ObservationContext ctx(job.h, job.k);
        if (job.command == "sum") return detail::run_sum(job, ctx, out);

        const std::uint64_t tau = job.effective_tau();
        if (tau > ResourceLimits::from_env().max_table_tau && (job.command == "integrate" || job.check == "ftc"))
            throw resource_error("tau=" + std::to_string(tau) + " exceeds HYPERGRID_MAX_TAU / table limit " +
                                 std::to_string(ResourceLimits::from_env().max_table_tau));
        const GridSpec spec(tau);
        SamplingPlan plan;
        plan.seed = job.seed;
        plan.quasi_random = job.samples;

        if (job.command == "check") return detail::run_check(job, ctx, spec, plan, out);

        const detail::JobFunction fn = detail::job_function(job, spec);
        const Rational width = job.domain_hi - job.domain_lo;
        // A constant expression can be evaluated without a point.
        const bool constant = job.command == "eval" && !job.at && fn.text != "step" && !parse(fn.text).depends_on_x();
        const Rational at = constant ? job.domain_lo : detail::require_at(job);
        const GridPoint x = round_to_grid(detail::to_unit(job, at), spec);
        if (job.command == "eval") return detail::emit_value(job, out, "eval", at, fn.f(x), tau);
        if (job.command == "diff") {
            const Rational d = quotient_function(fn.f)(x) / width;
            return detail::emit_value(job, out, "diff", at, d, tau);
        }
        if (job.command == "integrate") {
            IntegralOptions iopt;
            if (job.threads > 0) iopt.threads = job.threads;
            const RealFunctionRepr integ = integral(RealFunctionRepr(fn.f), iopt);
            return detail::emit_value(job, out, "integrate", at, integ.f(x) * width, tau);
        }
        throw std::invalid_argument("unknown command '" + job.command + "' (known: eval, diff, integrate, check, sum)");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << " [" << detail::describe_inputs(job) << "]\n";
        return ExitUsage;
    }
}

}  // namespace hypergrid
