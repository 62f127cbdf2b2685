// hypergrid: command-line front end for the grid calculus engine.
//
//   hypergrid eval "x^2 + 1/3" --tau 1000 --at 1/2
//   hypergrid diff "x^2" --tau 1000000 --at 1/2
//   hypergrid integrate "x" --tau 10 --at 1
//   hypergrid check ftc "x^2" --tau 65536 --H 1000
//   hypergrid sum geometric:1/2 --H 1000

#include "hypergrid/job.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct RawFlags {
    std::string function;
    std::string file;
    std::string at;
    std::string exp_mode = "tail";
    std::vector<std::string> domain;
};

void add_common(CLI::App& cmd, hypergrid::JobConfig& job, RawFlags& raw, bool takes_function = true) {
    if (takes_function) {
        cmd.add_option("function", raw.function, "expression in x, or a built-in name (square, identity, const, exp, log, step)");
        cmd.add_option("--file", raw.file, "read the expression from a file");
    }
    cmd.add_option("--tau", job.tau, "grid resolution (points n/tau)");
    cmd.add_option("--tau2", job.tau2, "second grid for grid-independence (default 3*tau)");
    cmd.add_option("--H", job.h, "infinitesimal scale: magnitudes <= 1/H are infinitesimal")->capture_default_str();
    cmd.add_option("--K", job.k, "finiteness bound: magnitudes > K are infinite")->capture_default_str();
    cmd.add_option("--at", raw.at, "evaluation point as an exact rational (p/q, integer or decimal)");
    cmd.add_option("--seed", job.seed, "sampling seed")->capture_default_str();
    cmd.add_option("--samples", job.samples, "quasi-random sample budget")->capture_default_str();
    cmd.add_option("--points", job.points, "real sample points for grid-independence")->capture_default_str();
    cmd.add_option("--exp-mode", raw.exp_mode, "exp truncation: full or tail")
        ->check(CLI::IsMember({"full", "tail"}))
        ->capture_default_str();
    cmd.add_option("--guard", job.policy.guard, "tail-bounded guard bits")->capture_default_str();
    cmd.add_option("--sum-cap", job.sum_cap, "largest probe index for countable sums")->capture_default_str();
    cmd.add_option("--domain", raw.domain, "work on [a,b] instead of [0,1]")->expected(2);
    cmd.add_option("--digits", job.digits, "decimal digits in printed values")->capture_default_str();
    cmd.add_option("--threads", job.threads, "threads for exact summation (0: all cores)")->capture_default_str();
    cmd.add_flag("--json", job.json, "print values as JSON");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact hyperfinite-grid calculus"};
    app.require_subcommand(1);
    hypergrid::JobConfig job;
    RawFlags raw;

    for (const char* name : {"eval", "diff", "integrate"}) {
        auto* cmd = app.add_subcommand(name, std::string(name) == "eval"        ? "value of f at --at"
                                              : std::string(name) == "diff" ? "difference quotient of f at --at"
                                                                            : "indefinite integral of f at --at");
        add_common(*cmd, job, raw);
    }
    auto* check = app.add_subcommand("check", "run a calculus check and print its JSON report");
    check->add_option("check", job.check, "ftc | grid-independence | secant | limit | continuity")->required();
    add_common(*check, job, raw);
    auto* sum = app.add_subcommand("sum", "countable sum of a named nonnegative series");
    sum->add_option("series", raw.function, "zeros | harmonic | inverse-squares | inverse-factorials | geometric:<r>")
        ->required();
    add_common(*sum, job, raw, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hypergrid::ExitUsage;
    }

    try {
        job.command = app.get_subcommands().front()->get_name();
        if (!raw.file.empty()) {
            std::ifstream in(raw.file);
            if (!in) throw std::invalid_argument("cannot read " + raw.file);
            std::stringstream buf;
            buf << in.rdbuf();
            raw.function = buf.str();
            while (!raw.function.empty() && std::isspace(static_cast<unsigned char>(raw.function.back())))
                raw.function.pop_back();
        }
        if (raw.function.empty()) throw std::invalid_argument("no function given");
        job.function = raw.function;
        if (!raw.at.empty()) job.at = hypergrid::Rational::parse(raw.at);
        job.policy.mode = raw.exp_mode == "full" ? hypergrid::TruncationPolicy::Mode::FullTau
                                                 : hypergrid::TruncationPolicy::Mode::TailBounded;
        if (!raw.domain.empty()) {
            job.domain_lo = hypergrid::Rational::parse(raw.domain[0]);
            job.domain_hi = hypergrid::Rational::parse(raw.domain[1]);
            if (!(job.domain_lo < job.domain_hi))
                throw std::invalid_argument("--domain needs a < b, got " + raw.domain[0] + " " + raw.domain[1]);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hypergrid::ExitUsage;
    }
    return hypergrid::run(job, std::cout, std::cerr);
}
