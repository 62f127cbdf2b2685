// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "hypergrid/builtin.hpp"
#include "hypergrid/calculus.hpp"
#include "hypergrid/elem.hpp"
#include "hypergrid/expr.hpp"
#include "hypergrid/job.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace hypergrid;

namespace {

Rational frac(long n, long d) { return Rational(BigInt(n), BigInt(d)); }

struct Verdict {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Verdict()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v{false, ""};
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    std::printf("criterion %d %s  %s  (%s; %.1fs)\n", id, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.c_str(),
                secs);
    std::fflush(stdout);
}

Rational random_rational(std::mt19937_64& rng, long lo, long hi, long den) {
    return frac(std::uniform_int_distribution<long>(lo * den, hi * den)(rng), den);
}

// Independent exp oracle: explicit powers over explicit factorials.
Rational oracle_exp(const Rational& q, unsigned n) {
    Rational sum;
    for (unsigned i = 0; i <= n; ++i) {
        BigInt fact;
        mpz_fac_ui(fact.get_mpz_t(), i);
        sum += pow(q, i) / Rational(fact);
    }
    return sum;
}

std::string join(const std::vector<std::string>& parts) {
    std::string s;
    for (const auto& p : parts) s += (s.empty() ? "" : "; ") + p;
    return s;
}

}  // namespace

int main() {
    std::printf("acceptance: exact rational engine, one line per criterion\n");

    criterion(1, "exact FTC kernel at tau=2^16", [] {
        const ObservationContext ctx(1000, 1'000'000);
        const Rational tolerance = frac(1, 1000);
        const GridSpec spec(std::uint64_t{1} << 16);
        bool ok = true;
        std::vector<std::string> parts;
        for (const char* text : {"x^2", "x^3 - x/2", "exp(x)", "x*exp(x)"}) {
            const CheckReport r = ftc_check(RealFunctionRepr(compile(text, spec)), ctx);
            const auto violations = r.details["exact_identity_violations"].get<std::uint64_t>();
            ok = ok && violations == 0 && r.samples == spec.tau() && r.max_gap <= tolerance;
            parts.push_back(std::string(text) + ": violations " + std::to_string(violations) + ", max step " +
                            r.max_gap.decimal(8));
        }
        return Verdict{ok, join(parts)};
    });

    criterion(2, "grid independence of derivatives, H=10^3", [] {
        const ObservationContext ctx(1000, 1'000'000);
        const Rational tolerance = Rational(2) * ctx.resolution();
        const std::uint64_t min_points = 1000;
        SamplingPlan plan;
        plan.seed = 2;
        bool ok = true;
        std::vector<std::string> parts;
        for (const char* text : {"x^2", "exp(x)"}) {
            for (const auto& [t1, t2] : {std::pair<std::uint64_t, std::uint64_t>{10'000, 30'000}, {10'000, 100'000}}) {
                const CheckReport r = grid_independence_check(RealFunctionRepr(compile(text, GridSpec(t1))),
                                                              RealFunctionRepr(compile(text, GridSpec(t2))), ctx, plan,
                                                              min_points);
                ok = ok && r.pass && r.samples >= min_points && r.max_gap <= tolerance;
                parts.push_back(std::string(text) + " " + std::to_string(t1) + "/" + std::to_string(t2) + ": gap " +
                                r.max_gap.decimal(6) + " over " + std::to_string(r.samples));
            }
        }
        return Verdict{ok, join(parts)};
    });

    criterion(3, "secant agreement, exhaustive at tau=2^12, H=2^6", [] {
        const ObservationContext ctx(64, 1'000'000);
        const GridSpec spec(std::uint64_t{1} << 12);
        std::uint64_t pairs = 0, violations = 0;
        std::vector<std::string> parts;
        bool ok = true;
        for (const char* text : {"x", "x^2", "x^3 - x/2", "exp(x)", "x*exp(x)"}) {
            const GridFunction f = compile(text, spec);
            if (!f.quotient_modulus()) return Verdict{false, std::string(text) + " has no registered modulus"};
            const CheckReport r = secant_check(f, ctx);
            ok = ok && r.pass && r.details["mode"] == "exhaustive";
            pairs += r.samples;
            violations += r.details["violations"].get<std::uint64_t>();
            parts.push_back(std::string(text) + " worst ratio " + r.details["worst_ratio"].get<std::string>());
        }
        return Verdict{ok && violations == 0, std::to_string(pairs) + " pairs, " + std::to_string(violations) +
                                                   " violations; " + join(parts)};
    });

    criterion(4, "sequence limits of quotients, tau=10^6, H=10^3, 100 points", [] {
        const ObservationContext ctx(1000, 1'000'000);
        const Rational tolerance = Rational(2) * ctx.resolution();
        const GridSpec spec(1'000'000);
        const ConvergentSequence seq = ConvergentSequence::dyadic(ctx);
        std::mt19937_64 rng(4);
        // Keep x + 1/H on the grid so every band probe is usable.
        std::uniform_int_distribution<std::uint64_t> idx(0, spec.tau() - spec.tau() / ctx.h());
        std::vector<GridPoint> xs;
        for (int i = 0; i < 100; ++i) xs.emplace_back(idx(rng), spec);
        bool ok = true;
        std::vector<std::string> parts;
        for (const char* text : {"x^2", "exp(x)"}) {
            const RealFunctionRepr repr(compile(text, spec));
            Rational worst;
            std::uint64_t probes = 0;
            for (const GridPoint& x : xs) {
                const LimitResult r = limit_quotient(repr, x, seq, ctx);
                ok = ok && r.pass && r.max_deviation <= tolerance;
                probes += r.included;
                worst = max(worst, r.max_deviation);
            }
            parts.push_back(std::string(text) + ": " + std::to_string(probes) + " probes, max deviation " +
                            worst.decimal(6));
        }
        return Verdict{ok, join(parts)};
    });

    criterion(5, "rounding map is a quasi-identity, tau=2^10 over a 2^20-point mesh", [] {
        const GridSpec spec(std::uint64_t{1} << 10);
        const std::uint64_t mesh = std::uint64_t{1} << 20;
        const BigInt mesh_den = big(mesh - 1);
        std::uint64_t bad_defect = 0, bad_idempotent = 0;
        for (std::uint64_t m = 0; m < mesh; ++m) {
            const Rational s(big(m), mesh_den);
            const GridPoint k = round_to_grid(s, spec);
            const Rational defect = s - k.value();
            if (defect.sign() < 0 || defect >= spec.epsilon()) ++bad_defect;
            if (round_to_grid(embed(k), spec) != k) ++bad_idempotent;
        }
        return Verdict{bad_defect == 0 && bad_idempotent == 0,
                       std::to_string(mesh) + " points, defect violations " + std::to_string(bad_defect) +
                           ", idempotence violations " + std::to_string(bad_idempotent)};
    });

    criterion(6, "exp/log laws at tau=10^3, H=10^2, full series", [] {
        const ObservationContext ctx(100, 1'000'000);
        const std::uint64_t tau = 1000;
        const Rational law_tol = ctx.resolution();
        const Rational log_tol = frac(2, 1000) + ctx.resolution();
        const auto policy = TruncationPolicy::full();
        std::mt19937_64 rng(6);
        Rational worst_law, worst_log;
        for (int i = 0; i < 100; ++i) {
            const Rational p = random_rational(rng, -2, 2, 1'000'000);
            const Rational q = random_rational(rng, -2, 2, 1'000'000);
            worst_law = max(worst_law, abs(exp_approx(p + q, tau, policy) -
                                           exp_approx(p, tau, policy) * exp_approx(q, tau, policy)));
            worst_log = max(worst_log, abs(log_approx(exp_approx(q, tau, policy), tau, policy) - q));
        }
        const bool oracle = exp_approx(Rational(1), 20, policy) == oracle_exp(Rational(1), 20);
        return Verdict{worst_law <= law_tol && worst_log <= log_tol && oracle,
                       "max |exp(p+q)-exp(p)exp(q)| " + worst_law.decimal(12) + ", max |log(exp(q))-q| " +
                           worst_log.decimal(6) + ", exp(1,20) oracle " + (oracle ? "exact" : "MISMATCH")};
    });

    criterion(7, "countable sums", [] {
        const ObservationContext ctx;
        const std::uint64_t cap = std::uint64_t{1} << 20;
        bool ok = true;
        std::vector<std::string> parts;
        for (const auto& [num, den] : {std::pair<long, long>{1, 2}, {1, 3}, {9, 10}}) {
            const Rational r = frac(num, den);
            const Rational closed = Rational(1) / (Rational(1) - r);
            const SumOutcome s = countable_sum([&](std::uint64_t i) { return pow(r, i); }, ctx, cap);
            const auto* real = std::get_if<ExtendedReal>(&s);
            const bool good = real && real->is_finite() && abs(real->representative() - closed) <= ctx.resolution();
            ok = ok && good;
            parts.push_back("ratio " + r.str() + (good ? " ok" : " off"));
        }
        const auto harmonic = [](std::uint64_t i) { return Rational(BigInt(1), big(i + 1)); };
        for (const ObservationContext& c : {ctx, ObservationContext(10, 10)}) {
            const SumOutcome s = countable_sum(harmonic, c, ~std::uint64_t{0});
            const auto* real = std::get_if<ExtendedReal>(&s);
            const bool finite = real && real->is_finite();
            ok = ok && !finite;
            parts.push_back("harmonic at K=" + std::to_string(c.k()) + ": " +
                            (finite ? "FINITE" : real ? "+inf" : "unstable"));
        }
        const SumOutcome z = countable_sum([](std::uint64_t) { return Rational(0); }, ctx, cap);
        const auto* zr = std::get_if<ExtendedReal>(&z);
        const bool zero = zr && zr->is_finite() && zr->representative().is_zero();
        parts.push_back(zero ? "zeros exactly 0" : "zeros NOT 0");
        return Verdict{ok && zero, join(parts)};
    });

    criterion(8, "transport roundtrip between tau=10^4 and 3*10^4, H=10^3", [] {
        const ObservationContext ctx(1000, 1'000'000);
        const Rational tolerance = Rational(2) * ctx.resolution();
        const GridSpec a(10'000), b(30'000);
        const GridFunction f = builtin::square(a);
        const GridFunction back = transport(transport(f, b), a);
        Rational worst;
        for (std::uint64_t n = 0; n <= a.tau(); ++n) worst = max(worst, abs(back.at(n) - f.at(n)));
        return Verdict{worst <= tolerance, std::to_string(a.tau() + 1) + " points, max gap " + worst.decimal(8)};
    });

    criterion(9, "determinism of reports and of parallel summation", [] {
        std::vector<std::string> parts;
        bool ok = true;
        for (const char* check : {"ftc", "grid-independence", "secant", "limit", "continuity"}) {
            JobConfig job;
            job.command = "check";
            job.check = check;
            job.function = "x*exp(x)";
            job.tau = 20'000;
            job.h = 1000;
            job.seed = 1234;
            job.samples = 4096;
            job.at = frac(1, 3);
            std::string first;
            bool same = true;
            for (int run_index = 0; run_index < 3; ++run_index) {
                std::ostringstream out, err;
                run(job, out, err);
                if (run_index == 0) first = out.str();
                else same = same && out.str() == first && !first.empty();
            }
            ok = ok && same;
            parts.push_back(std::string(check) + (same ? " identical" : " DIFFERS"));
        }
        const GridFunction f = compile("x*exp(x)", GridSpec(std::uint64_t{1} << 16));
        IntegralOptions serial, parallel;
        serial.threads = 1;
        parallel.threads = 8;
        const bool sums_equal = cumulative_sums(f, serial) == cumulative_sums(f, parallel);
        parts.push_back(sums_equal ? "serial == parallel sums" : "serial != parallel sums");
        return Verdict{ok && sums_equal, join(parts)};
    });

    std::printf("acceptance: %d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
