#include "hypergrid/builtin.hpp"
#include "hypergrid/calculus.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace hypergrid;

namespace {

Rational frac(long n, long d) { return Rational(BigInt(n), BigInt(d)); }

SamplingPlan small_plan() {
    SamplingPlan plan;
    plan.quasi_random = 1024;
    return plan;
}

// Flatness of F at grid index a: every grid x with radius < |x - a| <= 1/H
// has |F(x)| / |x - a|^n <= 1/H.
bool flat(const std::function<Rational(std::uint64_t)>& F, const GridSpec& spec, std::uint64_t a, unsigned n,
          const Rational& radius, const ObservationContext& ctx) {
    const std::uint64_t window = to_u64(floor(ctx.resolution() * Rational(spec.tau())));
    const std::uint64_t lo = a > window ? a - window : 0;
    const std::uint64_t hi = std::min(spec.tau(), a + window);
    const Rational a_val = GridPoint(a, spec).value();
    for (std::uint64_t x = lo; x <= hi; ++x) {
        const Rational d = abs(GridPoint(x, spec).value() - a_val);
        if (d <= radius) continue;
        if (abs(F(x)) / pow(d, n) > ctx.resolution()) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("derivative of x^2 is 2x + e") {
    const ObservationContext ctx;
    const GridSpec spec(1'000'000);
    const auto d = derivative(RealFunctionRepr(builtin::square(spec)), ctx);
    REQUIRE(d.continuity);
    CHECK(d.continuity->kind == ContinuityVerdict::Kind::Certified);
    CHECK(d(frac(1, 2)) == frac(1'000'001, 1'000'000));
    CHECK(indiscernible(d(frac(1, 2)), Rational(1), ctx));
    for (std::uint64_t n : {0ULL, 1ULL, 333'333ULL, 999'999ULL})
        CHECK(d.f.at(n) == Rational(2) * GridPoint(n, spec).value() + spec.epsilon());
    // Right endpoint continued by the value at 1 - e.
    CHECK(d.f.at(spec.tau()) == d.f.at(spec.tau() - 1));
}

TEST_CASE("derivative of a constant is zero") {
    const GridSpec spec(1000);
    const auto d = derivative(RealFunctionRepr(builtin::constant(spec, frac(7, 3))), ObservationContext(1000, 1000));
    for (std::uint64_t n = 0; n <= spec.tau(); ++n) REQUIRE(d.f.at(n).is_zero());
}

TEST_CASE("a jump is not differentiable") {
    const ObservationContext ctx;
    const GridSpec spec(1'000'000'000'000);
    try {
        (void)derivative(RealFunctionRepr(builtin::step(spec)), ctx, small_plan());
        FAIL("expected not_differentiable");
    } catch (const not_differentiable& e) {
        const auto& [x, y] = e.witness();
        CHECK(abs(x.value() - frac(1, 2)) <= ctx.resolution());
        CHECK(abs(y.value() - frac(1, 2)) <= ctx.resolution());
        CHECK(x.value() < frac(1, 2));
        CHECK(std::string(e.what()).find("not differentiable") != std::string::npos);
    }
}

TEST_CASE("secant deviation") {
    const GridSpec spec(1000);
    const auto sq = builtin::square(spec);
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::uint64_t> idx(0, spec.tau() - 1);
    for (int i = 0; i < 500; ++i) {
        const GridPoint a(idx(rng), spec), x(idx(rng) + 1, spec);
        if (a == x) continue;
        // (x^2 - a^2)/(x - a) - (2a + e) = x - a - e ... written out: x + a - 2a - e.
        REQUIRE(secant_deviation(sq, a, x) == x.value() + a.value() - (Rational(2) * a.value() + spec.epsilon()));
        REQUIRE(secant_deviation(builtin::identity(spec), a, x).is_zero());
        REQUIRE(secant_deviation(add(scale(frac(-3, 2), builtin::identity(spec)), builtin::constant(spec, frac(2, 7))),
                                 a, x)
                    .is_zero());
    }
    CHECK_THROWS_AS(secant_deviation(sq, GridPoint(4, spec), GridPoint(4, spec)), std::domain_error);

    const std::uint64_t h = 1000;
    const GridSpec fine(h * h);
    const GridPoint a = round_to_grid(frac(1, 4), fine);
    const GridPoint x(a.index() + h, fine);
    const Rational dev = secant_deviation(builtin::square(fine), a, x);
    CHECK(dev == x.value() - a.value() - fine.epsilon());
    CHECK(dev <= frac(1, h));
}

TEST_CASE("integral as an inclusive running sum") {
    const GridSpec spec(10);
    const auto one = integral(RealFunctionRepr(builtin::constant(spec, Rational(1))));
    for (std::uint64_t n = 0; n <= 10; ++n) CHECK(one.f.at(n) == frac(static_cast<long>(n) + 1, 10));
    const auto zero = integral(RealFunctionRepr(builtin::constant(spec, Rational(0))));
    for (std::uint64_t n = 0; n <= 10; ++n) CHECK(zero.f.at(n).is_zero());
    const auto lin = integral(RealFunctionRepr(builtin::identity(spec)));
    CHECK(lin.f.at(10) == frac(55, 100));
    CHECK(lin(Rational(1)) == frac(55, 100));

    const GridSpec big(1000);
    const ObservationContext ctx(100, 1000);
    const auto ione = integral(RealFunctionRepr(builtin::constant(big, Rational(1))));
    for (std::uint64_t n = 0; n <= 1000; n += 37) CHECK(indiscernible(ione.f.at(n), GridPoint(n, big).value(), ctx));

    IntegralOptions opt;
    opt.limits.max_table_tau = 100;
    CHECK_THROWS_AS(integral(RealFunctionRepr(builtin::identity(GridSpec(101))), opt), resource_error);
}

TEST_CASE("forward difference of the running sum is exact") {
    const GridSpec spec(4096);
    std::mt19937_64 seed_rng(9);
    const std::uint64_t salt = seed_rng();
    // An arbitrary, irregular grid function.
    const GridFunction f(spec, [salt](const GridPoint& x) {
        std::mt19937_64 rng(salt ^ x.index());
        return Rational(BigInt(static_cast<long>(rng() % 2001) - 1000), big(rng() % 997 + 1));
    });
    const auto s = integral(RealFunctionRepr(f));
    for (std::uint64_t n = 0; n < spec.tau(); ++n)
        REQUIRE(s.f.at(n + 1) - s.f.at(n) == f.at(n + 1) * spec.epsilon());
}

TEST_CASE("parallel and serial running sums agree exactly") {
    const GridSpec spec(50'000);
    const auto f = compile("x^3 - x/2", spec);
    IntegralOptions serial, parallel;
    serial.threads = 1;
    parallel.threads = 7;
    CHECK(cumulative_sums(f, serial) == cumulative_sums(f, parallel));
}

TEST_CASE("FTC check") {
    const ObservationContext ctx(1000, 1'000'000);
    const GridSpec spec(1 << 12);
    const auto r = ftc_check(RealFunctionRepr(builtin::square(spec)), ctx);
    CHECK(r.pass);
    CHECK(r.details["exact_identity_violations"] == 0);
    CHECK(r.samples == spec.tau());
    // max |(u+)^2 - u^2| = 2(1 - e)e + e^2.
    const Rational e = spec.epsilon();
    CHECK(r.max_gap == Rational(2) * (Rational(1) - e) * e + e * e);

    const auto z = ftc_check(RealFunctionRepr(builtin::constant(spec, Rational(0))), ctx);
    CHECK(z.pass);
    CHECK(z.max_gap.is_zero());

    const auto jump = ftc_check(RealFunctionRepr(builtin::step(spec)), ctx);
    CHECK_FALSE(jump.pass);
    CHECK(jump.details["exact_identity_violations"] == 0);
    CHECK(jump.max_gap == Rational(1));
}

TEST_CASE("secant check") {
    const ObservationContext ctx(32, 1'000'000);
    const GridSpec spec(1 << 10);
    const std::vector<GridFunction> suite = {builtin::square(spec), builtin::exp(spec), compile("x^3 - x/2", spec)};
    for (const auto& f : suite) {
        const auto r = secant_check(f, ctx);
        INFO(r.to_json().dump());
        CHECK(r.pass);
        CHECK(r.details["mode"] == "exhaustive");
        CHECK(r.details["violations"] == 0);
    }
    const ObservationContext wide(1000, 1'000'000);
    const auto sampled = secant_check(builtin::square(GridSpec(1'000'000)), wide, small_plan());
    CHECK(sampled.pass);
    CHECK(sampled.details["mode"] == "sampled");
    // x^2 deviates by exactly (k - 1) e at offset k, below the modulus 2ke.
    CHECK(sampled.max_gap == frac(999, 1'000'000));
}

TEST_CASE("grid independence") {
    const ObservationContext ctx(1000, 1'000'000);
    const RealFunctionRepr a(builtin::square(GridSpec(10'000)));
    const RealFunctionRepr b(builtin::square(GridSpec(30'000)));
    const auto r = grid_independence_check(a, b, ctx, small_plan(), 1000);
    CHECK(r.pass);
    CHECK(r.samples >= 1000);
    CHECK(r.max_gap < frac(4, 10'000));

    const auto same = grid_independence_check(a, a, ctx, small_plan(), 1000);
    CHECK(same.pass);
    CHECK(same.max_gap.is_zero());

    const auto bad = grid_independence_check(a, RealFunctionRepr(builtin::step(GridSpec(30'000))), ctx, small_plan());
    CHECK_FALSE(bad.pass);
    CHECK(bad.details["failure"] == "representations are not indiscernible");
}

TEST_CASE("convergent sequences validate themselves") {
    const ObservationContext ctx(1000, 1'000'000);
    const auto seq = ConvergentSequence::dyadic(ctx);
    CHECK(seq(3) == frac(1, 8));
    CHECK(seq.horizon() == 2 * 10 + 8);
    CHECK_THROWS_AS(ConvergentSequence([](std::uint64_t) { return Rational(1); }, Rational(0), ctx, 30),
                    std::domain_error);
    CHECK_THROWS_AS(ConvergentSequence([](std::uint64_t i) { return Rational(BigInt(1), big(i + 1)); }, Rational(0),
                                       ctx, 100),
                    std::domain_error);
}

TEST_CASE("sequence limits of the difference quotient") {
    const ObservationContext ctx(1000, 1'000'000);
    const GridSpec spec(1'000'000);
    const auto seq = ConvergentSequence::dyadic(ctx);
    const GridPoint x = round_to_grid(frac(1, 3), spec);

    const auto r = limit_quotient(RealFunctionRepr(builtin::square(spec)), x, seq, ctx);
    CHECK(r.pass);
    CHECK(r.target == Rational(2) * x.value() + spec.epsilon());
    CHECK(r.included > 0);
    const Rational band = exclusion_band(spec, ctx);
    bool excluded_small = false;
    for (const auto& p : r.probes) {
        if (p.t < band) {
            CHECK_FALSE(p.included);
            excluded_small = true;
        }
        // Oracle: (x + s)^2 - x^2 over s is 2x + s.
        if (p.included) CHECK(p.quotient == Rational(2) * x.value() + p.step);
    }
    CHECK(excluded_small);

    const auto lin = limit_quotient(RealFunctionRepr(builtin::identity(spec)), x, seq, ctx);
    CHECK(lin.pass);
    CHECK(lin.max_deviation.is_zero());

    // Nothing of the sequence falls inside the band near the right endpoint.
    const auto edge = limit_quotient(RealFunctionRepr(builtin::square(spec)), GridPoint(spec.tau(), spec), seq, ctx);
    CHECK(edge.included == 0);
    CHECK_FALSE(edge.pass);
}

TEST_CASE("derivative is linear") {
    const ObservationContext ctx(1000, 1'000'000);
    const GridSpec spec(1000);
    const auto f = builtin::square(spec);
    const auto g = compile("x^3 - x/2", spec);
    const Rational a = frac(-5, 3), b = frac(2, 7);
    const auto lhs = derivative(RealFunctionRepr(add(scale(a, f), scale(b, g))), ctx);
    const auto df = derivative(RealFunctionRepr(f), ctx);
    const auto dg = derivative(RealFunctionRepr(g), ctx);
    const auto rhs = add(scale(a, df.f), scale(b, dg.f));
    CHECK(fn_indiscernible(lhs.f, rhs, ctx).indiscernible);
    for (std::uint64_t n = 0; n <= spec.tau(); ++n) REQUIRE(lhs.f.at(n) == rhs.at(n));
}

TEST_CASE("flatness is invariant under indiscernible perturbation") {
    const ObservationContext ctx(10'000, 1'000'000);
    const GridSpec spec(1'000'000);
    const std::uint64_t a = 400'000;
    const std::uint64_t b = a + 3;  // d(a, b) = 3e
    const Rational dab = Rational(3) * spec.epsilon();
    const Rational ra = Rational(4) * max(spec.epsilon(), ctx.resolution() * ctx.resolution());
    const Rational rb = max(ra + dab, Rational(3) * dab);
    const Rational tiny = frac(1, 1'000'000'000) * frac(1, 1'000'000'000);
    const Rational av = GridPoint(a, spec).value();
    for (unsigned n : {1u, 2u}) {
        for (unsigned extra : {0u, 2u}) {  // 0: not flat, 2: flat
            const auto F = [&](std::uint64_t x) { return pow(GridPoint(x, spec).value() - av, n + extra); };
            const auto G = [&](std::uint64_t x) { return F(x) + tiny; };
            const bool at_a = flat(F, spec, a, n, ra, ctx);
            const bool at_b = flat(G, spec, b, n, rb, ctx);
            INFO("n=" << n << " extra=" << extra);
            CHECK(at_a == (extra > 0));
            CHECK(at_a == at_b);
        }
    }
}

TEST_CASE("flatness is invariant under grid rounding") {
    const ObservationContext ctx(10'000, 1'000'000);
    const GridSpec coarse(1'000'000), fine(2'999'999);
    const GridMap alpha = GridMap::rounding(coarse, fine);
    const std::uint64_t a = 250'001;
    const GridPoint alpha_a = alpha.apply(GridPoint(a, coarse));
    const Rational delta = fine.epsilon();  // |alpha(x) - x| < delta
    const Rational radius = Rational(4) * max(delta, coarse.epsilon());
    for (unsigned n : {1u, 2u}) {
        for (unsigned extra : {0u, 2u}) {
            const auto F = [&](std::uint64_t y) { return pow(GridPoint(y, fine).value() - alpha_a.value(), n + extra); };
            const auto F_alpha = [&](std::uint64_t x) { return F(alpha.apply(GridPoint(x, coarse)).index()); };
            const bool on_fine = flat(F, fine, alpha_a.index(), n, radius, ctx);
            const bool on_coarse = flat(F_alpha, coarse, a, n, radius, ctx);
            INFO("n=" << n << " extra=" << extra);
            CHECK(on_fine == (extra > 0));
            CHECK(on_fine == on_coarse);
        }
    }
}
