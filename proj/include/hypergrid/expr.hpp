#pragma once

// The expression language: parser, printer, and compiler to grid functions.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          exponent: constant nonnegative integer
//   atom   := number | 'x' | '(' expr ')' | ('exp' | 'log') '(' expr ')'
//
// Numbers are exact: "0.37" is the literal 37/100. A division of two literals
// and a negated literal fold into a single literal, so "1/3" is one leaf.

#include "hypergrid/elem.hpp"
#include "hypergrid/gridfn.hpp"
#include "hypergrid/rational.hpp"

#include <cctype>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hypergrid {

class parse_error : public std::invalid_argument {
public:
    parse_error(const std::string& message, std::size_t column)
        : std::invalid_argument("syntax error at column " + std::to_string(column) + ": " + message), column_(column) {}

    /// 1-based column of the offending character (one past the end for
    /// unexpected end of input).
    std::size_t column() const { return column_; }

private:
    std::size_t column_;
};

/// Raised when a compiled function cannot be evaluated at a grid point.
class evaluation_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class Expression {
public:
    enum class Kind { Literal, Variable, Neg, Add, Sub, Mul, Div, Pow, Exp, Log };

    /// Exponent cap; larger powers of grid values are not computed.
    static constexpr unsigned long max_exponent = 4096;

    static Expression literal(Rational v) { return Expression(Node{Kind::Literal, std::move(v), 0, {}, {}}); }
    static Expression variable() { return Expression(Node{Kind::Variable, {}, 0, {}, {}}); }
    static Expression neg(Expression e) { return Expression(Node{Kind::Neg, {}, 0, std::move(e.node_), {}}); }
    static Expression binary(Kind kind, Expression lhs, Expression rhs) {
        return Expression(Node{kind, {}, 0, std::move(lhs.node_), std::move(rhs.node_)});
    }
    static Expression pow(Expression base, unsigned long exponent) {
        return Expression(Node{Kind::Pow, {}, exponent, std::move(base.node_), {}});
    }
    static Expression call(Kind fn, Expression arg) { return Expression(Node{fn, {}, 0, std::move(arg.node_), {}}); }

    Kind kind() const { return node_->kind; }
    const Rational& value() const { return node_->value; }
    unsigned long exponent() const { return node_->exponent; }
    Expression lhs() const { return Expression(node_->lhs); }
    Expression rhs() const { return Expression(node_->rhs); }
    /// Operand of Neg, Exp, Log, and the base of Pow.
    Expression operand() const { return Expression(node_->lhs); }

    bool is_binary() const {
        const Kind k = kind();
        return k == Kind::Add || k == Kind::Sub || k == Kind::Mul || k == Kind::Div;
    }

    bool depends_on_x() const {
        switch (kind()) {
            case Kind::Literal: return false;
            case Kind::Variable: return true;
            default: return (node_->lhs && lhs().depends_on_x()) || (node_->rhs && rhs().depends_on_x());
        }
    }

    friend bool operator==(const Expression& a, const Expression& b) {
        if (a.node_ == b.node_) return true;
        if (a.kind() != b.kind()) return false;
        switch (a.kind()) {
            case Kind::Literal: return a.value() == b.value();
            case Kind::Variable: return true;
            case Kind::Pow: return a.exponent() == b.exponent() && a.operand() == b.operand();
            case Kind::Neg:
            case Kind::Exp:
            case Kind::Log: return a.operand() == b.operand();
            default: return a.lhs() == b.lhs() && a.rhs() == b.rhs();
        }
    }

private:
    struct Node {
        Kind kind;
        Rational value;
        unsigned long exponent;
        std::shared_ptr<const Node> lhs;
        std::shared_ptr<const Node> rhs;
    };

    explicit Expression(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}
    explicit Expression(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expression parse() {
        Expression e = expr();
        skip_space();
        if (pos_ < text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    using Kind = Expression::Kind;

    [[noreturn]] void fail(const std::string& message) const { throw parse_error(message, pos_ + 1); }
    [[noreturn]] void fail_at(const std::string& message, std::size_t pos) const { throw parse_error(message, pos + 1); }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (accept(c)) return;
        if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' but input ended");
        fail(std::string("expected '") + c + "'");
    }

    Expression expr() {
        Expression acc = term();
        for (;;) {
            if (accept('+'))
                acc = Expression::binary(Kind::Add, acc, term());
            else if (accept('-'))
                acc = Expression::binary(Kind::Sub, acc, term());
            else
                return acc;
        }
    }

    Expression term() {
        Expression acc = unary();
        for (;;) {
            if (accept('*')) {
                acc = Expression::binary(Kind::Mul, acc, unary());
            } else if (accept('/')) {
                Expression rhs = unary();
                if (acc.kind() == Kind::Literal && rhs.kind() == Kind::Literal && !rhs.value().is_zero())
                    acc = Expression::literal(acc.value() / rhs.value());
                else
                    acc = Expression::binary(Kind::Div, acc, rhs);
            } else {
                return acc;
            }
        }
    }

    Expression unary() {
        if (accept('-')) {
            Expression inner = unary();
            if (inner.kind() == Kind::Literal) return Expression::literal(-inner.value());
            return Expression::neg(inner);
        }
        return power();
    }

    Expression power() {
        Expression base = atom();
        if (!accept('^')) return base;
        skip_space();
        const std::size_t at = pos_;
        Expression exponent = unary();
        if (exponent.depends_on_x()) fail_at("non-constant exponent", at);
        std::optional<Rational> value;
        try {
            value = constant_value(exponent);
        } catch (const std::domain_error& e) {
            fail_at(std::string("exponent cannot be evaluated: ") + e.what(), at);
        }
        if (!value || !value->is_integer() || value->sign() < 0)
            fail_at("exponent must be a nonnegative integer", at);
        if (*value > Rational(static_cast<unsigned long>(Expression::max_exponent)))
            fail_at("exponent " + value->str() + " exceeds " + std::to_string(Expression::max_exponent), at);
        return Expression::pow(base, to_u64(value->numerator()));
    }

    Expression atom() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expression inner = expr();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            const std::string_view name = text_.substr(start, pos_ - start);
            if (name == "x") return Expression::variable();
            if (name == "exp" || name == "log") {
                expect('(');
                Expression arg = expr();
                expect(')');
                return Expression::call(name == "exp" ? Kind::Exp : Kind::Log, arg);
            }
            fail_at("unknown identifier '" + std::string(name) + "'", start);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Expression number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        const std::string_view lexeme = text_.substr(start, pos_ - start);
        if (lexeme == ".") fail_at("malformed number", start);
        return Expression::literal(Rational::parse(lexeme));
    }

    static std::optional<Rational> constant_value(const Expression& e) {
        switch (e.kind()) {
            case Kind::Literal: return e.value();
            case Kind::Neg: return -*constant_value(e.operand());
            case Kind::Add: return *constant_value(e.lhs()) + *constant_value(e.rhs());
            case Kind::Sub: return *constant_value(e.lhs()) - *constant_value(e.rhs());
            case Kind::Mul: return *constant_value(e.lhs()) * *constant_value(e.rhs());
            case Kind::Div: return *constant_value(e.lhs()) / *constant_value(e.rhs());
            case Kind::Pow: return hypergrid::pow(*constant_value(e.operand()), e.exponent());
            default: return std::nullopt;  // exp/log of constants are not integers we can certify
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse(std::string_view text) { return detail::Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Printing

namespace detail {

// Binding strength of the printed form, low to high.
enum Prec { PrecAdd = 1, PrecMul = 2, PrecUnary = 3, PrecPow = 4, PrecAtom = 5 };

inline int precedence(const Expression& e) {
    using Kind = Expression::Kind;
    switch (e.kind()) {
        case Kind::Literal:
            if (!e.value().is_integer()) return PrecMul;
            return e.value().sign() < 0 ? PrecUnary : PrecAtom;
        case Kind::Add:
        case Kind::Sub: return PrecAdd;
        case Kind::Mul:
        case Kind::Div: return PrecMul;
        case Kind::Neg: return PrecUnary;
        case Kind::Pow: return PrecPow;
        default: return PrecAtom;
    }
}

inline void print_to(std::string& out, const Expression& e, int min_prec) {
    using Kind = Expression::Kind;
    const int p = precedence(e);
    const bool parens = p < min_prec;
    if (parens) out += '(';
    switch (e.kind()) {
        case Kind::Literal: out += e.value().str(); break;
        case Kind::Variable: out += 'x'; break;
        case Kind::Neg:
            out += '-';
            print_to(out, e.operand(), PrecUnary);
            break;
        case Kind::Pow:
            print_to(out, e.operand(), PrecAtom);
            out += '^';
            out += std::to_string(e.exponent());
            break;
        case Kind::Exp:
        case Kind::Log:
            out += e.kind() == Kind::Exp ? "exp(" : "log(";
            print_to(out, e.operand(), 0);
            out += ')';
            break;
        default: {
            const char* op = e.kind() == Kind::Add ? " + " : e.kind() == Kind::Sub ? " - " : e.kind() == Kind::Mul ? "*" : "/";
            print_to(out, e.lhs(), p);
            out += op;
            print_to(out, e.rhs(), p + 1);
        }
    }
    if (parens) out += ')';
}

inline void sexpr_to(std::string& out, const Expression& e) {
    using Kind = Expression::Kind;
    switch (e.kind()) {
        case Kind::Literal: out += e.value().str(); return;
        case Kind::Variable: out += 'x'; return;
        case Kind::Neg: out += "[- "; sexpr_to(out, e.operand()); out += ']'; return;
        case Kind::Pow:
            out += "[^ ";
            sexpr_to(out, e.operand());
            out += ' ' + std::to_string(e.exponent()) + ']';
            return;
        case Kind::Exp:
        case Kind::Log:
            out += e.kind() == Kind::Exp ? "[exp " : "[log ";
            sexpr_to(out, e.operand());
            out += ']';
            return;
        default:
            out += e.kind() == Kind::Add ? "[+ " : e.kind() == Kind::Sub ? "[- " : e.kind() == Kind::Mul ? "[* " : "[/ ";
            sexpr_to(out, e.lhs());
            out += ' ';
            sexpr_to(out, e.rhs());
            out += ']';
    }
}

}  // namespace detail

/// Infix text that parses back to the same tree.
inline std::string print(const Expression& e) {
    std::string out;
    detail::print_to(out, e, 0);
    return out;
}

/// Bracketed prefix form, e.g. "[+ [^ x 2] 1/3]".
inline std::string to_sexpr(const Expression& e) {
    std::string out;
    detail::sexpr_to(out, e);
    return out;
}

// ---------------------------------------------------------------------------
// Compilation

struct CompileOptions {
    TruncationPolicy policy{};
    /// The grid variable t in [0,1] is presented to the expression as
    /// x = domain_lo + (domain_hi - domain_lo) t.
    Rational domain_lo{0};
    Rational domain_hi{1};
    ResourceLimits limits = ResourceLimits::from_env();
};

namespace detail {

/// Value range of the smooth part s of a node over the domain, bounds on
/// |s'| and |s''| with respect to the grid variable t, and a bound on the
/// distance between the computed value and s (nonzero only through
/// tail-bounded series).
struct SmoothBound {
    Rational lo, hi;
    Rational d1, d2;
    Rational err;

    Rational magnitude() const { return max(abs(lo), abs(hi)); }
};

inline SmoothBound bound_product(const SmoothBound& f, const SmoothBound& g) {
    const Rational a = f.lo * g.lo, b = f.lo * g.hi, c = f.hi * g.lo, d = f.hi * g.hi;
    const Rational mf = f.magnitude(), mg = g.magnitude();
    SmoothBound out;
    out.lo = min(min(a, b), min(c, d));
    out.hi = max(max(a, b), max(c, d));
    out.d1 = f.d1 * mg + mf * g.d1;
    out.d2 = f.d2 * mg + Rational(2) * f.d1 * g.d1 + mf * g.d2;
    out.err = mf * g.err + mg * f.err + f.err * g.err;
    return out;
}

/// Upper bound for e^c, c >= 0, as (27183/10000)^ceil(c).
inline std::optional<Rational> exp_upper(const Rational& c) {
    const BigInt n = ceil(c);
    if (n > 4096) return std::nullopt;
    return hypergrid::pow(Rational(BigInt(27183), BigInt(10000)), to_u64(n));
}

inline std::optional<SmoothBound> analyze(const Expression& e, const CompileOptions& opt, std::uint64_t tau) {
    using Kind = Expression::Kind;
    switch (e.kind()) {
        case Kind::Literal: return SmoothBound{e.value(), e.value(), {}, {}, {}};
        case Kind::Variable:
            return SmoothBound{min(opt.domain_lo, opt.domain_hi), max(opt.domain_lo, opt.domain_hi),
                               abs(opt.domain_hi - opt.domain_lo), {}, {}};
        case Kind::Neg: {
            auto f = analyze(e.operand(), opt, tau);
            if (!f) return std::nullopt;
            return SmoothBound{-f->hi, -f->lo, f->d1, f->d2, f->err};
        }
        case Kind::Add:
        case Kind::Sub: {
            auto f = analyze(e.lhs(), opt, tau);
            auto g = analyze(e.rhs(), opt, tau);
            if (!f || !g) return std::nullopt;
            SmoothBound out{{}, {}, f->d1 + g->d1, f->d2 + g->d2, f->err + g->err};
            if (e.kind() == Kind::Add) {
                out.lo = f->lo + g->lo;
                out.hi = f->hi + g->hi;
            } else {
                out.lo = f->lo - g->hi;
                out.hi = f->hi - g->lo;
            }
            return out;
        }
        case Kind::Mul: {
            auto f = analyze(e.lhs(), opt, tau);
            auto g = analyze(e.rhs(), opt, tau);
            if (!f || !g) return std::nullopt;
            return bound_product(*f, *g);
        }
        case Kind::Div: {
            auto f = analyze(e.lhs(), opt, tau);
            auto g = analyze(e.rhs(), opt, tau);
            if (!f || !g) return std::nullopt;
            if (g->lo.sign() <= 0 && g->hi.sign() >= 0) return std::nullopt;
            const Rational m = min(abs(g->lo), abs(g->hi));
            if (g->err >= m) return std::nullopt;
            const Rational mg = g->magnitude();
            // 1/g: (1/g)' = -g'/g^2, (1/g)'' = (2g'^2 - g g'')/g^3
            SmoothBound recip;
            recip.lo = Rational(1) / g->hi;
            recip.hi = Rational(1) / g->lo;
            if (recip.lo > recip.hi) std::swap(recip.lo, recip.hi);
            recip.d1 = g->d1 / (m * m);
            recip.d2 = (Rational(2) * g->d1 * g->d1 + mg * g->d2) / (m * m * m);
            recip.err = g->err / (m * (m - g->err));
            return bound_product(*f, recip);
        }
        case Kind::Pow: {
            auto f = analyze(e.operand(), opt, tau);
            if (!f) return std::nullopt;
            SmoothBound acc{Rational(1), Rational(1), {}, {}, {}};
            for (unsigned long i = 0; i < e.exponent(); ++i) acc = bound_product(acc, *f);
            return acc;
        }
        case Kind::Exp: {
            auto g = analyze(e.operand(), opt, tau);
            if (!g) return std::nullopt;
            // |P(y)|, |P'(y)|, |P''(y)| <= e^|y| for the truncated series P.
            auto big_e = exp_upper(g->magnitude() + g->err);
            if (!big_e) return std::nullopt;
            SmoothBound out;
            out.lo = g->lo.sign() >= 0 ? Rational(1) + g->lo : -*big_e;
            out.hi = *big_e;
            out.d1 = *big_e * g->d1;
            out.d2 = *big_e * (g->d2 + g->d1 * g->d1);
            out.err = *big_e * g->err;
            if (opt.policy.mode == TruncationPolicy::Mode::TailBounded) {
                BigInt den = big(tau);
                mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), opt.policy.guard);
                out.err += Rational(BigInt(1), den);
            }
            return out;
        }
        case Kind::Log: return std::nullopt;
    }
    return std::nullopt;
}

inline Rational eval_node(const Expression& e, const Rational& x, std::uint64_t tau, const CompileOptions& opt) {
    using Kind = Expression::Kind;
    switch (e.kind()) {
        case Kind::Literal: return e.value();
        case Kind::Variable: return x;
        case Kind::Neg: return -eval_node(e.operand(), x, tau, opt);
        case Kind::Add: return eval_node(e.lhs(), x, tau, opt) + eval_node(e.rhs(), x, tau, opt);
        case Kind::Sub: return eval_node(e.lhs(), x, tau, opt) - eval_node(e.rhs(), x, tau, opt);
        case Kind::Mul: return eval_node(e.lhs(), x, tau, opt) * eval_node(e.rhs(), x, tau, opt);
        case Kind::Div: return eval_node(e.lhs(), x, tau, opt) / eval_node(e.rhs(), x, tau, opt);
        case Kind::Pow: return hypergrid::pow(eval_node(e.operand(), x, tau, opt), e.exponent());
        case Kind::Exp: return exp_approx(eval_node(e.operand(), x, tau, opt), tau, opt.policy, opt.limits);
        case Kind::Log: return log_approx(eval_node(e.operand(), x, tau, opt), tau, opt.policy, opt.limits);
    }
    throw std::logic_error("unknown expression node");
}

}  // namespace detail

/// Evaluates e at a rational x, using `tau` terms of truncation for exp/log.
inline Rational evaluate_at(const Expression& e, const Rational& x, std::uint64_t tau, const CompileOptions& opt = {}) {
    return detail::eval_node(e, x, tau, opt);
}

/// The grid function t |-> e(domain_lo + (domain_hi - domain_lo) t), with
/// continuity certificates when every node admits derivative bounds.
inline GridFunction compile(const Expression& e, const GridSpec& spec, const CompileOptions& opt = {}) {
    if (!(opt.domain_lo < opt.domain_hi))
        throw std::invalid_argument("empty domain [" + opt.domain_lo.str() + ", " + opt.domain_hi.str() + "]");
    const std::uint64_t tau = spec.tau();
    const Rational width = opt.domain_hi - opt.domain_lo;
    const std::string text = print(e);
    auto rule = [e, opt, width, text](const GridPoint& t) {
        const Rational x = opt.domain_lo + width * t.value();
        try {
            return detail::eval_node(e, x, t.spec().tau(), opt);
        } catch (const resource_error&) {
            throw;
        } catch (const std::domain_error& err) {
            throw evaluation_error("cannot evaluate " + text + " at grid point " + t.str() + " (x = " + x.str() +
                                   "): " + err.what());
        } catch (const std::range_error& err) {
            throw evaluation_error("cannot evaluate " + text + " at grid point " + t.str() + " (x = " + x.str() +
                                   "): " + err.what());
        }
    };
    GridFunction f(spec, rule, text);
    if (auto b = detail::analyze(e, opt, tau)) {
        const Rational tau_r(big(tau));
        f = f.with_modulus(Modulus({Rational(2) * b->err, b->d1}))
                .with_quotient_modulus(Modulus({Rational(4) * b->err * tau_r, b->d2}))
                .with_bound(b->magnitude() + b->err);
    }
    return f;
}

inline GridFunction compile(std::string_view text, const GridSpec& spec, const CompileOptions& opt = {}) {
    return compile(parse(text), spec, opt);
}

}  // namespace hypergrid
