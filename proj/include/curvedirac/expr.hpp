#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "curvedirac/dual.hpp"
#include "curvedirac/error.hpp"
#include "curvedirac/metric.hpp"

namespace curvedirac {

// Expression language for static conformal factors:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?            right-associative
//   primary := number | 'x' | identifier | function '(' expr ')' | '(' expr ')'
//
// so "-x^2" is -(x^2) and "2^-1" is 2^(-1). Identifiers other than `x` and the
// function names are parameters bound at evaluation time.

enum class NodeKind { literal, variable, parameter, negate, binary, call };
enum class BinaryOp { add, sub, mul, div, pow };
enum class Function { sqrt, exp, log, sin, cos, tan, tanh, abs };

inline constexpr std::array<std::pair<std::string_view, Function>, 8> function_table{{
    {"sqrt", Function::sqrt},
    {"exp", Function::exp},
    {"log", Function::log},
    {"sin", Function::sin},
    {"cos", Function::cos},
    {"tan", Function::tan},
    {"tanh", Function::tanh},
    {"abs", Function::abs},
}};

inline std::optional<Function> lookup_function(std::string_view name) {
    for (const auto& [n, f] : function_table)
        if (n == name) return f;
    return std::nullopt;
}

inline std::string_view function_name(Function f) {
    for (const auto& [n, g] : function_table)
        if (g == f) return n;
    return "?";
}

inline char operator_symbol(BinaryOp op) {
    switch (op) {
    case BinaryOp::add: return '+';
    case BinaryOp::sub: return '-';
    case BinaryOp::mul: return '*';
    case BinaryOp::div: return '/';
    case BinaryOp::pow: return '^';
    }
    return '?';
}

inline std::string_view operator_name(BinaryOp op) {
    switch (op) {
    case BinaryOp::add: return "add";
    case BinaryOp::sub: return "sub";
    case BinaryOp::mul: return "mul";
    case BinaryOp::div: return "div";
    case BinaryOp::pow: return "pow";
    }
    return "?";
}

struct ExprNode {
    NodeKind kind = NodeKind::literal;
    double value = 0.0;
    std::string name;
    BinaryOp op = BinaryOp::add;
    Function function = Function::sqrt;
    int lhs = -1; ///< operand of negate/call, left operand of binary
    int rhs = -1;
    SourceSpan span;
};

/// Immutable expression tree stored as an arena; children always precede parents.
class ExprAst {
public:
    const ExprNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    const ExprNode& root_node() const { return node(root_); }
    int root() const noexcept { return root_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::string& source() const noexcept { return source_; }

    std::set<std::string, std::less<>> parameters() const {
        std::set<std::string, std::less<>> names;
        for (const auto& n : nodes_)
            if (n.kind == NodeKind::parameter) names.insert(n.name);
        return names;
    }

    /// Source text for a span, or an empty view for builder-made trees.
    std::string_view text(SourceSpan span) const {
        if (span.offset + span.length > source_.size()) return {};
        return std::string_view(source_).substr(span.offset, span.length);
    }

private:
    friend class ExprBuilder;
    std::vector<ExprNode> nodes_;
    int root_ = -1;
    std::string source_;
};

class ExprBuilder {
public:
    int literal(double v, SourceSpan span = {}) {
        ExprNode n = leaf(NodeKind::literal, span);
        n.value = v;
        return push(std::move(n));
    }
    int variable(SourceSpan span = {}) { return push(leaf(NodeKind::variable, span)); }
    int parameter(std::string name, SourceSpan span = {}) {
        ExprNode n = leaf(NodeKind::parameter, span);
        n.name = std::move(name);
        return push(std::move(n));
    }
    int negate(int operand, SourceSpan span = {}) {
        ExprNode n = leaf(NodeKind::negate, span);
        n.lhs = operand;
        return push(std::move(n));
    }
    int binary(BinaryOp op, int lhs, int rhs, SourceSpan span = {}) {
        ExprNode n = leaf(NodeKind::binary, span);
        n.op = op;
        n.lhs = lhs;
        n.rhs = rhs;
        return push(std::move(n));
    }
    int call(Function f, int arg, SourceSpan span = {}) {
        ExprNode n = leaf(NodeKind::call, span);
        n.function = f;
        n.lhs = arg;
        return push(std::move(n));
    }

    ExprAst finish(int root, std::string source = {}) {
        ExprAst ast;
        ast.nodes_ = std::move(nodes_);
        ast.root_ = root;
        ast.source_ = std::move(source);
        nodes_.clear();
        return ast;
    }

private:
    static ExprNode leaf(NodeKind kind, SourceSpan span) {
        ExprNode n;
        n.kind = kind;
        n.span = span;
        return n;
    }
    int push(ExprNode n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }
    std::vector<ExprNode> nodes_;
};

namespace detail {

inline std::string format_literal(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class ExprParser {
public:
    explicit ExprParser(std::string_view src) : src_(src) { advance(); }

    ExprAst parse() {
        const int root = parse_expr();
        if (tok_.kind == Tok::rparen)
            throw ParseError(ParseError::Kind::unbalanced_parenthesis, tok_.span, "unmatched ')'");
        if (tok_.kind != Tok::end) throw ParseError(ParseError::Kind::syntax, tok_.span, "unexpected token, expected operator");
        return builder_.finish(root, std::string(src_));
    }

private:
    enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };
    struct Token {
        Tok kind = Tok::end;
        SourceSpan span;
        double number = 0.0;
    };

    static constexpr int max_depth = 200;

    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
    static bool is_ident(char c) { return is_ident_start(c) || is_digit(c); }

    void advance() {
        while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
        const std::size_t start = pos_;
        if (pos_ >= src_.size()) {
            tok_ = {Tok::end, {pos_, 0}};
            return;
        }
        const char c = src_[pos_];
        if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
            while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
            if (pos_ < src_.size() && src_[pos_] == '.') {
                ++pos_;
                while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
            }
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                std::size_t p = pos_ + 1;
                if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
                if (p < src_.size() && is_digit(src_[p])) {
                    while (p < src_.size() && is_digit(src_[p])) ++p;
                    pos_ = p;
                }
            }
            Token t{Tok::number, {start, pos_ - start}};
            const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, t.number);
            if (ec != std::errc() || ptr != src_.data() + pos_ || !std::isfinite(t.number))
                throw ParseError(ParseError::Kind::syntax, t.span, "numeric literal out of range");
            tok_ = t;
            return;
        }
        if (is_ident_start(c)) {
            while (pos_ < src_.size() && is_ident(src_[pos_])) ++pos_;
            tok_ = {Tok::ident, {start, pos_ - start}};
            return;
        }
        ++pos_;
        Tok kind;
        switch (c) {
        case '+': kind = Tok::plus; break;
        case '-': kind = Tok::minus; break;
        case '*': kind = Tok::star; break;
        case '/': kind = Tok::slash; break;
        case '^': kind = Tok::caret; break;
        case '(': kind = Tok::lparen; break;
        case ')': kind = Tok::rparen; break;
        default:
            throw ParseError(ParseError::Kind::syntax, {start, 1}, "unexpected character");
        }
        tok_ = {kind, {start, 1}};
    }

    std::string_view text(SourceSpan s) const { return src_.substr(s.offset, s.length); }

    static SourceSpan join(SourceSpan a, SourceSpan b) { return {a.offset, b.offset + b.length - a.offset}; }

    struct DepthGuard {
        explicit DepthGuard(ExprParser& p) : p_(p) {
            if (++p_.depth_ > max_depth)
                throw ParseError(ParseError::Kind::syntax, p_.tok_.span, "expression nested too deeply");
        }
        ~DepthGuard() { --p_.depth_; }
        ExprParser& p_;
    };

    SourceSpan span_of(int id) const { return spans_.at(static_cast<std::size_t>(id)); }

    int record(int id, SourceSpan span) {
        if (spans_.size() <= static_cast<std::size_t>(id)) spans_.resize(static_cast<std::size_t>(id) + 1);
        spans_[static_cast<std::size_t>(id)] = span;
        return id;
    }

    int parse_expr() {
        DepthGuard guard(*this);
        int lhs = parse_term();
        while (tok_.kind == Tok::plus || tok_.kind == Tok::minus) {
            const BinaryOp op = tok_.kind == Tok::plus ? BinaryOp::add : BinaryOp::sub;
            advance();
            const int rhs = parse_term();
            const SourceSpan s = join(span_of(lhs), span_of(rhs));
            lhs = record(builder_.binary(op, lhs, rhs, s), s);
        }
        return lhs;
    }

    int parse_term() {
        int lhs = parse_unary();
        while (tok_.kind == Tok::star || tok_.kind == Tok::slash) {
            const BinaryOp op = tok_.kind == Tok::star ? BinaryOp::mul : BinaryOp::div;
            advance();
            const int rhs = parse_unary();
            const SourceSpan s = join(span_of(lhs), span_of(rhs));
            lhs = record(builder_.binary(op, lhs, rhs, s), s);
        }
        return lhs;
    }

    int parse_unary() {
        DepthGuard guard(*this);
        if (tok_.kind == Tok::minus || tok_.kind == Tok::plus) {
            const bool negate = tok_.kind == Tok::minus;
            const SourceSpan start = tok_.span;
            advance();
            const int operand = parse_unary();
            if (!negate) return operand;
            const SourceSpan s = join(start, span_of(operand));
            return record(builder_.negate(operand, s), s);
        }
        return parse_power();
    }

    int parse_power() {
        const int base = parse_primary();
        if (tok_.kind != Tok::caret) return base;
        advance();
        const int exponent = parse_unary();
        const SourceSpan s = join(span_of(base), span_of(exponent));
        return record(builder_.binary(BinaryOp::pow, base, exponent, s), s);
    }

    void expect_rparen(SourceSpan open) {
        if (tok_.kind == Tok::rparen) {
            advance();
            return;
        }
        if (tok_.kind == Tok::end)
            throw ParseError(ParseError::Kind::unbalanced_parenthesis, open, "missing ')' for this '('");
        throw ParseError(ParseError::Kind::syntax, tok_.span, "expected ')'");
    }

    int parse_primary() {
        DepthGuard guard(*this);
        const Token t = tok_;
        switch (t.kind) {
        case Tok::number:
            advance();
            return record(builder_.literal(t.number, t.span), t.span);
        case Tok::ident: {
            const std::string_view name = text(t.span);
            advance();
            if (tok_.kind == Tok::lparen) {
                const auto fn = lookup_function(name);
                if (!fn)
                    throw ParseError(ParseError::Kind::unknown_function, t.span,
                                     "unknown function '" + std::string(name) + "'");
                const SourceSpan open = tok_.span;
                advance();
                const int arg = parse_expr();
                const SourceSpan close = tok_.span;
                expect_rparen(open);
                const SourceSpan s = join(t.span, close);
                return record(builder_.call(*fn, arg, s), s);
            }
            if (lookup_function(name))
                throw ParseError(ParseError::Kind::syntax, tok_.span,
                                 "expected '(' after function '" + std::string(name) + "'");
            if (name == "x") return record(builder_.variable(t.span), t.span);
            return record(builder_.parameter(std::string(name), t.span), t.span);
        }
        case Tok::lparen: {
            advance();
            const int inner = parse_expr();
            const SourceSpan close = tok_.span;
            expect_rparen(t.span);
            // Parentheses do not create nodes; widen the recorded span only.
            spans_[static_cast<std::size_t>(inner)] = join(t.span, close);
            return inner;
        }
        case Tok::rparen:
            throw ParseError(ParseError::Kind::unbalanced_parenthesis, t.span, "unmatched ')', expected expression");
        default:
            throw ParseError(ParseError::Kind::syntax, t.span, "expected expression");
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_;
    int depth_ = 0;
    ExprBuilder builder_;
    std::vector<SourceSpan> spans_;
};

inline void print_infix(const ExprAst& ast, int id, std::string& out) {
    const ExprNode& n = ast.node(id);
    switch (n.kind) {
    case NodeKind::literal: out += format_literal(n.value); break;
    case NodeKind::variable: out += 'x'; break;
    case NodeKind::parameter: out += n.name; break;
    case NodeKind::negate:
        out += "(-";
        print_infix(ast, n.lhs, out);
        out += ')';
        break;
    case NodeKind::binary:
        out += '(';
        print_infix(ast, n.lhs, out);
        out += ' ';
        out += operator_symbol(n.op);
        out += ' ';
        print_infix(ast, n.rhs, out);
        out += ')';
        break;
    case NodeKind::call:
        out += function_name(n.function);
        out += '(';
        print_infix(ast, n.lhs, out);
        out += ')';
        break;
    }
}

inline void print_prefix(const ExprAst& ast, int id, std::string& out) {
    const ExprNode& n = ast.node(id);
    switch (n.kind) {
    case NodeKind::literal: out += format_literal(n.value); break;
    case NodeKind::variable: out += 'x'; break;
    case NodeKind::parameter: out += n.name; break;
    case NodeKind::negate:
        out += "neg(";
        print_prefix(ast, n.lhs, out);
        out += ')';
        break;
    case NodeKind::binary:
        out += operator_name(n.op);
        out += '(';
        print_prefix(ast, n.lhs, out);
        out += ',';
        print_prefix(ast, n.rhs, out);
        out += ')';
        break;
    case NodeKind::call:
        out += function_name(n.function);
        out += '(';
        print_prefix(ast, n.lhs, out);
        out += ')';
        break;
    }
}

inline bool equal_subtrees(const ExprAst& a, int ia, const ExprAst& b, int ib) {
    const ExprNode& x = a.node(ia);
    const ExprNode& y = b.node(ib);
    if (x.kind != y.kind) return false;
    switch (x.kind) {
    case NodeKind::literal: return x.value == y.value;
    case NodeKind::variable: return true;
    case NodeKind::parameter: return x.name == y.name;
    case NodeKind::negate: return equal_subtrees(a, x.lhs, b, y.lhs);
    case NodeKind::binary:
        return x.op == y.op && equal_subtrees(a, x.lhs, b, y.lhs) && equal_subtrees(a, x.rhs, b, y.rhs);
    case NodeKind::call: return x.function == y.function && equal_subtrees(a, x.lhs, b, y.lhs);
    }
    return false;
}

} // namespace detail

/// Parses an expression; throws ParseError with the offending span.
inline ExprAst parse_expression(std::string_view source) { return detail::ExprParser(source).parse(); }

/// Fully parenthesised infix form; parse_expression(to_string(a)) is structurally equal to a.
inline std::string to_string(const ExprAst& ast) {
    std::string out;
    detail::print_infix(ast, ast.root(), out);
    return out;
}

/// Functional form, e.g. "sqrt(div(pow(x,2),add(pow(x,2),pow(b0,2))))".
inline std::string to_prefix_string(const ExprAst& ast) {
    std::string out;
    detail::print_prefix(ast, ast.root(), out);
    return out;
}

/// Equality of tree shape, operators, literals and names; spans are ignored.
inline bool structurally_equal(const ExprAst& a, const ExprAst& b) {
    return detail::equal_subtrees(a, a.root(), b, b.root());
}

using Bindings = std::map<std::string, double, std::less<>>;

struct ValueAndDerivative {
    double value;
    double derivative;
};

namespace detail {

template <class S>
class Evaluator {
public:
    static constexpr bool with_derivative = std::is_same_v<S, Dual<double>>;

    Evaluator(const ExprAst& ast, const Bindings& params) : ast_(ast), params_(params) {}

    S eval(int id, const S& x) const {
        const ExprNode& n = ast_.node(id);
        S r = compute(n, x);
        if (!std::isfinite(value(r))) fail(EvalError::Kind::domain, n, "non-finite result");
        if constexpr (with_derivative)
            if (!std::isfinite(r.derivative)) fail(EvalError::Kind::nondifferentiable, n, "derivative is not finite");
        return r;
    }

private:
    static double value(const S& s) {
        if constexpr (with_derivative) return s.value;
        else return s;
    }

    [[noreturn]] void fail(EvalError::Kind kind, const ExprNode& n, const std::string& what) const {
        std::string where(ast_.text(n.span));
        if (where.empty()) where = "<subexpression>";
        throw EvalError(kind, n.span, what + " in '" + where + "'");
    }

    S compute(const ExprNode& n, const S& x) const {
        using std::abs, std::cos, std::exp, std::log, std::sin, std::sqrt, std::tan, std::tanh;
        switch (n.kind) {
        case NodeKind::literal: return S(n.value);
        case NodeKind::variable: return x;
        case NodeKind::parameter: {
            const auto it = params_.find(n.name);
            if (it == params_.end()) fail(EvalError::Kind::unbound_parameter, n, "unbound parameter '" + n.name + "'");
            return S(it->second);
        }
        case NodeKind::negate: return -eval(n.lhs, x);
        case NodeKind::call: {
            const S a = eval(n.lhs, x);
            const double v = value(a);
            switch (n.function) {
            case Function::sqrt:
                if (v < 0.0) fail(EvalError::Kind::domain, n, "square root of negative value");
                if (with_derivative && v == 0.0) fail(EvalError::Kind::nondifferentiable, n, "sqrt is not differentiable at 0");
                return sqrt(a);
            case Function::exp: return exp(a);
            case Function::log:
                if (v <= 0.0) fail(EvalError::Kind::domain, n, "logarithm of non-positive value");
                return log(a);
            case Function::sin: return sin(a);
            case Function::cos: return cos(a);
            case Function::tan: return tan(a);
            case Function::tanh: return tanh(a);
            case Function::abs:
                if (with_derivative && v == 0.0) fail(EvalError::Kind::nondifferentiable, n, "abs is not differentiable at 0");
                return abs(a);
            }
            break;
        }
        case NodeKind::binary: {
            const S a = eval(n.lhs, x);
            const S b = eval(n.rhs, x);
            switch (n.op) {
            case BinaryOp::add: return a + b;
            case BinaryOp::sub: return a - b;
            case BinaryOp::mul: return a * b;
            case BinaryOp::div:
                if (value(b) == 0.0) fail(EvalError::Kind::domain, n, "division by zero");
                return a / b;
            case BinaryOp::pow: return power(n, a, b);
            }
            break;
        }
        }
        fail(EvalError::Kind::domain, n, "malformed expression node");
    }

    S power(const ExprNode& n, const S& a, const S& b) const {
        const double base = value(a);
        const double expo = value(b);
        bool integer_exponent = std::trunc(expo) == expo;
        if constexpr (with_derivative) integer_exponent = integer_exponent && b.derivative == 0.0;
        if (integer_exponent) {
            if (base == 0.0 && expo < 0.0) fail(EvalError::Kind::domain, n, "division by zero");
            if constexpr (with_derivative) return pow_integer(a, expo);
            else return std::pow(base, expo);
        }
        if (base < 0.0) fail(EvalError::Kind::domain, n, "negative base with non-integer exponent");
        if (base == 0.0) {
            if (expo < 0.0) fail(EvalError::Kind::domain, n, "division by zero");
            if constexpr (with_derivative) fail(EvalError::Kind::nondifferentiable, n, "power is not differentiable at base 0");
            else return 0.0;
        }
        if constexpr (with_derivative) return pow(a, b);
        else return std::pow(base, expo);
    }

    const ExprAst& ast_;
    const Bindings& params_;
};

} // namespace detail

/// Real evaluation at x. Domain violations throw EvalError rather than produce inf/NaN.
inline double evaluate(const ExprAst& ast, double x, const Bindings& params = {}) {
    return detail::Evaluator<double>(ast, params).eval(ast.root(), x);
}

/// Value and d/dx via forward-mode duals.
inline ValueAndDerivative evaluate_with_derivative(const ExprAst& ast, double x, const Bindings& params = {}) {
    const auto r = detail::Evaluator<Dual<double>>(ast, params).eval(ast.root(), Dual<double>::variable(x));
    return {r.value, r.derivative};
}

/// Throws EvalError(unbound_parameter) for the first parameter missing from params.
inline void require_bound(const ExprAst& ast, const Bindings& params) {
    for (std::size_t i = 0; i < ast.size(); ++i) {
        const auto& n = ast.node(static_cast<int>(i));
        if (n.kind == NodeKind::parameter && !params.contains(n.name))
            throw EvalError(EvalError::Kind::unbound_parameter, n.span, "unbound parameter '" + n.name + "'");
    }
}

struct SampleDomain {
    double lo;
    double hi;
};

/// Builds a ConformalFactor from an expression for Omega(x).
///
/// Singular points are declared, not detected. Omega is sampled at 256 evenly
/// spaced points of `domain` (endpoints included) and must be positive at every
/// sample outside the exclusion radius of a declared singular point.
inline ConformalFactor compile_conformal_factor(std::string_view source, const Bindings& params,
                                                std::vector<double> singular_points, SampleDomain domain,
                                                double length_scale = 1.0) {
    auto ast = std::make_shared<const ExprAst>(parse_expression(source));
    require_bound(*ast, params);
    if (!(domain.lo < domain.hi)) throw InvalidArgument("validation domain requires lo < hi");

    ConformalFactor cf({
        .omega = [ast, params](double x) { return evaluate(*ast, x, params); },
        .omega_prime = [ast, params](double x) { return evaluate_with_derivative(*ast, x, params).derivative; },
        .singular_points = std::move(singular_points),
        .label = "expr(" + std::string(source) + ")",
        .length_scale = length_scale,
        .log_omega = {},
    });

    constexpr int samples = 256;
    for (int i = 0; i < samples; ++i) {
        const double x = domain.lo + (domain.hi - domain.lo) * static_cast<double>(i) / (samples - 1);
        if (cf.is_excluded(x)) continue;
        const double v = cf.omega(x);
        if (!(v > 0.0)) throw ValidationError(x, v);
    }
    return cf;
}

} // namespace curvedirac
