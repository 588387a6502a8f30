#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace curvedirac {

/// Base for every error raised by the library. `tag()` is a stable,
/// machine-parsable identifier used by the command-line front end.
class Error : public std::runtime_error {
public:
    Error(std::string tag, const std::string& message)
        : std::runtime_error(message), tag_(std::move(tag)) {}

    const std::string& tag() const noexcept { return tag_; }

private:
    std::string tag_;
};

/// A caller-supplied argument violates an operation's precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
    explicit InvalidArgument(const std::string& message) : Error("invalid_argument", message) {}
};

/// Evaluation requested at (or within the exclusion radius of) a singular point.
class SingularityError : public Error {
public:
    SingularityError(double x, double singular_point)
        : Error("singularity", "evaluation at x=" + std::to_string(x) +
                                   " is within the exclusion radius of the singular point " +
                                   std::to_string(singular_point)),
          point_(singular_point) {}

    double point() const noexcept { return point_; }

private:
    double point_;
};

class QuadratureError : public Error {
public:
    explicit QuadratureError(const std::string& message) : Error("quadrature_nonconvergence", message) {}
};

/// Byte range into an expression source string.
struct SourceSpan {
    std::size_t offset = 0;
    std::size_t length = 0;

    friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

class ParseError : public Error {
public:
    enum class Kind { syntax, unknown_function, unbalanced_parenthesis };

    ParseError(Kind kind, SourceSpan span, const std::string& message)
        : Error(tag_for(kind), message + " (at offset " + std::to_string(span.offset) + ")"),
          kind_(kind), span_(span) {}

    Kind kind() const noexcept { return kind_; }
    SourceSpan span() const noexcept { return span_; }

private:
    static std::string tag_for(Kind kind) {
        switch (kind) {
        case Kind::unknown_function: return "unknown_function";
        case Kind::unbalanced_parenthesis: return "unbalanced_parenthesis";
        case Kind::syntax: break;
        }
        return "syntax_error";
    }

    Kind kind_;
    SourceSpan span_;
};

class EvalError : public Error {
public:
    enum class Kind { unbound_parameter, domain, nondifferentiable };

    EvalError(Kind kind, SourceSpan span, const std::string& message)
        : Error(tag_for(kind), message), kind_(kind), span_(span) {}

    Kind kind() const noexcept { return kind_; }
    SourceSpan span() const noexcept { return span_; }

private:
    static std::string tag_for(Kind kind) {
        switch (kind) {
        case Kind::unbound_parameter: return "unbound_parameter";
        case Kind::nondifferentiable: return "nondifferentiable";
        case Kind::domain: break;
        }
        return "domain_error";
    }

    Kind kind_;
    SourceSpan span_;
};

/// A compiled conformal factor failed the positivity check.
class ValidationError : public Error {
public:
    ValidationError(double x, double value)
        : Error("positivity_validation",
                "conformal factor is not positive at sample x=" + std::to_string(x) +
                    " (value " + std::to_string(value) + ")"),
          x_(x), value_(value) {}

    double x() const noexcept { return x_; }
    double value() const noexcept { return value_; }

private:
    double x_;
    double value_;
};

class GridError : public Error {
public:
    using Error::Error;
};

/// The evolving field touched the periodic seam or the mask edge.
class ContainmentError : public Error {
public:
    explicit ContainmentError(double t)
        : Error("containment_violation",
                "field reached the domain boundary at t=" + std::to_string(t)),
          time_(t) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

} // namespace curvedirac
