#pragma once

// Arithmetic expression language for spatial fields: slow coordinates (x1,x2),
// fast coordinates (X1,X2), constant pi, functions sin/cos/exp/sqrt, operators
// + - * / ^ and unary minus. Parsed trees are immutable and safe to evaluate
// concurrently.

#include <map>
#include <memory>
#include <set>
#include <string>

#include "homog/core.hpp"

namespace homog {

struct ParseError : Error {
    std::size_t position;  // 0-based character offset into the source text
    ParseError(std::size_t pos, const std::string& msg)
        : Error(msg + " at position " + std::to_string(pos)), position(pos) {}
};

struct EvalError : Error {
    explicit EvalError(const std::string& msg) : Error(msg) {}
};

using Bindings = std::map<std::string, double>;

namespace detail {
struct Node;
}

class FieldExpr {
public:
    FieldExpr() = default;

    // Parses `text`; throws ParseError with a 0-based position on bad input.
    static FieldExpr parse(const std::string& text);

    // IEEE double evaluation. Throws EvalError for unbound variables (named in
    // the message) and domain errors (sqrt of negative, division by zero,
    // invalid power); results are never silently NaN/Inf.
    double evaluate(const Bindings& bindings) const;

    // Central difference (f(v+step) - f(v-step)) / (2 step) in variable `var`.
    double gradient_fd(const std::string& var, const Bindings& bindings, double step) const;

    // Canonical fully-parenthesized text; reparses to an equivalent tree.
    std::string pretty_print() const;

    // Names of the variables that occur in the tree (subset of x1,x2,X1,X2).
    std::set<std::string> variables() const;

    bool empty() const { return root_ == nullptr; }

private:
    std::shared_ptr<const detail::Node> root_;
};

// Convenience evaluation at a (slow, fast) coordinate pair.
double eval_xX(const FieldExpr& e, const Vec2& x, const Vec2& X);

}  // namespace homog
