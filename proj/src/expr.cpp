#include "homog/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <vector>

namespace homog {
namespace detail {

enum class Op { Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Sqrt, Literal, Variable };

struct Node {
    Op op;
    double value = 0.0;       // Literal
    std::string name;         // Variable
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;  // null for unary/leaf
};

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_leaf(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Literal;
    n->value = v;
    return n;
}

NodePtr make_var(std::string name) {
    auto n = std::make_shared<Node>();
    n->op = Op::Variable;
    n->name = std::move(name);
    return n;
}

NodePtr make_node(Op op, NodePtr lhs, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

namespace {

const std::set<std::string> kVariables = {"x1", "x2", "X1", "X2"};

struct Token {
    enum class Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };
    Kind kind;
    double number = 0.0;
    std::string ident;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& current() const { return tok_; }

    void advance() {
        while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
        tok_.pos = i_;
        if (i_ >= text_.size()) {
            tok_.kind = Token::Kind::End;
            return;
        }
        const char c = text_[i_];
        switch (c) {
            case '+': tok_.kind = Token::Kind::Plus; ++i_; return;
            case '-': tok_.kind = Token::Kind::Minus; ++i_; return;
            case '*': tok_.kind = Token::Kind::Star; ++i_; return;
            case '/': tok_.kind = Token::Kind::Slash; ++i_; return;
            case '^': tok_.kind = Token::Kind::Caret; ++i_; return;
            case '(': tok_.kind = Token::Kind::LParen; ++i_; return;
            case ')': tok_.kind = Token::Kind::RParen; ++i_; return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t end = 0;
            double v = 0.0;
            try {
                v = std::stod(text_.substr(i_), &end);
            } catch (const std::exception&) {
                throw ParseError(i_, "malformed number");
            }
            tok_.kind = Token::Kind::Number;
            tok_.number = v;
            i_ += end;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i_;
            while (j < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_'))
                ++j;
            tok_.kind = Token::Kind::Ident;
            tok_.ident = text_.substr(i_, j - i_);
            i_ = j;
            return;
        }
        throw ParseError(i_, std::string("unexpected character '") + c + "'");
    }

private:
    const std::string& text_;
    std::size_t i_ = 0;
    Token tok_;
};

// Grammar (precedence low to high):
//   sum     := product (('+'|'-') product)*
//   product := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          (right-associative)
//   primary := number | 'pi' | variable | func '(' sum ')' | '(' sum ')'
class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    NodePtr parse() {
        NodePtr root = sum();
        if (lex_.current().kind != Token::Kind::End)
            throw ParseError(lex_.current().pos, "trailing input after expression");
        return root;
    }

private:
    Lexer lex_;

    NodePtr sum() {
        NodePtr lhs = product();
        for (;;) {
            const auto k = lex_.current().kind;
            if (k == Token::Kind::Plus) {
                lex_.advance();
                lhs = make_node(Op::Add, lhs, product());
            } else if (k == Token::Kind::Minus) {
                lex_.advance();
                lhs = make_node(Op::Sub, lhs, product());
            } else {
                return lhs;
            }
        }
    }

    NodePtr product() {
        NodePtr lhs = unary();
        for (;;) {
            const auto k = lex_.current().kind;
            if (k == Token::Kind::Star) {
                lex_.advance();
                lhs = make_node(Op::Mul, lhs, unary());
            } else if (k == Token::Kind::Slash) {
                lex_.advance();
                lhs = make_node(Op::Div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (lex_.current().kind == Token::Kind::Minus) {
            lex_.advance();
            return make_node(Op::Neg, unary());
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (lex_.current().kind == Token::Kind::Caret) {
            lex_.advance();
            return make_node(Op::Pow, base, unary());
        }
        return base;
    }

    NodePtr primary() {
        const Token tok = lex_.current();
        switch (tok.kind) {
            case Token::Kind::Number:
                lex_.advance();
                return make_leaf(tok.number);
            case Token::Kind::Ident: {
                lex_.advance();
                if (tok.ident == "pi") return make_leaf(kPi);
                if (kVariables.count(tok.ident)) return make_var(tok.ident);
                Op fn;
                if (tok.ident == "sin") fn = Op::Sin;
                else if (tok.ident == "cos") fn = Op::Cos;
                else if (tok.ident == "exp") fn = Op::Exp;
                else if (tok.ident == "sqrt") fn = Op::Sqrt;
                else throw ParseError(tok.pos, "unknown identifier '" + tok.ident + "'");
                expect(Token::Kind::LParen, "expected '(' after function name");
                NodePtr arg = sum();
                expect(Token::Kind::RParen, "missing ')' in function call");
                return make_node(fn, arg);
            }
            case Token::Kind::LParen: {
                lex_.advance();
                NodePtr inner = sum();
                expect(Token::Kind::RParen, "unbalanced parenthesis");
                return inner;
            }
            default:
                throw ParseError(tok.pos, "expected operand");
        }
    }

    void expect(Token::Kind k, const std::string& msg) {
        if (lex_.current().kind != k) throw ParseError(lex_.current().pos, msg);
        lex_.advance();
    }
};

double eval_node(const Node& n, const Bindings& b) {
    switch (n.op) {
        case Op::Literal: return n.value;
        case Op::Variable: {
            const auto it = b.find(n.name);
            if (it == b.end()) throw EvalError("unbound variable '" + n.name + "'");
            return it->second;
        }
        case Op::Add: return eval_node(*n.lhs, b) + eval_node(*n.rhs, b);
        case Op::Sub: return eval_node(*n.lhs, b) - eval_node(*n.rhs, b);
        case Op::Mul: return eval_node(*n.lhs, b) * eval_node(*n.rhs, b);
        case Op::Div: {
            const double num = eval_node(*n.lhs, b);
            const double den = eval_node(*n.rhs, b);
            if (den == 0.0) throw EvalError("division by zero");
            return num / den;
        }
        case Op::Pow: {
            const double base = eval_node(*n.lhs, b);
            const double expo = eval_node(*n.rhs, b);
            const double r = std::pow(base, expo);
            if (!std::isfinite(r))
                throw EvalError("invalid power: " + std::to_string(base) + "^" +
                                std::to_string(expo));
            return r;
        }
        case Op::Neg: return -eval_node(*n.lhs, b);
        case Op::Sin: return std::sin(eval_node(*n.lhs, b));
        case Op::Cos: return std::cos(eval_node(*n.lhs, b));
        case Op::Exp: {
            const double r = std::exp(eval_node(*n.lhs, b));
            if (!std::isfinite(r)) throw EvalError("exp overflow");
            return r;
        }
        case Op::Sqrt: {
            const double v = eval_node(*n.lhs, b);
            if (v < 0.0) throw EvalError("sqrt of negative value " + std::to_string(v));
            return std::sqrt(v);
        }
    }
    throw EvalError("corrupt expression tree");
}

void print_node(const Node& n, std::ostringstream& os) {
    switch (n.op) {
        case Op::Literal: {
            os.precision(17);
            os << n.value;
            return;
        }
        case Op::Variable: os << n.name; return;
        case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: {
            const char* sym = n.op == Op::Add   ? "+"
                              : n.op == Op::Sub ? "-"
                              : n.op == Op::Mul ? "*"
                              : n.op == Op::Div ? "/"
                                                : "^";
            os << '(';
            print_node(*n.lhs, os);
            os << ' ' << sym << ' ';
            print_node(*n.rhs, os);
            os << ')';
            return;
        }
        case Op::Neg:
            os << "(-";
            print_node(*n.lhs, os);
            os << ')';
            return;
        case Op::Sin: case Op::Cos: case Op::Exp: case Op::Sqrt: {
            const char* fn = n.op == Op::Sin   ? "sin"
                             : n.op == Op::Cos ? "cos"
                             : n.op == Op::Exp ? "exp"
                                               : "sqrt";
            os << fn << '(';
            print_node(*n.lhs, os);
            os << ')';
            return;
        }
    }
}

void collect_vars(const Node& n, std::set<std::string>& out) {
    if (n.op == Op::Variable) out.insert(n.name);
    if (n.lhs) collect_vars(*n.lhs, out);
    if (n.rhs) collect_vars(*n.rhs, out);
}

}  // namespace
}  // namespace detail

FieldExpr FieldExpr::parse(const std::string& text) {
    bool blank = true;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) throw ParseError(0, "empty expression");
    FieldExpr e;
    e.root_ = detail::Parser(text).parse();
    return e;
}

double FieldExpr::evaluate(const Bindings& bindings) const {
    if (!root_) throw EvalError("evaluating empty expression");
    return detail::eval_node(*root_, bindings);
}

double FieldExpr::gradient_fd(const std::string& var, const Bindings& bindings,
                              double step) const {
    if (step <= 0.0) throw EvalError("gradient_fd: step must be positive");
    Bindings b = bindings;
    const double v0 = [&] {
        const auto it = bindings.find(var);
        return it == bindings.end() ? 0.0 : it->second;
    }();
    if (bindings.find(var) == bindings.end() && variables().count(var))
        throw EvalError("unbound variable '" + var + "'");
    b[var] = v0 + step;
    const double fp = evaluate(b);
    b[var] = v0 - step;
    const double fm = evaluate(b);
    return (fp - fm) / (2.0 * step);
}

std::string FieldExpr::pretty_print() const {
    if (!root_) return "";
    std::ostringstream os;
    detail::print_node(*root_, os);
    return os.str();
}

std::set<std::string> FieldExpr::variables() const {
    std::set<std::string> out;
    if (root_) detail::collect_vars(*root_, out);
    return out;
}

double eval_xX(const FieldExpr& e, const Vec2& x, const Vec2& X) {
    return e.evaluate({{"x1", x.x}, {"x2", x.y}, {"X1", X.x}, {"X2", X.y}});
}

}  // namespace homog
