#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "homog/expr.hpp"

using namespace homog;

TEST_CASE("parse and evaluate basics") {
    CHECK(FieldExpr::parse("0.25 + 0.05*sin(2*pi*x1)").evaluate({{"x1", 0.25}}) ==
          doctest::Approx(0.3).epsilon(1e-12));
    CHECK(FieldExpr::parse("x1^2").evaluate({{"x1", 2.0}}) == doctest::Approx(4.0));
    CHECK(FieldExpr::parse("3.5").evaluate({}) == 3.5);
    CHECK(FieldExpr::parse("x1*X1").evaluate({{"x1", 2.0}, {"X1", 0.5}}) == 1.0);
}

TEST_CASE("precedence and associativity") {
    CHECK(FieldExpr::parse("2+3*4").evaluate({}) == 14.0);
    CHECK(FieldExpr::parse("2^3^2").evaluate({}) == 512.0);
    CHECK(FieldExpr::parse("2-3-4").evaluate({}) == -5.0);
    CHECK(FieldExpr::parse("12/3/2").evaluate({}) == 2.0);
    CHECK(FieldExpr::parse("-2^2").evaluate({}) == -4.0);
    CHECK(FieldExpr::parse("2*-3").evaluate({}) == -6.0);
    CHECK(FieldExpr::parse("2^-1").evaluate({}) == 0.5);
}

TEST_CASE("syntax errors carry 0-based positions") {
    try {
        FieldExpr::parse("(x1 + ");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position == 6);
    }
    try {
        FieldExpr::parse("x1 + foo");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position == 5);
        CHECK(std::string(e.what()).find("foo") != std::string::npos);
    }
    CHECK_THROWS_AS(FieldExpr::parse("1 + * 2"), ParseError);
    CHECK_THROWS_AS(FieldExpr::parse("  "), ParseError);
    CHECK_THROWS_AS(FieldExpr::parse("1 2"), ParseError);
    CHECK_THROWS_AS(FieldExpr::parse("sin 1"), ParseError);
}

TEST_CASE("evaluation errors are reported, never silent NaN") {
    const FieldExpr div = FieldExpr::parse("1/ (x1-1)");
    CHECK_THROWS_AS(div.evaluate({{"x1", 1.0}}), EvalError);
    CHECK_THROWS_AS(FieldExpr::parse("sqrt(x1)").evaluate({{"x1", -2.0}}), EvalError);
    try {
        FieldExpr::parse("x1 + X2").evaluate({{"x1", 1.0}});
        FAIL("expected EvalError");
    } catch (const EvalError& e) {
        CHECK(std::string(e.what()).find("X2") != std::string::npos);
    }
}

TEST_CASE("gradient_fd") {
    CHECK(FieldExpr::parse("x1^2").gradient_fd("x1", {{"x1", 3.0}}, 1e-5) ==
          doctest::Approx(6.0).epsilon(1e-8));
    CHECK(FieldExpr::parse("7.25").gradient_fd("x1", {}, 1e-5) == 0.0);
    CHECK(FieldExpr::parse("sin(x1)").gradient_fd("x1", {{"x1", 0.0}}, 1e-5) ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gradient_fd matches analytic derivatives of random quadratics") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> coef(-3.0, 3.0), pt(-2.0, 2.0);
    const auto fmt = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << "(" << v << ")";
        return os.str();
    };
    for (int trial = 0; trial < 50; ++trial) {
        const double a = coef(rng), b = coef(rng), c = coef(rng);
        const std::string text = fmt(a) + "*x1^2 + " + fmt(b) + "*x1 + " + fmt(c);
        const FieldExpr e = FieldExpr::parse(text);
        const double x = pt(rng);
        const double fd = e.gradient_fd("x1", {{"x1", x}}, 1e-5);
        const double exact = 2.0 * a * x + b;
        CHECK(std::abs(fd - exact) <= 1e-7 * std::max(1.0, std::abs(exact)));
    }
}

namespace {

// Random expression text over the four variables, for the round-trip property.
std::string random_expr(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
    std::uniform_real_distribution<double> lit(0.1, 4.0);
    static const char* vars[] = {"x1", "x2", "X1", "X2"};
    switch (pick(rng)) {
        case 0: return std::to_string(lit(rng));
        case 1: return vars[rng() % 4];
        case 2: return "pi";
        case 3: return "(" + random_expr(rng, depth - 1) + " + " + random_expr(rng, depth - 1) + ")";
        case 4: return "(" + random_expr(rng, depth - 1) + " - " + random_expr(rng, depth - 1) + ")";
        case 5: return random_expr(rng, depth - 1) + " * " + random_expr(rng, depth - 1);
        case 6: return "sin(" + random_expr(rng, depth - 1) + ")";
        case 7: return "cos(" + random_expr(rng, depth - 1) + ")";
        case 8: return "-" + random_expr(rng, depth - 1);
        default:
            return "(" + random_expr(rng, depth - 1) + ") / (4 + cos(" +
                   random_expr(rng, depth - 1) + "))";
    }
}

}  // namespace

TEST_CASE("pretty-print round trip evaluates bit-identically") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> pt(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::string text = random_expr(rng, 3);
        const FieldExpr original = FieldExpr::parse(text);
        const FieldExpr reparsed = FieldExpr::parse(original.pretty_print());
        for (int point = 0; point < 100; ++point) {
            const Bindings b = {
                {"x1", pt(rng)}, {"x2", pt(rng)}, {"X1", pt(rng)}, {"X2", pt(rng)}};
            CHECK(original.evaluate(b) == reparsed.evaluate(b));
        }
    }
}

TEST_CASE("variables are collected") {
    const auto vars = FieldExpr::parse("x1 + sin(X2*pi)").variables();
    CHECK(vars == std::set<std::string>{"x1", "X2"});
}
