#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conewalk/expr.hpp"
#include "conewalk/rng.hpp"

#include <cmath>
#include <functional>

using namespace conewalk;

namespace {

Vec point1(double x) {
    Vec v(1);
    v << x;
    return v;
}

// Reference evaluator walking the exported node pool directly; kept separate
// from Expr::eval so the two routes stay independent.
double reference_eval(const Expr& e, const Vec& x) {
    using Kind = ExprNode::Kind;
    std::function<double(int)> go = [&](int id) -> double {
        const ExprNode& n = e.nodes()[static_cast<std::size_t>(id)];
        switch (n.kind) {
            case Kind::number: return n.number;
            case Kind::variable: return x[n.var];
            case Kind::negate: return -go(n.lhs);
            case Kind::add: return go(n.lhs) + go(n.rhs);
            case Kind::sub: return go(n.lhs) - go(n.rhs);
            case Kind::mul: return go(n.lhs) * go(n.rhs);
            case Kind::div: return go(n.lhs) / go(n.rhs);
            case Kind::call_min: return std::fmin(go(n.lhs), go(n.rhs));
            case Kind::call_max: return std::fmax(go(n.lhs), go(n.rhs));
            case Kind::call_exp: return std::exp(go(n.lhs));
            case Kind::call_tanh: return std::tanh(go(n.lhs));
        }
        return 0.0;
    };
    return go(e.root());
}

// Random expression text built from a grammar walk; always parseable.
std::string random_expr_text(RandomStream& rng, int depth, int arity) {
    const double pick = rng.uniform();
    if (depth <= 0 || pick < 0.25) {
        if (rng.uniform() < 0.5) {
            const double v = std::round(rng.uniform_in(-8.0, 8.0) * 16.0) / 16.0;
            return v < 0 ? "(" + format_double(v) + ")" : format_double(v);
        }
        return "x" + std::to_string(static_cast<int>(rng.uniform() * arity));
    }
    if (pick < 0.45) {
        return "-(" + random_expr_text(rng, depth - 1, arity) + ")";
    }
    if (pick < 0.75) {
        const char* ops[] = {"+", "-", "*", "/"};
        const int op = static_cast<int>(rng.uniform() * 4.0);
        return "(" + random_expr_text(rng, depth - 1, arity) + " " + ops[op] + " " +
               random_expr_text(rng, depth - 1, arity) + ")";
    }
    if (pick < 0.85) {
        return "min(" + random_expr_text(rng, depth - 1, arity) + ", " +
               random_expr_text(rng, depth - 1, arity) + ")";
    }
    if (pick < 0.95) {
        return "max(" + random_expr_text(rng, depth - 1, arity) + ", " +
               random_expr_text(rng, depth - 1, arity) + ")";
    }
    return "tanh(" + random_expr_text(rng, depth - 1, arity) + ")";
}

}  // namespace

TEST_CASE("literals and precedence") {
    CHECK(Expr::parse("-1", 1).eval(point1(0)) == -1.0);
    CHECK(Expr::parse("-1 + 0*x0", 1).eval(point1(5.0)) == -1.0);
    CHECK(Expr::parse("2 + 3*4", 1).eval(point1(0)) == 14.0);
    CHECK(Expr::parse("(2 + 3)*4", 1).eval(point1(0)) == 20.0);
    CHECK(Expr::parse("2 - 3 - 4", 1).eval(point1(0)) == -5.0);
    CHECK(Expr::parse("16/4/2", 1).eval(point1(0)) == 2.0);
    CHECK(Expr::parse("1.5e2", 1).eval(point1(0)) == 150.0);
    CHECK(Expr::parse("2.5E-1", 1).eval(point1(0)) == 0.25);
}

TEST_CASE("functions") {
    CHECK(Expr::parse("max(-2, -1 - x0)", 1).eval(point1(0.5)) == -1.5);
    CHECK(Expr::parse("min(-1, -x0)", 1).eval(point1(2.0)) == -2.0);
    CHECK(Expr::parse("exp(0)", 1).eval(point1(0)) == 1.0);
    CHECK(Expr::parse("tanh(0)", 1).eval(point1(0)) == 0.0);
    CHECK(Expr::parse("exp(x0)", 1).eval(point1(1.0)) == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("variables beyond the arity are parse errors") {
    CHECK_THROWS_AS(Expr::parse("x1", 1), ParseError);
    CHECK_THROWS_AS(Expr::parse("x0 + y", 2), ParseError);
    CHECK_THROWS_AS(Expr::parse("", 1), ParseError);
    CHECK_THROWS_AS(Expr::parse("1 +", 1), ParseError);
    CHECK_THROWS_AS(Expr::parse("min(1)", 1), ParseError);
    CHECK_THROWS_AS(Expr::parse("foo(1)", 1), ParseError);
    CHECK_THROWS_AS(Expr::parse("1 2", 1), ParseError);
}

TEST_CASE("division by zero is an evaluation error, not infinity") {
    const Expr e = Expr::parse("1/x0", 1);
    CHECK(e.eval(point1(2.0)) == 0.5);
    CHECK_THROWS_AS(e.eval(point1(0.0)), EvalError);
}

TEST_CASE("parse errors carry a position") {
    try {
        Expr::parse("1 + $", 1);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position == 4);
    }
}

TEST_CASE("canonical printer round-trips") {
    const char* samples[] = {
        "-1",
        "-x0*x1",
        "-(x0*x1)",
        "1 - (2 - 3)",
        "x0/(x1/2)",
        "min(-1, max(x0, 0.5))",
        "tanh(exp(-x0) + 1e-3)",
        "2*(x0 + 1)",
    };
    for (const char* text : samples) {
        const Expr parsed = Expr::parse(text, 2);
        const Expr reparsed = Expr::parse(parsed.str(), 2);
        CHECK_MESSAGE(parsed.structurally_equal(reparsed), "round trip failed for: ", text,
                      " printed as: ", parsed.str());
    }
}

TEST_CASE("evaluation matches the reference on 1000 random trees") {
    RandomStream rng(1303, 0);
    int checked = 0;
    while (checked < 1000) {
        const std::string text = random_expr_text(rng, 4, 2);
        const Expr e = Expr::parse(text, 2);

        const Expr round = Expr::parse(e.str(), 2);
        CHECK_MESSAGE(e.structurally_equal(round), "round trip failed for: ", text);

        Vec x(2);
        x << rng.uniform_in(-3.0, 3.0), rng.uniform_in(-3.0, 3.0);
        double via_expr = 0.0;
        bool threw = false;
        try {
            via_expr = e.eval(x);
        } catch (const EvalError&) {
            threw = true;  // division by zero on this sample; skip it
        }
        if (threw) continue;
        const double via_reference = reference_eval(e, x);
        // Same tree, same operation order: results must agree exactly.
        CHECK((via_expr == via_reference ||
               (std::isnan(via_expr) && std::isnan(via_reference))));
        ++checked;
    }
}
