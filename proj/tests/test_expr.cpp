#include <doctest.h>

#include <cmath>

#include "bfv/expr.hpp"
#include "random_expr.hpp"

using namespace bfv;

namespace {

const std::vector<std::string> kBG{"beta", "gamma"};

Binding bind(std::initializer_list<std::pair<const std::string, double>> kv) { return Binding(kv); }

} // namespace

TEST_CASE("parse builds the expected tree") {
    auto e = parse("x1^beta * x2 + gamma", kBG);
    REQUIRE(e.kind() == NodeKind::Add);
    const Node& mul = *e.root().lhs;
    REQUIRE(mul.kind == NodeKind::Mul);
    CHECK(mul.lhs->kind == NodeKind::Pow);
    CHECK(mul.lhs->lhs->name == "x1");
    CHECK(mul.lhs->rhs->name == "beta");
    CHECK(mul.rhs->name == "x2");
    CHECK(e.root().rhs->name == "gamma");

    auto x = parse("x1");
    CHECK(x.kind() == NodeKind::Variable);
    CHECK(x.root().name == "x1");
}

TEST_CASE("operator precedence and associativity") {
    auto v = bind({{"x1", 2}, {"x2", 3}});
    CHECK(evaluate(parse("2^3^2"), v) == 512.0);
    CHECK(evaluate(parse("-x1^2"), v) == -4.0);
    CHECK(evaluate(parse("x2 - x1 - 1"), v) == 0.0);
    CHECK(evaluate(parse("12 / x1 / x2"), v) == 2.0);
    CHECK(evaluate(parse("x1^-1"), v) == 0.5);
    CHECK(evaluate(parse("(x1 + x2) * 2"), v) == 10.0);
    CHECK(evaluate(parse("1.5e1 + .5"), v) == 15.5);
    CHECK(evaluate(parse("sqrt(x1 * 8) + ln(exp(x2))"), v) == doctest::Approx(7.0));
    CHECK(evaluate(parse("sin(0) + cos(0)"), v) == 1.0);
}

TEST_CASE("parse errors carry a position") {
    try {
        (void)parse("x1 + * x2");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 5);
    }
    try {
        (void)parse("x1 * delta", kBG);
        FAIL("expected UndeclaredIdentifierError");
    } catch (const UndeclaredIdentifierError& e) {
        CHECK(e.name() == "delta");
        CHECK(e.position() == 5);
    }
    CHECK_THROWS_AS((void)parse(""), ParseError);
    CHECK_THROWS_AS((void)parse("   "), ParseError);
    CHECK_THROWS_AS((void)parse("(x1 + x2"), ParseError);
    CHECK_THROWS_AS((void)parse("x1 x2"), ParseError);
    CHECK_THROWS_AS((void)parse("exp x1"), ParseError);
    CHECK_THROWS_AS((void)parse("x1 + 2x2"), ParseError);
    CHECK_THROWS_AS((void)parse("x1", {"sin"}), std::invalid_argument);
    CHECK_THROWS_AS((void)parse("x1", {"x2"}), std::invalid_argument);
}

TEST_CASE("evaluate") {
    auto g = parse("x1^beta*x2+gamma", kBG);
    CHECK(evaluate(g, bind({{"x1", 1}, {"x2", 5}, {"beta", 0.5}, {"gamma", 0}})) == 5.0);
    CHECK(evaluate(g, bind({{"x1", 4}, {"x2", 1}, {"beta", 0.5}, {"gamma", 2}})) == 4.0);
    CHECK(evaluate(parse("beta * x2 / x1", {"beta"}),
                   bind({{"beta", 0.5}, {"x1", 2}, {"x2", 3}})) == 0.75);
}

TEST_CASE("evaluation errors name the offending node") {
    auto at = bind({{"x1", 1}, {"x2", 0}});
    try {
        (void)evaluate(parse("x1/x2"), at);
        FAIL("expected EvalError");
    } catch (const EvalError& e) {
        CHECK(e.node() == "x1 / x2");
        CHECK(std::string(e.what()).find("division by zero") != std::string::npos);
    }
    CHECK_THROWS_AS((void)evaluate(parse("ln(x2)"), at), EvalError);
    CHECK_THROWS_AS((void)evaluate(parse("sqrt(x2 - 1)"), at), EvalError);
    CHECK_THROWS_AS((void)evaluate(parse("x2^(-1)"), at), EvalError);
    CHECK_THROWS_AS((void)evaluate(parse("(x2 - 1)^0.5"), at), EvalError);
    CHECK(evaluate(parse("(x2 - 2)^3"), at) == -8.0);
    CHECK(evaluate(parse("x2^0"), at) == 1.0);
    CHECK_THROWS_AS((void)evaluate(parse("beta", {"beta"}), at), EvalError);
}

TEST_CASE("differentiate matches hand derivatives") {
    auto g = parse("x1^beta*x2+gamma", kBG);
    CHECK(differentiate(g, "x1") == parse("beta*x1^(beta-1)*x2", kBG));
    CHECK(differentiate(g, "x1").to_string() == "beta * x1^(beta - 1) * x2");
    CHECK(differentiate(g, "x2") == parse("x1^beta", kBG));
    CHECK(differentiate(parse("gamma", kBG), "x1") == parse("0"));
    CHECK(differentiate(parse("x1^2"), "x1") == parse("2 * x1"));
    CHECK(differentiate(parse("x1 * x2"), "x2") == parse("x1"));
}

TEST_CASE("differentiate handles variable exponents via exp-ln") {
    auto e = parse("x1^x2");
    auto d = differentiate(e, "x1");
    auto at = bind({{"x1", 2}, {"x2", 3}});
    CHECK(evaluate(d, at) == doctest::Approx(12.0));
    auto dx2 = differentiate(e, "x2");
    CHECK(evaluate(dx2, at) == doctest::Approx(8.0 * std::log(2.0)));
    auto both = differentiate(parse("x1^x1"), "x1");
    CHECK(evaluate(both, bind({{"x1", 2}})) == doctest::Approx(4.0 * (std::log(2.0) + 1.0)));
}

TEST_CASE("finite_difference") {
    CHECK(finite_difference(parse("x1^2"), "x1", bind({{"x1", 3}}), 1e-5) ==
          doctest::Approx(6.0).epsilon(1e-9));
    CHECK(finite_difference(parse("gamma", kBG), "x1", bind({{"x1", 3}, {"gamma", 1}}), 1e-5) ==
          0.0);
    auto e = parse("x1^beta*x2", kBG);
    auto at = bind({{"x1", 2}, {"x2", 3}, {"beta", 0.5}});
    double sym = evaluate(differentiate(e, "x1"), at);
    double fd = finite_difference(e, "x1", at, 1e-5);
    CHECK(std::abs(sym - fd) <= 1e-6 * std::abs(sym));
    CHECK_THROWS_AS((void)finite_difference(e, "x1", at, 0.0), std::invalid_argument);
}

TEST_CASE("builders fold constants and drop identities") {
    auto x = Expression::variable("x1");
    CHECK(make_add(x, Expression::constant(0)) == x);
    CHECK(make_mul(Expression::constant(1), x) == x);
    CHECK(make_mul(x, Expression::constant(0)) == Expression::constant(0));
    CHECK(make_pow(x, Expression::constant(1)) == x);
    CHECK(make_sub(Expression::constant(2), Expression::constant(5)) == Expression::constant(-3));
    CHECK(make_neg(make_neg(x)) == x);
    CHECK(make_div(Expression::constant(1), Expression::constant(0)).kind() == NodeKind::Div);
    CHECK(make_call(NodeKind::Ln, Expression::constant(1)) == Expression::constant(0));
    CHECK(make_call(NodeKind::Ln, Expression::constant(-1)).kind() == NodeKind::Ln);
    CHECK(Expression::constant(-3).to_string() == "-3");
}

TEST_CASE("printing then parsing is the identity on random trees") {
    testing::ExprGenerator gen(7);
    for (int n = 0; n < 500; ++n) {
        auto e = gen.any(4);
        auto text = e.to_string();
        INFO(text);
        REQUIRE(parse(text, testing::random_params()) == e);
    }
    auto tricky = parse("-(x1 - x2) - -x1 + (x1^x2)^2 + x1^-x2^2 + 2^(x1 * x2) + -1e-05");
    CHECK(parse(tricky.to_string()) == tricky);
}

TEST_CASE("symbolic derivative agrees with central differences on random trees") {
    testing::ExprGenerator gen(11);
    int checked = 0;
    for (int n = 0; n < 300; ++n) {
        auto e = gen.any(3);
        auto at = gen.binding();
        for (const char* var : {"x1", "x2", "beta"}) {
            double sym = evaluate(differentiate(e, var), at);
            double fd = finite_difference(e, var, at, 1e-5);
            INFO(e.to_string(), " d/d", var);
            REQUIRE(std::abs(sym - fd) <= 1e-6 * (1.0 + std::abs(sym)));
            ++checked;
        }
    }
    CHECK(checked == 900);
}

TEST_CASE("differentiation is linear") {
    testing::ExprGenerator gen(13);
    for (int n = 0; n < 200; ++n) {
        auto a = gen.any(3);
        auto b = gen.any(3);
        auto at = gen.binding();
        double whole = evaluate(differentiate(make_add(a, b), "x1"), at);
        double parts = evaluate(differentiate(a, "x1"), at) + evaluate(differentiate(b, "x1"), at);
        REQUIRE(whole == doctest::Approx(parts).epsilon(1e-12));
    }
}

TEST_CASE("compiled evaluation matches tree evaluation") {
    testing::ExprGenerator gen(17);
    const std::vector<std::string> slots{"x1", "x2", "beta"};
    for (int n = 0; n < 300; ++n) {
        auto e = gen.any(4);
        auto at = gen.binding();
        CompiledExpression c(e, slots);
        std::vector<double> values{at["x1"], at["x2"], at["beta"]};
        REQUIRE(c(values) == evaluate(e, at));
    }
    CHECK_THROWS_AS(CompiledExpression(parse("beta", {"beta"}), {"x1"}), EvalError);
    CompiledExpression div(parse("x1 / x2"), {"x1", "x2"});
    std::vector<double> zero{1.0, 0.0};
    CHECK_THROWS_AS((void)div(zero), EvalError);
}
