#include <doctest.h>

#include <cmath>
#include <random>

#include "bfv/engine.hpp"
#include "bfv/problem_io.hpp"
#include "random_expr.hpp"

using namespace bfv;

namespace {

FuzzyVector example_params() {
    return FuzzyVector({{"beta", TriangularFuzzyNumber(0.25, 0.5, 0.75)},
                        {"gamma", TriangularFuzzyNumber(0, 1, 2)}});
}

const std::vector<std::string> kBG{"beta", "gamma"};

ProblemSpec problem(const std::string& g, const std::string& f,
                    const std::string& extra = R"("grid": {"x1": 11, "x2": 11, "alpha": 11})") {
    std::string text = R"({"name": "t", "G": ")" + g + R"(", "F": ")" + f + R"(",
        "parameters": {"beta": [0.25, 0.5, 0.75], "gamma": [0, 1, 2]},
        "domain": {"x1": [1, 5], "x2": [0, 5, "open", "closed"]})";
    if (!extra.empty()) text += ", " + extra;
    text += "}";
    return parse_problem_text(text);
}

DomainBox example_box() {
    DomainBox box;
    box.x1 = {1, 5, false, false};
    box.x2 = {0, 5, true, false};
    return box;
}

} // namespace

TEST_CASE("envelope of the worked candidate") {
    auto g = parse("x1^beta * x2 + gamma", kBG);
    auto e0 = envelope(g, example_params(), 2, 3, 0);
    CHECK_FALSE(e0.approximate);
    CHECK(e0.lower == doctest::Approx(3.5676213450081633).epsilon(1e-14));
    CHECK(e0.upper == doctest::Approx(7.045378491522287).epsilon(1e-14));
    CHECK(e0.argmin == std::vector<double>{0.25, 0.0});
    CHECK(e0.argmax == std::vector<double>{0.75, 2.0});
    auto e1 = envelope(g, example_params(), 2, 3, 1);
    CHECK(e1.lower == doctest::Approx(5.242640687119286).epsilon(1e-14));
    CHECK(e1.upper == e1.lower);
}

TEST_CASE("decreasing parameters select the opposite cut end") {
    FuzzyVector p({{"beta", TriangularFuzzyNumber(1, 2, 3)}});
    auto e = envelope(parse("x2 / beta", {"beta"}), p, 1, 6, 0);
    CHECK(e.lower == 2.0);
    CHECK(e.upper == 6.0);
    CHECK_FALSE(e.approximate);
}

TEST_CASE("parameters absent from the expression are ignored") {
    auto e = envelope(parse("x1 * x2"), example_params(), 2, 3, 0);
    CHECK(e.lower == 6.0);
    CHECK(e.upper == 6.0);
}

TEST_CASE("mixed-sign partials fall back to box sampling") {
    FuzzyVector p({{"beta", TriangularFuzzyNumber(0, 1, 2)}});
    auto e = envelope(parse("(beta - 1)^2 + x1", {"beta"}), p, 0, 0, 0);
    CHECK(e.approximate);
    CHECK(e.lower == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(e.upper == doctest::Approx(1.0));
}

TEST_CASE("envelopes are sound and nested") {
    testing::ExprGenerator gen(23);
    FuzzyVector p({{"beta", TriangularFuzzyNumber(0.6, 1.0, 1.8)}});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int exact = 0;
    for (int n = 0; n < 200; ++n) {
        auto e = gen.any(3);
        EnvelopeEvaluator ev(e, p);
        const double x1 = 0.5 + 1.5 * u(rng);
        const double x2 = 0.5 + 1.5 * u(rng);
        const double a = u(rng);
        const double b = a + (1.0 - a) * u(rng);
        auto outer = ev(x1, x2, a);
        auto inner = ev(x1, x2, b);
        const double slack = 1e-9 * (1.0 + std::abs(outer.lower) + std::abs(outer.upper));
        INFO(e.to_string());
        CHECK(outer.lower <= outer.upper);
        if (outer.approximate || inner.approximate) continue;
        ++exact;
        CHECK(inner.lower >= outer.lower - slack);
        CHECK(inner.upper <= outer.upper + slack);
        auto cut = alpha_cut(p[0].value, a);
        for (int s = 0; s < 20; ++s) {
            double v = ev.value(x1, x2, {cut.lo + (cut.hi - cut.lo) * u(rng)});
            CHECK(v >= outer.lower - slack);
            CHECK(v <= outer.upper + slack);
        }
    }
    CHECK(exact > 100);
}

TEST_CASE("grid axes") {
    AxisRange open_lo{0, 5, true, false};
    auto xs = axis_samples(open_lo, 6, 1e-6);
    CHECK(xs.front() == doctest::Approx(5e-6));
    CHECK(xs.back() == 5.0);
    AxisRange closed{1, 5, false, false};
    xs = axis_samples(closed, 5, 1e-6);
    CHECK(xs == std::vector<double>{1, 2, 3, 4, 5});
    auto axes = make_axes(example_box(), GridSpec{});
    CHECK(axes.x1.size() == 41);
    CHECK(axes.alpha.size() == 21);
    CHECK(axes.alpha.front() == 0.0);
    CHECK(axes.alpha.back() == 1.0);
    CHECK_THROWS_AS((void)axis_samples(closed, 1, 1e-6), DomainError);
}

TEST_CASE("Gamma of the worked candidate is b_i(alpha) x2 / x1") {
    auto g = parse("x1^beta * x2 + gamma", kBG);
    GridSpec grid{.n_x1 = 9, .n_x2 = 9, .n_alpha = 11};
    auto gc = gamma_curves(g, example_params(), example_box(), grid);
    REQUIRE_FALSE(gc.error);
    const auto& c = gc.curve;
    double worst = 0.0;
    for (std::size_t i = 0; i < c.axes.x1.size(); ++i) {
        for (std::size_t j = 0; j < c.axes.x2.size(); ++j) {
            for (std::size_t k = 0; k < c.axes.alpha.size(); ++k) {
                const double a = c.axes.alpha[k];
                const double r = c.axes.x2[j] / c.axes.x1[i];
                const auto& s = c.at(i, j, k);
                worst = std::max(worst, std::abs(s.lower - (0.25 + 0.25 * a) * r));
                worst = std::max(worst, std::abs(s.upper - (0.75 - 0.25 * a) * r));
            }
        }
    }
    CHECK(worst <= 1e-12);
    CHECK(gc.min_abs_denominator == doctest::Approx(1.0));
}

TEST_CASE("Gamma of a crisp candidate") {
    auto g = parse("x1 * x2");
    GridSpec grid{.n_x1 = 5, .n_x2 = 5, .n_alpha = 3};
    DomainBox box;
    box.x1 = {1, 3, false, false};
    box.x2 = {1, 3, false, false};
    auto c = gamma_curves(g, FuzzyVector({{"k", TriangularFuzzyNumber::crisp(1)}}), box, grid).curve;
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            const auto& s = c.at(i, j, 1);
            CHECK(s.lower == doctest::Approx(c.axes.x2[j] / c.axes.x1[i]));
            CHECK(s.upper == s.lower);
        }
    }
}

TEST_CASE("differentiability conditions on hand-built curves") {
    EnvelopeCurve c;
    c.role = CurveRole::Gamma;
    c.axes = {{1.0}, {1.0}, {0.0, 0.5, 1.0}};
    c.samples = {{1.0, 3.0}, {1.5, 2.5}, {2.0, 2.0}};
    auto ok = check_differentiability(c, 1e-8);
    CHECK(ok.pass);
    CHECK(ok.conditions.size() == 3);
    CHECK(ok.conditions[2].margin == 0.0);

    c.samples = {{1.0, 3.0}, {0.9, 2.5}, {2.0, 2.0}};
    auto bad1 = check_differentiability(c, 1e-8);
    CHECK_FALSE(bad1.pass);
    CHECK_FALSE(bad1.conditions[0].pass);
    CHECK(bad1.conditions[1].pass);
    CHECK(bad1.worst_violation == doctest::Approx(0.1));
    CHECK(bad1.location->alpha == 0.5);

    c.samples = {{1.0, 3.0}, {1.5, 3.5}, {2.5, 2.0}};
    auto bad = check_differentiability(c, 1e-8);
    CHECK_FALSE(bad.conditions[1].pass);
    CHECK_FALSE(bad.conditions[2].pass);
    CHECK(bad.worst_violation == doctest::Approx(0.5));

    c.samples = {{1.0, 3.0}, {1.0 - 1e-9, 3.0 + 1e-9}, {2.0, 2.0}};
    CHECK(check_differentiability(c, 1e-8).pass);
    c.samples[1].upper = std::nan("");
    CHECK_FALSE(check_differentiability(c, 1e-8).pass);
}

TEST_CASE("equality uses the scaled residual") {
    EnvelopeCurve g;
    g.axes = {{1.0}, {1.0}, {0.0}};
    g.samples = {{1.0, 3.0}};
    EnvelopeCurve f = g;
    f.samples = {{1.0, 4.0}};
    auto r = check_equality(g, f, 1e-8);
    CHECK_FALSE(r.pass);
    CHECK(r.worst_violation == doctest::Approx(0.2));
    CHECK(r.conditions[0].pass);
    CHECK_FALSE(r.conditions[1].pass);
    f.samples = {{1.0 + 1e-9, 3.0}};
    CHECK(check_equality(g, f, 1e-8).pass);
    f.samples.push_back({});
    CHECK_THROWS_AS((void)check_equality(g, f, 1e-8), std::invalid_argument);
}

TEST_CASE("fuzzy validity flags inverted envelopes") {
    EnvelopeCurve y;
    y.axes = {{1.0}, {1.0}, {0.0, 1.0}};
    y.samples = {{1.0, 2.0}, {1.5, 1.5}};
    CHECK(check_fuzzy_validity({&y}).pass);
    y.samples[0] = {2.0, 1.0};
    auto r = check_fuzzy_validity({&y});
    CHECK_FALSE(r.pass);
    CHECK(r.conditions[0].name == "Y_ordered");
    CHECK(r.worst_violation == doctest::Approx(1.0));
}

TEST_CASE("structure check") {
    GridSpec grid{.n_x1 = 9, .n_x2 = 9, .n_alpha = 5};
    Tolerances tol;
    auto good = check_structure(parse("x1^beta * x2 + gamma", kBG), example_params(), example_box(),
                                grid, tol);
    CHECK(good.pass);
    auto flat = check_structure(parse("gamma", kBG), example_params(), example_box(), grid, tol);
    CHECK_FALSE(flat.pass);
    auto bent = check_structure(parse("x1^beta * (x2 - 3)^2 + gamma", kBG), example_params(),
                                example_box(), grid, tol);
    CHECK_FALSE(bent.pass);
    CHECK_FALSE(bent.conditions[1].pass);
    auto negative = check_structure(parse("x2 - 10"), example_params(), example_box(), grid, tol);
    CHECK_FALSE(negative.conditions[0].pass);
    auto decreasing = check_structure(parse("10 - x2"), example_params(), example_box(), grid, tol);
    CHECK(decreasing.pass);
}

TEST_CASE("boundary check") {
    auto g = parse("x1^beta * x2 + gamma", kBG);
    GridSpec grid{.n_x1 = 9, .n_x2 = 9, .n_alpha = 5};
    Tolerances tol;
    auto vacuous = check_boundary(g, example_params(), {}, example_box(), grid, tol);
    CHECK(vacuous.pass);
    CHECK(vacuous.note == "no conditions");

    BoundaryCondition bc{Axis::X2, 0.0, "gamma", parse("gamma", kBG)};
    auto ok = check_boundary(g, example_params(), {bc}, example_box(), grid, tol);
    CHECK(ok.pass);
    CHECK(ok.conditions.size() == 1);

    bc.target_text = "0";
    bc.target = parse("0");
    auto bad = check_boundary(g, example_params(), {bc}, example_box(), grid, tol);
    CHECK_FALSE(bad.pass);
    CHECK(bad.worst_violation == doctest::Approx(2.0));
    CHECK(bad.location->x2 == 0.0);
}

TEST_CASE("verify outcomes") {
    CHECK(verify(problem("x1^beta * x2 + gamma", "beta * x2 / x1")).outcome == Outcome::BfSolution);
    CHECK(verify(problem("x1^beta * x2 + gamma", "beta * x2^2 / x1")).outcome ==
          Outcome::EqualityFails);
    CHECK(verify(problem("gamma", "0")).outcome == Outcome::StructureFails);
    CHECK(verify(problem("x1^beta * (x2 - 3)^2 + gamma", "0")).outcome == Outcome::StructureFails);
    CHECK(verify(problem("beta * x2 + x1", "1 / beta")).outcome == Outcome::NotDifferentiable);
    CHECK(verify(problem("x1^beta * x2 + gamma", "beta * x2 / x1",
                         R"("grid": {"x1": 9, "x2": 9, "alpha": 5},
                            "boundary": [{"fix": "x2", "at": 0, "target": "0"}])"))
              .outcome == Outcome::BoundaryFails);
    auto v = verify(problem("x1^beta * x2 + gamma", "beta * x2 / x1",
                            R"("boundary": [{"fix": "x2", "at": 0, "target": "gamma"}])"));
    CHECK(v.outcome == Outcome::BfSolution);
    CHECK(v.checks.size() == 5);
    CHECK(v.check("boundary").pass);
    CHECK_THROWS_AS((void)v.check("nope"), std::out_of_range);
}

TEST_CASE("box-sampled candidates") {
    auto ok = verify(problem("(beta - 0.5)^2 * x1 + x2 + gamma", "(beta - 0.5)^2"));
    CHECK(ok.approximate);
    CHECK(ok.outcome == Outcome::BfSolution);
    auto bad = verify(problem("((beta - 0.5)^2 + 1) * x2 + x1", "0"));
    CHECK(bad.approximate);
    CHECK(bad.outcome == Outcome::NotDifferentiable);
    CHECK_FALSE(bad.check("differentiability").conditions[1].pass);
}

TEST_CASE("evaluation failures are reported, not thrown") {
    auto v = verify(problem("x2 / (x1 - 3) + gamma", "0"));
    CHECK(v.outcome == Outcome::StructureFails);
    const auto& s = v.check("structure");
    CHECK(s.note.find("division by zero") != std::string::npos);
    CHECK(s.location->x1 == 3.0);
    CHECK_FALSE(v.check("equality").evaluated);
    CHECK_FALSE(v.check("equality").pass);
}

TEST_CASE("results do not depend on the thread count") {
    auto p = problem("x1^beta * x2 + gamma", "beta * x2^2 / x1");
    auto one = report_json(verify(p, {.threads = 1}), "t").dump();
    auto four = report_json(verify(p, {.threads = 4}), "t").dump();
    CHECK(one == four);
}

TEST_CASE("domain constraints deactivate samples") {
    auto p = problem("x1^beta * x2 + gamma", "beta * x2 / x1");
    p.box.constraint_text = "x1 - x2";
    p.box.constraint = parse("x1 - x2");
    auto curves = problem_curves(p);
    REQUIRE(curves.size() == 3);
    const auto& y = curves[2];
    CHECK(y.role == CurveRole::Y);
    for (std::size_t i = 0; i < y.axes.x1.size(); ++i) {
        for (std::size_t j = 0; j < y.axes.x2.size(); ++j) {
            CHECK(y.at(i, j, 0).active == (y.axes.x1[i] >= y.axes.x2[j]));
        }
    }
    CHECK(verify(p).outcome == Outcome::BfSolution);
}
