#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bfv/engine.hpp"
#include "bfv/problem_io.hpp"

namespace py = pybind11;
using namespace bfv;

namespace {

py::object location(const std::optional<Location>& at) {
    if (!at) return py::none();
    return py::make_tuple(at->x1, at->x2, at->alpha);
}

std::string curves_csv(const ProblemSpec& p, unsigned threads) {
    std::ostringstream out;
    write_curves(problem_curves(p, {threads}), out);
    return out.str();
}

} // namespace

PYBIND11_MODULE(bfverify, m) {
    m.doc() = "Fuzzy-parameter PDE candidate verification";
    m.attr("__version__") = std::string(kToolVersion);

    auto domain_error = py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<EvalError>(m, "EvalError", PyExc_ArithmeticError);
    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    (void)domain_error;

    py::class_<TriangularFuzzyNumber>(m, "TriangularFuzzyNumber")
        .def(py::init<double, double, double>(), py::arg("left"), py::arg("peak"),
             py::arg("right"))
        .def_static("crisp", &TriangularFuzzyNumber::crisp)
        .def_property_readonly("left", &TriangularFuzzyNumber::left)
        .def_property_readonly("peak", &TriangularFuzzyNumber::peak)
        .def_property_readonly("right", &TriangularFuzzyNumber::right)
        .def("lower", &TriangularFuzzyNumber::lower, py::arg("alpha"))
        .def("upper", &TriangularFuzzyNumber::upper, py::arg("alpha"))
        .def("membership", &TriangularFuzzyNumber::membership, py::arg("value"))
        .def("__repr__", [](const TriangularFuzzyNumber& t) {
            std::ostringstream s;
            s << "TriangularFuzzyNumber(" << t.left() << ", " << t.peak() << ", " << t.right()
              << ")";
            return s.str();
        });

    m.def(
        "alpha_cut",
        [](const TriangularFuzzyNumber& t, double alpha) {
            auto c = alpha_cut(t, alpha);
            return py::make_tuple(c.lo, c.hi);
        },
        py::arg("number"), py::arg("alpha"), "Interval [lo, hi] of the alpha-cut.");

    py::class_<Expression>(m, "Expression")
        .def("__str__", &Expression::to_string)
        .def("__repr__", [](const Expression& e) { return "Expression('" + e.to_string() + "')"; })
        .def("__eq__", [](const Expression& a, const Expression& b) { return a == b; })
        .def_property_readonly("free_variables", [](const Expression& e) {
            auto vars = e.free_variables();
            return std::vector<std::string>(vars.begin(), vars.end());
        });

    m.def(
        "parse",
        [](const std::string& text, const std::vector<std::string>& params) {
            return parse(text, params);
        },
        py::arg("text"), py::arg("params") = std::vector<std::string>{});
    m.def(
        "evaluate",
        [](const Expression& e, const std::map<std::string, double>& values) {
            return evaluate(e, Binding(values.begin(), values.end()));
        },
        py::arg("expr"), py::arg("values"));
    m.def("differentiate", &differentiate, py::arg("expr"), py::arg("var"));

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<>())
        .def_readwrite("n_x1", &GridSpec::n_x1)
        .def_readwrite("n_x2", &GridSpec::n_x2)
        .def_readwrite("n_alpha", &GridSpec::n_alpha)
        .def_readwrite("epsilon_edge", &GridSpec::epsilon_edge)
        .def_readwrite("dense_per_axis", &GridSpec::dense_per_axis);

    py::class_<Tolerances>(m, "Tolerances")
        .def(py::init<>())
        .def_readwrite("eq_tol", &Tolerances::eq_tol)
        .def_readwrite("mono_tol", &Tolerances::mono_tol)
        .def_readwrite("denom_tol", &Tolerances::denom_tol)
        .def_readwrite("fallback_tol", &Tolerances::fallback_tol);

    py::class_<ProblemSpec>(m, "Problem")
        .def_readonly("name", &ProblemSpec::name)
        .def_readonly("G", &ProblemSpec::g_text)
        .def_readonly("F", &ProblemSpec::f_text)
        .def_readwrite("grid", &ProblemSpec::grid)
        .def_readwrite("tolerances", &ProblemSpec::tolerances)
        .def_property_readonly("parameters",
                               [](const ProblemSpec& p) {
                                   py::dict d;
                                   for (const auto& c : p.parameters) d[py::str(c.name)] = c.value;
                                   return d;
                               })
        .def("to_json", [](const ProblemSpec& p) { return dump_problem(p).dump(2); });

    m.def("load_problem", &load_problem, py::arg("path"));
    m.def(
        "parse_problem", [](const std::string& text) { return parse_problem_text(text); },
        py::arg("text"));

    py::class_<ConditionReport>(m, "ConditionReport")
        .def_readonly("name", &ConditionReport::name)
        .def_readonly("passed", &ConditionReport::pass)
        .def_readonly("margin", &ConditionReport::margin)
        .def_property_readonly("location",
                               [](const ConditionReport& c) { return location(c.location); });

    py::class_<CheckReport>(m, "CheckReport")
        .def_readonly("name", &CheckReport::name)
        .def_readonly("evaluated", &CheckReport::evaluated)
        .def_readonly("passed", &CheckReport::pass)
        .def_readonly("worst_violation", &CheckReport::worst_violation)
        .def_readonly("note", &CheckReport::note)
        .def_readonly("conditions", &CheckReport::conditions)
        .def_property_readonly("location",
                               [](const CheckReport& c) { return location(c.location); });

    py::class_<Verdict>(m, "Verdict")
        .def_property_readonly("outcome",
                               [](const Verdict& v) { return std::string(outcome_name(v.outcome)); })
        .def_readonly("approximate", &Verdict::approximate)
        .def_readonly("checks", &Verdict::checks)
        .def("check", &Verdict::check, py::arg("name"), py::return_value_policy::reference_internal);

    m.def(
        "verify",
        [](const ProblemSpec& p, unsigned threads) {
            py::gil_scoped_release release;
            return verify(p, {threads});
        },
        py::arg("problem"), py::arg("threads") = 0u);
    m.def(
        "report_json",
        [](const Verdict& v, const std::string& name) { return report_json(v, name).dump(2); },
        py::arg("verdict"), py::arg("name") = std::string{});
    m.def(
        "curves_csv",
        [](const ProblemSpec& p, unsigned threads) {
            py::gil_scoped_release release;
            return curves_csv(p, threads);
        },
        py::arg("problem"), py::arg("threads") = 0u);
}
