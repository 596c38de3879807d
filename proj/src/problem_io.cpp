#include "bfv/problem_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace bfv {

namespace {

std::string child(const std::string& pointer, std::string_view key) {
    std::string escaped;
    for (char c : key) {
        if (c == '~') {
            escaped += "~0";
        } else if (c == '/') {
            escaped += "~1";
        } else {
            escaped += c;
        }
    }
    return pointer + "/" + escaped;
}

std::string child(const std::string& pointer, std::size_t index) {
    return pointer + "/" + std::to_string(index);
}

void check_keys(const ordered_json& obj, const std::string& pointer,
                std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw SchemaError(child(pointer, key), "unknown key '" + key + "'");
        }
    }
}

const ordered_json& require(const ordered_json& obj, std::string_view key,
                            const std::string& pointer) {
    auto it = obj.find(std::string(key));
    if (it == obj.end()) {
        throw SchemaError(child(pointer, key), "missing required key '" + std::string(key) + "'");
    }
    return *it;
}

double as_number(const ordered_json& v, const std::string& pointer) {
    if (!v.is_number()) throw SchemaError(pointer, "expected a number");
    return v.get<double>();
}

int as_count(const ordered_json& v, const std::string& pointer) {
    if (!v.is_number_integer()) throw SchemaError(pointer, "expected an integer");
    auto n = v.get<long long>();
    if (n < 2 || n > 1'000'000) throw SchemaError(pointer, "count must lie in [2, 1000000]");
    return static_cast<int>(n);
}

std::string as_string(const ordered_json& v, const std::string& pointer) {
    if (!v.is_string()) throw SchemaError(pointer, "expected a string");
    return v.get<std::string>();
}

Expression parse_at(const std::string& text, const std::vector<std::string>& params,
                    const std::string& pointer) {
    try {
        return parse(text, params);
    } catch (const ParseError& e) {
        throw SchemaError(pointer, e.what(), e.position());
    }
}

bool parse_end(const ordered_json& v, const std::string& pointer) {
    auto s = as_string(v, pointer);
    if (s == "open") return true;
    if (s == "closed") return false;
    throw SchemaError(pointer, "end kind must be \"open\" or \"closed\"");
}

AxisRange parse_axis(const ordered_json& v, const std::string& pointer) {
    if (!v.is_array() || v.size() < 2 || v.size() > 4) {
        throw SchemaError(pointer, "axis must be [lo, hi] or [lo, hi, end-kind(s)]");
    }
    AxisRange r;
    r.lo = as_number(v[0], child(pointer, 0));
    r.hi = as_number(v[1], child(pointer, 1));
    if (v.size() == 3) {
        r.lo_open = r.hi_open = parse_end(v[2], child(pointer, 2));
    } else if (v.size() == 4) {
        r.lo_open = parse_end(v[2], child(pointer, 2));
        r.hi_open = parse_end(v[3], child(pointer, 3));
    }
    return r;
}

ordered_json dump_axis(const AxisRange& r) {
    return ordered_json::array({r.lo, r.hi, r.lo_open ? "open" : "closed",
                                r.hi_open ? "open" : "closed"});
}

ordered_json dump_location(const std::optional<Location>& at) {
    if (!at) return nullptr;
    ordered_json j;
    j["x1"] = at->x1;
    j["x2"] = at->x2;
    j["alpha"] = at->alpha;
    return j;
}

ordered_json dump_grid(const GridSpec& g) {
    ordered_json j;
    j["x1"] = g.n_x1;
    j["x2"] = g.n_x2;
    j["alpha"] = g.n_alpha;
    j["epsilon_edge"] = g.epsilon_edge;
    j["dense_per_axis"] = g.dense_per_axis;
    return j;
}

ordered_json dump_tolerances(const Tolerances& t) {
    ordered_json j;
    j["eq_tol"] = t.eq_tol;
    j["mono_tol"] = t.mono_tol;
    j["denom_tol"] = t.denom_tol;
    j["fallback_tol"] = t.fallback_tol;
    return j;
}

template <typename Fn>
void rethrow_domain(const std::string& pointer, Fn fn) {
    try {
        fn();
    } catch (const DomainError& e) {
        throw SchemaError(pointer, e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

} // namespace

SchemaError::SchemaError(std::string pointer, const std::string& message,
                         std::optional<std::size_t> offset)
    : std::runtime_error((pointer.empty() ? std::string("/") : pointer) + ": " + message),
      pointer_(std::move(pointer)), offset_(offset) {}

ProblemSpec parse_problem(const ordered_json& doc) {
    const std::string root;
    if (!doc.is_object()) throw SchemaError(root, "problem must be a JSON object");
    check_keys(doc, root,
               {"name", "G", "F", "parameters", "domain", "boundary", "grid", "tolerances"});

    std::string name = "unnamed";
    if (doc.contains("name")) name = as_string(doc["name"], "/name");

    // Parameters
    const auto& jp = require(doc, "parameters", root);
    if (!jp.is_object() || jp.empty()) {
        throw SchemaError("/parameters", "expected a non-empty object of name: [left, peak, right]");
    }
    std::vector<NamedFuzzyNumber> comps;
    for (const auto& [pname, tri] : jp.items()) {
        const auto ptr = child("/parameters", pname);
        if (!is_identifier(pname) || is_reserved_name(pname)) {
            throw SchemaError(ptr, "invalid parameter name '" + pname + "'");
        }
        if (!tri.is_array() || tri.size() != 3) {
            throw SchemaError(ptr, "parameter '" + pname + "' must be [left, peak, right]");
        }
        std::array<double, 3> v{};
        for (std::size_t n = 0; n < 3; ++n) v[n] = as_number(tri[n], child(ptr, n));
        try {
            comps.push_back({pname, TriangularFuzzyNumber(v[0], v[1], v[2])});
        } catch (const DomainError& e) {
            throw SchemaError(ptr, "parameter '" + pname + "': " + e.what());
        }
    }
    FuzzyVector params(std::move(comps));
    const auto names = params.names();

    auto g_text = as_string(require(doc, "G", root), "/G");
    auto f_text = as_string(require(doc, "F", root), "/F");
    auto g = parse_at(g_text, names, "/G");
    auto f = parse_at(f_text, names, "/F");

    // Domain
    const auto& jd = require(doc, "domain", root);
    if (!jd.is_object()) throw SchemaError("/domain", "expected an object");
    check_keys(jd, "/domain", {"x1", "x2", "constraint"});
    DomainBox box;
    box.x1 = parse_axis(require(jd, "x1", "/domain"), "/domain/x1");
    box.x2 = parse_axis(require(jd, "x2", "/domain"), "/domain/x2");
    rethrow_domain("/domain/x1", [&] { validate(box.x1, "x1"); });
    rethrow_domain("/domain/x2", [&] { validate(box.x2, "x2"); });
    if (jd.contains("constraint")) {
        box.constraint_text = as_string(jd["constraint"], "/domain/constraint");
        box.constraint = parse_at(*box.constraint_text, {}, "/domain/constraint");
        rethrow_domain("/domain/constraint", [&] { validate(box); });
    }

    // Boundary conditions
    std::vector<BoundaryCondition> boundary;
    if (doc.contains("boundary")) {
        const auto& jb = doc["boundary"];
        if (!jb.is_array()) throw SchemaError("/boundary", "expected an array");
        for (std::size_t n = 0; n < jb.size(); ++n) {
            const auto ptr = child("/boundary", n);
            const auto& e = jb[n];
            if (!e.is_object()) throw SchemaError(ptr, "expected an object");
            check_keys(e, ptr, {"fix", "at", "target"});
            BoundaryCondition bc;
            auto fix = as_string(require(e, "fix", ptr), ptr + "/fix");
            if (fix == "x1") {
                bc.fix = Axis::X1;
            } else if (fix == "x2") {
                bc.fix = Axis::X2;
            } else {
                throw SchemaError(ptr + "/fix", "fix must be \"x1\" or \"x2\"");
            }
            bc.at = as_number(require(e, "at", ptr), ptr + "/at");
            const auto& range = bc.fix == Axis::X1 ? box.x1 : box.x2;
            if (bc.at < range.lo || bc.at > range.hi) {
                throw SchemaError(ptr + "/at", "boundary value lies outside the closed domain");
            }
            bc.target_text = as_string(require(e, "target", ptr), ptr + "/target");
            bc.target = parse_at(bc.target_text, names, ptr + "/target");
            if (bc.target.depends_on(std::string(axis_name(bc.fix)))) {
                throw SchemaError(ptr + "/target", "target may not depend on the fixed variable " +
                                                       std::string(axis_name(bc.fix)));
            }
            boundary.push_back(std::move(bc));
        }
    }

    // Grid and tolerances; defaults are filled in here.
    GridSpec grid;
    if (doc.contains("grid")) {
        const auto& jg = doc["grid"];
        if (!jg.is_object()) throw SchemaError("/grid", "expected an object");
        check_keys(jg, "/grid", {"x1", "x2", "alpha", "epsilon_edge", "dense_per_axis"});
        if (jg.contains("x1")) grid.n_x1 = as_count(jg["x1"], "/grid/x1");
        if (jg.contains("x2")) grid.n_x2 = as_count(jg["x2"], "/grid/x2");
        if (jg.contains("alpha")) grid.n_alpha = as_count(jg["alpha"], "/grid/alpha");
        if (jg.contains("epsilon_edge")) {
            grid.epsilon_edge = as_number(jg["epsilon_edge"], "/grid/epsilon_edge");
        }
        if (jg.contains("dense_per_axis")) {
            grid.dense_per_axis = as_count(jg["dense_per_axis"], "/grid/dense_per_axis");
        }
    }
    rethrow_domain("/grid", [&] { validate(grid); });

    Tolerances tol;
    if (doc.contains("tolerances")) {
        const auto& jt = doc["tolerances"];
        if (!jt.is_object()) throw SchemaError("/tolerances", "expected an object");
        check_keys(jt, "/tolerances", {"eq_tol", "mono_tol", "denom_tol", "fallback_tol"});
        auto read = [&](const char* key, double& into) {
            if (jt.contains(key)) into = as_number(jt[key], child("/tolerances", key));
        };
        read("eq_tol", tol.eq_tol);
        read("mono_tol", tol.mono_tol);
        read("denom_tol", tol.denom_tol);
        read("fallback_tol", tol.fallback_tol);
    }
    rethrow_domain("/tolerances", [&] { validate(tol); });

    return ProblemSpec{
        .name = std::move(name),
        .g_text = std::move(g_text),
        .f_text = std::move(f_text),
        .candidate = std::move(g),
        .rhs = std::move(f),
        .parameters = std::move(params),
        .boundary = std::move(boundary),
        .box = std::move(box),
        .grid = grid,
        .tolerances = tol,
    };
}

ProblemSpec parse_problem_text(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what(), e.byte);
    }
    return parse_problem(doc);
}

ProblemSpec load_problem(const std::filesystem::path& path) {
    return parse_problem_text(read_file(path));
}

ordered_json dump_problem(const ProblemSpec& p) {
    ordered_json j;
    j["name"] = p.name;
    j["G"] = p.g_text;
    j["F"] = p.f_text;
    ordered_json params = ordered_json::object();
    for (const auto& c : p.parameters) {
        params[c.name] = ordered_json::array({c.value.left(), c.value.peak(), c.value.right()});
    }
    j["parameters"] = params;
    ordered_json domain;
    domain["x1"] = dump_axis(p.box.x1);
    domain["x2"] = dump_axis(p.box.x2);
    if (p.box.constraint_text) domain["constraint"] = *p.box.constraint_text;
    j["domain"] = domain;
    ordered_json boundary = ordered_json::array();
    for (const auto& bc : p.boundary) {
        ordered_json e;
        e["fix"] = std::string(axis_name(bc.fix));
        e["at"] = bc.at;
        e["target"] = bc.target_text;
        boundary.push_back(e);
    }
    j["boundary"] = boundary;
    j["grid"] = dump_grid(p.grid);
    j["tolerances"] = dump_tolerances(p.tolerances);
    return j;
}

void write_problem(const ProblemSpec& p, const std::filesystem::path& path) {
    write_file(path, dump_problem(p).dump(2) + "\n");
}

ordered_json report_json(const Verdict& v, const std::string& problem_name) {
    ordered_json j;
    j["tool"] = std::string(kToolName);
    j["version"] = std::string(kToolVersion);
    if (!problem_name.empty()) j["problem"] = problem_name;
    j["outcome"] = std::string(outcome_name(v.outcome));
    j["approximate"] = v.approximate;
    ordered_json checks = ordered_json::array();
    for (const auto& c : v.checks) {
        ordered_json jc;
        jc["name"] = c.name;
        jc["evaluated"] = c.evaluated;
        jc["pass"] = c.pass;
        jc["worst_violation"] = c.worst_violation;
        jc["location"] = dump_location(c.location);
        if (!c.note.empty()) jc["note"] = c.note;
        ordered_json conds = ordered_json::array();
        for (const auto& s : c.conditions) {
            ordered_json js;
            js["name"] = s.name;
            js["pass"] = s.pass;
            js["margin"] = s.margin;
            js["location"] = dump_location(s.location);
            conds.push_back(js);
        }
        jc["conditions"] = conds;
        checks.push_back(jc);
    }
    j["checks"] = checks;
    j["grid"] = dump_grid(v.grid);
    j["tolerances"] = dump_tolerances(v.tolerances);
    return j;
}

void emit_report(const Verdict& v, const std::filesystem::path& path,
                 const std::string& problem_name) {
    write_file(path, report_json(v, problem_name).dump(2) + "\n");
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

void write_curves(const std::vector<EnvelopeCurve>& curves, std::ostream& out) {
    std::vector<const EnvelopeCurve*> order;
    for (const auto& c : curves) order.push_back(&c);
    std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        return role_name(a->role) < role_name(b->role);
    });
    out << "role,x1,x2,alpha,lower,upper\n";
    for (const auto* c : order) {
        const auto role = role_name(c->role);
        const auto& ax = c->axes;
        for (std::size_t i = 0; i < ax.x1.size(); ++i) {
            for (std::size_t j = 0; j < ax.x2.size(); ++j) {
                for (std::size_t k = 0; k < ax.alpha.size(); ++k) {
                    const auto& s = c->at(i, j, k);
                    if (!s.active) continue;
                    out << role << ',' << format_double(ax.x1[i]) << ','
                        << format_double(ax.x2[j]) << ',' << format_double(ax.alpha[k]) << ','
                        << format_double(s.lower) << ',' << format_double(s.upper) << '\n';
                }
            }
        }
    }
}

void emit_curves(const std::vector<EnvelopeCurve>& curves, const std::filesystem::path& path) {
    std::ostringstream buf;
    write_curves(curves, buf);
    write_file(path, buf.str());
}

} // namespace bfv
