#include "bfv/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>

#include "bfv/problem_io.hpp"

namespace bfv::cli {

namespace {

struct Overrides {
    std::optional<int> grid_x1;
    std::optional<int> grid_x2;
    std::optional<int> alpha_steps;
    std::optional<double> tol;
};

void add_grid_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--grid-x1", o.grid_x1, "samples along x1")->check(CLI::Range(2, 1'000'000));
    cmd->add_option("--grid-x2", o.grid_x2, "samples along x2")->check(CLI::Range(2, 1'000'000));
    cmd->add_option("--alpha-steps", o.alpha_steps, "alpha levels in [0, 1]")
        ->check(CLI::Range(2, 1'000'000));
}

void apply(const Overrides& o, ProblemSpec& p) {
    if (o.grid_x1) p.grid.n_x1 = *o.grid_x1;
    if (o.grid_x2) p.grid.n_x2 = *o.grid_x2;
    if (o.alpha_steps) p.grid.n_alpha = *o.alpha_steps;
    if (o.tol) p.tolerances.eq_tol = p.tolerances.mono_tol = *o.tol;
    validate(p.grid);
    validate(p.tolerances);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string padded(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

} // namespace

int exit_code(Outcome o) { return o == Outcome::BfSolution ? kExitSolution : kExitCheckFailed; }

void print_summary(const Verdict& v, std::ostream& out, bool verbose) {
    out << outcome_name(v.outcome) << '\n';
    out << padded("check", 18) << padded("pass", 6) << padded("worst_violation", 17)
        << padded("x1", 14) << padded("x2", 14) << "alpha\n";
    for (const auto& c : v.checks) {
        std::string pass = !c.evaluated ? "skip" : c.pass ? "yes" : "no";
        out << padded(c.name, 18) << padded(pass, 6) << padded(fmt(c.worst_violation), 17);
        if (c.location) {
            out << padded(fmt(c.location->x1), 14) << padded(fmt(c.location->x2), 14)
                << fmt(c.location->alpha);
        } else {
            out << padded("-", 14) << padded("-", 14) << "-";
        }
        out << '\n';
        if (!verbose) continue;
        if (!c.note.empty()) out << "    note: " << c.note << '\n';
        for (const auto& s : c.conditions) {
            out << "    " << padded(s.name, 22) << padded(s.pass ? "yes" : "no", 6)
                << "margin " << fmt(s.margin) << '\n';
        }
    }
    if (verbose && v.approximate) out << "note: some samples used box sampling\n";
}

std::optional<unsigned> threads_from_env() {
    const char* raw = std::getenv("BF_VERIFY_THREADS");
    if (!raw) return std::nullopt;
    std::string s(raw);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 6) {
        throw CLI::ValidationError("BF_VERIFY_THREADS must be a positive integer");
    }
    unsigned n = static_cast<unsigned>(std::stoul(s));
    if (n == 0) throw CLI::ValidationError("BF_VERIFY_THREADS must be a positive integer");
    return n;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Checks fuzzified candidates for the fuzzy PDE (dV/dx1)/(dV/dx2) = F", "bf-verify"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string input;
    std::string report_path;
    std::string curves_path;
    std::string echo_path;
    std::string out_path;
    bool verbose = false;
    Overrides overrides;

    auto* check = app.add_subcommand("check", "verify a problem and print the verdict");
    check->add_option("file", input, "problem JSON")->required();
    check->add_option("--report", report_path, "write the JSON report here");
    check->add_option("--curves", curves_path, "write envelope and Gamma CSV here");
    add_grid_overrides(check, overrides);
    check->add_option("--tol", overrides.tol, "equality and monotonicity tolerance")
        ->check(CLI::PositiveNumber);
    check->add_flag("-v,--verbose", verbose, "print notes and per-condition margins");

    auto* validate_cmd = app.add_subcommand("validate", "load and schema-check a problem");
    validate_cmd->add_option("file", input, "problem JSON")->required();
    validate_cmd->add_option("--echo", echo_path, "write the fully explicit problem here");

    auto* curves = app.add_subcommand("curves", "emit envelope and Gamma CSV");
    curves->add_option("file", input, "problem JSON")->required();
    curves->add_option("--out", out_path, "CSV destination")->required();
    add_grid_overrides(curves, overrides);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitSolution : kExitUsage;
    }

    try {
        VerifyOptions opts;
        if (auto n = threads_from_env()) opts.threads = *n;

        ProblemSpec problem = load_problem(input);
        if (validate_cmd->parsed()) {
            if (!echo_path.empty()) write_problem(problem, echo_path);
            out << "ok " << problem.name << '\n';
            return kExitSolution;
        }
        apply(overrides, problem);
        if (curves->parsed()) {
            emit_curves(problem_curves(problem, opts), out_path);
            return kExitSolution;
        }
        Verdict v = verify(problem, opts);
        print_summary(v, out, verbose);
        if (!report_path.empty()) emit_report(v, report_path, problem.name);
        if (!curves_path.empty()) emit_curves(problem_curves(problem, opts), curves_path);
        return exit_code(v.outcome);
    } catch (const EvalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

} // namespace bfv::cli
