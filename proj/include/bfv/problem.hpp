#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bfv/expr.hpp"
#include "bfv/fuzzy.hpp"

namespace bfv {

enum class Axis { X1, X2 };

[[nodiscard]] inline std::string_view axis_name(Axis a) { return a == Axis::X1 ? "x1" : "x2"; }

/// One coordinate range; either end may be open.
struct AxisRange {
    double lo = 0.0;
    double hi = 1.0;
    bool lo_open = false;
    bool hi_open = false;

    friend bool operator==(const AxisRange&, const AxisRange&) = default;
};

/// Sampled region S1 x S2, optionally restricted by `constraint >= 0`.
struct DomainBox {
    AxisRange x1;
    AxisRange x2;
    std::optional<std::string> constraint_text;
    std::optional<Expression> constraint;

    friend bool operator==(const DomainBox&, const DomainBox&) = default;
};

struct GridSpec {
    int n_x1 = 41;
    int n_x2 = 41;
    int n_alpha = 21;
    /// Offset from an open end, as a fraction of that axis' range.
    double epsilon_edge = 1e-6;
    /// Points per parameter axis when the envelope falls back to box sampling.
    int dense_per_axis = 33;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct Tolerances {
    double eq_tol = 1e-8;
    double mono_tol = 1e-8;
    double denom_tol = 1e-10;
    /// Replaces eq_tol / mono_tol at samples computed by box sampling and
    /// finite differences.
    double fallback_tol = 1e-4;

    friend bool operator==(const Tolerances&, const Tolerances&) = default;
};

/// Candidate restricted to `fix = at` must match `target` cut by cut.
struct BoundaryCondition {
    Axis fix = Axis::X2;
    double at = 0.0;
    std::string target_text;
    Expression target;

    friend bool operator==(const BoundaryCondition&, const BoundaryCondition&) = default;
};

/// Fully explicit problem statement: every default already applied.
struct ProblemSpec {
    std::string name;
    std::string g_text;
    std::string f_text;
    Expression candidate;  // G
    Expression rhs;        // F
    FuzzyVector parameters;
    std::vector<BoundaryCondition> boundary;
    DomainBox box;
    GridSpec grid;
    Tolerances tolerances;

    friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

/// Throws bfv::DomainError naming the first violated invariant.
void validate(const GridSpec& grid);
void validate(const Tolerances& tol);
void validate(const DomainBox& box);
void validate(const AxisRange& range, std::string_view name);

} // namespace bfv
