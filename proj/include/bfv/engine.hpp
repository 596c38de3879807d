#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bfv/expr.hpp"
#include "bfv/fuzzy.hpp"
#include "bfv/problem.hpp"

namespace bfv {

/// Extrema of a function over one alpha-cut box of the parameters.
struct Envelope {
    double lower = 0.0;
    double upper = 0.0;
    /// True when found by sampling the box instead of corner selection.
    bool approximate = false;
    /// Parameter values (in FuzzyVector order) attaining lower / upper.
    std::vector<double> argmin;
    std::vector<double> argmax;
    /// Parameter indices whose partial vanished at every probe; their cut
    /// end in argmin / argmax is arbitrary.
    std::vector<std::size_t> ties;
};

/// Envelope of one expression over the cut boxes of a fixed FuzzyVector.
///
/// Corner strategy: each parameter's partial derivative is probed at the box
/// center and all 2^k corners. A parameter whose partial keeps one sign is
/// pinned to the matching cut end; a parameter whose partial is zero at every
/// probe is tried at both ends. If any partial changes sign, or more than
/// kMaxCornerParams parameters are live, the box is sampled densely with
/// `dense_per_axis` points per axis and the result flagged approximate.
class EnvelopeEvaluator {
public:
    static constexpr std::size_t kMaxCornerParams = 16;

    EnvelopeEvaluator(const Expression& e, const FuzzyVector& params, int dense_per_axis = 33);

    [[nodiscard]] Envelope operator()(double x1, double x2, double alpha) const;
    [[nodiscard]] Envelope over_box(double x1, double x2, const std::vector<AlphaCut>& box) const;
    /// Box sampling only, `per_axis` points per live parameter (ends included).
    [[nodiscard]] Envelope sampled(double x1, double x2, const std::vector<AlphaCut>& box,
                                   int per_axis) const;

    /// Value of the expression at (x1, x2, parameter values).
    [[nodiscard]] double value(double x1, double x2, const std::vector<double>& params) const;

    [[nodiscard]] const FuzzyVector& parameters() const { return params_; }

private:
    FuzzyVector params_;
    int dense_per_axis_;
    std::vector<std::size_t> live_;  // parameters the expression depends on
    std::vector<std::string> slots_;
    CompiledExpression value_;
    std::vector<CompiledExpression> partials_;  // one per live parameter
};

/// (min, max) of `e` over cut_box(params, alpha) at (x1, x2).
[[nodiscard]] Envelope envelope(const Expression& e, const FuzzyVector& params, double x1,
                                double x2, double alpha);

// ---------------------------------------------------------------------------

enum class CurveRole { Y, F, Gamma };

[[nodiscard]] std::string_view role_name(CurveRole r);

/// Sample coordinates. Open ends sit epsilon_edge * range inside the interval.
struct GridAxes {
    std::vector<double> x1;
    std::vector<double> x2;
    std::vector<double> alpha;
};

[[nodiscard]] std::vector<double> axis_samples(const AxisRange& r, int n, double epsilon_edge);
[[nodiscard]] GridAxes make_axes(const DomainBox& box, const GridSpec& grid);

struct EnvelopeSample {
    double lower = 0.0;
    double upper = 0.0;
    bool approximate = false;
    /// False where the domain constraint excludes (x1, x2).
    bool active = true;
};

/// Samples on the (x1, x2, alpha) grid, alpha varying fastest.
struct EnvelopeCurve {
    CurveRole role = CurveRole::Y;
    GridAxes axes;
    std::vector<EnvelopeSample> samples;

    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * axes.x2.size() + j) * axes.alpha.size() + k;
    }
    [[nodiscard]] const EnvelopeSample& at(std::size_t i, std::size_t j, std::size_t k) const {
        return samples[index(i, j, k)];
    }
};

struct Location {
    double x1 = 0.0;
    double x2 = 0.0;
    double alpha = 0.0;

    friend bool operator==(const Location&, const Location&) = default;
};

/// One numbered sub-condition of a check. `margin` is the smallest slack
/// observed (negative means violated before tolerance is applied).
struct ConditionReport {
    std::string name;
    bool pass = true;
    double margin = 0.0;
    std::optional<Location> location;
};

struct CheckReport {
    std::string name;
    bool evaluated = true;
    bool pass = true;
    double worst_violation = 0.0;
    std::optional<Location> location;
    std::string note;
    std::vector<ConditionReport> conditions;
};

enum class Outcome {
    BfSolution,
    NotFuzzyValid,
    NotDifferentiable,
    EqualityFails,
    BoundaryFails,
    StructureFails,
};

[[nodiscard]] std::string_view outcome_name(Outcome o);

struct Verdict {
    Outcome outcome = Outcome::BfSolution;
    /// structure, fuzzy_validity, differentiability, equality, boundary.
    std::vector<CheckReport> checks;
    /// Any sample used box sampling instead of corner selection.
    bool approximate = false;
    GridSpec grid;
    Tolerances tolerances;

    [[nodiscard]] const CheckReport& check(std::string_view name) const;
};

struct VerifyOptions {
    /// Worker threads for grid sampling; 0 picks hardware concurrency.
    unsigned threads = 0;
};

/// Gamma curve plus the denominators it divided by.
struct GammaCurves {
    EnvelopeCurve curve;
    /// Smallest |d y_i / d x2| over the grid and where it occurred.
    double min_abs_denominator = 0.0;
    std::optional<Location> min_denominator_location;
    /// First sample (lexicographic) whose evaluation failed.
    std::optional<std::string> error;
    std::optional<Location> error_location;
};

[[nodiscard]] EnvelopeCurve envelope_curve(const Expression& e, const FuzzyVector& params,
                                           const DomainBox& box, const GridSpec& grid,
                                           CurveRole role, const VerifyOptions& opts = {});

/// Gamma_i = (d y_i / d x1) / (d y_i / d x2) on every grid sample.
[[nodiscard]] GammaCurves gamma_curves(const Expression& g, const FuzzyVector& params,
                                       const DomainBox& box, const GridSpec& grid,
                                       const VerifyOptions& opts = {});

/// Conditions 1-3: lower end non-decreasing in alpha, upper end
/// non-increasing, lower <= upper at alpha = 1. `tol` applies to exact
/// samples, `fallback_tol` to approximate ones.
[[nodiscard]] CheckReport check_differentiability(const EnvelopeCurve& gamma, double tol,
                                                  double fallback_tol = 1e-4);

/// |Gamma_i - f_i| <= tol * (1 + |f_i|) at every sample; the reported
/// violation is the scaled residual |Gamma_i - f_i| / (1 + |f_i|).
[[nodiscard]] CheckReport check_equality(const EnvelopeCurve& gamma, const EnvelopeCurve& f,
                                         double tol, double fallback_tol = 1e-4);
[[nodiscard]] CheckReport check_equality(const EnvelopeCurve& gamma, const Expression& f,
                                         const FuzzyVector& params, const DomainBox& box,
                                         const GridSpec& grid, double tol,
                                         double fallback_tol = 1e-4);

/// lower <= upper and finite at every active sample of a Y or F curve.
[[nodiscard]] CheckReport check_fuzzy_validity(const std::vector<const EnvelopeCurve*>& curves);

/// Candidate positive and strictly monotone in x2 with one global sign.
[[nodiscard]] CheckReport check_structure(const Expression& g, const FuzzyVector& params,
                                          const DomainBox& box, const GridSpec& grid,
                                          const Tolerances& tol, const VerifyOptions& opts = {});

/// Candidate and target envelopes agree endpoint-wise (scaled by 1 + |target|)
/// on every boundary edge sample and alpha level. Uses eq_tol / fallback_tol.
[[nodiscard]] CheckReport check_boundary(const Expression& candidate, const FuzzyVector& params,
                                         const std::vector<BoundaryCondition>& conditions,
                                         const DomainBox& box, const GridSpec& grid,
                                         const Tolerances& tol, const VerifyOptions& opts = {});

[[nodiscard]] Verdict verify(const ProblemSpec& problem, const VerifyOptions& opts = {});

/// Y, F and GAMMA curves for a problem, without any verdict.
[[nodiscard]] std::vector<EnvelopeCurve> problem_curves(const ProblemSpec& problem,
                                                        const VerifyOptions& opts = {});

} // namespace bfv
