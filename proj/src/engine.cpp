#include "bfv/engine.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <utility>

namespace bfv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDenseSampleCap = 1 << 20;

std::vector<std::string> slot_names(const FuzzyVector& params) {
    std::vector<std::string> slots{std::string(kVarX1), std::string(kVarX2)};
    for (const auto& c : params) slots.push_back(c.name);
    return slots;
}

/// Running minimum that remembers where it was first attained. NaN counts
/// as -inf so non-finite samples always surface.
struct MinTracker {
    double value = kInf;
    std::optional<Location> where;

    void offer(double v, const Location& at) {
        if (std::isnan(v)) v = -kInf;
        if (!where || v < value) {
            value = v;
            where = at;
        }
    }
};

ConditionReport make_condition(std::string name, const MinTracker& t, bool pass) {
    ConditionReport c;
    c.name = std::move(name);
    c.pass = pass;
    c.margin = t.where ? t.value : 0.0;
    c.location = t.where;
    return c;
}

/// Fills worst_violation / location / pass from the conditions. `threshold`
/// gives the slack each condition needs before it counts as violated.
void summarize(CheckReport& r, const std::vector<double>& thresholds) {
    r.pass = r.pass && std::all_of(r.conditions.begin(), r.conditions.end(),
                                   [](const ConditionReport& c) { return c.pass; });
    double worst = 0.0;
    std::optional<Location> where;
    for (std::size_t i = 0; i < r.conditions.size(); ++i) {
        const auto& c = r.conditions[i];
        if (!where) where = c.location;
        double threshold = i < thresholds.size() ? thresholds[i] : 0.0;
        double v = std::max(0.0, threshold - c.margin);
        if (v > worst) {
            worst = v;
            where = c.location;
        }
    }
    if (!r.location) {
        r.worst_violation = worst;
        r.location = where;
    }
}

// Derivative of a pair-valued function along one axis: central where both
// neighbours stay inside [a, b], second-order one-sided otherwise.
template <typename Fn>
std::pair<double, double> axis_derivative(Fn f, double x, double h, double a, double b) {
    if (x - h >= a && x + h <= b) {
        auto up = f(x + h);
        auto dn = f(x - h);
        return {(up.first - dn.first) / (2 * h), (up.second - dn.second) / (2 * h)};
    }
    auto f0 = f(x);
    if (x + 2 * h <= b) {
        auto f1 = f(x + h);
        auto f2 = f(x + 2 * h);
        return {(-3 * f0.first + 4 * f1.first - f2.first) / (2 * h),
                (-3 * f0.second + 4 * f1.second - f2.second) / (2 * h)};
    }
    auto f1 = f(x - h);
    auto f2 = f(x - 2 * h);
    return {(3 * f0.first - 4 * f1.first + f2.first) / (2 * h),
            (3 * f0.second - 4 * f1.second + f2.second) / (2 * h)};
}

// ---------------------------------------------------------------------------
// Grid pass

struct SampleRecord {
    EnvelopeSample y;
    EnvelopeSample f;
    EnvelopeSample gamma;
    double denom_lower = kNaN;
    double denom_upper = kNaN;
    // dG/dx2 at the parameters selected for y1 and y2
    double slope_lower = kNaN;
    double slope_upper = kNaN;
    bool failed = false;
};

struct PointRecord {
    bool active = true;
    // dG/dx2 extremes over the corners of the support box
    double corner_slope_min = kInf;
    double corner_slope_max = -kInf;
    std::string error;
    std::optional<Location> error_location;
};

struct PassRequest {
    const Expression* g = nullptr;
    const Expression* f = nullptr;
    bool gamma = false;
    bool slopes = false;
};

struct GridPass {
    GridAxes axes;
    std::vector<PointRecord> points;
    std::vector<SampleRecord> samples;
    bool approximate = false;
    std::optional<std::string> error;
    std::optional<Location> error_location;

    [[nodiscard]] std::size_t n_points() const { return points.size(); }
    [[nodiscard]] std::size_t n_alpha() const { return axes.alpha.size(); }
    [[nodiscard]] Location location(std::size_t i, std::size_t j, std::size_t k) const {
        return {axes.x1[i], axes.x2[j], axes.alpha[k]};
    }
};

unsigned worker_count(const VerifyOptions& opts, std::size_t jobs) {
    unsigned n = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, jobs)));
}

class GridRunner {
public:
    GridRunner(const PassRequest& req, const FuzzyVector& params, const DomainBox& box,
               const GridSpec& grid)
        : req_(req), params_(params), box_(box), grid_(grid),
          g_(*req.g, params, grid.dense_per_axis) {
        auto slots = slot_names(params);
        if (req.f) f_.emplace(*req.f, params, grid.dense_per_axis);
        if (req.gamma || req.slopes) {
            dgdx1_.emplace(differentiate(*req.g, std::string(kVarX1)), slots);
            dgdx2_.emplace(differentiate(*req.g, std::string(kVarX2)), slots);
        }
        if (box.constraint) constraint_.emplace(*box.constraint, slots);
        for (std::size_t j = 0; j < params.size(); ++j) {
            if (req.g->depends_on(params[j].name)) live_.push_back(j);
        }
    }

    GridPass run(const VerifyOptions& opts) {
        GridPass pass;
        pass.axes = make_axes(box_, grid_);
        const std::size_t n1 = pass.axes.x1.size();
        const std::size_t n2 = pass.axes.x2.size();
        const std::size_t na = pass.axes.alpha.size();
        pass.points.resize(n1 * n2);
        pass.samples.resize(n1 * n2 * na);

        std::vector<std::vector<AlphaCut>> boxes;
        boxes.reserve(na);
        for (double a : pass.axes.alpha) boxes.push_back(cut_box(params_, a));

        std::atomic<std::size_t> next{0};
        std::exception_ptr fatal;
        std::mutex fatal_mutex;
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n1) return;
                try {
                    for (std::size_t j = 0; j < n2; ++j) run_point(pass, boxes, i, j);
                } catch (...) {
                    std::lock_guard lock(fatal_mutex);
                    if (!fatal) fatal = std::current_exception();
                    return;
                }
            }
        };
        unsigned n_workers = worker_count(opts, n1);
        if (n_workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(n_workers);
            for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        if (fatal) std::rethrow_exception(fatal);

        for (const auto& p : pass.points) {
            if (!p.error.empty() && !pass.error) {
                pass.error = p.error;
                pass.error_location = p.error_location;
            }
        }
        for (const auto& s : pass.samples) pass.approximate = pass.approximate || s.y.approximate ||
                                                             s.f.approximate ||
                                                             s.gamma.approximate;
        return pass;
    }

private:
    void run_point(GridPass& pass, const std::vector<std::vector<AlphaCut>>& boxes,
                   std::size_t i, std::size_t j) {
        const std::size_t n2 = pass.axes.x2.size();
        const std::size_t na = pass.axes.alpha.size();
        PointRecord& point = pass.points[i * n2 + j];
        const double x1 = pass.axes.x1[i];
        const double x2 = pass.axes.x2[j];
        std::size_t k = 0;
        try {
            if (constraint_) {
                std::vector<double> at(2 + params_.size(), 0.0);
                at[0] = x1;
                at[1] = x2;
                point.active = (*constraint_)(at) >= 0.0;
            }
            for (k = 0; k < na; ++k) {
                auto& rec = pass.samples[(i * n2 + j) * na + k];
                rec.y.active = rec.f.active = rec.gamma.active = point.active;
            }
            if (!point.active) return;
            k = 0;
            if (req_.slopes) corner_slopes(point, x1, x2, boxes.front());
            for (k = 0; k < na; ++k) {
                run_sample(pass.samples[(i * n2 + j) * na + k], x1, x2, boxes[k]);
            }
        } catch (const EvalError& e) {
            point.error = e.what();
            std::size_t kk = std::min(k, na - 1);
            point.error_location = Location{x1, x2, pass.axes.alpha[kk]};
            for (std::size_t m = kk; m < na; ++m) pass.samples[(i * n2 + j) * na + m].failed = true;
        }
    }

    void corner_slopes(PointRecord& point, double x1, double x2,
                       const std::vector<AlphaCut>& support) const {
        std::vector<std::size_t> varying;
        for (std::size_t j : live_) {
            if (support[j].width() > 0.0) varying.push_back(j);
        }
        if (varying.size() > EnvelopeEvaluator::kMaxCornerParams) return;
        std::vector<double> at(2 + params_.size());
        at[0] = x1;
        at[1] = x2;
        for (std::size_t j = 0; j < params_.size(); ++j) at[2 + j] = support[j].lo;
        const std::size_t corners = std::size_t{1} << varying.size();
        for (std::size_t mask = 0; mask < corners; ++mask) {
            for (std::size_t q = 0; q < varying.size(); ++q) {
                const auto& cut = support[varying[q]];
                at[2 + varying[q]] = (mask >> q) & 1U ? cut.hi : cut.lo;
            }
            double s = (*dgdx2_)(at);
            point.corner_slope_min = std::min(point.corner_slope_min, s);
            point.corner_slope_max = std::max(point.corner_slope_max, s);
        }
    }

    void run_sample(SampleRecord& rec, double x1, double x2,
                    const std::vector<AlphaCut>& box) const {
        Envelope y = g_.over_box(x1, x2, box);
        rec.y.lower = y.lower;
        rec.y.upper = y.upper;
        rec.y.approximate = y.approximate;
        if (f_) {
            Envelope f = f_->over_box(x1, x2, box);
            rec.f.lower = f.lower;
            rec.f.upper = f.upper;
            rec.f.approximate = f.approximate;
        }
        std::vector<double> lo_at(2 + params_.size());
        std::vector<double> hi_at(2 + params_.size());
        lo_at[0] = hi_at[0] = x1;
        lo_at[1] = hi_at[1] = x2;
        std::copy(y.argmin.begin(), y.argmin.end(), lo_at.begin() + 2);
        std::copy(y.argmax.begin(), y.argmax.end(), hi_at.begin() + 2);
        if (!y.approximate && !y.ties.empty()) settle_ties(y, x1, x2, box, lo_at, hi_at);
        if (req_.slopes || req_.gamma) {
            rec.slope_lower = (*dgdx2_)(lo_at);
            rec.slope_upper = (*dgdx2_)(hi_at);
        }
        if (!req_.gamma) return;
        rec.gamma.approximate = y.approximate;
        if (!y.approximate) {
            rec.denom_lower = rec.slope_lower;
            rec.denom_upper = rec.slope_upper;
            rec.gamma.lower = quotient((*dgdx1_)(lo_at), rec.denom_lower);
            rec.gamma.upper = quotient((*dgdx1_)(hi_at), rec.denom_upper);
            return;
        }
        const int m = grid_.dense_per_axis;
        auto along_x1 = [&](double x) {
            auto e = g_.sampled(x, x2, box, m);
            return std::pair{e.lower, e.upper};
        };
        auto along_x2 = [&](double x) {
            auto e = g_.sampled(x1, x, box, m);
            return std::pair{e.lower, e.upper};
        };
        const auto [a1, b1] = extent(box_.x1);
        const auto [a2, b2] = extent(box_.x2);
        const double h1 = 1e-5 * (box_.x1.hi - box_.x1.lo);
        const double h2 = 1e-5 * (box_.x2.hi - box_.x2.lo);
        auto d1 = axis_derivative(along_x1, x1, h1, a1, b1);
        auto d2 = axis_derivative(along_x2, x2, h2, a2, b2);
        rec.denom_lower = d2.first;
        rec.denom_upper = d2.second;
        rec.gamma.lower = quotient(d1.first, d2.first);
        rec.gamma.upper = quotient(d1.second, d2.second);
    }

    // A parameter whose partial vanishes here leaves the envelope value
    // unchanged but not its slope. Pick its end from a point nudged into
    // the domain interior.
    void settle_ties(const Envelope& y, double x1, double x2, const std::vector<AlphaCut>& box,
                     std::vector<double>& lo_at, std::vector<double>& hi_at) const {
        auto nudge = [&](double x, const AxisRange& r) {
            const auto [a, b] = extent(r);
            const double h = 1e-4 * (r.hi - r.lo);
            return x + h <= b ? x + h : x - h;
        };
        Envelope near = g_.over_box(nudge(x1, box_.x1), nudge(x2, box_.x2), box);
        if (near.approximate) return;
        for (std::size_t j : y.ties) {
            if (std::find(near.ties.begin(), near.ties.end(), j) != near.ties.end()) continue;
            lo_at[2 + j] = near.argmin[j];
            hi_at[2 + j] = near.argmax[j];
        }
    }

    [[nodiscard]] std::pair<double, double> extent(const AxisRange& r) const {
        const double eps = grid_.epsilon_edge * (r.hi - r.lo);
        return {r.lo_open ? r.lo + eps : r.lo, r.hi_open ? r.hi - eps : r.hi};
    }

    static double quotient(double num, double den) { return den == 0.0 ? kNaN : num / den; }

    PassRequest req_;
    const FuzzyVector& params_;
    const DomainBox& box_;
    const GridSpec& grid_;
    EnvelopeEvaluator g_;
    std::optional<EnvelopeEvaluator> f_;
    std::optional<CompiledExpression> dgdx1_;
    std::optional<CompiledExpression> dgdx2_;
    std::optional<CompiledExpression> constraint_;
    std::vector<std::size_t> live_;
};

GridPass run_grid(const PassRequest& req, const FuzzyVector& params, const DomainBox& box,
                  const GridSpec& grid, const VerifyOptions& opts) {
    validate(grid);
    validate(box);
    return GridRunner(req, params, box, grid).run(opts);
}

EnvelopeCurve curve_from(const GridPass& pass, CurveRole role) {
    EnvelopeCurve c;
    c.role = role;
    c.axes = pass.axes;
    c.samples.reserve(pass.samples.size());
    for (const auto& s : pass.samples) {
        switch (role) {
        case CurveRole::Y: c.samples.push_back(s.y); break;
        case CurveRole::F: c.samples.push_back(s.f); break;
        case CurveRole::Gamma: c.samples.push_back(s.gamma); break;
        }
        if (s.failed) {
            c.samples.back().lower = kNaN;
            c.samples.back().upper = kNaN;
        }
    }
    return c;
}

CheckReport structure_from(const GridPass& pass, const Tolerances& tol) {
    CheckReport r;
    r.name = "structure";
    if (pass.error) {
        r.pass = false;
        r.note = *pass.error;
        r.worst_violation = kInf;
        r.location = pass.error_location;
    }

    // One global sign for dG/dx2, taken from the first nonzero probe.
    double sign = 0.0;
    for (std::size_t n = 0; n < pass.samples.size() && sign == 0.0; ++n) {
        const auto& s = pass.samples[n];
        if (s.failed || !s.y.active) continue;
        if (s.slope_lower != 0.0 && !std::isnan(s.slope_lower)) {
            sign = s.slope_lower > 0 ? 1.0 : -1.0;
        }
    }
    if (sign == 0.0) sign = 1.0;

    MinTracker positive;
    MinTracker slope;
    MinTracker denom;
    const std::size_t na = pass.n_alpha();
    const std::size_t n2 = pass.axes.x2.size();
    for (std::size_t p = 0; p < pass.n_points(); ++p) {
        const auto& point = pass.points[p];
        if (!point.active) continue;
        const std::size_t i = p / n2;
        const std::size_t j = p % n2;
        if (point.corner_slope_min <= point.corner_slope_max) {
            double corner = sign > 0 ? point.corner_slope_min : -point.corner_slope_max;
            slope.offer(corner, pass.location(i, j, 0));
        }
        for (std::size_t k = 0; k < na; ++k) {
            const auto& s = pass.samples[p * na + k];
            if (s.failed) continue;
            const auto at = pass.location(i, j, k);
            positive.offer(s.y.lower, at);
            slope.offer(std::min(sign * s.slope_lower, sign * s.slope_upper), at);
            if (!std::isnan(s.denom_lower) || !std::isnan(s.denom_upper)) {
                denom.offer(std::min(std::abs(s.denom_lower), std::abs(s.denom_upper)), at);
            }
        }
    }
    r.conditions.push_back(make_condition("positive", positive, !positive.where || positive.value > 0.0));
    r.conditions.push_back(make_condition("monotone_x2", slope,
                                          !slope.where || slope.value >= tol.denom_tol));
    r.conditions.push_back(make_condition("denominator", denom,
                                          !denom.where || denom.value >= tol.denom_tol));
    summarize(r, {0.0, tol.denom_tol, tol.denom_tol});
    return r;
}

CheckReport skipped(std::string name, const std::string& why) {
    CheckReport r;
    r.name = std::move(name);
    r.evaluated = false;
    r.pass = false;
    r.note = "not evaluated: " + why;
    return r;
}

} // namespace

// ---------------------------------------------------------------------------
// EnvelopeEvaluator

EnvelopeEvaluator::EnvelopeEvaluator(const Expression& e, const FuzzyVector& params,
                                     int dense_per_axis)
    : params_(params), dense_per_axis_(dense_per_axis), slots_(slot_names(params)),
      value_(e, slots_) {
    if (dense_per_axis < 2) throw DomainError("dense_per_axis must be >= 2");
    const auto vars = e.free_variables();
    for (std::size_t j = 0; j < params_.size(); ++j) {
        if (vars.contains(params_[j].name)) {
            live_.push_back(j);
            partials_.emplace_back(differentiate(e, params_[j].name), slots_);
        }
    }
}

double EnvelopeEvaluator::value(double x1, double x2, const std::vector<double>& params) const {
    std::vector<double> at(2 + params.size());
    at[0] = x1;
    at[1] = x2;
    std::copy(params.begin(), params.end(), at.begin() + 2);
    return value_(at);
}

Envelope EnvelopeEvaluator::operator()(double x1, double x2, double alpha) const {
    return over_box(x1, x2, cut_box(params_, alpha));
}

Envelope EnvelopeEvaluator::over_box(double x1, double x2,
                                     const std::vector<AlphaCut>& box) const {
    const std::size_t k = params_.size();
    std::vector<double> at(2 + k);
    at[0] = x1;
    at[1] = x2;
    for (std::size_t j = 0; j < k; ++j) at[2 + j] = box[j].lo;

    std::vector<std::size_t> varying;  // positions in live_
    for (std::size_t q = 0; q < live_.size(); ++q) {
        if (box[live_[q]].width() > 0.0) varying.push_back(q);
    }
    if (varying.size() > kMaxCornerParams) return sampled(x1, x2, box, dense_per_axis_);

    const std::size_t r = varying.size();
    std::vector<char> pos(r, 0);
    std::vector<char> neg(r, 0);
    auto probe = [&]() {
        for (std::size_t q = 0; q < r; ++q) {
            double d = partials_[varying[q]](at);
            pos[q] = pos[q] || d > 0.0;
            neg[q] = neg[q] || d < 0.0;
            if (pos[q] && neg[q]) return false;
        }
        return true;
    };
    auto place = [&](std::size_t q, bool high) {
        const auto& cut = box[live_[varying[q]]];
        at[2 + live_[varying[q]]] = high ? cut.hi : cut.lo;
    };

    for (std::size_t q = 0; q < r; ++q) at[2 + live_[varying[q]]] = box[live_[varying[q]]].mid();
    bool uniform = probe();
    for (std::size_t mask = 0; uniform && mask < (std::size_t{1} << r); ++mask) {
        for (std::size_t q = 0; q < r; ++q) place(q, (mask >> q) & 1U);
        uniform = probe();
    }
    if (!uniform) return sampled(x1, x2, box, dense_per_axis_);

    std::vector<std::size_t> ties;
    for (std::size_t q = 0; q < r; ++q) {
        if (!pos[q] && !neg[q]) ties.push_back(q);
    }

    Envelope out;
    for (std::size_t q : ties) out.ties.push_back(live_[varying[q]]);
    auto extremum = [&](bool want_max, double& best, std::vector<double>& arg) {
        for (std::size_t q = 0; q < r; ++q) {
            if (pos[q] || neg[q]) place(q, pos[q] ? want_max : !want_max);
        }
        bool first = true;
        for (std::size_t mask = 0; mask < (std::size_t{1} << ties.size()); ++mask) {
            for (std::size_t t = 0; t < ties.size(); ++t) place(ties[t], (mask >> t) & 1U);
            double v = value_(at);
            if (first || (want_max ? v > best : v < best)) {
                best = v;
                arg.assign(at.begin() + 2, at.end());
                first = false;
            }
        }
    };
    extremum(false, out.lower, out.argmin);
    extremum(true, out.upper, out.argmax);
    return out;
}

Envelope EnvelopeEvaluator::sampled(double x1, double x2, const std::vector<AlphaCut>& box,
                                    int per_axis) const {
    if (per_axis < 2) throw DomainError("box sampling needs at least 2 points per axis");
    const std::size_t k = params_.size();
    std::vector<double> at(2 + k);
    at[0] = x1;
    at[1] = x2;
    for (std::size_t j = 0; j < k; ++j) at[2 + j] = box[j].lo;

    std::vector<std::size_t> varying;  // parameter indices
    for (std::size_t j : live_) {
        if (box[j].width() > 0.0) varying.push_back(j);
    }
    const std::size_t r = varying.size();
    std::size_t m = static_cast<std::size_t>(per_axis);
    while (m > 2 && std::pow(static_cast<double>(m), static_cast<double>(r)) > kDenseSampleCap) {
        --m;
    }

    Envelope out;
    out.approximate = r > 0;
    std::vector<std::size_t> idx(r, 0);
    bool first = true;
    for (;;) {
        for (std::size_t q = 0; q < r; ++q) {
            const auto& cut = box[varying[q]];
            at[2 + varying[q]] = idx[q] + 1 == m
                                     ? cut.hi
                                     : cut.lo + (cut.hi - cut.lo) * static_cast<double>(idx[q]) /
                                                    static_cast<double>(m - 1);
        }
        double v = value_(at);
        if (first || v < out.lower) {
            out.lower = v;
            out.argmin.assign(at.begin() + 2, at.end());
        }
        if (first || v > out.upper) {
            out.upper = v;
            out.argmax.assign(at.begin() + 2, at.end());
        }
        first = false;
        std::size_t q = 0;
        while (q < r && ++idx[q] == m) idx[q++] = 0;
        if (q == r) break;
    }
    return out;
}

Envelope envelope(const Expression& e, const FuzzyVector& params, double x1, double x2,
                  double alpha) {
    return EnvelopeEvaluator(e, params)(x1, x2, alpha);
}

// ---------------------------------------------------------------------------

std::string_view role_name(CurveRole r) {
    switch (r) {
    case CurveRole::Y: return "Y";
    case CurveRole::F: return "F";
    case CurveRole::Gamma: return "GAMMA";
    }
    return "?";
}

std::string_view outcome_name(Outcome o) {
    switch (o) {
    case Outcome::BfSolution: return "BF_SOLUTION";
    case Outcome::NotFuzzyValid: return "NOT_FUZZY_VALID";
    case Outcome::NotDifferentiable: return "NOT_DIFFERENTIABLE";
    case Outcome::EqualityFails: return "EQUALITY_FAILS";
    case Outcome::BoundaryFails: return "BOUNDARY_FAILS";
    case Outcome::StructureFails: return "STRUCTURE_FAILS";
    }
    return "?";
}

const CheckReport& Verdict::check(std::string_view name) const {
    for (const auto& c : checks) {
        if (c.name == name) return c;
    }
    throw std::out_of_range("no check named '" + std::string(name) + "'");
}

std::vector<double> axis_samples(const AxisRange& r, int n, double epsilon_edge) {
    if (n < 2) throw DomainError("an axis needs at least 2 samples");
    const double eps = epsilon_edge * (r.hi - r.lo);
    const double a = r.lo_open ? r.lo + eps : r.lo;
    const double b = r.hi_open ? r.hi - eps : r.hi;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / (n - 1);
    }
    out.back() = b;
    return out;
}

GridAxes make_axes(const DomainBox& box, const GridSpec& grid) {
    GridAxes axes;
    axes.x1 = axis_samples(box.x1, grid.n_x1, grid.epsilon_edge);
    axes.x2 = axis_samples(box.x2, grid.n_x2, grid.epsilon_edge);
    axes.alpha.resize(static_cast<std::size_t>(grid.n_alpha));
    for (int k = 0; k < grid.n_alpha; ++k) {
        axes.alpha[static_cast<std::size_t>(k)] =
            static_cast<double>(k) / static_cast<double>(grid.n_alpha - 1);
    }
    axes.alpha.back() = 1.0;
    return axes;
}

EnvelopeCurve envelope_curve(const Expression& e, const FuzzyVector& params,
                             const DomainBox& box, const GridSpec& grid, CurveRole role,
                             const VerifyOptions& opts) {
    auto pass = run_grid(PassRequest{&e, nullptr, false, false}, params, box, grid, opts);
    if (pass.error) throw EvalError(*pass.error, "");
    auto curve = curve_from(pass, CurveRole::Y);
    curve.role = role;
    return curve;
}

GammaCurves gamma_curves(const Expression& g, const FuzzyVector& params, const DomainBox& box,
                         const GridSpec& grid, const VerifyOptions& opts) {
    auto pass = run_grid(PassRequest{&g, nullptr, true, false}, params, box, grid, opts);
    GammaCurves out;
    out.curve = curve_from(pass, CurveRole::Gamma);
    out.error = pass.error;
    out.error_location = pass.error_location;
    MinTracker denom;
    const std::size_t na = pass.n_alpha();
    const std::size_t n2 = pass.axes.x2.size();
    for (std::size_t n = 0; n < pass.samples.size(); ++n) {
        const auto& s = pass.samples[n];
        if (s.failed || !s.gamma.active) continue;
        const std::size_t p = n / na;
        denom.offer(std::min(std::abs(s.denom_lower), std::abs(s.denom_upper)),
                    pass.location(p / n2, p % n2, n % na));
    }
    out.min_abs_denominator = denom.where ? denom.value : kInf;
    out.min_denominator_location = denom.where;
    return out;
}

CheckReport check_differentiability(const EnvelopeCurve& gamma, double tol, double fallback_tol) {
    CheckReport r;
    r.name = "differentiability";
    MinTracker rising;   // Gamma_1(alpha') - Gamma_1(alpha)
    MinTracker falling;  // Gamma_2(alpha) - Gamma_2(alpha')
    MinTracker core;     // Gamma_2(1) - Gamma_1(1)
    bool pass1 = true;
    bool pass2 = true;
    bool pass3 = true;
    const auto& ax = gamma.axes;
    const std::size_t na = ax.alpha.size();
    for (std::size_t i = 0; i < ax.x1.size(); ++i) {
        for (std::size_t j = 0; j < ax.x2.size(); ++j) {
            if (!gamma.at(i, j, 0).active) continue;
            for (std::size_t k = 0; k + 1 < na; ++k) {
                const auto& a = gamma.at(i, j, k);
                const auto& b = gamma.at(i, j, k + 1);
                const double slack = a.approximate || b.approximate ? fallback_tol : tol;
                const Location at{ax.x1[i], ax.x2[j], ax.alpha[k + 1]};
                const double d1 = b.lower - a.lower;
                const double d2 = a.upper - b.upper;
                rising.offer(d1, at);
                falling.offer(d2, at);
                pass1 = pass1 && d1 >= -slack;
                pass2 = pass2 && d2 >= -slack;
            }
            const auto& top = gamma.at(i, j, na - 1);
            const double d3 = top.upper - top.lower;
            core.offer(d3, Location{ax.x1[i], ax.x2[j], ax.alpha[na - 1]});
            pass3 = pass3 && d3 >= -(top.approximate ? fallback_tol : tol);
        }
    }
    r.conditions.push_back(make_condition("lower_nondecreasing", rising, pass1));
    r.conditions.push_back(make_condition("upper_nonincreasing", falling, pass2));
    r.conditions.push_back(make_condition("core_ordered", core, pass3));
    for (const auto& c : r.conditions) {
        if (std::isinf(c.margin) && c.margin < 0) r.note = "non-finite Gamma samples";
    }
    summarize(r, {0.0, 0.0, 0.0});
    return r;
}

CheckReport check_equality(const EnvelopeCurve& gamma, const EnvelopeCurve& f, double tol,
                           double fallback_tol) {
    if (gamma.samples.size() != f.samples.size()) {
        throw std::invalid_argument("check_equality: curves sampled on different grids");
    }
    CheckReport r;
    r.name = "equality";
    MinTracker lower;
    MinTracker upper;
    double worst = 0.0;
    std::optional<Location> worst_at;
    bool pass_lo = true;
    bool pass_hi = true;
    const auto& ax = gamma.axes;
    for (std::size_t i = 0; i < ax.x1.size(); ++i) {
        for (std::size_t j = 0; j < ax.x2.size(); ++j) {
            for (std::size_t k = 0; k < ax.alpha.size(); ++k) {
                const auto& g = gamma.at(i, j, k);
                const auto& t = f.at(i, j, k);
                if (!g.active || !t.active) continue;
                const double slack = g.approximate || t.approximate ? fallback_tol : tol;
                const Location at{ax.x1[i], ax.x2[j], ax.alpha[k]};
                double r1 = std::abs(g.lower - t.lower) / (1.0 + std::abs(t.lower));
                double r2 = std::abs(g.upper - t.upper) / (1.0 + std::abs(t.upper));
                if (std::isnan(r1)) r1 = kInf;
                if (std::isnan(r2)) r2 = kInf;
                lower.offer(-r1, at);
                upper.offer(-r2, at);
                pass_lo = pass_lo && r1 <= slack;
                pass_hi = pass_hi && r2 <= slack;
                const double m = std::max(r1, r2);
                if (!worst_at || m > worst) {
                    worst = m;
                    worst_at = at;
                }
            }
        }
    }
    r.conditions.push_back(make_condition("lower_matches", lower, pass_lo));
    r.conditions.push_back(make_condition("upper_matches", upper, pass_hi));
    r.pass = pass_lo && pass_hi;
    r.worst_violation = worst;
    r.location = worst_at;
    return r;
}

CheckReport check_equality(const EnvelopeCurve& gamma, const Expression& f,
                           const FuzzyVector& params, const DomainBox& box, const GridSpec& grid,
                           double tol, double fallback_tol) {
    auto f_curve = envelope_curve(f, params, box, grid, CurveRole::F);
    return check_equality(gamma, f_curve, tol, fallback_tol);
}

CheckReport check_fuzzy_validity(const std::vector<const EnvelopeCurve*>& curves) {
    CheckReport r;
    r.name = "fuzzy_validity";
    for (const EnvelopeCurve* c : curves) {
        MinTracker width;
        const auto& ax = c->axes;
        for (std::size_t i = 0; i < ax.x1.size(); ++i) {
            for (std::size_t j = 0; j < ax.x2.size(); ++j) {
                for (std::size_t k = 0; k < ax.alpha.size(); ++k) {
                    const auto& s = c->at(i, j, k);
                    if (!s.active) continue;
                    double w = s.upper - s.lower;
                    if (!std::isfinite(s.lower) || !std::isfinite(s.upper)) w = kNaN;
                    width.offer(w, Location{ax.x1[i], ax.x2[j], ax.alpha[k]});
                }
            }
        }
        bool ok = !width.where || width.value >= 0.0;
        r.conditions.push_back(make_condition(std::string(role_name(c->role)) + "_ordered", width, ok));
    }
    summarize(r, std::vector<double>(curves.size(), 0.0));
    return r;
}

CheckReport check_structure(const Expression& g, const FuzzyVector& params, const DomainBox& box,
                            const GridSpec& grid, const Tolerances& tol,
                            const VerifyOptions& opts) {
    auto pass = run_grid(PassRequest{&g, nullptr, true, true}, params, box, grid, opts);
    return structure_from(pass, tol);
}

CheckReport check_boundary(const Expression& candidate, const FuzzyVector& params,
                           const std::vector<BoundaryCondition>& conditions,
                           const DomainBox& box, const GridSpec& grid, const Tolerances& tol,
                           const VerifyOptions& /*opts*/) {
    CheckReport r;
    r.name = "boundary";
    if (conditions.empty()) {
        r.note = "no conditions";
        return r;
    }
    validate(grid);
    const EnvelopeEvaluator lhs(candidate, params, grid.dense_per_axis);
    const auto axes = make_axes(box, grid);
    for (const auto& bc : conditions) {
        const EnvelopeEvaluator rhs(bc.target, params, grid.dense_per_axis);
        const bool fix_x1 = bc.fix == Axis::X1;
        const auto& free_axis = fix_x1 ? axes.x2 : axes.x1;
        MinTracker slack;
        bool ok = true;
        std::string label = std::string(axis_name(bc.fix)) + "=" + std::to_string(bc.at);
        try {
            for (double v : free_axis) {
                const double x1 = fix_x1 ? bc.at : v;
                const double x2 = fix_x1 ? v : bc.at;
                for (double alpha : axes.alpha) {
                    const auto cut = cut_box(params, alpha);
                    const Envelope got = lhs.over_box(x1, x2, cut);
                    const Envelope want = rhs.over_box(x1, x2, cut);
                    const double allowed =
                        got.approximate || want.approximate ? tol.fallback_tol : tol.eq_tol;
                    const double r1 = std::abs(got.lower - want.lower) / (1.0 + std::abs(want.lower));
                    const double r2 = std::abs(got.upper - want.upper) / (1.0 + std::abs(want.upper));
                    const double worst = std::max(r1, r2);
                    slack.offer(-worst, Location{x1, x2, alpha});
                    ok = ok && worst <= allowed;
                }
            }
        } catch (const EvalError& e) {
            ok = false;
            r.pass = false;
            if (r.note.empty()) r.note = label + ": " + e.what();
            slack.offer(-kInf, Location{fix_x1 ? bc.at : 0.0, fix_x1 ? 0.0 : bc.at, 0.0});
        }
        r.conditions.push_back(make_condition(label, slack, ok));
    }
    summarize(r, std::vector<double>(conditions.size(), 0.0));
    return r;
}

Verdict verify(const ProblemSpec& problem, const VerifyOptions& opts) {
    validate(problem.tolerances);
    Verdict v;
    v.grid = problem.grid;
    v.tolerances = problem.tolerances;
    const auto& tol = problem.tolerances;

    auto pass = run_grid(PassRequest{&problem.candidate, &problem.rhs, true, true},
                         problem.parameters, problem.box, problem.grid, opts);
    v.approximate = pass.approximate;
    v.checks.push_back(structure_from(pass, tol));

    if (pass.error) {
        const std::string why = "evaluation failed on the grid";
        v.checks.push_back(skipped("fuzzy_validity", why));
        v.checks.push_back(skipped("differentiability", why));
        v.checks.push_back(skipped("equality", why));
    } else {
        auto y = curve_from(pass, CurveRole::Y);
        auto f = curve_from(pass, CurveRole::F);
        auto gamma = curve_from(pass, CurveRole::Gamma);
        v.checks.push_back(check_fuzzy_validity({&y, &f}));
        v.checks.push_back(check_differentiability(gamma, tol.mono_tol, tol.fallback_tol));
        v.checks.push_back(check_equality(gamma, f, tol.eq_tol, tol.fallback_tol));
    }
    v.checks.push_back(check_boundary(problem.candidate, problem.parameters, problem.boundary,
                                      problem.box, problem.grid, tol, opts));

    constexpr std::array<Outcome, 5> gate{Outcome::StructureFails, Outcome::NotFuzzyValid,
                                          Outcome::NotDifferentiable, Outcome::EqualityFails,
                                          Outcome::BoundaryFails};
    v.outcome = Outcome::BfSolution;
    for (std::size_t n = 0; n < v.checks.size(); ++n) {
        if (!v.checks[n].pass) {
            v.outcome = gate[n];
            break;
        }
    }
    return v;
}

std::vector<EnvelopeCurve> problem_curves(const ProblemSpec& problem, const VerifyOptions& opts) {
    auto pass = run_grid(PassRequest{&problem.candidate, &problem.rhs, true, false},
                         problem.parameters, problem.box, problem.grid, opts);
    if (pass.error) throw EvalError(*pass.error, "");
    return {curve_from(pass, CurveRole::F), curve_from(pass, CurveRole::Gamma),
            curve_from(pass, CurveRole::Y)};
}

} // namespace bfv
