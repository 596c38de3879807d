#include "bfv/problem.hpp"

#include <cmath>

namespace bfv {

void validate(const AxisRange& r, std::string_view name) {
    const std::string label(name);
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) {
        throw DomainError("domain " + label + ": bounds must be finite");
    }
    if (!(r.lo < r.hi)) throw DomainError("domain " + label + ": requires lo < hi");
    if (r.lo < 0.0 || (r.lo == 0.0 && !r.lo_open)) {
        throw DomainError("domain " + label + ": lower bound must be > 0 or an open 0");
    }
}

void validate(const GridSpec& grid) {
    if (grid.n_x1 < 2 || grid.n_x2 < 2 || grid.n_alpha < 2) {
        throw DomainError("grid: every sample count must be >= 2");
    }
    if (!(grid.epsilon_edge > 0.0) || !(grid.epsilon_edge < 0.5)) {
        throw DomainError("grid: epsilon_edge must lie in (0, 0.5)");
    }
    if (grid.dense_per_axis < 2) throw DomainError("grid: dense_per_axis must be >= 2");
}

void validate(const Tolerances& tol) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(tol.eq_tol)) throw DomainError("tolerances: eq_tol must be > 0");
    if (!positive(tol.mono_tol)) throw DomainError("tolerances: mono_tol must be > 0");
    if (!positive(tol.denom_tol)) throw DomainError("tolerances: denom_tol must be > 0");
    if (!positive(tol.fallback_tol)) throw DomainError("tolerances: fallback_tol must be > 0");
}

void validate(const DomainBox& box) {
    validate(box.x1, "x1");
    validate(box.x2, "x2");
    if (box.constraint) {
        for (const auto& v : box.constraint->free_variables()) {
            if (v != kVarX1 && v != kVarX2) {
                throw DomainError("domain constraint may only use x1 and x2, found '" + v + "'");
            }
        }
    }
}

} // namespace bfv
