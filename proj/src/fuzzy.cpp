#include "bfv/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bfv {

namespace {

void require_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw DomainError("alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
}

} // namespace

TriangularFuzzyNumber::TriangularFuzzyNumber(double left, double peak, double right)
    : left_(left), peak_(peak), right_(right) {
    if (!std::isfinite(left) || !std::isfinite(peak) || !std::isfinite(right)) {
        throw DomainError("triangular fuzzy number endpoints must be finite");
    }
    if (!(left <= peak && peak <= right)) {
        throw DomainError("triangular fuzzy number requires left <= peak <= right");
    }
}

double TriangularFuzzyNumber::lower(double alpha) const {
    require_alpha(alpha);
    if (alpha == 1.0) return peak_;
    // Clamped so rounding can never push the cut past the core.
    return std::min(peak_, left_ + alpha * (peak_ - left_));
}

double TriangularFuzzyNumber::upper(double alpha) const {
    require_alpha(alpha);
    if (alpha == 1.0) return peak_;
    return std::max(peak_, right_ - alpha * (right_ - peak_));
}

double TriangularFuzzyNumber::membership(double value) const {
    if (value < left_ || value > right_) return 0.0;
    if (value == peak_) return 1.0;
    if (value < peak_) return (value - left_) / (peak_ - left_);
    return (right_ - value) / (right_ - peak_);
}

AlphaCut alpha_cut(const TriangularFuzzyNumber& f, double alpha) {
    return AlphaCut{f.lower(alpha), f.upper(alpha), alpha};
}

bool is_crisp(const TriangularFuzzyNumber& f) {
    return f.left() == f.peak() && f.peak() == f.right();
}

FuzzyVector::FuzzyVector(std::vector<NamedFuzzyNumber> components)
    : components_(std::move(components)) {
    if (components_.empty()) {
        throw DomainError("fuzzy vector must have at least one component");
    }
    std::set<std::string> seen;
    for (const auto& c : components_) {
        if (c.name.empty()) throw DomainError("fuzzy vector component has an empty name");
        if (!seen.insert(c.name).second) {
            throw DomainError("duplicate fuzzy vector component '" + c.name + "'");
        }
    }
}

std::vector<std::string> FuzzyVector::names() const {
    std::vector<std::string> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c.name);
    return out;
}

std::size_t FuzzyVector::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < components_.size(); ++i) {
        if (components_[i].name == name) return i;
    }
    return components_.size();
}

bool FuzzyVector::all_crisp() const {
    for (const auto& c : components_) {
        if (!is_crisp(c.value)) return false;
    }
    return true;
}

std::vector<AlphaCut> cut_box(const FuzzyVector& v, double alpha) {
    require_alpha(alpha);
    std::vector<AlphaCut> out;
    out.reserve(v.size());
    for (const auto& c : v) out.push_back(alpha_cut(c.value, alpha));
    return out;
}

} // namespace bfv
