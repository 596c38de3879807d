#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bfv {

/// Raised when an argument falls outside the mathematical domain of an
/// operation (alpha outside [0,1], malformed triangle).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Closed interval [lo, hi] obtained by cutting a fuzzy number at level alpha.
struct AlphaCut {
    double lo;
    double hi;
    double alpha;

    [[nodiscard]] double width() const { return hi - lo; }
    [[nodiscard]] double mid() const { return 0.5 * (lo + hi); }
    [[nodiscard]] bool contains(double v) const { return lo <= v && v <= hi; }
    [[nodiscard]] bool contains(const AlphaCut& other) const {
        return lo <= other.lo && other.hi <= hi;
    }
};

/// Triangular fuzzy number (left, peak, right).
///
/// Membership rises linearly from 0 at `left` to 1 at `peak` and falls back
/// to 0 at `right`. Zero-width sides are allowed; left == peak == right
/// models a crisp value.
class TriangularFuzzyNumber {
public:
    TriangularFuzzyNumber(double left, double peak, double right);

    static TriangularFuzzyNumber crisp(double value) { return {value, value, value}; }

    [[nodiscard]] double left() const { return left_; }
    [[nodiscard]] double peak() const { return peak_; }
    [[nodiscard]] double right() const { return right_; }

    /// Lower endpoint b1(alpha) of the alpha-cut.
    [[nodiscard]] double lower(double alpha) const;
    /// Upper endpoint b2(alpha) of the alpha-cut.
    [[nodiscard]] double upper(double alpha) const;

    [[nodiscard]] double membership(double value) const;

    friend bool operator==(const TriangularFuzzyNumber&, const TriangularFuzzyNumber&) = default;

private:
    double left_;
    double peak_;
    double right_;
};

[[nodiscard]] AlphaCut alpha_cut(const TriangularFuzzyNumber& f, double alpha);

/// True iff left == peak == right, compared exactly.
[[nodiscard]] bool is_crisp(const TriangularFuzzyNumber& f);

struct NamedFuzzyNumber {
    std::string name;
    TriangularFuzzyNumber value;

    friend bool operator==(const NamedFuzzyNumber&, const NamedFuzzyNumber&) = default;
};

/// Ordered, non-empty list of uniquely named triangular fuzzy numbers.
class FuzzyVector {
public:
    explicit FuzzyVector(std::vector<NamedFuzzyNumber> components);

    [[nodiscard]] std::size_t size() const { return components_.size(); }
    [[nodiscard]] const std::vector<NamedFuzzyNumber>& components() const { return components_; }
    [[nodiscard]] const NamedFuzzyNumber& operator[](std::size_t i) const { return components_[i]; }
    [[nodiscard]] std::vector<std::string> names() const;
    /// Index of `name`, or size() when absent.
    [[nodiscard]] std::size_t index_of(const std::string& name) const;
    [[nodiscard]] bool all_crisp() const;

    auto begin() const { return components_.begin(); }
    auto end() const { return components_.end(); }

    friend bool operator==(const FuzzyVector&, const FuzzyVector&) = default;

private:
    std::vector<NamedFuzzyNumber> components_;
};

/// Product cut: one AlphaCut per component, order preserved.
[[nodiscard]] std::vector<AlphaCut> cut_box(const FuzzyVector& v, double alpha);

} // namespace bfv
