#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfv/engine.hpp"
#include "bfv/problem.hpp"

#include <json.hpp>

namespace bfv {

inline constexpr std::string_view kToolName = "bf-verify";
inline constexpr std::string_view kToolVersion = "0.1.0";

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Problem file rejected. `pointer()` is the JSON pointer of the offending
/// value; expression errors also carry the byte offset inside that string.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string pointer, const std::string& message,
                std::optional<std::size_t> offset = std::nullopt);

    [[nodiscard]] const std::string& pointer() const { return pointer_; }
    [[nodiscard]] std::optional<std::size_t> offset() const { return offset_; }

private:
    std::string pointer_;
    std::optional<std::size_t> offset_;
};

using ordered_json = nlohmann::ordered_json;

/// Parses and validates a problem document, applying every default.
[[nodiscard]] ProblemSpec parse_problem(const ordered_json& doc);
[[nodiscard]] ProblemSpec parse_problem_text(std::string_view text);
[[nodiscard]] ProblemSpec load_problem(const std::filesystem::path& path);

/// Fully explicit problem document; parse_problem(dump_problem(p)) == p.
[[nodiscard]] ordered_json dump_problem(const ProblemSpec& p);
void write_problem(const ProblemSpec& p, const std::filesystem::path& path);

[[nodiscard]] ordered_json report_json(const Verdict& v, const std::string& problem_name = {});
void emit_report(const Verdict& v, const std::filesystem::path& path,
                 const std::string& problem_name = {});

/// CSV `role,x1,x2,alpha,lower,upper`, rows ordered by (role, x1, x2, alpha),
/// numbers in shortest round-trip form. Inactive samples are omitted.
void write_curves(const std::vector<EnvelopeCurve>& curves, std::ostream& out);
void emit_curves(const std::vector<EnvelopeCurve>& curves, const std::filesystem::path& path);

[[nodiscard]] std::string format_double(double v);

} // namespace bfv
