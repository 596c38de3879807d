#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bfv {

enum class NodeKind {
    Constant,
    Variable,
    Negate,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// AST node. Constants are always non-negative; a negative literal is
/// represented as Negate(Constant), which keeps printing and re-parsing
/// structurally stable.
struct Node {
    NodeKind kind;
    double value = 0.0;   // Constant
    std::string name;     // Variable
    NodePtr lhs;          // unary operand / left operand
    NodePtr rhs;          // right operand
};

/// Immutable scalar expression over x1, x2 and declared parameter names.
class Expression {
public:
    /// The constant 0.
    Expression();
    explicit Expression(NodePtr root);

    static Expression constant(double value);
    static Expression variable(std::string name);

    [[nodiscard]] const Node& root() const { return *root_; }
    [[nodiscard]] const NodePtr& node() const { return root_; }
    [[nodiscard]] NodeKind kind() const { return root_->kind; }

    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] std::set<std::string> free_variables() const;
    [[nodiscard]] bool depends_on(const std::string& name) const;
    /// Value when the expression is a (possibly negated) constant.
    [[nodiscard]] bool is_constant(double* value = nullptr) const;

    /// Structural equality of the two trees (constants compared exactly).
    friend bool operator==(const Expression& a, const Expression& b);

private:
    NodePtr root_;
};

std::ostream& operator<<(std::ostream& os, const Expression& e);

// Builders. Each folds constants and drops the identities 0*e, 1*e, e+0,
// e-0, e/1, e^1, e^0 and --e; nothing else is rewritten.
Expression make_neg(const Expression& a);
Expression make_add(const Expression& a, const Expression& b);
Expression make_sub(const Expression& a, const Expression& b);
Expression make_mul(const Expression& a, const Expression& b);
Expression make_div(const Expression& a, const Expression& b);
Expression make_pow(const Expression& a, const Expression& b);
Expression make_call(NodeKind fn, const Expression& a);

/// Syntax error at a byte offset of the parsed text.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t position);
    [[nodiscard]] std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class UndeclaredIdentifierError : public ParseError {
public:
    UndeclaredIdentifierError(std::string name, std::size_t position);
    [[nodiscard]] const std::string& name() const { return name_; }

private:
    std::string name_;
};

/// Evaluation failure: unbound variable or a domain violation. `node()`
/// holds the printed subexpression that failed.
class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& message, std::string node);
    [[nodiscard]] const std::string& node() const { return node_; }

private:
    std::string node_;
};

inline constexpr std::string_view kVarX1 = "x1";
inline constexpr std::string_view kVarX2 = "x2";

/// True for x1, x2 and the built-in function names.
[[nodiscard]] bool is_reserved_name(std::string_view name);
[[nodiscard]] bool is_identifier(std::string_view name);

/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' unary)?          right-associative
///   primary := number | identifier | fn '(' expr ')' | '(' expr ')'
///   fn      := exp | ln | sqrt | sin | cos
/// Identifiers must be x1, x2 or one of `declared_params`.
[[nodiscard]] Expression parse(std::string_view text,
                               const std::vector<std::string>& declared_params = {});

using Binding = std::map<std::string, double, std::less<>>;

[[nodiscard]] double evaluate(const Expression& e, const Binding& b);

/// Symbolic partial derivative. Any variable name is accepted; x1 and x2 are
/// the ones the equation needs, parameters are used for monotonicity probes.
[[nodiscard]] Expression differentiate(const Expression& e, const std::string& var);

/// Central difference (e(var + h) - e(var - h)) / (2h).
[[nodiscard]] double finite_difference(const Expression& e, const std::string& var,
                                       const Binding& b, double h);

/// Expression flattened to postfix code over a fixed slot layout. Produces
/// the same values and errors as evaluate() without map lookups.
class CompiledExpression {
public:
    CompiledExpression(const Expression& e, std::vector<std::string> slots);

    [[nodiscard]] double operator()(std::span<const double> values) const;
    [[nodiscard]] const std::vector<std::string>& slots() const { return slots_; }

private:
    struct Instr {
        NodeKind op;
        double value;
        std::size_t slot;
        const Node* node;
    };

    Expression source_;
    std::vector<std::string> slots_;
    std::vector<Instr> code_;
    std::size_t max_depth_ = 0;
};

} // namespace bfv
