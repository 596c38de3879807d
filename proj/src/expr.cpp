#include "bfv/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

namespace bfv {

namespace {

constexpr std::array<std::pair<std::string_view, NodeKind>, 5> kFunctions{{
    {"exp", NodeKind::Exp},
    {"ln", NodeKind::Ln},
    {"sqrt", NodeKind::Sqrt},
    {"sin", NodeKind::Sin},
    {"cos", NodeKind::Cos},
}};

bool is_function(NodeKind k) {
    return k == NodeKind::Exp || k == NodeKind::Ln || k == NodeKind::Sqrt ||
           k == NodeKind::Sin || k == NodeKind::Cos;
}

bool is_binary(NodeKind k) {
    return k == NodeKind::Add || k == NodeKind::Sub || k == NodeKind::Mul ||
           k == NodeKind::Div || k == NodeKind::Pow;
}

std::string_view function_name(NodeKind k) {
    for (const auto& [name, kind] : kFunctions) {
        if (kind == k) return name;
    }
    return "?";
}

NodePtr leaf_constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}

NodePtr unary_node(NodeKind k, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(a);
    return n;
}

NodePtr binary_node(NodeKind k, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

// ---------------------------------------------------------------------------
// Printing

int precedence(const Node& n) {
    switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Negate: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
    }
}

void format_number(std::string& out, double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), res.ptr);
}

void print_node(const Node& n, std::string& out);

void print_wrapped(const Node& n, bool wrap, std::string& out) {
    if (wrap) out += '(';
    print_node(n, out);
    if (wrap) out += ')';
}

void print_node(const Node& n, std::string& out) {
    switch (n.kind) {
    case NodeKind::Constant: format_number(out, n.value); return;
    case NodeKind::Variable: out += n.name; return;
    case NodeKind::Negate:
        out += '-';
        print_wrapped(*n.lhs, precedence(*n.lhs) < 3, out);
        return;
    case NodeKind::Add:
    case NodeKind::Sub:
        print_wrapped(*n.lhs, false, out);
        out += n.kind == NodeKind::Add ? " + " : " - ";
        print_wrapped(*n.rhs, precedence(*n.rhs) <= 1, out);
        return;
    case NodeKind::Mul:
    case NodeKind::Div:
        print_wrapped(*n.lhs, precedence(*n.lhs) < 2, out);
        out += n.kind == NodeKind::Mul ? " * " : " / ";
        print_wrapped(*n.rhs, precedence(*n.rhs) <= 2, out);
        return;
    case NodeKind::Pow:
        print_wrapped(*n.lhs, precedence(*n.lhs) <= 4, out);
        out += '^';
        print_wrapped(*n.rhs, precedence(*n.rhs) < 3, out);
        return;
    default:
        out += function_name(n.kind);
        out += '(';
        print_node(*n.lhs, out);
        out += ')';
        return;
    }
}

std::string print(const Node& n) {
    std::string out;
    print_node(n, out);
    return out;
}

bool same_tree(const Node& a, const Node& b) {
    if (&a == &b) return true;
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case NodeKind::Constant: return a.value == b.value;
    case NodeKind::Variable: return a.name == b.name;
    default: break;
    }
    if (!same_tree(*a.lhs, *b.lhs)) return false;
    return !is_binary(a.kind) || same_tree(*a.rhs, *b.rhs);
}

void collect_variables(const Node& n, std::set<std::string>& out) {
    if (n.kind == NodeKind::Variable) {
        out.insert(n.name);
        return;
    }
    if (n.lhs) collect_variables(*n.lhs, out);
    if (n.rhs) collect_variables(*n.rhs, out);
}

// ---------------------------------------------------------------------------
// Arithmetic shared by both evaluators

[[noreturn]] void fail(const std::string& what, const Node& n) {
    auto text = print(n);
    throw EvalError(what + " in '" + text + "'", text);
}

double checked(double v, const Node& n) {
    if (!std::isfinite(v)) fail("non-finite result", n);
    return v;
}

double power(double base, double expo, const Node& n) {
    if (base > 0.0) return checked(std::pow(base, expo), n);
    if (base == 0.0) {
        if (expo > 0.0) return 0.0;
        if (expo == 0.0) return 1.0;
        fail("zero raised to a negative power", n);
    }
    if (std::nearbyint(expo) != expo) fail("negative base with non-integer exponent", n);
    return checked(std::pow(base, expo), n);
}

double apply_binary(NodeKind k, double a, double b, const Node& n) {
    switch (k) {
    case NodeKind::Add: return checked(a + b, n);
    case NodeKind::Sub: return checked(a - b, n);
    case NodeKind::Mul: return checked(a * b, n);
    case NodeKind::Div:
        if (b == 0.0) fail("division by zero", n);
        return checked(a / b, n);
    case NodeKind::Pow: return power(a, b, n);
    default: fail("not a binary operator", n);
    }
}

double apply_unary(NodeKind k, double a, const Node& n) {
    switch (k) {
    case NodeKind::Negate: return -a;
    case NodeKind::Exp: return checked(std::exp(a), n);
    case NodeKind::Ln:
        if (a <= 0.0) fail("logarithm of a non-positive value", n);
        return std::log(a);
    case NodeKind::Sqrt:
        if (a < 0.0) fail("square root of a negative value", n);
        return std::sqrt(a);
    case NodeKind::Sin: return std::sin(a);
    case NodeKind::Cos: return std::cos(a);
    default: fail("not a unary operator", n);
    }
}

double eval_node(const Node& n, const Binding& b) {
    switch (n.kind) {
    case NodeKind::Constant: return n.value;
    case NodeKind::Variable: {
        auto it = b.find(n.name);
        if (it == b.end()) fail("unbound variable", n);
        return it->second;
    }
    default: break;
    }
    if (is_binary(n.kind)) {
        double lhs = eval_node(*n.lhs, b);
        double rhs = eval_node(*n.rhs, b);
        return apply_binary(n.kind, lhs, rhs, n);
    }
    return apply_unary(n.kind, eval_node(*n.lhs, b), n);
}

// ---------------------------------------------------------------------------
// Parsing

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& params)
        : text_(text), params_(params) {}

    Expression run() {
        skip_space();
        if (pos_ == text_.size()) throw ParseError("empty expression", pos_);
        auto e = parse_expr();
        skip_space();
        if (pos_ != text_.size()) {
            throw ParseError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
        }
        return Expression(std::move(e));
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    NodePtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (accept('+')) {
                lhs = binary_node(NodeKind::Add, lhs, parse_term());
            } else if (accept('-')) {
                lhs = binary_node(NodeKind::Sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {
        auto lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = binary_node(NodeKind::Mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = binary_node(NodeKind::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) return unary_node(NodeKind::Negate, parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        auto base = parse_primary();
        if (accept('^')) return binary_node(NodeKind::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = parse_expr();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
    }

    NodePtr parse_number() {
        std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t mantissa = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) throw ParseError("malformed number", start);
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(value)) {
            throw ParseError("malformed number", start);
        }
        return leaf_constant(value);
    }

    NodePtr parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        std::string_view ident = text_.substr(start, pos_ - start);
        for (const auto& [name, kind] : kFunctions) {
            if (ident == name) {
                if (!accept('(')) {
                    throw ParseError("function '" + std::string(ident) + "' needs '('", pos_);
                }
                auto arg = parse_expr();
                expect(')');
                return unary_node(kind, arg);
            }
        }
        bool known = ident == kVarX1 || ident == kVarX2;
        for (const auto& p : params_) known = known || ident == p;
        if (!known) throw UndeclaredIdentifierError(std::string(ident), start);
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::Variable;
        n->name = std::string(ident);
        return n;
    }

    std::string_view text_;
    const std::vector<std::string>& params_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Differentiation

Expression diff(const Expression& e, const std::string& var) {
    const Node& n = e.root();
    auto child = [](const NodePtr& p) { return Expression(p); };
    switch (n.kind) {
    case NodeKind::Constant: return Expression::constant(0.0);
    case NodeKind::Variable: return Expression::constant(n.name == var ? 1.0 : 0.0);
    case NodeKind::Negate: return make_neg(diff(child(n.lhs), var));
    case NodeKind::Add: return make_add(diff(child(n.lhs), var), diff(child(n.rhs), var));
    case NodeKind::Sub: return make_sub(diff(child(n.lhs), var), diff(child(n.rhs), var));
    case NodeKind::Mul: {
        auto u = child(n.lhs);
        auto v = child(n.rhs);
        return make_add(make_mul(diff(u, var), v), make_mul(u, diff(v, var)));
    }
    case NodeKind::Div: {
        auto u = child(n.lhs);
        auto v = child(n.rhs);
        auto num = make_sub(make_mul(diff(u, var), v), make_mul(u, diff(v, var)));
        return make_div(num, make_pow(v, Expression::constant(2.0)));
    }
    case NodeKind::Pow: {
        auto base = child(n.lhs);
        auto expo = child(n.rhs);
        bool base_var = base.depends_on(var);
        bool expo_var = expo.depends_on(var);
        if (!base_var && !expo_var) return Expression::constant(0.0);
        if (!expo_var) {
            // d(u^c) = c * u^(c-1) * u'
            auto lowered = make_pow(base, make_sub(expo, Expression::constant(1.0)));
            return make_mul(make_mul(expo, lowered), diff(base, var));
        }
        // u^v = exp(v ln u): d = u^v * (v' ln u + v u'/u)
        auto log_term = make_mul(diff(expo, var), make_call(NodeKind::Ln, base));
        auto ratio_term = make_div(make_mul(expo, diff(base, var)), base);
        return make_mul(e, make_add(log_term, ratio_term));
    }
    case NodeKind::Exp: return make_mul(e, diff(child(n.lhs), var));
    case NodeKind::Ln: return make_div(diff(child(n.lhs), var), child(n.lhs));
    case NodeKind::Sqrt:
        return make_div(diff(child(n.lhs), var), make_mul(Expression::constant(2.0), e));
    case NodeKind::Sin:
        return make_mul(make_call(NodeKind::Cos, child(n.lhs)), diff(child(n.lhs), var));
    case NodeKind::Cos:
        return make_neg(
            make_mul(make_call(NodeKind::Sin, child(n.lhs)), diff(child(n.lhs), var)));
    }
    return Expression::constant(0.0);
}

bool folds_to(const Expression& e, double target) {
    double v = 0.0;
    return e.is_constant(&v) && v == target;
}

// Folds `f` over constant operands when the result is finite.
template <typename Fn>
bool try_fold(const Expression& a, const Expression& b, Fn f, Expression& out) {
    double x = 0.0;
    double y = 0.0;
    if (!a.is_constant(&x) || !b.is_constant(&y)) return false;
    double r = f(x, y);
    if (!std::isfinite(r)) return false;
    out = Expression::constant(r);
    return true;
}

} // namespace

// ---------------------------------------------------------------------------

Expression::Expression() : root_(leaf_constant(0.0)) {}

Expression::Expression(NodePtr root) : root_(std::move(root)) {
    if (!root_) throw std::invalid_argument("null expression node");
}

Expression Expression::constant(double value) {
    if (value == 0.0) return Expression(leaf_constant(0.0));
    if (value < 0.0) return Expression(unary_node(NodeKind::Negate, leaf_constant(-value)));
    return Expression(leaf_constant(value));
}

Expression Expression::variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Variable;
    n->name = std::move(name);
    return Expression(std::move(n));
}

std::string Expression::to_string() const { return print(*root_); }

std::set<std::string> Expression::free_variables() const {
    std::set<std::string> out;
    collect_variables(*root_, out);
    return out;
}

bool Expression::depends_on(const std::string& name) const {
    return free_variables().contains(name);
}

bool Expression::is_constant(double* value) const {
    double v = 0.0;
    if (root_->kind == NodeKind::Constant) {
        v = root_->value;
    } else if (root_->kind == NodeKind::Negate && root_->lhs->kind == NodeKind::Constant) {
        v = -root_->lhs->value;
    } else {
        return false;
    }
    if (value) *value = v;
    return true;
}

bool operator==(const Expression& a, const Expression& b) { return same_tree(*a.root_, *b.root_); }

std::ostream& operator<<(std::ostream& os, const Expression& e) { return os << e.to_string(); }

Expression make_neg(const Expression& a) {
    double v = 0.0;
    if (a.is_constant(&v)) return Expression::constant(-v);
    if (a.kind() == NodeKind::Negate) return Expression(a.root().lhs);
    return Expression(unary_node(NodeKind::Negate, a.node()));
}

Expression make_add(const Expression& a, const Expression& b) {
    Expression out = a;
    if (try_fold(a, b, [](double x, double y) { return x + y; }, out)) return out;
    if (folds_to(a, 0.0)) return b;
    if (folds_to(b, 0.0)) return a;
    return Expression(binary_node(NodeKind::Add, a.node(), b.node()));
}

Expression make_sub(const Expression& a, const Expression& b) {
    Expression out = a;
    if (try_fold(a, b, [](double x, double y) { return x - y; }, out)) return out;
    if (folds_to(b, 0.0)) return a;
    if (folds_to(a, 0.0)) return make_neg(b);
    return Expression(binary_node(NodeKind::Sub, a.node(), b.node()));
}

Expression make_mul(const Expression& a, const Expression& b) {
    Expression out = a;
    if (try_fold(a, b, [](double x, double y) { return x * y; }, out)) return out;
    if (folds_to(a, 0.0) || folds_to(b, 0.0)) return Expression::constant(0.0);
    if (folds_to(a, 1.0)) return b;
    if (folds_to(b, 1.0)) return a;
    if (folds_to(a, -1.0)) return make_neg(b);
    if (folds_to(b, -1.0)) return make_neg(a);
    return Expression(binary_node(NodeKind::Mul, a.node(), b.node()));
}

Expression make_div(const Expression& a, const Expression& b) {
    Expression out = a;
    if (!folds_to(b, 0.0) &&
        try_fold(a, b, [](double x, double y) { return x / y; }, out)) {
        return out;
    }
    if (folds_to(a, 0.0)) return Expression::constant(0.0);
    if (folds_to(b, 1.0)) return a;
    return Expression(binary_node(NodeKind::Div, a.node(), b.node()));
}

Expression make_pow(const Expression& a, const Expression& b) {
    Expression out = a;
    double x = 0.0;
    double y = 0.0;
    if (a.is_constant(&x) && b.is_constant(&y) && (x > 0.0 || (x == 0.0 && y > 0.0) ||
                                                   (x < 0.0 && std::nearbyint(y) == y))) {
        if (try_fold(a, b, [](double p, double q) { return std::pow(p, q); }, out)) return out;
    }
    if (folds_to(b, 1.0)) return a;
    if (folds_to(b, 0.0)) return Expression::constant(1.0);
    return Expression(binary_node(NodeKind::Pow, a.node(), b.node()));
}

Expression make_call(NodeKind fn, const Expression& a) {
    if (!is_function(fn)) throw std::invalid_argument("make_call: not a function kind");
    auto call = Expression(unary_node(fn, a.node()));
    double x = 0.0;
    if (a.is_constant(&x)) {
        try {
            return Expression::constant(apply_unary(fn, x, call.root()));
        } catch (const EvalError&) {
            // leave unevaluated; the error surfaces at evaluation time
        }
    }
    return call;
}

ParseError::ParseError(const std::string& message, std::size_t position)
    : std::runtime_error(message + " at offset " + std::to_string(position)),
      position_(position) {}

UndeclaredIdentifierError::UndeclaredIdentifierError(std::string name, std::size_t position)
    : ParseError("undeclared identifier '" + name + "'", position), name_(std::move(name)) {}

EvalError::EvalError(const std::string& message, std::string node)
    : std::runtime_error(message), node_(std::move(node)) {}

bool is_reserved_name(std::string_view name) {
    if (name == kVarX1 || name == kVarX2) return true;
    for (const auto& [fn, kind] : kFunctions) {
        if (name == fn) return true;
    }
    return false;
}

bool is_identifier(std::string_view name) {
    if (name.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    return true;
}

Expression parse(std::string_view text, const std::vector<std::string>& declared_params) {
    for (const auto& p : declared_params) {
        if (!is_identifier(p) || is_reserved_name(p)) {
            throw std::invalid_argument("invalid parameter name '" + p + "'");
        }
    }
    return Parser(text, declared_params).run();
}

double evaluate(const Expression& e, const Binding& b) { return eval_node(e.root(), b); }

Expression differentiate(const Expression& e, const std::string& var) { return diff(e, var); }

double finite_difference(const Expression& e, const std::string& var, const Binding& b,
                         double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_difference: step must be positive");
    if (!e.depends_on(var)) return 0.0;
    Binding shifted = b;
    auto it = shifted.find(var);
    if (it == shifted.end()) fail("unbound variable", Expression::variable(var).root());
    const double x = it->second;
    it->second = x + h;
    const double up = evaluate(e, shifted);
    it->second = x - h;
    const double down = evaluate(e, shifted);
    return (up - down) / (2.0 * h);
}

// ---------------------------------------------------------------------------

CompiledExpression::CompiledExpression(const Expression& e, std::vector<std::string> slots)
    : source_(e), slots_(std::move(slots)) {
    std::size_t depth = 0;
    auto emit = [&](auto&& self, const Node& n) -> void {
        Instr in{n.kind, n.value, 0, &n};
        if (n.kind == NodeKind::Variable) {
            std::size_t i = 0;
            while (i < slots_.size() && slots_[i] != n.name) ++i;
            if (i == slots_.size()) fail("unbound variable", n);
            in.slot = i;
        }
        if (n.lhs) self(self, *n.lhs);
        if (n.rhs) self(self, *n.rhs);
        if (n.kind == NodeKind::Constant || n.kind == NodeKind::Variable) {
            max_depth_ = std::max(max_depth_, ++depth);
        } else if (is_binary(n.kind)) {
            --depth;
        }
        code_.push_back(in);
    };
    emit(emit, e.root());
}

double CompiledExpression::operator()(std::span<const double> values) const {
    constexpr std::size_t kInline = 32;
    std::array<double, kInline> inline_stack{};
    std::vector<double> heap_stack;
    double* stack = inline_stack.data();
    if (max_depth_ > kInline) {
        heap_stack.resize(max_depth_);
        stack = heap_stack.data();
    }
    std::size_t top = 0;
    for (const auto& in : code_) {
        switch (in.op) {
        case NodeKind::Constant: stack[top++] = in.value; break;
        case NodeKind::Variable:
            if (in.slot >= values.size()) fail("unbound variable", *in.node);
            stack[top++] = values[in.slot];
            break;
        case NodeKind::Add:
        case NodeKind::Sub:
        case NodeKind::Mul:
        case NodeKind::Div:
        case NodeKind::Pow: {
            double rhs = stack[--top];
            stack[top - 1] = apply_binary(in.op, stack[top - 1], rhs, *in.node);
            break;
        }
        default: stack[top - 1] = apply_unary(in.op, stack[top - 1], *in.node); break;
        }
    }
    return stack[0];
}

} // namespace bfv
