#pragma once

// Coordinate expressions for vector fields: parsing, evaluation, and exact
// first derivatives by forward-mode differentiation over the expression tree.
//
// Grammar (whitespace-insensitive):
//   field   := '[' list ']' | list
//   list    := expr ((';' | ',') expr)*
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          (right-associative)
//   primary := number | 'x'k | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | tan | atan | exp | log | sqrt | abs

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rotnum/dual.hpp"
#include "rotnum/error.hpp"

namespace rotnum {

enum class ExprOp {
    Const, Var, Add, Sub, Mul, Div, Pow, Neg,
    Sin, Cos, Tan, Atan, Exp, Log, Sqrt, Abs
};

struct ExprNode {
    ExprOp op = ExprOp::Const;
    double value = 0.0;  // Const
    int var = -1;        // Var, zero-based
    int lhs = -1;        // operand of unary ops, left operand of binary ops
    int rhs = -1;
};

/// A vector field given by `dim` scalar expressions over x1..xdim. Nodes are
/// stored in post-order so every component occupies a contiguous node range;
/// the node pool is shared and never mutated after parsing.
class FieldExpr {
public:
    FieldExpr() = default;

    /// Number of coordinates the expressions may reference.
    std::size_t dim() const noexcept { return dim_; }
    /// Number of scalar components; equals dim() for vector fields.
    std::size_t components() const noexcept { return roots_.size(); }
    bool empty() const noexcept { return pool_ == nullptr; }

    const std::vector<ExprNode>& nodes() const { return *pool_; }
    int root(std::size_t component) const { return roots_[component]; }

    /// Evaluate all components at `x` (size dim()) into `out` (size components()).
    template <class T>
    void evaluate(std::span<const T> x, std::span<T> out) const;

private:
    friend FieldExpr parse_components(std::string_view source, std::size_t dim, std::size_t count);

    std::size_t dim_ = 0;
    std::shared_ptr<const std::vector<ExprNode>> pool_;
    std::vector<int> roots_;
    std::vector<int> starts_;
};

namespace detail {

class ExprParser {
public:
    ExprParser(std::string_view src, std::size_t dim, std::size_t count, std::vector<ExprNode>& pool)
        : src_(src), dim_(dim), count_(count), pool_(pool) {}

    std::vector<int> parse_field(std::vector<int>& starts) {
        std::vector<int> roots;
        skip_ws();
        const bool bracketed = peek() == '[';
        if (bracketed) ++pos_;
        while (true) {
            starts.push_back(static_cast<int>(pool_.size()));
            roots.push_back(parse_expr());
            skip_ws();
            if (peek() == ';' || peek() == ',') {
                ++pos_;
                continue;
            }
            break;
        }
        if (bracketed) {
            if (peek() != ']') fail("expected ']'");
            ++pos_;
        }
        skip_ws();
        if (pos_ != src_.size()) fail(std::string("unexpected '") + src_[pos_] + "'");
        if (roots.size() != count_) {
            throw ParseError("expected " + std::to_string(count_) + " components, found " +
                                 std::to_string(roots.size()),
                             pos_);
        }
        return roots;
    }

private:
    char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError("syntax error: " + msg, pos_); }

    int push(ExprNode node) {
        pool_.push_back(node);
        return static_cast<int>(pool_.size()) - 1;
    }

    int binary(ExprOp op, int lhs, int rhs) {
        // Operands were appended before; the post-order layout stays valid.
        return push({op, 0.0, -1, lhs, rhs});
    }

    int parse_expr() {
        int lhs = parse_term();
        while (true) {
            skip_ws();
            const char c = peek();
            if (c != '+' && c != '-') return lhs;
            ++pos_;
            const int rhs = parse_term();
            lhs = binary(c == '+' ? ExprOp::Add : ExprOp::Sub, lhs, rhs);
        }
    }

    int parse_term() {
        int lhs = parse_unary();
        while (true) {
            skip_ws();
            const char c = peek();
            if (c != '*' && c != '/') return lhs;
            ++pos_;
            const int rhs = parse_unary();
            lhs = binary(c == '*' ? ExprOp::Mul : ExprOp::Div, lhs, rhs);
        }
    }

    int parse_unary() {
        skip_ws();
        if (peek() == '-') {
            ++pos_;
            const int operand = parse_unary();
            return push({ExprOp::Neg, 0.0, -1, operand, -1});
        }
        if (peek() == '+') {
            ++pos_;
            return parse_unary();
        }
        return parse_power();
    }

    int parse_power() {
        const int base = parse_primary();
        skip_ws();
        if (peek() != '^') return base;
        ++pos_;
        const int exponent = parse_unary();
        return binary(ExprOp::Pow, base, exponent);
    }

    int parse_primary() {
        skip_ws();
        const char c = peek();
        if (c == '\0') fail("unexpected end of input");
        if (c == '(') {
            ++pos_;
            const int inner = parse_expr();
            skip_ws();
            if (peek() != ')') fail("expected ')'");
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail(std::string("unexpected '") + c + "'");
    }

    int parse_number() {
        const std::size_t start = pos_;
        while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') ++pos_;
        if (peek() == 'e' || peek() == 'E') {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                pos_ = look;
                while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
            }
        }
        const std::string text(src_.substr(start, pos_ - start));
        char* end = nullptr;
        const double value = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size()) {
            pos_ = start;
            fail("malformed number '" + text + "'");
        }
        return push({ExprOp::Const, value, -1, -1, -1});
    }

    int parse_identifier() {
        const std::size_t start = pos_;
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') ++pos_;
        const std::string name(src_.substr(start, pos_ - start));

        if (name == "pi") return push({ExprOp::Const, std::numbers::pi, -1, -1, -1});
        if (name == "e") return push({ExprOp::Const, std::numbers::e, -1, -1, -1});

        if (name.size() > 1 && name[0] == 'x' &&
            name.find_first_not_of("0123456789", 1) == std::string::npos && name[1] != '0') {
            const unsigned long k = std::stoul(name.substr(1));
            if (k > dim_) {
                throw ParseError("variable '" + name + "' exceeds dimension " + std::to_string(dim_), start);
            }
            return push({ExprOp::Var, 0.0, static_cast<int>(k - 1), -1, -1});
        }

        ExprOp op;
        if (name == "sin") op = ExprOp::Sin;
        else if (name == "cos") op = ExprOp::Cos;
        else if (name == "tan") op = ExprOp::Tan;
        else if (name == "atan") op = ExprOp::Atan;
        else if (name == "exp") op = ExprOp::Exp;
        else if (name == "log") op = ExprOp::Log;
        else if (name == "sqrt") op = ExprOp::Sqrt;
        else if (name == "abs") op = ExprOp::Abs;
        else throw ParseError("unknown identifier '" + name + "'", start);

        skip_ws();
        if (peek() != '(') fail("expected '(' after '" + name + "'");
        ++pos_;
        const int arg = parse_expr();
        skip_ws();
        if (peek() != ')') fail("expected ')'");
        ++pos_;
        return push({op, 0.0, -1, arg, -1});
    }

    std::string_view src_;
    std::size_t dim_;
    std::size_t count_;
    std::vector<ExprNode>& pool_;
    std::size_t pos_ = 0;
};

inline bool is_integer(double y) { return std::isfinite(y) && std::floor(y) == y; }

template <class T>
T power(T base, T exponent, std::size_t component) {
    const double b = value_of(base);
    const double y = value_of(exponent);
    if (b == 0.0 && y < 0.0) throw DomainError("division by zero in power", component);
    if (b < 0.0 && !is_integer(y)) throw DomainError("negative base with non-integer exponent", component);
    if constexpr (std::is_same_v<T, double>) {
        return std::pow(b, y);
    } else {
        const double value = std::pow(b, y);
        double d = 0.0;
        if (base.d != 0.0) {
            if (b == 0.0 && y < 1.0 && y != 0.0) throw DomainError("power not differentiable at zero", component);
            d += (y == 0.0 ? 0.0 : y * std::pow(b, y - 1.0)) * base.d;
        }
        if (exponent.d != 0.0) {
            if (b <= 0.0) throw DomainError("power with variable exponent needs a positive base", component);
            d += value * std::log(b) * exponent.d;
        }
        return {value, d};
    }
}

}  // namespace detail

/// Parse `count` semicolon- (or comma-) separated scalar expressions over
/// x1..x`dim`, optionally wrapped in brackets.
inline FieldExpr parse_components(std::string_view source, std::size_t dim, std::size_t count) {
    if (dim == 0 || count == 0) throw ParseError("dimension must be positive", 0);
    auto pool = std::make_shared<std::vector<ExprNode>>();
    FieldExpr f;
    detail::ExprParser parser(source, dim, count, *pool);
    f.roots_ = parser.parse_field(f.starts_);
    f.dim_ = dim;
    f.pool_ = std::move(pool);
    return f;
}

/// A vector field on R^dim: exactly `dim` components.
inline FieldExpr parse_field(std::string_view source, std::size_t dim) { return parse_components(source, dim, dim); }

template <class T>
void FieldExpr::evaluate(std::span<const T> x, std::span<T> out) const {
    using std::abs, std::atan, std::cos, std::exp, std::log, std::sin, std::sqrt, std::tan;
    const auto& pool = *pool_;
    std::vector<T> val(pool.size());
    for (std::size_t k = 0; k < roots_.size(); ++k) {
        const auto first = static_cast<std::size_t>(starts_[k]);
        const auto last = static_cast<std::size_t>(roots_[k]);
        for (std::size_t i = first; i <= last; ++i) {
            const ExprNode& n = pool[i];
            const auto l = static_cast<std::size_t>(n.lhs);
            const auto r = static_cast<std::size_t>(n.rhs);
            switch (n.op) {
            case ExprOp::Const: val[i] = T(n.value); break;
            case ExprOp::Var: val[i] = x[static_cast<std::size_t>(n.var)]; break;
            case ExprOp::Add: val[i] = val[l] + val[r]; break;
            case ExprOp::Sub: val[i] = val[l] - val[r]; break;
            case ExprOp::Mul: val[i] = val[l] * val[r]; break;
            case ExprOp::Div:
                if (value_of(val[r]) == 0.0) throw DomainError("division by zero", k);
                val[i] = val[l] / val[r];
                break;
            case ExprOp::Pow: val[i] = detail::power(val[l], val[r], k); break;
            case ExprOp::Neg: val[i] = -val[l]; break;
            case ExprOp::Sin: val[i] = sin(val[l]); break;
            case ExprOp::Cos: val[i] = cos(val[l]); break;
            case ExprOp::Tan:
                if (std::cos(value_of(val[l])) == 0.0) throw DomainError("tan pole", k);
                val[i] = tan(val[l]);
                break;
            case ExprOp::Atan: val[i] = atan(val[l]); break;
            case ExprOp::Exp: val[i] = exp(val[l]); break;
            case ExprOp::Log:
                if (!(value_of(val[l]) > 0.0)) throw DomainError("log of non-positive value", k);
                val[i] = log(val[l]);
                break;
            case ExprOp::Sqrt:
                if (value_of(val[l]) < 0.0) throw DomainError("sqrt of negative value", k);
                if (value_of(val[l]) == 0.0 && tangent_of(val[l]) != 0.0) {
                    throw DomainError("sqrt not differentiable at zero", k);
                }
                val[i] = sqrt(val[l]);
                break;
            case ExprOp::Abs: val[i] = abs(val[l]); break;
            }
        }
        if (!std::isfinite(value_of(val[last]))) throw DomainError("non-finite value", k);
        out[k] = val[last];
    }
}

/// Componentwise value of `f` at `p`.
inline Eigen::VectorXd eval_field(const FieldExpr& f, const Eigen::VectorXd& p) {
    if (static_cast<std::size_t>(p.size()) != f.dim()) throw PreconditionError("point dimension mismatch");
    Eigen::VectorXd out(static_cast<Eigen::Index>(f.components()));
    f.evaluate<double>(std::span<const double>(p.data(), p.size()), std::span<double>(out.data(), out.size()));
    return out;
}

struct ValueAndDerivative {
    Eigen::VectorXd value;
    Eigen::VectorXd derivative;
};

/// Value of `f` at `p` and its derivative along `direction`, in one pass.
inline ValueAndDerivative directional_derivative(const FieldExpr& f, const Eigen::VectorXd& p,
                                                 const Eigen::VectorXd& direction) {
    const std::size_t n = f.dim(), m = f.components();
    if (static_cast<std::size_t>(p.size()) != n || static_cast<std::size_t>(direction.size()) != n) {
        throw PreconditionError("point dimension mismatch");
    }
    std::vector<Dual> x(n), out(m);
    for (std::size_t j = 0; j < n; ++j) x[j] = Dual(p[static_cast<Eigen::Index>(j)], direction[static_cast<Eigen::Index>(j)]);
    f.evaluate<Dual>(x, out);
    ValueAndDerivative r{Eigen::VectorXd(static_cast<Eigen::Index>(m)), Eigen::VectorXd(static_cast<Eigen::Index>(m))};
    for (std::size_t i = 0; i < m; ++i) {
        r.value[static_cast<Eigen::Index>(i)] = out[i].v;
        r.derivative[static_cast<Eigen::Index>(i)] = out[i].d;
    }
    return r;
}

struct ValueAndJacobian {
    Eigen::VectorXd value;
    Eigen::MatrixXd jacobian;
};

/// One forward pass per input coordinate.
inline ValueAndJacobian eval_with_jacobian(const FieldExpr& f, const Eigen::VectorXd& p) {
    const auto n = static_cast<Eigen::Index>(f.dim());
    const auto m = static_cast<Eigen::Index>(f.components());
    if (p.size() != n) throw PreconditionError("point dimension mismatch");
    ValueAndJacobian r{Eigen::VectorXd(m), Eigen::MatrixXd(m, n)};
    std::vector<Dual> x(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = Dual(p[k], k == j ? 1.0 : 0.0);
        f.evaluate<Dual>(x, out);
        for (Eigen::Index i = 0; i < m; ++i) {
            r.jacobian(i, j) = out[static_cast<std::size_t>(i)].d;
            if (j == 0) r.value[i] = out[static_cast<std::size_t>(i)].v;
        }
    }
    return r;
}

inline Eigen::MatrixXd jacobian(const FieldExpr& f, const Eigen::VectorXd& p) {
    return eval_with_jacobian(f, p).jacobian;
}

namespace detail {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void render_node(const std::vector<ExprNode>& pool, int index, std::string& out) {
    const ExprNode& n = pool[static_cast<std::size_t>(index)];
    auto func = [&](const char* name) {
        out += name;
        out += '(';
        render_node(pool, n.lhs, out);
        out += ')';
    };
    auto infix = [&](const char* op) {
        out += '(';
        render_node(pool, n.lhs, out);
        out += op;
        render_node(pool, n.rhs, out);
        out += ')';
    };
    switch (n.op) {
    case ExprOp::Const: out += format_number(n.value); break;
    case ExprOp::Var: out += "x" + std::to_string(n.var + 1); break;
    case ExprOp::Add: infix(" + "); break;
    case ExprOp::Sub: infix(" - "); break;
    case ExprOp::Mul: infix("*"); break;
    case ExprOp::Div: infix("/"); break;
    case ExprOp::Pow: infix("^"); break;
    case ExprOp::Neg:
        out += "(-";
        render_node(pool, n.lhs, out);
        out += ')';
        break;
    case ExprOp::Sin: func("sin"); break;
    case ExprOp::Cos: func("cos"); break;
    case ExprOp::Tan: func("tan"); break;
    case ExprOp::Atan: func("atan"); break;
    case ExprOp::Exp: func("exp"); break;
    case ExprOp::Log: func("log"); break;
    case ExprOp::Sqrt: func("sqrt"); break;
    case ExprOp::Abs: func("abs"); break;
    }
}

}  // namespace detail

/// Canonical fully parenthesized text; parses back to the same tree.
inline std::string render(const FieldExpr& f) {
    std::string out = "[";
    for (std::size_t k = 0; k < f.components(); ++k) {
        if (k) out += "; ";
        detail::render_node(f.nodes(), f.root(k), out);
    }
    out += "]";
    return out;
}

/// The field `factor * f`, built textually from the canonical rendering.
inline FieldExpr scale_field(const FieldExpr& f, double factor) {
    std::string text = "[";
    for (std::size_t k = 0; k < f.components(); ++k) {
        if (k) text += "; ";
        text += "(" + detail::format_number(factor) + ")*";
        detail::render_node(f.nodes(), f.root(k), text);
    }
    text += "]";
    return parse_components(text, f.dim(), f.components());
}

}  // namespace rotnum
