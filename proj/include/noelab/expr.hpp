#pragma once

#include <array>
#include <cctype>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "noelab/dual.hpp"
#include "noelab/errors.hpp"
#include "noelab/quantity.hpp"

namespace noelab {

// Arithmetic expressions over x0..x3, w0..w3 with sqrt, abs2 and constants
// carrying unit suffixes. Evaluation is templated over the scalar type:
// doubles and duals for numerics, Quantity for the dimension audit.

namespace expr_detail {

template <class S>
S make_const(double value, const Dim&) {
    return S(value);
}

template <>
inline Quantity make_const<Quantity>(double value, const Dim& dim) {
    return Quantity{value, dim};
}

inline Quantity abs2(const Quantity& q) { return q * q; }
inline double abs2(double x) { return x * x; }
template <int N, class T>
DualN<N, T> abs2(const DualN<N, T>& x) {
    return x * x;
}

}  // namespace expr_detail

class Expr {
  public:
    enum class Kind { Const, Var, Add, Sub, Mul, Div, Neg, Sqrt, Abs2 };

    static std::shared_ptr<Expr> constant(double v, Dim d) {
        auto e = std::make_shared<Expr>();
        e->kind_ = Kind::Const;
        e->value_ = v;
        e->dim_ = d;
        return e;
    }
    static std::shared_ptr<Expr> variable(int index) {
        auto e = std::make_shared<Expr>();
        e->kind_ = Kind::Var;
        e->index_ = index;
        return e;
    }
    static std::shared_ptr<Expr> node(Kind k, std::shared_ptr<Expr> a,
                                      std::shared_ptr<Expr> b = nullptr) {
        auto e = std::make_shared<Expr>();
        e->kind_ = k;
        e->lhs_ = std::move(a);
        e->rhs_ = std::move(b);
        return e;
    }

    // vars: x0..x3 at indices 0..3, w0..w3 at indices 4..7
    template <class S>
    S eval(const std::array<S, 8>& vars) const {
        switch (kind_) {
            case Kind::Const:
                return expr_detail::make_const<S>(value_, dim_);
            case Kind::Var:
                return vars[index_];
            case Kind::Add:
                return lhs_->eval(vars) + rhs_->eval(vars);
            case Kind::Sub:
                return lhs_->eval(vars) - rhs_->eval(vars);
            case Kind::Mul:
                return lhs_->eval(vars) * rhs_->eval(vars);
            case Kind::Div:
                return lhs_->eval(vars) / rhs_->eval(vars);
            case Kind::Neg:
                return -lhs_->eval(vars);
            case Kind::Sqrt: {
                using std::sqrt;
                using noelab::sqrt;
                return sqrt(lhs_->eval(vars));
            }
            case Kind::Abs2: {
                using expr_detail::abs2;
                return abs2(lhs_->eval(vars));
            }
        }
        throw Error("corrupt expression node");
    }

  private:
    Kind kind_ = Kind::Const;
    double value_ = 0.0;
    Dim dim_{};
    int index_ = 0;
    std::shared_ptr<Expr> lhs_, rhs_;
};

using ExprPtr = std::shared_ptr<Expr>;

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class ExprParser {
  public:
    static ExprPtr parse(std::string_view text) {
        ExprParser p(text);
        ExprPtr e = p.parse_additive();
        p.skip_ws();
        if (p.pos_ != p.text_.size())
            throw ParseError("unexpected trailing input in expression at '" +
                             std::string(p.text_.substr(p.pos_)) + "'");
        return e;
    }

  private:
    explicit ExprParser(std::string_view text) : text_(text) {}

    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        for (;;) {
            if (eat('+'))
                lhs = Expr::node(Expr::Kind::Add, lhs, parse_multiplicative());
            else if (eat('-'))
                lhs = Expr::node(Expr::Kind::Sub, lhs, parse_multiplicative());
            else
                return lhs;
        }
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_unary();
        for (;;) {
            if (eat('*'))
                lhs = Expr::node(Expr::Kind::Mul, lhs, parse_unary());
            else if (eat('/'))
                lhs = Expr::node(Expr::Kind::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    ExprPtr parse_unary() {
        if (eat('-')) return Expr::node(Expr::Kind::Neg, parse_unary());
        return parse_primary();
    }

    ExprPtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            ExprPtr inner = parse_additive();
            if (!eat(')')) throw ParseError("missing ')' in expression");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        throw ParseError(std::string("unexpected character '") + c + "' in expression");
    }

    ExprPtr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        if (name.size() == 2 && (name[0] == 'x' || name[0] == 'w') && name[1] >= '0' &&
            name[1] <= '3') {
            const int slot = name[1] - '0';
            return Expr::variable(name[0] == 'x' ? slot : 4 + slot);
        }
        if (name == "sqrt" || name == "abs2") {
            if (!eat('(')) throw ParseError("expected '(' after " + std::string(name));
            ExprPtr arg = parse_additive();
            if (!eat(')')) throw ParseError("missing ')' after " + std::string(name) + " argument");
            return Expr::node(name == "sqrt" ? Expr::Kind::Sqrt : Expr::Kind::Abs2, arg);
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'");
    }

    // A number with optional unit suffix from the closed set
    // {s, m, s/m2, 1/s}. The float part is munched greedily; "X1/s" is
    // re-read as X * (1/s) since "/s" can never follow a number otherwise.
    ExprPtr parse_number() {
        const std::string rest(text_.substr(pos_));
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(rest, &used);
        } catch (const std::exception&) {
            throw ParseError("bad numeric literal in expression");
        }
        pos_ += used;

        Dim dim = dims::dimensionless;
        if (try_unit("s/m2"))
            dim = dims::mass;
        else if (try_unit("1/s"))
            dim = dims::per_second;
        else if (try_unit("s"))
            dim = dims::second;
        else if (try_unit("m"))
            dim = dims::meter;
        else if (pos_ + 1 < text_.size() && text_[pos_] == '/' && text_[pos_ + 1] == 's' &&
                 rest[used - 1] == '1' &&
                 (pos_ + 2 >= text_.size() ||
                  !std::isalnum(static_cast<unsigned char>(text_[pos_ + 2])))) {
            // greedy float swallowed the '1' of a 1/s suffix
            pos_ += 2;
            dim = dims::per_second;
            const std::string trimmed = rest.substr(0, used - 1);
            if (trimmed.empty()) {
                value = 1.0;
            } else {
                std::size_t used2 = 0;
                value = std::stod(trimmed, &used2);
                if (used2 != trimmed.size())
                    throw ParseError("ambiguous unit literal '" + rest.substr(0, used + 2) + "'");
            }
        }
        return Expr::constant(value, dim);
    }

    bool try_unit(std::string_view unit) {
        if (text_.substr(pos_).starts_with(unit)) {
            const std::size_t after = pos_ + unit.size();
            if (after < text_.size() &&
                (std::isalnum(static_cast<unsigned char>(text_[after])) || text_[after] == '_'))
                return false;
            pos_ = after;
            return true;
        }
        return false;
    }
};

}  // namespace noelab
