#pragma once

// Right-hand-side expression language: numbers, t, y1..yd, + - * / ^,
// unary minus, sin/cos/exp, parentheses.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "picard/norm.hpp"
#include "picard/report.hpp"
#include "picard/series.hpp"

namespace picard {

struct parse_error : std::runtime_error {
    std::size_t position;
    parse_error(const std::string& what, std::size_t pos)
        : std::runtime_error(what + " at position " + std::to_string(pos)), position(pos)
    {
    }
};

struct eval_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { number, time, state, neg, sin, cos, exp, add, sub, mul, div, pow };
    Kind kind = Kind::number;
    double value = 0.0; ///< number
    int index = 0;      ///< state: 0-based component
    ExprPtr lhs;        ///< operand of unary nodes
    ExprPtr rhs;
};

inline bool operator==(const Expr& a, const Expr& b)
{
    if (a.kind != b.kind || a.index != b.index)
        return false;
    if (a.kind == Expr::Kind::number && a.value != b.value)
        return false;
    auto same = [](const ExprPtr& x, const ExprPtr& y) { return (!x && !y) || (x && y && *x == *y); };
    return same(a.lhs, b.lhs) && same(a.rhs, b.rhs);
}

namespace detail {

class ExprParser {
public:
    ExprParser(const std::string& src, int dim) : src_(src), dim_(dim) {}

    ExprPtr parse()
    {
        skip();
        if (pos_ >= src_.size())
            throw parse_error("empty expression", pos_);
        auto e = parse_sum();
        skip();
        if (pos_ != src_.size())
            throw parse_error(std::string("unexpected '") + src_[pos_] + "'", pos_);
        return e;
    }

private:
    static ExprPtr node(Expr::Kind k, ExprPtr l = nullptr, ExprPtr r = nullptr)
    {
        auto e = std::make_shared<Expr>();
        e->kind = k;
        e->lhs = std::move(l);
        e->rhs = std::move(r);
        return e;
    }

    void skip()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    ExprPtr parse_sum()
    {
        auto lhs = parse_product();
        for (;;) {
            if (accept('+'))
                lhs = node(Expr::Kind::add, lhs, parse_product());
            else if (accept('-'))
                lhs = node(Expr::Kind::sub, lhs, parse_product());
            else
                return lhs;
        }
    }

    ExprPtr parse_product()
    {
        auto lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = node(Expr::Kind::mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = node(Expr::Kind::div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    ExprPtr parse_unary()
    {
        if (accept('-'))
            return node(Expr::Kind::neg, parse_unary());
        return parse_power();
    }

    // '^' binds tighter than unary minus; a signed exponent is still allowed.
    ExprPtr parse_power()
    {
        auto lhs = parse_primary();
        while (accept('^')) {
            ExprPtr exponent = accept('-') ? node(Expr::Kind::neg, parse_primary()) : parse_primary();
            lhs = node(Expr::Kind::pow, lhs, exponent);
        }
        return lhs;
    }

    ExprPtr parse_primary()
    {
        skip();
        if (pos_ >= src_.size())
            throw parse_error("unexpected end of input", pos_);
        const std::size_t start = pos_;
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = parse_sum();
            if (!accept(')'))
                throw parse_error("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = src_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin)
                throw parse_error("malformed number", start);
            pos_ += static_cast<std::size_t>(end - begin);
            auto e = std::make_shared<Expr>();
            e->value = v;
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
            const std::string id = src_.substr(start, pos_ - start);
            if (id == "t")
                return node(Expr::Kind::time);
            if (id == "sin" || id == "cos" || id == "exp") {
                if (!accept('('))
                    throw parse_error("expected '(' after " + id, pos_);
                auto arg = parse_sum();
                if (!accept(')'))
                    throw parse_error("expected ')'", pos_);
                const auto k = id == "sin" ? Expr::Kind::sin : id == "cos" ? Expr::Kind::cos : Expr::Kind::exp;
                return node(k, arg);
            }
            if (id.size() > 1 && id[0] == 'y' && id.find_first_not_of("0123456789", 1) == std::string::npos &&
                id[1] != '0') {
                const long k = std::strtol(id.c_str() + 1, nullptr, 10);
                if (k > dim_)
                    throw parse_error("state index " + id + " exceeds dimension " + std::to_string(dim_), start);
                auto e = std::make_shared<Expr>();
                e->kind = Expr::Kind::state;
                e->index = static_cast<int>(k - 1);
                return e;
            }
            throw parse_error("unknown identifier '" + id + "'", start);
        }
        throw parse_error(std::string("unexpected '") + c + "'", start);
    }

    const std::string& src_;
    int dim_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Throws parse_error with the offending position.
inline ExprPtr parse_expression(const std::string& src, int dim)
{
    return detail::ExprParser(src, dim).parse();
}

/// Fully parenthesised rendering that reparses to the same tree.
inline std::string to_string(const Expr& e)
{
    using K = Expr::Kind;
    switch (e.kind) {
    case K::number:
        return format_double(e.value);
    case K::time:
        return "t";
    case K::state:
        return "y" + std::to_string(e.index + 1);
    case K::neg:
        return "(-" + to_string(*e.lhs) + ")";
    case K::sin:
        return "sin(" + to_string(*e.lhs) + ")";
    case K::cos:
        return "cos(" + to_string(*e.lhs) + ")";
    case K::exp:
        return "exp(" + to_string(*e.lhs) + ")";
    default:
        break;
    }
    const char* op = e.kind == K::add   ? " + "
                     : e.kind == K::sub ? " - "
                     : e.kind == K::mul ? " * "
                     : e.kind == K::div ? " / "
                                        : " ^ ";
    return "(" + to_string(*e.lhs) + op + to_string(*e.rhs) + ")";
}

/// Real evaluation; non-finite intermediate results are errors, not values.
inline double eval_expression(const Expr& e, double t, const RealVec& y)
{
    using K = Expr::Kind;
    auto checked = [](double v) {
        if (!std::isfinite(v))
            throw eval_error("non-finite result");
        return v;
    };
    switch (e.kind) {
    case K::number:
        return e.value;
    case K::time:
        return t;
    case K::state:
        if (e.index >= y.size())
            throw eval_error("state index out of range");
        return y[e.index];
    case K::neg:
        return -eval_expression(*e.lhs, t, y);
    case K::sin:
        return std::sin(eval_expression(*e.lhs, t, y));
    case K::cos:
        return std::cos(eval_expression(*e.lhs, t, y));
    case K::exp:
        return checked(std::exp(eval_expression(*e.lhs, t, y)));
    case K::add:
        return checked(eval_expression(*e.lhs, t, y) + eval_expression(*e.rhs, t, y));
    case K::sub:
        return checked(eval_expression(*e.lhs, t, y) - eval_expression(*e.rhs, t, y));
    case K::mul:
        return checked(eval_expression(*e.lhs, t, y) * eval_expression(*e.rhs, t, y));
    case K::div: {
        const double den = eval_expression(*e.rhs, t, y);
        if (den == 0.0)
            throw eval_error("division by zero");
        return checked(eval_expression(*e.lhs, t, y) / den);
    }
    case K::pow: {
        const double base = eval_expression(*e.lhs, t, y);
        const double ex = eval_expression(*e.rhs, t, y);
        if (ex != std::round(ex))
            throw eval_error("non-integer exponent");
        if (base == 0.0 && ex < 0.0)
            throw eval_error("division by zero");
        return checked(std::pow(base, ex));
    }
    }
    throw eval_error("corrupt expression node");
}

namespace detail {

// exponent vector (t, y1..yd) -> coefficient
using Poly = std::map<std::vector<int>, double>;

inline std::optional<double> constant_of(const Poly& p, std::size_t width)
{
    if (p.empty())
        return 0.0;
    if (p.size() == 1 && p.begin()->first == std::vector<int>(width, 0))
        return p.begin()->second;
    return std::nullopt;
}

inline Poly poly_mul(const Poly& a, const Poly& b)
{
    Poly out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            std::vector<int> e(ea.size());
            for (std::size_t k = 0; k < e.size(); ++k)
                e[k] = ea[k] + eb[k];
            out[e] += ca * cb;
        }
    return out;
}

inline std::optional<Poly> to_poly(const Expr& e, std::size_t width)
{
    using K = Expr::Kind;
    const std::vector<int> zero(width, 0);
    auto unary_const = [&](double (*fn)(double)) -> std::optional<Poly> {
        auto arg = to_poly(*e.lhs, width);
        if (!arg)
            return std::nullopt;
        auto c = constant_of(*arg, width);
        if (!c)
            return std::nullopt;
        return Poly{{zero, fn(*c)}};
    };
    switch (e.kind) {
    case K::number:
        return Poly{{zero, e.value}};
    case K::time: {
        auto ex = zero;
        ex[0] = 1;
        return Poly{{ex, 1.0}};
    }
    case K::state: {
        auto ex = zero;
        ex[static_cast<std::size_t>(e.index) + 1] = 1;
        return Poly{{ex, 1.0}};
    }
    case K::neg: {
        auto p = to_poly(*e.lhs, width);
        if (p)
            for (auto& [ex, c] : *p)
                c = -c;
        return p;
    }
    case K::sin:
        return unary_const([](double x) { return std::sin(x); });
    case K::cos:
        return unary_const([](double x) { return std::cos(x); });
    case K::exp:
        return unary_const([](double x) { return std::exp(x); });
    default:
        break;
    }
    auto a = to_poly(*e.lhs, width);
    auto b = to_poly(*e.rhs, width);
    if (!a || !b)
        return std::nullopt;
    switch (e.kind) {
    case K::add:
    case K::sub: {
        const double sign = e.kind == K::add ? 1.0 : -1.0;
        for (const auto& [ex, c] : *b)
            (*a)[ex] += sign * c;
        return a;
    }
    case K::mul:
        return poly_mul(*a, *b);
    case K::div: {
        auto c = constant_of(*b, width);
        if (!c || *c == 0.0)
            return std::nullopt;
        for (auto& [ex, v] : *a)
            v /= *c;
        return a;
    }
    case K::pow: {
        auto c = constant_of(*b, width);
        if (!c || *c < 0.0 || *c != std::round(*c) || *c > 64.0)
            return std::nullopt;
        Poly out{{zero, 1.0}};
        for (int i = 0; i < static_cast<int>(*c); ++i)
            out = poly_mul(out, *a);
        return out;
    }
    default:
        return std::nullopt;
    }
}

} // namespace detail

/// Polynomial form of the per-component expressions, or nullopt when any of
/// them is not a polynomial in (t, y) (transcendental functions of constants fold).
inline std::optional<PolyField<double>> to_poly_field(const std::vector<ExprPtr>& rhs)
{
    const std::size_t d = rhs.size();
    PolyField<double> field;
    for (const auto& e : rhs) {
        auto p = detail::to_poly(*e, d + 1);
        if (!p)
            return std::nullopt;
        std::vector<PolyField<double>::Monomial> comp;
        for (const auto& [ex, c] : *p) {
            if (c == 0.0)
                continue;
            comp.push_back({c, ex[0], std::vector<int>(ex.begin() + 1, ex.end())});
        }
        field.components.push_back(std::move(comp));
    }
    return field;
}

} // namespace picard
