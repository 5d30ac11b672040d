#pragma once

/**
 * @file expr.hpp
 * @brief Infix formula language used by spec files.
 *
 *   expr   := term (("+" | "-") term)*
 *   term   := signed (("*" | "/") signed)*
 *   signed := "-" signed | factor
 *   factor := atom ("^" uint)?
 *   atom   := number | var | func "(" expr ")" | "(" expr ")"
 *
 * Variables are x1..xm (base) and u1..uk (fibre). Unary minus applies to a
 * whole factor, so "-x1^2" is -(x1^2). Functions: sin cos exp log sqrt tanh.
 */

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "abk/numerics.hpp"

namespace abk::frontend {

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t offset)
        : Error(message + " (at offset " + std::to_string(offset) + ")"), message_(message), offset_(offset) {}

    const std::string& message() const noexcept { return message_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::string message_;
    std::size_t offset_;
};

enum class Func { Sin, Cos, Exp, Log, Sqrt, Tanh };

struct Expr {
    enum class Kind { Number, BaseVar, FibreVar, Add, Sub, Mul, Div, Pow, Neg, Call };

    Kind kind = Kind::Number;
    double number = 0.0;   // Number
    int index = 0;         // zero-based variable index, or the exponent of Pow
    Func func = Func::Sin; // Call
    std::vector<Expr> args;

    friend bool operator==(const Expr&, const Expr&) = default;
};

namespace detail {

struct FuncName {
    std::string_view name;
    Func func;
};

inline constexpr FuncName func_names[] = {{"sin", Func::Sin},   {"cos", Func::Cos},   {"exp", Func::Exp},
                                          {"log", Func::Log},   {"sqrt", Func::Sqrt}, {"tanh", Func::Tanh}};

inline std::string_view func_name(Func f) {
    for (const auto& fn : func_names)
        if (fn.func == f) return fn.name;
    return "?";
}

class Parser {
public:
    Parser(std::string_view src, Index base_dim, Index fibre_dim, bool allow_fibre)
        : src_(src), m_(base_dim), k_(fibre_dim), allow_fibre_(allow_fibre) {}

    Expr parse() {
        skip_ws();
        if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
        Expr e = expr();
        skip_ws();
        if (pos_ != src_.size()) throw ParseError("unexpected trailing input '" + std::string(1, src_[pos_]) + "'", pos_);
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static Expr binary(Expr::Kind kind, Expr lhs, Expr rhs) {
        Expr e;
        e.kind = kind;
        e.args.push_back(std::move(lhs));
        e.args.push_back(std::move(rhs));
        return e;
    }

    Expr expr() {
        Expr lhs = term();
        while (true) {
            if (accept('+')) lhs = binary(Expr::Kind::Add, std::move(lhs), term());
            else if (accept('-')) lhs = binary(Expr::Kind::Sub, std::move(lhs), term());
            else return lhs;
        }
    }

    Expr term() {
        Expr lhs = signed_factor();
        while (true) {
            if (accept('*')) lhs = binary(Expr::Kind::Mul, std::move(lhs), signed_factor());
            else if (accept('/')) lhs = binary(Expr::Kind::Div, std::move(lhs), signed_factor());
            else return lhs;
        }
    }

    Expr signed_factor() {
        if (accept('-')) {
            Expr e;
            e.kind = Expr::Kind::Neg;
            e.args.push_back(signed_factor());
            return e;
        }
        return factor();
    }

    Expr factor() {
        Expr base = atom();
        if (!accept('^')) return base;
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (start == pos_) throw ParseError("expected unsigned integer exponent after '^'", start);
        if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E'))
            throw ParseError("exponent must be an unsigned integer", start);
        if (pos_ - start > 6) throw ParseError("exponent too large", start);
        Expr e;
        e.kind = Expr::Kind::Pow;
        e.index = std::stoi(std::string(src_.substr(start, pos_ - start)));
        e.args.push_back(std::move(base));
        return e;
    }

    Expr atom() {
        skip_ws();
        if (pos_ == src_.size()) throw ParseError("unexpected end of expression", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    Expr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            const std::size_t d = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            return pos_ - d;
        };
        std::size_t count = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            count += digits();
        }
        if (count == 0) throw ParseError("malformed number", start);
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            const std::size_t mark = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (digits() == 0) throw ParseError("malformed exponent in number", mark);
        }
        const std::string text(src_.substr(start, pos_ - start));
        Expr e;
        e.kind = Expr::Kind::Number;
        e.number = std::strtod(text.c_str(), nullptr);
        if (!std::isfinite(e.number)) throw ParseError("number out of range", start);
        return e;
    }

    Expr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);

        for (const auto& fn : func_names) {
            if (fn.name != name) continue;
            if (!accept('(')) throw ParseError("function " + std::string(name) + " must be called with '('", pos_);
            Expr e;
            e.kind = Expr::Kind::Call;
            e.func = fn.func;
            skip_ws();
            if (pos_ < src_.size() && src_[pos_] == ')')
                throw ParseError("function " + std::string(name) + " takes exactly 1 argument", pos_);
            e.args.push_back(expr());
            skip_ws();
            if (pos_ < src_.size() && src_[pos_] == ',')
                throw ParseError("function " + std::string(name) + " takes exactly 1 argument", pos_);
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return e;
        }

        if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'u')) {
            bool numeric = true;
            for (char d : name.substr(1)) numeric = numeric && std::isdigit(static_cast<unsigned char>(d));
            if (numeric && name[1] != '0' && name.size() < 9) {
                const int idx = std::stoi(std::string(name.substr(1)));
                const bool fibre = name[0] == 'u';
                if (fibre && !allow_fibre_) throw ParseError("fibre variable " + std::string(name) + " not allowed here", start);
                const Index bound = fibre ? k_ : m_;
                if (idx > bound)
                    throw ParseError("variable " + std::string(name) + " out of range (" + (fibre ? "fibre" : "base") +
                                         " dimension " + std::to_string(bound) + ")",
                                     start);
                Expr e;
                e.kind = fibre ? Expr::Kind::FibreVar : Expr::Kind::BaseVar;
                e.index = idx - 1;
                return e;
            }
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Index m_, k_;
    bool allow_fibre_;
};

} // namespace detail

inline Expr parse_expression(std::string_view src, Index base_dim, Index fibre_dim, bool allow_fibre) {
    return detail::Parser(src, base_dim, fibre_dim, allow_fibre).parse();
}

inline double evaluate(const Expr& e, const Vector& x, const Vector& u) {
    switch (e.kind) {
    case Expr::Kind::Number: return e.number;
    case Expr::Kind::BaseVar: return x[e.index];
    case Expr::Kind::FibreVar: return u[e.index];
    case Expr::Kind::Add: return evaluate(e.args[0], x, u) + evaluate(e.args[1], x, u);
    case Expr::Kind::Sub: return evaluate(e.args[0], x, u) - evaluate(e.args[1], x, u);
    case Expr::Kind::Mul: return evaluate(e.args[0], x, u) * evaluate(e.args[1], x, u);
    case Expr::Kind::Div: return evaluate(e.args[0], x, u) / evaluate(e.args[1], x, u);
    case Expr::Kind::Neg: return -evaluate(e.args[0], x, u);
    case Expr::Kind::Pow: {
        const double b = evaluate(e.args[0], x, u);
        double r = 1.0;
        for (int i = 0; i < e.index; ++i) r *= b;
        return r;
    }
    case Expr::Kind::Call: {
        const double a = evaluate(e.args[0], x, u);
        switch (e.func) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Exp: return std::exp(a);
        case Func::Log: return std::log(a);
        case Func::Sqrt: return std::sqrt(a);
        case Func::Tanh: return std::tanh(a);
        }
    }
    }
    return 0.0;
}

/// Canonical text form; parse_expression(to_string(e)) == e.
inline std::string to_string(const Expr& e) {
    auto atomic = [](const Expr& a) {
        const std::string s = to_string(a);
        return (a.kind == Expr::Kind::Neg || a.kind == Expr::Kind::Pow) ? "(" + s + ")" : s;
    };
    switch (e.kind) {
    case Expr::Kind::Number: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", e.number);
        return buf;
    }
    case Expr::Kind::BaseVar: return "x" + std::to_string(e.index + 1);
    case Expr::Kind::FibreVar: return "u" + std::to_string(e.index + 1);
    case Expr::Kind::Add: return "(" + to_string(e.args[0]) + " + " + to_string(e.args[1]) + ")";
    case Expr::Kind::Sub: return "(" + to_string(e.args[0]) + " - " + to_string(e.args[1]) + ")";
    case Expr::Kind::Mul: return "(" + to_string(e.args[0]) + " * " + to_string(e.args[1]) + ")";
    case Expr::Kind::Div: return "(" + to_string(e.args[0]) + " / " + to_string(e.args[1]) + ")";
    case Expr::Kind::Neg: return "-" + to_string(e.args[0]);
    case Expr::Kind::Pow: return atomic(e.args[0]) + "^" + std::to_string(e.index);
    case Expr::Kind::Call: return std::string(detail::func_name(e.func)) + "(" + to_string(e.args[0]) + ")";
    }
    return {};
}

/// A list of scalar expressions as a map R^m -> R^n (base variables only).
inline SmoothMap compile_base_map(std::vector<Expr> exprs, Index base_dim) {
    const Index n = static_cast<Index>(exprs.size());
    return SmoothMap(base_dim, n, [exprs = std::move(exprs), n](const Vector& x) {
        const Vector none;
        Vector y(n);
        for (Index i = 0; i < n; ++i) y[i] = evaluate(exprs[static_cast<std::size_t>(i)], x, none);
        return y;
    });
}

/// A list of scalar expressions in (x, u) as a map R^{m+k} -> R^n.
inline SmoothMap compile_total_map(std::vector<Expr> exprs, Index base_dim, Index fibre_dim) {
    const Index n = static_cast<Index>(exprs.size());
    return SmoothMap(base_dim + fibre_dim, n, [exprs = std::move(exprs), n, base_dim, fibre_dim](const Vector& xu) {
        const Vector x = xu.head(base_dim), u = xu.tail(fibre_dim);
        Vector y(n);
        for (Index i = 0; i < n; ++i) y[i] = evaluate(exprs[static_cast<std::size_t>(i)], x, u);
        return y;
    });
}

/// A row-major grid of expressions as a matrix-valued function of x.
inline MatrixFunction compile_matrix(std::vector<std::vector<Expr>> rows, Index cols) {
    return [rows = std::move(rows), cols](const Vector& x) -> Matrix {
        const Vector none;
        Matrix out(static_cast<Index>(rows.size()), cols);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (Index c = 0; c < cols; ++c) out(static_cast<Index>(r), c) = evaluate(rows[r][static_cast<std::size_t>(c)], x, none);
        return out;
    };
}

} // namespace abk::frontend
