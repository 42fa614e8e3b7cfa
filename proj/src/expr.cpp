#include "conewalk/expr.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <functional>

namespace conewalk {

namespace {

using Kind = ExprNode::Kind;

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

class ExprParser {
public:
    ExprParser(std::string_view text, int arity, Expr& out)
        : text_(text), arity_(arity), out_(out) {}

    void run() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
        out_.arity_ = arity_;
        out_.root_ = parse_sum();
        skip_ws();
        if (pos_ < text_.size()) throw ParseError("unexpected trailing input", pos_);
    }

private:
    std::string_view text_;
    int arity_;
    Expr& out_;
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

    void expect(char c) {
        if (!eat(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    int add_node(ExprNode node) {
        out_.nodes_.push_back(node);
        return static_cast<int>(out_.nodes_.size()) - 1;
    }

    int parse_sum() {
        int lhs = parse_term();
        for (;;) {
            skip_ws();
            if (eat('+')) {
                const int rhs = parse_term();
                lhs = add_node({Kind::add, 0.0, -1, lhs, rhs});
            } else if (eat('-')) {
                const int rhs = parse_term();
                lhs = add_node({Kind::sub, 0.0, -1, lhs, rhs});
            } else {
                return lhs;
            }
        }
    }

    int parse_term() {
        int lhs = parse_factor();
        for (;;) {
            skip_ws();
            if (eat('*')) {
                const int rhs = parse_factor();
                lhs = add_node({Kind::mul, 0.0, -1, lhs, rhs});
            } else if (eat('/')) {
                const int rhs = parse_factor();
                lhs = add_node({Kind::div, 0.0, -1, lhs, rhs});
            } else {
                return lhs;
            }
        }
    }

    int parse_factor() {
        skip_ws();
        if (eat('-')) {
            const int inner = parse_factor();
            return add_node({Kind::negate, 0.0, -1, inner, -1});
        }
        return parse_primary();
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = parse_sum();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number();
        }
        if (is_ident_start(c)) {
            return parse_identifier();
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    int parse_number() {
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        double value = 0.0;
        auto res = std::from_chars(begin, end, value);
        if (res.ec != std::errc()) throw ParseError("malformed number", pos_);
        pos_ = static_cast<std::size_t>(res.ptr - text_.data());
        return add_node({Kind::number, value, -1, -1, -1});
    }

    int parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        if (name.size() >= 2 && name[0] == 'x') {
            int index = 0;
            auto res = std::from_chars(name.data() + 1, name.data() + name.size(), index);
            if (res.ec == std::errc() && res.ptr == name.data() + name.size()) {
                if (index < 0 || index >= arity_) {
                    throw ParseError("variable x" + std::to_string(index) +
                                         " out of range for dimension " + std::to_string(arity_),
                                     start);
                }
                return add_node({Kind::variable, 0.0, index, -1, -1});
            }
        }
        if (name == "min" || name == "max") {
            expect('(');
            const int a = parse_sum();
            expect(',');
            const int b = parse_sum();
            expect(')');
            return add_node({name == "min" ? Kind::call_min : Kind::call_max, 0.0, -1, a, b});
        }
        if (name == "exp" || name == "tanh") {
            expect('(');
            const int a = parse_sum();
            expect(')');
            return add_node({name == "exp" ? Kind::call_exp : Kind::call_tanh, 0.0, -1, a, -1});
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }
};

Expr Expr::parse(std::string_view text, int arity) {
    Expr e;
    ExprParser parser(text, arity, e);
    parser.run();
    return e;
}

double Expr::eval(const Vec& x) const {
    if (x.size() != arity_) throw EvalError("expression arity mismatch");
    std::function<double(int)> ev = [&](int id) -> double {
        const ExprNode& n = nodes_[static_cast<std::size_t>(id)];
        switch (n.kind) {
            case Kind::number: return n.number;
            case Kind::variable: return x[n.var];
            case Kind::negate: return -ev(n.lhs);
            case Kind::add: return ev(n.lhs) + ev(n.rhs);
            case Kind::sub: return ev(n.lhs) - ev(n.rhs);
            case Kind::mul: return ev(n.lhs) * ev(n.rhs);
            case Kind::div: {
                const double num = ev(n.lhs);
                const double den = ev(n.rhs);
                if (den == 0.0) throw EvalError("division by zero");
                return num / den;
            }
            case Kind::call_min: return std::fmin(ev(n.lhs), ev(n.rhs));
            case Kind::call_max: return std::fmax(ev(n.lhs), ev(n.rhs));
            case Kind::call_exp: return std::exp(ev(n.lhs));
            case Kind::call_tanh: return std::tanh(ev(n.lhs));
        }
        throw EvalError("corrupt expression node");
    };
    return ev(root_);
}

namespace {

int precedence(Kind kind) {
    switch (kind) {
        case Kind::add:
        case Kind::sub: return 1;
        case Kind::mul:
        case Kind::div: return 2;
        case Kind::negate: return 3;
        default: return 4;
    }
}

}  // namespace

std::string Expr::str() const {
    std::function<std::string(int, int, bool)> pr = [&](int id, int parent_prec,
                                                        bool right_side) -> std::string {
        const ExprNode& n = nodes_[static_cast<std::size_t>(id)];
        const int prec = precedence(n.kind);
        std::string body;
        switch (n.kind) {
            case Kind::number: body = format_double(n.number); break;
            case Kind::variable: body = "x" + std::to_string(n.var); break;
            case Kind::negate: body = "-" + pr(n.lhs, prec, false); break;
            case Kind::add: body = pr(n.lhs, prec, false) + " + " + pr(n.rhs, prec, true); break;
            case Kind::sub: body = pr(n.lhs, prec, false) + " - " + pr(n.rhs, prec, true); break;
            case Kind::mul: body = pr(n.lhs, prec, false) + "*" + pr(n.rhs, prec, true); break;
            case Kind::div: body = pr(n.lhs, prec, false) + "/" + pr(n.rhs, prec, true); break;
            case Kind::call_min: body = "min(" + pr(n.lhs, 0, false) + ", " + pr(n.rhs, 0, false) + ")"; break;
            case Kind::call_max: body = "max(" + pr(n.lhs, 0, false) + ", " + pr(n.rhs, 0, false) + ")"; break;
            case Kind::call_exp: body = "exp(" + pr(n.lhs, 0, false) + ")"; break;
            case Kind::call_tanh: body = "tanh(" + pr(n.lhs, 0, false) + ")"; break;
        }
        const bool binary = n.kind == Kind::add || n.kind == Kind::sub || n.kind == Kind::mul ||
                            n.kind == Kind::div;
        bool need_parens = false;
        if (binary) {
            need_parens = prec < parent_prec || (prec == parent_prec && right_side);
        } else if (n.kind == Kind::negate) {
            need_parens = parent_prec > 2;  // keep -x unambiguous inside products
        }
        if (need_parens) return "(" + body + ")";
        return body;
    };
    return pr(root_, 0, false);
}

bool Expr::structurally_equal(const Expr& other) const {
    if (arity_ != other.arity_) return false;
    std::function<bool(int, int)> eq = [&](int a, int b) -> bool {
        const ExprNode& na = nodes_[static_cast<std::size_t>(a)];
        const ExprNode& nb = other.nodes_[static_cast<std::size_t>(b)];
        if (na.kind != nb.kind) return false;
        switch (na.kind) {
            case Kind::number:
                return na.number == nb.number ||
                       (std::isnan(na.number) && std::isnan(nb.number));
            case Kind::variable: return na.var == nb.var;
            case Kind::negate:
            case Kind::call_exp:
            case Kind::call_tanh: return eq(na.lhs, nb.lhs);
            default: return eq(na.lhs, nb.lhs) && eq(na.rhs, nb.rhs);
        }
    };
    return eq(root_, other.root_);
}

}  // namespace conewalk
