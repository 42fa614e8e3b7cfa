#ifndef CONEWALK_EXPR_HPP
#define CONEWALK_EXPR_HPP

#include "conewalk/types.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace conewalk {

struct ParseError : Error {
    ParseError(const std::string& message, std::size_t position)
        : Error(message + " at position " + std::to_string(position)), position(position) {}
    std::size_t position;
};

struct EvalError : Error {
    using Error::Error;
};

/// One node of a parsed expression tree (index-based, stored in a pool).
struct ExprNode {
    enum class Kind {
        number,
        variable,
        negate,
        add,
        sub,
        mul,
        div,
        call_min,
        call_max,
        call_exp,
        call_tanh,
    };
    Kind kind;
    double number = 0.0;  // kind == number
    int var = -1;         // kind == variable
    int lhs = -1;         // first child
    int rhs = -1;         // second child (binary ops, min, max)
};

/// Scalar expression over variables x0..x{k-1}.
///
/// Grammar: numeric literals (decimal and scientific), variables, unary minus,
/// + - * / with the usual precedence and left associativity, and the functions
/// min(a,b), max(a,b), exp(a), tanh(a). Evaluation is plain 64-bit floating
/// point with the operation order fixed by the tree.
class Expr {
public:
    static Expr parse(std::string_view text, int arity);

    double eval(const Vec& x) const;

    /// Canonical text form; parsing it back yields a structurally equal tree.
    std::string str() const;

    int arity() const { return arity_; }
    const std::vector<ExprNode>& nodes() const { return nodes_; }
    int root() const { return root_; }

    bool structurally_equal(const Expr& other) const;

private:
    std::vector<ExprNode> nodes_;
    int root_ = -1;
    int arity_ = 0;

    friend class ExprParser;
};

}  // namespace conewalk

#endif
