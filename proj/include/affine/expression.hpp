#pragma once

#include <memory>
#include <string>

namespace affine
{
//---------------------------------------------------------------------------//
/*!
 * Compiled arithmetic expression in the variables z1 and z2.
 *
 * Grammar: numbers, the variables \c z1, \c z2 and \c z (an alias for
 * whichever coordinate a 1-D factor lives on), the constants \c pi and \c e,
 * binary + - * / ^, unary minus, parentheses, and the functions exp, log,
 * sqrt, abs, pow(a, b), min(a, b), max(a, b).
 *
 * Values are immutable and cheap to copy (the syntax tree is shared).
 */
class Expression
{
  public:
    struct Node;

    //! Parse; throws ExpressionError with a column on malformed input.
    static Expression parse(std::string const& text);

    //! Parse an expression in a single variable \c z that is mapped onto
    //! \c z1 (axis 0) or \c z2 (axis 1).
    static Expression parse_1d(std::string const& text, int axis);

    double operator()(double z1, double z2) const;

    std::string const& text() const { return text_; }

  private:
    std::shared_ptr<Node const> root_;
    std::string text_;
};

}  // namespace affine
