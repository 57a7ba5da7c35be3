#include "affine/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

#include "affine/errors.hpp"

namespace affine
{
namespace
{
enum class Op
{
    constant,
    var_z1,
    var_z2,
    add,
    sub,
    mul,
    div,
    pow,
    neg,
    exp,
    log,
    sqrt,
    abs,
    min,
    max,
};

struct Instr
{
    Op op;
    double value = 0;
};

// Recursive-descent parser emitting postfix code.
class Parser
{
  public:
    Parser(std::string const& text, int z_axis) : s_(text), z_axis_(z_axis)
    {
    }

    std::vector<Instr> run()
    {
        expr();
        skip_ws();
        if (pos_ != s_.size())
            fail("unexpected trailing input");
        return std::move(code_);
    }

  private:
    std::string const& s_;
    int z_axis_;
    std::size_t pos_ = 0;
    std::vector<Instr> code_;

    [[noreturn]] void fail(std::string const& msg) const
    {
        throw ExpressionError(msg + " at column " + std::to_string(pos_ + 1)
                              + " in '" + s_ + "'");
    }

    void skip_ws()
    {
        while (pos_ < s_.size()
               && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c)
        {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c))
            fail(std::string("expected '") + c + "'");
    }

    void emit(Op op, double v = 0) { code_.push_back({op, v}); }

    void expr()
    {
        term();
        for (;;)
        {
            if (accept('+'))
            {
                term();
                emit(Op::add);
            }
            else if (accept('-'))
            {
                term();
                emit(Op::sub);
            }
            else
                return;
        }
    }

    void term()
    {
        unary();
        for (;;)
        {
            if (accept('*'))
            {
                unary();
                emit(Op::mul);
            }
            else if (accept('/'))
            {
                unary();
                emit(Op::div);
            }
            else
                return;
        }
    }

    // Unary minus binds looser than '^' so that -z^2 == -(z^2).
    void unary()
    {
        if (accept('-'))
        {
            unary();
            emit(Op::neg);
            return;
        }
        accept('+');
        power();
    }

    void power()
    {
        primary();
        if (accept('^'))
        {
            unary();  // right associative
            emit(Op::pow);
        }
    }

    void primary()
    {
        skip_ws();
        if (pos_ >= s_.size())
            fail("unexpected end of input");
        char c = s_[pos_];
        if (accept('('))
        {
            expr();
            expect(')');
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
        {
            char const* begin = s_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin)
                fail("bad number");
            pos_ += static_cast<std::size_t>(end - begin);
            emit(Op::constant, v);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)))
        {
            std::size_t start = pos_;
            while (pos_ < s_.size()
                   && (std::isalnum(static_cast<unsigned char>(s_[pos_]))
                       || s_[pos_] == '_'))
                ++pos_;
            std::string name = s_.substr(start, pos_ - start);
            identifier(name);
            return;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    void identifier(std::string const& name)
    {
        if (name == "z1")
            return emit(Op::var_z1);
        if (name == "z2")
            return emit(Op::var_z2);
        if (name == "z")
        {
            if (z_axis_ < 0)
                fail("variable 'z' is only valid in 1-D factors");
            return emit(z_axis_ == 0 ? Op::var_z1 : Op::var_z2);
        }
        if (name == "pi")
            return emit(Op::constant, std::numbers::pi);
        if (name == "e")
            return emit(Op::constant, std::numbers::e);

        struct Fn
        {
            char const* name;
            Op op;
            int arity;
        };
        static constexpr Fn fns[] = {
            {"exp", Op::exp, 1},
            {"log", Op::log, 1},
            {"sqrt", Op::sqrt, 1},
            {"abs", Op::abs, 1},
            {"pow", Op::pow, 2},
            {"min", Op::min, 2},
            {"max", Op::max, 2},
        };
        for (auto const& fn : fns)
        {
            if (name != fn.name)
                continue;
            expect('(');
            expr();
            for (int i = 1; i < fn.arity; ++i)
            {
                expect(',');
                expr();
            }
            expect(')');
            return emit(fn.op);
        }
        fail("unknown identifier '" + name + "'");
    }
};

}  // namespace

struct Expression::Node
{
    std::vector<Instr> code;
    std::size_t max_depth = 0;
};

Expression Expression::parse(std::string const& text)
{
    return parse_1d(text, -1);
}

Expression Expression::parse_1d(std::string const& text, int axis)
{
    auto node = std::make_shared<Node>();
    node->code = Parser(text, axis).run();

    std::size_t depth = 0;
    for (auto const& ins : node->code)
    {
        switch (ins.op)
        {
            case Op::constant:
            case Op::var_z1:
            case Op::var_z2:
                ++depth;
                break;
            case Op::add:
            case Op::sub:
            case Op::mul:
            case Op::div:
            case Op::pow:
            case Op::min:
            case Op::max:
                --depth;
                break;
            default:
                break;
        }
        node->max_depth = std::max(node->max_depth, depth);
    }

    Expression result;
    result.root_ = std::move(node);
    result.text_ = text;
    return result;
}

double Expression::operator()(double z1, double z2) const
{
    if (!root_)
        return 0.0;
    constexpr std::size_t inline_depth = 32;
    double small[inline_depth] = {};
    std::vector<double> big;
    double* st = small;
    if (root_->max_depth > inline_depth)
    {
        big.resize(root_->max_depth);
        st = big.data();
    }

    std::size_t sp = 0;
    for (auto const& ins : root_->code)
    {
        switch (ins.op)
        {
            case Op::constant:
                st[sp++] = ins.value;
                break;
            case Op::var_z1:
                st[sp++] = z1;
                break;
            case Op::var_z2:
                st[sp++] = z2;
                break;
            case Op::add:
                --sp;
                st[sp - 1] += st[sp];
                break;
            case Op::sub:
                --sp;
                st[sp - 1] -= st[sp];
                break;
            case Op::mul:
                --sp;
                st[sp - 1] *= st[sp];
                break;
            case Op::div:
                --sp;
                st[sp - 1] /= st[sp];
                break;
            case Op::pow:
                --sp;
                st[sp - 1] = std::pow(st[sp - 1], st[sp]);
                break;
            case Op::min:
                --sp;
                st[sp - 1] = std::min(st[sp - 1], st[sp]);
                break;
            case Op::max:
                --sp;
                st[sp - 1] = std::max(st[sp - 1], st[sp]);
                break;
            case Op::neg:
                st[sp - 1] = -st[sp - 1];
                break;
            case Op::exp:
                st[sp - 1] = std::exp(st[sp - 1]);
                break;
            case Op::log:
                st[sp - 1] = std::log(st[sp - 1]);
                break;
            case Op::sqrt:
                st[sp - 1] = std::sqrt(st[sp - 1]);
                break;
            case Op::abs:
                st[sp - 1] = std::abs(st[sp - 1]);
                break;
        }
    }
    return st[0];
}

}  // namespace affine
