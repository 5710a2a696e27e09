#include "btcalc/expr.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace btcalc {

Expr Expr::constant(double v) {
    Expr e;
    e.kind = Const;
    e.value = v;
    return e;
}

Expr Expr::state(int i) {
    Expr e;
    e.kind = StateVar;
    e.index = i;
    return e;
}

Expr Expr::control(int i) {
    Expr e;
    e.kind = ControlVar;
    e.index = i;
    return e;
}

namespace {
Expr binary(Expr::Kind k, Expr a, Expr b) {
    Expr e;
    e.kind = k;
    e.args.push_back(std::move(a));
    e.args.push_back(std::move(b));
    return e;
}
} // namespace

Expr Expr::add(Expr a, Expr b) { return binary(Add, std::move(a), std::move(b)); }
Expr Expr::sub(Expr a, Expr b) { return binary(Sub, std::move(a), std::move(b)); }
Expr Expr::mul(Expr a, Expr b) { return binary(Mul, std::move(a), std::move(b)); }

Expr Expr::neg(Expr a) {
    Expr e;
    e.kind = Neg;
    e.args.push_back(std::move(a));
    return e;
}

Expr Expr::pow(Expr a, int k) {
    Expr e;
    e.kind = Pow;
    e.power = k;
    e.args.push_back(std::move(a));
    return e;
}

double eval_expr(const Expr& e, const std::vector<double>& x, const std::vector<double>& u) {
    switch (e.kind) {
    case Expr::Const:
        return e.value;
    case Expr::StateVar:
        return x.at(e.index);
    case Expr::ControlVar:
        return u.at(e.index);
    case Expr::Add:
        return eval_expr(e.args[0], x, u) + eval_expr(e.args[1], x, u);
    case Expr::Sub:
        return eval_expr(e.args[0], x, u) - eval_expr(e.args[1], x, u);
    case Expr::Mul:
        return eval_expr(e.args[0], x, u) * eval_expr(e.args[1], x, u);
    case Expr::Neg:
        return -eval_expr(e.args[0], x, u);
    case Expr::Pow:
        return std::pow(eval_expr(e.args[0], x, u), e.power);
    }
    return 0;
}

Expr diff_state(const Expr& e, int i) {
    switch (e.kind) {
    case Expr::Const:
    case Expr::ControlVar:
        return Expr::constant(0);
    case Expr::StateVar:
        return Expr::constant(e.index == i ? 1 : 0);
    case Expr::Add:
        return Expr::add(diff_state(e.args[0], i), diff_state(e.args[1], i));
    case Expr::Sub:
        return Expr::sub(diff_state(e.args[0], i), diff_state(e.args[1], i));
    case Expr::Mul:
        return Expr::add(Expr::mul(diff_state(e.args[0], i), e.args[1]),
                         Expr::mul(e.args[0], diff_state(e.args[1], i)));
    case Expr::Neg:
        return Expr::neg(diff_state(e.args[0], i));
    case Expr::Pow:
        if (e.power == 0)
            return Expr::constant(0);
        return Expr::mul(Expr::mul(Expr::constant(e.power), Expr::pow(e.args[0], e.power - 1)),
                         diff_state(e.args[0], i));
    }
    return Expr::constant(0);
}

bool uses_control(const Expr& e) {
    if (e.kind == Expr::ControlVar)
        return true;
    for (const auto& a : e.args)
        if (uses_control(a))
            return true;
    return false;
}

int max_state_index(const Expr& e) {
    int best = e.kind == Expr::StateVar ? e.index : -1;
    for (const auto& a : e.args)
        best = std::max(best, max_state_index(a));
    return best;
}

int max_control_index(const Expr& e) {
    int best = e.kind == Expr::ControlVar ? e.index : -1;
    for (const auto& a : e.args)
        best = std::max(best, max_control_index(a));
    return best;
}

std::string expr_to_string(const Expr& e) {
    std::ostringstream out;
    switch (e.kind) {
    case Expr::Const: {
        char buf[64];
        const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), e.value);
        (void)ec;
        out << std::string_view(buf, std::size_t(end - buf));
        break;
    }
    case Expr::StateVar:
        out << "x" << e.index + 1;
        break;
    case Expr::ControlVar:
        out << "u" << e.index + 1;
        break;
    case Expr::Add:
        out << "(" << expr_to_string(e.args[0]) << " + " << expr_to_string(e.args[1]) << ")";
        break;
    case Expr::Sub:
        out << "(" << expr_to_string(e.args[0]) << " - " << expr_to_string(e.args[1]) << ")";
        break;
    case Expr::Mul:
        out << "(" << expr_to_string(e.args[0]) << " * " << expr_to_string(e.args[1]) << ")";
        break;
    case Expr::Neg:
        out << "(-" << expr_to_string(e.args[0]) << ")";
        break;
    case Expr::Pow:
        out << expr_to_string(e.args[0]) << "^" << e.power;
        break;
    }
    return out.str();
}

} // namespace btcalc
