#pragma once

#include <string>
#include <vector>

namespace btcalc {

/// Arithmetic expressions over state symbols x1..xn and control symbols
/// u1..um: +, -, *, integer powers, constants. Small enough to differentiate
/// symbolically, which keeps barrier gradients exact.
struct Expr {
    enum Kind { Const, StateVar, ControlVar, Add, Sub, Mul, Neg, Pow };
    Kind kind = Const;
    double value = 0;   // Const
    int index = 0;      // StateVar/ControlVar, 0-based
    int power = 0;      // Pow
    std::vector<Expr> args;

    static Expr constant(double v);
    static Expr state(int i);
    static Expr control(int i);
    static Expr add(Expr a, Expr b);
    static Expr sub(Expr a, Expr b);
    static Expr mul(Expr a, Expr b);
    static Expr neg(Expr a);
    static Expr pow(Expr a, int k);
};

double eval_expr(const Expr& e, const std::vector<double>& x, const std::vector<double>& u);

/// d/dx_i, symbolic.
Expr diff_state(const Expr& e, int i);

bool uses_control(const Expr& e);
int max_state_index(const Expr& e);   // -1 when none
int max_control_index(const Expr& e); // -1 when none

std::string expr_to_string(const Expr& e);

} // namespace btcalc
