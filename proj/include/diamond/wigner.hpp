#pragma once

// Wigner 3j and 6j symbols. The primary entry points take twice the angular
// momenta (integers), so half-integer arguments are exact. Sums are carried
// out in exact rational arithmetic; only the final square root is rounded.
//
// Symbols violating a selection rule (triangle conditions, m1 + m2 + m3 != 0,
// |m| > j, or j + m not integral) are zero; `wigner3j_allowed` and
// `wigner6j_allowed` report which case applies.
namespace diamond {

bool wigner3j_allowed(int tj1, int tj2, int tj3, int tm1, int tm2, int tm3);
bool wigner6j_allowed(int tj1, int tj2, int tj3, int tj4, int tj5, int tj6);

double wigner3j_2(int tj1, int tj2, int tj3, int tm1, int tm2, int tm3);
double wigner6j_2(int tj1, int tj2, int tj3, int tj4, int tj5, int tj6);

// Convenience overloads in ordinary units. Arguments that are not integer or
// half-integer give 0.
double wigner3j(double j1, double j2, double j3, double m1, double m2, double m3);
double wigner6j(double j1, double j2, double j3, double j4, double j5, double j6);

}  // namespace diamond
