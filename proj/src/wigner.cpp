#include "diamond/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace diamond {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

constexpr int kMaxFactorial = 400;

const cpp_int& factorial(int n) {
  static const std::vector<cpp_int> table = [] {
    std::vector<cpp_int> t{1};
    for (int k = 1; k <= kMaxFactorial; ++k) t.push_back(t.back() * k);
    return t;
  }();
  if (n < 0 || n > kMaxFactorial) throw std::out_of_range("angular momentum too large");
  return table[static_cast<std::size_t>(n)];
}

bool triangle(int ta, int tb, int tc) {
  return ta >= 0 && tb >= 0 && tc >= 0 && (ta + tb + tc) % 2 == 0 && tc <= ta + tb &&
         tc >= std::abs(ta - tb);
}

// Delta(abc)^2 = (a+b-c)! (a-b+c)! (-a+b+c)! / (a+b+c+1)!
cpp_rational triangle_coefficient(int ta, int tb, int tc) {
  return cpp_rational(factorial((ta + tb - tc) / 2) * factorial((ta - tb + tc) / 2) *
                          factorial((-ta + tb + tc) / 2),
                      factorial((ta + tb + tc) / 2 + 1));
}

// sign * sqrt(square)
double signed_sqrt(int sign, const cpp_rational& square, const cpp_rational& sum) {
  if (sum == 0) return 0.0;
  const cpp_rational value_sq = square * sum * sum;
  const double mag = std::sqrt(static_cast<double>(value_sq));
  return (sum < 0 ? -sign : sign) * mag;
}

bool is_half_integer(double x, int& twice) {
  const double t = 2.0 * x;
  const double r = std::round(t);
  if (std::abs(t - r) > 1e-9) return false;
  twice = static_cast<int>(r);
  return true;
}

}  // namespace

bool wigner3j_allowed(int tj1, int tj2, int tj3, int tm1, int tm2, int tm3) {
  if (!triangle(tj1, tj2, tj3)) return false;
  if (tm1 + tm2 + tm3 != 0) return false;
  const int tj[] = {tj1, tj2, tj3}, tm[] = {tm1, tm2, tm3};
  for (int i = 0; i < 3; ++i)
    if (std::abs(tm[i]) > tj[i] || (tj[i] + tm[i]) % 2 != 0) return false;
  return true;
}

bool wigner6j_allowed(int tj1, int tj2, int tj3, int tj4, int tj5, int tj6) {
  return triangle(tj1, tj2, tj3) && triangle(tj1, tj5, tj6) && triangle(tj4, tj2, tj6) &&
         triangle(tj4, tj5, tj3);
}

double wigner3j_2(int tj1, int tj2, int tj3, int tm1, int tm2, int tm3) {
  if (!wigner3j_allowed(tj1, tj2, tj3, tm1, tm2, tm3)) return 0.0;
  // Integer arguments of the Racah sum (all quantities below are exact).
  const int j1pm1 = (tj1 + tm1) / 2, j1mm1 = (tj1 - tm1) / 2;
  const int j2pm2 = (tj2 + tm2) / 2, j2mm2 = (tj2 - tm2) / 2;
  const int j3pm3 = (tj3 + tm3) / 2, j3mm3 = (tj3 - tm3) / 2;
  const int a = (tj3 - tj2 + tm1) / 2;  // j3 - j2 + m1
  const int b = (tj3 - tj1 - tm2) / 2;  // j3 - j1 - m2
  const int c = (tj1 + tj2 - tj3) / 2;  // j1 + j2 - j3
  const int k_min = std::max({0, -a, -b});
  const int k_max = std::min({c, j1mm1, j2pm2});

  cpp_rational sum = 0;
  for (int k = k_min; k <= k_max; ++k) {
    const cpp_int den = factorial(k) * factorial(a + k) * factorial(b + k) * factorial(c - k) *
                        factorial(j1mm1 - k) * factorial(j2pm2 - k);
    sum += cpp_rational((k % 2 == 0) ? 1 : -1, den);
  }
  const cpp_rational square =
      triangle_coefficient(tj1, tj2, tj3) *
      cpp_rational(factorial(j1pm1) * factorial(j1mm1) * factorial(j2pm2) * factorial(j2mm2) *
                   factorial(j3pm3) * factorial(j3mm3));
  const int phase = (tj1 - tj2 - tm3) / 2;
  return signed_sqrt(phase % 2 == 0 ? 1 : -1, square, sum);
}

double wigner6j_2(int tj1, int tj2, int tj3, int tj4, int tj5, int tj6) {
  if (!wigner6j_allowed(tj1, tj2, tj3, tj4, tj5, tj6)) return 0.0;
  const int a1 = (tj1 + tj2 + tj3) / 2, a2 = (tj1 + tj5 + tj6) / 2;
  const int a3 = (tj4 + tj2 + tj6) / 2, a4 = (tj4 + tj5 + tj3) / 2;
  const int b1 = (tj1 + tj2 + tj4 + tj5) / 2, b2 = (tj2 + tj3 + tj5 + tj6) / 2;
  const int b3 = (tj3 + tj1 + tj6 + tj4) / 2;
  const int t_min = std::max({a1, a2, a3, a4});
  const int t_max = std::min({b1, b2, b3});

  cpp_rational sum = 0;
  for (int t = t_min; t <= t_max; ++t) {
    const cpp_int den = factorial(t - a1) * factorial(t - a2) * factorial(t - a3) *
                        factorial(t - a4) * factorial(b1 - t) * factorial(b2 - t) *
                        factorial(b3 - t);
    sum += cpp_rational((t % 2 == 0) ? factorial(t + 1) : cpp_int(-factorial(t + 1)), den);
  }
  const cpp_rational square = triangle_coefficient(tj1, tj2, tj3) *
                              triangle_coefficient(tj1, tj5, tj6) *
                              triangle_coefficient(tj4, tj2, tj6) *
                              triangle_coefficient(tj4, tj5, tj3);
  return signed_sqrt(1, square, sum);
}

double wigner3j(double j1, double j2, double j3, double m1, double m2, double m3) {
  int t[6];
  const double v[] = {j1, j2, j3, m1, m2, m3};
  for (int i = 0; i < 6; ++i)
    if (!is_half_integer(v[i], t[i])) return 0.0;
  return wigner3j_2(t[0], t[1], t[2], t[3], t[4], t[5]);
}

double wigner6j(double j1, double j2, double j3, double j4, double j5, double j6) {
  int t[6];
  const double v[] = {j1, j2, j3, j4, j5, j6};
  for (int i = 0; i < 6; ++i)
    if (!is_half_integer(v[i], t[i])) return 0.0;
  return wigner6j_2(t[0], t[1], t[2], t[3], t[4], t[5]);
}

}  // namespace diamond
