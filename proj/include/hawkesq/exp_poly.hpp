#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace hawkesq {

// Exact calculus on functions of the form sum_k c_k t^{p_k} e^{r_k t}.
// Closed under linear combination and under solving y' = a y + f(t), y(0)=y0,
// which is all the per-phase moment ODEs of the Erlang and hyper-exponential
// queues require. Rates closer than kRateMergeTol are treated as equal, which
// reproduces the singular-case branches (t e^{rt} terms) automatically.
class ExpPoly {
 public:
  struct Term {
    double coef;
    int power;
    double rate;
  };

  static constexpr double kRateMergeTol = 1e-9;

  ExpPoly() = default;
  static ExpPoly constant(double c) {
    ExpPoly p;
    if (c != 0.0) p.terms_.push_back({c, 0, 0.0});
    return p;
  }
  static ExpPoly term(double coef, int power, double rate) {
    ExpPoly p;
    if (coef != 0.0) p.terms_.push_back({coef, power, rate});
    return p;
  }

  double operator()(double t) const {
    double v = 0;
    for (const auto& tm : terms_)
      v += tm.coef * std::pow(t, tm.power) * std::exp(tm.rate * t);
    return v;
  }

  ExpPoly& operator+=(const ExpPoly& o) {
    for (const auto& tm : o.terms_) add(tm.coef, tm.power, tm.rate);
    return *this;
  }
  friend ExpPoly operator+(ExpPoly a, const ExpPoly& b) { return a += b; }
  friend ExpPoly operator*(double s, const ExpPoly& p) {
    ExpPoly q;
    for (const auto& tm : p.terms_) q.terms_.push_back({s * tm.coef, tm.power, tm.rate});
    return q;
  }

  // Solution of y' = a y + (*this), y(0) = y0:
  //   y(t) = e^{at} y0 + integral_0^t e^{a(t-s)} f(s) ds
  ExpPoly solve_ivp(double a, double y0 = 0.0) const {
    ExpPoly y;
    if (y0 != 0.0) y.add(y0, 0, a);
    for (const auto& tm : terms_) {
      double d = tm.rate - a;
      if (std::abs(d) <= kRateMergeTol) {
        // resonant: integral of c s^k e^{as} against e^{a(t-s)}
        y.add(tm.coef / (tm.power + 1), tm.power + 1, a);
      } else {
        // recursive integration by parts:
        // I_k(t) = e^{at} int_0^t s^k e^{ds} ds
        //        = t^k e^{rt}/d - (k/d) I_{k-1}(t),  I_0 = (e^{rt}-e^{at})/d
        double c = tm.coef;
        int k = tm.power;
        double sign = 1.0;
        double fall = 1.0;  // k! / (k-j)!
        for (int j = 0; j <= k; ++j) {
          y.add(sign * c * fall / std::pow(d, j + 1), k - j, tm.rate);
          if (j < k) fall *= (k - j);
          sign = -sign;
        }
        // boundary term from I_0 at the bottom of the recursion
        y.add(sign * c * fall / std::pow(d, k + 1), 0, a);
      }
    }
    return y;
  }

  const std::vector<Term>& terms() const { return terms_; }

 private:
  void add(double coef, int power, double rate) {
    if (coef == 0.0) return;
    for (auto& tm : terms_) {
      if (tm.power == power && std::abs(tm.rate - rate) <= kRateMergeTol) {
        tm.coef += coef;
        return;
      }
    }
    terms_.push_back({coef, power, rate});
  }

  std::vector<Term> terms_;
};

}  // namespace hawkesq
