#pragma once

#include <cmath>
#include <vector>

#include "affexpr.hpp"
#include "common.hpp"

namespace delsos {

// One bounded interval variable. Delay channels always use [-tau_i, 0].
struct Interval {
  double lo = -1.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double s, double tol = 1e-12) const {
    const double slack = tol * std::max({1.0, std::abs(lo), std::abs(hi)});
    return s >= lo - slack && s <= hi + slack;
  }
  bool same_as(const Interval& o, double tol = 1e-12) const {
    return std::abs(lo - o.lo) <= tol && std::abs(hi - o.hi) <= tol;
  }
};

// integral of s^k over the interval
inline double mono_integral(const Interval& iv, int k) {
  return (std::pow(iv.hi, k + 1) - std::pow(iv.lo, k + 1)) / (k + 1);
}

// {1, s, ..., s^d}
struct MonomialBasis {
  int degree = 0;
  Interval iv;

  int size() const { return degree + 1; }
  Vec eval(double s) const {
    Vec v(degree + 1);
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      v(k) = p;
      p *= s;
    }
    return v;
  }
};

// Matrix-valued polynomial in one interval variable, dense monomial
// coefficients coef[k] of s^k.
template <class S>
struct PolyMat1T {
  using M = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  int rows = 0, cols = 0;
  Interval iv;
  std::vector<M> coef;

  PolyMat1T() = default;
  PolyMat1T(int r, int c, Interval i, int degree) : rows(r), cols(c), iv(i) {
    coef.assign(degree + 1, M::Zero(r, c));
  }
  static PolyMat1T constant(const M& m, Interval i) {
    PolyMat1T p(static_cast<int>(m.rows()), static_cast<int>(m.cols()), i, 0);
    p.coef[0] = m;
    return p;
  }

  int degree() const { return static_cast<int>(coef.size()) - 1; }

  M eval(double s) const {
    if (!iv.contains(s)) throw DomainError("polynomial evaluated outside its interval");
    M acc = coef[degree()];
    for (int k = degree() - 1; k >= 0; --k) acc = (acc * s + coef[k]).eval();
    return acc;
  }

  PolyMat1T derivative() const {
    PolyMat1T d(rows, cols, iv, std::max(degree() - 1, 0));
    for (int k = 1; k <= degree(); ++k) d.coef[k - 1] = coef[k] * double(k);
    return d;
  }

  // definite integral over the interval
  M integral() const {
    M acc = M::Zero(rows, cols);
    for (int k = 0; k <= degree(); ++k) acc += coef[k] * mono_integral(iv, k);
    return acc;
  }

  PolyMat1T transposed() const {
    PolyMat1T t(cols, rows, iv, degree());
    for (int k = 0; k <= degree(); ++k) t.coef[k] = coef[k].transpose();
    return t;
  }

  PolyMat1T& operator+=(const PolyMat1T& o) {
    require(rows == o.rows && cols == o.cols && iv.same_as(o.iv), "polymat1 shape/interval mismatch");
    if (o.degree() > degree()) coef.resize(o.degree() + 1, M::Zero(rows, cols));
    for (int k = 0; k <= o.degree(); ++k) coef[k] += o.coef[k];
    return *this;
  }
  PolyMat1T& operator-=(const PolyMat1T& o) {
    require(rows == o.rows && cols == o.cols && iv.same_as(o.iv), "polymat1 shape/interval mismatch");
    if (o.degree() > degree()) coef.resize(o.degree() + 1, M::Zero(rows, cols));
    for (int k = 0; k <= o.degree(); ++k) coef[k] -= o.coef[k];
    return *this;
  }
  PolyMat1T operator-() const {
    PolyMat1T r = *this;
    for (auto& m : r.coef) m = -m;
    return r;
  }
  PolyMat1T& operator*=(double a) {
    for (auto& m : coef) m *= a;
    return *this;
  }
};

template <class S>
PolyMat1T<S> operator+(PolyMat1T<S> a, const PolyMat1T<S>& b) { return a += b; }
template <class S>
PolyMat1T<S> operator-(PolyMat1T<S> a, const PolyMat1T<S>& b) { return a -= b; }
template <class S>
PolyMat1T<S> operator*(PolyMat1T<S> a, double s) { return a *= s; }
template <class S>
PolyMat1T<S> operator*(double s, PolyMat1T<S> a) { return a *= s; }

// scalar-generic matrix products kept off Eigen's kernel paths so that the
// affine-expression instantiation compiles
inline Mat scalar_mul(const Mat& a, const Mat& b) { return a * b; }
template <class S>
  requires(!std::is_same_v<S, double>)
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> scalar_mul(
    const Mat& a, const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& b) {
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      S acc{};
      for (Eigen::Index k = 0; k < a.cols(); ++k)
        if (a(i, k) != 0.0) acc += b(k, j) * a(i, k);
      out(i, j) = std::move(acc);
    }
  return out;
}
template <class S>
  requires(!std::is_same_v<S, double>)
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> scalar_mul(
    const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& a, const Mat& b) {
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      S acc{};
      for (Eigen::Index k = 0; k < a.cols(); ++k)
        if (b(k, j) != 0.0) acc += a(i, k) * b(k, j);
      out(i, j) = std::move(acc);
    }
  return out;
}

// constant matrix times polynomial, and polynomial times constant matrix
template <class S>
PolyMat1T<S> lmul(const Mat& a, const PolyMat1T<S>& p) {
  require(static_cast<int>(a.cols()) == p.rows, "lmul shape mismatch");
  PolyMat1T<S> r(static_cast<int>(a.rows()), p.cols, p.iv, p.degree());
  for (int k = 0; k <= p.degree(); ++k) r.coef[k] = scalar_mul(a, p.coef[k]);
  return r;
}
template <class S>
PolyMat1T<S> rmul(const PolyMat1T<S>& p, const Mat& a) {
  require(p.cols == static_cast<int>(a.rows()), "rmul shape mismatch");
  PolyMat1T<S> r(p.rows, static_cast<int>(a.cols()), p.iv, p.degree());
  for (int k = 0; k <= p.degree(); ++k) r.coef[k] = scalar_mul(p.coef[k], a);
  return r;
}

// product of two polynomials; degrees add
inline PolyMat1T<double> matmul(const PolyMat1T<double>& a, const PolyMat1T<double>& b) {
  require(a.cols == b.rows && a.iv.same_as(b.iv), "matmul shape/interval mismatch");
  PolyMat1T<double> r(a.rows, b.cols, a.iv, a.degree() + b.degree());
  for (int k = 0; k <= a.degree(); ++k)
    for (int l = 0; l <= b.degree(); ++l) r.coef[k + l] += a.coef[k] * b.coef[l];
  return r;
}

// Matrix-valued polynomial kernel in two interval variables (s, t),
// coefficients coef[k][l] of s^k t^l.
template <class S>
struct PolyMat2T {
  using M = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  int rows = 0, cols = 0;
  Interval s_iv, t_iv;
  std::vector<std::vector<M>> coef;

  PolyMat2T() = default;
  PolyMat2T(int r, int c, Interval si, Interval ti, int ds, int dt)
      : rows(r), cols(c), s_iv(si), t_iv(ti) {
    coef.assign(ds + 1, std::vector<M>(dt + 1, M::Zero(r, c)));
  }

  int s_degree() const { return static_cast<int>(coef.size()) - 1; }
  int t_degree() const { return static_cast<int>(coef[0].size()) - 1; }

  M eval(double s, double t) const {
    if (!s_iv.contains(s) || !t_iv.contains(t))
      throw DomainError("kernel evaluated outside its rectangle");
    M acc = M::Zero(rows, cols);
    double sp = 1.0;
    for (int k = 0; k <= s_degree(); ++k) {
      double tp = 1.0;
      for (int l = 0; l <= t_degree(); ++l) {
        acc += coef[k][l] * (sp * tp);
        tp *= t;
      }
      sp *= s;
    }
    return acc;
  }

  PolyMat2T partial_s() const {
    PolyMat2T d(rows, cols, s_iv, t_iv, std::max(s_degree() - 1, 0), t_degree());
    for (int k = 1; k <= s_degree(); ++k)
      for (int l = 0; l <= t_degree(); ++l) d.coef[k - 1][l] = coef[k][l] * double(k);
    return d;
  }
  PolyMat2T partial_t() const {
    PolyMat2T d(rows, cols, s_iv, t_iv, s_degree(), std::max(t_degree() - 1, 0));
    for (int k = 0; k <= s_degree(); ++k)
      for (int l = 1; l <= t_degree(); ++l) d.coef[k][l - 1] = coef[k][l] * double(l);
    return d;
  }

  // fix the first variable: R(s0, t) as a polynomial in t
  PolyMat1T<S> eval_s(double s0) const {
    if (!s_iv.contains(s0)) throw DomainError("kernel evaluated outside its rectangle");
    PolyMat1T<S> p(rows, cols, t_iv, t_degree());
    double sp = 1.0;
    for (int k = 0; k <= s_degree(); ++k) {
      for (int l = 0; l <= t_degree(); ++l) p.coef[l] += coef[k][l] * sp;
      sp *= s0;
    }
    return p;
  }
  // fix the second variable: R(s, t0) as a polynomial in s
  PolyMat1T<S> eval_t(double t0) const {
    if (!t_iv.contains(t0)) throw DomainError("kernel evaluated outside its rectangle");
    PolyMat1T<S> p(rows, cols, s_iv, s_degree());
    double tp = 1.0;
    for (int l = 0; l <= t_degree(); ++l) {
      for (int k = 0; k <= s_degree(); ++k) p.coef[k] += coef[k][l] * tp;
      tp *= t0;
    }
    return p;
  }

  // transpose-swap: returns R^T with (s, t) exchanged
  PolyMat2T tswap() const {
    PolyMat2T r(cols, rows, t_iv, s_iv, t_degree(), s_degree());
    for (int k = 0; k <= s_degree(); ++k)
      for (int l = 0; l <= t_degree(); ++l) r.coef[l][k] = coef[k][l].transpose();
    return r;
  }

  PolyMat2T& operator+=(const PolyMat2T& o) {
    require(rows == o.rows && cols == o.cols && s_iv.same_as(o.s_iv) && t_iv.same_as(o.t_iv),
            "polymat2 shape/interval mismatch");
    if (o.s_degree() > s_degree())
      coef.resize(o.s_degree() + 1, std::vector<M>(t_degree() + 1, M::Zero(rows, cols)));
    if (o.t_degree() > t_degree())
      for (auto& row : coef) row.resize(o.t_degree() + 1, M::Zero(rows, cols));
    for (int k = 0; k <= o.s_degree(); ++k)
      for (int l = 0; l <= o.t_degree(); ++l) coef[k][l] += o.coef[k][l];
    return *this;
  }
  PolyMat2T operator-() const {
    PolyMat2T r = *this;
    for (auto& row : r.coef)
      for (auto& m : row) m = -m;
    return r;
  }
  PolyMat2T& operator*=(double a) {
    for (auto& row : coef)
      for (auto& m : row) m *= a;
    return *this;
  }
};

template <class S>
PolyMat2T<S> operator+(PolyMat2T<S> a, const PolyMat2T<S>& b) { return a += b; }
template <class S>
PolyMat2T<S> operator*(PolyMat2T<S> a, double s) { return a *= s; }
template <class S>
PolyMat2T<S> operator*(double s, PolyMat2T<S> a) { return a *= s; }

template <class S>
PolyMat2T<S> lmul(const Mat& a, const PolyMat2T<S>& p) {
  require(static_cast<int>(a.cols()) == p.rows, "lmul shape mismatch");
  PolyMat2T<S> r(static_cast<int>(a.rows()), p.cols, p.s_iv, p.t_iv, p.s_degree(), p.t_degree());
  for (int k = 0; k <= p.s_degree(); ++k)
    for (int l = 0; l <= p.t_degree(); ++l) r.coef[k][l] = scalar_mul(a, p.coef[k][l]);
  return r;
}
template <class S>
PolyMat2T<S> rmul(const PolyMat2T<S>& p, const Mat& a) {
  require(p.cols == static_cast<int>(a.rows()), "rmul shape mismatch");
  PolyMat2T<S> r(p.rows, static_cast<int>(a.cols()), p.s_iv, p.t_iv, p.s_degree(), p.t_degree());
  for (int k = 0; k <= p.s_degree(); ++k)
    for (int l = 0; l <= p.t_degree(); ++l) r.coef[k][l] = scalar_mul(p.coef[k][l], a);
  return r;
}

using PolyMat1 = PolyMat1T<double>;
using PolyMat2 = PolyMat2T<double>;
using APolyMat1 = PolyMat1T<AffExpr>;
using APolyMat2 = PolyMat2T<AffExpr>;

// integral over the common interval of a(s)^T b(s)
Mat pair_integral(const PolyMat1& a, const PolyMat1& b);

// int_J R(s,t) g(t) dt as a polynomial in s
PolyMat1 apply_kernel_right(const PolyMat2& r, const PolyMat1& g);
// int_I f(s) R(s,t) ds as a polynomial in t
PolyMat1 apply_kernel_left(const PolyMat1& f, const PolyMat2& r);
// int_M R1(s,xi) R2(xi,t) dxi
PolyMat2 compose_kernels(const PolyMat2& r1, const PolyMat2& r2);
// f(s) g(t) as a separable kernel
PolyMat2 outer_kernel(const PolyMat1& f, const PolyMat1& g);
// f(s) R(s,t) pointwise in s, and R(s,t) g(t) pointwise in t
PolyMat2 kmul_left(const PolyMat1& f, const PolyMat2& r);
PolyMat2 kmul_right(const PolyMat2& r, const PolyMat1& g);

}  // namespace delsos
