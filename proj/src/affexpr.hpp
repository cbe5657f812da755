#pragma once

#include <Eigen/Core>
#include <map>
#include <utility>
#include <vector>

#include "common.hpp"

namespace delsos {

// Affine expression c + sum_k coef_k * var_k over scalar decision variables.
// Products of two non-constant expressions are rejected: everything built on
// top of this type must stay affine in the decision variables.
struct AffExpr {
  double c = 0.0;
  std::vector<std::pair<int, double>> terms;

  AffExpr() = default;
  AffExpr(double v) : c(v) {}
  static AffExpr var(int id, double coef = 1.0) {
    AffExpr e;
    e.terms.emplace_back(id, coef);
    return e;
  }

  bool is_const() const { return terms.empty(); }

  AffExpr& operator+=(const AffExpr& o) {
    c += o.c;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
  AffExpr& operator-=(const AffExpr& o) {
    c -= o.c;
    for (const auto& [v, a] : o.terms) terms.emplace_back(v, -a);
    return *this;
  }
  AffExpr& operator*=(double s) {
    c *= s;
    for (auto& [v, a] : terms) a *= s;
    return *this;
  }

  // Merge duplicate variables and drop negligible coefficients.
  std::map<int, double> compressed(double drop_tol = 0.0) const {
    std::map<int, double> m;
    for (const auto& [v, a] : terms) m[v] += a;
    if (drop_tol > 0.0) {
      for (auto it = m.begin(); it != m.end();) {
        if (std::abs(it->second) <= drop_tol)
          it = m.erase(it);
        else
          ++it;
      }
    }
    return m;
  }
};

inline AffExpr operator+(AffExpr a, const AffExpr& b) { return a += b; }
inline AffExpr operator-(AffExpr a, const AffExpr& b) { return a -= b; }
inline AffExpr operator-(const AffExpr& a) {
  AffExpr r = a;
  r *= -1.0;
  return r;
}
inline AffExpr operator*(AffExpr a, double s) { return a *= s; }
inline AffExpr operator*(double s, AffExpr a) { return a *= s; }
inline AffExpr operator/(AffExpr a, double s) { return a *= (1.0 / s); }

inline AffExpr operator*(const AffExpr& a, const AffExpr& b) {
  if (a.is_const()) {
    AffExpr r = b;
    r *= a.c;
    return r;
  }
  if (b.is_const()) {
    AffExpr r = a;
    r *= b.c;
    return r;
  }
  throw StructuralError("product of two non-constant affine expressions");
}
inline AffExpr& operator*=(AffExpr& a, const AffExpr& b) { return a = a * b; }
inline AffExpr& operator+=(AffExpr& a, double b) {
  a.c += b;
  return a;
}
inline bool operator==(const AffExpr& a, const AffExpr& b) {
  if (a.c != b.c) return false;
  return a.compressed() == b.compressed();
}
inline bool operator!=(const AffExpr& a, const AffExpr& b) { return !(a == b); }

}  // namespace delsos

namespace Eigen {

template <>
struct NumTraits<delsos::AffExpr> : GenericNumTraits<delsos::AffExpr> {
  typedef delsos::AffExpr Real;
  typedef delsos::AffExpr NonInteger;
  typedef delsos::AffExpr Nested;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 4,
    AddCost = 8,
    MulCost = 8
  };
  static inline Real epsilon() { return delsos::AffExpr(NumTraits<double>::epsilon()); }
  static inline Real dummy_precision() { return delsos::AffExpr(1e-12); }
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<delsos::AffExpr, double, BinaryOp> {
  typedef delsos::AffExpr ReturnType;
};
template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, delsos::AffExpr, BinaryOp> {
  typedef delsos::AffExpr ReturnType;
};

}  // namespace Eigen

namespace delsos {

using AffMat = Eigen::Matrix<AffExpr, Eigen::Dynamic, Eigen::Dynamic>;

inline AffMat to_aff(const Mat& m) {
  AffMat r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = AffExpr(m(i, j));
  return r;
}

// matrix products involving affine entries stay off Eigen's kernel paths
inline AffMat mul(const Mat& a, const AffMat& b) {
  AffMat out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      AffExpr acc;
      for (Eigen::Index k = 0; k < a.cols(); ++k)
        if (a(i, k) != 0.0) acc += b(k, j) * a(i, k);
      out(i, j) = std::move(acc);
    }
  return out;
}

inline AffMat mul(const AffMat& a, const Mat& b) {
  AffMat out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      AffExpr acc;
      for (Eigen::Index k = 0; k < a.cols(); ++k)
        if (b(k, j) != 0.0) acc += a(i, k) * b(k, j);
      out(i, j) = std::move(acc);
    }
  return out;
}

// Numeric evaluation given an assignment of the decision variables.
inline double aff_value(const AffExpr& e, const Vec& vals) {
  double v = e.c;
  for (const auto& [id, a] : e.terms) v += a * vals(id);
  return v;
}

inline Mat aff_value(const AffMat& m, const Vec& vals) {
  Mat r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = aff_value(m(i, j), vals);
  return r;
}

}  // namespace delsos
