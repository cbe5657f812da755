#include "space.hpp"

#include <cmath>

namespace delsos {

ZElement z_zero(int head_dim, int chan_dim, const std::vector<double>& tau) {
  ZElement z;
  z.head = Vec::Zero(head_dim);
  for (double t : tau) z.chan.push_back(PolyMat1(chan_dim, 1, Interval{-t, 0.0}, 0));
  return z;
}

ZElement z_sub(const ZElement& a, const ZElement& b) {
  require(a.head.size() == b.head.size() && a.chan.size() == b.chan.size(), "z_sub mismatch");
  ZElement r = a;
  r.head -= b.head;
  for (size_t i = 0; i < r.chan.size(); ++i) r.chan[i] -= b.chan[i];
  return r;
}

double z_inner(const ZElement& a, const ZElement& b, double tau_K) {
  require(a.head.size() == b.head.size() && a.chan.size() == b.chan.size(), "z_inner mismatch");
  double acc = tau_K * a.head.dot(b.head);
  for (size_t i = 0; i < a.chan.size(); ++i) acc += pair_integral(a.chan[i], b.chan[i])(0, 0);
  return acc;
}

double z_norm2(const ZElement& a, double tau_K) { return z_inner(a, a, tau_K); }

ZElement random_z(int head_dim, int chan_dim, const std::vector<double>& tau, int degree,
                  Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ZElement z;
  z.head = Vec::NullaryExpr(head_dim, [&](Eigen::Index) { return g(rng); });
  for (double t : tau) {
    PolyMat1 p(chan_dim, 1, Interval{-t, 0.0}, degree);
    for (auto& c : p.coef) c = Mat::NullaryExpr(chan_dim, 1, [&](Eigen::Index, Eigen::Index) { return g(rng); });
    z.chan.push_back(std::move(p));
  }
  return z;
}

ZElement random_z_in_x(int dim, const std::vector<double>& tau, int degree, Rng& rng) {
  ZElement z = random_z(dim, dim, tau, degree, rng);
  for (auto& p : z.chan) p.coef[0] += z.head - p.eval(0.0);
  return z;
}

namespace {

double legendre(int n, double x, double* dp = nullptr) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    if (dp) *dp = 0.0;
    return 1.0;
  }
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  if (dp) *dp = n * (x * p1 - p0) / (x * x - 1.0);
  return p1;
}

}  // namespace

QuadRule gauss_legendre(int n) {
  QuadRule r;
  r.nodes = Vec(n);
  r.weights = Vec(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double dp;
      double p = legendre(n, x, &dp);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double dp;
    legendre(n, x, &dp);
    r.nodes(i) = x;
    r.weights(i) = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

QuadRule gauss_lobatto(int n) {
  require(n >= 2, "lobatto rule needs at least 2 nodes");
  QuadRule r;
  r.nodes = Vec(n);
  r.weights = Vec(n);
  r.nodes(0) = -1.0;
  r.nodes(n - 1) = 1.0;
  const int m = n - 1;
  // interior nodes are the roots of P'_{n-1}
  for (int i = 1; i < n - 1; ++i) {
    double x = std::cos(M_PI * (1.0 - double(i) / m));
    for (int it = 0; it < 200; ++it) {
      double dp;
      legendre(m, x, &dp);
      // Newton on f = P'_m using f' from the Legendre ODE:
      // (1-x^2) P''_m = 2x P'_m - m(m+1) P_m
      double p = legendre(m, x);
      double ddp = (2.0 * x * dp - m * (m + 1.0) * p) / (1.0 - x * x);
      double dx = dp / ddp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes(i) = x;
  }
  std::sort(r.nodes.data(), r.nodes.data() + n);
  for (int i = 0; i < n; ++i) {
    double p = legendre(m, r.nodes(i));
    r.weights(i) = 2.0 / (m * (m + 1.0) * p * p);
  }
  return r;
}

QuadRule map_rule(const QuadRule& r, double lo, double hi) {
  QuadRule q;
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  q.nodes = (r.nodes.array() * half + mid).matrix();
  q.weights = r.weights * half;
  return q;
}

PolyMat1 fit_poly1(const Vec& nodes, const Vec& weights, const std::vector<Mat>& values,
                   int degree, Interval iv) {
  const int g = static_cast<int>(nodes.size());
  const int nb = degree + 1;
  require(static_cast<int>(values.size()) == g && g >= nb, "fit_poly1 needs enough samples");
  Mat v(g, nb);
  for (int h = 0; h < g; ++h) {
    double p = 1.0;
    for (int k = 0; k < nb; ++k) {
      v(h, k) = p * std::sqrt(weights(h));
      p *= nodes(h);
    }
  }
  const int rows = static_cast<int>(values[0].rows());
  const int cols = static_cast<int>(values[0].cols());
  Mat rhs(g, rows * cols);
  for (int h = 0; h < g; ++h) {
    double w = std::sqrt(weights(h));
    for (int a = 0; a < rows; ++a)
      for (int b = 0; b < cols; ++b) rhs(h, a * cols + b) = w * values[h](a, b);
  }
  Mat sol = v.colPivHouseholderQr().solve(rhs);
  PolyMat1 out(rows, cols, iv, degree);
  for (int k = 0; k < nb; ++k)
    for (int a = 0; a < rows; ++a)
      for (int b = 0; b < cols; ++b) out.coef[k](a, b) = sol(k, a * cols + b);
  return out;
}

PolyMat2 fit_poly2(const Vec& s_nodes, const Vec& t_nodes, const Vec& s_w, const Vec& t_w,
                   const std::vector<std::vector<Mat>>& values,
                   const std::vector<std::vector<bool>>& mask, int degree, Interval s_iv,
                   Interval t_iv) {
  const int gs = static_cast<int>(s_nodes.size());
  const int gt = static_cast<int>(t_nodes.size());
  const int nb = (degree + 1) * (degree + 1);
  int nsamp = 0;
  for (int h = 0; h < gs; ++h)
    for (int g = 0; g < gt; ++g)
      if (mask[h][g]) ++nsamp;
  require(nsamp >= nb, "fit_poly2 needs enough samples");
  const int rows = static_cast<int>(values[0][0].rows());
  const int cols = static_cast<int>(values[0][0].cols());
  Mat v(nsamp, nb);
  Mat rhs(nsamp, rows * cols);
  int row = 0;
  for (int h = 0; h < gs; ++h) {
    for (int g = 0; g < gt; ++g) {
      if (!mask[h][g]) continue;
      double w = std::sqrt(s_w(h) * t_w(g));
      double sp = 1.0;
      for (int k = 0; k <= degree; ++k) {
        double tp = 1.0;
        for (int l = 0; l <= degree; ++l) {
          v(row, k * (degree + 1) + l) = w * sp * tp;
          tp *= t_nodes(g);
        }
        sp *= s_nodes(h);
      }
      for (int a = 0; a < rows; ++a)
        for (int b = 0; b < cols; ++b) rhs(row, a * cols + b) = w * values[h][g](a, b);
      ++row;
    }
  }
  Mat sol = v.colPivHouseholderQr().solve(rhs);
  PolyMat2 out(rows, cols, s_iv, t_iv, degree, degree);
  for (int k = 0; k <= degree; ++k)
    for (int l = 0; l <= degree; ++l)
      for (int a = 0; a < rows; ++a)
        for (int b = 0; b < cols; ++b)
          out.coef[k][l](a, b) = sol(k * (degree + 1) + l, a * cols + b);
  return out;
}

}  // namespace delsos
