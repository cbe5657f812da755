#include "pqrs.hpp"

#include <Eigen/SVD>

namespace delsos {

Pqrs identity_op(int n, const std::vector<double>& tau) {
  Pqrs op(n, n, tau, 0, 0, 0);
  op.P = Mat::Identity(n, n);
  for (auto& s : op.S) s.coef[0] = Mat::Identity(n, n) / op.tau_max();
  return op;
}

ZElement op_apply(const Pqrs& op, const ZElement& z) {
  const int k = op.num_delays();
  require(static_cast<int>(z.chan.size()) == k && z.head.size() == op.P.cols(),
          "op_apply dimension mismatch");
  const double tk = op.tau_max();
  ZElement out;
  Mat head = op.P * z.head;
  for (int i = 0; i < k; ++i) head += matmul(op.Q[i], z.chan[i]).integral();
  out.head = head.col(0);
  for (int i = 0; i < k; ++i) {
    PolyMat1 c = rmul(op.Q[i].transposed(), Mat(z.head)) * tk;
    c += matmul(op.S[i], z.chan[i]) * tk;
    for (int j = 0; j < k; ++j) c += apply_kernel_right(op.R[i][j], z.chan[j]);
    out.chan.push_back(std::move(c));
  }
  return out;
}

double quad_form(const Pqrs& op, const ZElement& z) {
  return z_inner(z, op_apply(op, z), op.tau_max());
}

namespace {

double rel_max(const Mat& diff, double scale) { return diff.cwiseAbs().maxCoeff() / (1.0 + scale); }

double poly_scale(const PolyMat1& p) {
  double s = 0.0;
  for (const auto& c : p.coef) s = std::max(s, c.cwiseAbs().maxCoeff());
  return s;
}

}  // namespace

SelfAdjointReport op_selfadjoint_check(const Pqrs& op, int samples, unsigned seed,
                                       double symbolic_tol) {
  SelfAdjointReport rep;
  const int k = op.num_delays();
  const double tk = op.tau_max();
  double v = 0.0;
  double scale = op.P.cwiseAbs().maxCoeff();
  for (int i = 0; i < k; ++i) scale = std::max({scale, poly_scale(op.Q[i]), poly_scale(op.S[i])});

  v = std::max(v, rel_max(op.P - op.P.transpose(), scale));
  for (int i = 0; i < k; ++i) {
    const auto& s = op.S[i];
    for (int c = 0; c <= s.degree(); ++c)
      v = std::max(v, rel_max(s.coef[c] - s.coef[c].transpose(), scale));
    Mat pi = tk * (op.Q[i].eval(0.0).transpose() + op.S[i].eval(0.0));
    v = std::max(v, rel_max(op.P - pi, scale));
    for (int j = 0; j < k; ++j) {
      PolyMat2 d = op.R[i][j] + (-op.R[j][i].tswap());
      for (const auto& row : d.coef)
        for (const auto& m : row) v = std::max(v, rel_max(m, scale));
      PolyMat1 bd = op.R[i][j].eval_s(0.0) + (-op.Q[j]);
      for (const auto& m : bd.coef) v = std::max(v, rel_max(m, scale));
    }
  }
  rep.max_coef_violation = v;
  rep.symbolic_ok = v <= symbolic_tol;

  Rng rng(seed);
  double res = 0.0;
  for (int t = 0; t < samples; ++t) {
    ZElement a = random_z(op.head_dim, op.chan_dim, op.tau, 3, rng);
    ZElement b = random_z(op.head_dim, op.chan_dim, op.tau, 3, rng);
    double lhs = z_inner(op_apply(op, a), b, tk);
    double rhs = z_inner(a, op_apply(op, b), tk);
    double den = 1.0 + std::sqrt(z_norm2(a, tk) * z_norm2(b, tk));
    res = std::max(res, std::abs(lhs - rhs) / den);
  }
  rep.max_sampled_residual = res;
  return rep;
}

Collocation make_collocation(const Pqrs& op, int grid_size) {
  Collocation c;
  c.head_dim = op.head_dim;
  c.chan_dim = op.chan_dim;
  c.grid = grid_size;
  QuadRule base = gauss_lobatto(grid_size);
  for (double t : op.tau) c.rules.push_back(map_rule(base, -t, 0.0));
  return c;
}

Mat collocation_matrix(const Pqrs& op, const Collocation& c) {
  const int k = op.num_delays();
  const int m = op.head_dim, n = op.chan_dim, g = c.grid;
  const double tk = op.tau_max();
  Mat big = Mat::Zero(c.dim(), c.dim());
  big.block(0, 0, m, m) = op.P;
  for (int i = 0; i < k; ++i) {
    for (int h = 0; h < g; ++h) {
      const double s = c.rules[i].nodes(h);
      big.block(0, c.chan_offset(i, h), m, n) = op.Q[i].eval(s) * c.rules[i].weights(h);
      big.block(c.chan_offset(i, h), 0, n, m) = tk * op.Q[i].eval(s).transpose();
      big.block(c.chan_offset(i, h), c.chan_offset(i, h), n, n) += tk * op.S[i].eval(s);
      for (int j = 0; j < k; ++j)
        for (int q = 0; q < g; ++q)
          big.block(c.chan_offset(i, h), c.chan_offset(j, q), n, n) +=
              op.R[i][j].eval(s, c.rules[j].nodes(q)) * c.rules[j].weights(q);
    }
  }
  return big;
}

Vec collocation_coords(const ZElement& z, const Collocation& c) {
  Vec v(c.dim());
  v.head(c.head_dim) = z.head;
  for (size_t i = 0; i < c.rules.size(); ++i)
    for (int h = 0; h < c.grid; ++h)
      v.segment(c.chan_offset(static_cast<int>(i), h), c.chan_dim) =
          z.chan[i].eval(c.rules[i].nodes(h)).col(0);
  return v;
}

InvertResult op_invert_collocation(const Pqrs& op, const InvertConfig& cfg) {
  const int k = op.num_delays();
  const int m = op.head_dim, n = op.chan_dim;
  const int g = cfg.grid_size;
  const double tk = op.tau_max();
  (void)tk;

  Collocation col = make_collocation(op, g);
  const auto& rules = col.rules;
  const int dim = col.dim();
  auto chan_off = [&](int i, int h) { return col.chan_offset(i, h); };

  Mat big = collocation_matrix(op, col);

  Eigen::JacobiSVD<Mat> svd(big);
  const double cond = svd.singularValues()(0) / svd.singularValues()(dim - 1);
  if (!(cond < cfg.max_condition))
    throw SolverError("op_invert_collocation: discretized operator is ill-conditioned (cond=" +
                      std::to_string(cond) + ")");
  Mat inv = Eigen::PartialPivLU<Mat>(big).solve(Mat::Identity(dim, dim));

  InvertResult out;
  Pqrs& hat = out.inverse;
  hat = Pqrs(m, n, op.tau, cfg.fit_degree, cfg.fit_degree, cfg.fit_degree);
  out.condition = cond;

  hat.P = inv.block(0, 0, m, m);
  for (int i = 0; i < k; ++i) {
    std::vector<Mat> qv(g);
    for (int h = 0; h < g; ++h) qv[h] = inv.block(chan_off(i, h), 0, n, m).transpose() / tk;
    hat.Q[i] = fit_poly1(rules[i].nodes, rules[i].weights, qv, cfg.fit_degree,
                         Interval{-op.tau[i], 0.0});
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      std::vector<std::vector<Mat>> rv(g, std::vector<Mat>(g));
      std::vector<std::vector<bool>> mask(g, std::vector<bool>(g, true));
      for (int h = 0; h < g; ++h)
        for (int q = 0; q < g; ++q) {
          if (i == j && h == q) {
            mask[h][q] = false;
            rv[h][q] = Mat::Zero(n, n);
          } else {
            rv[h][q] = inv.block(chan_off(i, h), chan_off(j, q), n, n) / rules[j].weights(q);
          }
        }
      hat.R[i][j] = fit_poly2(rules[i].nodes, rules[j].nodes, rules[i].weights, rules[j].weights,
                              rv, mask, cfg.fit_degree, Interval{-op.tau[i], 0.0},
                              Interval{-op.tau[j], 0.0});
    }
    std::vector<Mat> sv(g);
    for (int h = 0; h < g; ++h) {
      const double s = rules[i].nodes(h);
      sv[h] = (inv.block(chan_off(i, h), chan_off(i, h), n, n) -
               rules[i].weights(h) * hat.R[i][i].eval(s, s)) /
              tk;
    }
    hat.S[i] = fit_poly1(rules[i].nodes, rules[i].weights, sv, cfg.fit_degree,
                         Interval{-op.tau[i], 0.0});
  }

  Rng rng(987654321u);
  double worst = 0.0;
  for (int t = 0; t < cfg.residual_samples; ++t) {
    ZElement z = random_z(m, n, op.tau, 3, rng);
    ZElement r = z_sub(op_apply(op, op_apply(hat, z)), z);
    worst = std::max(worst, std::sqrt(z_norm2(r, tk) / z_norm2(z, tk)));
  }
  out.residual = worst;
  if (!(worst <= cfg.max_residual))
    throw SolverError("op_invert_collocation: inversion residual " + std::to_string(worst) +
                      " exceeds tolerance");
  return out;
}

}  // namespace delsos
