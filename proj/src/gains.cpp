#include "gains.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace delsos {

using nlohmann::json;

Vec apply_h_vars(const ControllerCert& cert, const ZElement& z) {
  Mat u = cert.H0 * z.head;
  for (size_t i = 0; i < cert.H1.size(); ++i) {
    u += cert.H1[i] * z.chan[i].eval(z.chan[i].iv.lo);
    u += matmul(cert.H2[i], z.chan[i]).integral();
  }
  return u.col(0);
}

Vec apply_controller_gains(const ControllerGains& g, const ZElement& z) {
  Mat u = g.K0 * z.head;
  for (size_t i = 0; i < g.K1.size(); ++i) {
    u += g.K1[i] * z.chan[i].eval(z.chan[i].iv.lo);
    u += matmul(g.K2[i], z.chan[i]).integral();
  }
  return u.col(0);
}

ZElement apply_observer_gains(const ObserverGains& g, const std::vector<double>& tau,
                              const ZElement& y) {
  const int kk = static_cast<int>(tau.size());
  (void)tau;
  ZElement out;
  Mat head = g.L1 * y.head;
  for (int i = 0; i < kk; ++i) {
    head += g.L2[i] * y.chan[i].eval(y.chan[i].iv.lo);
    head += matmul(g.L3[i], y.chan[i]).integral();
  }
  out.head = head.col(0);
  for (int i = 0; i < kk; ++i) {
    PolyMat1 c = rmul(g.L4[i], Mat(y.head));
    for (int j = 0; j < kk; ++j) {
      c += rmul(g.L5[i][j], Mat(y.chan[j].eval(y.chan[j].iv.lo)));
      c += apply_kernel_right(g.L7[i][j], y.chan[j]);
    }
    c += matmul(g.L6[i], y.chan[i]);
    out.chan.push_back(std::move(c));
  }
  return out;
}

namespace {

// exact monomial moments int s^k phi(s) ds for a polynomial column
Vec poly_moment(const PolyMat1& phi, int k) {
  Vec mom = Vec::Zero(phi.rows);
  for (int c = 0; c <= phi.degree(); ++c)
    mom += phi.coef[c].col(0) * mono_integral(phi.iv, k + c);
  return mom;
}

}  // namespace

namespace {

// column-equilibrated rank-revealing least squares; returns the minimum-norm
// solution for rank-deficient designs
Mat solve_lsq(const Mat& design, const Mat& rhs) {
  Vec scale(design.cols());
  for (Eigen::Index c = 0; c < design.cols(); ++c) {
    const double nrm = design.col(c).norm();
    scale(c) = nrm > 1e-300 ? 1.0 / nrm : 0.0;
  }
  Mat d = design * scale.asDiagonal();
  Eigen::ColPivHouseholderQR<Mat> qr(d);
  qr.setThreshold(1e-10);
  Mat sol = qr.solve(rhs);
  return scale.asDiagonal() * sol;
}

}  // namespace

// Composition on the collocation grid: the discrete row of H P1^{-1} is
// unpacked into the explicit gain structure, with the polynomial pieces
// fitted through their interior node values.
ControllerGains reconstruct_controller(const ControllerCert& cert, const DelayModel& model,
                                       const GainOptions& opt) {
  const double tk = model.tau_max();
  const int kk = model.K(), n = model.n(), mm = model.m();
  const int dfit = opt.invert.fit_degree;
  const int g = opt.invert.grid_size;

  Collocation col = make_collocation(cert.lyap, g);
  Mat big = collocation_matrix(cert.lyap, col);
  Eigen::JacobiSVD<Mat> svd(big);
  const double cond =
      svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
  if (!(cond < opt.invert.max_condition))
    throw SolverError("gain reconstruction: certificate operator is ill-conditioned (cond=" +
                      std::to_string(cond) + ")");

  Mat hrow = Mat::Zero(mm, col.dim());
  hrow.block(0, 0, mm, n) = cert.H0;
  for (int i = 0; i < kk; ++i) {
    hrow.block(0, col.chan_offset(i, 0), mm, n) += cert.H1[i];
    for (int h = 0; h < g; ++h)
      hrow.block(0, col.chan_offset(i, h), mm, n) +=
          col.rules[i].weights(h) * cert.H2[i].eval(col.rules[i].nodes(h));
  }
  Mat krow = Eigen::PartialPivLU<Mat>(big.transpose()).solve(Mat(hrow.transpose())).transpose();

  ControllerGains out;
  out.inversion_condition = cond;
  for (int i = 0; i < kk; ++i) {
    std::vector<Mat> vals;
    Vec nodes(g - 2), weights(g - 2);
    for (int h = 1; h < g - 1; ++h) {
      nodes(h - 1) = col.rules[i].nodes(h);
      weights(h - 1) = col.rules[i].weights(h);
      vals.push_back(krow.block(0, col.chan_offset(i, h), mm, n) / col.rules[i].weights(h));
    }
    out.K2.push_back(fit_poly1(nodes, weights, vals, dfit, Interval{-model.tau[i], 0.0}));
    out.K1.push_back(krow.block(0, col.chan_offset(i, 0), mm, n) -
                     col.rules[i].weights(0) * out.K2[i].eval(-model.tau[i]));
  }
  Mat k0 = krow.block(0, 0, mm, n);
  for (int i = 0; i < kk; ++i) {
    k0 += krow.block(0, col.chan_offset(i, g - 1), mm, n);
    k0 -= col.rules[i].weights(g - 1) * out.K2[i].eval(0.0);
  }
  out.K0 = k0;

  Rng rng(24601u);
  double worst = 0.0;
  for (int t = 0; t < opt.residual_samples; ++t) {
    ZElement z = random_z_in_x(n, model.tau, 3, rng);
    Vec lhs = apply_h_vars(cert, z);
    Vec rhs = apply_controller_gains(out, op_apply(cert.lyap, z));
    worst = std::max(worst, (lhs - rhs).norm() / std::sqrt(z_norm2(z, tk)));
  }
  out.fit_residual = worst;
  out.inversion_residual = worst;
  if (!(worst <= opt.max_fit_residual))
    throw SolverError("controller gain reconstruction residual " + std::to_string(worst) +
                      " exceeds tolerance");
  return out;
}

ObserverGains reconstruct_observer(const EstimatorCert& cert, const DelayModel& model,
                                   const GainOptions& opt) {
  const double tk = model.tau_max();
  const int kk = model.K(), n = model.n(), qq = model.q();
  const int dfit = opt.invert.fit_degree;
  const int g = opt.invert.grid_size;

  Collocation col = make_collocation(cert.lyap, g);
  Mat big = collocation_matrix(cert.lyap, col);
  Eigen::JacobiSVD<Mat> svd(big);
  const double cond =
      svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
  if (!(cond < opt.invert.max_condition))
    throw SolverError("gain reconstruction: certificate operator is ill-conditioned (cond=" +
                      std::to_string(cond) + ")");

  // collocation matrix of the Z parameterization, mapping Z_{q,K} coordinates
  // [y0; y_j(nodes)] into Z_{n,K} coordinates
  const int ydim = qq + kk * qq * g;
  auto ycol = [&](int j, int h) { return qq + (j * g + h) * qq; };
  Mat zmat = Mat::Zero(col.dim(), ydim);
  zmat.block(0, 0, n, qq) = cert.Z1;
  for (int j = 0; j < kk; ++j) {
    zmat.block(0, ycol(j, 0), n, qq) += cert.Z2[j];
    for (int h = 0; h < g; ++h)
      zmat.block(0, ycol(j, h), n, qq) +=
          col.rules[j].weights(h) * cert.Z3[j].eval(col.rules[j].nodes(h));
  }
  for (int i = 0; i < kk; ++i)
    for (int h = 0; h < g; ++h) {
      const double s0 = col.rules[i].nodes(h);
      const int row = col.chan_offset(i, h);
      zmat.block(row, 0, n, qq) += tk * cert.Z4[i].eval(s0);
      zmat.block(row, ycol(i, h), n, qq) += tk * cert.Z6[i].eval(s0);
      for (int j = 0; j < kk; ++j) {
        zmat.block(row, ycol(j, 0), n, qq) += tk * cert.Z5[i][j].eval(s0);
        for (int h2 = 0; h2 < g; ++h2)
          zmat.block(row, ycol(j, h2), n, qq) +=
              tk * col.rules[j].weights(h2) * cert.Z7[i][j].eval(s0, col.rules[j].nodes(h2));
      }
    }
  Mat lmat = Eigen::PartialPivLU<Mat>(big).solve(zmat);

  ObserverGains out;
  out.inversion_condition = cond;

  // head functional: L1 y0 + sum L2j y_j(-tau_j) + sum int L3j y_j
  for (int j = 0; j < kk; ++j) {
    std::vector<Mat> vals;
    Vec nodes(g - 2), weights(g - 2);
    for (int h = 1; h < g - 1; ++h) {
      nodes(h - 1) = col.rules[j].nodes(h);
      weights(h - 1) = col.rules[j].weights(h);
      vals.push_back(lmat.block(0, ycol(j, h), n, qq) / col.rules[j].weights(h));
    }
    out.L3.push_back(fit_poly1(nodes, weights, vals, dfit, Interval{-model.tau[j], 0.0}));
    out.L2.push_back(lmat.block(0, ycol(j, 0), n, qq) -
                     col.rules[j].weights(0) * out.L3[j].eval(-model.tau[j]));
  }
  out.L1 = lmat.block(0, 0, n, qq);

  // channel functionals: L4 y0 + sum L5 y_j(-tau_j) + L6 y_i(s) + kernels
  for (int i = 0; i < kk; ++i) {
    std::vector<Mat> l4v;
    Vec nodes(g), weights(g);
    for (int h = 0; h < g; ++h) {
      nodes(h) = col.rules[i].nodes(h);
      weights(h) = col.rules[i].weights(h);
      l4v.push_back(lmat.block(col.chan_offset(i, h), 0, n, qq));
    }
    out.L4.push_back(fit_poly1(nodes, weights, l4v, dfit, Interval{-model.tau[i], 0.0}));
    out.L5.emplace_back();
    out.L7.emplace_back();
    for (int j = 0; j < kk; ++j) {
      std::vector<std::vector<Mat>> kv(g, std::vector<Mat>(g));
      std::vector<std::vector<bool>> mask(g, std::vector<bool>(g, false));
      for (int h = 0; h < g; ++h)
        for (int h2 = 1; h2 < g - 1; ++h2) {
          if (i == j && h == h2) continue;
          kv[h][h2] = lmat.block(col.chan_offset(i, h), ycol(j, h2), n, qq) /
                      col.rules[j].weights(h2);
          mask[h][h2] = true;
        }
      out.L7[i].push_back(fit_poly2(col.rules[i].nodes, col.rules[j].nodes,
                                    col.rules[i].weights, col.rules[j].weights, kv, mask, dfit,
                                    Interval{-model.tau[i], 0.0},
                                    Interval{-model.tau[j], 0.0}));
      std::vector<Mat> l5v;
      for (int h = 0; h < g; ++h)
        l5v.push_back(lmat.block(col.chan_offset(i, h), ycol(j, 0), n, qq) -
                      col.rules[j].weights(0) * out.L7[i][j].eval(col.rules[i].nodes(h),
                                                                  -model.tau[j]));
      out.L5[i].push_back(fit_poly1(nodes, weights, l5v, dfit, Interval{-model.tau[i], 0.0}));
    }
    std::vector<Mat> l6v;
    Vec inodes(g - 2), iweights(g - 2);
    for (int h = 1; h < g - 1; ++h) {
      const double s0 = col.rules[i].nodes(h);
      inodes(h - 1) = s0;
      iweights(h - 1) = col.rules[i].weights(h);
      l6v.push_back(lmat.block(col.chan_offset(i, h), ycol(i, h), n, qq) -
                    col.rules[i].weights(h) * out.L7[i][i].eval(s0, s0));
    }
    out.L6.push_back(fit_poly1(inodes, iweights, l6v, dfit, Interval{-model.tau[i], 0.0}));
  }

  Rng rng(8888u);
  double worst = 0.0;
  for (int t = 0; t < opt.residual_samples; ++t) {
    ZElement y = random_z(qq, qq, model.tau, 3, rng);
    ZElement lhs = apply_z_vars(cert, tk, y);
    ZElement rhs = op_apply(cert.lyap, apply_observer_gains(out, model.tau, y));
    worst = std::max(worst,
                     std::sqrt(z_norm2(z_sub(lhs, rhs), tk)) / std::sqrt(z_norm2(y, tk)));
  }
  out.fit_residual = worst;
  out.inversion_residual = worst;
  if (!(worst <= opt.max_fit_residual))
    throw SolverError("observer gain reconstruction residual " + std::to_string(worst) +
                      " exceeds tolerance");
  return out;
}

namespace {

json mat_json(const Mat& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  j["data"] = data;
  return j;
}

Mat mat_unjson(const json& j) {
  const int r = j.at("rows").get<int>(), c = j.at("cols").get<int>();
  Mat m(r, c);
  const auto& d = j.at("data");
  if (static_cast<int>(d.size()) != r * c) throw ParseError("gains: matrix data size mismatch");
  for (int i = 0; i < r; ++i)
    for (int cc = 0; cc < c; ++cc) m(i, cc) = d[i * c + cc].get<double>();
  return m;
}

json poly1_json(const PolyMat1& p) {
  json j;
  j["interval"] = {p.iv.lo, p.iv.hi};
  j["degree"] = p.degree();
  json coef = json::array();
  for (const auto& c : p.coef) coef.push_back(mat_json(c));
  j["coef"] = coef;
  return j;
}

PolyMat1 poly1_unjson(const json& j) {
  Interval iv{j.at("interval")[0].get<double>(), j.at("interval")[1].get<double>()};
  const int d = j.at("degree").get<int>();
  const auto& coef = j.at("coef");
  if (static_cast<int>(coef.size()) != d + 1) throw ParseError("gains: polynomial degree mismatch");
  Mat c0 = mat_unjson(coef[0]);
  PolyMat1 p(static_cast<int>(c0.rows()), static_cast<int>(c0.cols()), iv, d);
  for (int k = 0; k <= d; ++k) p.coef[k] = mat_unjson(coef[k]);
  return p;
}

json poly2_json(const PolyMat2& p) {
  json j;
  j["s_interval"] = {p.s_iv.lo, p.s_iv.hi};
  j["t_interval"] = {p.t_iv.lo, p.t_iv.hi};
  j["s_degree"] = p.s_degree();
  j["t_degree"] = p.t_degree();
  json coef = json::array();
  for (const auto& row : p.coef) {
    json jr = json::array();
    for (const auto& c : row) jr.push_back(mat_json(c));
    coef.push_back(jr);
  }
  j["coef"] = coef;
  return j;
}

PolyMat2 poly2_unjson(const json& j) {
  Interval si{j.at("s_interval")[0].get<double>(), j.at("s_interval")[1].get<double>()};
  Interval ti{j.at("t_interval")[0].get<double>(), j.at("t_interval")[1].get<double>()};
  const int ds = j.at("s_degree").get<int>(), dt = j.at("t_degree").get<int>();
  Mat c0 = mat_unjson(j.at("coef")[0][0]);
  PolyMat2 p(static_cast<int>(c0.rows()), static_cast<int>(c0.cols()), si, ti, ds, dt);
  for (int k = 0; k <= ds; ++k)
    for (int l = 0; l <= dt; ++l) p.coef[k][l] = mat_unjson(j.at("coef")[k][l]);
  return p;
}

}  // namespace

std::string gains_to_json(const GainsFile& g) {
  json j;
  j["schema_version"] = g.schema_version;
  j["tau"] = g.tau;
  j["gamma1"] = g.gamma1;
  j["gamma2"] = g.gamma2;
  j["r"] = g.r;
  j["composite_bound"] = g.composite_bound;
  j["eps1"] = g.eps1;
  j["eps2"] = g.eps2;
  j["solver_info"] = g.solver_info;

  json c;
  c["K0"] = mat_json(g.controller.K0);
  c["K1"] = json::array();
  for (const auto& m : g.controller.K1) c["K1"].push_back(mat_json(m));
  c["K2"] = json::array();
  for (const auto& p : g.controller.K2) c["K2"].push_back(poly1_json(p));
  c["fit_residual"] = g.controller.fit_residual;
  c["inversion_residual"] = g.controller.inversion_residual;
  c["inversion_condition"] = g.controller.inversion_condition;
  j["controller"] = c;

  json o;
  o["L1"] = mat_json(g.observer.L1);
  o["L2"] = json::array();
  for (const auto& m : g.observer.L2) o["L2"].push_back(mat_json(m));
  for (const char* key : {"L3", "L4", "L6"}) o[key] = json::array();
  for (const auto& p : g.observer.L3) o["L3"].push_back(poly1_json(p));
  for (const auto& p : g.observer.L4) o["L4"].push_back(poly1_json(p));
  for (const auto& p : g.observer.L6) o["L6"].push_back(poly1_json(p));
  o["L5"] = json::array();
  for (const auto& row : g.observer.L5) {
    json jr = json::array();
    for (const auto& p : row) jr.push_back(poly1_json(p));
    o["L5"].push_back(jr);
  }
  o["L7"] = json::array();
  for (const auto& row : g.observer.L7) {
    json jr = json::array();
    for (const auto& p : row) jr.push_back(poly2_json(p));
    o["L7"].push_back(jr);
  }
  o["fit_residual"] = g.observer.fit_residual;
  o["inversion_residual"] = g.observer.inversion_residual;
  o["inversion_condition"] = g.observer.inversion_condition;
  j["observer"] = o;
  return j.dump(2);
}

GainsFile gains_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("gains: invalid JSON: ") + e.what());
  }
  GainsFile g;
  g.schema_version = j.at("schema_version").get<int>();
  if (g.schema_version != 1) throw ParseError("gains: unsupported schema version");
  for (const auto& t : j.at("tau")) g.tau.push_back(t.get<double>());
  g.gamma1 = j.value("gamma1", 0.0);
  g.gamma2 = j.value("gamma2", 0.0);
  g.r = j.value("r", 0.0);
  g.composite_bound = j.value("composite_bound", 0.0);
  g.eps1 = j.value("eps1", 0.0);
  g.eps2 = j.value("eps2", 0.0);
  g.solver_info = j.value("solver_info", "");

  const auto& c = j.at("controller");
  g.controller.K0 = mat_unjson(c.at("K0"));
  for (const auto& m : c.at("K1")) g.controller.K1.push_back(mat_unjson(m));
  for (const auto& p : c.at("K2")) g.controller.K2.push_back(poly1_unjson(p));
  g.controller.fit_residual = c.value("fit_residual", 0.0);
  g.controller.inversion_residual = c.value("inversion_residual", 0.0);
  g.controller.inversion_condition = c.value("inversion_condition", 0.0);

  const auto& o = j.at("observer");
  g.observer.L1 = mat_unjson(o.at("L1"));
  for (const auto& m : o.at("L2")) g.observer.L2.push_back(mat_unjson(m));
  for (const auto& p : o.at("L3")) g.observer.L3.push_back(poly1_unjson(p));
  for (const auto& p : o.at("L4")) g.observer.L4.push_back(poly1_unjson(p));
  for (const auto& p : o.at("L6")) g.observer.L6.push_back(poly1_unjson(p));
  for (const auto& row : o.at("L5")) {
    g.observer.L5.emplace_back();
    for (const auto& p : row) g.observer.L5.back().push_back(poly1_unjson(p));
  }
  for (const auto& row : o.at("L7")) {
    g.observer.L7.emplace_back();
    for (const auto& p : row) g.observer.L7.back().push_back(poly2_unjson(p));
  }
  g.observer.fit_residual = o.value("fit_residual", 0.0);
  g.observer.inversion_residual = o.value("inversion_residual", 0.0);
  g.observer.inversion_condition = o.value("inversion_condition", 0.0);
  return g;
}

void save_gains(const GainsFile& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write gains file: " + path);
  f << gains_to_json(g) << "\n";
}

GainsFile load_gains(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open gains file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return gains_from_json(ss.str());
}

}  // namespace delsos

namespace delsos {

namespace {

double poly_peak(const PolyMat1& p) {
  double m = 0.0;
  for (int i = 0; i <= 10; ++i)
    m = std::max(m, p.eval(p.iv.lo + (p.iv.hi - p.iv.lo) * i / 10.0).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

double controller_gain_scale(const ControllerGains& g) {
  double s = g.K0.cwiseAbs().maxCoeff();
  for (size_t i = 0; i < g.K1.size(); ++i)
    s += g.K1[i].cwiseAbs().maxCoeff() + poly_peak(g.K2[i]);
  return s;
}

double observer_gain_scale(const ObserverGains& g) {
  double s = g.L1.cwiseAbs().maxCoeff();
  for (size_t i = 0; i < g.L2.size(); ++i) {
    s += g.L2[i].cwiseAbs().maxCoeff();
    s += poly_peak(g.L3[i]) + poly_peak(g.L4[i]) + poly_peak(g.L6[i]);
    for (size_t j = 0; j < g.L5[i].size(); ++j) {
      s += poly_peak(g.L5[i][j]);
      double l7 = 0.0;
      for (int a = 0; a <= 4; ++a)
        for (int b = 0; b <= 4; ++b)
          l7 = std::max(l7, g.L7[i][j]
                                .eval(g.L7[i][j].s_iv.lo * a / 4.0, g.L7[i][j].t_iv.lo * b / 4.0)
                                .cwiseAbs()
                                .maxCoeff());
      s += l7;
    }
  }
  return s;
}

}  // namespace delsos
