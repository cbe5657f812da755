#include "synthesis.hpp"

#include <cmath>

namespace delsos {

namespace {

AffMat azero(int r, int c) {
  AffMat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = AffExpr(0.0);
  return m;
}

AffMat aident(int n, double scale) {
  AffMat m = azero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = AffExpr(scale);
  return m;
}

AffMat new_mat(SdpProblem& sdp, int r, int c) {
  AffMat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = AffExpr::var(sdp.add_free());
  return m;
}

AffMat new_sym(SdpProblem& sdp, int n) {
  AffMat m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = AffExpr::var(sdp.add_free());
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = AffExpr::var(sdp.add_free());
      m(j, i) = m(i, j);
    }
  }
  return m;
}

APolyMat1 new_poly1(SdpProblem& sdp, int r, int c, Interval iv, int deg) {
  APolyMat1 p(r, c, iv, deg);
  for (auto& m : p.coef) m = new_mat(sdp, r, c);
  return p;
}

APolyMat1 new_sym_poly1(SdpProblem& sdp, int n, Interval iv, int deg) {
  APolyMat1 p(n, n, iv, deg);
  for (auto& m : p.coef) m = new_sym(sdp, n);
  return p;
}

APolyMat2 new_poly2(SdpProblem& sdp, int r, int c, Interval si, Interval ti, int deg) {
  APolyMat2 p(r, c, si, ti, deg, deg);
  for (auto& row : p.coef)
    for (auto& m : row) m = new_mat(sdp, r, c);
  return p;
}

// kernel constrained to equal its own transpose-swap, by variable sharing
APolyMat2 new_tswap_sym_poly2(SdpProblem& sdp, int n, Interval iv, int deg) {
  APolyMat2 p(n, n, iv, iv, deg, deg);
  for (int k = 0; k <= deg; ++k)
    for (int l = 0; l <= deg; ++l)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          if (k < l || (k == l && a <= b))
            p.coef[k][l](a, b) = AffExpr::var(sdp.add_free());
        }
  for (int k = 0; k <= deg; ++k)
    for (int l = 0; l <= deg; ++l)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          if (k > l || (k == l && a > b)) p.coef[k][l](a, b) = p.coef[l][k](b, a);
        }
  return p;
}

void emit_zero(SdpProblem& sdp, const AffExpr& e) {
  SdpConstraint c;
  for (const auto& [v, a] : e.compressed())
    if (a != 0.0) c.free_vars.emplace_back(v, a);
  c.rhs = -e.c;
  if (c.free_vars.empty()) {
    if (std::abs(e.c) > 1e-12) throw StructuralError("inconsistent constant equality");
    return;
  }
  sdp.eqs.push_back(std::move(c));
}

void emit_zero(SdpProblem& sdp, const AffMat& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) emit_zero(sdp, m(i, j));
}

void set_block(AffMat& m, int r0, int c0, const AffMat& b) {
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) m(r0 + i, c0 + j) = b(i, j);
}

void set_block_sym(AffMat& m, int r0, int c0, const AffMat& b) {
  set_block(m, r0, c0, b);
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) m(c0 + j, r0 + i) = b(i, j);
}

void add_poly_rows(APolyMat1& f, int r0, const APolyMat1& part) {
  if (part.degree() > f.degree())
    f.coef.resize(part.degree() + 1, azero(f.rows, f.cols));
  for (int k = 0; k <= part.degree(); ++k)
    for (int i = 0; i < part.rows; ++i)
      for (int j = 0; j < part.cols; ++j) f.coef[k](r0 + i, j) += part.coef[k](i, j);
}

PolyMat1 value_of(const APolyMat1& p, const Vec& v) {
  PolyMat1 out(p.rows, p.cols, p.iv, p.degree());
  for (int k = 0; k <= p.degree(); ++k) out.coef[k] = aff_value(p.coef[k], v);
  return out;
}

PolyMat2 value_of(const APolyMat2& p, const Vec& v) {
  PolyMat2 out(p.rows, p.cols, p.s_iv, p.t_iv, p.s_degree(), p.t_degree());
  for (int k = 0; k <= p.s_degree(); ++k)
    for (int l = 0; l <= p.t_degree(); ++l) out.coef[k][l] = aff_value(p.coef[k][l], v);
  return out;
}

Pqrs value_of(const APqrs& op, const Vec& v) {
  Pqrs out(op.head_dim, op.chan_dim, op.tau, 0, 0, 0);
  out.P = aff_value(op.P, v);
  for (int i = 0; i < op.num_delays(); ++i) {
    out.Q[i] = value_of(op.Q[i], v);
    out.S[i] = value_of(op.S[i], v);
    for (int j = 0; j < op.num_delays(); ++j) out.R[i][j] = value_of(op.R[i][j], v);
  }
  return out;
}

}  // namespace

APqrs make_lyap_family(SdpProblem& sdp, int n, const std::vector<double>& tau, int degree,
                       bool x_preserving) {
  const int kk = static_cast<int>(tau.size());
  const double tk = tau.back();
  APqrs fam(n, n, tau, 0, 0, 0);
  for (int i = 0; i < kk; ++i)
    for (int j = i; j < kk; ++j) {
      if (i == j) {
        fam.R[i][i] = new_tswap_sym_poly2(sdp, n, Interval{-tau[i], 0.0}, degree);
      } else {
        fam.R[i][j] =
            new_poly2(sdp, n, n, Interval{-tau[i], 0.0}, Interval{-tau[j], 0.0}, degree);
        fam.R[j][i] = fam.R[i][j].tswap();
      }
    }
  for (int i = 0; i < kk; ++i) fam.S[i] = new_sym_poly1(sdp, n, Interval{-tau[i], 0.0}, degree);

  if (!x_preserving) {
    for (int j = 0; j < kk; ++j)
      fam.Q[j] = new_poly1(sdp, n, n, Interval{-tau[j], 0.0}, degree);
    fam.P = new_sym(sdp, n);
    return fam;
  }

  for (int j = 0; j < kk; ++j) fam.Q[j] = fam.R[0][j].eval_s(0.0);
  fam.P = tk * (AffMat(fam.Q[0].eval(0.0).transpose()) + fam.S[0].eval(0.0));
  for (int i = 1; i < kk; ++i) {
    for (int j = 0; j < kk; ++j) {
      APolyMat1 bd = fam.R[i][j].eval_s(0.0);
      bd -= fam.Q[j];
      for (const auto& c : bd.coef) emit_zero(sdp, c);
    }
    AffMat pi = tk * (AffMat(fam.Q[i].eval(0.0).transpose()) + fam.S[i].eval(0.0));
    emit_zero(sdp, AffMat(pi - fam.P));
  }
  return fam;
}

ControllerVars make_controller_vars(SdpProblem& sdp, const DelayModel& model, int degree) {
  ControllerVars v{make_lyap_family(sdp, model.n(), model.tau, degree, true),
                   new_mat(sdp, model.m(), model.n()),
                   {},
                   {}};
  for (int i = 0; i < model.K(); ++i) {
    v.H1.push_back(new_mat(sdp, model.m(), model.n()));
    v.H2.push_back(
        new_poly1(sdp, model.m(), model.n(), Interval{-model.tau[i], 0.0}, degree));
  }
  return v;
}

EstimatorVars make_estimator_vars(SdpProblem& sdp, const DelayModel& model, int degree) {
  EstimatorVars v;
  v.lyap = make_lyap_family(sdp, model.n(), model.tau, degree, false);
  const int n = model.n(), q = model.q(), kk = model.K();
  v.Z1 = new_mat(sdp, n, q);
  for (int i = 0; i < kk; ++i) {
    Interval ti{-model.tau[i], 0.0};
    v.Z2.push_back(new_mat(sdp, n, q));
    v.Z3.push_back(new_poly1(sdp, n, q, ti, degree));
    v.Z4.push_back(new_poly1(sdp, n, q, ti, degree));
    v.Z6.push_back(new_poly1(sdp, n, q, ti, degree));
    v.Z5.emplace_back();
    v.Z7.emplace_back();
    for (int j = 0; j < kk; ++j) {
      v.Z5[i].push_back(new_poly1(sdp, n, q, ti, degree));
      v.Z7[i].push_back(new_poly2(sdp, n, q, ti, Interval{-model.tau[j], 0.0}, degree));
    }
  }
  return v;
}

APqrs map_l1(const ControllerVars& vars, const DelayModel& model, double gamma1) {
  const int n = model.n(), kk = model.K(), p = model.p(), r = model.r();
  const double tk = model.tau_max();
  const int m0 = p + r + n + n * kk;
  const int ov = 0, ow = p, ox = p + r;
  auto od = [&](int i) { return p + r + n + i * n; };
  const auto& L = vars.lyap;

  APqrs out(m0, n, model.tau, 0, 0, 0);
  AffMat e = azero(m0, m0);
  set_block(e, ov, ov, aident(p, -gamma1 / tk));
  set_block_sym(e, ov, ow, to_aff(model.D1 / tk));
  set_block(e, ow, ow, aident(r, -gamma1 / tk));
  set_block_sym(e, ow, ox, to_aff(Mat(model.B1.transpose())));

  AffMat e11 = mul(Mat(model.C10 / tk), L.P);
  for (int i = 0; i < kk; ++i)
    e11 += mul(model.C1[i], AffMat(L.Q[i].eval(-model.tau[i]).transpose()));
  set_block_sym(e, ov, ox, e11);

  AffMat e10 = mul(model.A0, L.P) + mul(model.B2, vars.H0);
  for (int i = 0; i < kk; ++i) {
    e10 += tk * mul(model.A[i], AffMat(L.Q[i].eval(-model.tau[i]).transpose()));
    e10 += 0.5 * L.S[i].eval(0.0);
  }
  set_block(e, ox, ox, AffMat(e10 + AffMat(e10.transpose())));

  for (int i = 0; i < kk; ++i) {
    AffMat si = L.S[i].eval(-model.tau[i]);
    set_block_sym(e, ov, od(i), mul(model.C1[i], si));
    set_block_sym(e, ox, od(i), AffMat(tk * mul(model.A[i], si) + mul(model.B2, vars.H1[i])));
    set_block(e, od(i), od(i), AffMat(-si));
  }
  out.P = e;

  for (int i = 0; i < kk; ++i) {
    Interval ti{-model.tau[i], 0.0};
    APolyMat1 f(m0, n, ti, 0);
    APolyMat1 top = lmul(model.C10, L.Q[i]);
    for (int j = 0; j < kk; ++j) top += lmul(model.C1[j], L.R[j][i].eval_s(-model.tau[j]));
    add_poly_rows(f, ov, top * (1.0 / tk));

    APolyMat1 mid = lmul(model.A0, L.Q[i]);
    mid += L.Q[i].derivative();
    for (int j = 0; j < kk; ++j) mid += lmul(model.A[j], L.R[j][i].eval_s(-model.tau[j]));
    mid += lmul(model.B2, vars.H2[i]);
    add_poly_rows(f, ox, mid);
    out.Q[i] = f;

    out.S[i] = L.S[i].derivative();
    for (int j = 0; j < kk; ++j)
      out.R[i][j] = L.R[i][j].partial_s() + L.R[j][i].partial_s().tswap();
  }
  return out;
}

APqrs map_l2(const EstimatorVars& vars, const DelayModel& model, double gamma2) {
  const int n = model.n(), kk = model.K(), p1 = model.p1(), r = model.r(), q = model.q();
  (void)q;
  const double tk = model.tau_max();
  const int m1 = r + p1 + n + n * kk;
  const int ow = 0, ov = r, oe = r + p1;
  auto od = [&](int i) { return r + p1 + n + i * n; };
  const auto& L = vars.lyap;

  APqrs out(m1, n, model.tau, 0, 0, 0);
  AffMat e = azero(m1, m1);
  set_block(e, ow, ow, aident(r, -gamma2 / tk));
  set_block_sym(e, ow, ov, to_aff(Mat(model.D3.transpose() / tk)));
  set_block_sym(e, ow, oe, AffMat(-mul(Mat(model.B1.transpose()), L.P)));
  set_block(e, ov, ov, aident(p1, -gamma2 / tk));
  set_block_sym(e, ov, oe, to_aff(model.C30 / tk));

  AffMat e210 = mul(Mat(model.A0.transpose()), L.P) + mul(L.P, model.A0) +
                mul(Mat(model.C2.transpose()), AffMat(vars.Z1.transpose())) +
                mul(vars.Z1, model.C2);
  for (int k = 0; k < kk; ++k) {
    AffMat q0 = L.Q[k].eval(0.0);
    e210 += q0 + AffMat(q0.transpose()) + L.S[k].eval(0.0);
  }
  set_block(e, oe, oe, e210);

  for (int i = 0; i < kk; ++i) {
    set_block_sym(e, ov, od(i), to_aff(model.C3[i] / tk));
    AffMat e21 = mul(L.P, model.A[i]) - L.Q[i].eval(-model.tau[i]) +
                 mul(vars.Z2[i], model.C2);
    set_block_sym(e, oe, od(i), e21);
    set_block(e, od(i), od(i), AffMat(-L.S[i].eval(-model.tau[i])));
  }
  out.P = e;

  for (int i = 0; i < kk; ++i) {
    Interval ti{-model.tau[i], 0.0};
    APolyMat1 f(m1, n, ti, 0);
    add_poly_rows(f, ow, lmul(Mat(-model.B1.transpose()), L.Q[i]));

    APolyMat1 fe = lmul(Mat(model.A0.transpose()), L.Q[i]);
    fe -= L.Q[i].derivative();
    for (int j = 0; j < kk; ++j)
      fe += lmul(Mat::Identity(n, n) / tk, L.R[i][j].eval_t(0.0).transposed());
    fe += rmul(vars.Z3[i], model.C2);
    fe += lmul(Mat(model.C2.transpose()), vars.Z4[i].transposed());
    add_poly_rows(f, oe, fe);

    for (int j = 0; j < kk; ++j) {
      APolyMat1 fw = lmul(Mat(model.A[j].transpose()), L.Q[i]);
      fw -= L.R[i][j].eval_t(-model.tau[j]).transposed() * (1.0 / tk);
      fw += lmul(Mat(model.C2.transpose()), vars.Z5[i][j].transposed());
      add_poly_rows(f, od(j), fw);
    }
    out.Q[i] = f;

    APolyMat1 ni = -L.S[i].derivative();
    ni += rmul(vars.Z6[i], model.C2);
    ni += lmul(Mat(model.C2.transpose()), vars.Z6[i].transposed());
    out.S[i] = ni;

    for (int j = 0; j < kk; ++j) {
      APolyMat2 g = -L.R[i][j].partial_t();
      g += -(L.R[j][i].partial_t().tswap());
      g += tk * rmul(vars.Z7[i][j], model.C2);
      g += tk * lmul(Mat(model.C2.transpose()), vars.Z7[j][i].tswap());
      out.R[i][j] = g;
    }
  }
  return out;
}

namespace {

APqrs with_coercivity_shift(const APqrs& fam, double eps, double tk, double s_floor) {
  APqrs shifted = fam;
  const int n = fam.head_dim;
  shifted.P = fam.P + aident(n, -eps);
  const double sshift = std::max(eps / tk, s_floor);
  for (auto& s : shifted.S) {
    APolyMat1 sh = s;
    sh.coef[0] += aident(fam.chan_dim, -sshift);
    s = sh;
  }
  return shifted;
}

APqrs with_margin(const APqrs& op, double eps_head, int head_offset, int head_count) {
  APqrs out = op;
  for (int i = 0; i < head_count; ++i)
    out.P(head_offset + i, head_offset + i) += AffExpr(eps_head);
  for (auto& s : out.S) {
    APolyMat1 sh = s;
    sh.coef[0] += aident(op.chan_dim, eps_head);
    s = sh;
  }
  return out;
}

}  // namespace

ControllerProblem build_controller_sdp(const DelayModel& model, double gamma1,
                                       const SynthOptions& opt) {
  require(gamma1 > 0, "gamma1 must be positive");
  ControllerProblem prob;
  prob.vars = make_controller_vars(prob.sdp, model, opt.degree);
  add_xi_membership(prob.sdp,
                    with_coercivity_shift(prob.vars.lyap, opt.eps, model.tau_max(), opt.s_floor),
                    opt.degree);
  APqrs e1 = map_l1(prob.vars, model, gamma1);
  add_xi_membership(prob.sdp, -with_margin(e1, opt.eps1, model.p() + model.r(), model.n()),
                    opt.degree);
  return prob;
}

EstimatorProblem build_estimator_sdp(const DelayModel& model, double gamma2,
                                     const SynthOptions& opt) {
  require(gamma2 > 0, "gamma2 must be positive");
  EstimatorProblem prob;
  prob.vars = make_estimator_vars(prob.sdp, model, opt.degree);
  add_xi_membership(prob.sdp,
                    with_coercivity_shift(prob.vars.lyap, opt.eps, model.tau_max(), opt.s_floor),
                    opt.degree);
  APqrs e2 = map_l2(prob.vars, model, gamma2);
  add_xi_membership(prob.sdp, -with_margin(e2, opt.eps2, model.r() + model.p1(), model.n()),
                    opt.degree);
  return prob;
}

std::optional<ControllerCert> solve_controller(const DelayModel& model, double gamma1,
                                               const SynthOptions& opt) {
  ControllerProblem prob = build_controller_sdp(model, gamma1, opt);
  FeasibilityResult fr = check_feasibility(prob.sdp, opt.sdp);
  if (!fr.feasible) return std::nullopt;
  ControllerCert cert;
  cert.lyap = value_of(prob.vars.lyap, fr.free_vals);
  cert.H0 = aff_value(prob.vars.H0, fr.free_vals);
  for (int i = 0; i < model.K(); ++i) {
    cert.H1.push_back(aff_value(prob.vars.H1[i], fr.free_vals));
    cert.H2.push_back(value_of(prob.vars.H2[i], fr.free_vals));
  }
  cert.gamma1 = gamma1;
  cert.eps = opt.eps;
  cert.eps1 = opt.eps1;
  cert.sdp_margin = fr.margin;
  cert.sdp_residual = fr.primal_residual;
  cert.sdp_iterations = fr.iterations;
  cert.solver_message = fr.message;
  return cert;
}

std::optional<EstimatorCert> solve_estimator(const DelayModel& model, double gamma2,
                                             const SynthOptions& opt) {
  EstimatorProblem prob = build_estimator_sdp(model, gamma2, opt);
  FeasibilityResult fr = check_feasibility(prob.sdp, opt.sdp);
  if (!fr.feasible) return std::nullopt;
  EstimatorCert cert;
  cert.lyap = value_of(prob.vars.lyap, fr.free_vals);
  cert.Z1 = aff_value(prob.vars.Z1, fr.free_vals);
  for (int i = 0; i < model.K(); ++i) {
    cert.Z2.push_back(aff_value(prob.vars.Z2[i], fr.free_vals));
    cert.Z3.push_back(value_of(prob.vars.Z3[i], fr.free_vals));
    cert.Z4.push_back(value_of(prob.vars.Z4[i], fr.free_vals));
    cert.Z6.push_back(value_of(prob.vars.Z6[i], fr.free_vals));
    cert.Z5.emplace_back();
    cert.Z7.emplace_back();
    for (int j = 0; j < model.K(); ++j) {
      cert.Z5[i].push_back(value_of(prob.vars.Z5[i][j], fr.free_vals));
      cert.Z7[i].push_back(value_of(prob.vars.Z7[i][j], fr.free_vals));
    }
  }
  cert.gamma2 = gamma2;
  cert.eps = opt.eps;
  cert.eps2 = opt.eps2;
  cert.sdp_margin = fr.margin;
  cert.sdp_residual = fr.primal_residual;
  cert.sdp_iterations = fr.iterations;
  cert.solver_message = fr.message;
  return cert;
}

double composite_gain(double gamma1, double gamma2, double r) {
  if (!(gamma1 > 0) || !(gamma2 > 0) || !(r >= 0))
    throw DomainError("composite_gain requires positive gains and r >= 0");
  return std::sqrt(gamma1 * (gamma1 + r * gamma2));
}

Pqrs coupling_op(const ControllerGainsView& gains, const DelayModel& model, double eps1,
                 double eps2, double eps3, double r) {
  (void)eps3;
  const int n = model.n(), kk = model.K();
  const double tk = model.tau_max();
  const int head = n * (kk + 2);
  // change of variables e -> sqrt(r) e keeps the blocks O(1) for any r
  const double rho = 1.0 / std::sqrt(r);
  Pqrs op(head, 2 * n, model.tau, 0, 0, 0);
  Mat e3 = Mat::Zero(head, head);
  e3.block(0, 0, n, n) = -eps1 * Mat::Identity(n, n);
  e3.block(n, n, n, n) = -eps2 * Mat::Identity(n, n);
  Mat b2k0 = rho * model.B2 * gains.K0;
  e3.block(0, n, n, n) = b2k0;
  e3.block(n, 0, n, n) = b2k0.transpose();
  for (int i = 0; i < kk; ++i) {
    Mat b2k1 = rho * model.B2 * gains.K1[i];
    e3.block(0, 2 * n + i * n, n, n) = b2k1;
    e3.block(2 * n + i * n, 0, n, n) = b2k1.transpose();
  }
  op.P = e3;
  for (int i = 0; i < kk; ++i) {
    Interval ti{-model.tau[i], 0.0};
    PolyMat1 b2k2 = lmul(model.B2, gains.K2[i]) * rho;
    PolyMat1 f(head, 2 * n, ti, b2k2.degree());
    for (int k = 0; k <= b2k2.degree(); ++k)
      f.coef[k].block(0, 0, n, n) = b2k2.coef[k];
    op.Q[i] = f;
    PolyMat1 ni(2 * n, 2 * n, ti, 0);
    ni.coef[0].block(0, 0, n, n) = -(eps2 / tk) * Mat::Identity(n, n);
    ni.coef[0].block(n, n, n, n) = -(eps1 / tk) * Mat::Identity(n, n);
    op.S[i] = ni;
  }
  return op;
}

bool coupling_feasible(const ControllerGainsView& gains, const DelayModel& model,
                       const SynthOptions& opt, double r) {
  Pqrs op = coupling_op(gains, model, opt.eps1, opt.eps2, opt.eps3, r);
  for (int i = 0; i < model.n(); ++i) op.P(i, i) += opt.eps3;
  int deg = 0;
  for (const auto& k2 : gains.K2) deg = std::max(deg, k2.degree());
  const int dc = std::max(opt.degree, std::max(deg - 2, 0));
  SdpProblem sdp;
  add_xi_membership(sdp, -op, dc);
  return check_feasibility(sdp, opt.sdp).feasible;
}

CouplingResult search_coupling_r(const ControllerGainsView& gains, const DelayModel& model,
                                 const SynthOptions& opt, double gamma1, double gamma2) {
  CouplingResult out;
  const int np = opt.r_points;
  double r_hi = opt.r_hi;
  // the head block needs r*eps1*eps2 to dominate |B2 K|^2; widen the sweep
  // when the configured range cannot contain a feasible point
  for (int tries = 0; tries < 7; ++tries) {
    if (coupling_feasible(gains, model, opt, r_hi)) break;
    ++out.solves;
    r_hi *= 1e3;
    if (tries == 6) {
      out.grid.push_back(opt.r_lo);
      return out;
    }
  }
  for (int i = 0; i < np; ++i)
    out.grid.push_back(opt.r_lo * std::pow(r_hi / opt.r_lo, double(i) / (np - 1)));
  int lo = 0, hi = np - 1;
  if (!coupling_feasible(gains, model, opt, out.grid[hi])) {
    out.solves += 1;
    return out;
  }
  ++out.solves;
  if (coupling_feasible(gains, model, opt, out.grid[lo])) {
    ++out.solves;
    hi = lo;
  } else {
    ++out.solves;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      ++out.solves;
      if (coupling_feasible(gains, model, opt, out.grid[mid]))
        hi = mid;
      else
        lo = mid;
    }
  }
  out.found = true;
  out.r = out.grid[hi];
  out.composite = composite_gain(gamma1, gamma2, out.r);
  return out;
}

ZElement apply_generator(const DelayModel& model, const ZElement& z) {
  ZElement out;
  Mat head = model.A0 * z.head;
  for (int i = 0; i < model.K(); ++i) head += model.A[i] * z.chan[i].eval(-model.tau[i]);
  out.head = head.col(0);
  for (int i = 0; i < model.K(); ++i) out.chan.push_back(z.chan[i].derivative());
  return out;
}

ZElement apply_c2(const DelayModel& model, const ZElement& z) {
  ZElement out;
  out.head = model.C2 * z.head;
  for (int i = 0; i < model.K(); ++i) out.chan.push_back(lmul(model.C2, z.chan[i]));
  return out;
}

ZElement apply_z_vars(const EstimatorCert& cert, double tau_k, const ZElement& y) {
  const int kk = static_cast<int>(cert.Z2.size());
  ZElement out;
  Mat head = cert.Z1 * y.head;
  for (int i = 0; i < kk; ++i) {
    head += cert.Z2[i] * y.chan[i].eval(y.chan[i].iv.lo);
    head += matmul(cert.Z3[i], y.chan[i]).integral();
  }
  out.head = head.col(0);
  for (int i = 0; i < kk; ++i) {
    PolyMat1 c = rmul(cert.Z4[i], Mat(y.head));
    for (int j = 0; j < kk; ++j) {
      PolyMat1 zc = rmul(cert.Z5[i][j], Mat(y.chan[j].eval(y.chan[j].iv.lo)));
      c += zc;
      c += apply_kernel_right(cert.Z7[i][j], y.chan[j]);
    }
    c += matmul(cert.Z6[i], y.chan[i]);
    c *= tau_k;
    out.chan.push_back(std::move(c));
  }
  return out;
}

double theorem2_form(const DelayModel& model, const ControllerCert& cert, const ZElement& h,
                     const Vec& w, const Vec& v) {
  const double tk = model.tau_max();
  ZElement x = op_apply(cert.lyap, h);
  ZElement ax = apply_generator(model, x);
  Mat hh = cert.H0 * h.head;
  for (int i = 0; i < model.K(); ++i) {
    hh += cert.H1[i] * h.chan[i].eval(-model.tau[i]);
    hh += matmul(cert.H2[i], h.chan[i]).integral();
  }
  ax.head += model.B2 * hh.col(0) + model.B1 * w;
  double form = 2.0 * z_inner(ax, h, tk);
  Mat c1x = model.C10 * x.head;
  for (int i = 0; i < model.K(); ++i) c1x += model.C1[i] * x.chan[i].eval(-model.tau[i]);
  form += -cert.gamma1 * w.squaredNorm() - cert.gamma1 * v.squaredNorm();
  form += 2.0 * v.dot(c1x.col(0)) + 2.0 * v.dot(model.D1 * w);
  return form;
}

double theorem3_form(const DelayModel& model, const EstimatorCert& cert, const ZElement& e,
                     const Vec& w, const Vec& ve) {
  const double tk = model.tau_max();
  ZElement ae = apply_generator(model, e);
  ZElement p2ae = op_apply(cert.lyap, ae);
  ZElement zc2e = apply_z_vars(cert, tk, apply_c2(model, e));
  ZElement b1w = z_zero(model.n(), model.n(), model.tau);
  b1w.head = model.B1 * w;
  ZElement p2b1w = op_apply(cert.lyap, b1w);
  double form = 2.0 * z_inner(p2ae, e, tk) + 2.0 * z_inner(zc2e, e, tk) -
                2.0 * z_inner(p2b1w, e, tk);
  Mat c3e = model.C30 * e.head;
  for (int i = 0; i < model.K(); ++i) c3e += model.C3[i] * e.chan[i].eval(-model.tau[i]);
  form += -cert.gamma2 * w.squaredNorm() - cert.gamma2 * ve.squaredNorm();
  form += 2.0 * ve.dot(c3e.col(0)) + 2.0 * ve.dot(model.D3 * w);
  return form;
}

double coupling_form(const ControllerGainsView& gains, const DelayModel& model, double eps1,
                     double eps2, double r, const ZElement& h, const ZElement& e) {
  const double tk = model.tau_max();
  Mat ke = gains.K0 * e.head;
  for (int i = 0; i < model.K(); ++i) {
    ke += gains.K1[i] * e.chan[i].eval(-model.tau[i]);
    ke += matmul(gains.K2[i], e.chan[i]).integral();
  }
  double form = 2.0 * tk * h.head.dot((model.B2 * ke).col(0));
  form += -eps1 * z_norm2(h, tk) - r * eps2 * z_norm2(e, tk);
  return form;
}

}  // namespace delsos
