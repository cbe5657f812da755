#include "sos.hpp"

#include <map>
#include <tuple>

namespace delsos {

namespace {

bool aff_nonzero(const AffExpr& e) {
  if (std::abs(e.c) > 1e-14) return true;
  return !e.compressed(1e-14).empty();
}

struct ConAcc {
  std::map<std::tuple<int, int, int>, double> psd;
  std::map<int, double> fv;
  double rhs = 0.0;

  void add_psd(int blk, int i, int j, double c) {
    if (i > j) std::swap(i, j);
    psd[{blk, i, j}] += c;
  }
  void sub_target(const AffExpr& e) {
    for (const auto& [v, a] : e.compressed()) fv[v] -= a;
    rhs += e.c;
  }
  void emit(SdpProblem& sdp) {
    SdpConstraint c;
    for (const auto& [key, coef] : psd)
      c.psd.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), coef});
    for (const auto& [v, coef] : fv) c.free_vars.emplace_back(v, coef);
    c.rhs = rhs;
    sdp.eqs.push_back(std::move(c));
  }
};

AffExpr coef_or_zero(const APolyMat1& p, int k, int a, int b) {
  if (k > p.degree()) return AffExpr(0.0);
  return p.coef[k](a, b);
}
AffExpr coef_or_zero(const APolyMat2& p, int k, int l, int a, int b) {
  if (k > p.s_degree() || l > p.t_degree()) return AffExpr(0.0);
  return p.coef[k][l](a, b);
}

}  // namespace

APqrs aff_op(const Pqrs& op) {
  APqrs a(op.head_dim, op.chan_dim, op.tau, 0, 0, 0);
  a.P = to_aff(op.P);
  for (int i = 0; i < op.num_delays(); ++i) {
    a.Q[i] = APolyMat1(op.head_dim, op.chan_dim, op.Q[i].iv, op.Q[i].degree());
    for (int k = 0; k <= op.Q[i].degree(); ++k) a.Q[i].coef[k] = to_aff(op.Q[i].coef[k]);
    a.S[i] = APolyMat1(op.chan_dim, op.chan_dim, op.S[i].iv, op.S[i].degree());
    for (int k = 0; k <= op.S[i].degree(); ++k) a.S[i].coef[k] = to_aff(op.S[i].coef[k]);
    for (int j = 0; j < op.num_delays(); ++j) {
      const auto& r = op.R[i][j];
      a.R[i][j] = APolyMat2(op.chan_dim, op.chan_dim, r.s_iv, r.t_iv, r.s_degree(), r.t_degree());
      for (int k = 0; k <= r.s_degree(); ++k)
        for (int l = 0; l <= r.t_degree(); ++l) a.R[i][j].coef[k][l] = to_aff(r.coef[k][l]);
    }
  }
  return a;
}

XiBlocks add_xi_membership(SdpProblem& sdp, const Pqrs& op, int cert_degree) {
  return add_xi_membership(sdp, aff_op(op), cert_degree);
}

// Joint Gram certificate: <z, op z> is written as
//   [x; mu]^T M [x; mu] + sum_i int_{T_i} zeta_i(s)^T (T_i + g_i(s) U_i) zeta_i(s) ds
// with zeta_i(s) = [x; Z_d(s) (x) phi_i(s); mu], mu the stacked channel moments
// int (Z_d (x) I) phi_j, and g_i(s) = -s(s+tau_i) >= 0 on [-tau_i, 0]. M, T_i,
// U_i >= 0 certify nonnegativity; the identification below matches the
// generated (P, Q_i, S_i, R_ij) coefficients against the operator's.
XiBlocks add_xi_membership(SdpProblem& sdp, const APqrs& op, int dc) {
  const int m = op.head_dim, n = op.chan_dim, kk = op.num_delays();
  const double tk = op.tau_max();

  AffMat ph = 0.5 * (op.P + AffMat(op.P.transpose()));
  std::vector<APolyMat1> ssym;
  std::vector<std::vector<APolyMat2>> rsym(kk, std::vector<APolyMat2>(kk));
  for (int i = 0; i < kk; ++i) {
    ssym.push_back((op.S[i] + op.S[i].transposed()) * 0.5);
    for (int j = i; j < kk; ++j) rsym[i][j] = (op.R[i][j] + op.R[j][i].tswap()) * 0.5;
  }

  for (int i = 0; i < kk; ++i) {
    if (op.Q[i].degree() > dc + 2)
      throw StructuralError("xi: certificate degree too small for Q");
    if (ssym[i].degree() > 2 * dc + 2)
      throw StructuralError("xi: certificate degree too small for S");
    for (int j = i; j < kk; ++j)
      if (rsym[i][j].s_degree() > dc || rsym[i][j].t_degree() > dc)
        throw StructuralError("xi: certificate degree too small for R");
  }

  bool any_r = false;
  for (int i = 0; i < kk && !any_r; ++i)
    for (int j = i; j < kk && !any_r; ++j)
      for (const auto& row : rsym[i][j].coef)
        for (const auto& mcoef : row)
          for (Eigen::Index a = 0; a < mcoef.rows() && !any_r; ++a)
            for (Eigen::Index b = 0; b < mcoef.cols(); ++b)
              if (aff_nonzero(mcoef(a, b))) {
                any_r = true;
                break;
              }

  XiBlocks blocks;
  blocks.cert_degree = dc;
  const int nmono = dc + 1;
  const int musz = any_r ? kk * n * nmono : 0;
  if (any_r) blocks.moment = sdp.add_psd_block(m + musz);
  for (int i = 0; i < kk; ++i) {
    blocks.t_blocks.push_back(sdp.add_psd_block(m + n * nmono + musz));
    blocks.u_blocks.push_back(sdp.add_psd_block(m + n * nmono + musz));
  }

  auto eta = [&](int l, int a) { return m + l * n + a; };
  auto wmu = [&](int j, int l, int a) { return m + n * nmono + (j * nmono + l) * n + a; };
  auto mmu = [&](int j, int l, int a) { return m + (j * nmono + l) * n + a; };

  // head
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      ConAcc con;
      if (any_r) con.add_psd(blocks.moment, a, b, 1.0);
      for (int i = 0; i < kk; ++i) {
        con.add_psd(blocks.t_blocks[i], a, b, op.tau[i]);
        con.add_psd(blocks.u_blocks[i], a, b, std::pow(op.tau[i], 3) / 6.0);
      }
      con.sub_target(tk * ph(a, b));
      con.emit(sdp);
    }

  // cross terms x-phi_j
  for (int j = 0; j < kk; ++j) {
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < n; ++b)
        for (int k = 0; k <= dc + 2; ++k) {
          ConAcc con;
          if (k <= dc) {
            con.add_psd(blocks.t_blocks[j], a, eta(k, b), 1.0);
            if (any_r) {
              con.add_psd(blocks.moment, a, mmu(j, k, b), 1.0);
              for (int c = 0; c < kk; ++c) {
                con.add_psd(blocks.t_blocks[c], a, wmu(j, k, b), op.tau[c]);
                con.add_psd(blocks.u_blocks[c], a, wmu(j, k, b), std::pow(op.tau[c], 3) / 6.0);
              }
            }
          }
          if (k - 1 >= 0 && k - 1 <= dc)
            con.add_psd(blocks.u_blocks[j], a, eta(k - 1, b), -op.tau[j]);
          if (k - 2 >= 0 && k - 2 <= dc) con.add_psd(blocks.u_blocks[j], a, eta(k - 2, b), -1.0);
          con.sub_target(tk * coef_or_zero(op.Q[j], k, a, b));
          con.emit(sdp);
        }
  }

  // pointwise multipliers
  for (int i = 0; i < kk; ++i) {
    const int kmax = 2 * dc + 2;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int k = 0; k <= kmax; ++k) {
          ConAcc con;
          for (int l = 0; l <= dc; ++l) {
            const int l2 = k - l;
            if (l2 >= 0 && l2 <= dc) con.add_psd(blocks.t_blocks[i], eta(l, a), eta(l2, b), 1.0);
            const int l2u1 = k - 1 - l;
            if (l2u1 >= 0 && l2u1 <= dc)
              con.add_psd(blocks.u_blocks[i], eta(l, a), eta(l2u1, b), -op.tau[i]);
            const int l2u2 = k - 2 - l;
            if (l2u2 >= 0 && l2u2 <= dc)
              con.add_psd(blocks.u_blocks[i], eta(l, a), eta(l2u2, b), -1.0);
          }
          con.sub_target(tk * coef_or_zero(ssym[i], k, a, b));
          con.emit(sdp);
        }
  }

  // kernels (symmetrized pair targets, i <= j)
  if (any_r) {
    for (int i = 0; i < kk; ++i)
      for (int j = i; j < kk; ++j)
        for (int k = 0; k <= dc + 2; ++k)
          for (int l = 0; l <= dc + 2; ++l) {
            if (k > dc && l > dc) continue;
            if (i == j && k > l) continue;
            for (int a = 0; a < n; ++a)
              for (int b = 0; b < n; ++b) {
                if (i == j && k == l && a > b) continue;
                ConAcc con;
                if (k <= dc && l <= dc) {
                  con.add_psd(blocks.moment, mmu(i, k, a), mmu(j, l, b), 1.0);
                  for (int c = 0; c < kk; ++c) {
                    con.add_psd(blocks.t_blocks[c], wmu(i, k, a), wmu(j, l, b), op.tau[c]);
                    con.add_psd(blocks.u_blocks[c], wmu(i, k, a), wmu(j, l, b),
                                std::pow(op.tau[c], 3) / 6.0);
                  }
                }
                // eta_i(s) x mu_j cross inside W_i: s-degree k from T at k,
                // from U at k-1 (coef -tau_i) and k-2 (coef -1); theta-degree l <= dc
                if (l <= dc) {
                  if (k <= dc) con.add_psd(blocks.t_blocks[i], eta(k, a), wmu(j, l, b), 1.0);
                  if (k - 1 >= 0 && k - 1 <= dc)
                    con.add_psd(blocks.u_blocks[i], eta(k - 1, a), wmu(j, l, b), -op.tau[i]);
                  if (k - 2 >= 0 && k - 2 <= dc)
                    con.add_psd(blocks.u_blocks[i], eta(k - 2, a), wmu(j, l, b), -1.0);
                }
                // eta_j(theta) x mu_i cross inside W_j (transpose-swapped side)
                if (k <= dc) {
                  if (l <= dc) con.add_psd(blocks.t_blocks[j], eta(l, b), wmu(i, k, a), 1.0);
                  if (l - 1 >= 0 && l - 1 <= dc)
                    con.add_psd(blocks.u_blocks[j], eta(l - 1, b), wmu(i, k, a), -op.tau[j]);
                  if (l - 2 >= 0 && l - 2 <= dc)
                    con.add_psd(blocks.u_blocks[j], eta(l - 2, b), wmu(i, k, a), -1.0);
                }
                con.sub_target(coef_or_zero(rsym[i][j], k, l, a, b));
                con.emit(sdp);
              }
          }
  }
  return blocks;
}

}  // namespace delsos
