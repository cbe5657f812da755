#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>

#include "sdp.hpp"

namespace delsos {

namespace {

struct Term3 {
  int i, j;
  double c;
};

struct Prep {
  int m = 0;   // equality count after cleanup
  int nf = 0;  // free vars
  int nb = 0;  // psd blocks
  std::vector<int> dims;
  Vec b;
  Vec cu;
  Mat au;                                          // m x nf dense
  std::vector<std::vector<int>> blk_cons;          // per block: constraint ids
  std::vector<std::vector<std::vector<Term3>>> blk_terms;  // aligned with blk_cons
  bool trivially_infeasible = false;
  std::string message;
};

Prep preprocess(const SdpProblem& prob) {
  Prep p;
  p.nf = prob.num_free;
  p.nb = static_cast<int>(prob.psd_dims.size());
  p.dims = prob.psd_dims;
  p.blk_cons.resize(p.nb);
  p.blk_terms.resize(p.nb);

  std::vector<Vec> rows;
  std::vector<double> rhs;
  std::vector<std::vector<std::map<std::pair<int, int>, double>>> merged;

  int kept = 0;
  p.au = Mat::Zero(static_cast<int>(prob.eqs.size()), p.nf);
  std::vector<double> bb;
  std::vector<std::vector<std::pair<int, std::vector<Term3>>>> per_con_blocks;

  for (const auto& eq : prob.eqs) {
    std::map<std::pair<int, std::pair<int, int>>, double> acc;
    for (const auto& t : eq.psd) {
      int i = std::min(t.i, t.j), j = std::max(t.i, t.j);
      acc[{t.block, {i, j}}] += t.coef;
    }
    std::map<int, double> fr;
    for (const auto& [v, c] : eq.free_vars) fr[v] += c;

    double scale = 0.0;
    for (const auto& [k, c] : acc) scale = std::max(scale, std::abs(c));
    for (const auto& [v, c] : fr) scale = std::max(scale, std::abs(c));

    if (scale < 1e-14) {
      if (std::abs(eq.rhs) > 1e-10) {
        p.trivially_infeasible = true;
        p.message = "inconsistent constant equality";
        return p;
      }
      continue;
    }
    const double inv = 1.0 / scale;
    std::map<int, std::vector<Term3>> by_block;
    for (const auto& [key, c] : acc) {
      if (std::abs(c) < 1e-15 * scale) continue;
      by_block[key.first].push_back({key.second.first, key.second.second, c * inv});
    }
    std::vector<std::pair<int, std::vector<Term3>>> blocks(by_block.begin(), by_block.end());
    per_con_blocks.push_back(std::move(blocks));
    for (const auto& [v, c] : fr)
      if (std::abs(c) > 1e-15 * scale) p.au(kept, v) = c * inv;
    bb.push_back(eq.rhs * inv);
    ++kept;
  }
  p.m = kept;
  p.au.conservativeResize(kept, p.nf);
  p.b = Eigen::Map<Vec>(bb.data(), kept);
  p.cu = Vec::Zero(p.nf);
  for (const auto& [v, c] : prob.obj_free) p.cu(v) += c;

  for (int k = 0; k < kept; ++k)
    for (auto& [blk, terms] : per_con_blocks[k]) {
      p.blk_cons[blk].push_back(k);
      p.blk_terms[blk].push_back(std::move(terms));
    }
  return p;
}

double dot_con(const std::vector<Term3>& terms, const Mat& v) {
  double acc = 0.0;
  for (const auto& t : terms) acc += t.c * v(t.i, t.j);
  return acc;
}

void add_adj(const std::vector<Term3>& terms, double y, Mat& out) {
  for (const auto& t : terms) {
    if (t.i == t.j) {
      out(t.i, t.i) += y * t.c;
    } else {
      out(t.i, t.j) += 0.5 * y * t.c;
      out(t.j, t.i) += 0.5 * y * t.c;
    }
  }
}

// tr(A X B Sinv) for symmetric elementary A=(i,j,ca), B=(p,q,cb) with the
// off-diagonal halves folded in.
inline double pair_quad(const Mat& x, const Mat& sinv, const Term3& a, const Term3& b) {
  const double wa = (a.i == a.j) ? a.c : 0.5 * a.c;
  const double wb = (b.i == b.j) ? b.c : 0.5 * b.c;
  double acc = x(a.j, b.i) * sinv(b.j, a.i);
  if (b.i != b.j) acc += x(a.j, b.j) * sinv(b.i, a.i);
  if (a.i != a.j) {
    acc += x(a.i, b.i) * sinv(b.j, a.j);
    if (b.i != b.j) acc += x(a.i, b.j) * sinv(b.i, a.j);
  }
  return wa * wb * acc;
}

double max_step(const Mat& x, const Mat& dx) {
  Eigen::LLT<Mat> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  Mat l = llt.matrixL();
  Mat w = l.triangularView<Eigen::Lower>().solve(dx);
  w = l.triangularView<Eigen::Lower>().solve(Mat(w.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w + w.transpose()), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= -1e-14) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& prob, const SdpSettings& st) {
  Prep p = preprocess(prob);
  SdpSolution sol;
  if (p.trivially_infeasible) {
    sol.status = SdpStatus::Infeasible;
    sol.message = p.message;
    return sol;
  }
  const int m = p.m, nf = p.nf, nb = p.nb;
  int ntot = 0;
  for (int d : p.dims) ntot += d;

  const double bnorm = m ? p.b.cwiseAbs().maxCoeff() : 0.0;
  const double cnorm = nf ? p.cu.cwiseAbs().maxCoeff() : 0.0;
  const double xi_p = std::min(1e4, 10.0 * (1.0 + bnorm));
  const double xi_d = std::min(1e4, 10.0 * (1.0 + cnorm));

  std::vector<Mat> x(nb), s(nb), sinv(nb), rd(nb), e(nb), v2(nb), dxa(nb), dsa(nb), dx(nb), ds(nb);
  for (int bk = 0; bk < nb; ++bk) {
    x[bk] = xi_p * Mat::Identity(p.dims[bk], p.dims[bk]);
    s[bk] = xi_d * Mat::Identity(p.dims[bk], p.dims[bk]);
  }
  Vec u = Vec::Zero(nf), y = Vec::Zero(m);

  auto apply_a = [&](const std::vector<Mat>& xs, const Vec& uu) {
    Vec out = p.au * uu;
    for (int bk = 0; bk < nb; ++bk)
      for (size_t t = 0; t < p.blk_cons[bk].size(); ++t)
        out(p.blk_cons[bk][t]) += dot_con(p.blk_terms[bk][t], xs[bk]);
    return out;
  };

  Mat schur(m, m);
  int stall = 0;

  struct Snapshot {
    double score = std::numeric_limits<double>::infinity();
    std::vector<Mat> x;
    Vec u, y;
    double pobj = 0, dobj = 0, rp = 0, rd = 0, gap = 0;
  } best;
  auto finish = [&](SdpSolution& so) {
    if (best.score < std::numeric_limits<double>::infinity()) {
      so.free_vals = best.u;
      so.psd_vals = best.x;
      so.primal_obj = best.pobj;
      so.dual_obj = best.dobj;
      so.primal_residual = best.rp;
      so.dual_residual = best.rd;
      so.rel_gap = best.gap;
      if (so.status == SdpStatus::NumericalFailure && best.score < 1e-6) {
        so.status = SdpStatus::Optimal;
        so.message += " (best iterate near optimal)";
      }
    } else {
      so.free_vals = u;
      so.psd_vals = x;
    }
  };

  for (int iter = 0; iter < st.max_iter; ++iter) {
    sol.iterations = iter;
    for (int bk = 0; bk < nb; ++bk) {
      Eigen::LLT<Mat> llt(s[bk]);
      if (llt.info() != Eigen::Success) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "dual block lost positive definiteness";
        finish(sol);
        return sol;
      }
      sinv[bk] = llt.solve(Mat::Identity(p.dims[bk], p.dims[bk]));
    }

    Vec rp = p.b - apply_a(x, u);
    for (int bk = 0; bk < nb; ++bk) {
      Mat adj = Mat::Zero(p.dims[bk], p.dims[bk]);
      for (size_t t = 0; t < p.blk_cons[bk].size(); ++t)
        add_adj(p.blk_terms[bk][t], y(p.blk_cons[bk][t]), adj);
      rd[bk] = -adj - s[bk];
    }
    Vec rf = p.cu - p.au.transpose() * y;

    double mu = 0.0;
    for (int bk = 0; bk < nb; ++bk) mu += (x[bk].array() * s[bk].array()).sum();
    mu /= std::max(1, ntot);

    const double pobj = p.cu.dot(u);
    const double dobj = p.b.dot(y);
    const double rp_rel = (m ? rp.cwiseAbs().maxCoeff() : 0.0) / (1.0 + bnorm);
    double rd_abs = nf ? rf.cwiseAbs().maxCoeff() : 0.0;
    for (int bk = 0; bk < nb; ++bk) rd_abs = std::max(rd_abs, rd[bk].cwiseAbs().maxCoeff());
    const double rd_rel = rd_abs / (1.0 + cnorm);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    sol.primal_obj = pobj;
    sol.dual_obj = dobj;
    sol.primal_residual = rp_rel;
    sol.dual_residual = rd_rel;
    sol.rel_gap = gap;

    if (st.verbose)
      std::fprintf(stderr, "ipm %3d mu=%9.2e rp=%9.2e rd=%9.2e gap=%9.2e p=%12.5e d=%12.5e\n",
                   iter, mu, rp_rel, rd_rel, gap, pobj, dobj);

    if (!std::isfinite(mu) || !std::isfinite(rp_rel) || !std::isfinite(rd_rel)) {
      sol.status = SdpStatus::NumericalFailure;
      sol.message = "non-finite iterate";
      finish(sol);
      return sol;
    }
    const double score = std::max({rp_rel, rd_rel, gap});
    if (score < best.score) {
      best.score = score;
      best.x = x;
      best.u = u;
      best.y = y;
      best.pobj = pobj;
      best.dobj = dobj;
      best.rp = rp_rel;
      best.rd = rd_rel;
      best.gap = gap;
    }
    if (pobj < st.stop_primal_below && rp_rel < st.early_primal_res) {
      sol.status = SdpStatus::Optimal;
      sol.message = "early stop: primal objective target reached";
      break;
    }
    if (dobj > st.stop_dual_above && rd_rel < st.early_dual_res) {
      sol.status = SdpStatus::Optimal;
      sol.message = "early stop: dual bound target reached";
      break;
    }
    if (rp_rel < 10 * st.tol && rd_rel < 10 * st.tol && gap < 30 * st.tol) {
      sol.status = SdpStatus::Optimal;
      sol.message = "converged";
      break;
    }
    if (mu < 1e-15 * (1.0 + std::abs(pobj))) {
      sol.status = best.score < 1e-6 ? SdpStatus::Optimal : SdpStatus::NumericalFailure;
      sol.message = "complementarity exhausted";
      break;
    }

    // Schur complement M_kl = sum_beta tr(A_k X A_l Sinv), symmetrized
    schur.setZero();
    for (int bk = 0; bk < nb; ++bk) {
      const auto& cons = p.blk_cons[bk];
      const auto& terms = p.blk_terms[bk];
      for (size_t a = 0; a < cons.size(); ++a)
        for (size_t c = a; c < cons.size(); ++c) {
          double acc = 0.0;
          for (const auto& ta : terms[a])
            for (const auto& tb : terms[c]) acc += pair_quad(x[bk], sinv[bk], ta, tb);
          schur(cons[a], cons[c]) += acc;
          if (cons[a] != cons[c]) schur(cons[c], cons[a]) += acc;
        }
    }
    schur = 0.5 * (schur + schur.transpose());

    double jitter = 1e-13 * (1.0 + schur.trace() / std::max(1, m));
    Eigen::LLT<Mat> lm;
    for (int tries = 0;; ++tries) {
      lm.compute(schur + jitter * Mat::Identity(m, m));
      if (lm.info() == Eigen::Success) break;
      jitter *= 1e3;
      if (tries > 6) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "schur factorization failed";
        finish(sol);
        return sol;
      }
    }
    Mat zu;
    Eigen::LLT<Mat> lf;
    if (nf > 0) {
      zu = lm.solve(p.au);
      Mat f = p.au.transpose() * zu;
      double jf = 1e-12 * (1.0 + f.trace() / std::max(1, nf));
      for (int tries = 0;; ++tries) {
        lf.compute(f + jf * Mat::Identity(nf, nf));
        if (lf.info() == Eigen::Success) break;
        jf *= 1e3;
        if (tries > 6) {
          sol.status = SdpStatus::NumericalFailure;
          sol.message = "free-variable reduction failed";
          finish(sol);
          return sol;
        }
      }
    }
    auto saddle_once = [&](const Vec& h, const Vec& g, Vec& dy, Vec& du) {
      Vec w = lm.solve(h);
      if (nf > 0) {
        du = lf.solve(p.au.transpose() * w - g);
        dy = w - zu * du;
      } else {
        du.resize(0);
        dy = w;
      }
    };
    auto saddle = [&](const Vec& h, Vec& dy, Vec& du) {
      saddle_once(h, rf, dy, du);
      for (int pass = 0; pass < 2; ++pass) {
        Vec r1 = h - schur * dy;
        Vec r2(nf);
        if (nf > 0) {
          r1 -= p.au * du;
          r2 = rf - p.au.transpose() * dy;
        }
        Vec cy, cu;
        saddle_once(r1, nf > 0 ? r2 : Vec(), cy, cu);
        dy += cy;
        if (nf > 0) du += cu;
      }
    };

    // predictor
    Vec h = rp;
    for (int bk = 0; bk < nb; ++bk) {
      Mat xe = x[bk] * rd[bk] * sinv[bk];
      e[bk] = 0.5 * (xe + xe.transpose());
      Mat v1 = -x[bk] - e[bk];
      for (size_t t = 0; t < p.blk_cons[bk].size(); ++t)
        h(p.blk_cons[bk][t]) -= dot_con(p.blk_terms[bk][t], v1);
    }
    Vec dya, dua;
    saddle(h, dya, dua);
    double ap_aff = 1.0, ad_aff = 1.0;
    for (int bk = 0; bk < nb; ++bk) {
      Mat adj = Mat::Zero(p.dims[bk], p.dims[bk]);
      for (size_t t = 0; t < p.blk_cons[bk].size(); ++t)
        add_adj(p.blk_terms[bk][t], dya(p.blk_cons[bk][t]), adj);
      dsa[bk] = rd[bk] - adj;
      Mat w = x[bk] * dsa[bk] * sinv[bk];
      dxa[bk] = -x[bk] - 0.5 * (w + w.transpose());
      ap_aff = std::min(ap_aff, max_step(x[bk], dxa[bk]));
      ad_aff = std::min(ad_aff, max_step(s[bk], dsa[bk]));
    }
    double mu_aff = 0.0;
    for (int bk = 0; bk < nb; ++bk)
      mu_aff += ((x[bk] + ap_aff * dxa[bk]).array() * (s[bk] + ad_aff * dsa[bk]).array()).sum();
    mu_aff = std::max(0.0, mu_aff / std::max(1, ntot));
    double sigma = std::clamp(std::pow(mu_aff / std::max(mu, 1e-300), 3.0), 1e-8, 1.0);

    // corrector
    h = rp;
    for (int bk = 0; bk < nb; ++bk) {
      Mat w = dxa[bk] * dsa[bk] * sinv[bk];
      v2[bk] = sigma * mu * sinv[bk] - x[bk] - e[bk] - 0.5 * (w + w.transpose());
      for (size_t t = 0; t < p.blk_cons[bk].size(); ++t)
        h(p.blk_cons[bk][t]) -= dot_con(p.blk_terms[bk][t], v2[bk]);
    }
    Vec dy, du;
    saddle(h, dy, du);
    double ap = 1.0, ad = 1.0;
    for (int bk = 0; bk < nb; ++bk) {
      Mat adj = Mat::Zero(p.dims[bk], p.dims[bk]);
      for (size_t t = 0; t < p.blk_cons[bk].size(); ++t)
        add_adj(p.blk_terms[bk][t], dy(p.blk_cons[bk][t]), adj);
      ds[bk] = rd[bk] - adj;
      Mat w = (x[bk] * ds[bk] + dxa[bk] * dsa[bk]) * sinv[bk];
      dx[bk] = sigma * mu * sinv[bk] - x[bk] - 0.5 * (w + w.transpose());
      ap = std::min(ap, 0.95 * max_step(x[bk], dx[bk]));
      ad = std::min(ad, 0.95 * max_step(s[bk], ds[bk]));
    }
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    if (ap < 1e-10 && ad < 1e-10) {
      if (++stall >= 3) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "step lengths collapsed";
        break;
      }
    } else {
      stall = 0;
    }
    for (int bk = 0; bk < nb; ++bk) {
      Mat xn = x[bk] + ap * dx[bk];
      Mat sn = s[bk] + ad * ds[bk];
      x[bk] = 0.5 * (xn + xn.transpose());
      s[bk] = 0.5 * (sn + sn.transpose());
    }
    u += ap * du;
    y += ad * dy;
    if (iter == st.max_iter - 1) {
      sol.status = SdpStatus::NumericalFailure;
      sol.message = "iteration limit reached";
    }
  }
  if (sol.message.empty()) {
    sol.status = SdpStatus::NumericalFailure;
    sol.message = "iteration limit reached";
  }
  finish(sol);
  return sol;
}

}  // namespace delsos
