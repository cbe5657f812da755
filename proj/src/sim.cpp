#include "sim.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

namespace delsos {

double disturbance_value(const Disturbance& d, double t) {
  switch (d.kind) {
    case DisturbanceKind::Zero:
      return 0.0;
    case DisturbanceKind::StepLike: {
      if (t < d.onset) return 0.0;
      if (t < d.onset + d.ramp) return d.amplitude * (t - d.onset) / d.ramp;
      return d.amplitude;
    }
    case DisturbanceKind::Sinc: {
      const double a = M_PI * (t - d.center);
      if (std::abs(a) < 1e-9) return d.amplitude;
      return d.amplitude * std::sin(a) / a;
    }
    case DisturbanceKind::Custom: {
      if (d.samples.empty() || d.sample_dt <= 0) throw DomainError("custom disturbance has no samples");
      const double idx = t / d.sample_dt;
      const long i0 = static_cast<long>(std::floor(idx));
      if (i0 < 0) return d.samples.front();
      if (i0 + 1 >= static_cast<long>(d.samples.size())) return d.samples.back();
      const double frac = idx - i0;
      return (1.0 - frac) * d.samples[i0] + frac * d.samples[i0 + 1];
    }
  }
  throw DomainError("unknown disturbance kind");
}

const char* to_string(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::Zero: return "zero";
    case DisturbanceKind::StepLike: return "step";
    case DisturbanceKind::Sinc: return "sinc";
    default: return "custom";
  }
}

DisturbanceKind disturbance_from_string(const std::string& s) {
  if (s == "zero") return DisturbanceKind::Zero;
  if (s == "step" || s == "step-like") return DisturbanceKind::StepLike;
  if (s == "sinc") return DisturbanceKind::Sinc;
  if (s == "custom") return DisturbanceKind::Custom;
  throw ParseError("unknown disturbance kind: " + s);
}

double SimConfig::resolved_dt(const std::vector<double>& tau) const {
  if (dt > 0) return dt;
  return 0.5 * tau.front() / points_per_channel;
}

double SimConfig::resolved_horizon(const std::vector<double>& tau) const {
  if (horizon > 0) return horizon;
  return 40.0 * tau.back();
}

void SimConfig::validate(const std::vector<double>& tau) const {
  if (points_per_channel < 2) throw DomainError("points_per_channel must be at least 2");
  const double h = resolved_dt(tau);
  if (!(h > 0)) throw DomainError("dt must be positive");
  if (h > tau.front() / points_per_channel + 1e-12)
    throw DomainError("dt violates the transport stability bound min(tau)/points_per_channel");
}


namespace {

// rough spectral scale of the correction terms, used to keep the explicit
// stepper stable when the synthesized gains are aggressive
double gain_stiffness(const DelayModel& model, const ControllerGains* ctrl,
                      const ObserverGains* obs) {
  double s = model.A0.cwiseAbs().rowwise().sum().maxCoeff();
  for (const auto& a : model.A) s += a.cwiseAbs().rowwise().sum().maxCoeff();
  const double c2 = model.C2.cwiseAbs().maxCoeff();
  auto pnorm = [](const PolyMat1& p) {
    double m = 0.0;
    for (int i = 0; i <= 8; ++i)
      m = std::max(m, p.eval(p.iv.lo + (p.iv.hi - p.iv.lo) * i / 8.0).cwiseAbs().maxCoeff());
    return m;
  };
  if (ctrl) {
    double k = model.B2.cwiseAbs().maxCoeff() *
               (ctrl->K0.cwiseAbs().maxCoeff() + 1.0);
    for (size_t i = 0; i < ctrl->K1.size(); ++i)
      k += ctrl->K1[i].cwiseAbs().maxCoeff() + pnorm(ctrl->K2[i]);
    s += k;
  }
  if (obs) {
    double l = obs->L1.cwiseAbs().maxCoeff();
    for (size_t i = 0; i < obs->L2.size(); ++i) {
      l += obs->L2[i].cwiseAbs().maxCoeff();
      l += pnorm(obs->L3[i]) + pnorm(obs->L4[i]) + pnorm(obs->L6[i]);
      for (size_t j = 0; j < obs->L5[i].size(); ++j) {
        l += pnorm(obs->L5[i][j]);
        double l7 = 0.0;
        for (int a = 0; a <= 4; ++a)
          for (int b = 0; b <= 4; ++b)
            l7 = std::max(l7, obs->L7[i][j]
                                  .eval(-model.tau[i] * a / 4.0, -model.tau[j] * b / 4.0)
                                  .cwiseAbs()
                                  .maxCoeff());
        l += l7 * model.tau[j];
      }
    }
    s += l * std::max(1.0, c2);
  }
  return s;
}

}  // namespace

SimTrace run_sim(const DelayModel& model, const ControllerGains* ctrl, const ObserverGains* obs,
                 const SimConfig& cfg) {
  cfg.validate(model.tau);
  const int n = model.n(), kk = model.K(), rr = model.r(), mm = model.m(), qq = model.q();
  const int pp = model.p(), pp1 = model.p1();
  const int npts = cfg.points_per_channel;
  double h = cfg.resolved_dt(model.tau);
  if (cfg.dt <= 0) {
    const double stiff = gain_stiffness(model, ctrl, obs);
    if (stiff > 0) h = std::min(h, 1.0 / stiff);
  }
  const double tend = cfg.resolved_horizon(model.tau);
  const long steps = static_cast<long>(std::ceil(tend / h));

  // channel grids: node j at s = -tau_i * (1 - j/(npts-1)), node npts-1 is s = 0
  std::vector<Vec> grid(kk);
  std::vector<double> dels(kk);
  for (int i = 0; i < kk; ++i) {
    grid[i] = Vec(npts);
    for (int j = 0; j < npts; ++j) grid[i](j) = -model.tau[i] * (1.0 - double(j) / (npts - 1));
    dels[i] = model.tau[i] / (npts - 1);
  }

  // precomputed gain samples on the grids
  std::vector<std::vector<Mat>> k2s(kk), l3s(kk), l4s(kk), l6s(kk);
  std::vector<std::vector<std::vector<Mat>>> l5s(kk), l7s(kk);
  for (int i = 0; i < kk; ++i) {
    if (ctrl) {
      k2s[i].resize(npts);
      for (int j = 0; j < npts; ++j) k2s[i][j] = ctrl->K2[i].eval(grid[i](j));
    }
    if (obs) {
      l3s[i].resize(npts);
      l4s[i].resize(npts);
      l6s[i].resize(npts);
      l5s[i].resize(npts);
      l7s[i].resize(npts);
      for (int j = 0; j < npts; ++j) {
        l3s[i][j] = obs->L3[i].eval(grid[i](j));
        l4s[i][j] = obs->L4[i].eval(grid[i](j));
        l6s[i][j] = obs->L6[i].eval(grid[i](j));
        l5s[i][j].resize(kk);
        l7s[i][j].resize(kk);
        for (int c = 0; c < kk; ++c) {
          l5s[i][j][c] = obs->L5[i][c].eval(grid[i](j));
          l7s[i][j][c] = Mat(n, qq * npts);
          for (int g2 = 0; g2 < npts; ++g2)
            l7s[i][j][c].block(0, g2 * qq, n, qq) = obs->L7[i][c].eval(grid[i](j), grid[c](g2));
        }
      }
    }
  }

  auto trapz_w = [&](int i, int j) {
    return (j == 0 || j == npts - 1) ? 0.5 * dels[i] : dels[i];
  };

  Vec x0 = cfg.x0.size() ? cfg.x0 : Vec::Zero(n);
  require(x0.size() == n, "x0 dimension mismatch");

  Vec x = x0;
  Vec xh = Vec::Zero(n);
  // plant history channels share the estimator's transport discretization so
  // that the discrete error dynamics decouple from the plant state exactly
  std::vector<Mat> psi(kk), phi(kk);  // n x npts true / estimated history
  for (int i = 0; i < kk; ++i) {
    psi[i] = x0.replicate(1, npts);
    phi[i] = Mat::Zero(n, npts);
  }

  SimTrace tr;
  tr.dt = h;
  tr.horizon = tend;
  tr.points_per_channel = npts;
  tr.disturbance_name = to_string(cfg.disturbance.kind);
  tr.t = Vec(steps + 1);
  tr.x = Mat(steps + 1, n);
  tr.xhat = Mat(steps + 1, n);
  tr.u = Mat(steps + 1, mm);
  tr.y = Mat(steps + 1, qq);
  tr.z = Mat(steps + 1, pp);
  tr.ze = Mat(steps + 1, pp1);
  tr.w = Mat(steps + 1, rr);
  tr.cum_z2 = Vec(steps + 1);
  tr.cum_ze2 = Vec(steps + 1);
  tr.cum_w2 = Vec(steps + 1);

  double acc_z = 0, acc_ze = 0, acc_w = 0;
  double prev_z2 = 0, prev_ze2 = 0, prev_w2 = 0;

  for (long step = 0; step <= steps; ++step) {
    const double t = step * h;

    const double wval = disturbance_value(cfg.disturbance, t);
    Vec w = Vec::Constant(rr, wval);
    Vec y = model.C2 * x;

    // innovation signals; y(t+s) reads the plant history channel
    Vec b0 = model.C2 * xh - y;
    std::vector<Mat> b(kk);  // q x npts
    for (int i = 0; i < kk; ++i) {
      b[i] = Mat(qq, npts);
      for (int j = 0; j < npts; ++j)
        b[i].col(j) = model.C2 * (phi[i].col(j) - psi[i].col(j));
    }

    // control input from the estimate
    Vec u = Vec::Zero(mm);
    if (ctrl && cfg.closed_loop) {
      Mat acc = ctrl->K0 * xh;
      for (int i = 0; i < kk; ++i) {
        acc += ctrl->K1[i] * phi[i].col(0);
        for (int j = 0; j < npts; ++j) acc += trapz_w(i, j) * (k2s[i][j] * phi[i].col(j));
      }
      u = acc.col(0);
    }

    // outputs
    Vec z = model.C10 * x + model.D1 * w;
    for (int i = 0; i < kk; ++i) z += model.C1[i] * psi[i].col(0);
    Vec e = xh - x;
    Vec ze = model.C30 * e + model.D3 * w;
    for (int i = 0; i < kk; ++i) ze += model.C3[i] * (phi[i].col(0) - psi[i].col(0));

    tr.t(step) = t;
    tr.x.row(step) = x.transpose();
    tr.xhat.row(step) = xh.transpose();
    tr.u.row(step) = u.transpose();
    tr.y.row(step) = y.transpose();
    tr.z.row(step) = z.transpose();
    tr.ze.row(step) = ze.transpose();
    tr.w.row(step) = w.transpose();

    const double z2 = z.squaredNorm(), ze2 = ze.squaredNorm(), w2 = w.squaredNorm();
    if (step > 0) {
      acc_z += 0.5 * h * (prev_z2 + z2);
      acc_ze += 0.5 * h * (prev_ze2 + ze2);
      acc_w += 0.5 * h * (prev_w2 + w2);
    }
    prev_z2 = z2;
    prev_ze2 = ze2;
    prev_w2 = w2;
    tr.cum_z2(step) = acc_z;
    tr.cum_ze2(step) = acc_ze;
    tr.cum_w2(step) = acc_w;

    if (!x.allFinite() || !xh.allFinite() || x.cwiseAbs().maxCoeff() > 1e9) {
      tr.diverged = true;
      tr.diverged_step = step;
      tr.t.conservativeResize(step + 1);
      tr.x.conservativeResize(step + 1, n);
      tr.xhat.conservativeResize(step + 1, n);
      tr.u.conservativeResize(step + 1, mm);
      tr.y.conservativeResize(step + 1, qq);
      tr.z.conservativeResize(step + 1, pp);
      tr.ze.conservativeResize(step + 1, pp1);
      tr.w.conservativeResize(step + 1, rr);
      tr.cum_z2.conservativeResize(step + 1);
      tr.cum_ze2.conservativeResize(step + 1);
      tr.cum_w2.conservativeResize(step + 1);
      return tr;
    }
    if (step == steps) break;

    // plant step
    Vec dx = model.A0 * x + model.B1 * w + model.B2 * u;
    for (int i = 0; i < kk; ++i) dx += model.A[i] * psi[i].col(0);
    Vec xn = x + h * dx;

    // estimator head step
    Vec xhn = xh;
    if (obs) {
      Vec dxh = model.A0 * xh + model.B2 * u + obs->L1 * b0;
      for (int i = 0; i < kk; ++i) {
        dxh += model.A[i] * phi[i].col(0);
        dxh += obs->L2[i] * b[i].col(0);
        for (int j = 0; j < npts; ++j) dxh += trapz_w(i, j) * (l3s[i][j] * b[i].col(j));
      }
      xhn = xh + h * dxh;
    }

    // plant history transport (same upwind scheme, no correction terms)
    for (int i = 0; i < kk; ++i) {
      Mat next = psi[i];
      for (int j = 0; j < npts - 1; ++j)
        next.col(j) = psi[i].col(j) + (h / dels[i]) * (psi[i].col(j + 1) - psi[i].col(j));
      next.col(npts - 1) = xn;
      psi[i] = next;
    }

    // estimator channel transport with the observer correction terms
    if (obs) {
      for (int i = 0; i < kk; ++i) {
        Mat next = phi[i];
        for (int j = 0; j < npts - 1; ++j) {
          Vec adv = (phi[i].col(j + 1) - phi[i].col(j)) / dels[i];
          Vec corr = l4s[i][j] * b0;
          for (int c = 0; c < kk; ++c) {
            corr += l5s[i][j][c] * b[c].col(0);
            for (int g2 = 0; g2 < npts; ++g2)
              corr += trapz_w(c, g2) * (l7s[i][j][c].block(0, g2 * qq, n, qq) * b[c].col(g2));
          }
          corr += l6s[i][j] * b[i].col(j);
          next.col(j) = phi[i].col(j) + h * (adv + corr);
        }
        next.col(npts - 1) = xhn;
        phi[i] = next;
      }
    }

    x = xn;
    xh = xhn;
  }
  return tr;
}

double estimate_l2_gain(const SimTrace& trace) {
  const double w2 = trace.cum_w2(trace.cum_w2.size() - 1);
  if (!(w2 > 0)) throw DomainError("estimate_l2_gain: zero-disturbance trace");
  return std::sqrt(trace.cum_z2(trace.cum_z2.size() - 1) / w2);
}

double estimate_l2_gain_ze(const SimTrace& trace) {
  const double w2 = trace.cum_w2(trace.cum_w2.size() - 1);
  if (!(w2 > 0)) throw DomainError("estimate_l2_gain: zero-disturbance trace");
  return std::sqrt(trace.cum_ze2(trace.cum_ze2.size() - 1) / w2);
}

void write_trace_csv(const SimTrace& trace, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write trace file: " + path);
  f << "t";
  auto head = [&](const char* base, Eigen::Index cnt) {
    for (Eigen::Index i = 0; i < cnt; ++i) f << "," << base << i;
  };
  head("x", trace.x.cols());
  head("xhat", trace.xhat.cols());
  head("u", trace.u.cols());
  head("y", trace.y.cols());
  head("z", trace.z.cols());
  head("ze", trace.ze.cols());
  head("w", trace.w.cols());
  f << ",cum_z2,cum_ze2,cum_w2\n";
  f.precision(17);
  for (Eigen::Index s = 0; s < trace.t.size(); ++s) {
    f << trace.t(s);
    auto row = [&](const Mat& m) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f << "," << m(s, c);
    };
    row(trace.x);
    row(trace.xhat);
    row(trace.u);
    row(trace.y);
    row(trace.z);
    row(trace.ze);
    row(trace.w);
    f << "," << trace.cum_z2(s) << "," << trace.cum_ze2(s) << "," << trace.cum_w2(s) << "\n";
  }
}

std::string trace_meta_json(const SimTrace& trace, const std::string& gains_provenance) {
  nlohmann::json j;
  j["dt"] = trace.dt;
  j["horizon"] = trace.horizon;
  j["points_per_channel"] = trace.points_per_channel;
  j["disturbance"] = trace.disturbance_name;
  j["diverged"] = trace.diverged;
  if (trace.diverged) j["diverged_step"] = trace.diverged_step;
  j["steps"] = trace.t.size();
  j["cum_z2"] = trace.cum_z2(trace.cum_z2.size() - 1);
  j["cum_ze2"] = trace.cum_ze2(trace.cum_ze2.size() - 1);
  j["cum_w2"] = trace.cum_w2(trace.cum_w2.size() - 1);
  const double w2 = trace.cum_w2(trace.cum_w2.size() - 1);
  if (w2 > 0) {
    j["l2_gain_z"] = std::sqrt(trace.cum_z2(trace.cum_z2.size() - 1) / w2);
    j["l2_gain_ze"] = std::sqrt(trace.cum_ze2(trace.cum_ze2.size() - 1) / w2);
  }
  j["gains_provenance"] = gains_provenance;
  return j.dump(2);
}

void write_trace_meta(const SimTrace& trace, const std::string& gains_provenance,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write trace metadata: " + path);
  f << trace_meta_json(trace, gains_provenance) << "\n";
}

}  // namespace delsos
