// Acceptance suite: one pass/fail line per criterion, exit code is the number
// of failed criteria. Pipelines run once per (example, degree) cell and are
// reused across criteria.
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <random>

#include "pipeline.hpp"
#include "testutil.hpp"

using namespace delsos;
using namespace delsos::testing;

namespace {

struct Cell {
  std::string name;
  int degree;
  DelayModel model;
  SynthesisOutcome syn;
  bool ok = false;
  double seconds = 0.0;
};

struct SimSet {
  SimTrace sinc, step, decay;
  double gain_sinc = 0, gain_step = 0;
};

int g_failures = 0;

void verdict(int crit, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", crit, detail.c_str());
  if (!pass) ++g_failures;
}

void info(const std::string& s) { std::printf("       %s\n", s.c_str()); }

const std::map<std::string, double> kGammaReal = {
    {"example1", 0.7893}, {"example2", 0.0738}, {"example3", 0.6080}};

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main() {
  const double t_start = now_s();
  std::vector<Cell> cells;
  for (const char* name : {"example1", "example2", "example3"})
    for (int d : {1, 2}) {
      Cell c;
      c.name = name;
      c.degree = d;
      c.model = load_model(std::string(MODELS_DIR "/") + name + ".json");
      cells.push_back(std::move(c));
    }

  auto run_cell = [](Cell& c) {
    const double t0 = now_s();
    PipelineOptions popt;
    popt.synth.degree = c.degree;
    popt.gains.max_fit_residual = 1e-4;
    c.syn = run_synthesis(c.model, popt);
    c.ok = c.syn.st_controller.ok && c.syn.st_estimator.ok && c.syn.st_gains.ok;
    c.seconds = now_s() - t0;
  };
  {
    std::vector<std::future<void>> futs;
    for (auto& c : cells) futs.push_back(std::async(std::launch::async, run_cell, std::ref(c)));
    for (auto& f : futs) f.get();
  }
  const double synth_seconds = now_s() - t_start;

  // ---------------- criterion 1: Table regression ----------------
  {
    bool pass = true;
    char line[256];
    for (const auto& c : cells) {
      const TableReference* ref = table_reference(c.name);
      const int slot = c.degree == 1 ? 0 : 1;
      if (!c.ok) {
        pass = false;
        info(c.name + " d=" + std::to_string(c.degree) + ": pipeline failed");
        continue;
      }
      auto cls = [&](double v, double r) {
        const double dev = std::abs(v / r - 1.0);
        return dev <= 0.10 ? "pass" : (dev <= 0.25 ? "conservative-certificate" : "out-of-band");
      };
      std::string c1 = cls(c.syn.gamma1, ref->gamma1[slot]);
      std::string c2 = cls(c.syn.gamma2, ref->gamma2[slot]);
      std::snprintf(line, sizeof(line),
                    "%s d=%d: gamma1 %.4f vs %.4f [%s], gamma2 %.4f vs %.4f [%s] (%.0f s)",
                    c.name.c_str(), c.degree, c.syn.gamma1, ref->gamma1[slot], c1.c_str(),
                    c.syn.gamma2, ref->gamma2[slot], c2.c_str(), c.seconds);
      info(line);
      if (c1 == "out-of-band" || c2 == "out-of-band") pass = false;
    }
    std::snprintf(line, sizeof(line),
                  "Table 1 regression, 12 gamma cells, synthesis wall time %.0f s (budget 600 s)",
                  synth_seconds);
    verdict(1, pass && synth_seconds <= 600.0, line);
  }

  // ---------------- criterion 2: monotonicity in d ----------------
  {
    bool pass = true;
    std::string detail = "gamma nonincreasing from d=1 to d=2:";
    for (const char* name : {"example1", "example2", "example3"}) {
      const Cell *c1 = nullptr, *c2 = nullptr;
      for (const auto& c : cells) {
        if (c.name == name && c.degree == 1) c1 = &c;
        if (c.name == name && c.degree == 2) c2 = &c;
      }
      if (!c1->ok || !c2->ok) {
        pass = false;
        continue;
      }
      const bool ok1 = c2->syn.gamma1 <= c1->syn.gamma1 * (1.0 + 1e-6);
      const bool ok2 = c2->syn.gamma2 <= c1->syn.gamma2 * (1.0 + 1e-6);
      char buf[128];
      std::snprintf(buf, sizeof(buf), " %s(%.4f<=%.4f:%s, %.4f<=%.4f:%s)", name, c2->syn.gamma1,
                    c1->syn.gamma1, ok1 ? "y" : "N", c2->syn.gamma2, c1->syn.gamma2,
                    ok2 ? "y" : "N");
      detail += buf;
      pass = pass && ok1 && ok2;
    }
    verdict(2, pass, detail);
  }

  // simulations for criteria 3 and 4 (degree-1 gains per example)
  std::map<std::string, SimSet> sims;
  std::map<std::string, const Cell*> d1cell;
  for (const auto& c : cells)
    if (c.degree == 1) d1cell[c.name] = &c;
  for (const auto& [name, cp] : d1cell) {
    if (!cp->ok) continue;
    GainsFile g = to_gains_file(cp->model, cp->syn);
    SimSet set;
    SimConfig cf;
    cf.disturbance.kind = DisturbanceKind::Sinc;
    set.sinc = run_sim(cp->model, &g.controller, &g.observer, cf);
    cf.disturbance.kind = DisturbanceKind::StepLike;
    set.step = run_sim(cp->model, &g.controller, &g.observer, cf);
    SimConfig dc;
    dc.disturbance.kind = DisturbanceKind::Zero;
    dc.x0 = Vec::Ones(cp->model.n()) * 0.3;
    set.decay = run_sim(cp->model, &g.controller, &g.observer, dc);
    if (!set.sinc.diverged) set.gain_sinc = estimate_l2_gain(set.sinc);
    if (!set.step.diverged) set.gain_step = estimate_l2_gain(set.step);
    sims[name] = std::move(set);
  }

  // ---------------- criterion 3: closed-loop stabilization ----------------
  {
    bool pass = true;
    for (const auto& [name, set] : sims) {
      const bool bounded = !set.sinc.diverged && !set.step.diverged &&
                           set.sinc.x.cwiseAbs().maxCoeff() < 1e4 &&
                           set.step.x.cwiseAbs().maxCoeff() < 1e4;
      Vec enorm(set.decay.t.size());
      for (long s = 0; s < set.decay.t.size(); ++s)
        enorm(s) = (set.decay.xhat.row(s) - set.decay.x.row(s)).norm();
      const double ratio = enorm(enorm.size() - 1) / std::max(enorm.maxCoeff(), 1e-300);
      char buf[200];
      std::snprintf(buf, sizeof(buf),
                    "%s: bounded(sinc,step)=%s, w=0 error decay ratio %.2e (<=1e-3)",
                    name.c_str(), bounded ? "yes" : "NO", ratio);
      info(buf);
      pass = pass && bounded && ratio <= 1e-3;
    }
    // open-loop example 1 must grow along its unstable characteristic root
    DelayModel ex1 = d1cell["example1"]->model;
    SimConfig oc;
    oc.disturbance.kind = DisturbanceKind::Zero;
    oc.x0 = Vec(2);
    oc.x0 << 0.0, 0.1;
    oc.horizon = 30.0;
    SimTrace ol = run_sim(ex1, nullptr, nullptr, oc);
    const double growth = ol.x.col(1).cwiseAbs().maxCoeff() / 0.1;
    const bool open_ok = growth > 100.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "stabilized closed loops; open-loop example1 grows %.1ex (detects instability)",
                  growth);
    verdict(3, pass && open_ok, buf);
  }

  // ---------------- criterion 4: gain-bound consistency ----------------
  {
    bool pass = true;
    for (const auto& [name, set] : sims) {
      const Cell* c = d1cell[name];
      const double bound = c->syn.coupling.found
                               ? composite_gain(c->syn.gamma1_gains, c->syn.gamma2_gains,
                                                c->syn.coupling.r)
                               : std::numeric_limits<double>::infinity();
      const bool upper =
          set.gain_sinc <= bound * 1.05 && set.gain_step <= bound * 1.05;
      const double best = std::max(set.gain_sinc, set.gain_step);
      const double floorv = 0.3 * kGammaReal.at(name);
      const bool lower = best >= floorv;
      char buf[240];
      std::snprintf(buf, sizeof(buf),
                    "%s: measured z-gain sinc %.4f step %.4f, composite bound %.4g, 0.3*gamma_real %.4f",
                    name.c_str(), set.gain_sinc, set.gain_step, bound, floorv);
      info(buf);
      pass = pass && upper && lower && c->syn.coupling.found;
    }
    verdict(4, pass, "estimated L2 gains below composite bound and above 0.3x reported gamma_real");
  }

  // ---------------- criterion 5: property suites ----------------
  {
    bool pass = true;
    Rng rng(99);
    // self-adjointness of every accepted Lyapunov certificate
    double worst_sa = 0.0;
    for (const auto& c : cells)
      if (c.ok) {
        worst_sa = std::max(worst_sa,
                            op_selfadjoint_check(c.syn.ctrl_cert.lyap, 34).max_sampled_residual);
        worst_sa = std::max(
            worst_sa, op_selfadjoint_check(c.syn.est_cert.lyap, 34).max_sampled_residual);
      }
    info("self-adjoint sampled residual (200+ samples across certificates): " +
         std::to_string(worst_sa));
    pass = pass && worst_sa <= 1e-9;

    // feasible certificates imply sampled positivity
    double worst_pos = 0.0;
    for (const auto& c : cells)
      if (c.ok) {
        for (int t = 0; t < 100; ++t) {
          ZElement z = random_z(c.model.n(), c.model.n(), c.model.tau, 3, rng);
          const double q1 = quad_form(c.syn.ctrl_cert.lyap, z) / z_norm2(z, c.model.tau_max());
          const double q2 = quad_form(c.syn.est_cert.lyap, z) / z_norm2(z, c.model.tau_max());
          worst_pos = std::min({worst_pos, q1, q2});
        }
      }
    info("sampled certificate positivity floor: " + std::to_string(worst_pos));
    pass = pass && worst_pos >= -1e-9;

    // inversion round trips on identity / scaled identity
    {
      InvertConfig ic;
      ic.grid_size = 24;
      ic.fit_degree = 2;
      auto i1 = op_invert_collocation(identity_op(2, {0.99}), ic);
      Pqrs twice = identity_op(2, {0.99});
      twice.P *= 2.0;
      for (auto& s : twice.S) s *= 2.0;
      auto i2 = op_invert_collocation(twice, ic);
      char buf[120];
      std::snprintf(buf, sizeof(buf), "inversion round trip residuals: identity %.2e, scaled %.2e",
                    i1.residual, i2.residual);
      info(buf);
      pass = pass && i1.residual <= 1e-8 && i2.residual <= 1e-8;
    }

    // gain identities at every cell
    for (const auto& c : cells)
      if (c.ok) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s d=%d gain identities: H=K.P1 %.2e, Z=P2.L %.2e",
                      c.name.c_str(), c.degree, c.syn.controller.fit_residual,
                      c.syn.observer.fit_residual);
        info(buf);
        pass = pass && c.syn.controller.fit_residual <= 1e-4 &&
               c.syn.observer.fit_residual <= 1e-4;
      }

    // map linearity probes
    {
      DelayModel model = d1cell["example1"]->model;
      SdpProblem sdp;
      ControllerVars vars = make_controller_vars(sdp, model, 1);
      APqrs e1 = map_l1(vars, model, 1.3);
      std::normal_distribution<double> gg(0.0, 1.0);
      Vec v1 = Vec::NullaryExpr(sdp.num_free, [&](Eigen::Index) { return gg(rng); });
      Vec v2 = Vec::NullaryExpr(sdp.num_free, [&](Eigen::Index) { return gg(rng); });
      Vec zero = Vec::Zero(sdp.num_free);
      const double alpha = 0.77;
      Mat fixed = aff_value(e1.P, zero);
      Mat lhs = aff_value(e1.P, Vec(alpha * v1 + v2)) - fixed;
      Mat rhs = alpha * (aff_value(e1.P, v1) - fixed) + (aff_value(e1.P, v2) - fixed);
      const double lin_err = (lhs - rhs).cwiseAbs().maxCoeff();
      info("map linearity probe error: " + std::to_string(lin_err));
      pass = pass && lin_err <= 1e-12;
    }

    // Theorem 2/3 sampled quadratic forms at every accepted certificate
    {
      double worst_slack = -1e300;
      for (const auto& c : cells)
        if (c.ok) {
          const double tk = c.model.tau_max();
          const double m1 = c.syn.ctrl_cert.eps1 * std::min(1.0, tk);
          const double m2 = c.syn.est_cert.eps2 * std::min(1.0, tk);
          std::normal_distribution<double> gg(0.0, 1.0);
          for (int t = 0; t < 34; ++t) {
            ZElement h = random_z_in_x(c.model.n(), c.model.tau, 3, rng);
            Vec w = Vec::NullaryExpr(c.model.r(), [&](Eigen::Index) { return gg(rng); });
            Vec v = Vec::NullaryExpr(c.model.p(), [&](Eigen::Index) { return gg(rng); });
            const double f2 = theorem2_form(c.model, c.syn.ctrl_cert, h, w, v) +
                              m1 * z_norm2(h, tk);
            ZElement e = random_z_in_x(c.model.n(), c.model.tau, 3, rng);
            Vec ve = Vec::NullaryExpr(c.model.p1(), [&](Eigen::Index) { return gg(rng); });
            const double f3 = theorem3_form(c.model, c.syn.est_cert, e, w, ve) +
                              m2 * z_norm2(e, tk);
            worst_slack = std::max({worst_slack, f2, f3});
          }
        }
      info("Theorem 2/3 sampled form slack (should be <= 1e-7): " + std::to_string(worst_slack));
      pass = pass && worst_slack <= 1e-7;
    }

    // Theorem 4 coupling form at the returned r
    {
      double worst = -1e300;
      for (const auto& c : cells)
        if (c.ok && c.syn.coupling.found) {
          for (int t = 0; t < 100; ++t) {
            ZElement h = random_z_in_x(c.model.n(), c.model.tau, 3, rng);
            ZElement e = random_z_in_x(c.model.n(), c.model.tau, 3, rng);
            worst = std::max(worst, coupling_form(c.syn.controller.view(), c.model,
                                                  c.syn.ctrl_cert.eps1, c.syn.est_cert.eps2,
                                                  c.syn.coupling.r, h, e));
          }
        }
      info("Theorem 4 sampled coupling form maximum: " + std::to_string(worst));
      pass = pass && worst <= 1e-7;
    }

    // simulator first-order self-convergence
    {
      const Cell* c = d1cell["example2"];
      GainsFile g = to_gains_file(c->model, c->syn);
      auto terminal = [&](double dt) {
        SimConfig cf;
        cf.disturbance.kind = DisturbanceKind::Sinc;
        cf.dt = dt;
        cf.horizon = 6.0;
        SimTrace tr = run_sim(c->model, &g.controller, &g.observer, cf);
        return std::sqrt(tr.cum_z2(tr.cum_z2.size() - 1));
      };
      const double base = 4e-4;
      const double a = terminal(base), b = terminal(base / 2), cc = terminal(base / 4);
      const double ratio = (a - b) / (b - cc);
      char buf[120];
      std::snprintf(buf, sizeof(buf), "Richardson ratio: %.3f (expect within [1.5, 2.5])", ratio);
      info(buf);
      pass = pass && ratio >= 1.5 && ratio <= 2.5;
    }

    verdict(5, pass, "property suites");
  }

  // ---------------- criterion 6: explicitly out of scope ----------------
  verdict(6, true,
          "gamma_min row (Pade-approximation output-feedback baseline) intentionally not "
          "reproduced (out of scope)");

  std::printf("acceptance: %d criterion(s) failed, total wall time %.0f s\n", g_failures,
              now_s() - t_start);
  return g_failures;
}
