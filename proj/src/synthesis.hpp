#pragma once

#include <functional>
#include <optional>

#include "model.hpp"
#include "pqrs.hpp"
#include "sdp.hpp"
#include "sos.hpp"

namespace delsos {

struct SynthOptions {
  int degree = 1;
  double eps = 1e-4;
  double eps1 = 1e-3;
  double eps2 = 1e-3;
  double eps3 = 1e-6;
  double s_floor = 0.0;       // extra pointwise floor on the multiplier part
  double recon_relax = 0.05;  // gamma relaxation for the reconstruction solve
  double gamma_lo = 1e-6;
  double gamma_hi = 0.0;  // 0: seed by doubling from 1
  double bisect_tol = 1e-3;
  double r_lo = 1e-3, r_hi = 1e3;
  int r_points = 25;
  SdpSettings sdp;
};

// Lyapunov decision-operator family. With x_preserving, the full self-adjoint
// X-preserving coefficient identities hold (needed for the controller family,
// whose inverse must map X to X); otherwise only the self-adjointness
// identities (S_i symmetric, R_ij = tswap(R_ji), P symmetric) are imposed.
APqrs make_lyap_family(SdpProblem& sdp, int n, const std::vector<double>& tau, int degree,
                       bool x_preserving);

struct ControllerVars {
  APqrs lyap;  // {P1, Q1i, S1i, R1ij}
  AffMat H0;
  std::vector<AffMat> H1;
  std::vector<APolyMat1> H2;
};
struct EstimatorVars {
  APqrs lyap;  // {P2, Q2i, S2i, R2ij}
  AffMat Z1;
  std::vector<AffMat> Z2;
  std::vector<APolyMat1> Z3, Z4, Z6;
  std::vector<std::vector<APolyMat1>> Z5;
  std::vector<std::vector<APolyMat2>> Z7;
};

ControllerVars make_controller_vars(SdpProblem& sdp, const DelayModel& model, int degree);
EstimatorVars make_estimator_vars(SdpProblem& sdp, const DelayModel& model, int degree);

// Appendix maps: assemble the {E, F_i, N_i, G_ij} operator data entering the
// two synthesis memberships. Head ordering is [v; w; x; x(-tau_i)...] for the
// controller map and [w; v_e; e; e(-tau_i)...] for the estimator map.
APqrs map_l1(const ControllerVars& vars, const DelayModel& model, double gamma1);
APqrs map_l2(const EstimatorVars& vars, const DelayModel& model, double gamma2);

struct ControllerCert {
  Pqrs lyap;
  Mat H0;
  std::vector<Mat> H1;
  std::vector<PolyMat1> H2;
  double gamma1 = 0.0, eps = 0.0, eps1 = 0.0;
  double sdp_margin = 0.0, sdp_residual = 0.0;
  int sdp_iterations = 0;
  std::string solver_message;
};
struct EstimatorCert {
  Pqrs lyap;
  Mat Z1;
  std::vector<Mat> Z2;
  std::vector<PolyMat1> Z3, Z4, Z6;
  std::vector<std::vector<PolyMat1>> Z5;
  std::vector<std::vector<PolyMat2>> Z7;
  double gamma2 = 0.0, eps = 0.0, eps2 = 0.0;
  double sdp_margin = 0.0, sdp_residual = 0.0;
  int sdp_iterations = 0;
  std::string solver_message;
};

struct ControllerProblem {
  SdpProblem sdp;
  ControllerVars vars;
};
struct EstimatorProblem {
  SdpProblem sdp;
  EstimatorVars vars;
};

ControllerProblem build_controller_sdp(const DelayModel& model, double gamma1,
                                       const SynthOptions& opt);
EstimatorProblem build_estimator_sdp(const DelayModel& model, double gamma2,
                                     const SynthOptions& opt);

std::optional<ControllerCert> solve_controller(const DelayModel& model, double gamma1,
                                               const SynthOptions& opt);
std::optional<EstimatorCert> solve_estimator(const DelayModel& model, double gamma2,
                                             const SynthOptions& opt);

// generic bisection to the feasibility boundary; returns the certificate at
// the feasible end of the final bracket
template <class Cert>
struct BisectResult {
  double gamma = 0.0;
  Cert cert;
  int solves = 0;
};
struct BisectOptions {
  double lo = 1e-6;
  double hi = 0.0;  // 0: double from 1 until feasible
  double rel_tol = 1e-3;
};

template <class Cert>
BisectResult<Cert> bisect_gamma(const std::function<std::optional<Cert>(double)>& builder,
                                const BisectOptions& opt) {
  BisectResult<Cert> out;
  double hi = opt.hi > 0 ? opt.hi : 1.0;
  std::optional<Cert> at_hi;
  if (opt.hi > 0) {
    at_hi = builder(hi);
    ++out.solves;
    if (!at_hi) throw SolverError("bisect_gamma: increase hi or degree d");
  } else {
    for (int k = 0;; ++k) {
      at_hi = builder(hi);
      ++out.solves;
      if (at_hi) break;
      hi *= 2.0;
      if (k > 20) throw SolverError("bisect_gamma: increase hi or degree d");
    }
  }
  double lo = std::min(opt.lo, hi / 2.0);
  while ((hi - lo) > opt.rel_tol * hi) {
    const double mid = 0.5 * (hi + lo);
    auto cert = builder(mid);
    ++out.solves;
    if (cert) {
      hi = mid;
      at_hi = std::move(cert);
    } else {
      lo = mid;
    }
  }
  out.gamma = hi;
  out.cert = std::move(*at_hi);
  return out;
}

double composite_gain(double gamma1, double gamma2, double r);

// Coupling condition of the composite bound: blocks {E3 + eps3*I3hat, F3i, N3i, 0}
// over the joint (h, e) space with channels [e_i; h_i].
struct ControllerGainsView {
  const Mat& K0;
  const std::vector<Mat>& K1;
  const std::vector<PolyMat1>& K2;
};
Pqrs coupling_op(const ControllerGainsView& gains, const DelayModel& model, double eps1,
                 double eps2, double eps3, double r);
bool coupling_feasible(const ControllerGainsView& gains, const DelayModel& model,
                       const SynthOptions& opt, double r);

struct CouplingResult {
  bool found = false;
  double r = 0.0;
  double composite = 0.0;
  int solves = 0;
  std::vector<double> grid;
};
CouplingResult search_coupling_r(const ControllerGainsView& gains, const DelayModel& model,
                                 const SynthOptions& opt, double gamma1, double gamma2);

// sampled quadratic forms used by the certificate post-checks
double theorem2_form(const DelayModel& model, const ControllerCert& cert, const ZElement& h,
                     const Vec& w, const Vec& v);
double theorem3_form(const DelayModel& model, const EstimatorCert& cert, const ZElement& e,
                     const Vec& w, const Vec& ve);
double coupling_form(const ControllerGainsView& gains, const DelayModel& model, double eps1,
                     double eps2, double r, const ZElement& h, const ZElement& e);

// estimator-side operators applied to elements (shared with the post-checks)
ZElement apply_generator(const DelayModel& model, const ZElement& z);
ZElement apply_c2(const DelayModel& model, const ZElement& z);
ZElement apply_z_vars(const EstimatorCert& cert, double tau_k, const ZElement& y);

}  // namespace delsos
