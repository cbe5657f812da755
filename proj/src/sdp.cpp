#include "sdp.hpp"

namespace delsos {

FeasibilityResult check_feasibility(const SdpProblem& prob, const SdpSettings& settings) {
  SdpProblem ph = prob;
  const int t = ph.add_free();
  for (auto& eq : ph.eqs) {
    double tr = 0.0;
    for (const auto& term : eq.psd)
      if (term.i == term.j) tr += term.coef;
    if (tr != 0.0) eq.free_vars.emplace_back(t, -tr);
  }
  // keep the shift bounded below: slack = t + 1 >= 0
  const int slack = ph.add_psd_block(1);
  SdpConstraint cap;
  cap.psd.push_back({slack, 0, 0, 1.0});
  cap.free_vars.emplace_back(t, -1.0);
  cap.rhs = 1.0;
  ph.eqs.push_back(cap);
  ph.obj_free = {{t, 1.0}};

  SdpSettings st = settings;
  st.stop_primal_below = -1e-4;
  st.stop_dual_above = 1e-4;

  SdpSolution sol = solve_sdp(ph, st);

  FeasibilityResult out;
  out.solver_status = sol.status;
  out.iterations = sol.iterations;
  out.primal_residual = sol.primal_residual;
  out.message = sol.message;
  if (sol.status == SdpStatus::Infeasible) {
    out.feasible = false;
    out.margin = std::numeric_limits<double>::infinity();
    return out;
  }
  if (sol.status == SdpStatus::NumericalFailure &&
      !(sol.free_vals.size() > t && sol.primal_residual < 1e-8)) {
    out.feasible = false;
    out.margin = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  const double tval = sol.free_vals(t);
  out.margin = tval;
  // Blocks pinned singular by the identification equalities keep the optimal
  // shift at exactly zero even for strictly feasible data, so feasibility is
  // t* <= 0 up to solver tolerance.
  out.feasible = tval <= 1e-6 && sol.primal_residual < 1e-6;
  if (out.feasible) {
    const double shift = std::min(tval, 0.0);
    out.free_vals = sol.free_vals.head(prob.num_free);
    out.psd_vals.assign(sol.psd_vals.begin(), sol.psd_vals.begin() + prob.psd_dims.size());
    for (size_t b = 0; b < out.psd_vals.size(); ++b)
      out.psd_vals[b] -= shift * Mat::Identity(prob.psd_dims[b], prob.psd_dims[b]);
  }
  return out;
}

}  // namespace delsos
