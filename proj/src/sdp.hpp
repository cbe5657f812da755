#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "common.hpp"

namespace delsos {

// Solver-agnostic SDP description: symmetric PSD matrix variables, scalar
// free variables, linear equality constraints among their entries, linear
// objective (minimized). PSD entry terms reference the value X(i,j) == X(j,i).
struct SdpTerm {
  int block;
  int i, j;
  double coef;
};

struct SdpConstraint {
  std::vector<SdpTerm> psd;
  std::vector<std::pair<int, double>> free_vars;
  double rhs = 0.0;
};

struct SdpProblem {
  int num_free = 0;
  std::vector<int> psd_dims;
  std::vector<SdpConstraint> eqs;
  std::vector<std::pair<int, double>> obj_free;

  int add_free() { return num_free++; }
  int add_psd_block(int dim) {
    psd_dims.push_back(dim);
    return static_cast<int>(psd_dims.size()) - 1;
  }
};

enum class SdpStatus { Optimal, Infeasible, NumericalFailure };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Infeasible: return "infeasible";
    default: return "numerical-failure";
  }
}

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  Vec free_vals;
  std::vector<Mat> psd_vals;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double rel_gap = 0.0;
  int iterations = 0;
  std::string message;
};

struct SdpSettings {
  int max_iter = 150;
  double tol = 1e-9;
  bool verbose = false;
  // early exit hooks used by the feasibility oracle
  double stop_primal_below = -std::numeric_limits<double>::infinity();
  double stop_dual_above = std::numeric_limits<double>::infinity();
  double early_primal_res = 1e-10;
  double early_dual_res = 1e-9;
};

// Adapter contract: deterministic given problem and settings; reports the
// termination status verbatim together with residuals.
SdpSolution solve_sdp(const SdpProblem& prob, const SdpSettings& settings);

// Phase-I feasibility oracle: minimizes the uniform eigenvalue shift t that
// makes all PSD blocks feasible; t < 0 certifies strict feasibility, a dual
// bound above 0 certifies infeasibility.
struct FeasibilityResult {
  bool feasible = false;
  double margin = 0.0;  // optimal shift t
  SdpStatus solver_status = SdpStatus::NumericalFailure;
  Vec free_vals;
  std::vector<Mat> psd_vals;
  double primal_residual = 0.0;
  int iterations = 0;
  std::string message;
};

FeasibilityResult check_feasibility(const SdpProblem& prob, const SdpSettings& settings = {});

}  // namespace delsos
