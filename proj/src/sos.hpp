#pragma once

#include "pqrs.hpp"
#include "sdp.hpp"

namespace delsos {

// Certificate block handles for one positivity membership.
struct XiBlocks {
  int cert_degree = 0;
  int moment = -1;              // joint head+moment Gram block (absent when all kernels vanish)
  std::vector<int> t_blocks;    // per-channel pointwise Gram blocks
  std::vector<int> u_blocks;    // per-channel interval multiplier blocks, weight -s(s+tau_i)
};

// Emits PSD variables and linear identification equalities certifying
// <z, op z> >= 0 over the whole space. Throws StructuralError when the
// certificate degree cannot express the operator's own degrees.
XiBlocks add_xi_membership(SdpProblem& sdp, const APqrs& op, int cert_degree);

APqrs aff_op(const Pqrs& op);

XiBlocks add_xi_membership(SdpProblem& sdp, const Pqrs& op, int cert_degree);

}  // namespace delsos
