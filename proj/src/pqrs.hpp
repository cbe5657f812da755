#pragma once

#include "space.hpp"

namespace delsos {

// The operator class P_{P,Qi,Si,Rij} on Z_{m,n,K}: constant head map P,
// cross terms Q_i, pointwise multipliers S_i, integral kernels R_ij.
template <class T>
struct PqrsT {
  using M = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

  int head_dim = 0;  // m
  int chan_dim = 0;  // n
  std::vector<double> tau;

  M P;                                  // m x m
  std::vector<PolyMat1T<T>> Q;          // m x n on [-tau_i, 0]
  std::vector<PolyMat1T<T>> S;          // n x n on [-tau_i, 0]
  std::vector<std::vector<PolyMat2T<T>>> R;  // n x n on [-tau_i,0] x [-tau_j,0]

  PqrsT() = default;
  PqrsT(int m, int n, std::vector<double> taus, int deg_q, int deg_s, int deg_r)
      : head_dim(m), chan_dim(n), tau(std::move(taus)) {
    const int k = static_cast<int>(tau.size());
    P = M::Zero(m, m);
    for (int i = 0; i < k; ++i) {
      Interval ti{-tau[i], 0.0};
      Q.emplace_back(m, n, ti, deg_q);
      S.emplace_back(n, n, ti, deg_s);
    }
    R.resize(k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        R[i].emplace_back(n, n, Interval{-tau[i], 0.0}, Interval{-tau[j], 0.0}, deg_r, deg_r);
  }

  int num_delays() const { return static_cast<int>(tau.size()); }
  double tau_max() const { return tau.back(); }

  PqrsT operator-() const {
    PqrsT r = *this;
    r.P = -r.P;
    for (auto& q : r.Q) q = -q;
    for (auto& s : r.S) s = -s;
    for (auto& row : r.R)
      for (auto& k : row) k = -k;
    return r;
  }
};

using Pqrs = PqrsT<double>;
using APqrs = PqrsT<AffExpr>;

Pqrs identity_op(int n, const std::vector<double>& tau);

ZElement op_apply(const Pqrs& op, const ZElement& z);
double quad_form(const Pqrs& op, const ZElement& z);

struct SelfAdjointReport {
  bool symbolic_ok = false;
  double max_coef_violation = 0.0;
  double max_sampled_residual = 0.0;
};
// Verifies the coefficient identities of the self-adjoint X-preserving class
// (S_i symmetric, R_ij = tswap(R_ji), R_ij(0,.) = Q_j, P = tau_K (Q_i(0)^T + S_i(0)))
// and samples |<op z, y> - <z, op y>| over random polynomial pairs.
SelfAdjointReport op_selfadjoint_check(const Pqrs& op, int samples = 20, unsigned seed = 12345,
                                       double symbolic_tol = 1e-6);

struct InvertConfig {
  int grid_size = 40;
  int fit_degree = 3;
  double max_condition = 1e12;
  double max_residual = 1e-3;
  int residual_samples = 24;
};
struct InvertResult {
  Pqrs inverse;
  double residual = 0.0;
  double condition = 0.0;
};
// Collocation inversion: discretize on a Lobatto grid per channel, invert the
// matrix, project back onto PQRS structure by weighted least squares.
InvertResult op_invert_collocation(const Pqrs& op, const InvertConfig& cfg);

// collocation discretization pieces shared with the gain reconstruction
struct Collocation {
  std::vector<QuadRule> rules;  // per channel, on [-tau_i, 0]
  int head_dim = 0, chan_dim = 0, grid = 0;
  int dim() const { return head_dim + static_cast<int>(rules.size()) * chan_dim * grid; }
  int chan_offset(int i, int node) const { return head_dim + (i * grid + node) * chan_dim; }
};
Collocation make_collocation(const Pqrs& op, int grid_size);
Mat collocation_matrix(const Pqrs& op, const Collocation& c);
Vec collocation_coords(const ZElement& z, const Collocation& c);

}  // namespace delsos
