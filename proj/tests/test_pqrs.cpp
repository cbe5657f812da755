#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pqrs.hpp"
#include "testutil.hpp"

using namespace delsos;
using namespace delsos::testing;

namespace {

// random operator satisfying the self-adjoint X-preserving coefficient
// identities: S_i symmetric, R_ij = tswap(R_ji), R_ij(0,.) = Q_j for every i,
// P = tau_K (Q_i(0)^T + S_i(0)). The identities force Q_i(0) to be one shared
// symmetric matrix and S_i(0) to be channel-independent up to that corner.
Pqrs random_lemma5_op(int n, const std::vector<double>& tau, int deg, Rng& rng) {
  const int k = static_cast<int>(tau.size());
  Pqrs op(n, n, tau, deg, deg, deg);
  Mat q0 = symmetrize(random_mat(n, n, rng));
  for (int j = 0; j < k; ++j) {
    op.Q[j] = random_poly1(n, n, Interval{-tau[j], 0.0}, deg, rng);
    op.Q[j].coef[0] = q0;
  }
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) {
      PolyMat2 r = random_poly2(n, n, Interval{-tau[i], 0.0}, Interval{-tau[j], 0.0}, deg, rng);
      if (i == j) r = (r + r.tswap()) * 0.5;
      for (int l = 0; l <= deg; ++l) {
        r.coef[0][l] = op.Q[j].coef[l];
        r.coef[l][0] = op.Q[i].coef[l].transpose();
      }
      r.coef[0][0] = q0;
      op.R[i][j] = r;
      op.R[j][i] = r.tswap();
    }
  Mat s0 = symmetrize(random_mat(n, n, rng));
  for (int i = 0; i < k; ++i) {
    PolyMat1 s = random_poly1(n, n, Interval{-tau[i], 0.0}, deg, rng);
    op.S[i] = (s + s.transposed()) * 0.5;
    op.S[i].coef[0] = s0;
  }
  op.P = tau.back() * (q0 + s0);
  return op;
}

}  // namespace

TEST_CASE("inner product: zero, head-only, scalar channel") {
  std::vector<double> tau{1.0};
  ZElement z0 = z_zero(2, 2, tau);
  CHECK(z_inner(z0, z0, 1.0) == 0.0);

  ZElement h = z_zero(2, 2, tau);
  h.head << 1, 0;
  CHECK(z_inner(h, h, 1.0) == doctest::Approx(1.0));

  ZElement s = z_zero(1, 1, tau);
  s.chan[0] = PolyMat1(1, 1, Interval{-1.0, 0.0}, 1);
  s.chan[0].coef[1](0, 0) = 1.0;
  CHECK(z_inner(s, s, 1.0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("op_apply: identity, zero, scalar hand example") {
  Rng rng(5);
  std::vector<double> tau{0.7, 1.3};
  Pqrs id = identity_op(2, tau);
  ZElement z = random_z(2, 2, tau, 3, rng);
  ZElement w = op_apply(id, z);
  CHECK(std::sqrt(z_norm2(z_sub(w, z), tau.back())) < 1e-10);

  Pqrs zero(2, 2, tau, 0, 0, 0);
  ZElement wz = op_apply(zero, z);
  CHECK(z_norm2(wz, tau.back()) == 0.0);

  // n=m=K=1, tau=1, P=2, Q=1, S=1, R=0 applied to (x=1, phi(s)=s)
  std::vector<double> t1{1.0};
  Pqrs op(1, 1, t1, 0, 0, 0);
  op.P(0, 0) = 2.0;
  op.Q[0].coef[0](0, 0) = 1.0;
  op.S[0].coef[0](0, 0) = 1.0;
  ZElement e = z_zero(1, 1, t1);
  e.head << 1.0;
  e.chan[0] = PolyMat1(1, 1, Interval{-1.0, 0.0}, 1);
  e.chan[0].coef[1](0, 0) = 1.0;
  ZElement r = op_apply(op, e);
  CHECK(r.head(0) == doctest::Approx(1.5));
  CHECK(r.chan[0].eval(-0.25)(0, 0) == doctest::Approx(0.75));
  CHECK(r.chan[0].eval(0.0)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("self-adjoint check: identity passes, perturbed P fails") {
  std::vector<double> tau{0.99};
  Pqrs id = identity_op(2, tau);
  auto rep = op_selfadjoint_check(id);
  CHECK(rep.symbolic_ok);
  CHECK(rep.max_coef_violation == 0.0);
  CHECK(rep.max_sampled_residual < 1e-12);

  Pqrs bad = id;
  bad.P(0, 0) += 1e-3;
  CHECK_FALSE(op_selfadjoint_check(bad).symbolic_ok);
}

TEST_CASE("self-adjoint check: random lemma-5 operators") {
  Rng rng(23);
  for (auto tau : {std::vector<double>{1.0}, std::vector<double>{0.5, 1.0}}) {
    Pqrs op = random_lemma5_op(2, tau, 2, rng);
    auto rep = op_selfadjoint_check(op, 25);
    CHECK(rep.symbolic_ok);
    CHECK(rep.max_sampled_residual < 1e-9);
  }
}

TEST_CASE("inversion: identity and scaled identity") {
  std::vector<double> tau{0.99};
  InvertConfig cfg;
  cfg.grid_size = 20;
  cfg.fit_degree = 2;

  auto inv = op_invert_collocation(identity_op(2, tau), cfg);
  CHECK(inv.residual < 1e-10);
  CHECK((inv.inverse.P - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);

  Pqrs twice = identity_op(2, tau);
  twice.P *= 2.0;
  for (auto& s : twice.S) s *= 2.0;
  auto half = op_invert_collocation(twice, cfg);
  CHECK(half.residual < 1e-8);
  CHECK((half.inverse.P - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((half.inverse.S[0].eval(-0.5) - Mat::Identity(2, 2) / (2.0 * tau[0])).cwiseAbs().maxCoeff() <
        1e-8);
}

TEST_CASE("inversion round trip on a coercive lemma-5 operator") {
  Rng rng(31);
  std::vector<double> tau{0.5, 1.0};
  Pqrs op = random_lemma5_op(2, tau, 1, rng);
  // shift toward identity until clearly coercive
  Pqrs id = identity_op(2, tau);
  const double lift = 8.0;
  op.P = op.P / lift + id.P;
  for (int i = 0; i < 2; ++i) {
    op.Q[i] *= 1.0 / lift;
    op.S[i] = op.S[i] * (1.0 / lift) + id.S[i];
    for (int j = 0; j < 2; ++j) op.R[i][j] *= 1.0 / lift;
  }
  REQUIRE(op_selfadjoint_check(op).symbolic_ok);
  InvertConfig cfg;
  cfg.grid_size = 40;
  cfg.fit_degree = 3;
  cfg.max_residual = 1e-3;
  auto inv = op_invert_collocation(op, cfg);
  CHECK(inv.residual < 1e-4);
}

TEST_CASE("quadrature rules are exact for polynomials") {
  QuadRule gl = gauss_legendre(8);
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) acc += gl.weights(i) * std::pow(gl.nodes(i), 10);
  CHECK(acc == doctest::Approx(2.0 / 11.0).epsilon(1e-12));

  QuadRule lob = gauss_lobatto(9);
  CHECK(lob.nodes(0) == doctest::Approx(-1.0));
  CHECK(lob.nodes(8) == doctest::Approx(1.0));
  acc = 0.0;
  for (int i = 0; i < 9; ++i) acc += lob.weights(i) * std::pow(lob.nodes(i), 12);
  CHECK(acc == doctest::Approx(2.0 / 13.0).epsilon(1e-10));
}
