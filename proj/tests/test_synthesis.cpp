#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "synthesis.hpp"
#include "testutil.hpp"

using namespace delsos;
using namespace delsos::testing;

namespace {

DelayModel scalar_model(double a, double b, double beta, double tau) {
  DelayModel m;
  m.A0 = Mat::Constant(1, 1, a);
  m.A = {Mat::Constant(1, 1, b)};
  m.B1 = Mat::Constant(1, 1, 1.0);
  m.B2 = Mat::Constant(1, 1, beta);
  m.C10 = Mat::Constant(1, 1, 1.0);
  m.C1 = {Mat::Zero(1, 1)};
  m.C2 = Mat::Constant(1, 1, 1.0);
  m.C30 = Mat::Constant(1, 1, 1.0);
  m.C3 = {Mat::Zero(1, 1)};
  m.D1 = Mat::Constant(1, 1, 0.3);
  m.D3 = Mat::Zero(1, 1);
  m.tau = {tau};
  m.validate();
  return m;
}

ControllerVars const_controller_vars(const DelayModel& model, double rho, double sigma) {
  ControllerVars v;
  v.lyap = APqrs(1, 1, model.tau, 0, 0, 0);
  v.lyap.P(0, 0) = AffExpr(rho);
  v.lyap.S[0].coef[0](0, 0) = AffExpr(sigma);
  v.H0 = AffMat(1, 1);
  v.H0(0, 0) = AffExpr(0.0);
  AffMat z(1, 1);
  z(0, 0) = AffExpr(0.0);
  v.H1 = {z};
  v.H2 = {APolyMat1(1, 1, Interval{-model.tau[0], 0.0}, 0)};
  return v;
}

}  // namespace

TEST_CASE("map_l1: zero decision variables leave only plant data blocks") {
  DelayModel model = load_model(MODELS_DIR "/example1.json");
  SdpProblem sdp;
  ControllerVars vars = make_controller_vars(sdp, model, 1);
  APqrs e1 = map_l1(vars, model, 1.0);
  Vec zero = Vec::Zero(sdp.num_free);
  Mat e = aff_value(e1.P, zero);
  const double tk = model.tau_max();
  const int p = model.p(), r = model.r();
  // [v; w; x; x(-tau)] blocks
  CHECK((e.block(0, 0, p, p) + Mat::Identity(p, p) / tk).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((e.block(p, p, r, r) + Mat::Identity(r, r) / tk).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((e.block(0, p, p, r) - model.D1 / tk).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((e.block(p, p + r, r, 2) - model.B1.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(e.block(p + r, p + r, 4, 4).cwiseAbs().maxCoeff() == 0.0);
  PolyMat1 f = [&] {
    PolyMat1 out(e1.Q[0].rows, e1.Q[0].cols, e1.Q[0].iv, e1.Q[0].degree());
    for (int k = 0; k <= e1.Q[0].degree(); ++k) out.coef[k] = aff_value(e1.Q[0].coef[k], zero);
    return out;
  }();
  for (const auto& c : f.coef) CHECK(c.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("map_l1: scalar hand evaluation") {
  double a = -0.4, b = 0.7, beta = 1.3, rho = 2.1, sigma = 0.9;
  DelayModel model = scalar_model(a, b, beta, 1.0);
  ControllerVars vars = const_controller_vars(model, rho, sigma);
  APqrs e1 = map_l1(vars, model, 1.0);
  Vec zero(0);
  Mat e = aff_value(e1.P, zero);
  // offsets: v=0, w=1, x=2, delay=3
  CHECK(e(2, 2) == doctest::Approx(2.0 * (a * rho + 0.5 * sigma)));
  CHECK(e(2, 3) == doctest::Approx(b * sigma));
  CHECK(e(3, 3) == doctest::Approx(-sigma));
  Mat n1 = aff_value(e1.S[0].coef[0], zero);
  CHECK(n1.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("map_l2: zero decision variables leave only data blocks") {
  DelayModel model = load_model(MODELS_DIR "/example1.json");
  SdpProblem sdp;
  EstimatorVars vars = make_estimator_vars(sdp, model, 1);
  APqrs e2 = map_l2(vars, model, 1.0);
  Vec zero = Vec::Zero(sdp.num_free);
  Mat e = aff_value(e2.P, zero);
  const double tk = model.tau_max();
  const int r = model.r(), p1 = model.p1();
  CHECK((e.block(0, 0, r, r) + Mat::Identity(r, r) / tk).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((e.block(r, r, p1, p1) + Mat::Identity(p1, p1) / tk).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((e.block(0, r, r, p1) - model.D3.transpose() / tk).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((e.block(r, r + p1, p1, 2) - model.C30 / tk).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("map_l2: scalar hand evaluation") {
  DelayModel model = scalar_model(-0.8, 0.0, 1.0, 1.0);
  double rho = 1.7, zeta = -0.6, c = 1.0;
  EstimatorVars vars;
  vars.lyap = APqrs(1, 1, model.tau, 0, 0, 0);
  vars.lyap.P(0, 0) = AffExpr(rho);
  vars.Z1 = AffMat(1, 1);
  vars.Z1(0, 0) = AffExpr(zeta);
  AffMat z(1, 1);
  z(0, 0) = AffExpr(0.0);
  vars.Z2 = {z};
  Interval iv{-1.0, 0.0};
  vars.Z3 = {APolyMat1(1, 1, iv, 0)};
  vars.Z4 = {APolyMat1(1, 1, iv, 0)};
  vars.Z6 = {APolyMat1(1, 1, iv, 0)};
  vars.Z5 = {{APolyMat1(1, 1, iv, 0)}};
  vars.Z7 = {{APolyMat2(1, 1, iv, iv, 0, 0)}};
  APqrs e2 = map_l2(vars, model, 1.0);
  Vec zero(0);
  Mat e = aff_value(e2.P, zero);
  // offsets: w=0, ve=1, e=2, delay=3
  CHECK(e(2, 2) == doctest::Approx(2.0 * (-0.8) * rho + 2.0 * zeta * c));
  CHECK(e(0, 2) == doctest::Approx(-rho * 1.0));  // -E20^T with B1 = 1
}

TEST_CASE("maps are affine in the decision variables") {
  DelayModel model = load_model(MODELS_DIR "/example1.json");
  SdpProblem sdp;
  ControllerVars vars = make_controller_vars(sdp, model, 1);
  APqrs e1 = map_l1(vars, model, 1.3);
  Rng rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v1 = Vec::NullaryExpr(sdp.num_free, [&](Eigen::Index) { return g(rng); });
  Vec v2 = Vec::NullaryExpr(sdp.num_free, [&](Eigen::Index) { return g(rng); });
  const double alpha = 1.37;
  Vec zero = Vec::Zero(sdp.num_free);
  Mat fixed = aff_value(e1.P, zero);
  Mat lhs = aff_value(e1.P, Vec(alpha * v1 + v2)) - fixed;
  Mat rhs = alpha * (aff_value(e1.P, v1) - fixed) + (aff_value(e1.P, v2) - fixed);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

  SdpProblem sdp2;
  EstimatorVars evars = make_estimator_vars(sdp2, model, 1);
  APqrs e2 = map_l2(evars, model, 0.7);
  Vec w1 = Vec::NullaryExpr(sdp2.num_free, [&](Eigen::Index) { return g(rng); });
  Vec w2 = Vec::NullaryExpr(sdp2.num_free, [&](Eigen::Index) { return g(rng); });
  Vec zero2 = Vec::Zero(sdp2.num_free);
  Mat fixed2 = aff_value(e2.P, zero2);
  for (int k = 0; k <= e2.Q[0].degree(); ++k) {
    Mat l = aff_value(e2.Q[0].coef[k], Vec(alpha * w1 + w2)) - aff_value(e2.Q[0].coef[k], zero2);
    Mat r2 = alpha * (aff_value(e2.Q[0].coef[k], w1) - aff_value(e2.Q[0].coef[k], zero2)) +
             (aff_value(e2.Q[0].coef[k], w2) - aff_value(e2.Q[0].coef[k], zero2));
    CHECK((l - r2).cwiseAbs().maxCoeff() < 1e-12);
  }
  (void)fixed2;
}

TEST_CASE("controller synthesis on a stable delay-free scalar plant") {
  DelayModel model = scalar_model(-1.0, 0.0, 1.0, 1.0);
  SynthOptions opt;
  opt.degree = 1;
  auto cert = solve_controller(model, 100.0, opt);
  REQUIRE(cert.has_value());
  Rng rng(7);
  double margin = cert->eps1 * std::min(1.0, model.tau_max());
  for (int t = 0; t < 50; ++t) {
    ZElement h = random_z_in_x(1, model.tau, 3, rng);
    Vec w = Vec::NullaryExpr(1, [&](Eigen::Index) { return std::normal_distribution<double>()(rng); });
    Vec v = Vec::NullaryExpr(1, [&](Eigen::Index) { return std::normal_distribution<double>()(rng); });
    double form = theorem2_form(model, *cert, h, w, v);
    CHECK(form <= -margin * z_norm2(h, model.tau_max()) + 1e-7);
  }
}

TEST_CASE("bisection on a synthetic feasibility boundary") {
  auto builder = [](double gamma) -> std::optional<int> {
    if (gamma >= 2.0) return 1;
    return std::nullopt;
  };
  BisectOptions opt;
  opt.rel_tol = 1e-4;
  auto res = bisect_gamma<int>(builder, opt);
  CHECK(res.gamma == doctest::Approx(2.0).epsilon(2e-4));
}

TEST_CASE("composite gain closed form") {
  CHECK(composite_gain(1.0, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(composite_gain(1.0, 3.0, 1.0) == doctest::Approx(2.0));
  CHECK(composite_gain(1.6829, 4.1425, 0.5) == doctest::Approx(2.513).epsilon(1e-3));
  CHECK_THROWS_AS(composite_gain(-1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("example 1: feasibility pattern around the boundary") {
  DelayModel model = load_model(MODELS_DIR "/example1.json");
  SynthOptions opt;
  opt.degree = 1;
  CHECK_FALSE(solve_controller(model, 0.5, opt).has_value());
  CHECK(solve_controller(model, 2.6, opt).has_value());
  CHECK_FALSE(solve_estimator(model, 0.01, opt).has_value());
  auto est = solve_estimator(model, 1.8, opt);
  CHECK(est.has_value());

  // feasibility is monotone in gamma
  CHECK(solve_controller(model, 4.0, opt).has_value());
  CHECK(solve_estimator(model, 8.0, opt).has_value());

  if (est) {
    Rng rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    double margin = est->eps2 * std::min(1.0, model.tau_max());
    for (int t = 0; t < 50; ++t) {
      ZElement e = random_z_in_x(2, model.tau, 3, rng);
      Vec w = Vec::NullaryExpr(2, [&](Eigen::Index) { return g(rng); });
      Vec ve = Vec::NullaryExpr(1, [&](Eigen::Index) { return g(rng); });
      double form = theorem3_form(model, *est, e, w, ve);
      CHECK(form <= -margin * z_norm2(e, model.tau_max()) + 1e-7);
    }
  }
}

TEST_CASE("coupling: zero gains feasible, huge gains infeasible") {
  DelayModel model = load_model(MODELS_DIR "/example1.json");
  SynthOptions opt;
  opt.degree = 1;
  Mat k0 = Mat::Zero(1, 2);
  std::vector<Mat> k1{Mat::Zero(1, 2)};
  std::vector<PolyMat1> k2{PolyMat1(1, 2, Interval{-0.99, 0.0}, 1)};
  ControllerGainsView zero_gains{k0, k1, k2};
  CHECK(coupling_feasible(zero_gains, model, opt, 1.0));

  Mat k0b = Mat::Constant(1, 2, 1e6);
  std::vector<Mat> k1b{Mat::Constant(1, 2, 1e6)};
  ControllerGainsView big{k0b, k1b, k2};
  SynthOptions tiny = opt;
  tiny.eps1 = 1e-9;
  tiny.eps2 = 1e-9;
  CHECK_FALSE(coupling_feasible(big, model, tiny, 1e3));
  CHECK_FALSE(coupling_feasible(big, model, tiny, 1e-3));
}
