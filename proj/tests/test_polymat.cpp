#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"

using namespace delsos;
using namespace delsos::testing;

TEST_CASE("eval: constant, linear, mixed") {
  Interval iv{-1.0, 0.0};
  Mat c = random_mat(2, 3, *[] { static Rng r(1); return &r; }());
  CHECK((PolyMat1::constant(c, iv).eval(-0.3) - c).norm() == 0.0);

  PolyMat1 lin(2, 2, iv, 1);
  lin.coef[1] = Mat::Identity(2, 2);
  CHECK((lin.eval(-1.0) + Mat::Identity(2, 2)).norm() == 0.0);

  PolyMat1 p(2, 2, iv, 2);
  p.coef[0] << 1, 0, 0, 0;
  p.coef[1] << 0, 1, 0, 0;
  p.coef[2] << 0, 0, 1, 0;
  Mat expect(2, 2);
  expect << 1, -0.5, 0.25, 0;
  CHECK((p.eval(-0.5) - expect).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(p.eval(0.5), DomainError);
}

TEST_CASE("derivative: power rule and finite differences") {
  Interval iv{-1.0, 0.0};
  PolyMat1 c = PolyMat1::constant(Mat::Ones(2, 2), iv);
  CHECK(c.derivative().eval(-0.5).norm() == 0.0);

  PolyMat1 sq(1, 1, iv, 2);
  sq.coef[2](0, 0) = 3.0;
  PolyMat1 d = sq.derivative();
  CHECK(d.degree() == 1);
  CHECK(d.coef[1](0, 0) == 6.0);

  PolyMat1 cubic(1, 1, iv, 3);
  cubic.coef[3](0, 0) = 1.0;
  PolyMat1 dc = cubic.derivative();
  for (double s : {-0.9, -0.7, -0.5, -0.3, -0.1}) {
    Mat fd = central_diff([&](double t) { return cubic.eval(t); }, s);
    CHECK(std::abs(dc.eval(s)(0, 0) - fd(0, 0)) / std::abs(fd(0, 0)) < 1e-7);
  }
}

TEST_CASE("derivative matches finite differences on random polynomials") {
  Rng rng(7);
  for (int t = 0; t < 5; ++t) {
    PolyMat1 p = random_poly1(2, 2, Interval{-1.5, 0.0}, 5, rng);
    PolyMat1 d = p.derivative();
    for (int i = 1; i <= 10; ++i) {
      double s = -1.5 + 1.5 * i / 11.0;
      Mat fd = central_diff([&](double t2) { return p.eval(t2); }, s);
      double rel = (d.eval(s) - fd).cwiseAbs().maxCoeff() / (1.0 + fd.cwiseAbs().maxCoeff());
      CHECK(rel < 1e-6);
    }
  }
}

TEST_CASE("definite integral: closed form vs quadrature") {
  Interval iv{-1.0, 0.0};
  PolyMat1 z(3, 2, iv, 0);
  CHECK(z.integral().norm() == 0.0);

  PolyMat1 s1(1, 1, iv, 1);
  s1.coef[1](0, 0) = 1.0;
  CHECK(s1.integral()(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));

  PolyMat1 s2(1, 1, iv, 2);
  s2.coef[2](0, 0) = 1.0;
  CHECK(s2.integral()(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  Rng rng(11);
  for (int deg : {3, 7, 12}) {
    PolyMat1 p = random_poly1(2, 2, Interval{-0.7, 0.0}, deg, rng);
    Mat q = quadrature([&](double s) { return p.eval(s); }, p.iv);
    CHECK((p.integral() - q).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("kernel partials") {
  Interval iv{-1.0, 0.0};
  PolyMat2 c(1, 1, iv, iv, 0, 0);
  c.coef[0][0](0, 0) = 4.0;
  CHECK(c.partial_s().eval(-0.5, -0.5).norm() == 0.0);

  PolyMat2 st(1, 1, iv, iv, 1, 1);
  st.coef[1][1](0, 0) = 1.0;  // s*t
  CHECK(st.partial_s().eval(-0.3, -0.8)(0, 0) == doctest::Approx(-0.8));

  PolyMat2 s2t(1, 1, iv, iv, 2, 1);
  s2t.coef[2][1](0, 0) = 1.0;  // s^2 t
  PolyMat2 dt = s2t.partial_t();
  for (double s : {-0.9, -0.5, -0.2}) {
    for (double t : {-0.8, -0.4}) {
      double fd = (s2t.eval(s, t + 1e-6)(0, 0) - s2t.eval(s, t - 1e-6)(0, 0)) / 2e-6;
      CHECK(std::abs(dt.eval(s, t)(0, 0) - fd) < 1e-7 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("arithmetic: identities and degree bookkeeping") {
  Rng rng(3);
  Interval iv{-1.0, 0.0};
  PolyMat1 a = random_poly1(2, 2, iv, 3, rng);
  PolyMat1 zero(2, 2, iv, 3);
  PolyMat1 sum = a + zero;
  for (int k = 0; k <= 3; ++k) CHECK((sum.coef[k] - a.coef[k]).norm() == 0.0);

  PolyMat1 cs(2, 2, iv, 1), ds(2, 2, iv, 1);
  cs.coef[1] = random_mat(2, 2, rng);
  ds.coef[1] = random_mat(2, 2, rng);
  PolyMat1 prod = matmul(cs, ds);
  CHECK(prod.degree() == 2);
  CHECK((prod.coef[2] - cs.coef[1] * ds.coef[1]).norm() == 0.0);
  CHECK(prod.coef[0].norm() == 0.0);
  CHECK(prod.coef[1].norm() == 0.0);

  PolyMat2 r(1, 1, iv, iv, 1, 0);
  r.coef[1][0](0, 0) = 1.0;  // R(s,t) = s
  PolyMat2 sw = r.tswap();   // should be t
  CHECK(sw.eval(-0.25, -0.75)(0, 0) == doctest::Approx(-0.75));

  PolyMat2 k2 = random_poly2(2, 3, iv, Interval{-0.5, 0.0}, 3, rng);
  PolyMat2 tw2 = k2.tswap().tswap();
  for (int k = 0; k <= 3; ++k)
    for (int l = 0; l <= 3; ++l) CHECK((tw2.coef[k][l] - k2.coef[k][l]).norm() == 0.0);

  // coefficient-space arithmetic introduces no approximation: with integer
  // coefficients (exact float sums) the round trip is bit-exact
  std::uniform_int_distribution<int> di(-50, 50);
  PolyMat1 ai(2, 2, iv, 3), bi(2, 2, iv, 3);
  for (int k = 0; k <= 3; ++k) {
    ai.coef[k] = Mat::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return double(di(rng)); });
    bi.coef[k] = Mat::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return double(di(rng)); });
  }
  PolyMat1 back = (ai + bi) - bi;
  for (int k = 0; k <= 3; ++k) CHECK((back.coef[k] - ai.coef[k]).norm() == 0.0);
}

TEST_CASE("kernel contractions against quadrature") {
  Rng rng(17);
  Interval is{-1.0, 0.0}, it{-0.6, 0.0};
  PolyMat2 r = random_poly2(2, 2, is, it, 2, rng);
  PolyMat1 g = random_poly1(2, 1, it, 3, rng);
  PolyMat1 ar = apply_kernel_right(r, g);
  for (double s : {-0.8, -0.4, -0.1}) {
    Mat q = quadrature([&](double t) { return Mat(r.eval(s, t) * g.eval(t)); }, it);
    CHECK((ar.eval(s) - q).cwiseAbs().maxCoeff() < 1e-12);
  }
  PolyMat1 f = random_poly1(1, 2, is, 2, rng);
  PolyMat1 al = apply_kernel_left(f, r);
  for (double t : {-0.5, -0.2}) {
    Mat q = quadrature([&](double s) { return Mat(f.eval(s) * r.eval(s, t)); }, is);
    CHECK((al.eval(t) - q).cwiseAbs().maxCoeff() < 1e-12);
  }
  PolyMat2 r2 = random_poly2(2, 2, it, is, 2, rng);
  PolyMat2 comp = compose_kernels(r, r2);
  Mat q = quadrature([&](double xi) { return Mat(r.eval(-0.3, xi) * r2.eval(xi, -0.9)); }, it);
  CHECK((comp.eval(-0.3, -0.9) - q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("monomial basis evaluation") {
  MonomialBasis b{3, Interval{-1.0, 0.0}};
  Vec v = b.eval(-0.5);
  CHECK(v.size() == 4);
  CHECK(v(0) == 1.0);
  CHECK(v(3) == doctest::Approx(-0.125));
}
