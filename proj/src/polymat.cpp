#include "polymat.hpp"

namespace delsos {

Mat pair_integral(const PolyMat1& a, const PolyMat1& b) {
  require(a.rows == b.rows && a.iv.same_as(b.iv), "pair_integral shape/interval mismatch");
  Mat acc = Mat::Zero(a.cols, b.cols);
  for (int k = 0; k <= a.degree(); ++k)
    for (int l = 0; l <= b.degree(); ++l)
      acc += a.coef[k].transpose() * b.coef[l] * mono_integral(a.iv, k + l);
  return acc;
}

PolyMat1 apply_kernel_right(const PolyMat2& r, const PolyMat1& g) {
  require(r.cols == g.rows && r.t_iv.same_as(g.iv), "apply_kernel_right mismatch");
  PolyMat1 out(r.rows, g.cols, r.s_iv, r.s_degree());
  for (int k = 0; k <= r.s_degree(); ++k)
    for (int l = 0; l <= r.t_degree(); ++l)
      for (int m = 0; m <= g.degree(); ++m)
        out.coef[k] += r.coef[k][l] * g.coef[m] * mono_integral(r.t_iv, l + m);
  return out;
}

PolyMat1 apply_kernel_left(const PolyMat1& f, const PolyMat2& r) {
  require(f.cols == r.rows && f.iv.same_as(r.s_iv), "apply_kernel_left mismatch");
  PolyMat1 out(f.rows, r.cols, r.t_iv, r.t_degree());
  for (int m = 0; m <= f.degree(); ++m)
    for (int k = 0; k <= r.s_degree(); ++k)
      for (int l = 0; l <= r.t_degree(); ++l)
        out.coef[l] += f.coef[m] * r.coef[k][l] * mono_integral(f.iv, m + k);
  return out;
}

PolyMat2 compose_kernels(const PolyMat2& r1, const PolyMat2& r2) {
  require(r1.cols == r2.rows && r1.t_iv.same_as(r2.s_iv), "compose_kernels mismatch");
  PolyMat2 out(r1.rows, r2.cols, r1.s_iv, r2.t_iv, r1.s_degree(), r2.t_degree());
  for (int k = 0; k <= r1.s_degree(); ++k)
    for (int l = 0; l <= r1.t_degree(); ++l)
      for (int p = 0; p <= r2.s_degree(); ++p)
        for (int q = 0; q <= r2.t_degree(); ++q)
          out.coef[k][q] += r1.coef[k][l] * r2.coef[p][q] * mono_integral(r1.t_iv, l + p);
  return out;
}

PolyMat2 outer_kernel(const PolyMat1& f, const PolyMat1& g) {
  require(f.cols == g.rows, "outer_kernel mismatch");
  PolyMat2 out(f.rows, g.cols, f.iv, g.iv, f.degree(), g.degree());
  for (int k = 0; k <= f.degree(); ++k)
    for (int l = 0; l <= g.degree(); ++l) out.coef[k][l] = f.coef[k] * g.coef[l];
  return out;
}

PolyMat2 kmul_left(const PolyMat1& f, const PolyMat2& r) {
  require(f.cols == r.rows && f.iv.same_as(r.s_iv), "kmul_left mismatch");
  PolyMat2 out(f.rows, r.cols, r.s_iv, r.t_iv, f.degree() + r.s_degree(), r.t_degree());
  for (int m = 0; m <= f.degree(); ++m)
    for (int k = 0; k <= r.s_degree(); ++k)
      for (int l = 0; l <= r.t_degree(); ++l) out.coef[m + k][l] += f.coef[m] * r.coef[k][l];
  return out;
}

PolyMat2 kmul_right(const PolyMat2& r, const PolyMat1& g) {
  require(r.cols == g.rows && r.t_iv.same_as(g.iv), "kmul_right mismatch");
  PolyMat2 out(r.rows, g.cols, r.s_iv, r.t_iv, r.s_degree(), r.t_degree() + g.degree());
  for (int k = 0; k <= r.s_degree(); ++k)
    for (int l = 0; l <= r.t_degree(); ++l)
      for (int m = 0; m <= g.degree(); ++m) out.coef[k][l + m] += r.coef[k][l] * g.coef[m];
  return out;
}

}  // namespace delsos
