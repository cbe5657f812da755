#pragma once

#include <random>
#include <vector>

#include "polymat.hpp"

namespace delsos {

// Element of Z_{m,n,K}: a head vector paired with one function per delay
// channel, channel i living on [-tau_i, 0]. Channels are stored as n x 1
// polynomial columns so that inner products and operator images stay exact.
struct ZElement {
  Vec head;
  std::vector<PolyMat1> chan;
};

ZElement z_zero(int head_dim, int chan_dim, const std::vector<double>& tau);
ZElement z_sub(const ZElement& a, const ZElement& b);

// tau_K-weighted inner product on Z_{m,n,K}
double z_inner(const ZElement& a, const ZElement& b, double tau_K);
double z_norm2(const ZElement& a, double tau_K);

using Rng = std::mt19937_64;

// random polynomial element, coefficients ~ N(0,1)
ZElement random_z(int head_dim, int chan_dim, const std::vector<double>& tau, int degree, Rng& rng);
// random element of the state subspace X (chan_dim == head_dim, phi_i(0) == head)
ZElement random_z_in_x(int dim, const std::vector<double>& tau, int degree, Rng& rng);

// quadrature rules on [-1, 1]; mapped variants on [lo, hi]
struct QuadRule {
  Vec nodes;
  Vec weights;
};
QuadRule gauss_legendre(int n);
QuadRule gauss_lobatto(int n);
QuadRule map_rule(const QuadRule& r, double lo, double hi);

// weighted least-squares monomial fit through sampled matrix values
PolyMat1 fit_poly1(const Vec& nodes, const Vec& weights, const std::vector<Mat>& values,
                   int degree, Interval iv);
PolyMat2 fit_poly2(const Vec& s_nodes, const Vec& t_nodes, const Vec& s_w, const Vec& t_w,
                   const std::vector<std::vector<Mat>>& values,
                   const std::vector<std::vector<bool>>& mask, int degree, Interval s_iv,
                   Interval t_iv);

}  // namespace delsos
