#pragma once

#include "synthesis.hpp"

namespace delsos {

// Explicit controller gains u = K0 xhat + sum_i K1i phihat_i(-tau_i)
//                              + sum_i int K2i(s) phihat_i(s) ds
struct ControllerGains {
  Mat K0;
  std::vector<Mat> K1;
  std::vector<PolyMat1> K2;
  double fit_residual = 0.0;
  double inversion_residual = 0.0;
  double inversion_condition = 0.0;

  ControllerGainsView view() const { return {K0, K1, K2}; }
};

// Observer gains of the estimator dynamics; L5 comes out s-dependent from the
// composition with the inverse certificate operator.
struct ObserverGains {
  Mat L1;
  std::vector<Mat> L2;
  std::vector<PolyMat1> L3, L4, L6;
  std::vector<std::vector<PolyMat1>> L5;
  std::vector<std::vector<PolyMat2>> L7;
  double fit_residual = 0.0;
  double inversion_residual = 0.0;
  double inversion_condition = 0.0;
};

struct GainOptions {
  InvertConfig invert;       // grid/fit degree for the certificate inverse
  double max_fit_residual = 1e-3;
  int residual_samples = 100;
};

ControllerGains reconstruct_controller(const ControllerCert& cert, const DelayModel& model,
                                       const GainOptions& opt);
ObserverGains reconstruct_observer(const EstimatorCert& cert, const DelayModel& model,
                                   const GainOptions& opt);

// apply the reconstructed maps (used by the residual oracles and tests)
Vec apply_h_vars(const ControllerCert& cert, const ZElement& z);
Vec apply_controller_gains(const ControllerGains& g, const ZElement& z);
ZElement apply_observer_gains(const ObserverGains& g, const std::vector<double>& tau,
                              const ZElement& y);

// magnitude proxies used to prefer tame gain sets for simulation
double controller_gain_scale(const ControllerGains& g);
double observer_gain_scale(const ObserverGains& g);

// serialization (schema: matrices row-major, polynomials as coefficient lists
// with interval metadata, residuals included)
struct GainsFile {
  int schema_version = 1;
  std::vector<double> tau;
  ControllerGains controller;
  ObserverGains observer;
  double gamma1 = 0.0, gamma2 = 0.0, r = 0.0, composite_bound = 0.0;
  double eps1 = 0.0, eps2 = 0.0;
  std::string solver_info;
};

std::string gains_to_json(const GainsFile& g);
GainsFile gains_from_json(const std::string& text);
void save_gains(const GainsFile& g, const std::string& path);
GainsFile load_gains(const std::string& path);

}  // namespace delsos
