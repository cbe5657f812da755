#pragma once

#include "gains.hpp"

namespace delsos {

enum class DisturbanceKind { Zero, StepLike, Sinc, Custom };

struct Disturbance {
  DisturbanceKind kind = DisturbanceKind::Sinc;
  double amplitude = 1.0;
  double onset = 1.0;   // step-like
  double ramp = 0.1;    // step-like
  double center = 5.0;  // sinc
  std::vector<double> samples;  // custom, sampled at sample_dt
  double sample_dt = 0.0;
};

double disturbance_value(const Disturbance& d, double t);

struct SimConfig {
  double dt = 0.0;       // 0: 0.5 * min(tau) / points_per_channel
  double horizon = 0.0;  // 0: 40 * tau_K
  int points_per_channel = 20;
  Disturbance disturbance;
  Vec x0;                 // empty: zero initial state (constant prehistory = x0)
  bool closed_loop = true;  // false: u = 0

  double resolved_dt(const std::vector<double>& tau) const;
  double resolved_horizon(const std::vector<double>& tau) const;
  void validate(const std::vector<double>& tau) const;
};

struct SimTrace {
  Vec t;
  Mat x, xhat, u, y, z, ze, w;  // one row per time step
  Vec cum_z2, cum_ze2, cum_w2;  // running squared L2 norms (trapezoid)
  bool diverged = false;
  long diverged_step = -1;
  double dt = 0.0;
  double horizon = 0.0;
  int points_per_channel = 0;
  std::string disturbance_name;
};

// Forward-difference closed-loop simulation: plant with ring-buffer delayed
// states, estimator head ODE, first-order upwind transport on each channel
// grid with the boundary node tied to xhat after every step.
SimTrace run_sim(const DelayModel& model, const ControllerGains* ctrl, const ObserverGains* obs,
                 const SimConfig& cfg);

double estimate_l2_gain(const SimTrace& trace);    // sqrt(int |z|^2 / int |w|^2)
double estimate_l2_gain_ze(const SimTrace& trace); // same for the estimation error output

void write_trace_csv(const SimTrace& trace, const std::string& path);
std::string trace_meta_json(const SimTrace& trace, const std::string& gains_provenance);
void write_trace_meta(const SimTrace& trace, const std::string& gains_provenance,
                      const std::string& path);

const char* to_string(DisturbanceKind k);
DisturbanceKind disturbance_from_string(const std::string& s);

}  // namespace delsos
