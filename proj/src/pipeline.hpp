#pragma once

#include "sim.hpp"

namespace delsos {

struct PipelineOptions {
  SynthOptions synth;
  GainOptions gains;
  SimConfig sim;
  bool run_coupling = true;
  std::string out_dir;
};

struct StageStatus {
  bool ok = false;
  std::string detail;
  double seconds = 0.0;
};

struct SynthesisOutcome {
  // bisected minima
  double gamma1 = 0.0, gamma2 = 0.0;
  int solves1 = 0, solves2 = 0;
  // reconstruction certificates (possibly relaxed for conditioning)
  double gamma1_gains = 0.0, gamma2_gains = 0.0;
  double s_floor1 = 0.0, s_floor2 = 0.0;
  int fit_degree1 = 0, fit_degree2 = 0;
  ControllerCert ctrl_cert;
  EstimatorCert est_cert;
  ControllerGains controller;
  ObserverGains observer;
  CouplingResult coupling;
  double composite = 0.0;
  StageStatus st_controller, st_estimator, st_gains, st_coupling;
};

// full synthesis pipeline: controller bisection, estimator bisection,
// conditioned reconstruction solves, gain fitting, coupling r-search
SynthesisOutcome run_synthesis(const DelayModel& model, const PipelineOptions& opt);

GainsFile to_gains_file(const DelayModel& model, const SynthesisOutcome& s);

std::string synthesis_report_json(const DelayModel& model, const SynthesisOutcome& s,
                                  const PipelineOptions& opt);

// Table-1-style regression over the bundled examples
struct TableCell {
  std::string example;
  int degree = 0;
  double gamma1 = 0.0, gamma2 = 0.0;
  double ref_gamma1 = 0.0, ref_gamma2 = 0.0;
  std::string class1, class2;  // pass | conservative-certificate | out-of-band | failed
  double seconds = 0.0;
  std::string error;
};
struct TableReport {
  std::vector<TableCell> cells;
  double total_seconds = 0.0;
};
TableReport run_table1(const std::vector<std::pair<std::string, DelayModel>>& models,
                       const std::vector<int>& degrees, const SynthOptions& base,
                       bool parallel = true);
std::string table_report_json(const TableReport& t);
std::string table_report_text(const TableReport& t);

// reference values regressed against (gamma1min / gamma2min rows)
struct TableReference {
  double gamma1[3] = {0, 0, 0};  // d = 1, 2, 4
  double gamma2[3] = {0, 0, 0};
};
const TableReference* table_reference(const std::string& example_name);

}  // namespace delsos
