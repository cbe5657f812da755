#pragma once

#include <string>
#include <vector>

#include "common.hpp"

namespace delsos {

// Plant data of the multi-delay system
//   xdot = A0 x + sum_i Ai x(t - tau_i) + B1 w + B2 u
//   y    = C2 x
//   z    = C10 x + sum_i C1i x(t - tau_i) + D1 w
//   ze   = C30 e + sum_i C3i e_i(t, -tau_i) + D3 w
struct DelayModel {
  std::string name;
  Mat A0;
  std::vector<Mat> A;
  Mat B1, B2;
  Mat C10;
  std::vector<Mat> C1;
  Mat C2;
  Mat C30;
  std::vector<Mat> C3;
  Mat D1, D3;
  std::vector<double> tau;

  int n() const { return static_cast<int>(A0.rows()); }
  int K() const { return static_cast<int>(tau.size()); }
  int m() const { return static_cast<int>(B2.cols()); }
  int r() const { return static_cast<int>(B1.cols()); }
  int q() const { return static_cast<int>(C2.rows()); }
  int p() const { return static_cast<int>(C10.rows()); }
  int p1() const { return static_cast<int>(C30.rows()); }
  double tau_max() const { return tau.back(); }

  void validate() const;
};

// Parses the JSON model document; unknown keys are rejected, optional
// matrices (C1, C3, D1, D3) default to zero.
DelayModel parse_model(const std::string& json_text);
DelayModel load_model(const std::string& path);
std::string model_to_json(const DelayModel& m);

}  // namespace delsos
