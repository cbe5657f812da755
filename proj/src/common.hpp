#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace delsos {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};
struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& msg, long step) : std::runtime_error(msg), step_index(step) {}
  long step_index;
};
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace delsos
