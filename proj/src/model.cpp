#include "model.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace delsos {

using nlohmann::json;

void DelayModel::validate() const {
  const int nn = n(), kk = K();
  require(kk >= 1, "model: at least one delay required");
  for (int i = 0; i < kk; ++i) {
    if (tau[i] <= 0) throw ParseError("model: delays must be positive");
    if (i > 0 && tau[i] <= tau[i - 1]) throw ParseError("model: delays must be strictly increasing");
  }
  auto shape = [&](const Mat& mm, int rr, int cc, const std::string& key) {
    if (mm.rows() != rr || mm.cols() != cc)
      throw ParseError("model: key '" + key + "' has shape " + std::to_string(mm.rows()) + "x" +
                       std::to_string(mm.cols()) + ", expected " + std::to_string(rr) + "x" +
                       std::to_string(cc));
  };
  shape(A0, nn, nn, "A0");
  require(static_cast<int>(A.size()) == kk, "model: A list length must match tau");
  for (int i = 0; i < kk; ++i) shape(A[i], nn, nn, "A[" + std::to_string(i) + "]");
  shape(B1, nn, r(), "B1");
  shape(B2, nn, m(), "B2");
  shape(C10, p(), nn, "C10");
  require(static_cast<int>(C1.size()) == kk, "model: C1 list length must match tau");
  for (int i = 0; i < kk; ++i) shape(C1[i], p(), nn, "C1[" + std::to_string(i) + "]");
  shape(C2, q(), nn, "C2");
  shape(C30, p1(), nn, "C30");
  require(static_cast<int>(C3.size()) == kk, "model: C3 list length must match tau");
  for (int i = 0; i < kk; ++i) shape(C3[i], p1(), nn, "C3[" + std::to_string(i) + "]");
  shape(D1, p(), r(), "D1");
  shape(D3, p1(), r(), "D3");
}

namespace {

Mat mat_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError("model: key '" + key + "' must be an array of rows");
  const size_t rows = j.size(), cols = j[0].size();
  Mat m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw ParseError("model: key '" + key + "' has ragged rows");
    for (size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number())
        throw ParseError("model: key '" + key + "' contains a non-numeric entry");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

std::vector<Mat> mat_list(const json& j, const std::string& key) {
  std::vector<Mat> out;
  if (!j.is_array()) throw ParseError("model: key '" + key + "' must be a list of matrices");
  for (size_t i = 0; i < j.size(); ++i)
    out.push_back(mat_from_json(j[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

DelayModel parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("model: invalid JSON: ") + e.what());
  }
  static const std::set<std::string> known = {"name", "tau", "A0",  "A",  "B1", "B2",
                                              "C10",  "C1",  "C2",  "C30", "C3", "D1",
                                              "D3",   "synthesis",  "sim"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ParseError("model: unknown key '" + it.key() + "'");
  for (const char* req : {"tau", "A0", "A", "B1", "B2", "C10", "C2", "C30"})
    if (!j.contains(req)) throw ParseError(std::string("model: missing key '") + req + "'");

  DelayModel m;
  m.name = j.value("name", "");
  for (const auto& t : j.at("tau")) m.tau.push_back(t.get<double>());
  m.A0 = mat_from_json(j.at("A0"), "A0");
  m.A = mat_list(j.at("A"), "A");
  m.B1 = mat_from_json(j.at("B1"), "B1");
  m.B2 = mat_from_json(j.at("B2"), "B2");
  m.C10 = mat_from_json(j.at("C10"), "C10");
  m.C2 = mat_from_json(j.at("C2"), "C2");
  m.C30 = mat_from_json(j.at("C30"), "C30");

  const int nn = m.n(), kk = m.K();
  m.C1 = j.contains("C1") ? mat_list(j.at("C1"), "C1") : std::vector<Mat>(kk, Mat::Zero(m.p(), nn));
  m.C3 = j.contains("C3") ? mat_list(j.at("C3"), "C3") : std::vector<Mat>(kk, Mat::Zero(m.p1(), nn));
  m.D1 = j.contains("D1") ? mat_from_json(j.at("D1"), "D1") : Mat::Zero(m.p(), m.r());
  m.D3 = j.contains("D3") ? mat_from_json(j.at("D3"), "D3") : Mat::Zero(m.p1(), m.r());
  m.validate();
  return m;
}

DelayModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open model file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_model(ss.str());
}

std::string model_to_json(const DelayModel& m) {
  json j;
  if (!m.name.empty()) j["name"] = m.name;
  j["tau"] = m.tau;
  j["A0"] = mat_to_json(m.A0);
  j["A"] = json::array();
  for (const auto& a : m.A) j["A"].push_back(mat_to_json(a));
  j["B1"] = mat_to_json(m.B1);
  j["B2"] = mat_to_json(m.B2);
  j["C10"] = mat_to_json(m.C10);
  j["C1"] = json::array();
  for (const auto& c : m.C1) j["C1"].push_back(mat_to_json(c));
  j["C2"] = mat_to_json(m.C2);
  j["C30"] = mat_to_json(m.C30);
  j["C3"] = json::array();
  for (const auto& c : m.C3) j["C3"].push_back(mat_to_json(c));
  j["D1"] = mat_to_json(m.D1);
  j["D3"] = mat_to_json(m.D3);
  return j.dump(2);
}

}  // namespace delsos
