#include "delsos/delsos.h"

#include <cstring>
#include <filesystem>
#include <json.hpp>

#include "pipeline.hpp"

using namespace delsos;
using nlohmann::json;

struct delsos_model {
  DelayModel m;
};
struct delsos_gains {
  GainsFile g;
};
struct delsos_report {
  std::string json_text;
  std::string text;
};
struct delsos_trace {
  SimTrace t;
  std::string provenance;
};

namespace {

thread_local std::string g_last_error;

template <class F>
delsos_status wrap(F&& fn) {
  try {
    fn();
    return DELSOS_OK;
  } catch (const ParseError& e) {
    g_last_error = e.what();
    return DELSOS_ERR_PARSE;
  } catch (const DimensionError& e) {
    g_last_error = e.what();
    return DELSOS_ERR_DIMENSION;
  } catch (const DomainError& e) {
    g_last_error = e.what();
    return DELSOS_ERR_DOMAIN;
  } catch (const StructuralError& e) {
    g_last_error = e.what();
    return DELSOS_ERR_INVALID_ARG;
  } catch (const SolverError& e) {
    g_last_error = e.what();
    return DELSOS_ERR_SOLVER;
  } catch (const DivergenceError& e) {
    g_last_error = e.what();
    return DELSOS_ERR_DIVERGED;
  } catch (const IoError& e) {
    g_last_error = e.what();
    return DELSOS_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DELSOS_ERR_INTERNAL;
  }
}

json parse_options(const char* options_json) {
  if (!options_json || !*options_json) return json::object();
  json j = json::parse(options_json);  // throws -> mapped by wrap
  if (!j.is_object()) throw ParseError("options must be a JSON object");
  return j;
}

SynthOptions synth_options_from(const json& j) {
  SynthOptions o;
  o.degree = j.value("degree", o.degree);
  o.eps = j.value("eps", o.eps);
  o.eps1 = j.value("eps1", o.eps1);
  o.eps2 = j.value("eps2", o.eps2);
  o.eps3 = j.value("eps3", o.eps3);
  o.gamma_lo = j.value("gamma_lo", o.gamma_lo);
  o.gamma_hi = j.value("gamma_hi", o.gamma_hi);
  o.bisect_tol = j.value("bisect_tol", o.bisect_tol);
  o.r_lo = j.value("r_lo", o.r_lo);
  o.r_hi = j.value("r_hi", o.r_hi);
  o.r_points = j.value("r_points", o.r_points);
  return o;
}

SimConfig sim_config_from(const json& j) {
  SimConfig c;
  c.dt = j.value("dt", c.dt);
  c.horizon = j.value("horizon", c.horizon);
  c.points_per_channel = j.value("points_per_channel", c.points_per_channel);
  c.closed_loop = j.value("closed_loop", c.closed_loop);
  if (j.contains("disturbance"))
    c.disturbance.kind = disturbance_from_string(j.at("disturbance").get<std::string>());
  c.disturbance.amplitude = j.value("amplitude", c.disturbance.amplitude);
  c.disturbance.onset = j.value("onset", c.disturbance.onset);
  c.disturbance.ramp = j.value("ramp", c.disturbance.ramp);
  c.disturbance.center = j.value("center", c.disturbance.center);
  if (j.contains("x0")) {
    const auto& a = j.at("x0");
    c.x0 = Vec(a.size());
    for (size_t i = 0; i < a.size(); ++i) c.x0(i) = a[i].get<double>();
  }
  return c;
}

ControllerGains* as_controller(const GainsFile& g) {
  return const_cast<ControllerGains*>(&g.controller);
}

}  // namespace

extern "C" {

const char* delsos_version(void) { return "1.0.0"; }
const char* delsos_last_error(void) { return g_last_error.c_str(); }
void delsos_string_free(char* s) { std::free(s); }

delsos_status delsos_model_load(const char* path, delsos_model** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  return wrap([&] { *out = new delsos_model{load_model(path)}; });
}

delsos_status delsos_model_parse(const char* json_text, delsos_model** out) {
  if (!json_text || !out) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  return wrap([&] { *out = new delsos_model{parse_model(json_text)}; });
}

void delsos_model_free(delsos_model* m) { delete m; }

delsos_status delsos_synth(const delsos_model* m, const char* options_json,
                           delsos_gains** gains_out, delsos_report** report_out) {
  if (!m || !gains_out) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  return wrap([&] {
    json j = parse_options(options_json);
    PipelineOptions popt;
    popt.synth = synth_options_from(j);
    popt.gains.invert.grid_size = j.value("grid", popt.gains.invert.grid_size);
    popt.gains.invert.fit_degree = popt.synth.degree + 2;
    popt.gains.max_fit_residual = j.value("max_fit_residual", 1e-4);
    popt.run_coupling = j.value("coupling", true);
    SynthesisOutcome s = run_synthesis(m->m, popt);
    if (!s.st_controller.ok)
      throw SolverError("controller synthesis failed: " + s.st_controller.detail);
    if (!s.st_estimator.ok)
      throw SolverError("estimator synthesis failed: " + s.st_estimator.detail);
    if (!s.st_gains.ok) throw SolverError("gain reconstruction failed: " + s.st_gains.detail);
    *gains_out = new delsos_gains{to_gains_file(m->m, s)};
    if (report_out)
      *report_out = new delsos_report{synthesis_report_json(m->m, s, popt), ""};
  });
}

delsos_status delsos_gains_save(const delsos_gains* g, const char* path) {
  if (!g || !path) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  return wrap([&] { save_gains(g->g, path); });
}

delsos_status delsos_gains_load(const char* path, delsos_gains** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  return wrap([&] { *out = new delsos_gains{load_gains(path)}; });
}

void delsos_gains_free(delsos_gains* g) { delete g; }

delsos_status delsos_simulate(const delsos_model* m, const delsos_gains* g,
                              const char* options_json, delsos_trace** out) {
  if (!m || !out) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  return wrap([&] {
    json j = parse_options(options_json);
    SimConfig cfg = sim_config_from(j);
    if (g) {
      if (g->g.tau.size() != m->m.tau.size())
        throw DimensionError("gains delay count does not match the model");
      if (g->g.controller.K0.cols() != m->m.n() || g->g.observer.L1.rows() != m->m.n())
        throw DimensionError("gains dimensions do not match the model");
    }
    SimTrace tr = run_sim(m->m, g ? as_controller(g->g) : nullptr,
                          g ? &g->g.observer : nullptr, cfg);
    *out = new delsos_trace{std::move(tr), g ? "gains handle" : "none"};
  });
}

delsos_status delsos_trace_save_csv(const delsos_trace* t, const char* path) {
  if (!t || !path) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  return wrap([&] { write_trace_csv(t->t, path); });
}

delsos_status delsos_trace_save_meta(const delsos_trace* t, const char* path) {
  if (!t || !path) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  return wrap([&] { write_trace_meta(t->t, t->provenance, path); });
}

delsos_status delsos_trace_l2_gain(const delsos_trace* t, double* out) {
  if (!t || !out) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  return wrap([&] { *out = estimate_l2_gain(t->t); });
}

delsos_status delsos_trace_diverged(const delsos_trace* t, int* out) {
  if (!t || !out) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  *out = t->t.diverged ? 1 : 0;
  return DELSOS_OK;
}

void delsos_trace_free(delsos_trace* t) { delete t; }

delsos_status delsos_table1(const char* options_json, delsos_report** out) {
  if (!out) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  return wrap([&] {
    json j = parse_options(options_json);
    std::string dir = j.value("models_dir", "models");
    std::vector<int> degrees = {1, 2};
    if (j.contains("degrees")) {
      degrees.clear();
      for (const auto& d : j.at("degrees")) degrees.push_back(d.get<int>());
    }
    std::vector<std::pair<std::string, DelayModel>> models;
    for (const char* name : {"example1", "example2", "example3"}) {
      std::string path = dir + "/" + name + ".json";
      if (!std::filesystem::exists(path)) throw IoError("bundled model not found: " + path);
      models.emplace_back(name, load_model(path));
    }
    SynthOptions base = synth_options_from(j);
    TableReport rep = run_table1(models, degrees, base, j.value("parallel", true));
    *out = new delsos_report{table_report_json(rep), table_report_text(rep)};
  });
}

delsos_status delsos_report_to_json(const delsos_report* r, char** out_text) {
  if (!r || !out_text) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  *out_text = strdup(r->json_text.c_str());
  return *out_text ? DELSOS_OK : DELSOS_ERR_INTERNAL;
}

delsos_status delsos_report_to_text(const delsos_report* r, char** out_text) {
  if (!r || !out_text) {
    g_last_error = "null argument";
    return DELSOS_ERR_INVALID_ARG;
  }
  *out_text = strdup(r->text.empty() ? r->json_text.c_str() : r->text.c_str());
  return *out_text ? DELSOS_OK : DELSOS_ERR_INTERNAL;
}

void delsos_report_free(delsos_report* r) { delete r; }

}  // extern "C"
