#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "delsos/delsos.h"

namespace {

using nlohmann::json;

int fail(const char* stage, delsos_status rc) {
  std::fprintf(stderr, "error [%s]: %s (status %d)\n", stage, delsos_last_error(), int(rc));
  return 1;
}

struct SynthFlags {
  int degree = 1;
  double eps = 1e-4, eps1 = 1e-3, eps2 = 1e-3, eps3 = 1e-6;
  double gamma_lo = 1e-6, gamma_hi = 0.0, bisect_tol = 1e-3;
  double r_lo = 1e-3, r_hi = 1e3;
  int r_points = 25;
  std::string solver_settings;
  bool no_coupling = false;

  json to_json() const {
    json j{{"degree", degree},     {"eps", eps},
           {"eps1", eps1},         {"eps2", eps2},
           {"eps3", eps3},         {"gamma_lo", gamma_lo},
           {"gamma_hi", gamma_hi}, {"bisect_tol", bisect_tol},
           {"r_lo", r_lo},         {"r_hi", r_hi},
           {"r_points", r_points}, {"coupling", !no_coupling}};
    if (!solver_settings.empty()) {
      json extra = json::parse(solver_settings);
      for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    }
    return j;
  }
};

void add_synth_flags(CLI::App* app, SynthFlags& f) {
  app->add_option("--degree", f.degree, "polynomial degree d of the decision variables");
  app->add_option("--eps", f.eps, "coercivity margin for the certificate operators");
  app->add_option("--eps1", f.eps1, "controller strictness margin");
  app->add_option("--eps2", f.eps2, "estimator strictness margin");
  app->add_option("--eps3", f.eps3, "coupling head margin");
  app->add_option("--gamma-lo", f.gamma_lo, "bisection lower seed");
  app->add_option("--gamma-hi", f.gamma_hi, "bisection upper seed (0 doubles from 1)");
  app->add_option("--bisect-tol", f.bisect_tol, "relative bisection tolerance");
  app->add_option("--r-sweep", f.r_points, "number of points in the logarithmic r sweep");
  app->add_option("--r-lo", f.r_lo, "r sweep lower bound");
  app->add_option("--r-hi", f.r_hi, "r sweep upper bound");
  app->add_option("--solver-settings", f.solver_settings,
                  "extra synthesis options as a JSON object");
  app->add_flag("--no-coupling", f.no_coupling, "skip the coupling r-search");
}

struct SimFlags {
  double dt = 0.0, horizon = 0.0;
  int points = 20;
  std::string disturbance = "sinc";
  double amplitude = 1.0;
  std::vector<double> x0;
  bool open_loop = false;

  json to_json() const {
    json j{{"dt", dt},
           {"horizon", horizon},
           {"points_per_channel", points},
           {"disturbance", disturbance},
           {"amplitude", amplitude},
           {"closed_loop", !open_loop}};
    if (!x0.empty()) j["x0"] = x0;
    return j;
  }
};

void add_sim_flags(CLI::App* app, SimFlags& f) {
  app->add_option("--dt", f.dt, "time step (0 = stability-limited default)");
  app->add_option("--horizon", f.horizon, "simulation horizon (0 = 40 tau_K)");
  app->add_option("--points-per-channel", f.points, "spatial points per delay channel");
  app->add_option("--disturbance", f.disturbance, "disturbance family: sinc|step|zero");
  app->add_option("--amplitude", f.amplitude, "disturbance amplitude");
  app->add_option("--x0", f.x0, "initial plant state");
  app->add_flag("--open-loop", f.open_loop, "run with u = 0");
}

std::string joined(const std::string& dir, const std::string& leaf) {
  return (std::filesystem::path(dir) / leaf).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delsos: H-infinity output-feedback synthesis for multi-delay systems"};
  app.require_subcommand(1);

  std::string model_path, gains_path, out_dir = ".";
  SynthFlags sf;
  SimFlags mf;

  auto* synth = app.add_subcommand("synth", "synthesize controller and observer gains");
  synth->add_option("model", model_path, "model JSON file")->required();
  synth->add_option("--out-dir", out_dir, "output directory");
  add_synth_flags(synth, sf);

  auto* sim = app.add_subcommand("sim", "simulate the closed loop with saved gains");
  sim->add_option("model", model_path, "model JSON file")->required();
  sim->add_option("gains", gains_path, "gains JSON file (omit with --open-loop)");
  sim->add_option("--out-dir", out_dir, "output directory");
  add_sim_flags(sim, mf);

  std::string models_dir = "models";
  std::vector<int> degrees = {1, 2};
  bool with_d4 = false, serial = false;
  auto* table = app.add_subcommand("table1", "gamma regression across the bundled examples");
  table->add_option("--models-dir", models_dir, "directory with example1..3.json");
  table->add_option("--out-dir", out_dir, "output directory");
  table->add_flag("--with-d4", with_d4, "extend the sweep to degree 4");
  table->add_flag("--serial", serial, "disable per-cell parallelism");
  add_synth_flags(table, sf);

  CLI11_PARSE(app, argc, argv);
  std::filesystem::create_directories(out_dir);

  if (synth->parsed()) {
    delsos_model* model = nullptr;
    delsos_status rc = delsos_model_load(model_path.c_str(), &model);
    if (rc != DELSOS_OK) return fail("model", rc);
    delsos_gains* gains = nullptr;
    delsos_report* report = nullptr;
    rc = delsos_synth(model, sf.to_json().dump().c_str(), &gains, &report);
    if (rc != DELSOS_OK) {
      delsos_model_free(model);
      return fail("synth", rc);
    }
    std::string gpath = joined(out_dir, "gains.json");
    rc = delsos_gains_save(gains, gpath.c_str());
    if (rc != DELSOS_OK) return fail("gains", rc);
    char* text = nullptr;
    delsos_report_to_json(report, &text);
    std::string rpath = joined(out_dir, "synth_report.json");
    if (FILE* f = std::fopen(rpath.c_str(), "w")) {
      std::fputs(text, f);
      std::fclose(f);
    }
    std::printf("%s\n", text);
    std::printf("gains written to %s\nreport written to %s\n", gpath.c_str(), rpath.c_str());
    delsos_string_free(text);
    delsos_report_free(report);
    delsos_gains_free(gains);
    delsos_model_free(model);
    return 0;
  }

  if (sim->parsed()) {
    delsos_model* model = nullptr;
    delsos_status rc = delsos_model_load(model_path.c_str(), &model);
    if (rc != DELSOS_OK) return fail("model", rc);
    delsos_gains* gains = nullptr;
    if (!gains_path.empty()) {
      rc = delsos_gains_load(gains_path.c_str(), &gains);
      if (rc != DELSOS_OK) {
        delsos_model_free(model);
        return fail("gains", rc);
      }
    } else if (!mf.open_loop) {
      std::fprintf(stderr, "error: a gains file is required unless --open-loop is set\n");
      return 1;
    }
    delsos_trace* trace = nullptr;
    rc = delsos_simulate(model, gains, mf.to_json().dump().c_str(), &trace);
    if (rc != DELSOS_OK) return fail("sim", rc);
    std::string cpath = joined(out_dir, "trace.csv");
    std::string mpath = joined(out_dir, "trace.json");
    if ((rc = delsos_trace_save_csv(trace, cpath.c_str())) != DELSOS_OK) return fail("trace", rc);
    if ((rc = delsos_trace_save_meta(trace, mpath.c_str())) != DELSOS_OK) return fail("trace", rc);
    int diverged = 0;
    delsos_trace_diverged(trace, &diverged);
    double gain = 0.0;
    if (delsos_trace_l2_gain(trace, &gain) == DELSOS_OK)
      std::printf("estimated L2 gain: %.6f\n", gain);
    std::printf("trace written to %s (diverged: %s)\n", cpath.c_str(), diverged ? "yes" : "no");
    delsos_trace_free(trace);
    if (gains) delsos_gains_free(gains);
    delsos_model_free(model);
    return diverged ? 2 : 0;
  }

  if (table->parsed()) {
    json opts = sf.to_json();
    opts["models_dir"] = models_dir;
    if (with_d4) degrees.push_back(4);
    opts["degrees"] = degrees;
    opts["parallel"] = !serial;
    delsos_report* report = nullptr;
    delsos_status rc = delsos_table1(opts.dump().c_str(), &report);
    if (rc != DELSOS_OK) return fail("table1", rc);
    char* text = nullptr;
    delsos_report_to_text(report, &text);
    std::printf("%s", text);
    delsos_string_free(text);
    delsos_report_to_json(report, &text);
    std::string rpath = joined(out_dir, "table1_report.json");
    if (FILE* f = std::fopen(rpath.c_str(), "w")) {
      std::fputs(text, f);
      std::fclose(f);
    }
    std::printf("report written to %s\n", rpath.c_str());
    delsos_string_free(text);
    delsos_report_free(report);
    return 0;
  }
  return 0;
}
