/* delsos: H-infinity estimator-based output-feedback synthesis for linear
 * multi-delay systems via sum-of-squares programming, with explicit gain
 * reconstruction and a discretized closed-loop simulator.
 *
 * All functions return delsos_status; on error, delsos_last_error() holds a
 * thread-local message. Objects are opaque handles freed by their _free
 * function. Option strings are JSON documents; pass NULL for defaults.
 */
#ifndef DELSOS_H
#define DELSOS_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  DELSOS_OK = 0,
  DELSOS_ERR_INVALID_ARG = 1,
  DELSOS_ERR_PARSE = 2,
  DELSOS_ERR_DIMENSION = 3,
  DELSOS_ERR_DOMAIN = 4,
  DELSOS_ERR_SOLVER = 5,
  DELSOS_ERR_DIVERGED = 6,
  DELSOS_ERR_IO = 7,
  DELSOS_ERR_INTERNAL = 8
} delsos_status;

typedef struct delsos_model delsos_model;
typedef struct delsos_gains delsos_gains;
typedef struct delsos_report delsos_report;
typedef struct delsos_trace delsos_trace;

const char* delsos_version(void);
const char* delsos_last_error(void);
void delsos_string_free(char* s);

/* model files: JSON documents with tau, A0, A, B1, B2, C10, C2, C30 and
 * optional C1, C3, D1, D3 */
delsos_status delsos_model_load(const char* path, delsos_model** out);
delsos_status delsos_model_parse(const char* json_text, delsos_model** out);
void delsos_model_free(delsos_model* m);

/* synthesis options (all optional): {"degree":1,"eps":...,"eps1":...,
 * "eps2":...,"eps3":...,"gamma_lo":...,"gamma_hi":...,"bisect_tol":...,
 * "r_lo":...,"r_hi":...,"r_points":...,"grid":...,"coupling":true} */
delsos_status delsos_synth(const delsos_model* m, const char* options_json,
                           delsos_gains** gains_out, delsos_report** report_out);

delsos_status delsos_gains_save(const delsos_gains* g, const char* path);
delsos_status delsos_gains_load(const char* path, delsos_gains** out);
void delsos_gains_free(delsos_gains* g);

/* simulation options: {"dt":...,"horizon":...,"points_per_channel":20,
 * "disturbance":"sinc|step|zero","amplitude":...,"x0":[...],
 * "closed_loop":true} */
delsos_status delsos_simulate(const delsos_model* m, const delsos_gains* g,
                              const char* options_json, delsos_trace** out);
delsos_status delsos_trace_save_csv(const delsos_trace* t, const char* path);
delsos_status delsos_trace_save_meta(const delsos_trace* t, const char* path);
delsos_status delsos_trace_l2_gain(const delsos_trace* t, double* out);
delsos_status delsos_trace_diverged(const delsos_trace* t, int* out);
void delsos_trace_free(delsos_trace* t);

/* gamma regression across the bundled example set; options:
 * {"models_dir":"...","degrees":[1,2],"parallel":true} */
delsos_status delsos_table1(const char* options_json, delsos_report** out);

delsos_status delsos_report_to_json(const delsos_report* r, char** out_text);
delsos_status delsos_report_to_text(const delsos_report* r, char** out_text);
void delsos_report_free(delsos_report* r);

#ifdef __cplusplus
}
#endif

#endif /* DELSOS_H */
