#ifndef HIDPAS_H
#define HIDPAS_H

/*
 * C interface to the hybrid intrusion detection and prediction library.
 *
 * Every fallible call returns a hidpas_status. On failure the message is
 * available from hidpas_last_error() on the same thread until the next call.
 * Strings returned through char** parameters are owned by the caller and
 * released with hidpas_string_free(). Handles are released with their
 * matching *_free function; passing NULL to a free function is a no-op.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HIDPAS_API __declspec(dllexport)
#else
#define HIDPAS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hidpas_status {
  HIDPAS_OK = 0,
  HIDPAS_INVALID_ARGUMENT = 1,
  HIDPAS_IO = 2,
  HIDPAS_PARSE = 3,
  HIDPAS_DATA = 4,
  HIDPAS_IMPOSSIBLE_EVIDENCE = 5,
  HIDPAS_INTERNAL = 6
} hidpas_status;

HIDPAS_API const char* hidpas_version(void);
HIDPAS_API const char* hidpas_status_name(hidpas_status status);
HIDPAS_API const char* hidpas_last_error(void);
HIDPAS_API void hidpas_string_free(char* s);

/* "error", "warn", "info" or "debug". */
HIDPAS_API hidpas_status hidpas_set_log_level(const char* level);

/* Probability-to-possibility transform of one distribution of n states.
 * Writes n possibility degrees and n necessity degrees. */
HIDPAS_API hidpas_status hidpas_transform(const double* probabilities, size_t n, double* possibility,
                                          double* necessity);

/* ---- Network files --------------------------------------------------- */

typedef struct hidpas_network hidpas_network;

HIDPAS_API hidpas_status hidpas_network_load(const char* path, hidpas_network** out);
HIDPAS_API void hidpas_network_free(hidpas_network* net);
HIDPAS_API size_t hidpas_network_size(const hidpas_network* net);
/* N, P and Π of every state of `target` given "name=state" pairs separated by
 * commas (may be empty). One "state N P Π" line per state. */
HIDPAS_API hidpas_status hidpas_network_query(const hidpas_network* net, const char* evidence,
                                              const char* target, char** report);

/* ---- Host detection --------------------------------------------------- */

typedef struct hidpas_detector hidpas_detector;

typedef struct hidpas_detector_options {
  size_t top_k;
  size_t max_parents;
  double smoothing;
  double tau;
  const char* order;     /* comma-separated variable names, or NULL */
  int attack_labels;     /* nonzero: keep attack names instead of categories */
  int skip_malformed;    /* nonzero: skip bad training rows instead of failing */
} hidpas_detector_options;

HIDPAS_API void hidpas_detector_options_init(hidpas_detector_options* options);
HIDPAS_API hidpas_status hidpas_detector_train(const char* training_path, const hidpas_detector_options* options,
                                               hidpas_detector** out);
HIDPAS_API hidpas_status hidpas_detector_load(const char* path, hidpas_detector** out);
HIDPAS_API hidpas_status hidpas_detector_save(const hidpas_detector* detector, const char* path);
HIDPAS_API void hidpas_detector_free(hidpas_detector* detector);
/* Selected features, class states and learned edges as text. */
HIDPAS_API hidpas_status hidpas_detector_describe(const hidpas_detector* detector, char** text);
/* Classifies every record of a connection stream; writes the alert CSV. */
HIDPAS_API hidpas_status hidpas_detect(const hidpas_detector* detector, const char* stream_path, const char* host,
                                       char** alerts_csv, size_t* alert_count);

/* ---- Network prediction ----------------------------------------------- */

/* Aggregates an alert log into hyper-alerts and writes their CSV. merge_key
 * is none, attack_type, sensor, src_ip, dst_ip or dst_port (NULL: attack_type). */
HIDPAS_API hidpas_status hidpas_aggregate(const char* alert_log_path, const char* merge_key, char** hyper_csv,
                                          size_t* hyper_count, size_t* phase_one_count);

typedef struct hidpas_plan hidpas_plan;
typedef struct hidpas_classifier hidpas_classifier;

typedef struct hidpas_plan_options {
  const char* merge_key; /* NULL: attack_type */
  double slot;           /* Δt, required > 0 */
  int has_start;
  double start;
  int has_range;
  double range;          /* T */
  const char* order;     /* comma-separated hyper-alert names, or NULL */
  size_t max_parents;
  double smoothing;
  double tau;
} hidpas_plan_options;

HIDPAS_API void hidpas_plan_options_init(hidpas_plan_options* options);
/* Learns the attack-plan network from an alert log. When `classifier` is not
 * NULL the hyper-alert classifier trained on the same log is returned too. */
HIDPAS_API hidpas_status hidpas_plan_train(const char* alert_log_path, const hidpas_plan_options* options,
                                           hidpas_plan** plan, hidpas_classifier** classifier);
HIDPAS_API hidpas_status hidpas_plan_load(const char* path, hidpas_plan** out);
HIDPAS_API hidpas_status hidpas_plan_save(const hidpas_plan* plan, const char* path);
HIDPAS_API void hidpas_plan_free(hidpas_plan* plan);
HIDPAS_API hidpas_status hidpas_plan_describe(const hidpas_plan* plan, char** text);

typedef enum hidpas_selection { HIDPAS_SELECT_MAX = 0, HIDPAS_SELECT_THRESHOLD = 1 } hidpas_selection;

/* `observed` is a comma-separated list of hyper-alert names (may be empty).
 * The report is the text table of unobserved nodes and the selection. */
HIDPAS_API hidpas_status hidpas_plan_predict(const hidpas_plan* plan, const char* observed,
                                             hidpas_selection selection, double theta, char** report);
/* CSV of from,to,necessity,probability,possibility for every edge. */
HIDPAS_API hidpas_status hidpas_plan_edges(const hidpas_plan* plan, char** csv);

HIDPAS_API hidpas_status hidpas_classifier_load(const char* path, hidpas_classifier** out);
HIDPAS_API hidpas_status hidpas_classifier_save(const hidpas_classifier* classifier, const char* path);
HIDPAS_API void hidpas_classifier_free(hidpas_classifier* classifier);

/* ---- Simulation and self-checks ----------------------------------------- */

/* Runs the agent simulation described by a config file. `seed` overrides the
 * config seed when has_seed is nonzero. Returns the NDJSON event log and a
 * short text summary. */
HIDPAS_API hidpas_status hidpas_simulate(const char* config_path, int has_seed, uint64_t seed, char** events,
                                         char** summary);

/* Brute-force oracle suites on `networks` seeded random networks plus the
 * possibility transform checks. *passed is 1 when every check held. */
HIDPAS_API hidpas_status hidpas_oracle_check(uint64_t seed, size_t networks, char** summary, int* passed);

#ifdef __cplusplus
}
#endif

#endif
