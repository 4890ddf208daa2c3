#ifndef DATABC_H
#define DATABC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  DATABC_STATUS_OK = 0,
  DATABC_STATUS_NULL_POINTER = 1,
  DATABC_STATUS_INVALID_UTF8 = 2,
  DATABC_STATUS_INVALID_INPUT = 3,
  DATABC_STATUS_CONFIG = 4,
  DATABC_STATUS_DATASET = 5,
  DATABC_STATUS_PLUGIN = 6,
  DATABC_STATUS_IO = 7,
  DATABC_STATUS_NUMERIC = 8,
  /**
   * The requested value does not exist (e.g. no optimum was found).
   */
  DATABC_STATUS_NOT_AVAILABLE = 9,
  DATABC_STATUS_PANIC = 10,
} DatabcStatus;

/**
 * Verdict of a report, numerically equal to the CLI exit codes.
 */
typedef enum {
  DATABC_VERDICT_CERTIFIED = 0,
  DATABC_VERDICT_FAILED = 1,
  DATABC_VERDICT_INCONCLUSIVE = 2,
} DatabcVerdict;

typedef struct DatabcCertificate DatabcCertificate;

typedef struct DatabcConfig DatabcConfig;

typedef struct DatabcReport DatabcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a
 * successful one. Valid until the next call into this library.
 */
const char *databc_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *databc_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer previously returned by this library.
 */
void databc_string_free(char *s);

/**
 * Least `N` whose binomial tail with `summation_limit` terms is at most
 * `beta`.
 *
 * # Safety
 * `out_n` must be null or writable.
 */
DatabcStatus databc_minimal_scenario_count(double epsilon_bar,
                                           double beta,
                                           uint64_t summation_limit,
                                           uint64_t *out_n);

/**
 * Successors per sample for the empirical-mean bound.
 *
 * # Safety
 * `out_n_hat` must be null or writable.
 */
DatabcStatus databc_empirical_count(double variance_bound,
                                    double delta,
                                    double beta_s,
                                    uint64_t *out_n_hat);

/**
 * Lipschitz bound of a quadratic barrier over a box of half-width scale `m`.
 *
 * # Safety
 * `out_value` must be null or writable.
 */
DatabcStatus databc_lipschitz_quadratic(double m,
                                        double lambda_max,
                                        double l,
                                        double l_hat,
                                        double *out_value);

/**
 * Safety probability lower bound `1 - (1 + c T) / lambda`, clamped at 0.
 *
 * # Safety
 * `out_value` must be null or writable.
 */
DatabcStatus databc_theorem1_bound(double lambda, double c, uint32_t horizon, double *out_value);

/**
 * Builds a certificate over the `dimension`-variate monomial basis of
 * total degree `degree` (graded, highest degree first).
 *
 * # Safety
 * `coefficients` must point to `len` readable values; `out_cert` must be
 * null or writable.
 */
DatabcStatus databc_certificate_new(size_t dimension,
                                    uint32_t degree,
                                    const double *coefficients,
                                    size_t len,
                                    double lambda,
                                    double c,
                                    double kappa,
                                    DatabcCertificate **out_cert);

/**
 * Parses a certificate from its JSON form (as in `certificate.json`).
 *
 * # Safety
 * `json` must be a nul-terminated string; `out_cert` must be null or
 * writable.
 */
DatabcStatus databc_certificate_from_json(const char *json, DatabcCertificate **out_cert);

/**
 * `B(x)` for a state of `len` components.
 *
 * # Safety
 * `cert` must be a live handle, `x` must point to `len` readable values
 * and `out_value` must be null or writable.
 */
DatabcStatus databc_certificate_evaluate(const DatabcCertificate *cert,
                                         const double *x,
                                         size_t len,
                                         double *out_value);

/**
 * Reads `lambda` and `c` of a certificate.
 *
 * # Safety
 * `cert` must be a live handle; the out-pointers must be null or writable.
 */
DatabcStatus databc_certificate_parameters(const DatabcCertificate *cert,
                                           double *out_lambda,
                                           double *out_c);

/**
 * Copies up to `capacity` coefficients into `buffer` and stores the total
 * count in `out_len`. Pass a null buffer to query the count.
 *
 * # Safety
 * `cert` must be a live handle; `buffer` must be null or have room for
 * `capacity` values; `out_len` must be null or writable.
 */
DatabcStatus databc_certificate_coefficients(const DatabcCertificate *cert,
                                             double *buffer,
                                             size_t capacity,
                                             size_t *out_len);

/**
 * # Safety
 * `cert` must be null or a handle not yet freed.
 */
void databc_certificate_free(DatabcCertificate *cert);

/**
 * Parses a `key = value` run configuration.
 *
 * # Safety
 * `text_in` must be a nul-terminated string; `out_config` must be null or
 * writable.
 */
DatabcStatus databc_config_parse(const char *text_in, DatabcConfig **out_config);

/**
 * Reads and parses a configuration file.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out_config` must be null or
 * writable.
 */
DatabcStatus databc_config_from_file(const char *path, DatabcConfig **out_config);

/**
 * Replaces the run seed.
 *
 * # Safety
 * `config` must be a live handle.
 */
DatabcStatus databc_config_set_seed(DatabcConfig *config, uint64_t seed);

/**
 * Overrides the sample counts; zero keeps the required value. Any
 * override marks reports as an unsound experiment.
 *
 * # Safety
 * `config` must be a live handle.
 */
DatabcStatus databc_config_set_unsound_counts(DatabcConfig *config, uint64_t n, uint64_t n_hat);

/**
 * Required state samples `N` and successors `N̂` for the configuration.
 *
 * # Safety
 * `config` must be a live handle; the out-pointers must be null or
 * writable.
 */
DatabcStatus databc_config_required_counts(const DatabcConfig *config,
                                           uint64_t *out_n,
                                           uint64_t *out_n_hat);

/**
 * Hex SHA-256 digest binding datasets and reports to this configuration.
 *
 * # Safety
 * `config` must be a live handle; `out_digest` must be null or writable.
 */
DatabcStatus databc_config_digest(const DatabcConfig *config, char **out_digest);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void databc_config_free(DatabcConfig *config);

/**
 * Samples, assembles and solves in memory. A report is produced even
 * when a stage fails; its verdict is then `DATABC_VERDICT_FAILED`.
 *
 * # Safety
 * `config` must be a live handle; `out_report` must be null or writable.
 */
DatabcStatus databc_verify(const DatabcConfig *config, DatabcReport **out_report);

/**
 * Parses a `report.json` document.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out_report` must be null or
 * writable.
 */
DatabcStatus databc_report_from_json(const char *json, DatabcReport **out_report);

/**
 * # Safety
 * `report` must be a live handle; `out_verdict` must be null or writable.
 */
DatabcStatus databc_report_verdict(const DatabcReport *report, DatabcVerdict *out_verdict);

/**
 * Optimal value `K*`; `DATABC_STATUS_NOT_AVAILABLE` when the program had
 * no optimum.
 *
 * # Safety
 * `report` must be a live handle; `out_kappa` must be null or writable.
 */
DatabcStatus databc_report_kappa_star(const DatabcReport *report, double *out_kappa);

/**
 * Probability lower bound and confidence of the verdict.
 *
 * # Safety
 * `report` must be a live handle; the out-pointers must be null or
 * writable.
 */
DatabcStatus databc_report_guarantee(const DatabcReport *report,
                                     double *out_probability,
                                     double *out_confidence);

/**
 * Copy of the certificate found by the solver.
 *
 * # Safety
 * `report` must be a live handle; `out_cert` must be null or writable.
 */
DatabcStatus databc_report_certificate(const DatabcReport *report, DatabcCertificate **out_cert);

/**
 * Serializes the report exactly as `report.json`. Free the result with
 * [`databc_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out_json` must be null or writable.
 */
DatabcStatus databc_report_to_json(const DatabcReport *report, char **out_json);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void databc_report_free(DatabcReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DATABC_H */
