/*
 * fdikit - fault detection, isolation and model detection filters for LTI
 * systems.
 *
 * C interface of the shared library.  All objects are opaque handles;
 * every function returns a status code and leaves a thread-local error
 * message retrievable through fdk_last_error() on failure.
 *
 * Models travel as JSON text:
 *   {"a": [[...]], "e": [[...]] (optional, invertible), "b": [[...]],
 *    "c": [[...]], "d": [[...]], "ts": 0.0,
 *    "groups": {"controls": [0,...], "disturbances": [...], "faults": [...],
 *               "noise": [...], "aux": [...]},
 *    "output_groups": {"residuals": [...]}}
 * A multimodel or a filter bank is {"models": [model|null, ...]}.
 * All indices are 0-based; "ts" = 0 means continuous time.
 *
 * Options are JSON objects whose keys mirror the CLI flags (kebab-case),
 * e.g. {"rdim": 1, "sdeg": -3.0, "fd-freq": [0.0], "sfdi": [[0,1],[1,0]],
 * "seed": 0}.  Unknown keys are rejected.
 */

#ifndef FDIKIT_FDIKIT_H
#define FDIKIT_FDIKIT_H

#include <stddef.h>

#if defined(_WIN32)
#define FDK_API __declspec(dllexport)
#else
#define FDK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fdk_status {
  FDK_OK = 0,
  FDK_ERR_USAGE = 1,       /* bad arguments, malformed JSON, bad dimensions */
  FDK_ERR_UNSOLVABLE = 2,  /* the synthesis problem has no solution */
  FDK_ERR_NUMERIC = 3,     /* factorization or convergence failure */
  FDK_ERR_UNSUPPORTED = 4  /* outside the supported problem class */
} fdk_status;

/* Opaque handle holding one LTI model, a multimodel, or a filter bank. */
typedef struct fdk_model fdk_model;

/* Thread-local message of the last failing call in this thread. */
FDK_API const char* fdk_last_error(void);

/* ---- model handles -------------------------------------------------- */

FDK_API fdk_status fdk_model_from_json(const char* text, fdk_model** out);
FDK_API fdk_status fdk_model_to_json(const fdk_model* m, char** out);
FDK_API void fdk_model_free(fdk_model* m);
FDK_API void fdk_string_free(char* s);

/* Number of stored component models (1 for a plain model). */
FDK_API size_t fdk_model_count(const fdk_model* m);

/* ---- analysis -------------------------------------------------------- */

/* options: tol, fd-tol, fd-gain-tol, fd-freq, sdeg */
FDK_API fdk_status fdk_genspec(const fdk_model* sysf, const char* options,
                               char** report);

/* options as above plus seed; sfdi: [[0/1,...],...] */
FDK_API fdk_status fdk_chkspec(const fdk_model* sysf, const char* sfdi,
                               const char* options, char** report);

/* weak/strong structure matrices of internal forms (single or bank);
 * options: tol, fd-tol, fd-freq, block */
FDK_API fdk_status fdk_tspec(const fdk_model* r, const char* options,
                             char** report);

/* options: fd-gain-tol, fd-freq (default {0}), block */
FDK_API fdk_status fdk_sspec(const fdk_model* r, const char* options,
                             char** report);

/* ---- FDI filter synthesis ------------------------------------------- */

/* options: rdim, sdeg, smarg, poles, fd-freq, fd-tol, fd-gain-tol, minimal,
 * nullspace, hdesign, tcond, seed (efdsyn); plus gamma, exact, hdesign2,
 * nonstd, freq (afdsyn); plus sfdi, fd-select (bank variants). */
FDK_API fdk_status fdk_efdsyn(const fdk_model* sysf, const char* options,
                              fdk_model** q, fdk_model** r, char** report);
FDK_API fdk_status fdk_afdsyn(const fdk_model* sysf, const char* options,
                              fdk_model** q, fdk_model** r, char** report);
FDK_API fdk_status fdk_efdisyn(const fdk_model* sysf, const char* options,
                               fdk_model** qbank, fdk_model** rbank,
                               char** report);
FDK_API fdk_status fdk_afdisyn(const fdk_model* sysf, const char* options,
                               fdk_model** qbank, fdk_model** rbank,
                               char** report);

/* options: sdeg, smarg, poles, normalize ("gain"|"dcgain"|"infnorm"),
 * hdesign, freq, seed.  m receives the diagonal updating factor. */
FDK_API fdk_status fdk_emmsyn(const fdk_model* sysf, const fdk_model* sysr,
                              const char* options, fdk_model** q,
                              fdk_model** r, fdk_model** m, char** report);

/* ---- model detection ------------------------------------------------- */

/* options: rdim, md-freq, emdtest, sdeg, smarg, poles, nullspace, minimal,
 * md-select, hdesign, normalize, md-tol, md-gain-tol, tcond, seed (+ nonstd
 * for amdsyn).  rgrid receives the N*N internal forms flattened row-major. */
FDK_API fdk_status fdk_emdsyn(const fdk_model* mm, const char* options,
                              fdk_model** qbank, fdk_model** rgrid,
                              char** report);
FDK_API fdk_status fdk_amdsyn(const fdk_model* mm, const char* options,
                              fdk_model** qbank, fdk_model** rgrid,
                              char** report);

/* options: md-select, distance ("nugap"|"inf"|"2"), md-freq, cdinp,
 * md-index, offset, tol */
FDK_API fdk_status fdk_mddist(const fdk_model* mm, const char* options,
                              char** report);
FDK_API fdk_status fdk_mddist2c(const fdk_model* mm, const fdk_model* sys,
                                const char* options, char** report);

/* ---- performance evaluation ------------------------------------------ */

/* options: kind ("fscond"|"f2ngap"|"mmperf"), fd-freq, sfdi, norm
 * ("inf"|"2"); sysr may be NULL (mmperf reference). */
FDK_API fdk_status fdk_perf(const fdk_model* r, const fdk_model* sysr,
                            const char* options, char** report);

/* options: md-select, md-freq, cdinp, md-index; the bank is an N*N grid. */
FDK_API fdk_status fdk_mdperf(const fdk_model* rgrid, const char* options,
                              char** report);
FDK_API fdk_status fdk_mdmatch(const fdk_model* qbank, const fdk_model* sys,
                               const char* options, char** report);
FDK_API fdk_status fdk_mdgap(const fdk_model* rgrid, const char* options,
                             char** report);

/* ---- simulation ------------------------------------------------------ */

/* options: signals (["step:1.0","square:0.3@6.28","noise:0.01",...]),
 * t-final, dt, alpha, beta, gamma, tau, seed.  csv receives the time series
 * (header row, then t, residuals, evaluation signals). */
FDK_API fdk_status fdk_simulate(const fdk_model* bank, const char* options,
                                char** csv, char** report);

#ifdef __cplusplus
}
#endif

#endif /* FDIKIT_FDIKIT_H */
