/*
 * dcn - zero-pair image-to-image translation with domain conditional
 * normalization.
 *
 * C interface of the shared library. All functions return a dcn_status;
 * details for the most recent failure on the calling thread are available
 * through dcn_last_error(). Handles are opaque and must be released with
 * their matching close function.
 */
#ifndef DCN_H
#define DCN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DCN_API __declspec(dllexport)
#else
#define DCN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dcn_status {
    DCN_OK = 0,
    DCN_ERROR_CONFIG = 2,  /* bad configuration, usage or file contents */
    DCN_ERROR_NUMERIC = 3, /* non-finite values during training */
    DCN_ERROR_IO = 4,      /* filesystem / file-format failure */
    DCN_ERROR_INVALID = 5  /* invalid argument at the API boundary */
} dcn_status;

/* Message describing the last failure on this thread; empty string if none. */
DCN_API const char* dcn_last_error(void);

DCN_API const char* dcn_version(void);

/* --- training ------------------------------------------------------------ */

/*
 * Runs the full training schedule described by the TOML config.
 *   mode_override: "dcn", "dcn0" or NULL to keep the config value.
 *   seed_override: >= 0 replaces the config seed.
 *   resume_ckpt:   checkpoint to continue from, or NULL.
 *   run_dir:       output directory (checkpoints, CSV log, resolved config).
 */
DCN_API dcn_status dcn_train(const char* config_path, const char* mode_override,
                             int64_t seed_override, const char* resume_ckpt, const char* run_dir);

/* --- models ---------------------------------------------------------------- */

typedef struct dcn_model_s dcn_model;

DCN_API dcn_status dcn_model_open(const char* checkpoint_path, dcn_model** out_model);
DCN_API void dcn_model_close(dcn_model* model);

/* JSON description: mode, n_domains, iteration, image_size, class count. */
DCN_API dcn_status dcn_model_info(const dcn_model* model, char* buffer, size_t buffer_size);

/*
 * Translates one image file. Domains are 'r', 'd' or 's'. Depth inputs may be
 * 16-bit grayscale PNGs (colormapped internally) or already colormapped RGB;
 * the output is written in the target domain's 3-channel file representation.
 * snap_output != 0 decodes and re-encodes the result against the model's
 * palette/colormap so every output pixel is an exact table color.
 */
DCN_API dcn_status dcn_translate(dcn_model* model, const char* input_path, char source_domain,
                                 char target_domain, const char* output_path, int snap_output);

/*
 * Depth -> semantics evaluation over the test split of a manifest.
 *   data_root:   dataset folder (rgb/, depth/, semantics/).
 *   report_json: output path for the metrics report (required).
 *   report_table: optional output path for the plain-text table.
 *   dump_dir:    optional directory for per-sample triptych PNGs.
 */
DCN_API dcn_status dcn_evaluate(dcn_model* model, const char* split_manifest_path,
                                const char* data_root, const char* report_json_path,
                                const char* report_table_path, const char* dump_dir);

/* --- utilities -------------------------------------------------------------------- */

/*
 * Parameter accounting for a configuration: per-module counts for both
 * conditioning modes, the mode delta and its closed-form value, as JSON.
 */
DCN_API dcn_status dcn_inspect_params(const char* config_path, char* buffer, size_t buffer_size);

/* Seeded disjoint split manifest over the samples found under data_root. */
DCN_API dcn_status dcn_make_splits(const char* data_root, int n_rd, int n_rs, int n_test,
                                   int64_t seed, const char* out_manifest_path);

/* Procedural toy dataset in the standard folder layout. */
DCN_API dcn_status dcn_gen_toy(const char* out_dir, int count, int image_size, int n_classes,
                               int64_t seed);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DCN_H */
