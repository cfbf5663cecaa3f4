#ifndef SFVQ_H
#define SFVQ_H

#include <stddef.h>
#include <stdint.h>

typedef enum SfvqStatus {
  SFVQ_STATUS_OK = 0,
  SFVQ_STATUS_NULL_POINTER = 1,
  SFVQ_STATUS_INVALID_ARGUMENT = 2,
  SFVQ_STATUS_INSUFFICIENT_DATA = 3,
  SFVQ_STATUS_DIMENSION_MISMATCH = 4,
  SFVQ_STATUS_NUMERIC = 5,
  SFVQ_STATUS_IO = 6,
  SFVQ_STATUS_FORMAT = 7,
  SFVQ_STATUS_PANIC = 8,
} SfvqStatus;

typedef enum SfvqDistribution {
  SFVQ_DISTRIBUTION_PENTAGON2D = 0,
  SFVQ_DISTRIBUTION_MOONS3D = 1,
  SFVQ_DISTRIBUTION_CIRCLES3D = 2,
  SFVQ_DISTRIBUTION_SPIRAL3D = 3,
  SFVQ_DISTRIBUTION_GAUSSIAN = 4,
} SfvqDistribution;

typedef enum SfvqInitMode {
  SFVQ_INIT_MODE_NORM_SORTED = 0,
  SFVQ_INIT_MODE_RANDOM_NORMAL = 1,
} SfvqInitMode;

typedef enum SfvqMode {
  SFVQ_MODE_SFVQ = 0,
  SFVQ_MODE_VQ = 1,
} SfvqMode;

typedef enum SfvqLambdaSampling {
  SFVQ_LAMBDA_SAMPLING_PER_SEGMENT = 0,
  SFVQ_LAMBDA_SAMPLING_PER_SAMPLE = 1,
} SfvqLambdaSampling;

typedef enum SfvqGrowth {
  SFVQ_GROWTH_RECURSIVE = 0,
  SFVQ_GROWTH_DIRECT = 1,
} SfvqGrowth;

/**
 * Owned codebook (ordered codewords, at least two).
 */
typedef struct SfvqCodebook SfvqCodebook;

/**
 * Owned set of equal-length f64 vectors.
 */
typedef struct SfvqVectorSet SfvqVectorSet;

/**
 * Training parameters. Start from `sfvq_train_config_default()`.
 * The learning rate always halves at 60% and 80% of each stage.
 */
typedef struct SfvqTrainConfig {
  uint32_t target_bits;
  size_t batch_size;
  size_t batches_per_stage;
  double base_lr;
  uint64_t seed;
  enum SfvqInitMode init_mode;
  enum SfvqMode mode;
  size_t init_sample_count;
  enum SfvqLambdaSampling lambda_sampling;
  enum SfvqGrowth growth;
} SfvqTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the next failing call.
 */
const char *sfvq_last_error_message(void);

/**
 * Copies `count` rows of `dim` values from `data` (row-major).
 */
enum SfvqStatus sfvq_vectors_new(size_t dim,
                                 const double *data,
                                 size_t count,
                                 struct SfvqVectorSet **out);

void sfvq_vectors_free(struct SfvqVectorSet *vs);

/**
 * 0 for NULL.
 */
size_t sfvq_vectors_count(const struct SfvqVectorSet *vs);

/**
 * 0 for NULL.
 */
size_t sfvq_vectors_dim(const struct SfvqVectorSet *vs);

/**
 * Copies all values row-major into `out`, which must hold `len >= count * dim` doubles.
 */
enum SfvqStatus sfvq_vectors_copy(const struct SfvqVectorSet *vs, double *out, size_t len);

enum SfvqStatus sfvq_vectors_read(const char *path_, struct SfvqVectorSet **out);

enum SfvqStatus sfvq_vectors_write(const struct SfvqVectorSet *vs, const char *path_);

/**
 * `noise` applies to the 3D shapes, `dim` to the Gaussian; both are ignored otherwise.
 */
enum SfvqStatus sfvq_generate(enum SfvqDistribution kind,
                              size_t n,
                              double noise,
                              size_t dim,
                              uint64_t seed,
                              struct SfvqVectorSet **out);

struct SfvqTrainConfig sfvq_train_config_default(void);

enum SfvqStatus sfvq_train(const struct SfvqTrainConfig *config,
                           const struct SfvqVectorSet *data,
                           struct SfvqCodebook **out);

/**
 * Copies `count` codewords of `dim` values from `data` (row-major).
 */
enum SfvqStatus sfvq_codebook_new(size_t dim,
                                  const double *data,
                                  size_t count,
                                  struct SfvqCodebook **out);

void sfvq_codebook_free(struct SfvqCodebook *cb);

/**
 * Number of codewords; 0 for NULL.
 */
size_t sfvq_codebook_len(const struct SfvqCodebook *cb);

/**
 * 0 for NULL.
 */
size_t sfvq_codebook_dim(const struct SfvqCodebook *cb);

enum SfvqStatus sfvq_codebook_copy(const struct SfvqCodebook *cb, double *out, size_t len);

enum SfvqStatus sfvq_codebook_read(const char *path_, struct SfvqCodebook **out);

enum SfvqStatus sfvq_codebook_write(const struct SfvqCodebook *cb, const char *path_);

/**
 * Doubles the codebook size (N -> 2N) without changing its distortion.
 */
enum SfvqStatus sfvq_expand(const struct SfvqCodebook *cb, struct SfvqCodebook **out);

/**
 * Nearest codeword. `reconstruction` may be NULL, otherwise it receives `dim` values.
 */
enum SfvqStatus sfvq_quantize_nearest(const struct SfvqCodebook *cb,
                                      const double *x,
                                      size_t dim,
                                      size_t *index,
                                      double *reconstruction,
                                      double *squared_error);

/**
 * Closest point on the piecewise-linear curve. Any output pointer may be NULL.
 */
enum SfvqStatus sfvq_quantize_segment(const struct SfvqCodebook *cb,
                                      const double *x,
                                      size_t dim,
                                      size_t *segment,
                                      double *lambda,
                                      double *reconstruction,
                                      double *squared_error);

/**
 * Unit vector from codeword `i` to `i + 1` written to `out` (`len >= dim`).
 */
enum SfvqStatus sfvq_extract_direction(const struct SfvqCodebook *cb,
                                       size_t i,
                                       double *out,
                                       size_t len,
                                       double *raw_norm);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFVQ_H */
