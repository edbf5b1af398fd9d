/* shapint — cooperative-game Shapley value / interaction engine.
 *
 * C API over the C++ core: opaque handles, status codes, no exceptions
 * across the boundary. All functions are thread-compatible; a single
 * si_game may be evaluated from several threads, while si_surrogate
 * training calls must be serialized by the caller.
 */
#ifndef SHAPINT_H
#define SHAPINT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum si_result {
  SI_OK = 0,
  SI_ERR_INVALID_ARGUMENT = 1,
  SI_ERR_RESOURCE_LIMIT = 2,
  SI_ERR_DEGENERATE = 3,
  SI_ERR_NUMERIC = 4,
  SI_ERR_IO = 5,
  SI_ERR_UNKNOWN = 6
} si_result;

const char* si_result_name(si_result status);

/* Message for the most recent failure on this thread. */
const char* si_last_error(void);

/* ---- games ---------------------------------------------------------- */

typedef struct si_game si_game;

/* Deterministic coalition value function. `members` is the sorted member
 * list of the coalition being valued. */
typedef double (*si_value_fn)(const uint32_t* members, size_t count, void* ctx);

si_game* si_game_create(size_t universe_size, si_value_fn fn, void* ctx);
void si_game_destroy(si_game* game);
size_t si_game_universe(const si_game* game);
uint64_t si_game_eval_count(const si_game* game);

si_result si_shapley_exact(si_game* game, uint32_t player, size_t enum_cap,
                           double* out_value, uint64_t* out_evals);
si_result si_interaction_exact(si_game* game, const uint32_t* members, size_t count,
                               size_t enum_cap, double* out_value, uint64_t* out_evals);
si_result si_interaction_expectation_exact(si_game* game, const uint32_t* members,
                                           size_t count, size_t enum_cap, double* out_value,
                                           uint64_t* out_evals);
si_result si_pairwise_interaction_exact(si_game* game, uint32_t i, uint32_t j,
                                        size_t enum_cap, double* out_value,
                                        uint64_t* out_evals);

si_result si_sample_interaction(si_game* game, const uint32_t* members, size_t count,
                                uint64_t num_samples, uint64_t seed, unsigned workers,
                                double* out_mean, double* out_variance_of_mean,
                                uint64_t* out_evals);
si_result si_sample_shapley(si_game* game, uint32_t player, uint64_t num_samples,
                            uint64_t seed, unsigned workers, double* out_mean,
                            double* out_variance_of_mean, uint64_t* out_evals);

si_result si_instability(const double* values, size_t count, double* out);

/* ---- losses --------------------------------------------------------- */

si_result si_loss_cmc(const double* image_vecs, const double* text_vecs, size_t batch,
                      size_t dim, double tau, double* out);
si_result si_loss_tsa(const double* confidences, const double* labels, size_t count,
                      double* out);
/* row_normalized: row-major M x N row-softmax of the alignment matrix. */
si_result si_loss_fsa(const double* row_normalized, const double* labels, size_t rows,
                      size_t cols, double* out);

typedef enum si_norm_mode { SI_NORM_MINMAX = 0, SI_NORM_ROWWISE = 1 } si_norm_mode;
si_result si_normalize_interactions(const double* values, size_t count, si_norm_mode mode,
                                    double* out);
si_result si_normalize_rows(const double* values, size_t rows, size_t cols, double* out);

/* ---- toy planted instances ------------------------------------------ */

typedef struct si_instance si_instance;

/* Planted pairs are auto-placed: pair k gets a box around a distinct grid
 * cell and a distinct word span; throws if they cannot fit. */
si_instance* si_instance_planted(uint64_t seed, size_t height, size_t width,
                                 size_t num_words, size_t dim, size_t pairs, double noise);
void si_instance_destroy(si_instance* instance);

size_t si_instance_universe(const si_instance* instance);
size_t si_instance_num_patches(const si_instance* instance);
size_t si_instance_dim(const si_instance* instance);
size_t si_instance_pairs(const si_instance* instance);

/* Member patch indices of planted region k. Returns the member count via
 * out_count; copies at most cap indices. */
si_result si_instance_planted_region(const si_instance* instance, size_t k,
                                     uint32_t* members, size_t cap, size_t* out_count);
si_result si_instance_planted_phrase(const si_instance* instance, size_t k,
                                     uint32_t* out_begin, uint32_t* out_end);

/* Token-level game v1 over patches then words. */
si_game* si_instance_token_game(const si_instance* instance);
/* Semantics-level game v2 over the planted regions then planted phrases. */
si_game* si_instance_semantics_game(const si_instance* instance);

/* Grand-coalition encoder outputs (dim doubles each). */
si_result si_instance_global_vectors(const si_instance* instance, double* out_image,
                                     double* out_text);

/* Raw and row-softmaxed alignment matrices over planted regions x phrases
 * (pairs x pairs, row-major). Either output may be NULL. */
si_result si_instance_alignment(const si_instance* instance, double* out_raw,
                                double* out_row_normalized);

si_result si_instance_save(const si_instance* instance, const char* path);
si_instance* si_instance_load(const char* path);

/* ---- region proposals ------------------------------------------------ */

typedef struct si_region_list si_region_list;

/* Top-M proposals from a linear head drawn from head_seed. */
si_region_list* si_instance_propose(const si_instance* instance, uint64_t head_seed,
                                    size_t m);
void si_region_list_destroy(si_region_list* list);
size_t si_region_list_count(const si_region_list* list);
si_result si_region_list_get(const si_region_list* list, size_t index, uint32_t* members,
                             size_t cap, size_t* out_count, double* out_confidence);

/* ---- UNSIL surrogate -------------------------------------------------- */

typedef struct si_surrogate si_surrogate;

si_surrogate* si_surrogate_create(size_t dim, size_t hidden, uint64_t seed);
void si_surrogate_destroy(si_surrogate* surrogate);
si_result si_surrogate_configure(si_surrogate* surrogate, double beta1, double beta2,
                                 double learning_rate, uint64_t warmup_iterations);

/* Token-level prediction for a patch-index region of the instance. */
si_result si_surrogate_predict(si_surrogate* surrogate, const si_instance* instance,
                               const uint32_t* region_members, size_t count,
                               double* out_value, double* out_sigma);

/* One epsilon/sigma-gated hybrid estimate; trains on the sampled value when
 * the gate falls back to sampling (unless frozen). out_sampled reports
 * whether sampling ran; out_evals the game evaluations consumed. */
si_result si_surrogate_hybrid(si_surrogate* surrogate, si_game* game,
                              const si_instance* instance, const uint32_t* region_members,
                              size_t count, uint64_t num_samples, uint64_t sample_seed,
                              unsigned workers, uint64_t iteration, int force_sampling,
                              int freeze_training, double* out_estimate, double* out_sigma,
                              int* out_sampled, uint64_t* out_evals);

si_result si_surrogate_save(const si_surrogate* surrogate, const char* path);
si_surrogate* si_surrogate_load(const char* path, uint64_t gate_seed);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SHAPINT_H */
