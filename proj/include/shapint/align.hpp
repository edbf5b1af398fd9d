#ifndef SHAPINT_ALIGN_HPP
#define SHAPINT_ALIGN_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shapint/coalition.hpp"
#include "shapint/game.hpp"
#include "shapint/linalg.hpp"

namespace shapint {

/// A toy image-text instance: an H x W grid of patch embeddings plus L2 word
/// embeddings, all of dimension `dim`. Patches are players 0..H*W-1 in the
/// token-level game, words follow at indices H*W..H*W+L2-1.
struct TokenSpace {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t dim = 0;
  std::vector<Vec> patches;  // H*W embeddings, row-major over the grid
  std::vector<Vec> words;    // L2 embeddings

  std::size_t num_patches() const { return height * width; }
  std::size_t num_words() const { return words.size(); }
  std::size_t universe_size() const { return num_patches() + num_words(); }
};

/// A rectangular set of patches, defined by a center patch and a box size in
/// patches, clipped to the grid.
struct Region {
  std::uint32_t center = 0;
  std::uint32_t box_w = 1;
  std::uint32_t box_h = 1;
  std::vector<std::uint32_t> members;  // patch indices, ascending
};

/// Builds the member list for a box centered on `center`, clipped to the grid.
Region make_region(const TokenSpace& space, std::uint32_t center, std::uint32_t box_w,
                   std::uint32_t box_h);

struct RegionProposal {
  Region region;
  double confidence = 0.5;  // strictly inside (0,1)
};

/// A contiguous word-index interval [begin, end).
struct Phrase {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct AlignmentMatrix {
  std::size_t rows = 0;  // M regions
  std::size_t cols = 0;  // N phrases
  std::vector<double> raw;             // a_ij = h_i . h_j, row-major
  std::vector<double> row_normalized;  // row softmax of raw
};

/// Coalition over the token-level universe covering the region's patches.
Coalition region_coalition(const TokenSpace& space, const Region& region);

/// Bag-of-embeddings encoder: L2-normalized sum of the unmasked patch
/// embeddings and, separately, of the unmasked word embeddings. A fully
/// masked side encodes to the zero vector.
std::pair<Vec, Vec> encode(const TokenSpace& space, const Coalition& mask);

/// Token-level game score v1: dot product of the two encoded vectors.
double global_similarity_v1(const TokenSpace& space, const Coalition& s);

/// v1 wrapped as a GameEvaluator over the combined patch+word universe.
GameEvaluator make_token_game(std::shared_ptr<const TokenSpace> space);

Vec region_representation(const TokenSpace& space, const Region& region);
Vec phrase_representation(const TokenSpace& space, const Phrase& phrase);

AlignmentMatrix make_alignment_matrix(std::span<const Vec> region_reps,
                                      std::span<const Vec> phrase_reps,
                                      bool cosine = false);

/// Semantics-level game score v2 over the universe of M regions followed by
/// N phrases: mean row-softmax max over surviving entries (p1), the column
/// counterpart (p2), averaged. Returns 0 when either side is fully masked.
double fine_grained_similarity_v2(std::span<const Vec> region_reps,
                                  std::span<const Vec> phrase_reps, const Coalition& s,
                                  bool cosine = false);

GameEvaluator make_semantics_game(std::vector<Vec> region_reps, std::vector<Vec> phrase_reps,
                                  bool cosine = false);

/// Linear proposal head: maps a patch embedding to (width logit, height
/// logit, confidence logit). Width/height squash to [1, max_box] patches.
struct ProposalHead {
  Mat weights;  // 3 x dim
  Vec bias;     // 3
  std::uint32_t max_box = 1;
};

ProposalHead init_proposal_head(std::size_t dim, std::uint32_t max_box, std::uint64_t seed);

/// Top-M proposals by confidence, ties broken by ascending patch index.
std::vector<RegionProposal> propose_regions(const TokenSpace& space, const ProposalHead& head,
                                            std::size_t m);

/// Splits L2 words into contiguous phrases at the given sorted breakpoints.
std::vector<Phrase> extract_phrases(std::size_t num_words,
                                    std::span<const std::uint32_t> breakpoints);

/// Cross-modal contrastive loss over B matched (image, text) vector pairs,
/// both directions, averaged over the batch.
double loss_cmc(std::span<const Vec> image_vecs, std::span<const Vec> text_vecs, double tau);

/// Gradients of loss_cmc with respect to the image and text vectors.
void loss_cmc_grad(std::span<const Vec> image_vecs, std::span<const Vec> text_vecs, double tau,
                   std::vector<Vec>& grad_image, std::vector<Vec>& grad_text);

enum class NormMode { minmax, rowwise };

/// Min-max normalization of a value list to [0,1]. Throws
/// DegenerateInputError on a constant list.
std::vector<double> normalize_interactions(std::span<const double> values, NormMode mode);

/// Row-wise normalization of a row-major rows x cols matrix: shift each row
/// by its minimum and divide by the row sum; a constant row becomes uniform.
std::vector<double> normalize_rows(std::span<const double> values, std::size_t rows,
                                   std::size_t cols);

/// Binary cross-entropy between proposal confidences and normalized
/// interaction labels, averaged over proposals.
double loss_tsa(std::span<const double> confidences, std::span<const double> labels);
std::vector<double> loss_tsa_grad(std::span<const double> confidences,
                                  std::span<const double> labels);

/// Soft cross-entropy between normalized interaction labels and the
/// row-softmaxed alignment matrix, averaged over all M*N cells.
double loss_fsa(const AlignmentMatrix& matrix, std::span<const double> labels);
/// Gradient with respect to the raw alignment scores.
std::vector<double> loss_fsa_grad(const AlignmentMatrix& matrix, std::span<const double> labels);

double compose_total_loss(double cmc, double tsa, double fsa);

/// Specification of one planted (region box, phrase span) pair.
struct PlantedPair {
  std::uint32_t center = 0;
  std::uint32_t box_w = 1;
  std::uint32_t box_h = 1;
  Phrase phrase;
};

struct PlantedInstance {
  std::uint64_t seed = 0;
  double noise = 0.1;
  std::shared_ptr<const TokenSpace> space;
  std::vector<Region> regions;   // one per planted pair, same order
  std::vector<Phrase> phrases;   // one per planted pair, same order
  std::vector<Vec> latents;      // the shared unit latent of each pair
};

/// Synthesizes an instance where each planted (region, phrase) pair shares a
/// random unit latent added to its member embeddings on top of isotropic
/// noise of the given scale. Planted regions must not overlap, nor phrases.
PlantedInstance make_planted_instance(std::uint64_t seed, std::size_t height,
                                      std::size_t width, std::size_t num_words,
                                      std::size_t dim, std::span<const PlantedPair> pairs,
                                      double noise = 0.1);

/// Structured-text instance file: header (H, W, L2, d, seed, noise),
/// embedding blocks in row-major decimal, planted-pair list.
void save_instance(const PlantedInstance& instance, const std::string& path);
PlantedInstance load_instance(const std::string& path);

}  // namespace shapint

#endif  // SHAPINT_ALIGN_HPP
