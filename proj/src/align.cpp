#include "shapint/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "shapint/errors.hpp"
#include "shapint/sampling.hpp"

namespace shapint {
namespace {

double gaussian(SplitMix64& rng) {
  // Box-Muller; uniform01 never returns 0.
  const double u = rng.uniform01();
  const double v = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

Vec random_unit(std::size_t dim, SplitMix64& rng) {
  Vec v(dim);
  double n = 0.0;
  while (n < 1e-12) {
    for (double& x : v) x = gaussian(rng);
    n = norm(v);
  }
  for (double& x : v) x /= n;
  return v;
}

Vec normalized_sum(const std::vector<Vec>& embeddings, const Coalition& mask,
                   std::uint32_t offset, std::size_t dim) {
  Vec sum(dim, 0.0);
  for (std::size_t k = 0; k < embeddings.size(); ++k)
    if (mask.contains(offset + static_cast<std::uint32_t>(k))) axpy(1.0, embeddings[k], sum);
  const double n = norm(sum);
  if (n > 0.0)
    for (double& x : sum) x /= n;
  return sum;
}

}  // namespace

Region make_region(const TokenSpace& space, std::uint32_t center, std::uint32_t box_w,
                   std::uint32_t box_h) {
  if (center >= space.num_patches()) throw std::invalid_argument("region center off grid");
  if (box_w < 1 || box_h < 1) throw std::invalid_argument("region box must be at least 1x1");

  const std::int64_t w = static_cast<std::int64_t>(space.width);
  const std::int64_t h = static_cast<std::int64_t>(space.height);
  const std::int64_t cx = center % w;
  const std::int64_t cy = center / w;
  const std::int64_t left = std::max<std::int64_t>(0, cx - (box_w - 1) / 2);
  const std::int64_t right = std::min<std::int64_t>(w - 1, cx + box_w / 2);
  const std::int64_t top = std::max<std::int64_t>(0, cy - (box_h - 1) / 2);
  const std::int64_t bottom = std::min<std::int64_t>(h - 1, cy + box_h / 2);

  Region r;
  r.center = center;
  r.box_w = box_w;
  r.box_h = box_h;
  for (std::int64_t y = top; y <= bottom; ++y)
    for (std::int64_t x = left; x <= right; ++x)
      r.members.push_back(static_cast<std::uint32_t>(y * w + x));
  return r;
}

Coalition region_coalition(const TokenSpace& space, const Region& region) {
  Coalition c(space.universe_size());
  for (std::uint32_t p : region.members) {
    if (p >= space.num_patches()) throw std::invalid_argument("region member off grid");
    c.add(p);
  }
  return c;
}

std::pair<Vec, Vec> encode(const TokenSpace& space, const Coalition& mask) {
  if (mask.universe_size() != space.universe_size())
    throw std::invalid_argument("mask universe does not match token space");
  Vec image = normalized_sum(space.patches, mask, 0, space.dim);
  Vec text = normalized_sum(space.words, mask, static_cast<std::uint32_t>(space.num_patches()),
                            space.dim);
  return {std::move(image), std::move(text)};
}

double global_similarity_v1(const TokenSpace& space, const Coalition& s) {
  auto [image, text] = encode(space, s);
  return dot(image, text);
}

GameEvaluator make_token_game(std::shared_ptr<const TokenSpace> space) {
  const std::size_t n = space->universe_size();
  return GameEvaluator(n, [space = std::move(space)](const Coalition& s) {
    return global_similarity_v1(*space, s);
  });
}

Vec region_representation(const TokenSpace& space, const Region& region) {
  if (region.members.empty()) throw std::invalid_argument("empty region");
  Vec sum(space.dim, 0.0);
  for (std::uint32_t p : region.members) axpy(1.0, space.patches.at(p), sum);
  for (double& x : sum) x /= static_cast<double>(region.members.size());
  return sum;
}

Vec phrase_representation(const TokenSpace& space, const Phrase& phrase) {
  if (phrase.begin >= phrase.end || phrase.end > space.num_words())
    throw std::invalid_argument("phrase span out of range");
  Vec sum(space.dim, 0.0);
  for (std::uint32_t w = phrase.begin; w < phrase.end; ++w) axpy(1.0, space.words[w], sum);
  for (double& x : sum) x /= static_cast<double>(phrase.size());
  return sum;
}

AlignmentMatrix make_alignment_matrix(std::span<const Vec> region_reps,
                                      std::span<const Vec> phrase_reps, bool cosine) {
  AlignmentMatrix m;
  m.rows = region_reps.size();
  m.cols = phrase_reps.size();
  m.raw.resize(m.rows * m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) {
      double a = dot(region_reps[i], phrase_reps[j]);
      if (cosine) {
        const double d = norm(region_reps[i]) * norm(phrase_reps[j]);
        a = d > 0.0 ? a / d : 0.0;
      }
      m.raw[i * m.cols + j] = a;
    }
  m.row_normalized.resize(m.rows * m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    Vec row(m.raw.begin() + static_cast<std::ptrdiff_t>(i * m.cols),
            m.raw.begin() + static_cast<std::ptrdiff_t>((i + 1) * m.cols));
    Vec sm = softmax(row);
    std::copy(sm.begin(), sm.end(), m.row_normalized.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
  }
  return m;
}

double fine_grained_similarity_v2(std::span<const Vec> region_reps,
                                  std::span<const Vec> phrase_reps, const Coalition& s,
                                  bool cosine) {
  const std::size_t m = region_reps.size();
  const std::size_t n = phrase_reps.size();
  if (s.universe_size() != m + n)
    throw std::invalid_argument("coalition universe must be M regions + N phrases");

  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < m; ++i)
    if (s.contains(static_cast<std::uint32_t>(i))) rows.push_back(i);
  for (std::size_t j = 0; j < n; ++j)
    if (s.contains(static_cast<std::uint32_t>(m + j))) cols.push_back(j);
  if (rows.empty() || cols.empty()) return 0.0;

  // Restricted raw scores.
  Mat a(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) {
      double v = dot(region_reps[rows[r]], phrase_reps[cols[c]]);
      if (cosine) {
        const double d = norm(region_reps[rows[r]]) * norm(phrase_reps[cols[c]]);
        v = d > 0.0 ? v / d : 0.0;
      }
      a(r, c) = v;
    }

  double p1 = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Vec row(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) row[c] = a(r, c);
    Vec sm = softmax(row);
    p1 += *std::max_element(sm.begin(), sm.end());
  }
  p1 /= static_cast<double>(rows.size());

  double p2 = 0.0;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    Vec col(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) col[r] = a(r, c);
    Vec sm = softmax(col);
    p2 += *std::max_element(sm.begin(), sm.end());
  }
  p2 /= static_cast<double>(cols.size());

  return (p1 + p2) / 2.0;
}

GameEvaluator make_semantics_game(std::vector<Vec> region_reps, std::vector<Vec> phrase_reps,
                                  bool cosine) {
  const std::size_t n = region_reps.size() + phrase_reps.size();
  return GameEvaluator(n, [regions = std::move(region_reps), phrases = std::move(phrase_reps),
                           cosine](const Coalition& s) {
    return fine_grained_similarity_v2(regions, phrases, s, cosine);
  });
}

ProposalHead init_proposal_head(std::size_t dim, std::uint32_t max_box, std::uint64_t seed) {
  ProposalHead head;
  head.weights = Mat(3, dim);
  head.bias = Vec(3, 0.0);
  head.max_box = max_box;
  SplitMix64 rng(seed);
  const double a = std::sqrt(6.0 / static_cast<double>(dim + 3));
  for (double& w : head.weights.a) w = a * (2.0 * rng.uniform01() - 1.0);
  return head;
}

std::vector<RegionProposal> propose_regions(const TokenSpace& space, const ProposalHead& head,
                                            std::size_t m) {
  if (m > space.num_patches())
    throw std::invalid_argument("cannot select more proposals than patches");
  if (head.weights.cols != space.dim) throw std::invalid_argument("head dimension mismatch");

  std::vector<RegionProposal> all;
  all.reserve(space.num_patches());
  const double span = static_cast<double>(head.max_box) - 1.0;
  for (std::uint32_t p = 0; p < space.num_patches(); ++p) {
    Vec logits = matvec(head.weights, space.patches[p]);
    for (std::size_t k = 0; k < 3; ++k) logits[k] += head.bias[k];
    const auto squash = [&](double l) {
      return static_cast<std::uint32_t>(std::llround(1.0 + span * logistic(l)));
    };
    RegionProposal rp;
    rp.region = make_region(space, p, squash(logits[0]), squash(logits[1]));
    rp.confidence = logistic(logits[2]);
    all.push_back(std::move(rp));
  }
  // Stable sort keeps the ascending-index tie-break.
  std::stable_sort(all.begin(), all.end(), [](const RegionProposal& x, const RegionProposal& y) {
    return x.confidence > y.confidence;
  });
  all.resize(m);
  return all;
}

std::vector<Phrase> extract_phrases(std::size_t num_words,
                                    std::span<const std::uint32_t> breakpoints) {
  if (num_words == 0) throw std::invalid_argument("no words to chunk");
  std::vector<Phrase> phrases;
  std::uint32_t begin = 0;
  for (std::uint32_t b : breakpoints) {
    if (b <= begin || b >= num_words)
      throw std::invalid_argument("breakpoints must be sorted and inside (0, L2)");
    phrases.push_back({begin, b});
    begin = b;
  }
  phrases.push_back({begin, static_cast<std::uint32_t>(num_words)});
  return phrases;
}

double loss_cmc(std::span<const Vec> image_vecs, std::span<const Vec> text_vecs, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("temperature must be positive");
  if (image_vecs.size() != text_vecs.size() || image_vecs.empty())
    throw std::invalid_argument("batch sizes must match and be non-empty");

  const std::size_t b = image_vecs.size();
  Mat sims(b, b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) sims(i, j) = dot(image_vecs[i], text_vecs[j]) / tau;

  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    Vec row(b), col(b);
    for (std::size_t j = 0; j < b; ++j) {
      row[j] = sims(i, j);
      col[j] = sims(j, i);
    }
    total += -std::log(softmax(row)[i]) - std::log(softmax(col)[i]);
  }
  return total / static_cast<double>(b);
}

void loss_cmc_grad(std::span<const Vec> image_vecs, std::span<const Vec> text_vecs, double tau,
                   std::vector<Vec>& grad_image, std::vector<Vec>& grad_text) {
  const std::size_t b = image_vecs.size();
  const std::size_t d = image_vecs[0].size();
  Mat sims(b, b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) sims(i, j) = dot(image_vecs[i], text_vecs[j]) / tau;

  // dL/ds_ab accumulated from the image->text row softmax of row a and the
  // text->image column softmax of column b.
  Mat ds(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    Vec row(b), col(b);
    for (std::size_t j = 0; j < b; ++j) {
      row[j] = sims(i, j);
      col[j] = sims(j, i);
    }
    Vec prow = softmax(row), pcol = softmax(col);
    for (std::size_t j = 0; j < b; ++j) {
      ds(i, j) += (prow[j] - (i == j ? 1.0 : 0.0)) / (tau * static_cast<double>(b));
      ds(j, i) += (pcol[j] - (i == j ? 1.0 : 0.0)) / (tau * static_cast<double>(b));
    }
  }

  grad_image.assign(b, Vec(d, 0.0));
  grad_text.assign(b, Vec(d, 0.0));
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      axpy(ds(i, j), text_vecs[j], grad_image[i]);
      axpy(ds(i, j), image_vecs[i], grad_text[j]);
    }
}

std::vector<double> normalize_interactions(std::span<const double> values, NormMode mode) {
  if (values.empty()) throw std::invalid_argument("nothing to normalize");
  if (mode == NormMode::rowwise) return normalize_rows(values, 1, values.size());

  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mx == *mn)
    throw DegenerateInputError("min-max normalization of a constant list is undefined");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *mn) / (*mx - *mn);
  return out;
}

std::vector<double> normalize_rows(std::span<const double> values, std::size_t rows,
                                   std::size_t cols) {
  if (values.size() != rows * cols) throw std::invalid_argument("matrix shape mismatch");
  std::vector<double> out(values.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = values.data() + r * cols;
    const double mn = *std::min_element(row, row + cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) sum += row[c] - mn;
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] = sum > 0.0 ? (row[c] - mn) / sum : 1.0 / static_cast<double>(cols);
  }
  return out;
}

double loss_tsa(std::span<const double> confidences, std::span<const double> labels) {
  if (confidences.size() != labels.size() || confidences.empty())
    throw std::invalid_argument("confidence/label length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double s = confidences[i];
    if (s <= 0.0 || s >= 1.0) throw std::invalid_argument("confidences must be inside (0,1)");
    total += labels[i] * std::log(s) + (1.0 - labels[i]) * std::log(1.0 - s);
  }
  return -total / static_cast<double>(confidences.size());
}

std::vector<double> loss_tsa_grad(std::span<const double> confidences,
                                  std::span<const double> labels) {
  std::vector<double> grad(confidences.size());
  const double inv_m = 1.0 / static_cast<double>(confidences.size());
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double s = confidences[i];
    grad[i] = -inv_m * (labels[i] / s - (1.0 - labels[i]) / (1.0 - s));
  }
  return grad;
}

double loss_fsa(const AlignmentMatrix& matrix, std::span<const double> labels) {
  if (labels.size() != matrix.rows * matrix.cols)
    throw std::invalid_argument("label shape does not match alignment matrix");
  double total = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k)
    total += labels[k] * std::log(matrix.row_normalized[k]);
  return -total / static_cast<double>(matrix.rows * matrix.cols);
}

std::vector<double> loss_fsa_grad(const AlignmentMatrix& matrix, std::span<const double> labels) {
  if (labels.size() != matrix.rows * matrix.cols)
    throw std::invalid_argument("label shape does not match alignment matrix");
  std::vector<double> grad(labels.size());
  const double scale = 1.0 / static_cast<double>(matrix.rows * matrix.cols);
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    double row_label_sum = 0.0;
    for (std::size_t j = 0; j < matrix.cols; ++j) row_label_sum += labels[i * matrix.cols + j];
    for (std::size_t j = 0; j < matrix.cols; ++j) {
      const std::size_t k = i * matrix.cols + j;
      grad[k] = -scale * (labels[k] - matrix.row_normalized[k] * row_label_sum);
    }
  }
  return grad;
}

double compose_total_loss(double cmc, double tsa, double fsa) { return cmc + tsa + fsa; }

PlantedInstance make_planted_instance(std::uint64_t seed, std::size_t height,
                                      std::size_t width, std::size_t num_words,
                                      std::size_t dim, std::span<const PlantedPair> pairs,
                                      double noise) {
  auto space = std::make_shared<TokenSpace>();
  space->height = height;
  space->width = width;
  space->dim = dim;

  SplitMix64 rng(seed ^ 0x5ca1ab1e0ddba11ull);
  space->patches.resize(height * width);
  for (auto& p : space->patches) {
    p.resize(dim);
    for (double& x : p) x = noise * gaussian(rng);
  }
  space->words.resize(num_words);
  for (auto& w : space->words) {
    w.resize(dim);
    for (double& x : w) x = noise * gaussian(rng);
  }

  PlantedInstance inst;
  inst.seed = seed;
  inst.noise = noise;

  std::vector<bool> patch_taken(height * width, false), word_taken(num_words, false);
  for (const PlantedPair& pp : pairs) {
    Region region = make_region(*space, pp.center, pp.box_w, pp.box_h);
    for (std::uint32_t p : region.members) {
      if (patch_taken[p]) throw std::invalid_argument("planted regions overlap");
      patch_taken[p] = true;
    }
    if (pp.phrase.begin >= pp.phrase.end || pp.phrase.end > num_words)
      throw std::invalid_argument("planted phrase span out of range");
    for (std::uint32_t w = pp.phrase.begin; w < pp.phrase.end; ++w) {
      if (word_taken[w]) throw std::invalid_argument("planted phrases overlap");
      word_taken[w] = true;
    }

    inst.regions.push_back(std::move(region));
    inst.phrases.push_back(pp.phrase);
    inst.latents.push_back(random_unit(dim, rng));
  }

  // Draws a unit vector orthogonal to everything in `basis` (best effort if
  // the dimension is too small to fully orthogonalize).
  auto orthonormal_to = [&](const std::vector<const Vec*>& basis) {
    for (int attempt = 0; attempt < 16; ++attempt) {
      Vec v = random_unit(dim, rng);
      for (const Vec* b : basis) axpy(-dot(v, *b), *b, v);
      const double s = norm(v);
      if (s > 1e-6) {
        for (double& x : v) x /= s;
        return v;
      }
    }
    return random_unit(dim, rng);
  };

  // Shared background direction, orthogonal to every planted latent. Every
  // token in both modalities carries the background on top of the isotropic
  // noise, so coalitions of unplanted tokens encode near the background and
  // their cross-modal similarity is a stable constant instead of an
  // arbitrary unit-scale value that swamps the planted signal.
  std::vector<const Vec*> basis;
  for (const Vec& u : inst.latents) basis.push_back(&u);
  Vec background = orthonormal_to(basis);
  basis.push_back(&background);
  for (Vec& p : space->patches) axpy(1.0, background, p);
  for (Vec& w : space->words) axpy(1.0, background, w);

  for (std::size_t r = 0; r < inst.regions.size(); ++r) {
    const Region& region = inst.regions[r];
    const Phrase& phrase = inst.phrases[r];
    const Vec& latent = inst.latents[r];
    for (std::uint32_t p : region.members) axpy(1.0, latent, space->patches[p]);
    for (std::uint32_t w = phrase.begin; w < phrase.end; ++w)
      axpy(1.0, latent, space->words[w]);

    // Zero-sum spread over the region members: each patch also carries a
    // large offset that cancels across the region, so the region aligns with
    // the phrase as a whole while no member does on its own. The offsets are
    // equally spaced points on a circle in a plane orthogonal to the latents
    // and backgrounds: equal norms, exact cancellation in the region mean,
    // and no component along any direction a phrase encoding can take.
    const std::size_t k = region.members.size();
    if (k > 1 && dim >= 3) {
      Vec e1 = orthonormal_to(basis);
      basis.push_back(&e1);
      Vec e2 = orthonormal_to(basis);
      basis.pop_back();

      const double radius = 2.0 * static_cast<double>(k);
      const double phase = 2.0 * M_PI * rng.uniform01();
      for (std::size_t j = 0; j < k; ++j) {
        const double angle = phase + 2.0 * M_PI * static_cast<double>(j) / k;
        Vec& patch = space->patches[region.members[j]];
        axpy(radius * std::cos(angle), e1, patch);
        axpy(radius * std::sin(angle), e2, patch);
      }
    }
  }

  inst.space = std::move(space);
  return inst;
}

void save_instance(const PlantedInstance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open instance file for writing: " + path);
  const TokenSpace& sp = *instance.space;
  out << "TOKSPACE1\n";
  out << sp.height << " " << sp.width << " " << sp.num_words() << " " << sp.dim << " "
      << instance.seed << " ";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", instance.noise);
  out << buf << "\n";
  auto write_block = [&](const std::vector<Vec>& block) {
    for (const Vec& v : block) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        out << (i ? " " : "") << buf;
      }
      out << "\n";
    }
  };
  write_block(sp.patches);
  write_block(sp.words);
  out << instance.regions.size() << "\n";
  for (std::size_t k = 0; k < instance.regions.size(); ++k) {
    const Region& r = instance.regions[k];
    out << r.center << " " << r.box_w << " " << r.box_h << " " << instance.phrases[k].begin
        << " " << instance.phrases[k].end << "\n";
  }
  write_block(instance.latents);
}

PlantedInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "TOKSPACE1") throw std::runtime_error("not an instance file: " + path);

  auto space = std::make_shared<TokenSpace>();
  std::size_t num_words = 0;
  PlantedInstance inst;
  in >> space->height >> space->width >> num_words >> space->dim >> inst.seed >> inst.noise;

  auto read_block = [&](std::vector<Vec>& block, std::size_t count) {
    block.resize(count);
    for (Vec& v : block) {
      v.resize(space->dim);
      for (double& x : v) in >> x;
    }
  };
  read_block(space->patches, space->height * space->width);
  read_block(space->words, num_words);

  std::size_t pairs = 0;
  in >> pairs;
  for (std::size_t k = 0; k < pairs; ++k) {
    std::uint32_t center = 0, bw = 0, bh = 0;
    Phrase ph;
    in >> center >> bw >> bh >> ph.begin >> ph.end;
    inst.regions.push_back(make_region(*space, center, bw, bh));
    inst.phrases.push_back(ph);
  }
  read_block(inst.latents, pairs);
  if (!in) throw std::runtime_error("truncated instance file: " + path);

  inst.space = std::move(space);
  return inst;
}

}  // namespace shapint
