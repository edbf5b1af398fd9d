#include "shapint/surrogate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "shapint/errors.hpp"

namespace shapint {
namespace {

constexpr double kSigmaFloor = 1e-6;
constexpr double kSigmaCeil = 1.0 - 1e-6;

struct AttentionCache {
  std::vector<Vec> tanh_units;  // per token
  Vec alpha;
  Vec pooled;
};

AttentionCache attend(const AttentionParams& attn, const Vec& query,
                      const std::vector<Vec>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("cannot attend over an empty sequence");
  AttentionCache cache;
  const Vec q_proj = matvec(attn.query, query);
  Vec logits(tokens.size());
  cache.tanh_units.resize(tokens.size());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    Vec z = matvec(attn.key, tokens[j]);
    axpy(1.0, q_proj, z);
    for (double& x : z) x = std::tanh(x);
    logits[j] = dot(attn.score, z);
    cache.tanh_units[j] = std::move(z);
  }
  cache.alpha = softmax(logits);
  cache.pooled = Vec(tokens[0].size(), 0.0);
  for (std::size_t j = 0; j < tokens.size(); ++j)
    axpy(cache.alpha[j], tokens[j], cache.pooled);
  return cache;
}

void attend_backward(const AttentionParams& attn, const AttentionCache& cache,
                     const Vec& query, const std::vector<Vec>& tokens, const Vec& d_pooled,
                     AttentionParams& grads) {
  const std::size_t count = tokens.size();
  Vec d_alpha(count);
  for (std::size_t j = 0; j < count; ++j) d_alpha[j] = dot(d_pooled, tokens[j]);
  double weighted = 0.0;
  for (std::size_t j = 0; j < count; ++j) weighted += cache.alpha[j] * d_alpha[j];

  for (std::size_t j = 0; j < count; ++j) {
    const double d_logit = cache.alpha[j] * (d_alpha[j] - weighted);
    const Vec& t = cache.tanh_units[j];
    axpy(d_logit, t, grads.score);
    Vec dz(t.size());
    for (std::size_t k = 0; k < t.size(); ++k)
      dz[k] = d_logit * attn.score[k] * (1.0 - t[k] * t[k]);
    add_outer(grads.query, dz, query);
    add_outer(grads.key, dz, tokens[j]);
  }
}

struct HeadCache {
  Vec z1, z2;  // post-tanh activations
  double out = 0.0;
};

HeadCache head_forward(const HeadParams& head, const Vec& features) {
  HeadCache cache;
  cache.z1 = matvec(head.w1, features);
  for (std::size_t k = 0; k < cache.z1.size(); ++k) cache.z1[k] = std::tanh(cache.z1[k] + head.b1[k]);
  cache.z2 = matvec(head.w2, cache.z1);
  for (std::size_t k = 0; k < cache.z2.size(); ++k) cache.z2[k] = std::tanh(cache.z2[k] + head.b2[k]);
  cache.out = dot(head.w3, cache.z2) + head.b3;
  return cache;
}

void head_backward(const HeadParams& head, const HeadCache& cache, const Vec& features,
                   double d_out, HeadParams& grads, Vec& d_features) {
  axpy(d_out, cache.z2, grads.w3);
  grads.b3 += d_out;

  Vec dz2(cache.z2.size());
  for (std::size_t k = 0; k < dz2.size(); ++k)
    dz2[k] = d_out * head.w3[k] * (1.0 - cache.z2[k] * cache.z2[k]);
  add_outer(grads.w2, dz2, cache.z1);
  axpy(1.0, dz2, grads.b2);

  Vec dz1 = matvec_t(head.w2, dz2);
  for (std::size_t k = 0; k < dz1.size(); ++k) dz1[k] *= 1.0 - cache.z1[k] * cache.z1[k];
  add_outer(grads.w1, dz1, features);
  axpy(1.0, dz1, grads.b1);
  axpy(1.0, matvec_t(head.w1, dz1), d_features);
}

struct ForwardCache {
  AttentionCache image, text;
  Vec features;
  HeadCache value, uncertainty;
  double sigma_raw = 0.5;  // pre-clamp logistic output
};

Vec concat_features(const SurrogateInput& input, const Vec& image_ctx, const Vec& text_ctx) {
  Vec f;
  f.reserve((input.kind == FeatureKind::token_level ? 3 : 4) * image_ctx.size());
  f.insert(f.end(), input.lead1.begin(), input.lead1.end());
  if (input.kind == FeatureKind::semantics_level)
    f.insert(f.end(), input.lead2.begin(), input.lead2.end());
  f.insert(f.end(), image_ctx.begin(), image_ctx.end());
  f.insert(f.end(), text_ctx.begin(), text_ctx.end());
  return f;
}

ForwardCache forward(const SurrogateParams& params, const SurrogateInput& input) {
  if (input.kind != params.kind) throw std::invalid_argument("surrogate feature kind mismatch");
  if (input.query.size() != params.dim)
    throw std::invalid_argument("surrogate input dimension mismatch");
  ForwardCache cache;
  cache.image = attend(params.attention, input.query, input.image_tokens);
  cache.text = attend(params.attention, input.query, input.text_tokens);
  cache.features = concat_features(input, cache.image.pooled, cache.text.pooled);
  cache.value = head_forward(params.value_head, cache.features);
  cache.uncertainty = head_forward(params.uncertainty_head, cache.features);
  cache.sigma_raw = logistic(cache.uncertainty.out);
  return cache;
}

Prediction to_prediction(const ForwardCache& cache) {
  Prediction p;
  p.value = cache.value.out;
  p.uncertainty = std::min(kSigmaCeil, std::max(kSigmaFloor, cache.sigma_raw));
  return p;
}

void init_head(HeadParams& head, std::size_t feature_dim, std::size_t hidden,
               SplitMix64& rng) {
  const auto glorot = [&](Mat& m, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : m.a) x = a * (2.0 * rng.uniform01() - 1.0);
  };
  head.w1 = Mat(hidden, feature_dim);
  glorot(head.w1, feature_dim, hidden);
  head.b1 = Vec(hidden, 0.0);
  head.w2 = Mat(hidden, hidden);
  glorot(head.w2, hidden, hidden);
  head.b2 = Vec(hidden, 0.0);
  head.w3 = Vec(hidden, 0.0);
  const double a3 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  for (double& x : head.w3) x = a3 * (2.0 * rng.uniform01() - 1.0);
  head.b3 = 0.0;
}

SurrogateParams zeros_like(const SurrogateParams& params) {
  SurrogateParams g = params;
  g.attention.score.assign(g.attention.score.size(), 0.0);
  g.attention.query.a.assign(g.attention.query.a.size(), 0.0);
  g.attention.key.a.assign(g.attention.key.a.size(), 0.0);
  for (HeadParams* h : {&g.value_head, &g.uncertainty_head}) {
    h->w1.a.assign(h->w1.a.size(), 0.0);
    h->b1.assign(h->b1.size(), 0.0);
    h->w2.a.assign(h->w2.a.size(), 0.0);
    h->b2.assign(h->b2.size(), 0.0);
    h->w3.assign(h->w3.size(), 0.0);
    h->b3 = 0.0;
  }
  return g;
}

}  // namespace

SurrogateInput make_token_input(const TokenSpace& space, const Region& region) {
  SurrogateInput input;
  input.kind = FeatureKind::token_level;
  input.lead1 = region_representation(space, region);
  input.query = input.lead1;
  input.image_tokens = space.patches;
  input.text_tokens = space.words;
  return input;
}

SurrogateInput make_semantics_input(std::span<const Vec> region_reps,
                                    std::span<const Vec> phrase_reps, std::size_t i,
                                    std::size_t j) {
  if (i >= region_reps.size() || j >= phrase_reps.size())
    throw std::invalid_argument("region/phrase index out of range");
  SurrogateInput input;
  input.kind = FeatureKind::semantics_level;
  input.lead1 = region_reps[i];
  input.lead2 = phrase_reps[j];
  input.query = input.lead1;
  for (std::size_t k = 0; k < input.query.size(); ++k)
    input.query[k] = (input.lead1[k] + input.lead2[k]) / 2.0;
  input.image_tokens.assign(region_reps.begin(), region_reps.end());
  input.text_tokens.assign(phrase_reps.begin(), phrase_reps.end());
  return input;
}

SurrogateParams surrogate_init(std::size_t dim, FeatureKind kind, std::size_t hidden,
                               std::uint64_t seed) {
  SurrogateParams params;
  params.dim = dim;
  params.hidden = hidden;
  params.kind = kind;

  SplitMix64 rng(seed ^ 0x7e57ab1e5eedull);
  params.attention.score = Vec(dim, 0.0);
  const double a = std::sqrt(6.0 / static_cast<double>(dim + 1));
  for (double& x : params.attention.score) x = a * (2.0 * rng.uniform01() - 1.0);
  params.attention.query = Mat(dim, dim);
  params.attention.key = Mat(dim, dim);
  const double aq = std::sqrt(6.0 / static_cast<double>(dim + dim));
  for (double& x : params.attention.query.a) x = aq * (2.0 * rng.uniform01() - 1.0);
  for (double& x : params.attention.key.a) x = aq * (2.0 * rng.uniform01() - 1.0);

  init_head(params.value_head, params.feature_dim(), hidden, rng);
  init_head(params.uncertainty_head, params.feature_dim(), hidden, rng);
  return params;
}

Vec featurize(const SurrogateParams& params, const SurrogateInput& input) {
  if (input.kind != params.kind) throw std::invalid_argument("surrogate feature kind mismatch");
  AttentionCache image = attend(params.attention, input.query, input.image_tokens);
  AttentionCache text = attend(params.attention, input.query, input.text_tokens);
  return concat_features(input, image.pooled, text.pooled);
}

Prediction predict_features(const SurrogateParams& params, const Vec& features) {
  if (features.size() != params.feature_dim())
    throw std::invalid_argument("feature dimension mismatch");
  ForwardCache cache;
  cache.value = head_forward(params.value_head, features);
  cache.uncertainty = head_forward(params.uncertainty_head, features);
  cache.sigma_raw = logistic(cache.uncertainty.out);
  return to_prediction(cache);
}

Prediction predict(const SurrogateParams& params, const SurrogateInput& input) {
  return to_prediction(forward(params, input));
}

double unsil_loss(const Prediction& prediction, double target, const TrainConfig& cfg) {
  const double sigma = prediction.uncertainty;
  if (sigma <= 0.0 || sigma >= 1.0)
    throw std::invalid_argument("uncertainty must be strictly inside (0,1)");
  const double err = prediction.value - target;
  return err * err / (cfg.beta1 * sigma) + cfg.beta2 * sigma;
}

double train_step(SurrogateParams& params, std::span<const TrainExample> batch,
                  const TrainConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");

  SurrogateParams grads = zeros_like(params);
  double mean_loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (const TrainExample& ex : batch) {
    ForwardCache cache = forward(params, ex.input);
    Prediction pred = to_prediction(cache);
    mean_loss += inv_b * unsil_loss(pred, ex.target, cfg);

    const double err = pred.value - ex.target;
    const double d_value = inv_b * 2.0 * err / (cfg.beta1 * pred.uncertainty);
    double d_sigma =
        inv_b * (cfg.beta2 - err * err / (cfg.beta1 * pred.uncertainty * pred.uncertainty));
    // The clamp is flat; no gradient once sigma pins to a bound.
    double d_unc_out = 0.0;
    if (cache.sigma_raw > kSigmaFloor && cache.sigma_raw < kSigmaCeil)
      d_unc_out = d_sigma * cache.sigma_raw * (1.0 - cache.sigma_raw);

    Vec d_features(cache.features.size(), 0.0);
    head_backward(params.value_head, cache.value, cache.features, d_value, grads.value_head,
                  d_features);
    head_backward(params.uncertainty_head, cache.uncertainty, cache.features, d_unc_out,
                  grads.uncertainty_head, d_features);

    // Split the feature gradient; the lead blocks stop at the inputs.
    const std::size_t d = params.dim;
    const std::size_t lead = ex.input.kind == FeatureKind::token_level ? d : 2 * d;
    Vec d_image(d_features.begin() + static_cast<std::ptrdiff_t>(lead),
                d_features.begin() + static_cast<std::ptrdiff_t>(lead + d));
    Vec d_text(d_features.begin() + static_cast<std::ptrdiff_t>(lead + d), d_features.end());
    attend_backward(params.attention, cache.image, ex.input.query, ex.input.image_tokens,
                    d_image, grads.attention);
    attend_backward(params.attention, cache.text, ex.input.query, ex.input.text_tokens,
                    d_text, grads.attention);
  }

  if (!std::isfinite(mean_loss))
    throw NumericError("non-finite surrogate loss (check targets and learning rate)");

  Vec p = flatten(params);
  const Vec g = flatten(grads);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] -= cfg.learning_rate * g[k];
  unflatten(params, p);
  return mean_loss;
}

InteractionEstimate hybrid_estimate(const GameEvaluator& game, const Coalition& s,
                                    const SurrogateInput& input, SurrogateParams& params,
                                    const TrainConfig& cfg, const SamplingConfig& sampling_cfg,
                                    SplitMix64& gate_rng, std::uint64_t iteration,
                                    const HybridOptions& options) {
  const bool warm = iteration < cfg.warmup_iterations;
  if (!warm && !options.force_sampling) {
    const Prediction pred = predict(params, input);
    const double epsilon = gate_rng.uniform01();
    if (epsilon > pred.uncertainty) {
      InteractionEstimate est;
      est.mean = pred.value;
      est.variance_of_mean = 0.0;
      est.samples = 0;
      est.evals_used = 0;
      est.method = EstimateMethod::surrogate;
      return est;
    }
  }

  InteractionEstimate est = sample_interaction(game, s, sampling_cfg);
  if (!options.freeze_training) {
    const TrainExample ex{input, est.mean};
    train_step(params, std::span<const TrainExample>(&ex, 1), cfg);
  }
  return est;
}

Vec flatten(const SurrogateParams& params) {
  Vec out;
  auto push = [&](const Vec& v) { out.insert(out.end(), v.begin(), v.end()); };
  push(params.attention.score);
  push(params.attention.query.a);
  push(params.attention.key.a);
  for (const HeadParams* h : {&params.value_head, &params.uncertainty_head}) {
    push(h->w1.a);
    push(h->b1);
    push(h->w2.a);
    push(h->b2);
    push(h->w3);
    out.push_back(h->b3);
  }
  return out;
}

void unflatten(SurrogateParams& params, const Vec& values) {
  std::size_t pos = 0;
  auto take = [&](Vec& v) {
    if (pos + v.size() > values.size()) throw std::invalid_argument("flat parameter size mismatch");
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(pos),
              values.begin() + static_cast<std::ptrdiff_t>(pos + v.size()), v.begin());
    pos += v.size();
  };
  take(params.attention.score);
  take(params.attention.query.a);
  take(params.attention.key.a);
  for (HeadParams* h : {&params.value_head, &params.uncertainty_head}) {
    take(h->w1.a);
    take(h->b1);
    take(h->w2.a);
    take(h->b2);
    take(h->w3);
    h->b3 = values.at(pos++);
  }
  if (pos != values.size()) throw std::invalid_argument("flat parameter size mismatch");
}

void save_surrogate(const SurrogateParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  const Vec flat = flatten(params);
  out << "UNSIL1\n";
  out << params.dim << " " << params.hidden << " "
      << (params.kind == FeatureKind::token_level ? 0 : 1) << " " << flat.size() << "\n";
  char buf[64];
  for (std::size_t k = 0; k < flat.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", flat[k]);
    out << buf << ((k + 1) % 8 == 0 || k + 1 == flat.size() ? "\n" : " ");
  }
}

SurrogateParams load_surrogate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string magic;
  in >> magic;
  if (magic != "UNSIL1") throw std::runtime_error("not an UNSIL1 checkpoint: " + path);
  std::size_t dim = 0, hidden = 0, count = 0;
  int kind = 0;
  in >> dim >> hidden >> kind >> count;
  SurrogateParams params = surrogate_init(
      dim, kind == 0 ? FeatureKind::token_level : FeatureKind::semantics_level, hidden, 0);
  Vec flat(count);
  for (double& x : flat) in >> x;
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  unflatten(params, flat);
  return params;
}

}  // namespace shapint
