// shapint_cli — reproducible experiment harness over the shapint C API.
//
// Subcommands: axioms, oracle-equivalence, sweep, unsil-study, align-demo.
// Every command is a pure function of its resolved config; the config is
// echoed into the output header so runs are diffable.
#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shapint.h"

namespace {

constexpr const char* kFormatVersion = "shapint-csv-1";

struct StatusError : std::runtime_error {
  si_result status;
  StatusError(si_result s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(si_result st, const char* where) {
  if (st != SI_OK) {
    throw StatusError(st, std::string(where) + ": " + si_result_name(st) + " (" +
                              si_last_error() + ")");
  }
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// --- small deterministic RNG for seeded test games --------------------------

uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t seed, uint64_t k) { return mix64(seed ^ mix64(k + 1)); }

double unit_signed(uint64_t seed, uint64_t key) {
  const uint64_t h = mix64(seed ^ mix64(key));
  return 2.0 * (double)(h >> 11) * 0x1.0p-53 - 1.0;
}

uint64_t mask_of(const uint32_t* members, size_t count) {
  uint64_t mask = 0;
  for (size_t k = 0; k < count; ++k) mask |= 1ull << members[k];
  return mask;
}

// v(S) = hash(seed, S) in [-1, 1], v(empty) = 0.
struct RandomGameCtx {
  uint64_t seed;
};

double random_game_fn(const uint32_t* members, size_t count, void* ctx) {
  if (count == 0) return 0.0;
  const auto* c = static_cast<const RandomGameCtx*>(ctx);
  return unit_signed(c->seed, mask_of(members, count));
}

struct LinCombCtx {
  RandomGameCtx g1, g2;
  double a, b;
};

double lincomb_game_fn(const uint32_t* members, size_t count, void* ctx) {
  const auto* c = static_cast<const LinCombCtx*>(ctx);
  return c->a * random_game_fn(members, count, (void*)&c->g1) +
         c->b * random_game_fn(members, count, (void*)&c->g2);
}

// v(S) + v(S with players 0 and 1 swapped): symmetric in 0 and 1.
double symmetrized_game_fn(const uint32_t* members, size_t count, void* ctx) {
  const auto* c = static_cast<const RandomGameCtx*>(ctx);
  if (count == 0) return 0.0;
  const uint64_t mask = mask_of(members, count);
  uint64_t swapped = mask & ~3ull;
  if (mask & 1ull) swapped |= 2ull;
  if (mask & 2ull) swapped |= 1ull;
  const double a = unit_signed(c->seed, mask);
  const double b = swapped ? unit_signed(c->seed, swapped) : 0.0;
  return a + b;
}

// Base game over players < dummy, plus a constant marginal for the dummy.
struct DummyCtx {
  RandomGameCtx base;
  uint32_t dummy;
  double marginal;
};

double dummy_game_fn(const uint32_t* members, size_t count, void* ctx) {
  const auto* c = static_cast<const DummyCtx*>(ctx);
  uint64_t mask = 0;
  bool has_dummy = false;
  for (size_t k = 0; k < count; ++k) {
    if (members[k] == c->dummy)
      has_dummy = true;
    else
      mask |= 1ull << members[k];
  }
  const double base = mask ? unit_signed(c->base.seed, mask) : 0.0;
  return base + (has_dummy ? c->marginal : 0.0);
}

// --- config ------------------------------------------------------------------

struct Options {
  uint64_t seed = 1;
  std::string out;
  std::vector<uint64_t> budgets = {50, 100, 200, 500, 1000};
  uint64_t repeats = 10;
  std::string dims = "3x3x4x6";
  double beta1 = 1.0;
  double beta2 = 1.0;
  double lr = 1e-2;
  uint64_t warmup = 100;
  bool force_sampling = false;
  bool freeze_surrogate = false;
  std::string norm_mode = "rowwise";
  unsigned workers = 1;
  uint64_t games = 0;  // 0 = per-command default
  uint64_t stream = 2000;
  uint64_t samples = 64;
  double noise = 0.1;
  double tau = 1.0;
  uint64_t proposals = 5;
};

struct Dims {
  size_t height, width, words, dim;
};

Dims parse_dims(const std::string& text) {
  Dims d{};
  char sep1, sep2, sep3;
  std::istringstream in(text);
  if (!(in >> d.height >> sep1 >> d.width >> sep2 >> d.words >> sep3 >> d.dim) ||
      sep1 != 'x' || sep2 != 'x' || sep3 != 'x' || d.height == 0 || d.width == 0 ||
      d.words == 0 || d.dim == 0) {
    throw CLI::ValidationError("--dims", "expected HxWxL2xD with positive integers");
  }
  return d;
}

class Report {
 public:
  Report(const std::string& path, const std::string& command, const Options& opt)
      : out_(path) {
    if (!out_) throw StatusError(SI_ERR_IO, "cannot open output file " + path);
    line("# format=" + std::string(kFormatVersion));
    line("# command=" + command);
    line("# seed=" + std::to_string(opt.seed));
    std::string budgets;
    for (size_t k = 0; k < opt.budgets.size(); ++k)
      budgets += (k ? "," : "") + std::to_string(opt.budgets[k]);
    line("# budgets=" + budgets);
    line("# repeats=" + std::to_string(opt.repeats));
    line("# dims=" + opt.dims);
    line("# beta1=" + fmt(opt.beta1));
    line("# beta2=" + fmt(opt.beta2));
    line("# lr=" + fmt(opt.lr));
    line("# warmup=" + std::to_string(opt.warmup));
    line("# force-sampling=" + std::to_string(opt.force_sampling ? 1 : 0));
    line("# freeze-surrogate=" + std::to_string(opt.freeze_surrogate ? 1 : 0));
    // The worker count is deliberately not echoed: outputs are identical
    // for any worker count and the files should be byte-identical too.
    line("# norm-mode=" + opt.norm_mode);
    line("# games=" + std::to_string(opt.games));
    line("# stream=" + std::to_string(opt.stream));
    line("# samples=" + std::to_string(opt.samples));
    line("# noise=" + fmt(opt.noise));
    line("# tau=" + fmt(opt.tau));
    line("# proposals=" + std::to_string(opt.proposals));
  }

  void line(const std::string& text) { out_ << text << '\n'; }

 private:
  std::ofstream out_;
};

struct GameHandle {
  si_game* g = nullptr;
  explicit GameHandle(si_game* game) : g(game) {
    if (!g) throw StatusError(SI_ERR_UNKNOWN, si_last_error());
  }
  ~GameHandle() { si_game_destroy(g); }
  GameHandle(const GameHandle&) = delete;
  GameHandle& operator=(const GameHandle&) = delete;
};

struct InstanceHandle {
  si_instance* h = nullptr;
  explicit InstanceHandle(si_instance* inst) : h(inst) {
    if (!h) throw StatusError(SI_ERR_UNKNOWN, si_last_error());
  }
  ~InstanceHandle() { si_instance_destroy(h); }
  InstanceHandle(const InstanceHandle&) = delete;
  InstanceHandle& operator=(const InstanceHandle&) = delete;
};

// --- axioms ------------------------------------------------------------------

int cmd_axioms(const Options& opt) {
  const uint64_t games = opt.games ? opt.games : 100;
  double dev_lin = 0, dev_sym = 0, dev_dummy = 0, dev_eff = 0;
  for (uint64_t g = 0; g < games; ++g) {
    const size_t n = 3 + (size_t)(g % 8);
    const uint64_t gseed = derive_seed(opt.seed, g);

    // linearity: shapley(a*v1 + b*v2) == a*shapley(v1) + b*shapley(v2)
    LinCombCtx lin{{gseed}, {mix64(gseed)}, unit_signed(gseed, 101), unit_signed(gseed, 102)};
    GameHandle g1(si_game_create(n, random_game_fn, &lin.g1));
    GameHandle g2(si_game_create(n, random_game_fn, &lin.g2));
    GameHandle g3(si_game_create(n, lincomb_game_fn, &lin));
    for (uint32_t i = 0; i < n; ++i) {
      double p1, p2, p3;
      check(si_shapley_exact(g1.g, i, 20, &p1, nullptr), "shapley");
      check(si_shapley_exact(g2.g, i, 20, &p2, nullptr), "shapley");
      check(si_shapley_exact(g3.g, i, 20, &p3, nullptr), "shapley");
      dev_lin = std::max(dev_lin, std::fabs(p3 - (lin.a * p1 + lin.b * p2)));
    }

    // symmetry: players 0 and 1 interchangeable => equal values
    RandomGameCtx sym{gseed};
    GameHandle gs(si_game_create(n, symmetrized_game_fn, &sym));
    double s0, s1;
    check(si_shapley_exact(gs.g, 0, 20, &s0, nullptr), "shapley");
    check(si_shapley_exact(gs.g, 1, 20, &s1, nullptr), "shapley");
    dev_sym = std::max(dev_sym, std::fabs(s0 - s1));

    // dummy: constant-marginal player gets exactly that marginal
    DummyCtx dummy{{gseed}, (uint32_t)(n - 1), unit_signed(gseed, 103)};
    GameHandle gd(si_game_create(n, dummy_game_fn, &dummy));
    double pd;
    check(si_shapley_exact(gd.g, dummy.dummy, 20, &pd, nullptr), "shapley");
    dev_dummy = std::max(dev_dummy, std::fabs(pd - dummy.marginal));

    // efficiency: values sum to v(N) - v(empty)
    std::vector<uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0u);
    const double grand = random_game_fn(all.data(), n, &sym);
    GameHandle ge(si_game_create(n, random_game_fn, &sym));
    double total = 0;
    for (uint32_t i = 0; i < n; ++i) {
      double p;
      check(si_shapley_exact(ge.g, i, 20, &p, nullptr), "shapley");
      total += p;
    }
    dev_eff = std::max(dev_eff, std::fabs(total - grand));
  }

  const double tol = 1e-9;
  Report rep(opt.out.empty() ? "axioms.csv" : opt.out, "axioms", opt);
  rep.line("axiom,games,max_deviation,pass");
  const struct {
    const char* name;
    double dev;
  } rows[] = {{"linearity", dev_lin}, {"symmetry", dev_sym}, {"dummy", dev_dummy},
              {"efficiency", dev_eff}};
  bool ok = true;
  for (const auto& r : rows) {
    const bool pass = r.dev < tol;
    ok = ok && pass;
    rep.line(std::string(r.name) + "," + std::to_string(games) + "," + fmt(r.dev) + "," +
             (pass ? "1" : "0"));
    std::printf("%s: max deviation %s (%s)\n", r.name, fmt(r.dev).c_str(),
                pass ? "pass" : "FAIL");
  }
  return ok ? 0 : 1;
}

// --- oracle-equivalence --------------------------------------------------------

int cmd_oracle(const Options& opt) {
  const uint64_t games = opt.games ? opt.games : 50;
  Report rep(opt.out.empty() ? "oracle_equivalence.csv" : opt.out, "oracle-equivalence", opt);
  rep.line("game,n,coalition_size,direct,expectation,delta,pairwise_delta");
  double max_delta = 0, max_pair_delta = 0;
  for (uint64_t g = 0; g < games; ++g) {
    const uint64_t gseed = derive_seed(opt.seed, 0x0aac1e00 + g);
    const size_t n = 3 + (size_t)(mix64(gseed) % 8);
    const size_t max_s = std::min<size_t>(4, n - 1);
    const size_t s = 1 + (size_t)(mix64(gseed + 1) % max_s);
    std::vector<uint32_t> players(n);
    std::iota(players.begin(), players.end(), 0u);
    for (size_t k = n - 1; k > 0; --k)
      std::swap(players[k], players[mix64(gseed + 2 + k) % (k + 1)]);
    players.resize(s);
    std::sort(players.begin(), players.end());

    RandomGameCtx ctx{gseed};
    GameHandle game(si_game_create(n, random_game_fn, &ctx));
    double direct, expectation;
    check(si_interaction_exact(game.g, players.data(), s, 20, &direct, nullptr), "direct");
    check(si_interaction_expectation_exact(game.g, players.data(), s, 20, &expectation,
                                           nullptr),
          "expectation");
    const double delta = std::fabs(direct - expectation);
    max_delta = std::max(max_delta, delta);

    std::string pair_field;
    if (s == 2) {
      double pair;
      check(si_pairwise_interaction_exact(game.g, players[0], players[1], 20, &pair, nullptr),
            "pairwise");
      const double pd = std::fabs(pair - direct);
      max_pair_delta = std::max(max_pair_delta, pd);
      pair_field = fmt(pd);
    }
    rep.line(std::to_string(g) + "," + std::to_string(n) + "," + std::to_string(s) + "," +
             fmt(direct) + "," + fmt(expectation) + "," + fmt(delta) + "," + pair_field);
  }
  const bool ok = max_delta < 1e-9 && max_pair_delta < 1e-9;
  rep.line("# max_delta=" + fmt(max_delta) + " max_pairwise_delta=" + fmt(max_pair_delta));
  std::printf("max |direct - expectation| = %s\n", fmt(max_delta).c_str());
  std::printf("max pairwise delta = %s (%s)\n", fmt(max_pair_delta).c_str(),
              ok ? "pass" : "FAIL");
  return ok ? 0 : 1;
}

// --- sweep -----------------------------------------------------------------

int cmd_sweep(const Options& opt) {
  if (opt.budgets.empty()) throw CLI::ValidationError("--budgets", "must be non-empty");
  const Dims d = parse_dims(opt.dims);
  InstanceHandle inst(
      si_instance_planted(opt.seed, d.height, d.width, d.words, d.dim, 1, opt.noise));
  GameHandle game(si_instance_token_game(inst.h));
  uint32_t members[64];
  size_t count = 0;
  check(si_instance_planted_region(inst.h, 0, members, 64, &count), "planted_region");

  Report rep(opt.out.empty() ? "sweep.csv" : opt.out, "sweep", opt);
  rep.line("budget,instability,mean_estimate,evals");
  double instability_500 = -1;
  for (size_t bi = 0; bi < opt.budgets.size(); ++bi) {
    const uint64_t budget = opt.budgets[bi];
    std::vector<double> estimates(opt.repeats);
    uint64_t evals = 0;
    for (uint64_t r = 0; r < opt.repeats; ++r) {
      const uint64_t est_seed = derive_seed(opt.seed, bi * opt.repeats + r + 1);
      double var;
      uint64_t e;
      check(si_sample_interaction(game.g, members, count, budget, est_seed, opt.workers,
                                  &estimates[r], &var, &e),
            "sample_interaction");
      evals += e;
    }
    double instability;
    check(si_instability(estimates.data(), estimates.size(), &instability), "instability");
    const double mean =
        std::accumulate(estimates.begin(), estimates.end(), 0.0) / (double)estimates.size();
    if (budget == 500) instability_500 = instability;
    rep.line(std::to_string(budget) + "," + fmt(instability) + "," + fmt(mean) + "," +
             std::to_string(evals));
    std::printf("budget %" PRIu64 ": instability %s\n", budget, fmt(instability).c_str());
  }
  if (instability_500 >= 0) {
    rep.line("# instability_at_500=" + fmt(instability_500) + " reference=0.06 below=" +
             (instability_500 < 0.06 ? "1" : "0"));
    std::printf("budget 500 instability %s vs 0.06 reference\n",
                fmt(instability_500).c_str());
  }
  return 0;
}

// --- unsil-study -------------------------------------------------------------

int cmd_unsil_study(const Options& opt) {
  const Dims d = parse_dims(opt.dims);
  si_surrogate* sur = si_surrogate_create(d.dim, 16, derive_seed(opt.seed, 0x5e1f));
  if (!sur) throw StatusError(SI_ERR_UNKNOWN, si_last_error());
  check(si_surrogate_configure(sur, opt.beta1, opt.beta2, opt.lr, opt.warmup), "configure");

  Report rep(opt.out.empty() ? "unsil_study.csv" : opt.out, "unsil-study", opt);
  rep.line("iteration,sampled,sigma,estimate,exact,abs_error,evals_total");

  uint64_t evals_hybrid = 0, evals_sampling_only = 0;
  double sum_abs_err = 0, sum_abs_exact = 0;
  std::vector<double> sigmas(opt.stream);
  for (uint64_t t = 0; t < opt.stream; ++t) {
    InstanceHandle inst(si_instance_planted(derive_seed(opt.seed, 0xfeed + t), d.height,
                                            d.width, d.words, d.dim, 1, opt.noise));
    uint32_t members[64];
    size_t count = 0;
    check(si_instance_planted_region(inst.h, 0, members, 64, &count), "planted_region");

    GameHandle oracle(si_instance_token_game(inst.h));
    double exact;
    check(si_interaction_expectation_exact(oracle.g, members, count, 24, &exact, nullptr),
          "exact");

    GameHandle game(si_instance_token_game(inst.h));
    double estimate, sigma;
    int sampled;
    uint64_t evals;
    check(si_surrogate_hybrid(sur, game.g, inst.h, members, count, opt.samples,
                              derive_seed(opt.seed, 0xab1e + t), opt.workers, t,
                              opt.force_sampling ? 1 : 0, opt.freeze_surrogate ? 1 : 0,
                              &estimate, &sigma, &sampled, &evals),
          "hybrid");
    evals_hybrid += evals;
    evals_sampling_only += opt.samples * (count + 2);
    sum_abs_err += std::fabs(estimate - exact);
    sum_abs_exact += std::fabs(exact);
    sigmas[t] = sigma;
    rep.line(std::to_string(t) + "," + std::to_string(sampled) + "," + fmt(sigma) + "," +
             fmt(estimate) + "," + fmt(exact) + "," + fmt(std::fabs(estimate - exact)) + "," +
             std::to_string(evals_hybrid));
  }
  si_surrogate_destroy(sur);

  const double ratio = evals_sampling_only
                           ? (double)evals_hybrid / (double)evals_sampling_only
                           : 0.0;
  const double rel_err = sum_abs_exact > 0 ? sum_abs_err / sum_abs_exact : 0.0;
  const size_t decile = std::max<size_t>(1, opt.stream / 10);
  double sigma_first = 0, sigma_last = 0;
  for (size_t k = 0; k < decile; ++k) {
    sigma_first += sigmas[k] / (double)decile;
    sigma_last += sigmas[opt.stream - decile + k] / (double)decile;
  }
  rep.line("# eval_ratio=" + fmt(ratio) + " mean_rel_error=" + fmt(rel_err) +
           " sigma_first_decile=" + fmt(sigma_first) + " sigma_last_decile=" +
           fmt(sigma_last));
  std::printf("eval ratio %s, mean relative error %s\n", fmt(ratio).c_str(),
              fmt(rel_err).c_str());
  std::printf("sigma first decile %s, last decile %s\n", fmt(sigma_first).c_str(),
              fmt(sigma_last).c_str());
  return 0;
}

// --- align-demo ---------------------------------------------------------------

double iou(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
  size_t inter = 0;
  for (uint32_t x : a)
    if (std::find(b.begin(), b.end(), x) != b.end()) ++inter;
  const size_t uni = a.size() + b.size() - inter;
  return uni ? (double)inter / (double)uni : 0.0;
}

int cmd_align_demo(const Options& opt) {
  const Dims d = parse_dims(opt.dims);
  InstanceHandle inst(
      si_instance_planted(opt.seed, d.height, d.width, d.words, d.dim, 1, opt.noise));
  const std::string prefix = opt.out.empty() ? "align_demo" : opt.out;
  check(si_instance_save(inst.h, (prefix + ".instance").c_str()), "save instance");

  uint32_t planted[64];
  size_t planted_count = 0;
  check(si_instance_planted_region(inst.h, 0, planted, 64, &planted_count), "planted_region");
  const std::vector<uint32_t> planted_set(planted, planted + planted_count);

  GameHandle token_game(si_instance_token_game(inst.h));
  const size_t num_patches = si_instance_num_patches(inst.h);

  // token-level interactions: top-M proposals vs size-matched random regions
  si_region_list* list =
      si_instance_propose(inst.h, derive_seed(opt.seed, 0x9ead), opt.proposals);
  if (!list) throw StatusError(SI_ERR_UNKNOWN, si_last_error());
  Report regions(prefix + ".regions.csv", "align-demo", opt);
  regions.line("kind,index,size,confidence,interaction,iou_with_planted");
  std::vector<double> confidences, labels;
  for (size_t k = 0; k < si_region_list_count(list); ++k) {
    uint32_t members[64];
    size_t count = 0;
    double confidence;
    check(si_region_list_get(list, k, members, 64, &count, &confidence), "region_list_get");
    double interaction;
    check(si_interaction_expectation_exact(token_game.g, members, count, 24, &interaction,
                                           nullptr),
          "interaction");
    const double overlap = iou(std::vector<uint32_t>(members, members + count), planted_set);
    confidences.push_back(confidence);
    labels.push_back(overlap >= 0.5 ? 1.0 : 0.0);
    regions.line("proposal," + std::to_string(k) + "," + std::to_string(count) + "," +
                 fmt(confidence) + "," + fmt(interaction) + "," + fmt(overlap));

    // random size-matched region: seeded patch subset of the same cardinality
    std::vector<uint32_t> shuffle(num_patches);
    std::iota(shuffle.begin(), shuffle.end(), 0u);
    const uint64_t rseed = derive_seed(opt.seed, 0x4a7d + k);
    for (size_t j = num_patches - 1; j > 0; --j)
      std::swap(shuffle[j], shuffle[mix64(rseed + j) % (j + 1)]);
    shuffle.resize(count);
    std::sort(shuffle.begin(), shuffle.end());
    double rand_interaction;
    check(si_interaction_expectation_exact(token_game.g, shuffle.data(), count, 24,
                                           &rand_interaction, nullptr),
          "interaction");
    regions.line("random," + std::to_string(k) + "," + std::to_string(count) + ",," +
                 fmt(rand_interaction) + "," +
                 fmt(iou(shuffle, planted_set)));
  }
  si_region_list_destroy(list);

  // semantics-level interaction matrix over planted (region, phrase) players
  const size_t pairs = si_instance_pairs(inst.h);
  GameHandle sem_game(si_instance_semantics_game(inst.h));
  std::vector<double> sem(pairs * pairs);
  for (size_t r = 0; r < pairs; ++r)
    for (size_t c = 0; c < pairs; ++c)
      check(si_pairwise_interaction_exact(sem_game.g, (uint32_t)r, (uint32_t)(pairs + c), 20,
                                          &sem[r * pairs + c], nullptr),
            "pairwise");
  std::vector<double> sem_labels(pairs * pairs);
  if (opt.norm_mode == "rowwise")
    check(si_normalize_rows(sem.data(), pairs, pairs, sem_labels.data()), "normalize");
  else
    check(si_normalize_interactions(sem.data(), sem.size(), SI_NORM_MINMAX,
                                    sem_labels.data()),
          "normalize");

  Report matrices(prefix + ".semantics.csv", "align-demo", opt);
  matrices.line("row,col,interaction,label,alignment_raw,alignment_row_softmax");
  std::vector<double> align_raw(pairs * pairs), align_rn(pairs * pairs);
  check(si_instance_alignment(inst.h, align_raw.data(), align_rn.data()), "alignment");
  for (size_t r = 0; r < pairs; ++r)
    for (size_t c = 0; c < pairs; ++c) {
      const size_t k = r * pairs + c;
      matrices.line(std::to_string(r) + "," + std::to_string(c) + "," + fmt(sem[k]) + "," +
                    fmt(sem_labels[k]) + "," + fmt(align_raw[k]) + "," + fmt(align_rn[k]));
    }

  // losses: CMC over a 2-instance batch, TSA over proposals, FSA over the matrix
  InstanceHandle inst2(si_instance_planted(derive_seed(opt.seed, 0xba7c), d.height, d.width,
                                           d.words, d.dim, 1, opt.noise));
  std::vector<double> img(2 * d.dim), txt(2 * d.dim);
  check(si_instance_global_vectors(inst.h, img.data(), txt.data()), "global_vectors");
  check(si_instance_global_vectors(inst2.h, img.data() + d.dim, txt.data() + d.dim),
        "global_vectors");
  double l_cmc, l_tsa, l_fsa;
  check(si_loss_cmc(img.data(), txt.data(), 2, d.dim, opt.tau, &l_cmc), "loss_cmc");
  check(si_loss_tsa(confidences.data(), labels.data(), confidences.size(), &l_tsa),
        "loss_tsa");
  check(si_loss_fsa(align_rn.data(), sem_labels.data(), pairs, pairs, &l_fsa), "loss_fsa");

  Report losses(prefix + ".losses.csv", "align-demo", opt);
  losses.line("loss_cmc,loss_tsa,loss_fsa");
  losses.line(fmt(l_cmc) + "," + fmt(l_tsa) + "," + fmt(l_fsa));
  std::printf("loss_cmc=%s loss_tsa=%s loss_fsa=%s\n", fmt(l_cmc).c_str(), fmt(l_tsa).c_str(),
              fmt(l_fsa).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shapint experiment harness"};
  Options opt;
  app.set_config("--config", "", "flat key=value config file; flags take precedence");
  app.add_option("--seed", opt.seed, "master seed");
  app.add_option("--out", opt.out, "output path (or prefix for align-demo)");
  app.add_option("--budgets", opt.budgets, "sample budgets")->delimiter(',');
  app.add_option("--repeats", opt.repeats, "repeats per budget");
  app.add_option("--dims", opt.dims, "instance dims HxWxL2xD");
  app.add_option("--beta1", opt.beta1, "uncertainty loss weight (division term)");
  app.add_option("--beta2", opt.beta2, "uncertainty loss weight (regularizer)");
  app.add_option("--lr", opt.lr, "surrogate learning rate");
  app.add_option("--warmup", opt.warmup, "always-sample warm-up iterations");
  app.add_flag("--force-sampling", opt.force_sampling, "bypass the surrogate gate");
  app.add_flag("--freeze-surrogate", opt.freeze_surrogate, "disable surrogate training");
  app.add_option("--norm-mode", opt.norm_mode, "interaction label normalization")
      ->check(CLI::IsMember({"minmax", "rowwise"}));
  app.add_option("--workers", opt.workers, "sampling worker threads");
  app.add_option("--games", opt.games, "number of seeded games (axiom/equivalence suites)");
  app.add_option("--stream", opt.stream, "unsil-study stream length");
  app.add_option("--samples", opt.samples, "per-estimate sample budget (unsil-study)");
  app.add_option("--noise", opt.noise, "planted instance noise level");
  app.add_option("--tau", opt.tau, "contrastive temperature");
  app.add_option("--proposals", opt.proposals, "top-M region proposals (align-demo)");

  app.require_subcommand(1);
  auto* axioms = app.add_subcommand("axioms", "Shapley axiom suite on seeded random games");
  auto* oracle = app.add_subcommand("oracle-equivalence",
                                    "direct vs expectation-form interaction equivalence");
  auto* sweep = app.add_subcommand("sweep", "sampling convergence / instability sweep");
  auto* unsil = app.add_subcommand("unsil-study", "uncertainty-gated surrogate cost study");
  auto* align = app.add_subcommand("align-demo", "planted alignment instance demo");
  for (auto* sub : {axioms, oracle, sweep, unsil, align}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*axioms) return cmd_axioms(opt);
    if (*oracle) return cmd_oracle(opt);
    if (*sweep) return cmd_sweep(opt);
    if (*unsil) return cmd_unsil_study(opt);
    return cmd_align_demo(opt);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const StatusError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (e.status == SI_ERR_RESOURCE_LIMIT) return 3;
    if (e.status == SI_ERR_INVALID_ARGUMENT) return 2;
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
