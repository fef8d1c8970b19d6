#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "grad_suite.hpp"
#include "oracles.hpp"
#include "tgfnet/ablation.hpp"
#include "tgfnet/checkpoint.hpp"
#include "tgfnet/training.hpp"

using namespace tgfnet;
using fixtures::random_tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1: gradients --------------------------------------------------------

constexpr std::size_t kGradSeeds = 10;
constexpr double kGradBudgetSeconds = 120.0;

Verdict gradient_integrity() {
  const auto t0 = Clock::now();
  double worst_op = 0.0, worst_model = 0.0;
  std::string failures;
  std::size_t checks = 0;
  auto take = [&](const fixtures::GradOutcome& o, std::uint64_t seed, double& worst) {
    ++checks;
    worst = std::max(worst, o.result.max_rel_error);
    if (!o.passed()) failures += " [" + o.name + " seed " + std::to_string(seed) + ": " + o.result.worst + "]";
  };
  for (std::uint64_t seed = 0; seed < kGradSeeds; ++seed) {
    for (const auto& o : fixtures::op_gradients(seed)) take(o, seed, worst_op);
    for (const auto& o : fixtures::block_gradients(seed)) take(o, seed, worst_op);
    for (const auto& o : fixtures::composite_gradients(seed)) take(o, seed, worst_op);
    take(fixtures::model_gradient(seed), seed, worst_model);
  }
  const double elapsed = seconds_since(t0);
  Verdict v;
  v.pass = failures.empty() && elapsed < kGradBudgetSeconds;
  v.detail = std::to_string(checks) + " checks, worst op/composite rel err " + fmt("%.2e", worst_op) +
             " (< 1e-4), worst full model " + fmt("%.2e", worst_model) + " (< 1e-3), " + fmt("%.1f", elapsed) +
             " s (< 120 s)" + failures;
  return v;
}

// ---- 2: oracles ------------------------------------------------------------

constexpr std::size_t kOracleInstances = 100;
constexpr double kOracleTol = 1e-12;

Verdict oracle_equivalence() {
  std::map<std::string, double> worst{{"krr", 0.0}, {"mhca", 0.0}, {"se", 0.0}, {"rqaf", 0.0}, {"gate", 0.0}};
  auto note = [&](const std::string& k, double d) { worst[k] = std::max(worst[k], d); };
  for (std::uint64_t inst = 0; inst < kOracleInstances; ++inst) {
    Rng rng(mix_seed(0xAC2, inst));
    const std::size_t B = 1 + rng.uniform_int(2);
    const std::size_t heads = std::size_t{1} << rng.uniform_int(3);
    const std::size_t D = heads * (1 + rng.uniform_int(3));
    const std::size_t N = 1 + rng.uniform_int(5);
    const std::size_t Nk = 1 + rng.uniform_int(6);
    {
      const std::size_t T = 1 + rng.uniform_int(6);
      const Tensor q = random_tensor(rng, {B, N, D}, false);
      const Tensor r = random_tensor(rng, {B, T, D}, false);
      const Tensor wt = random_tensor(rng, {D, D}, false);
      const Tensor wi = random_tensor(rng, {D, D}, false);
      Tape tape(Tape::Mode::kInference);
      note("krr", oracle::max_abs_diff(cfar::krr_scores(tape, q, r, wt, wi).values(), oracle::krr(q, r, wt, wi)));
    }
    {
      ParameterStore store;
      const auto p = nn::AttentionParams::create(ParamInit(store, rng), D, heads);
      fixtures::randomize(store, rng, 1.0);
      const Tensor q = random_tensor(rng, {B, N, D}, false);
      const Tensor kv = random_tensor(rng, {B, Nk, D}, false);
      Tape tape(Tape::Mode::kInference);
      note("mhca", oracle::max_abs_diff(nn::multi_head_cross_attention(tape, q, kv, p).values(),
                                        oracle::mhca(q, kv, p.wq, p.wk, p.wv, p.wo, heads)));
      Tensor scores;
      const Tensor se = cfar::se_layer(tape, q, kv, p, &scores);
      oracle::Vec expected_scores;
      const auto expected = oracle::se_layer(q, kv, p.wq, p.wk, p.wv, p.wo, heads, &expected_scores);
      note("se", std::max(oracle::max_abs_diff(se.values(), expected),
                          oracle::max_abs_diff(scores.values(), expected_scores)));
    }
    {
      const std::size_t M = 2 + rng.uniform_int(8);
      const std::size_t R = 1 + rng.uniform_int(M);
      ParameterStore store;
      const auto p = amef::RqafParams::create(ParamInit(store, rng), D, heads, R, 2 * D);
      fixtures::randomize(store, rng, 1.0);
      const Tensor q = random_tensor(rng, {B, N, D}, false);
      const Tensor opt = random_tensor(rng, {B, M, D}, false);
      const Tensor sar = random_tensor(rng, {B, M, D}, false);
      Tape tape(Tape::Mode::kInference);
      amef::RqafTrace trace;
      amef::rqaf_fuse(tape, q, opt, sar, p, &trace);
      oracle::Vec weights;
      const auto expected =
          oracle::rqaf_weighted(q, opt, sar, p.w_question, p.w_optical, p.w_sar, heads, R, &weights);
      note("rqaf", std::max(oracle::max_abs_diff(trace.weighted.values(), expected),
                            oracle::max_abs_diff(trace.weights.values(), weights)));
    }
    {
      const std::size_t C = 2 + rng.uniform_int(7);
      ParameterStore store;
      const auto g = amef::GateParams::create(ParamInit(store, rng), C);
      fixtures::randomize(store, rng, 1.0);
      const Tensor po = random_tensor(rng, {B, 1, C}, false, 2.0);
      const Tensor ps = random_tensor(rng, {B, 1, C}, false, 2.0);
      const Tensor pf = random_tensor(rng, {B, 1, C}, false, 2.0);
      Tape tape(Tape::Mode::kInference);
      const auto r = amef::adaptive_fuse(tape, po, ps, pf, g);
      oracle::Vec gates;
      const auto expected = oracle::adaptive_fuse(po, ps, pf, g.w, g.b, &gates);
      note("gate", std::max(oracle::max_abs_diff(r.distribution.values(), expected),
                            oracle::max_abs_diff(r.gates.values(), gates)));
    }
  }
  Verdict v{true, std::to_string(kOracleInstances) + " instances each, max abs diff:"};
  for (const auto& [k, d] : worst) {
    v.pass = v.pass && d < kOracleTol;
    v.detail += " " + k + " " + fmt("%.1e", d);
  }
  v.detail += " (< 1e-12)";
  return v;
}

// ---- 3: invariants ---------------------------------------------------------

constexpr std::size_t kInvariantSeeds = 50;
constexpr double kSumTol = 1e-9;

class InvariantLog {
 public:
  void check(const std::string& name, bool ok) {
    names_.insert(name);
    if (!ok) failed_.insert(name);
  }
  Verdict verdict() const {
    Verdict v{failed_.empty(), std::to_string(names_.size()) + " invariants x " + std::to_string(kInvariantSeeds) +
                                   " seeds"};
    for (const auto& f : failed_) v.detail += " [violated: " + f + "]";
    return v;
  }

 private:
  std::set<std::string> names_;
  std::set<std::string> failed_;
};

bool slices_are_distributions(std::span<const double> v, std::size_t width) {
  for (std::size_t s = 0; s < v.size(); s += width) {
    double sum = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      if (!(v[s + j] >= 0.0)) return false;
      sum += v[s + j];
    }
    if (std::abs(sum - 1.0) > kSumTol) return false;
  }
  return true;
}

bool codebook_is_partition(const cfar::RegionCodebook& cb) {
  std::vector<int> seen(cb.patch_count(), 0);
  const std::size_t G = cb.grid_side();
  for (std::size_t r = 0; r < cb.region_count(); ++r) {
    const auto& ps = cb.patches(r);
    if (ps.size() != cb.patches_per_region()) return false;
    std::size_t r0 = G, c0 = G;
    for (std::size_t p : ps) {
      if (p >= seen.size() || cb.region_of(p) != r) return false;
      ++seen[p];
      r0 = std::min(r0, p / G);
      c0 = std::min(c0, p % G);
    }
    for (std::size_t p : ps) {
      if (p / G - r0 >= cb.region_height() || p % G - c0 >= cb.region_width()) return false;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; });
}

Verdict invariant_suite() {
  InvariantLog log;
  const std::array<std::array<std::size_t, 3>, 5> layouts{{{4, 2, 2}, {2, 1, 2}, {4, 1, 4}, {6, 3, 2}, {8, 2, 4}}};
  for (const auto& [g, h, w] : layouts) log.check("codebook partition", codebook_is_partition(cfar::RegionCodebook(g, h, w)));

  for (std::uint64_t seed = 0; seed < kInvariantSeeds; ++seed) {
    Rng rng(mix_seed(0xAC3, seed));
    Tape tape(Tape::Mode::kInference);

    const Tensor x = random_tensor(rng, {2, 3, 5}, false, 20.0);
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const Tensor s = ops::softmax(tape, x, axis);
      const Tensor sums = ops::sum_axis(tape, s, axis);
      const auto sv = s.values();
      log.check("softmax normalization",
                std::all_of(sv.begin(), sv.end(), [](double v) { return v >= 0.0; }) &&
                    std::all_of(sums.values().begin(), sums.values().end(),
                                [](double v) { return std::abs(v - 1.0) <= kSumTol; }));
    }

    ParameterStore store;
    const auto attn = nn::AttentionParams::create(ParamInit(store, rng), 8, 4);
    fixtures::randomize(store, rng, 2.0);
    nn::AttentionTrace trace;
    nn::multi_head_cross_attention(tape, random_tensor(rng, {2, 3, 8}, false), random_tensor(rng, {2, 6, 8}, false),
                                   attn, &trace);
    log.check("attention normalization", slices_are_distributions(trace.weights.values(), 6));

    const auto rq = amef::RqafParams::create(ParamInit(store, rng).scope("rq"), 8, 2, 3, 16);
    amef::RqafTrace rtrace;
    const Tensor opt = random_tensor(rng, {2, 9, 8}, false);
    const Tensor sar = random_tensor(rng, {2, 9, 8}, false);
    amef::rqaf_fuse(tape, random_tensor(rng, {2, 4, 8}, false), opt, sar, rq, &rtrace);
    log.check("rqaf simplex weights", slices_are_distributions(rtrace.weights.values(), 6));
    bool anchored = true;
    for (const auto& sets : {rtrace.optical_sets, rtrace.sar_sets})
      for (const auto& per_b : sets)
        for (std::size_t i = 0; i < per_b.size(); ++i) anchored = anchored && per_b[i].front() == i;
    log.check("rqaf candidates contain i", anchored);

    const ModelConfig tiny = fixtures::tiny_config();
    TgfNet model(tiny, seed);
    // Moderate weights: a sigmoid of a logit beyond about 37 rounds to 1.0.
    fixtures::randomize(model.params(), rng, 0.5);
    const Batch batch = fixtures::random_batch(tiny, 3, seed);
    const ModelOutput out = model.forward(tape, batch);
    const auto gates = out.experts.gates.values();
    log.check("gates in (0,1)^3", gates.size() == 9 && std::all_of(gates.begin(), gates.end(), [](double g) {
                                    return g > 0.0 && g < 1.0;
                                  }));
    log.check("Pre distribution", slices_are_distributions(out.experts.distribution.values(), tiny.classes));

    const auto gp = amef::GateParams::create(ParamInit(store, rng).scope("gate"), 7);
    fixtures::randomize(store, rng, 2.0);
    const Tensor p = random_tensor(rng, {1, 1, 7}, false, 3.0);
    const auto fused = amef::adaptive_fuse(tape, p, p, p, gp);
    const auto pv = p.values();
    const auto dv = fused.distribution.values();
    log.check("expert agreement argmax",
              std::max_element(pv.begin(), pv.end()) - pv.begin() == std::max_element(dv.begin(), dv.end()) - dv.begin());

    const cfar::RegionCodebook cb(4, 2, 2);
    const Tensor feats = random_tensor(rng, {2, 16, 8}, false);
    const Tensor scores = random_tensor(rng, {2, 4}, false);
    const auto key = cfar::select_key_regions(tape, scores, 2, cb, feats);
    bool subset = key.features.shape() == Shape{2, 8, 8};
    for (std::size_t b = 0; b < 2 && subset; ++b) {
      std::size_t row = 0;
      for (std::size_t r : key.regions[b]) {
        for (std::size_t patch : cb.patches(r)) {
          for (std::size_t d = 0; d < 8; ++d) {
            subset = subset && key.features[(b * 8 + row) * 8 + d] == feats[(b * 16 + patch) * 8 + d];
          }
          ++row;
        }
      }
      const auto s = scores.values().subspan(b * 4, 4);
      for (std::size_t r = 0; r < 4; ++r) {
        const bool chosen = std::count(key.regions[b].begin(), key.regions[b].end(), r) == 1;
        for (std::size_t o : key.regions[b]) subset = subset && (chosen || s[o] >= s[r]);
      }
    }
    log.check("routing subset", subset);

    ParameterStore cs;
    cfar::CfarParams cp = cfar::CfarParams::create(ParamInit(cs, rng), 8, 2, 16);
    fixtures::randomize(cs, rng, 1.0);
    cp.zero_residual_branches();
    const FeatureBundle fb{random_tensor(rng, {2, 3, 8}, false), feats, random_tensor(rng, {2, 16, 8}, false)};
    const auto cout = cfar::cfar_forward(tape, fb, cp, cb, 2);
    log.check("residual identity at zero init", oracle::max_abs_diff(cout.optical.values(), fb.optical.values()) == 0.0 &&
                                                    oracle::max_abs_diff(cout.sar.values(), fb.sar.values()) == 0.0);
  }
  return log.verdict();
}

// ---- 4: overfit ------------------------------------------------------------

constexpr std::size_t kOverfitSamples = 32;
constexpr std::size_t kOverfitSteps = 2000;
constexpr double kOverfitTarget = 0.95;
constexpr double kOverfitBudgetSeconds = 300.0;

ModelConfig desk_model(Variant variant) {
  ModelConfig c;
  c.variant = variant;
  c.question_len = 14;
  return c;
}

Verdict overfit_sanity() {
  const auto t0 = Clock::now();
  auto samples = synth::generate_dataset(11, 8, synth::SynthConfig{});
  if (samples.size() < kOverfitSamples) return {false, "not enough generated samples"};
  samples.resize(kOverfitSamples);
  const ModelConfig cfg = desk_model(Variant::kFull);
  TgfNet model(cfg, 1);
  TrainOptions o;
  o.adam.lr = 1e-3;
  o.batch_size = kOverfitSamples;
  o.epochs = kOverfitSteps;
  o.eval_every = 25;
  o.target_train_oa = kOverfitTarget;
  const TrainResult r = train(model, samples, {}, o);
  const double oa = evaluate(model, samples).oa;
  const double elapsed = seconds_since(t0);
  Verdict v;
  v.pass = oa >= kOverfitTarget && r.steps <= kOverfitSteps && elapsed < kOverfitBudgetSeconds;
  v.detail = "D=" + std::to_string(cfg.dim) + " M=" + std::to_string(cfg.patches()) + " C=" +
             std::to_string(cfg.classes) + ": train OA " + fmt("%.4f", oa) + " after " + std::to_string(r.steps) +
             " steps (>= 0.95 within 2000), " + fmt("%.1f", elapsed) + " s (< 300 s)";
  return v;
}

// ---- 5, 6: experiment ------------------------------------------------------

constexpr std::uint64_t kExperimentDataSeed = 7;
constexpr std::size_t kExperimentScenes = 8334;  // 5001 train scenes
constexpr std::size_t kExperimentSeeds = 5;
constexpr std::size_t kExperimentSteps = 6000;
constexpr std::size_t kExperimentDim = 16;
constexpr double kRunBudgetSeconds = 900.0;

struct Experiment {
  std::vector<AblationCell> cells;
  std::size_t train_scenes = 0;
  double degraded_test_fraction = 0.0;
  double slowest_run = 0.0;

  double oa(Variant v, std::uint64_t seed) const {
    for (const auto& c : cells)
      if (c.variant == v && c.seed == seed) return c.oa;
    throw std::logic_error("missing cell");
  }
  double mean(Variant v) const {
    double s = 0.0;
    for (std::uint64_t seed = 1; seed <= kExperimentSeeds; ++seed) s += oa(v, seed);
    return s / kExperimentSeeds;
  }
};

RunConfig experiment_config() {
  RunConfig cfg;
  cfg.model = desk_model(Variant::kFull);
  cfg.model.dim = kExperimentDim;
  cfg.model.mlp_hidden = 2 * kExperimentDim;
  cfg.model.classifier_hidden = 2 * kExperimentDim;
  cfg.train.adam.lr = 1e-3;
  cfg.train.batch_size = 32;
  cfg.train.max_steps = kExperimentSteps;
  cfg.train.eval_train = false;
  return cfg;
}

const Experiment& experiment(const std::vector<Variant>& variants) {
  static Experiment e;
  static std::set<Variant> done;
  std::vector<Variant> todo;
  for (Variant v : variants)
    if (!done.count(v)) todo.push_back(v);
  if (todo.empty()) return e;

  const auto all = synth::generate_dataset(kExperimentDataSeed, kExperimentScenes, synth::SynthConfig{});
  std::vector<synth::SynthSample> train_set, test_set;
  std::set<std::uint64_t> train_scenes;
  std::size_t degraded = 0;
  for (const auto& s : all) {
    if (s.split == synth::Split::kTrain) {
      train_set.push_back(s);
      train_scenes.insert(s.scene_id);
    } else if (s.split == synth::Split::kTest) {
      test_set.push_back(s);
      degraded += s.degradation.kind != synth::DegradationKind::kNone;
    }
  }
  e.train_scenes = train_scenes.size();
  e.degraded_test_fraction = static_cast<double>(degraded) / static_cast<double>(test_set.size());

  const RunConfig cfg = experiment_config();
  for (Variant v : todo) {
    // add and exp1 are one architecture; their cells are shared.
    const Variant trained = v == Variant::kAdd ? Variant::kExp1 : v;
    if (trained != v && done.count(trained)) {
      for (std::uint64_t seed = 1; seed <= kExperimentSeeds; ++seed) {
        AblationCell c = e.cells[0];
        for (const auto& prior : e.cells)
          if (prior.variant == trained && prior.seed == seed) c = prior;
        c.variant = v;
        e.cells.push_back(c);
      }
      done.insert(v);
      continue;
    }
    for (std::uint64_t seed = 1; seed <= kExperimentSeeds; ++seed) {
      AblationCell c = run_ablation_cell(cfg, trained, seed, train_set, test_set);
      c.variant = v;
      e.slowest_run = std::max(e.slowest_run, c.wall_seconds);
      std::cerr << variant_name(v) << " seed " << seed << " OA " << c.oa << " AA " << c.aa << " ("
                << fmt("%.0f", c.wall_seconds) << " s)\n";
      e.cells.push_back(c);
    }
    done.insert(v);
  }
  return e;
}

std::string experiment_preamble(const Experiment& e) {
  return std::to_string(e.train_scenes) + " train scenes, " + fmt("%.1f", 100.0 * e.degraded_test_fraction) +
         "% degraded test samples, slowest run " + fmt("%.0f", e.slowest_run) + " s (<= 900 s); ";
}

bool experiment_setup_ok(const Experiment& e) {
  return e.train_scenes >= 5000 && std::abs(e.degraded_test_fraction - 0.5) <= 0.05 &&
         e.slowest_run <= kRunBudgetSeconds;
}

Verdict complementarity() {
  const auto& e = experiment({Variant::kFull, Variant::kOptOnly, Variant::kSarOnly});
  std::size_t wins = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= kExperimentSeeds; ++seed) {
    const double full = e.oa(Variant::kFull, seed);
    const double opt = e.oa(Variant::kOptOnly, seed);
    const double sar = e.oa(Variant::kSarOnly, seed);
    const bool win = full > opt && full > sar;
    wins += win;
    per_seed += " seed" + std::to_string(seed) + "=" + fmt("%.4f", full) + "/" + fmt("%.4f", opt) + "/" +
                fmt("%.4f", sar) + (win ? "" : "(x)");
  }
  Verdict v;
  v.pass = experiment_setup_ok(e) && wins >= 4;
  v.detail = experiment_preamble(e) + "full beats opt-only and sar-only in " + std::to_string(wins) +
             "/5 seeds (>= 4); full/opt/sar OA:" + per_seed;
  return v;
}

Verdict ablation_trend() {
  const std::vector<Variant> vs{Variant::kFull, Variant::kExp2, Variant::kExp1,
                                Variant::kAdd,  Variant::kConcat, Variant::kXformer};
  const auto& e = experiment(vs);
  const double exp4 = e.mean(Variant::kFull), exp2 = e.mean(Variant::kExp2), exp1 = e.mean(Variant::kExp1);
  const double add = e.mean(Variant::kAdd), concat = e.mean(Variant::kConcat), xf = e.mean(Variant::kXformer);
  Verdict v;
  v.pass = experiment_setup_ok(e) && exp4 >= exp2 && exp2 >= exp1 && exp4 > exp1 && exp4 >= add &&
           exp4 >= concat && exp4 >= xf;
  v.detail = experiment_preamble(e) + "mean OA exp4 " + fmt("%.4f", exp4) + ", exp2 " + fmt("%.4f", exp2) +
             ", exp1 " + fmt("%.4f", exp1) + ", add " + fmt("%.4f", add) + ", concat " + fmt("%.4f", concat) +
             ", xformer " + fmt("%.4f", xf) + " (need exp4 >= exp2 >= exp1, exp4 > exp1, exp4 >= add/concat/xformer)";
  return v;
}

// ---- 7: determinism and round trips ---------------------------------------

std::string checkpoint_bytes(const ParameterStore& params) {
  std::ostringstream os(std::ios::binary);
  write_checkpoint(os, params);
  return os.str();
}

Verdict determinism_and_round_trips() {
  std::vector<std::string> failures;
  const auto samples = synth::generate_dataset(21, 40, synth::SynthConfig{});

  ModelConfig small = desk_model(Variant::kFull);
  small.dim = 8;
  small.heads = 2;
  small.rqaf_heads = 2;
  small.mlp_hidden = 16;
  small.classifier_hidden = 16;
  auto trained = [&] {
    TgfNet model(small, 9);
    TrainOptions o;
    o.batch_size = 16;
    o.max_steps = 20;
    o.eval_train = false;
    o.seed = 9;
    train(model, samples, {}, o);
    return checkpoint_bytes(model.params());
  };
  const std::string a = trained();
  if (a != trained()) failures.push_back("checkpoints differ between identical runs");

  std::stringstream ds;
  synth::write_samples(ds, samples);
  if (synth::read_samples(ds) != samples) failures.push_back("dataset round trip");
  if (synth::generate_dataset(21, 40, synth::SynthConfig{}) != samples) failures.push_back("dataset regeneration");

  TgfNet original(small, 10);
  Rng rng(10);
  fixtures::randomize(original.params(), rng);
  std::istringstream in(checkpoint_bytes(original.params()), std::ios::binary);
  TgfNet restored(small, 99);
  assign_parameters(read_checkpoint(in), restored.params());
  if (checkpoint_bytes(restored.params()) != checkpoint_bytes(original.params())) {
    failures.push_back("checkpoint round trip bytes");
  }
  const Batch b = make_batch(std::span(samples).first(6), small);
  Tape t1(Tape::Mode::kInference), t2(Tape::Mode::kInference);
  const ModelOutput o1 = original.forward(t1, b);
  const ModelOutput o2 = restored.forward(t2, b);
  const auto d1 = o1.experts.distribution.values();
  const auto d2 = o2.experts.distribution.values();
  if (!std::equal(d1.begin(), d1.end(), d2.begin(), d2.end())) failures.push_back("restored forward differs");

  ModelConfig paper;
  paper.question_len = 71;
  paper.dim = 512;
  paper.heads = 8;
  paper.rqaf_heads = 8;
  paper.mlp_hidden = 2048;
  paper.classifier_hidden = 512;
  paper.vocab_size = 64;
  const auto t0 = Clock::now();
  std::string paper_shape;
  try {
    const TgfNet big(paper, 1);
    Batch pb = fixtures::random_batch(paper, 1, 3);
    Tape tape(Tape::Mode::kInference);
    const auto out = big.forward(tape, pb);
    paper_shape = "[" + std::to_string(out.experts.distribution.dim(0)) + "x" +
                  std::to_string(out.experts.distribution.dim(1)) + "x" +
                  std::to_string(out.experts.distribution.dim(2)) + "]";
    if (!slices_are_distributions(out.experts.distribution.values(), paper.classes)) {
      failures.push_back("paper-scale output is not a distribution");
    }
  } catch (const std::exception& ex) {
    failures.push_back(std::string("paper-scale forward: ") + ex.what());
  }

  Verdict v{failures.empty(), "identical runs give identical checkpoints (" + std::to_string(a.size()) +
                                  " bytes); dataset and checkpoint round trips lossless; N=71 D=512 h=8 forward " +
                                  paper_shape + " in " + fmt("%.1f", seconds_since(t0)) + " s"};
  for (const auto& f : failures) v.detail += " [" + f + "]";
  return v;
}

// ---- 8: loss calibration ---------------------------------------------------

Verdict loss_calibration() {
  double worst = 0.0;
  std::string detail;
  for (std::size_t classes : {4, 22}) {
    ModelConfig c = classes == 22 ? desk_model(Variant::kFull) : fixtures::tiny_config();
    c.classes = classes;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      TgfNet model(c, seed);
      model.zero_classifier_outputs();
      Batch b = fixtures::random_batch(c, 8, seed + 50);
      Tape tape(Tape::Mode::kInference);
      const double loss = total_loss(tape, model.forward(tape, b).experts, b.answers, c.lambdas).item();
      worst = std::max(worst, std::abs(loss - 4.0 * 0.5 * std::log(static_cast<double>(classes))));
    }
    detail += " C=" + std::to_string(classes) + " target " + fmt("%.6f", 2.0 * std::log(static_cast<double>(classes)));
  }
  return {worst < 1e-6, "zeroed classifier outputs:" + detail + ", max deviation " + fmt("%.1e", worst) + " (< 1e-6)"};
}

Verdict run(int criterion) {
  switch (criterion) {
    case 1: return gradient_integrity();
    case 2: return oracle_equivalence();
    case 3: return invariant_suite();
    case 4: return overfit_sanity();
    case 5: return complementarity();
    case 6: return ablation_trend();
    case 7: return determinism_and_round_trips();
    case 8: return loss_calibration();
  }
  throw std::invalid_argument("no criterion " + std::to_string(criterion));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> criteria;
  app.add_option("--criterion", criteria, "criterion number (repeatable; default all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8};

  bool all = true;
  for (int c : criteria) {
    Verdict v;
    try {
      v = run(c);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::cout << "criterion " << c << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
