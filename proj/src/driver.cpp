#include "somf/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <string>
#include <thread>

#include "somf/code_solver.hpp"
#include "somf/errors.hpp"
#include "somf/rng.hpp"
#include "somf/wire.hpp"

namespace somf {

namespace {

// Stream tags; every consumer of randomness gets its own lane off the run
// seed so algorithm variants see identical sample sequences.
constexpr std::uint64_t kInitTag = 0;
constexpr std::uint64_t kSampleTag = 1;
constexpr std::uint64_t kMaskTag = 2;
constexpr std::uint64_t kEvalTag = 3;

constexpr std::size_t kEvalPoints = 25;

std::size_t thread_budget() {
  const char* env = std::getenv("SOMF_THREADS");
  if (!env || !*env) return std::numeric_limits<std::size_t>::max();
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw ConfigError(std::string("SOMF_THREADS must be a nonnegative integer, got '") +
                      env + "'");
  }
  return parsed == 0 ? 1 : static_cast<std::size_t>(parsed);
}

std::uint64_t total_batches(std::size_t n, std::size_t epochs, std::size_t batch) {
  const std::uint64_t total = static_cast<std::uint64_t>(n) * epochs;
  return (total + batch - 1) / batch;
}

std::size_t batch_size_at(std::uint64_t t, std::size_t n, std::size_t epochs,
                          std::size_t batch) {
  const std::uint64_t total = static_cast<std::uint64_t>(n) * epochs;
  const std::uint64_t consumed = (t - 1) * batch;
  return static_cast<std::size_t>(std::min<std::uint64_t>(batch, total - consumed));
}

std::vector<std::uint64_t> eval_plan(std::uint64_t total) {
  std::vector<std::uint64_t> plan;
  if (total == 0) return plan;
  const double hi = std::log(static_cast<double>(total));
  for (std::size_t i = 0; i < kEvalPoints; ++i) {
    const double frac = kEvalPoints == 1 ? 1.0
                                         : static_cast<double>(i) / (kEvalPoints - 1);
    auto t = static_cast<std::uint64_t>(std::llround(std::exp(frac * hi)));
    plan.push_back(std::clamp<std::uint64_t>(t, 1, total));
  }
  plan.push_back(total);
  std::sort(plan.begin(), plan.end());
  plan.erase(std::unique(plan.begin(), plan.end()), plan.end());
  return plan;
}

std::vector<std::size_t> pick_eval_subset(std::size_t n, std::size_t subset,
                                          std::uint64_t seed) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  if (subset >= n) return all;
  Rng rng = Rng::fork(seed, kEvalTag);
  rng.shuffle(all);
  all.resize(subset);
  std::sort(all.begin(), all.end());
  return all;
}

Dictionary init_dictionary(const DenseMatrix& x, const FactorizationConfig& cfg) {
  const std::size_t p = x.rows();
  const std::size_t n = x.cols();
  Rng rng = Rng::fork(cfg.seed, kInitTag);

  Dictionary dict;
  dict.ball.mu = cfg.dict_l1_ratio;
  dict.d = DenseMatrix(p, cfg.k);

  if (n >= cfg.k) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t j = 0; j < cfg.k; ++j) {
      const double* src = x.col(order[j]);
      for (std::size_t i = 0; i < p; ++i) dict.d(i, j) = src[i];
    }
  } else {
    const double scale = 1.0 / std::sqrt(static_cast<double>(p));
    for (std::size_t j = 0; j < cfg.k; ++j) {
      for (std::size_t i = 0; i < p; ++i) dict.d(i, j) = scale * rng.normal();
    }
  }

  for (std::size_t j = 0; j < cfg.k; ++j) {
    const DenseVector proj = project_ball(dict.d.col_span(j), dict.ball, 1.0);
    for (std::size_t i = 0; i < p; ++i) dict.d(i, j) = proj[i];
  }
  dict.refresh_norms();
  return dict;
}

struct RunState {
  FactorizationConfig cfg;
  std::size_t p = 0;
  std::size_t n = 0;
  Dictionary dict;
  SurrogateStats stats;
  EstimatorStore store;
  SampleStream stream;
  Rng mask_rng;
  std::uint64_t t = 0;
  std::uint64_t touched = 0;
  RunDiagnostics diag;
  Mask full_mask;
};

RunState fresh_state(const DenseMatrix& x, const FactorizationConfig& raw_cfg) {
  if (x.empty()) throw ConfigError("data matrix must be nonempty");
  RunState s;
  s.cfg = raw_cfg.validated(x.cols());
  s.p = x.rows();
  s.n = x.cols();
  s.dict = init_dictionary(x, s.cfg);
  s.stats = SurrogateStats(s.p, s.cfg.k);
  if (s.cfg.algorithm == Algorithm::Somf) {
    s.store = EstimatorStore(s.n, s.cfg.k, WeightSchedule{s.cfg.v_weight},
                             s.cfg.no_averaging);
  }
  s.stream = SampleStream(s.n, Rng::fork(s.cfg.seed, kSampleTag));
  s.mask_rng = Rng::fork(s.cfg.seed, kMaskTag);
  s.full_mask = Mask::full_mask(s.p);
  return s;
}

Mask union_mask(const std::vector<Mask>& masks) {
  Mask out;
  out.dim = masks.front().dim;
  out.scale = masks.front().scale;
  std::vector<bool> seen(out.dim, false);
  for (const Mask& m : masks) {
    for (const std::size_t i : m.indices) seen[i] = true;
  }
  for (std::size_t i = 0; i < out.dim; ++i) {
    if (seen[i]) out.indices.push_back(i);
  }
  return out;
}

struct StepScratch {
  std::vector<std::size_t> batch;
  std::vector<std::span<const double>> xs;
  std::vector<DenseVector> alphas;
  Mask last_mask;
  double last_delta_sq = 0.0;
};

void step_omf(const DenseMatrix& x, RunState& s, StepScratch& scratch, double w) {
  const std::size_t size = batch_size_at(s.t, s.n, s.cfg.epochs, s.cfg.batch_size);
  scratch.batch.resize(size);
  scratch.xs.resize(size);
  scratch.alphas.resize(size);
  for (std::size_t b = 0; b < size; ++b) {
    scratch.batch[b] = s.stream.next();
    scratch.xs[b] = x.col_span(scratch.batch[b]);
  }

  const DenseMatrix gram = masked_gram(s.dict.d, s.full_mask);
  for (std::size_t b = 0; b < size; ++b) {
    const DenseVector corr = masked_correlation(s.dict.d, scratch.xs[b], s.full_mask);
    SolveInfo info;
    const CodeProblem problem{gram, corr.span(),
                              {s.cfg.lambda, s.cfg.code_l1_ratio}};
    scratch.alphas[b] =
        solve_code(problem, s.cfg.code_tol, s.cfg.code_max_sweeps, &info);
    s.diag.degenerate_code_coords += info.degenerate;
  }

  s.stats.update_full(scratch.xs, scratch.alphas, w,
                      {s.cfg.lambda, s.cfg.code_l1_ratio});
  const DictUpdateInfo dinfo = full_dict_update(s.dict, s.stats, s.cfg.dict_passes);
  s.diag.skipped_columns += dinfo.skipped;
  s.diag.clamped_radii += dinfo.clamped;

  s.touched += omf_batch_cost(s.p, s.cfg.k, size, s.cfg.dict_passes);
  s.diag.mask_coords += s.p;
  ++s.diag.iterations;
  scratch.last_delta_sq = dinfo.delta_sq;
}

void step_somf(const DenseMatrix& x, RunState& s, StepScratch& scratch, double w,
               bool pipelined_active) {
  const std::size_t size = batch_size_at(s.t, s.n, s.cfg.epochs, s.cfg.batch_size);
  scratch.batch.resize(size);
  scratch.xs.resize(size);
  scratch.alphas.resize(size);
  for (std::size_t b = 0; b < size; ++b) {
    scratch.batch[b] = s.stream.next();
    scratch.xs[b] = x.col_span(scratch.batch[b]);
  }

  const bool exact = s.cfg.reduction == 1.0;
  std::vector<Mask> sample_masks;
  Mask drawn;
  const Mask* shared = nullptr;
  if (exact) {
    shared = &s.full_mask;
  } else if (s.cfg.mask_per_sample) {
    sample_masks.reserve(size);
    for (std::size_t b = 0; b < size; ++b) {
      sample_masks.push_back(draw_mask(s.p, s.cfg.reduction, s.mask_rng));
    }
  } else {
    drawn = draw_mask(s.p, s.cfg.reduction, s.mask_rng);
    shared = &drawn;
  }

  std::vector<std::size_t> mask_sizes;
  if (shared) {
    mask_sizes.push_back(shared->indices.size());
    const DenseMatrix gram_obs = masked_gram(s.dict.d, *shared);
    for (std::size_t b = 0; b < size; ++b) {
      const DenseVector corr = masked_correlation(s.dict.d, scratch.xs[b], *shared);
      s.store.update(scratch.batch[b], gram_obs, corr);
    }
    s.diag.mask_coords += shared->indices.size();
  } else {
    mask_sizes.reserve(size);
    for (std::size_t b = 0; b < size; ++b) {
      update_estimators(s.store, scratch.batch[b], s.dict.d, scratch.xs[b],
                        sample_masks[b]);
      mask_sizes.push_back(sample_masks[b].indices.size());
      s.diag.mask_coords += sample_masks[b].indices.size();
    }
  }

  for (std::size_t b = 0; b < size; ++b) {
    const std::size_t i = scratch.batch[b];
    SolveInfo info;
    const CodeProblem problem{s.store.gram(i), s.store.correlation(i).span(),
                              {s.cfg.lambda, s.cfg.code_l1_ratio}};
    scratch.alphas[b] =
        solve_code(problem, s.cfg.code_tol, s.cfg.code_max_sweeps, &info);
    s.diag.degenerate_code_coords += info.degenerate;
  }

  const Mask batch_mask = shared ? *shared : union_mask(sample_masks);
  s.stats.update_sync(scratch.xs, scratch.alphas, w,
                      {s.cfg.lambda, s.cfg.code_l1_ratio}, batch_mask);

  DictUpdateInfo dinfo;
  if (pipelined_active && !batch_mask.full()) {
    std::thread worker([&] {
      s.stats.update_complement(scratch.xs, scratch.alphas, w, batch_mask);
    });
    dinfo = partial_dict_update(s.dict, s.stats, batch_mask);
    worker.join();
  } else {
    s.stats.update_complement(scratch.xs, scratch.alphas, w, batch_mask);
    dinfo = partial_dict_update(s.dict, s.stats, batch_mask);
  }
  s.diag.skipped_columns += dinfo.skipped;
  s.diag.clamped_radii += dinfo.clamped;

  s.touched += somf_batch_cost(s.p, s.cfg.k, size, mask_sizes,
                               batch_mask.indices.size(), exact);
  ++s.diag.iterations;
  scratch.last_mask = batch_mask;
  scratch.last_delta_sq = dinfo.delta_sq;
}

RunResult run_loop(const DenseMatrix& x, RunState s, const RunHooks& hooks) {
  const std::uint64_t total = total_batches(s.n, s.cfg.epochs, s.cfg.batch_size);
  if (s.t > total) {
    throw ConfigError("epochs: checkpoint already covers " + std::to_string(s.t) +
                      " of " + std::to_string(total) + " batches");
  }
  const std::vector<std::uint64_t> plan = eval_plan(total);
  std::size_t plan_next = 0;
  while (plan_next < plan.size() && plan[plan_next] <= s.t) ++plan_next;

  const std::vector<std::size_t> subset =
      pick_eval_subset(s.n, s.cfg.eval_subset, s.cfg.seed);
  const PenaltyParams penalty{s.cfg.lambda, s.cfg.code_l1_ratio};
  const bool pipelined_active = s.cfg.pipelined && thread_budget() >= 2;

  RunTrace trace;
  StepScratch scratch;
  const auto start = std::chrono::steady_clock::now();
  const WeightSchedule schedule{s.cfg.v_weight};

  while (s.t < total) {
    ++s.t;
    const double w = schedule.w(s.t);
    if (s.cfg.algorithm == Algorithm::Omf) {
      step_omf(x, s, scratch, w);
    } else {
      step_somf(x, s, scratch, w, pipelined_active);
    }
    trace.stationarity.push_back(std::sqrt(scratch.last_delta_sq) / w);

    if (hooks.observer) {
      const Mask* mask_ptr =
          s.cfg.algorithm == Algorithm::Somf ? &scratch.last_mask : nullptr;
      hooks.observer(IterationInfo{s.t, w, scratch.batch, mask_ptr, s.dict, s.stats,
                                   scratch.last_delta_sq});
    }

    if (plan_next < plan.size() && plan[plan_next] == s.t) {
      ++plan_next;
      TraceRow row;
      row.t = s.t;
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                  start)
                        .count();
      row.touched = s.touched;
      row.f_bar = evaluate_objective(x, s.dict.d, penalty, subset, s.cfg.code_tol,
                                     s.cfg.code_max_sweeps);
      row.g_bar = surrogate_value(s.dict.d, s.stats);
      trace.rows.push_back(row);
    }
  }

  if (!hooks.checkpoint_out.empty()) {
    Checkpoint ckpt;
    ckpt.cfg = s.cfg;
    ckpt.p = s.p;
    ckpt.n = s.n;
    ckpt.batches_done = s.t;
    ckpt.touched = s.touched;
    ckpt.diag = s.diag;
    ckpt.dict = s.dict;
    ckpt.stats = s.stats;
    ckpt.store = s.store;
    ckpt.stream_order = s.stream.order();
    ckpt.stream_cursor = s.stream.cursor();
    ckpt.stream_epoch = s.stream.epoch();
    ckpt.stream_rng_state = s.stream.rng().state();
    ckpt.mask_rng_state = s.mask_rng.state();
    save_checkpoint(hooks.checkpoint_out, ckpt);
  }

  RunResult result;
  result.dict = std::move(s.dict);
  result.stats = std::move(s.stats);
  result.trace = std::move(trace);
  result.diag = s.diag;
  result.touched = s.touched;
  return result;
}

}  // namespace

FactorizationConfig FactorizationConfig::validated(std::size_t n_samples) const {
  FactorizationConfig c = *this;
  if (c.k == 0) throw ConfigError("k must be >= 1");
  if (!(c.reduction >= 1.0) || !std::isfinite(c.reduction)) {
    throw ConfigError("reduction must be a finite value >= 1, got " +
                      std::to_string(c.reduction));
  }
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) {
    throw ConfigError("lambda must be finite and >= 0");
  }
  if (!(c.code_l1_ratio >= 0.0) || !(c.code_l1_ratio <= 1.0)) {
    throw ConfigError("code_l1_ratio must be in [0, 1]");
  }
  if (!(c.dict_l1_ratio >= 0.0) || !(c.dict_l1_ratio <= 1.0)) {
    throw ConfigError("dict_l1_ratio must be in [0, 1]");
  }
  if (c.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (c.epochs == 0) throw ConfigError("epochs must be >= 1");
  if (!(c.code_tol > 0.0)) throw ConfigError("code_tol must be > 0");
  if (c.code_max_sweeps == 0) throw ConfigError("code_max_sweeps must be >= 1");
  if (c.dict_passes == 0) throw ConfigError("dict_passes must be >= 1");
  if (c.eval_subset == 0) throw ConfigError("eval_subset must be >= 1");

  const WeightSchedule schedule{c.v_weight};
  if (!schedule.valid()) {
    if (!c.allow_invalid_schedule) {
      throw ConfigError("v_weight must lie strictly inside (0.75, 1), got " +
                        std::to_string(c.v_weight) +
                        " (set allow_invalid_schedule to override)");
    }
    // Even overridden, the recursions need weights in (0, 1].
    if (!(c.v_weight > 0.0) || !(c.v_weight <= 1.25)) {
      throw ConfigError("v_weight outside (0, 1.25] cannot be overridden");
    }
  }

  if (c.algorithm == Algorithm::Omf) c.reduction = 1.0;
  if (n_samples > 0) c.eval_subset = std::min(c.eval_subset, n_samples);
  return c;
}

RunResult run(const DenseMatrix& x, const FactorizationConfig& cfg,
              const RunHooks& hooks) {
  return run_loop(x, fresh_state(x, cfg), hooks);
}

RunResult resume_run(const DenseMatrix& x, const Checkpoint& ckpt,
                     std::size_t total_epochs, const RunHooks& hooks) {
  if (x.rows() != ckpt.p || x.cols() != ckpt.n) {
    throw ConfigError("resume: data shape " + std::to_string(x.rows()) + "x" +
                      std::to_string(x.cols()) + " does not match checkpoint " +
                      std::to_string(ckpt.p) + "x" + std::to_string(ckpt.n));
  }
  RunState s;
  s.cfg = ckpt.cfg;
  s.cfg.epochs = total_epochs;
  s.cfg = s.cfg.validated(ckpt.n);
  s.p = ckpt.p;
  s.n = ckpt.n;
  s.dict = ckpt.dict;
  s.stats = ckpt.stats;
  s.store = ckpt.store;
  s.stream = SampleStream::restore(ckpt.stream_order, ckpt.stream_cursor,
                                   ckpt.stream_epoch,
                                   Rng::from_state(ckpt.stream_rng_state));
  s.mask_rng = Rng::from_state(ckpt.mask_rng_state);
  s.t = ckpt.batches_done;
  s.touched = ckpt.touched;
  s.diag = ckpt.diag;
  s.full_mask = Mask::full_mask(s.p);
  return run_loop(x, std::move(s), hooks);
}

namespace {

constexpr char kCheckpointMagic[9] = "SOMFCKP1";
constexpr std::uint32_t kCheckpointVersion = 1;

// Read cursor that knows where it is, for error messages.
struct Reader {
  std::istream& in;
  const std::string& path;
  std::uint64_t pos = 0;

  void fail() const {
    throw IoError("checkpoint " + path + ": truncated at byte offset " +
                  std::to_string(pos));
  }
  std::uint64_t u64() {
    std::uint64_t v;
    if (!wire::get_u64(in, v)) fail();
    pos += 8;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    if (!wire::get_u32(in, v)) fail();
    pos += 4;
    return v;
  }
  double f64() {
    double v;
    if (!wire::get_f64(in, v)) fail();
    pos += 8;
    return v;
  }
};

void put_matrix(std::ostream& out, const DenseMatrix& m) {
  const std::size_t n = m.rows() * m.cols();
  for (std::size_t i = 0; i < n; ++i) wire::put_f64(out, m.data()[i]);
}

void get_matrix(Reader& r, DenseMatrix& m) {
  const std::size_t n = m.rows() * m.cols();
  for (std::size_t i = 0; i < n; ++i) m.data()[i] = r.f64();
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint " + path + ": cannot open for writing");

  out.write(kCheckpointMagic, 8);
  wire::put_u32(out, kCheckpointVersion);

  const FactorizationConfig& c = ckpt.cfg;
  wire::put_u32(out, c.algorithm == Algorithm::Somf ? 1 : 0);
  wire::put_u64(out, c.k);
  wire::put_f64(out, c.reduction);
  wire::put_f64(out, c.lambda);
  wire::put_f64(out, c.code_l1_ratio);
  wire::put_f64(out, c.dict_l1_ratio);
  wire::put_f64(out, c.v_weight);
  wire::put_u64(out, c.batch_size);
  wire::put_u64(out, c.epochs);
  wire::put_u64(out, c.seed);
  wire::put_u64(out, c.eval_subset);
  wire::put_u32(out, c.pipelined ? 1 : 0);
  wire::put_u32(out, c.no_averaging ? 1 : 0);
  wire::put_f64(out, c.code_tol);
  wire::put_u64(out, c.code_max_sweeps);
  wire::put_u64(out, c.dict_passes);
  wire::put_u32(out, c.allow_invalid_schedule ? 1 : 0);
  wire::put_u32(out, c.mask_per_sample ? 1 : 0);

  wire::put_u64(out, ckpt.p);
  wire::put_u64(out, ckpt.n);
  wire::put_u64(out, ckpt.batches_done);
  wire::put_u64(out, ckpt.touched);
  wire::put_u64(out, ckpt.diag.iterations);
  wire::put_u64(out, ckpt.diag.mask_coords);
  wire::put_u64(out, ckpt.diag.degenerate_code_coords);
  wire::put_u64(out, ckpt.diag.clamped_radii);
  wire::put_u64(out, ckpt.diag.skipped_columns);

  wire::put_f64(out, ckpt.dict.ball.mu);
  put_matrix(out, ckpt.dict.d);
  for (const double v : ckpt.dict.column_norms) wire::put_f64(out, v);

  put_matrix(out, ckpt.stats.data_moment());
  put_matrix(out, ckpt.stats.code_moment());
  wire::put_f64(out, ckpt.stats.loss_offset());

  const bool has_store = ckpt.store.n_samples() > 0;
  wire::put_u32(out, has_store ? 1 : 0);
  if (has_store) {
    for (std::size_t i = 0; i < ckpt.n; ++i) wire::put_u64(out, ckpt.store.count(i));
    for (std::size_t i = 0; i < ckpt.n; ++i) {
      put_matrix(out, ckpt.store.gram(i));
      for (std::size_t j = 0; j < ckpt.cfg.k; ++j) {
        wire::put_f64(out, ckpt.store.correlation(i)[j]);
      }
    }
  }

  for (const std::size_t v : ckpt.stream_order) wire::put_u64(out, v);
  wire::put_u64(out, ckpt.stream_cursor);
  wire::put_u64(out, ckpt.stream_epoch);
  for (const std::uint64_t v : ckpt.stream_rng_state) wire::put_u64(out, v);
  for (const std::uint64_t v : ckpt.mask_rng_state) wire::put_u64(out, v);

  out.flush();
  if (!out) throw IoError("checkpoint " + path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint " + path + ": cannot open");
  Reader r{in, path};

  char magic[8];
  if (!in.read(magic, 8)) r.fail();
  r.pos += 8;
  if (std::string(magic, 8) != std::string(kCheckpointMagic, 8)) {
    throw IoError("checkpoint " + path + ": bad magic at byte offset 0");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint " + path + ": unsupported version " +
                  std::to_string(version) + " at byte offset 8");
  }

  Checkpoint ckpt;
  FactorizationConfig& c = ckpt.cfg;
  c.algorithm = r.u32() == 1 ? Algorithm::Somf : Algorithm::Omf;
  c.k = r.u64();
  c.reduction = r.f64();
  c.lambda = r.f64();
  c.code_l1_ratio = r.f64();
  c.dict_l1_ratio = r.f64();
  c.v_weight = r.f64();
  c.batch_size = r.u64();
  c.epochs = r.u64();
  c.seed = r.u64();
  c.eval_subset = r.u64();
  c.pipelined = r.u32() != 0;
  c.no_averaging = r.u32() != 0;
  c.code_tol = r.f64();
  c.code_max_sweeps = r.u64();
  c.dict_passes = r.u64();
  c.allow_invalid_schedule = r.u32() != 0;
  c.mask_per_sample = r.u32() != 0;

  ckpt.p = r.u64();
  ckpt.n = r.u64();
  ckpt.batches_done = r.u64();
  ckpt.touched = r.u64();
  ckpt.diag.iterations = r.u64();
  ckpt.diag.mask_coords = r.u64();
  ckpt.diag.degenerate_code_coords = r.u64();
  ckpt.diag.clamped_radii = r.u64();
  ckpt.diag.skipped_columns = r.u64();

  ckpt.dict.ball.mu = r.f64();
  ckpt.dict.d = DenseMatrix(ckpt.p, c.k);
  get_matrix(r, ckpt.dict.d);
  ckpt.dict.column_norms.resize(c.k);
  for (double& v : ckpt.dict.column_norms) v = r.f64();

  ckpt.stats = SurrogateStats(ckpt.p, c.k);
  get_matrix(r, ckpt.stats.mutable_data_moment());
  get_matrix(r, ckpt.stats.mutable_code_moment());
  ckpt.stats.set_loss_offset(r.f64());

  if (r.u32() == 1) {
    ckpt.store = EstimatorStore(ckpt.n, c.k, WeightSchedule{c.v_weight}, c.no_averaging);
    for (std::size_t i = 0; i < ckpt.n; ++i) ckpt.store.set_count(i, r.u64());
    for (std::size_t i = 0; i < ckpt.n; ++i) {
      get_matrix(r, ckpt.store.mutable_gram(i));
      for (std::size_t j = 0; j < c.k; ++j) ckpt.store.mutable_correlation(i)[j] = r.f64();
    }
  }

  ckpt.stream_order.resize(ckpt.n);
  for (std::size_t& v : ckpt.stream_order) v = r.u64();
  ckpt.stream_cursor = r.u64();
  ckpt.stream_epoch = r.u64();
  for (std::uint64_t& v : ckpt.stream_rng_state) v = r.u64();
  for (std::uint64_t& v : ckpt.mask_rng_state) v = r.u64();
  return ckpt;
}

double evaluate_objective(const DenseMatrix& x, const DenseMatrix& d,
                          const PenaltyParams& penalty,
                          const std::vector<std::size_t>& subset, double tol,
                          std::size_t max_sweeps) {
  if (d.rows() != x.rows()) throw DimensionError("evaluate_objective: row mismatch");
  if (subset.empty()) throw ConfigError("evaluate_objective: empty subset");
  const Mask full = Mask::full_mask(d.rows());
  const DenseMatrix gram = masked_gram(d, full);
  double acc = 0.0;
  for (const std::size_t c : subset) {
    if (c >= x.cols()) throw DimensionError("evaluate_objective: column out of range");
    const auto xc = x.col_span(c);
    const DenseVector corr = masked_correlation(d, xc, full);
    const CodeProblem problem{gram, corr.span(), penalty};
    const DenseVector a = solve_code(problem, tol, max_sweeps);
    acc += code_objective(problem, a) + 0.5 * squared_norm(xc);
  }
  return acc / static_cast<double>(subset.size());
}

double stationarity_diagnostic(const DenseMatrix& d_prev, const DenseMatrix& d,
                               double w) {
  if (!(w > 0.0)) throw ConfigError("stationarity_diagnostic: weight must be > 0");
  if (d_prev.rows() != d.rows() || d_prev.cols() != d.cols()) {
    throw DimensionError("stationarity_diagnostic: shape mismatch");
  }
  double acc = 0.0;
  const std::size_t n = d.rows() * d.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = d.data()[i] - d_prev.data()[i];
    acc += diff * diff;
  }
  return std::sqrt(acc) / w;
}

std::uint64_t omf_batch_cost(std::size_t p, std::size_t k, std::size_t batch,
                             std::size_t dict_passes) {
  const std::uint64_t pk = static_cast<std::uint64_t>(p) * k;
  std::uint64_t cost = pk * k;                 // exact gram
  cost += batch * pk;                          // correlations
  cost += (batch + 1) * pk;                    // rank-1 moment refresh + blend
  cost += static_cast<std::uint64_t>(batch) * p;  // loss-offset read of each sample
  cost += dict_passes * (pk * k + 3 * pk);     // column gradients + moves
  return cost;
}

std::uint64_t somf_batch_cost(std::size_t p, std::size_t k, std::size_t batch,
                              const std::vector<std::size_t>& sample_mask_sizes,
                              std::size_t union_mask_size, bool full_mask) {
  if (full_mask) return omf_batch_cost(p, k, batch, 1);
  std::uint64_t cost = 0;
  if (sample_mask_sizes.size() == 1) {
    // Shared mask: one masked gram serves the whole batch.
    const std::uint64_t m = sample_mask_sizes.front();
    cost += m * k * k + batch * m * k + m;
  } else {
    for (const std::size_t m : sample_mask_sizes) {
      cost += static_cast<std::uint64_t>(m) * k * k +
              static_cast<std::uint64_t>(m) * k + m;
    }
  }
  const std::uint64_t u = union_mask_size;
  cost += (batch + 1) * u * k;                    // masked moment rows
  cost += static_cast<std::uint64_t>(batch) * p;  // loss-offset read
  if (u == p) {
    cost += u * k * k + 3 * u * k;  // full-coverage union follows the exact path
  } else {
    cost += u * k * k + 4 * u * k;  // masked gradients, moves, radius audit
  }
  return cost;
}

}  // namespace somf
