#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "somf/driver.hpp"
#include "somf/errors.hpp"
#include "somf/matrix.hpp"
#include "somf/rng.hpp"

using namespace somf;

namespace {

DenseMatrix make_data(std::size_t p, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix x(p, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < p; ++i) x(i, j) = rng.normal();
  }
  return x;
}

bool throws_config_error_mentioning(const std::function<void()>& fn, const std::string& field) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return std::string(e.what()).find(field) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  const DenseMatrix x = make_data(6, 10, 1);
  FactorizationConfig cfg;

  auto expect = [&](auto mutate, const std::string& field) {
    FactorizationConfig bad = cfg;
    mutate(bad);
    CHECK_MESSAGE(throws_config_error_mentioning([&] { (void)bad.validated(10); }, field),
                  "expected ConfigError mentioning '" << field << "'");
  };

  expect([](FactorizationConfig& c) { c.k = 0; }, "k");
  expect([](FactorizationConfig& c) { c.reduction = 0.5; }, "reduction");
  expect([](FactorizationConfig& c) { c.lambda = -1.0; }, "lambda");
  expect([](FactorizationConfig& c) { c.code_l1_ratio = 1.5; }, "code_l1_ratio");
  expect([](FactorizationConfig& c) { c.dict_l1_ratio = -0.2; }, "dict_l1_ratio");
  expect([](FactorizationConfig& c) { c.batch_size = 0; }, "batch_size");
  expect([](FactorizationConfig& c) { c.epochs = 0; }, "epochs");
  expect([](FactorizationConfig& c) { c.v_weight = 0.5; }, "v_weight");
  expect([](FactorizationConfig& c) { c.v_weight = 1.0; }, "v_weight");
  expect([](FactorizationConfig& c) { c.code_tol = 0.0; }, "code_tol");
  expect([](FactorizationConfig& c) { c.eval_subset = 0; }, "eval_subset");
}

TEST_CASE("schedule override widens but still bounds the exponent") {
  FactorizationConfig cfg;
  cfg.allow_invalid_schedule = true;
  cfg.v_weight = 0.5;
  CHECK_NOTHROW((void)cfg.validated(10));
  cfg.v_weight = 1.25;
  CHECK_NOTHROW((void)cfg.validated(10));
  cfg.v_weight = 1.3;
  CHECK(throws_config_error_mentioning([&] { (void)cfg.validated(10); }, "v_weight"));
  cfg.v_weight = 0.0;
  CHECK(throws_config_error_mentioning([&] { (void)cfg.validated(10); }, "v_weight"));
}

TEST_CASE("validation clamps derived fields") {
  FactorizationConfig cfg;
  cfg.algorithm = Algorithm::Omf;
  cfg.reduction = 4.0;  // meaningless for the exact algorithm
  cfg.eval_subset = 1000;
  const FactorizationConfig v = cfg.validated(30);
  CHECK(v.reduction == 1.0);
  CHECK(v.eval_subset == 30);

  cfg.algorithm = Algorithm::Somf;
  const FactorizationConfig vs = cfg.validated(30);
  CHECK(vs.reduction == 4.0);
}

TEST_CASE("identical configurations give bit-identical runs") {
  const DenseMatrix x = make_data(12, 20, 2);
  FactorizationConfig cfg;
  cfg.algorithm = Algorithm::Somf;
  cfg.k = 4;
  cfg.reduction = 2.0;
  cfg.batch_size = 3;
  cfg.epochs = 2;
  cfg.seed = 7;

  const RunResult a = run(x, cfg);
  const RunResult b = run(x, cfg);
  CHECK(max_abs_diff(a.dict.d, b.dict.d) == 0.0);
  CHECK(a.touched == b.touched);
  REQUIRE(a.trace.rows.size() == b.trace.rows.size());
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
    CHECK(a.trace.rows[i].t == b.trace.rows[i].t);
    CHECK(a.trace.rows[i].touched == b.trace.rows[i].touched);
    CHECK(a.trace.rows[i].f_bar == b.trace.rows[i].f_bar);
    CHECK(a.trace.rows[i].g_bar == b.trace.rows[i].g_bar);
  }
}

TEST_CASE("different seeds explore different paths") {
  const DenseMatrix x = make_data(12, 20, 3);
  FactorizationConfig cfg;
  cfg.algorithm = Algorithm::Somf;
  cfg.k = 4;
  cfg.reduction = 2.0;
  cfg.epochs = 1;
  cfg.seed = 1;
  const RunResult a = run(x, cfg);
  cfg.seed = 2;
  const RunResult b = run(x, cfg);
  CHECK(max_abs_diff(a.dict.d, b.dict.d) > 0.0);
}

TEST_CASE("unit reduction reproduces the exact algorithm over one epoch") {
  const DenseMatrix x = make_data(15, 24, 4);
  FactorizationConfig omf;
  omf.algorithm = Algorithm::Omf;
  omf.k = 5;
  omf.batch_size = 4;
  omf.epochs = 1;
  omf.seed = 11;

  FactorizationConfig somf = omf;
  somf.algorithm = Algorithm::Somf;
  somf.reduction = 1.0;

  const RunResult a = run(x, omf);
  const RunResult b = run(x, somf);
  CHECK(max_abs_diff(a.dict.d, b.dict.d) <= 1e-10);
  CHECK(a.touched == b.touched);
}

TEST_CASE("unit reduction with latest-only estimators matches over many epochs") {
  const DenseMatrix x = make_data(15, 24, 5);
  FactorizationConfig omf;
  omf.algorithm = Algorithm::Omf;
  omf.k = 5;
  omf.batch_size = 4;
  omf.epochs = 4;
  omf.seed = 12;

  FactorizationConfig somf = omf;
  somf.algorithm = Algorithm::Somf;
  somf.reduction = 1.0;
  somf.no_averaging = true;

  const RunResult a = run(x, omf);
  const RunResult b = run(x, somf);
  CHECK(max_abs_diff(a.dict.d, b.dict.d) <= 1e-10);
  CHECK(a.touched == b.touched);
}

TEST_CASE("subsampling touches fewer coordinates") {
  const DenseMatrix x = make_data(60, 40, 6);
  FactorizationConfig cfg;
  cfg.algorithm = Algorithm::Somf;
  cfg.k = 6;
  cfg.reduction = 1.0;
  cfg.epochs = 2;
  cfg.seed = 3;
  const RunResult full = run(x, cfg);
  cfg.reduction = 4.0;
  const RunResult quarter = run(x, cfg);
  CHECK(quarter.touched < full.touched);
  CHECK(quarter.diag.mask_coords < full.diag.mask_coords);
}

TEST_CASE("trace rows are monotone and end at the final iteration") {
  const DenseMatrix x = make_data(10, 30, 7);
  FactorizationConfig cfg;
  cfg.algorithm = Algorithm::Somf;
  cfg.k = 3;
  cfg.reduction = 2.0;
  cfg.batch_size = 4;
  cfg.epochs = 3;
  cfg.seed = 5;
  const RunResult res = run(x, cfg);

  REQUIRE_FALSE(res.trace.rows.empty());
  const std::uint64_t total = (30 * 3 + 3) / 4;
  CHECK(res.trace.rows.back().t == total);
  for (std::size_t i = 1; i < res.trace.rows.size(); ++i) {
    CHECK(res.trace.rows[i].t > res.trace.rows[i - 1].t);
    CHECK(res.trace.rows[i].touched >= res.trace.rows[i - 1].touched);
  }
  for (const TraceRow& row : res.trace.rows) {
    CHECK(std::isfinite(row.f_bar));
    CHECK(std::isfinite(row.g_bar));
  }
  CHECK(res.trace.stationarity.size() == res.diag.iterations);
}

TEST_CASE("observer sees every iteration in order") {
  const DenseMatrix x = make_data(9, 12, 8);
  FactorizationConfig cfg;
  cfg.algorithm = Algorithm::Somf;
  cfg.k = 3;
  cfg.reduction = 2.0;
  cfg.batch_size = 5;
  cfg.epochs = 2;
  cfg.seed = 9;

  std::uint64_t calls = 0;
  RunHooks hooks;
  hooks.observer = [&](const IterationInfo& info) {
    ++calls;
    CHECK(info.t == calls);
    CHECK(info.w == doctest::Approx(std::pow(double(info.t), -cfg.v_weight)));
    CHECK_FALSE(info.batch.empty());
    CHECK(info.mask != nullptr);
    CHECK(info.dict.d.all_finite());
  };
  const RunResult res = run(x, cfg, hooks);
  CHECK(calls == res.diag.iterations);

  cfg.algorithm = Algorithm::Omf;
  calls = 0;
  hooks.observer = [&](const IterationInfo& info) {
    ++calls;
    CHECK(info.mask == nullptr);
  };
  run(x, cfg, hooks);
  CHECK(calls > 0);
}

TEST_CASE("per-sample masks run and record mask sizes") {
  const DenseMatrix x = make_data(20, 15, 9);
  FactorizationConfig cfg;
  cfg.algorithm = Algorithm::Somf;
  cfg.k = 4;
  cfg.reduction = 2.0;
  cfg.batch_size = 3;
  cfg.epochs = 2;
  cfg.seed = 21;
  cfg.mask_per_sample = true;
  const RunResult res = run(x, cfg);
  CHECK(res.dict.d.all_finite());
  CHECK(res.diag.mask_coords > 0);
  CHECK(res.diag.iterations == 10);
}

TEST_CASE("pipelined and sequential runs agree bitwise") {
  const DenseMatrix x = make_data(24, 18, 10);
  FactorizationConfig cfg;
  cfg.algorithm = Algorithm::Somf;
  cfg.k = 5;
  cfg.reduction = 3.0;
  cfg.batch_size = 3;
  cfg.epochs = 2;
  cfg.seed = 13;

  cfg.pipelined = false;
  const RunResult seq = run(x, cfg);
  cfg.pipelined = true;
  const RunResult par = run(x, cfg);

  CHECK(max_abs_diff(seq.dict.d, par.dict.d) == 0.0);
  CHECK(max_abs_diff(seq.stats.data_moment(), par.stats.data_moment()) == 0.0);
  CHECK(max_abs_diff(seq.stats.code_moment(), par.stats.code_moment()) == 0.0);
  CHECK(seq.touched == par.touched);
}

TEST_CASE("checkpoints round trip through disk") {
  const DenseMatrix x = make_data(14, 16, 11);
  FactorizationConfig cfg;
  cfg.algorithm = Algorithm::Somf;
  cfg.k = 4;
  cfg.reduction = 2.0;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.seed = 17;

  const std::filesystem::path dir = oracle::temp_dir("ckpt");
  const std::string path = (dir / "state.bin").string();
  RunHooks hooks;
  hooks.checkpoint_out = path;
  run(x, cfg, hooks);

  const Checkpoint ckpt = load_checkpoint(path);
  CHECK(ckpt.p == 14);
  CHECK(ckpt.n == 16);
  CHECK(ckpt.cfg.k == 4);
  CHECK(ckpt.cfg.reduction == 2.0);
  CHECK(ckpt.cfg.seed == 17);
  CHECK(ckpt.batches_done == 4);
  CHECK(ckpt.dict.d.rows() == 14);
  CHECK(ckpt.store.n_samples() == 16);

  // Writing the loaded checkpoint back must reproduce the file content.
  const std::string copy = (dir / "copy.bin").string();
  save_checkpoint(copy, ckpt);
  const Checkpoint again = load_checkpoint(copy);
  CHECK(max_abs_diff(ckpt.dict.d, again.dict.d) == 0.0);
  CHECK(max_abs_diff(ckpt.stats.data_moment(), again.stats.data_moment()) == 0.0);
  CHECK(ckpt.stream_order == again.stream_order);
  CHECK(ckpt.stream_rng_state == again.stream_rng_state);
  CHECK(ckpt.mask_rng_state == again.mask_rng_state);
  std::filesystem::remove_all(dir);
}

TEST_CASE("resuming a checkpoint reproduces the uninterrupted run") {
  const DenseMatrix x = make_data(14, 20, 12);
  FactorizationConfig cfg;
  cfg.algorithm = Algorithm::Somf;
  cfg.k = 4;
  cfg.reduction = 2.0;
  cfg.batch_size = 5;
  cfg.epochs = 3;
  cfg.seed = 23;

  const RunResult straight = run(x, cfg);

  FactorizationConfig head = cfg;
  head.epochs = 1;
  const std::filesystem::path dir = oracle::temp_dir("resume");
  const std::string path = (dir / "head.bin").string();
  RunHooks hooks;
  hooks.checkpoint_out = path;
  run(x, head, hooks);

  const Checkpoint ckpt = load_checkpoint(path);
  const RunResult tail = resume_run(x, ckpt, 3);

  CHECK(max_abs_diff(straight.dict.d, tail.dict.d) == 0.0);
  CHECK(max_abs_diff(straight.stats.data_moment(), tail.stats.data_moment()) == 0.0);
  CHECK(straight.touched == tail.touched);
  CHECK(straight.diag.iterations == tail.diag.iterations);

  // Post-resume trace rows line up with the straight run's rows at the same t.
  for (const TraceRow& row : tail.trace.rows) {
    bool found = false;
    for (const TraceRow& ref : straight.trace.rows) {
      if (ref.t == row.t) {
        found = true;
        CHECK(ref.touched == row.touched);
        CHECK(ref.f_bar == row.f_bar);
        CHECK(ref.g_bar == row.g_bar);
      }
    }
    CHECK_MESSAGE(found, "row t=" << row.t << " missing from the straight run");
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint loader rejects other files") {
  const std::filesystem::path dir = oracle::temp_dir("badckpt");
  const std::string path = (dir / "junk.bin").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fputs("definitely not a checkpoint", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS((void)load_checkpoint(path), IoError);
  CHECK_THROWS_AS((void)load_checkpoint((dir / "missing.bin").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("objective evaluation matches a hand-solved problem") {
  // D = I, so min_a 0.5||x - a||^2 + lambda |a|_1 soft-thresholds x.
  DenseMatrix x(3, 2);
  x(0, 0) = 2.0;
  x(1, 0) = -0.5;
  x(2, 0) = 0.0;
  x(0, 1) = 1.5;
  x(1, 1) = 3.0;
  x(2, 1) = -2.0;
  const DenseMatrix d = DenseMatrix::identity(3);
  PenaltyParams pen;
  pen.lambda = 1.0;
  pen.l1_ratio = 1.0;

  auto column_value = [&](std::size_t c) {
    double value = 0.0;
    double l1 = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double a = soft_threshold(x(i, c), 1.0);
      value += 0.5 * (x(i, c) - a) * (x(i, c) - a);
      l1 += std::abs(a);
    }
    return value + pen.lambda * l1;
  };

  const double got0 = evaluate_objective(x, d, pen, {0}, 1e-12);
  CHECK(got0 == doctest::Approx(column_value(0)).epsilon(1e-10));
  const double both = evaluate_objective(x, d, pen, {0, 1}, 1e-12);
  CHECK(both == doctest::Approx(0.5 * (column_value(0) + column_value(1))).epsilon(1e-10));
}

TEST_CASE("objective evaluation requires a subset") {
  const DenseMatrix x = make_data(4, 4, 13);
  const DenseMatrix d = DenseMatrix::identity(4);
  PenaltyParams pen;
  CHECK_THROWS_AS((void)evaluate_objective(x, d, pen, {}), ConfigError);
}

TEST_CASE("stationarity diagnostic on hand values") {
  DenseMatrix a(2, 2);
  DenseMatrix b(2, 2);
  b(0, 0) = 1.0;
  b(0, 1) = 1.0;
  b(1, 0) = 1.0;
  b(1, 1) = 1.0;
  CHECK(stationarity_diagnostic(a, b, 0.5) == doctest::Approx(4.0));
  CHECK(stationarity_diagnostic(a, b, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("cost model hand values") {
  // p=10, k=2, batch=3, one pass:
  // gram 10*4 = 40, correlations 3*10*2 = 60, stats (3+1)*10*2 = 80,
  // offset reads 3*10 = 30, dict pass 10*4 + 3*10*2 = 100. Total 310.
  CHECK(omf_batch_cost(10, 2, 3, 1) == 310);
  // Full-mask subsampled batches are charged exactly like exact batches.
  CHECK(somf_batch_cost(10, 2, 3, {10, 10, 10}, 10, true) == omf_batch_cost(10, 2, 3, 1));
}

TEST_CASE("cost model scales with the mask, not the feature count") {
  const std::size_t p = 1000, k = 4, batch = 2;
  const std::vector<std::size_t> small_masks = {10, 12};
  const std::uint64_t small = somf_batch_cost(p, k, batch, small_masks, 20, false);
  const std::vector<std::size_t> big_masks = {500, 510};
  const std::uint64_t big = somf_batch_cost(p, k, batch, big_masks, 800, false);
  CHECK(small < big);
  // The only p-proportional term left is the loss-offset read.
  CHECK(small < p * batch + 20 * (k * k + 6 * k) + 2 * (10 + 12) * (k * k + k + 1) + p * k);
}
