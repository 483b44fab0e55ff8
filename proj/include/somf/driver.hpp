#pragma once

// End-to-end factorization runs: configuration, the two training loops
// (exact full-coordinate updates and the mask-subsampled variant), trace
// recording, objective evaluation and checkpointing.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "somf/estimators.hpp"
#include "somf/mask.hpp"
#include "somf/matrix.hpp"
#include "somf/regularizers.hpp"
#include "somf/sampling.hpp"
#include "somf/surrogate.hpp"

namespace somf {

enum class Algorithm { Omf, Somf };

struct FactorizationConfig {
  Algorithm algorithm = Algorithm::Omf;
  std::size_t k = 8;
  double reduction = 1.0;  // expected fraction of coordinates seen is 1/reduction
  double lambda = 0.1;
  double code_l1_ratio = 0.9;
  double dict_l1_ratio = 0.0;
  double v_weight = 0.9;
  std::size_t batch_size = 1;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  std::size_t eval_subset = 200;
  bool pipelined = false;
  bool no_averaging = false;
  double code_tol = 1e-6;
  std::size_t code_max_sweeps = 100;
  std::size_t dict_passes = 1;
  bool allow_invalid_schedule = false;
  bool mask_per_sample = false;

  // Throws ConfigError naming the offending field. Returns a copy with
  // derived clamps applied (reduction forced to 1 for the exact algorithm,
  // eval subset capped at n).
  FactorizationConfig validated(std::size_t n_samples) const;
};

struct TraceRow {
  std::uint64_t t = 0;       // completed batch iterations
  double seconds = 0.0;      // wall clock since the run started
  std::uint64_t touched = 0; // cumulative touched-coordinate tally
  double f_bar = 0.0;        // objective estimate on the eval subset
  double g_bar = 0.0;        // surrogate value at the current dictionary
};

struct RunTrace {
  std::vector<TraceRow> rows;
  // sqrt of the squared dictionary step over the iteration weight, one entry
  // per iteration; stalls of the surrogate descent show up here.
  std::vector<double> stationarity;
};

struct RunDiagnostics {
  std::uint64_t iterations = 0;
  std::uint64_t mask_coords = 0;           // sum of drawn mask sizes
  std::uint64_t degenerate_code_coords = 0;
  std::uint64_t clamped_radii = 0;
  std::uint64_t skipped_columns = 0;
};

struct RunResult {
  Dictionary dict;
  SurrogateStats stats;
  RunTrace trace;
  RunDiagnostics diag;
  std::uint64_t touched = 0;
};

// Snapshot after the last completed iteration carried by the observer.
// References stay valid only during the call.
struct IterationInfo {
  std::uint64_t t = 0;
  double w = 0.0;
  std::span<const std::size_t> batch;
  const Mask* mask = nullptr;  // null for the exact algorithm
  const Dictionary& dict;
  const SurrogateStats& stats;
  double delta_sq = 0.0;
};

using IterationObserver = std::function<void(const IterationInfo&)>;

struct RunHooks {
  IterationObserver observer;
  std::string checkpoint_out;  // written after the final iteration if set
};

// Everything needed to continue a run as if it had never stopped.
struct Checkpoint {
  FactorizationConfig cfg;
  std::size_t p = 0;
  std::size_t n = 0;
  std::uint64_t batches_done = 0;
  std::uint64_t touched = 0;
  RunDiagnostics diag;
  Dictionary dict;
  SurrogateStats stats;
  EstimatorStore store;  // empty for the exact algorithm
  std::vector<std::size_t> stream_order;
  std::size_t stream_cursor = 0;
  std::uint64_t stream_epoch = 0;
  std::array<std::uint64_t, 4> stream_rng_state{};
  std::array<std::uint64_t, 4> mask_rng_state{};
};

RunResult run(const DenseMatrix& x, const FactorizationConfig& cfg,
              const RunHooks& hooks = {});

// Continues a checkpointed run until `total_epochs` worth of samples have
// been consumed. The trace holds only rows from after the resume point; in
// sequential mode they match the uninterrupted run exactly (wall-clock
// seconds aside).
RunResult resume_run(const DenseMatrix& x, const Checkpoint& ckpt,
                     std::size_t total_epochs, const RunHooks& hooks = {});

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Mean over the subset columns of  min_a 0.5||x_c - D a||^2 + penalty(a).
double evaluate_objective(const DenseMatrix& x, const DenseMatrix& d,
                          const PenaltyParams& penalty,
                          const std::vector<std::size_t>& subset, double tol = 1e-6,
                          std::size_t max_sweeps = 100);

// ||d - d_prev||_F / w; the surrogate descent is stationary when this stays
// bounded while w decays.
double stationarity_diagnostic(const DenseMatrix& d_prev, const DenseMatrix& d, double w);

// Deterministic per-batch cost model used for the touched-coordinate tally:
// every scalar read/write of a feature-dimension object on the critical
// path. The subsampled ledger charges the mask draw and the masked kernels;
// complement-row bookkeeping is excluded because it overlaps the dictionary
// update. Reading a full sample for the loss offset is charged to both.
std::uint64_t omf_batch_cost(std::size_t p, std::size_t k, std::size_t batch,
                             std::size_t dict_passes);
std::uint64_t somf_batch_cost(std::size_t p, std::size_t k, std::size_t batch,
                              const std::vector<std::size_t>& sample_mask_sizes,
                              std::size_t union_mask_size, bool full_mask);

}  // namespace somf
