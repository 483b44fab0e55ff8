#pragma once

// Quadratic surrogate statistics and the dictionary they drive.
//
// The surrogate after t weighted updates is
//   g(D) = 0.5 tr(D^T D C) - tr(D^T B) + loss_offset
// where C ~ E[a a^T], B ~ E[x a^T] and loss_offset carries the code-penalty
// and 0.5 ||x||^2 terms so g stays comparable to the actual objective.
// B's rows can be refreshed in two phases (masked rows now, the rest later)
// without changing the final state, which is what lets a partial dictionary
// update overlap with finishing the bookkeeping.

#include <cstddef>
#include <span>
#include <vector>

#include "somf/mask.hpp"
#include "somf/matrix.hpp"
#include "somf/regularizers.hpp"

namespace somf {

class SurrogateStats {
 public:
  SurrogateStats() = default;
  SurrogateStats(std::size_t p, std::size_t k);

  // Full-row update with the batch-mean rank-1 terms and one weight:
  //   C <- (1-w) C + (w/batch) sum_b a_b a_b^T        (likewise B, offset)
  void update_full(const std::vector<std::span<const double>>& xs,
                   const std::vector<DenseVector>& alphas, double w,
                   const PenaltyParams& penalty);

  // Same update split in two. The sync phase refreshes C, the offset and the
  // masked rows of B; the complement phase finishes the remaining rows and
  // may run concurrently with a masked dictionary update. Together they
  // reproduce update_full bit for bit.
  void update_sync(const std::vector<std::span<const double>>& xs,
                   const std::vector<DenseVector>& alphas, double w,
                   const PenaltyParams& penalty, const Mask& mask);
  void update_complement(const std::vector<std::span<const double>>& xs,
                         const std::vector<DenseVector>& alphas, double w,
                         const Mask& mask);

  // Single-sample convenience wrappers.
  void update_full(std::span<const double> x, const DenseVector& alpha, double w,
                   const PenaltyParams& penalty);

  const DenseMatrix& code_moment() const { return c_; }      // C, k x k
  const DenseMatrix& data_moment() const { return b_; }      // B, p x k
  double loss_offset() const { return loss_offset_; }
  std::size_t p() const { return b_.rows(); }
  std::size_t k() const { return c_.rows(); }

  // Checkpoint access.
  DenseMatrix& mutable_code_moment() { return c_; }
  DenseMatrix& mutable_data_moment() { return b_; }
  void set_loss_offset(double v) { loss_offset_ = v; }

 private:
  void update_b_rows(const std::vector<std::span<const double>>& xs,
                     const std::vector<DenseVector>& alphas, double w,
                     const std::vector<std::size_t>& rows);

  DenseMatrix b_;  // p x k
  DenseMatrix c_;  // k x k
  double loss_offset_ = 0.0;
};

// Dictionary with per-column mixed-norm feasibility and cached column norms.
// The cache is maintained incrementally by the update routines; it exists so
// a masked update can price its per-column radius without reading unmasked
// rows.
struct Dictionary {
  DenseMatrix d;
  BallParams ball;
  std::vector<double> column_norms;

  void refresh_norms();
};

struct DictUpdateInfo {
  double delta_sq = 0.0;        // squared Frobenius norm of the step
  std::size_t skipped = 0;      // columns with no curvature in C
  std::size_t clamped = 0;      // columns whose masked radius hit zero
};

// Block coordinate descent on the surrogate: each column moves to
//   project(d_j - (D C[:,j] - B[:,j]) / C[j,j])
// onto the unit ball, skipping columns with C[j,j] below curvature floor.
DictUpdateInfo full_dict_update(Dictionary& dict, const SurrogateStats& stats,
                                std::size_t passes = 1);

// One masked pass: only masked rows of each column move, inside a reduced
// ball whose radius is the unit budget minus what the frozen rows already
// spend. A full mask takes the full_dict_update path unchanged; an empty
// mask is a no-op.
DictUpdateInfo partial_dict_update(Dictionary& dict, const SurrogateStats& stats,
                                   const Mask& mask);

double surrogate_value(const DenseMatrix& d, const SurrogateStats& stats);

}  // namespace somf
