#pragma once

#include <sulcikit/volume.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sulcikit::losses {

/// 2N x D embeddings, row-major. Rows (2k, 2k+1) (0-based) are the two
/// views of item k.
class EmbeddingBatch {
 public:
  EmbeddingBatch(std::size_t rows, std::size_t dim, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::size_t pairs() const { return rows_ / 2; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // Even row count >= 2, dim >= 1, every row nonzero and finite.
  void validate() const;

 private:
  std::size_t rows_;
  std::size_t dim_;
  std::vector<double> values_;
};

// Standard-normal entries, deterministic in `seed`.
EmbeddingBatch random_batch(std::size_t pairs, std::size_t dim, std::uint64_t seed);

inline constexpr double kDefaultTemperature = 0.5;
inline constexpr double kDefaultSmooth = 1e-5;

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// -log softmax of sim(i, j)/tau over all k != i (0-based indices).
double nt_xent_pair(const EmbeddingBatch& batch, std::size_t i, std::size_t j,
                    double temperature = kDefaultTemperature);

/// Mean of the 2N pairwise terms over positive pairs, both directions.
double contrastive_loss(const EmbeddingBatch& batch, double temperature = kDefaultTemperature);

// Same shape as batch.values().
std::vector<double> contrastive_loss_grad(const EmbeddingBatch& batch,
                                          double temperature = kDefaultTemperature);

double soft_dice_loss(const ProbabilityVolume& pred, const BinaryMask& target,
                      double smooth = kDefaultSmooth);

/// alpha weights false negatives, beta false positives. Evaluated as
/// 1 - (2I + s) / (2I + 2a FN + 2b FP + s), which coincides with
/// soft_dice_loss bit for bit at alpha = beta = 0.5.
double tversky_loss(const ProbabilityVolume& pred, const BinaryMask& target, double alpha = 0.5,
                    double beta = 0.5, double smooth = kDefaultSmooth);

enum class SegLoss { Dice, Tversky };

struct SegLossParams {
  double alpha = 0.5;
  double beta = 0.5;
  double smooth = kDefaultSmooth;
};

double seg_loss(SegLoss kind, const ProbabilityVolume& pred, const BinaryMask& target,
                const SegLossParams& params = {});
// d loss / d pred, one entry per voxel.
std::vector<double> seg_loss_grad(SegLoss kind, const ProbabilityVolume& pred, const BinaryMask& target,
                                  const SegLossParams& params = {});

// seg + weight * contrastive. The weight is an extension; 1 is the plain sum.
double multitask_loss(double seg, double contrastive, double weight = 1.0);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

/// Central differences of `f` at `point` compared entrywise with `analytic`.
/// Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
GradientCheck finite_difference_check(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> analytic, std::span<const double> point,
                                      double eps);

GradientCheck check_contrastive_gradient(const EmbeddingBatch& batch, double temperature, double eps);
GradientCheck check_seg_gradient(SegLoss kind, const ProbabilityVolume& pred, const BinaryMask& target,
                                 const SegLossParams& params, double eps);

struct DescentStep {
  double loss = 0.0;
  double mean_positive_similarity = 0.0;
  double mean_negative_similarity = 0.0;
};

/// Plain gradient descent on the embedding entries. Entry 0 is the initial
/// state; entry s is the state after s updates.
std::vector<DescentStep> optimize_embeddings_demo(const EmbeddingBatch& init, double temperature,
                                                  std::size_t steps, double step_size);

}  // namespace sulcikit::losses
