#include <sulcikit/losses.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace sulcikit::losses {
namespace {

void check_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
}

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Unit rows, their original norms, and the full cosine-similarity matrix.
struct Normalized {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> unit;
  std::vector<double> norms;
  std::vector<double> sim;

  std::span<const double> unit_row(std::size_t i) const { return {unit.data() + i * dim, dim}; }
  double s(std::size_t i, std::size_t k) const { return sim[i * rows + k]; }
};

Normalized normalize(const EmbeddingBatch& batch) {
  batch.validate();
  Normalized n;
  n.rows = batch.rows();
  n.dim = batch.dim();
  n.unit.resize(n.rows * n.dim);
  n.norms.resize(n.rows);
  for (std::size_t i = 0; i < n.rows; ++i) {
    const auto r = batch.row(i);
    n.norms[i] = norm(r);
    for (std::size_t d = 0; d < n.dim; ++d) n.unit[i * n.dim + d] = r[d] / n.norms[i];
  }
  n.sim.assign(n.rows * n.rows, 0.0);
  for (std::size_t i = 0; i < n.rows; ++i) {
    for (std::size_t k = i; k < n.rows; ++k) {
      // Same expression as cosine_similarity for bitwise agreement.
      const double v = dot(batch.row(i), batch.row(k)) / (n.norms[i] * n.norms[k]);
      n.sim[i * n.rows + k] = v;
      n.sim[k * n.rows + i] = v;
    }
  }
  return n;
}

// log sum_{k != i} exp(sim(i,k)/tau), max-shifted.
double log_partition(const Normalized& n, std::size_t i, double tau) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n.rows; ++k) {
    if (k != i) m = std::max(m, n.s(i, k) / tau);
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < n.rows; ++k) {
    if (k != i) acc += std::exp(n.s(i, k) / tau - m);
  }
  return m + std::log(acc);
}

double pair_term(const Normalized& n, std::size_t i, std::size_t j, double tau) {
  return log_partition(n, i, tau) - n.s(i, j) / tau;
}

struct SegSums {
  double intersection = 0.0;  // sum p g
  double pred = 0.0;          // sum p
  double target = 0.0;        // sum g
};

SegSums seg_sums(const ProbabilityVolume& pred, const BinaryMask& target) {
  require_same_grid(pred.grid, target.grid, "segmentation loss");
  SegSums s;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred.voxels[i];
    const double g = target.voxels[i] ? 1.0 : 0.0;
    s.intersection += p * g;
    s.pred += p;
    s.target += g;
  }
  return s;
}

void check_seg_params(SegLoss kind, const SegLossParams& params) {
  if (!(params.smooth >= 0.0)) throw Error(ErrorCode::InvalidArgument, "smooth must be >= 0");
  if (kind == SegLoss::Tversky && (!(params.alpha >= 0.0) || !(params.beta >= 0.0))) {
    throw Error(ErrorCode::InvalidArgument, "tversky alpha and beta must be >= 0");
  }
}

// Numerator and denominator of the overlap ratio; loss = 1 - num / den.
struct Ratio {
  double num;
  double den;
};

Ratio overlap_ratio(SegLoss kind, const SegSums& s, const SegLossParams& params) {
  const double num = 2.0 * s.intersection + params.smooth;
  double den;
  if (kind == SegLoss::Dice) {
    den = (s.pred + s.target) + params.smooth;
  } else {
    const double a = params.alpha, b = params.beta;
    den = ((2.0 * (1.0 - a - b)) * s.intersection + (2.0 * a) * s.target) + (2.0 * b) * s.pred + params.smooth;
  }
  if (den == 0.0) {
    throw Error(ErrorCode::BothEmpty, "prediction and target are both empty and smooth is 0");
  }
  return {num, den};
}

}  // namespace

EmbeddingBatch::EmbeddingBatch(std::size_t rows, std::size_t dim, std::vector<double> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (values_.size() != rows_ * dim_) {
    throw Error(ErrorCode::InvalidArgument, "embedding buffer does not match rows x dim");
  }
}

void EmbeddingBatch::validate() const {
  if (rows_ < 2 || rows_ % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "embedding batch needs an even number (>= 2) of rows");
  }
  if (dim_ < 1) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be >= 1");
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto r = row(i);
    for (double v : r) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "embedding row " + std::to_string(i));
    }
    if (norm(r) == 0.0) throw Error(ErrorCode::ZeroVector, "embedding row " + std::to_string(i) + " is zero");
  }
}

EmbeddingBatch random_batch(std::size_t pairs, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(2 * pairs * dim);
  for (auto& v : values) v = normal(rng);
  return EmbeddingBatch(2 * pairs, dim, std::move(values));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "vectors differ in length");
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  return dot(a, b) / (na * nb);
}

double nt_xent_pair(const EmbeddingBatch& batch, std::size_t i, std::size_t j, double temperature) {
  check_temperature(temperature);
  if (i >= batch.rows() || j >= batch.rows()) {
    throw Error(ErrorCode::IndexOutOfRange, "row index outside the batch");
  }
  if (i == j) throw Error(ErrorCode::InvalidArgument, "nt_xent_pair needs i != j");
  return pair_term(normalize(batch), i, j, temperature);
}

double contrastive_loss(const EmbeddingBatch& batch, double temperature) {
  check_temperature(temperature);
  const Normalized n = normalize(batch);
  double total = 0.0;
  for (std::size_t i = 0; i < n.rows; ++i) total += pair_term(n, i, i ^ 1u, temperature);
  return total / static_cast<double>(n.rows);
}

std::vector<double> contrastive_loss_grad(const EmbeddingBatch& batch, double temperature) {
  check_temperature(temperature);
  const Normalized n = normalize(batch);
  const std::size_t rows = n.rows;
  const double scale = 1.0 / (static_cast<double>(rows) * temperature);

  // coeff(i, k): d loss / d sim(i, k) contributed by row i's own term.
  std::vector<double> coeff(rows * rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double lse = log_partition(n, i, temperature);
    for (std::size_t k = 0; k < rows; ++k) {
      if (k == i) continue;
      const double softmax = std::exp(n.s(i, k) / temperature - lse);
      coeff[i * rows + k] = scale * (softmax - (k == (i ^ 1u) ? 1.0 : 0.0));
    }
  }

  std::vector<double> grad(rows * n.dim, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto zi = n.unit_row(i);
    for (std::size_t k = 0; k < rows; ++k) {
      if (k == i) continue;
      const double g = coeff[i * rows + k] + coeff[k * rows + i];
      if (g == 0.0) continue;
      const auto zk = n.unit_row(k);
      const double sik = n.s(i, k);
      for (std::size_t d = 0; d < n.dim; ++d) {
        grad[i * n.dim + d] += g * (zk[d] - sik * zi[d]) / n.norms[i];
      }
    }
  }
  return grad;
}

double seg_loss(SegLoss kind, const ProbabilityVolume& pred, const BinaryMask& target,
                const SegLossParams& params) {
  check_seg_params(kind, params);
  const auto r = overlap_ratio(kind, seg_sums(pred, target), params);
  return 1.0 - r.num / r.den;
}

std::vector<double> seg_loss_grad(SegLoss kind, const ProbabilityVolume& pred, const BinaryMask& target,
                                  const SegLossParams& params) {
  check_seg_params(kind, params);
  const auto r = overlap_ratio(kind, seg_sums(pred, target), params);
  const double den2 = r.den * r.den;
  // d den / d p_v = slope_fg for foreground voxels, slope_bg for background.
  double slope_fg = 1.0, slope_bg = 1.0;
  if (kind == SegLoss::Tversky) {
    slope_fg = 2.0 * (1.0 - params.alpha - params.beta) + 2.0 * params.beta;
    slope_bg = 2.0 * params.beta;
  }
  std::vector<double> grad(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool fg = target.voxels[i] != 0;
    const double dnum = fg ? 2.0 : 0.0;
    const double dden = fg ? slope_fg : slope_bg;
    grad[i] = -(dnum * r.den - r.num * dden) / den2;
  }
  return grad;
}

double soft_dice_loss(const ProbabilityVolume& pred, const BinaryMask& target, double smooth) {
  return seg_loss(SegLoss::Dice, pred, target, {0.5, 0.5, smooth});
}

double tversky_loss(const ProbabilityVolume& pred, const BinaryMask& target, double alpha, double beta,
                    double smooth) {
  return seg_loss(SegLoss::Tversky, pred, target, {alpha, beta, smooth});
}

double multitask_loss(double seg, double contrastive, double weight) {
  if (!std::isfinite(seg) || !std::isfinite(contrastive) || !std::isfinite(weight)) {
    throw Error(ErrorCode::NonFinite, "multitask loss terms must be finite");
  }
  return seg + weight * contrastive;
}

GradientCheck finite_difference_check(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> analytic, std::span<const double> point,
                                      double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be > 0");
  if (analytic.size() != point.size()) {
    throw Error(ErrorCode::InvalidArgument, "gradient and point differ in length");
  }
  std::vector<double> x(point.begin(), point.end());
  GradientCheck result;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f(x);
    x[i] = saved - eps;
    const double down = f(x);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
    }
  }
  return result;
}

GradientCheck check_contrastive_gradient(const EmbeddingBatch& batch, double temperature, double eps) {
  const auto analytic = contrastive_loss_grad(batch, temperature);
  auto f = [&](std::span<const double> x) {
    return contrastive_loss(EmbeddingBatch(batch.rows(), batch.dim(), {x.begin(), x.end()}), temperature);
  };
  return finite_difference_check(f, analytic, batch.values(), eps);
}

GradientCheck check_seg_gradient(SegLoss kind, const ProbabilityVolume& pred, const BinaryMask& target,
                                 const SegLossParams& params, double eps) {
  const auto analytic = seg_loss_grad(kind, pred, target, params);
  auto f = [&](std::span<const double> x) {
    return seg_loss(kind, ProbabilityVolume(pred.grid, std::vector<double>(x.begin(), x.end())), target, params);
  };
  return finite_difference_check(f, analytic, pred.voxels, eps);
}

std::vector<DescentStep> optimize_embeddings_demo(const EmbeddingBatch& init, double temperature,
                                                  std::size_t steps, double step_size) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "steps must be >= 1");
  if (!(step_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "step_size must be > 0");
  check_temperature(temperature);

  auto measure = [&](const EmbeddingBatch& b) {
    const Normalized n = normalize(b);
    DescentStep s;
    s.loss = contrastive_loss(b, temperature);
    double pos = 0.0, neg = 0.0;
    std::size_t neg_count = 0;
    for (std::size_t i = 0; i < n.rows; ++i) {
      for (std::size_t k = i + 1; k < n.rows; ++k) {
        if (k == (i ^ 1u)) {
          pos += n.s(i, k);
        } else {
          neg += n.s(i, k);
          ++neg_count;
        }
      }
    }
    s.mean_positive_similarity = pos / static_cast<double>(b.pairs());
    s.mean_negative_similarity = neg_count ? neg / static_cast<double>(neg_count) : 0.0;
    return s;
  };

  EmbeddingBatch current = init;
  std::vector<DescentStep> trajectory;
  trajectory.reserve(steps + 1);
  trajectory.push_back(measure(current));
  for (std::size_t s = 0; s < steps; ++s) {
    const auto grad = contrastive_loss_grad(current, temperature);
    auto& v = current.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= step_size * grad[i];
    trajectory.push_back(measure(current));
  }
  return trajectory;
}

}  // namespace sulcikit::losses
