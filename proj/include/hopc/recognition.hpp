#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hopc/error.hpp"

namespace hopc {

/// One sample per row.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Seeded random stream. The engine's output is fixed by the standard; the
/// conversions below avoid std distributions, whose output is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, 1) from the top 53 bits of one draw.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct Codebook {
  SampleMatrix centroids;
  /// Codewords surviving discriminative selection (1 = kept).
  std::vector<std::uint8_t> keep;
  std::uint64_t seed = 0;
  double inertia = 0.0;
  /// Inertia after each assignment step.
  std::vector<double> inertia_history;
  int iterations = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(centroids.rows()); }
  std::size_t kept() const noexcept;
};

/// Lloyd's k-means with k-means++ seeding. Empty clusters are re-seeded from
/// the points farthest from their centroid.
Codebook kmeans(const SampleMatrix& data, std::size_t k, std::uint64_t seed, int max_iter = 100);

/// Nearest kept codeword per descriptor (ties to the lowest index); the
/// histogram has one bin per kept codeword.
Eigen::VectorXd bow_histogram(const SampleMatrix& descriptors, const Codebook& codebook);

/// Multi-class F-score of one feature column. Zero within-class scatter
/// gives +inf for distinct means and 0 otherwise.
double fscore(std::span<const double> values, std::span<const int> labels);

/// Keeps the ceil(keep_fraction * n) highest scores; ties by lower index.
std::vector<std::uint8_t> select_features(std::span<const double> scores, double keep_fraction);

/// Keeps every score strictly above `threshold` (at least the best one).
std::vector<std::uint8_t> select_features_above(std::span<const double> scores, double threshold);

/// Histogram intersection sum_i min(x_i, y_i).
double hik(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

/// HIK Gram matrix of the rows of `a` against the rows of `b`.
Eigen::MatrixXd hik_gram(const SampleMatrix& a, const SampleMatrix& b);

struct SmoParams {
  double c = 1.0;
  /// Stop when the maximal KKT violation falls below this.
  double tolerance = 1e-4;
  std::size_t max_iterations = 100000;
};

struct BinarySvm {
  Eigen::VectorXd alpha;
  double rho = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Dual C-SVC on a precomputed kernel with second-order working-set
/// selection. Decision value: sum_i y_i alpha_i K(i, x) - rho.
BinarySvm solve_binary(const Eigen::MatrixXd& gram, std::span<const int> y, const SmoParams& params);

/// One-vs-rest kernel classifier. All stored values are float-representable
/// so the model survives a float32 round trip unchanged.
struct KernelModel {
  std::vector<int> classes;
  SampleMatrix support;
  /// One row per class: y_i alpha_i per support vector.
  Eigen::MatrixXd coef;
  Eigen::VectorXd bias;
  double c = 1.0;
};

KernelModel train(const SampleMatrix& samples, std::span<const int> labels, const SmoParams& params);

Eigen::VectorXd decision_scores(const KernelModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Class with the largest one-vs-rest score; ties to the lowest class id.
int predict(const KernelModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
            Eigen::VectorXd* scores = nullptr);

/// Rounds every entry to the nearest float.
template <typename Derived>
void round_to_float(Eigen::MatrixBase<Derived>& m) {
  m = m.template cast<float>().template cast<double>();
}

}  // namespace hopc
