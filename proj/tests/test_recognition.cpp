#include <doctest.h>

#include <map>

#include <Eigen/Eigenvalues>

#include "hopc/recognition.hpp"

using namespace hopc;

namespace {

SampleMatrix random_matrix(Rng& rng, int rows, int cols) {
  SampleMatrix m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// The textbook formula, written out once more with no shared code.
double fscore_brute(const std::vector<double>& x, const std::vector<int>& y) {
  std::map<int, std::vector<double>> by;
  for (std::size_t i = 0; i < x.size(); ++i) by[y[i]].push_back(x[i]);
  double all = 0.0;
  for (double v : x) all += v;
  all /= static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (const auto& [c, v] : by) {
    double m = 0.0;
    for (double e : v) m += e;
    m /= static_cast<double>(v.size());
    num += (m - all) * (m - all);
    double s = 0.0;
    for (double e : v) s += (e - m) * (e - m);
    den += s / static_cast<double>(v.size() - 1);
  }
  return num / den;
}

}  // namespace

TEST_SUITE("recognition") {

TEST_CASE("k-means with one cluster is the mean") {
  Rng rng(1);
  const auto data = random_matrix(rng, 30, 4);
  const auto cb = kmeans(data, 1, 5);
  CHECK((cb.centroids.row(0) - data.colwise().mean()).norm() < 1e-12);
}

TEST_CASE("k-means with K = N puts every sample in its own cluster") {
  Rng rng(2);
  const auto data = random_matrix(rng, 8, 3);
  const auto cb = kmeans(data, 8, 5);
  CHECK(cb.inertia == 0.0);
  for (int i = 0; i < 8; ++i) {
    double best = 1e300;
    for (int c = 0; c < 8; ++c) best = std::min(best, (cb.centroids.row(c) - data.row(i)).squaredNorm());
    CHECK(best == 0.0);
  }
}

TEST_CASE("k-means inertia never increases and the seed fixes the result") {
  Rng rng(3);
  const auto data = random_matrix(rng, 200, 5);
  const auto a = kmeans(data, 7, 42);
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i)
    CHECK(a.inertia_history[i] <= a.inertia_history[i - 1] * (1 + 1e-12));
  const auto b = kmeans(data, 7, 42);
  CHECK(a.centroids == b.centroids);
  CHECK_THROWS_WITH(kmeans(data.topRows(3), 7, 42), doctest::Contains("TooFewSamples"));
}

TEST_CASE("bag of words") {
  Codebook cb;
  cb.centroids = SampleMatrix(3, 2);
  cb.centroids << 0, 0, 1, 0, 0, 1;
  cb.keep = {1, 1, 1};
  CHECK(bow_histogram(cb.centroids, cb) == Eigen::Vector3d(1, 1, 1));
  CHECK(bow_histogram(SampleMatrix(0, 2), cb) == Eigen::Vector3d::Zero());

  SampleMatrix tie(2, 2);
  tie << 0.5, 0.5,  // equidistant to all three
      0.8, 0.8;     // equidistant to codewords 1 and 2
  CHECK(bow_histogram(tie, cb) == Eigen::Vector3d(1, 1, 0));

  cb.keep = {1, 0, 1};  // dropped codewords lose their votes
  const auto h = bow_histogram(cb.centroids, cb);
  CHECK(h.size() == 2);
  CHECK(h.sum() == 3.0);
}

TEST_CASE("fscore worked example and conventions") {
  const std::vector<double> x{1, 3, 5, 7};
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(fscore(x, y) == 2.0);
  CHECK(fscore(std::vector<double>{1, 3, 1, 3}, y) == 0.0);
  CHECK(std::isinf(fscore(std::vector<double>{1, 1, 5, 5}, y)));
  CHECK(fscore(std::vector<double>{2, 2, 2, 2}, y) == 0.0);
  CHECK_THROWS_WITH(fscore(std::vector<double>{1, 2, 3}, std::vector<int>{0, 0, 1}),
                    doctest::Contains("DegenerateClass"));
}

TEST_CASE("fscore matches the formula on random columns") {
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const int n = 6 + static_cast<int>(rng.index(20));
    std::vector<double> x;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
      y.push_back(i % 3);
      x.push_back(rng.normal() + (i % 3));
    }
    const double ref = fscore_brute(x, y);
    CHECK(std::abs(fscore(x, y) - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("feature selection") {
  const std::vector<double> s{0.5, 3.0, 1.0, 3.0};
  CHECK(select_features(s, 1.0) == std::vector<std::uint8_t>{1, 1, 1, 1});
  CHECK(select_features(s, 0.5) == std::vector<std::uint8_t>{0, 1, 0, 1});
  CHECK(select_features(std::vector<double>(4, 1.0), 0.5) == std::vector<std::uint8_t>{1, 1, 0, 0});
  std::vector<double> many(1500);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = static_cast<double>(i % 97);
  const auto keep = select_features(many, 0.98);
  CHECK(std::count(keep.begin(), keep.end(), 1) == 1470);
  CHECK(select_features_above(s, 0.9) == std::vector<std::uint8_t>{0, 1, 1, 1});
  CHECK(select_features_above(s, 10.0) == std::vector<std::uint8_t>{0, 1, 0, 0});
}

TEST_CASE("histogram intersection kernel") {
  const Eigen::Vector2d a(1, 2), b(2, 1);
  CHECK(hik(a, b) == 2.0);
  CHECK(hik(a, a) == 3.0);
  CHECK(hik(a, Eigen::Vector2d::Zero()) == 0.0);
  CHECK_THROWS_AS(hik(a, Eigen::Vector3d(1, 1, 1)), Error);

  Rng rng(5);
  SampleMatrix x(25, 10);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  const Eigen::MatrixXd g = hik_gram(x, x);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("classifier on separable and conflicting data") {
  // Two classes with disjoint histogram supports.
  Rng rng(6);
  SampleMatrix x = SampleMatrix::Zero(20, 6);
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    const int c = i % 2;
    for (int j = 0; j < 3; ++j) x(i, 3 * c + j) = rng.uniform() + 0.1;
    y.push_back(c == 0 ? 4 : 9);
  }
  const auto model = train(x, y, {});
  CHECK(model.classes == std::vector<int>{4, 9});
  for (int i = 0; i < 20; ++i) CHECK(predict(model, x.row(i).transpose()) == y[static_cast<std::size_t>(i)]);

  SampleMatrix dup(4, 2);
  dup << 1, 0, 1, 0, 0, 1, 0, 1;
  const std::vector<int> conflict{0, 1, 1, 0};
  const auto m2 = train(dup, conflict, {});
  int correct = 0;
  for (int i = 0; i < 4; ++i) correct += predict(m2, dup.row(i).transpose()) == conflict[static_cast<std::size_t>(i)];
  CHECK(correct < 4);

  CHECK_THROWS_WITH(train(x, std::vector<int>(20, 1), {}), doctest::Contains("DegenerateTraining"));
}

TEST_CASE("three-class one-vs-rest and tie rule") {
  SampleMatrix x = SampleMatrix::Zero(9, 3);
  std::vector<int> y;
  for (int i = 0; i < 9; ++i) {
    x(i, i % 3) = 1.0 + 0.1 * (i / 3);
    y.push_back(i % 3);
  }
  const auto model = train(x, y, {});
  for (int i = 0; i < 9; ++i) CHECK(predict(model, x.row(i).transpose()) == i % 3);
  KernelModel flat = model;
  flat.coef.setZero();
  flat.bias.setZero();
  CHECK(predict(flat, x.row(5).transpose()) == 0);
}

TEST_CASE("training is deterministic") {
  Rng rng(7);
  SampleMatrix x(30, 8);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) y.push_back(i % 3);
  const auto a = train(x, y, {}), b = train(x, y, {});
  CHECK(a.coef == b.coef);
  CHECK(a.bias == b.bias);
}

}  // TEST_SUITE
