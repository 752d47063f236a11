#include "hopc/recognition.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace hopc {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = uniform();
  while (u <= 0.0) u = uniform();
  const double v = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u));
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  spare_ = mag * std::sin(kTwoPi * v);
  has_spare_ = true;
  return mag * std::cos(kTwoPi * v);
}

std::size_t Codebook::kept() const noexcept {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
}

namespace {

// Squared distances of every row of `data` to every centroid, via the
// expansion |x|^2 - 2 x.c + |c|^2 (clamped at 0).
Eigen::MatrixXd pairwise_sq(const SampleMatrix& data, const SampleMatrix& centroids) {
  const Eigen::VectorXd xn = data.rowwise().squaredNorm();
  const Eigen::VectorXd cn = centroids.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * (data * centroids.transpose());
  d.colwise() += xn;
  d.rowwise() += cn.transpose();
  return d.cwiseMax(0.0);
}

}  // namespace

Codebook kmeans(const SampleMatrix& data, std::size_t k, std::uint64_t seed, int max_iter) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (k == 0) throw Error(Errc::InvalidArgument, "k-means needs k >= 1");
  if (n < k) throw Error(Errc::TooFewSamples, "k-means needs at least k samples");
  const Eigen::Index dim = data.cols();
  Rng rng(seed);

  // k-means++ seeding.
  SampleMatrix centroids(static_cast<Eigen::Index>(k), dim);
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.index(n);
  centroids.row(0) = data.row(static_cast<Eigen::Index>(first));
  chosen[first] = true;
  Eigen::VectorXd d2(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) d2(static_cast<Eigen::Index>(i)) = (data.row(static_cast<Eigen::Index>(i)) - centroids.row(0)).squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    const double total = d2.sum();
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = d2(static_cast<Eigen::Index>(i));
        if (w <= 0.0) continue;
        acc += w;
        pick = i;
        if (acc > target) break;
      }
    }
    if (pick == n) {
      // Remaining points coincide with chosen centroids.
      pick = 0;
      while (chosen[pick]) ++pick;
    }
    chosen[pick] = true;
    centroids.row(static_cast<Eigen::Index>(c)) = data.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      d2(ii) = std::min(d2(ii), (data.row(ii) - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm());
    }
  }

  Codebook cb;
  cb.seed = seed;
  std::vector<std::size_t> assign(n, k);
  std::vector<double> dist(n, 0.0);
  for (int iter = 0; iter < std::max(max_iter, 1); ++iter) {
    const Eigen::MatrixXd d = pairwise_sq(data, centroids);
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      Eigen::Index best = 0;
      d.row(ii).minCoeff(&best);
      const auto b = static_cast<std::size_t>(best);
      if (b != assign[i]) changed = true;
      assign[i] = b;
      dist[i] = (data.row(ii) - centroids.row(best)).squaredNorm();
      inertia += dist[i];
    }
    cb.inertia_history.push_back(inertia);
    cb.iterations = iter + 1;
    if (!changed) break;

    SampleMatrix sums = SampleMatrix::Zero(static_cast<Eigen::Index>(k), dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(assign[i])) += data.row(static_cast<Eigen::Index>(i));
      ++counts[assign[i]];
    }
    std::vector<bool> donor(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      if (counts[c] > 0) {
        centroids.row(cc) = sums.row(cc) / static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (!donor[i] && (far == n || dist[i] > dist[far])) far = i;
      donor[far] = true;
      dist[far] = 0.0;
      centroids.row(cc) = data.row(static_cast<Eigen::Index>(far));
    }
  }
  cb.centroids = std::move(centroids);
  cb.inertia = cb.inertia_history.back();
  cb.keep.assign(k, 1);
  return cb;
}

Eigen::VectorXd bow_histogram(const SampleMatrix& descriptors, const Codebook& codebook) {
  std::vector<Eigen::Index> kept;
  for (std::size_t c = 0; c < codebook.size(); ++c)
    if (codebook.keep.empty() || codebook.keep[c]) kept.push_back(static_cast<Eigen::Index>(c));
  if (kept.empty()) throw Error(Errc::InvalidArgument, "codebook keeps no codewords");
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kept.size()));
  if (descriptors.rows() == 0) return hist;
  if (descriptors.cols() != codebook.centroids.cols())
    throw Error(Errc::LengthMismatch, "descriptor dimension does not match the codebook");
  for (Eigen::Index i = 0; i < descriptors.rows(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < kept.size(); ++j) {
      const double d = (descriptors.row(i) - codebook.centroids.row(kept[j])).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    hist(static_cast<Eigen::Index>(best)) += 1.0;
  }
  return hist;
}

double fscore(std::span<const double> values, std::span<const int> labels) {
  if (values.size() != labels.size()) throw Error(Errc::LengthMismatch, "values and labels differ in length");
  std::map<int, std::vector<double>> groups;
  for (std::size_t i = 0; i < values.size(); ++i) groups[labels[i]].push_back(values[i]);
  if (groups.size() < 2) throw Error(Errc::DegenerateClass, "F-score needs at least two classes");
  for (const auto& [label, xs] : groups)
    if (xs.size() < 2)
      throw Error(Errc::DegenerateClass, "class " + std::to_string(label) + " has fewer than two samples");

  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double between = 0.0;
  double within = 0.0;
  for (const auto& [label, xs] : groups) {
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    between += (m - mean) * (m - mean);
    double ss = 0.0;
    for (const double x : xs) ss += (x - m) * (x - m);
    within += ss / static_cast<double>(xs.size() - 1);
  }
  if (within > 0.0) return between / within;
  return between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

std::vector<std::uint8_t> select_features(std::span<const double> scores, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw Error(Errc::InvalidArgument, "keep fraction must lie in (0, 1]");
  const std::size_t n = scores.size();
  const auto count = std::min(
      n, static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n) - 1e-9)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::uint8_t> keep(n, 0);
  for (std::size_t i = 0; i < count; ++i) keep[order[i]] = 1;
  return keep;
}

std::vector<std::uint8_t> select_features_above(std::span<const double> scores, double threshold) {
  std::vector<std::uint8_t> keep(scores.size(), 0);
  std::size_t best = 0;
  bool any = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > threshold) {
      keep[i] = 1;
      any = true;
    }
    if (scores[i] > scores[best]) best = i;
  }
  if (!any && !scores.empty()) keep[best] = 1;
  return keep;
}

double hik(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "histogram lengths differ");
  return x.cwiseMin(y).sum();
}

Eigen::MatrixXd hik_gram(const SampleMatrix& a, const SampleMatrix& b) {
  if (a.cols() != b.cols()) throw Error(Errc::LengthMismatch, "histogram lengths differ");
  Eigen::MatrixXd g(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) g(i, j) = a.row(i).cwiseMin(b.row(j)).sum();
  return g;
}

BinarySvm solve_binary(const Eigen::MatrixXd& gram, std::span<const int> y, const SmoParams& params) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (gram.rows() != n || gram.cols() != n) throw Error(Errc::LengthMismatch, "Gram matrix size mismatch");
  if (!(params.c > 0.0)) throw Error(Errc::InvalidArgument, "C must be positive");
  constexpr double kTau = 1e-12;
  const double c = params.c;

  auto yi = [&](Eigen::Index i) { return static_cast<double>(y[static_cast<std::size_t>(i)]); };
  auto q = [&](Eigen::Index i, Eigen::Index j) { return yi(i) * yi(j) * gram(i, j); };
  BinarySvm out;
  out.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd& a = out.alpha;
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
  const Eigen::VectorXd qd = gram.diagonal();

  auto upper = [&](Eigen::Index i) { return a(i) >= c; };
  auto lower = [&](Eigen::Index i) { return a(i) <= 0.0; };

  while (out.iterations < params.max_iterations) {
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (yi(t) > 0) {
        if (!upper(t) && -grad(t) >= gmax) {
          gmax = -grad(t);
          i = t;
        }
      } else if (!lower(t) && grad(t) >= gmax) {
        gmax = grad(t);
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    double best_obj = std::numeric_limits<double>::infinity();
    if (i >= 0) {
      for (Eigen::Index t = 0; t < n; ++t) {
        if (yi(t) > 0) {
          if (lower(t)) continue;
          const double diff = gmax + grad(t);
          gmax2 = std::max(gmax2, grad(t));
          if (diff > 0) {
            const double quad = qd(i) + qd(t) - 2.0 * yi(i) * q(i, t);
            const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
            if (obj <= best_obj) {
              best_obj = obj;
              j = t;
            }
          }
        } else {
          if (upper(t)) continue;
          const double diff = gmax - grad(t);
          gmax2 = std::max(gmax2, -grad(t));
          if (diff > 0) {
            const double quad = qd(i) + qd(t) + 2.0 * yi(i) * q(i, t);
            const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
            if (obj <= best_obj) {
              best_obj = obj;
              j = t;
            }
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < params.tolerance) {
      out.converged = true;
      break;
    }
    ++out.iterations;

    const double old_i = a(i), old_j = a(j);
    const double qij = q(i, j);
    if (yi(i) != yi(j)) {
      double quad = qd(i) + qd(j) + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = a(i) - a(j);
      a(i) += delta;
      a(j) += delta;
      if (diff > 0) {
        if (a(j) < 0) {
          a(j) = 0;
          a(i) = diff;
        }
      } else if (a(i) < 0) {
        a(i) = 0;
        a(j) = -diff;
      }
      if (diff > 0) {
        if (a(i) > c) {
          a(i) = c;
          a(j) = c - diff;
        }
      } else if (a(j) > c) {
        a(j) = c;
        a(i) = c + diff;
      }
    } else {
      double quad = qd(i) + qd(j) - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = a(i) + a(j);
      a(i) -= delta;
      a(j) += delta;
      if (sum > c) {
        if (a(i) > c) {
          a(i) = c;
          a(j) = sum - c;
        }
      } else if (a(j) < 0) {
        a(j) = 0;
        a(i) = sum;
      }
      if (sum > c) {
        if (a(j) > c) {
          a(j) = c;
          a(i) = sum - c;
        }
      } else if (a(i) < 0) {
        a(i) = 0;
        a(j) = sum;
      }
    }
    const double di = a(i) - old_i, dj = a(j) - old_j;
    for (Eigen::Index t = 0; t < n; ++t) grad(t) += q(t, i) * di + q(t, j) * dj;
  }

  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yi(t) * grad(t);
    if (upper(t)) {
      if (yi(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (yi(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  out.rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  return out;
}

KernelModel train(const SampleMatrix& samples, std::span<const int> labels, const SmoParams& params) {
  if (static_cast<std::size_t>(samples.rows()) != labels.size())
    throw Error(Errc::LengthMismatch, "samples and labels differ in length");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw Error(Errc::DegenerateTraining, "training needs at least two classes");

  SampleMatrix x = samples;
  round_to_float(x);
  const Eigen::MatrixXd gram = hik_gram(x, x);
  const auto n = x.rows();

  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()), n);
  Eigen::VectorXd bias(static_cast<Eigen::Index>(classes.size()));
  std::vector<int> y(labels.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == classes[c] ? 1 : -1;
    const BinarySvm svm = solve_binary(gram, y, params);
    for (Eigen::Index i = 0; i < n; ++i)
      coef(static_cast<Eigen::Index>(c), i) = y[static_cast<std::size_t>(i)] * svm.alpha(i);
    bias(static_cast<Eigen::Index>(c)) = -svm.rho;
  }

  std::vector<Eigen::Index> used;
  for (Eigen::Index i = 0; i < n; ++i)
    if ((coef.col(i).array() != 0.0).any()) used.push_back(i);

  KernelModel model;
  model.classes = classes;
  model.c = params.c;
  model.support.resize(static_cast<Eigen::Index>(used.size()), x.cols());
  model.coef.resize(coef.rows(), static_cast<Eigen::Index>(used.size()));
  for (std::size_t s = 0; s < used.size(); ++s) {
    model.support.row(static_cast<Eigen::Index>(s)) = x.row(used[s]);
    model.coef.col(static_cast<Eigen::Index>(s)) = coef.col(used[s]);
  }
  model.bias = bias;
  round_to_float(model.coef);
  round_to_float(model.bias);
  return model;
}

Eigen::VectorXd decision_scores(const KernelModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.support.cols() && model.support.rows() > 0)
    throw Error(Errc::LengthMismatch, "descriptor dimension does not match the model");
  Eigen::VectorXd k(model.support.rows());
  for (Eigen::Index s = 0; s < model.support.rows(); ++s) k(s) = model.support.row(s).transpose().cwiseMin(x).sum();
  Eigen::VectorXd scores = model.bias;
  for (Eigen::Index c = 0; c < model.coef.rows(); ++c)
    for (Eigen::Index s = 0; s < model.coef.cols(); ++s) scores(c) += model.coef(c, s) * k(s);
  return scores;
}

int predict(const KernelModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd* scores) {
  const Eigen::VectorXd s = decision_scores(model, x);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < s.size(); ++c)
    if (s(c) > s(best)) best = c;
  if (scores) *scores = s;
  return model.classes[static_cast<std::size_t>(best)];
}

}  // namespace hopc
