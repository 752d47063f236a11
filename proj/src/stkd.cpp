#include "hopc/stkd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace hopc {

namespace {

using Coords = std::array<double, 4>;

bool is_even(const std::array<int, 4>& perm) {
  int inversions = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (perm[i] > perm[j]) ++inversions;
  return inversions % 2 == 0;
}

void expand_family(const Coords& base, bool even_only, std::set<Coords>& out) {
  std::array<int, 4> perm{0, 1, 2, 3};
  do {
    if (even_only && !is_even(perm)) continue;
    Coords c{};
    for (int i = 0; i < 4; ++i) c[i] = base[perm[i]];
    for (int mask = 0; mask < 16; ++mask) {
      Coords s = c;
      bool valid = true;
      for (int i = 0; i < 4; ++i) {
        if (mask & (1 << i)) {
          if (s[i] == 0.0) {
            valid = false;
            break;
          }
          s[i] = -s[i];
        }
      }
      if (valid) out.insert(s);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
}

}  // namespace

Polychoron600 build_polychoron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double inv = 1.0 / phi;
  const double sqrt5 = std::sqrt(5.0);
  struct Family {
    Coords base;
    bool even_only;
  };
  const std::array<Family, 7> families{{
      {{0.0, 0.0, 2.0, 2.0}, false},
      {{1.0, 1.0, 1.0, sqrt5}, false},
      {{inv * inv, phi, phi, phi}, false},
      {{inv, inv, inv, phi * phi}, false},
      {{0.0, inv * inv, 1.0, phi * phi}, true},
      {{0.0, inv, phi, sqrt5}, true},
      {{inv, 1.0, phi, 2.0}, true},
  }};

  Polychoron600 poly;
  std::set<Coords> seen;
  int col = 0;
  for (int f = 0; f < static_cast<int>(families.size()); ++f) {
    std::set<Coords> members;
    expand_family(families[f].base, families[f].even_only, members);
    for (const auto& c : members) {
      if (!seen.insert(c).second) continue;
      if (col >= kPolychoronVertices) throw std::logic_error("120-cell enumeration produced too many vertices");
      poly.vertices.col(col) = Eigen::Vector4d(c[0], c[1], c[2], c[3]);
      poly.family[static_cast<std::size_t>(col)] = f;
      ++col;
    }
  }
  if (col != kPolychoronVertices) throw std::logic_error("120-cell enumeration did not produce 600 vertices");
  return poly;
}

const Polychoron600& polychoron() {
  static const Polychoron600 instance = build_polychoron();
  return instance;
}

int nearest_vertex(const Eigen::Vector4d& p, const Polychoron600& poly) {
  const Eigen::Matrix<double, kPolychoronVertices, 1> proj = poly.vertices.transpose() * p;
  int best = 0;
  for (int i = 1; i < kPolychoronVertices; ++i)
    if (proj(i) > proj(best)) best = i;
  return best;
}

std::vector<Eigen::Vector4d> normalize_4d(std::span<const Eigen::Vector4d> points, bool isotropic) {
  std::vector<Eigen::Vector4d> out(points.begin(), points.end());
  if (out.empty()) return out;
  const double n = static_cast<double>(out.size());
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  for (const auto& p : out) mean += p;
  mean /= n;
  Eigen::Vector4d var = Eigen::Vector4d::Zero();
  for (auto& p : out) {
    p -= mean;
    var += p.cwiseProduct(p);
  }
  var /= n;

  Eigen::Vector4d scale;
  if (isotropic) {
    const double spatial = (var(0) + var(1) + var(2)) / 3.0;
    scale.head<3>().setConstant(spatial);
    scale(3) = var(3);
  } else {
    scale = var;
  }
  for (int k = 0; k < 4; ++k) {
    const double s = scale(k) > 0.0 ? 1.0 / std::sqrt(scale(k)) : 0.0;
    for (auto& p : out) p(k) *= s;
  }
  return out;
}

StkdResult stkd_normalized(std::span<const Eigen::Vector4d> points, std::span<const double> quality,
                           const StkdParams& params) {
  if (points.size() != quality.size()) throw Error(Errc::LengthMismatch, "points and quality differ in length");
  if (params.min_keep < 4) throw Error(Errc::InvalidArgument, "min_keep must be at least 4");
  if (points.size() < params.min_keep)
    throw Error(Errc::TooFewKeypoints, "need at least " + std::to_string(params.min_keep) + " keypoints, got " +
                                           std::to_string(points.size()));
  const std::size_t removal = params.removal_per_step > 0
                                  ? params.removal_per_step
                                  : static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(points.size())));

  // Removal order: lowest quality first, ties by position in the input.
  std::vector<std::size_t> by_quality(points.size());
  std::iota(by_quality.begin(), by_quality.end(), std::size_t{0});
  std::stable_sort(by_quality.begin(), by_quality.end(),
                   [&](std::size_t a, std::size_t b) { return quality[a] < quality[b]; });
  std::vector<bool> alive(points.size(), true);
  std::size_t removed = 0;

  auto spatial_set = [&] {
    std::vector<Eigen::Vector3d> pts;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (alive[i]) pts.push_back(points[i].head<3>());
    return pts;
  };

  StkdResult result;
  std::vector<Eigen::Vector3d> spatial = spatial_set();
  auto cov = covariance<double>(spatial);
  auto eig = eigen3(cov.matrix);
  auto satisfied = [&] {
    return eigenratio(eig.values(0), eig.values(1)) > params.theta_g &&
           eigenratio(eig.values(1), eig.values(2)) > params.theta_g;
  };
  while (!satisfied() && spatial.size() >= removal + params.min_keep) {
    for (std::size_t k = 0; k < removal; ++k) alive[by_quality[removed++]] = false;
    spatial = spatial_set();
    cov = covariance<double>(spatial);
    eig = eigen3(cov.matrix);
    ++result.iterations;
  }
  result.constraints_met = satisfied();
  result.retained = spatial.size();

  const auto basis = disambiguate<double>(eig, cov.mean, spatial, cov.mean, SignTie::Canonical);
  result.basis = basis.vectors;
  const Eigen::Matrix3d rt = basis.vectors.transpose();
  const auto& poly = polychoron();
  result.histogram = Eigen::VectorXd::Zero(kPolychoronVertices);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!alive[i]) continue;
    Eigen::Vector4d aligned;
    aligned.head<3>() = rt * points[i].head<3>();
    aligned(3) = points[i](3);
    result.histogram(nearest_vertex(aligned, poly)) += 1.0;
  }
  if (params.l1_normalize) result.histogram /= result.histogram.sum();
  return result;
}

StkdResult stkd(std::span<const StkRecord> stks, const StkdParams& params) {
  if (stks.size() < std::max<std::size_t>(params.min_keep, 4))
    throw Error(Errc::TooFewKeypoints, "need at least " + std::to_string(params.min_keep) + " keypoints, got " +
                                           std::to_string(stks.size()));
  // Canonical order so that every floating-point reduction is independent
  // of the caller's ordering.
  std::vector<std::size_t> order(stks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) {
    const auto& s = stks[i];
    return std::make_tuple(s.frame, s.position.x(), s.position.y(), s.position.z(), s.quality);
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  std::vector<Eigen::Vector4d> raw;
  std::vector<double> quality;
  raw.reserve(stks.size());
  for (const auto i : order) {
    const auto& s = stks[i];
    raw.emplace_back(s.position.x(), s.position.y(), s.position.z(), static_cast<double>(s.frame));
    quality.push_back(s.quality);
  }
  const auto normalized = normalize_4d(raw, params.isotropic);
  return stkd_normalized(normalized, quality, params);
}

}  // namespace hopc
