#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "hopc/error.hpp"
#include "hopc/types.hpp"

namespace hopc {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

enum class VolumeKind { Spatial, SpatioTemporal };

/// Location of a support-volume member inside its sequence.
struct MemberRef {
  std::uint32_t frame;
  std::uint32_t index;
  friend bool operator==(const MemberRef&, const MemberRef&) = default;
};

/// Points within `radius` of `center`, gathered from frame t (Spatial) or
/// from frames [t - halfwidth, t + halfwidth] clipped to the sequence
/// (SpatioTemporal). Members are ordered by (frame, point index); points
/// repeated across frames are kept once per frame.
struct SupportVolume {
  Point3 center = Point3::Zero();
  std::vector<Point3> members;
  std::vector<MemberRef> refs;
  VolumeKind kind = VolumeKind::Spatial;
  double radius = 0.0;
  int halfwidth = 0;

  std::size_t size() const noexcept { return members.size(); }
  bool empty() const noexcept { return members.empty(); }
};

template <typename Scalar>
struct Covariance {
  Vector3<Scalar> mean;
  Matrix3<Scalar> matrix;
};

/// Raw output of the symmetric 3x3 solver: eigenvalues descending,
/// eigenvectors as unit columns in matching order, signs arbitrary.
template <typename Scalar>
struct EigenDecomposition {
  Vector3<Scalar> values;
  Matrix3<Scalar> vectors;
};

/// Sign-disambiguated, right-handed principal frame of a point set.
template <typename Scalar>
struct EigenBasis {
  Vector3<Scalar> values = Vector3<Scalar>::Zero();
  Matrix3<Scalar> vectors = Matrix3<Scalar>::Identity();
  Vector3<Scalar> mean = Vector3<Scalar>::Zero();
  /// Signed projection mass sum_q sign(o.v)(o.v)^2 per column, after the
  /// sign fix (so non-negative unless the handedness rule flipped it).
  Vector3<Scalar> sign_scores = Vector3<Scalar>::Zero();
  /// Set when some column had an exactly zero projection mass.
  bool degenerate = false;
};

using EigenBasisd = EigenBasis<double>;

/// x / y with x/0 = +inf for x > 0 and 0/0 = 1.
template <typename Scalar>
Scalar eigenratio(Scalar num, Scalar den) {
  if (den > Scalar(0)) return num / den;
  return num > Scalar(0) ? std::numeric_limits<Scalar>::infinity() : Scalar(1);
}

template <typename Scalar>
Covariance<Scalar> covariance(std::span<const Vector3<Scalar>> points) {
  if (points.empty()) throw Error(Errc::EmptySupport, "covariance of an empty support volume");
  const Scalar n = static_cast<Scalar>(points.size());
  Vector3<Scalar> mean = Vector3<Scalar>::Zero();
  for (const auto& q : points) mean += q;
  mean /= n;
  Matrix3<Scalar> c = Matrix3<Scalar>::Zero();
  for (const auto& q : points) {
    const Vector3<Scalar> d = q - mean;
    c.noalias() += d * d.transpose();
  }
  c /= n;
  return {mean, c};
}

template <typename Scalar>
Covariance<Scalar> covariance(const std::vector<Vector3<Scalar>>& points) {
  return covariance(std::span<const Vector3<Scalar>>(points));
}

inline Covariance<double> covariance(const SupportVolume& vol) {
  return covariance(std::span<const Point3>(vol.members));
}

/// Symmetric 3x3 eigen-decomposition, eigenvalues sorted descending.
///
/// Negative eigenvalues down to -1e-9 * max(1, |C|_F) are clamped to zero, and
/// eigenvalues at or below 1e-12 * lambda1 are snapped to zero so that
/// round-off in flat or collinear sets does not masquerade as a real ratio.
template <typename Scalar>
EigenDecomposition<Scalar> eigen3(const Matrix3<Scalar>& c) {
  const Scalar scale = std::max<Scalar>(Scalar(1), c.norm());
  if (!c.allFinite()) throw Error(Errc::InvalidArgument, "covariance has non-finite entries");
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-9) * scale)
    throw Error(Errc::NotSymmetric, "eigen3 input is not symmetric");

  const Matrix3<Scalar> sym = (c + c.transpose()) * Scalar(0.5);
  Eigen::SelfAdjointEigenSolver<Matrix3<Scalar>> solver(sym, Eigen::ComputeEigenvectors);

  EigenDecomposition<Scalar> out;
  // Eigen returns ascending order; a stable descending sort keeps the
  // solver's order among exact ties.
  std::array<int, 3> order{2, 1, 0};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return solver.eigenvalues()(a) > solver.eigenvalues()(b);
  });
  for (int j = 0; j < 3; ++j) {
    Scalar v = solver.eigenvalues()(order[j]);
    if (v < Scalar(0)) {
      if (v < Scalar(-1e-9) * scale)
        throw Error(Errc::NotPositiveSemidefinite, "eigen3 input has a negative eigenvalue");
      v = Scalar(0);
    }
    out.values(j) = v;
    out.vectors.col(j) = solver.eigenvectors().col(order[j]).normalized();
  }
  for (int j = 1; j < 3; ++j)
    if (out.values(j) <= Scalar(1e-12) * out.values(0)) out.values(j) = Scalar(0);
  return out;
}

enum class SignTie {
  KeepInput,  ///< zero projection mass: keep the solver's sign
  Canonical,  ///< zero projection mass: first nonzero component positive
};

/// Fixes eigenvector signs so each points toward the bulk of the
/// projection mass of o = q - origin, then restores right-handedness by
/// flipping the column with the least mass.
template <typename Scalar>
EigenBasis<Scalar> disambiguate(const EigenDecomposition<Scalar>& eig, const Vector3<Scalar>& mean,
                                std::span<const Vector3<Scalar>> members,
                                const Vector3<Scalar>& origin, SignTie tie = SignTie::KeepInput) {
  if (members.empty()) throw Error(Errc::EmptySupport, "disambiguate on an empty support volume");
  EigenBasis<Scalar> basis;
  basis.values = eig.values;
  basis.vectors = eig.vectors;
  basis.mean = mean;

  Vector3<Scalar> score = Vector3<Scalar>::Zero();
  for (const auto& q : members) {
    const Vector3<Scalar> proj = basis.vectors.transpose() * (q - origin);
    for (int j = 0; j < 3; ++j) {
      const Scalar s = proj(j);
      score(j) += s < 0 ? -s * s : s * s;
    }
  }
  for (int j = 0; j < 3; ++j) {
    if (score(j) < Scalar(0)) {
      basis.vectors.col(j) = -basis.vectors.col(j);
      score(j) = -score(j);
    } else if (score(j) == Scalar(0)) {
      basis.degenerate = true;
      if (tie == SignTie::Canonical) {
        auto col = basis.vectors.col(j);
        for (int k = 0; k < 3; ++k) {
          if (col(k) != Scalar(0)) {
            if (col(k) < Scalar(0)) col = -col;
            break;
          }
        }
      }
    }
  }

  const Vector3<Scalar> cross = basis.vectors.col(0).cross(basis.vectors.col(1));
  if (cross.dot(basis.vectors.col(2)) < Scalar(0)) {
    // Least projection mass wins; ties go to the later (smaller-eigenvalue) column.
    int weakest = 2;
    for (int j = 1; j >= 0; --j)
      if (std::abs(score(j)) < std::abs(score(weakest))) weakest = j;
    basis.vectors.col(weakest) = -basis.vectors.col(weakest);
    score(weakest) = -score(weakest);
  }
  basis.sign_scores = score;
  return basis;
}

/// Covariance, eigen-decomposition and sign disambiguation against the
/// volume center in one call.
EigenBasisd analyze(const SupportVolume& vol, SignTie tie = SignTie::KeepInput);

/// True when columns are orthonormal and v1 x v2 = v3, both within `tol`.
template <typename Scalar>
bool is_right_handed_orthonormal(const Matrix3<Scalar>& v, Scalar tol = Scalar(1e-9)) {
  if ((v.transpose() * v - Matrix3<Scalar>::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return (v.col(0).cross(v.col(1)) - v.col(2)).cwiseAbs().maxCoeff() <= tol;
}

/// Per-frame uniform voxel grid over a sequence for radius queries.
/// Keeps a reference to the sequence, which must outlive the index.
class SequenceIndex {
 public:
  SequenceIndex(const PointCloudSequence& seq, double cell_size);

  const PointCloudSequence& sequence() const noexcept { return *seq_; }
  double cell_size() const noexcept { return cell_; }
  std::size_t num_frames() const noexcept { return seq_->num_frames(); }

  /// Appends to `out` the indices of points of `frame` with |q - p| <= r,
  /// in ascending index order.
  void query(std::size_t frame, const Point3& p, double r, std::vector<std::uint32_t>& out) const;

  /// Calls fn(index, point) for every point of `frame` within r of p, in
  /// voxel order (deterministic, but not ascending).
  template <typename Fn>
  void for_each_within(std::size_t frame, const Point3& p, double r, Fn&& fn) const;

 private:
  struct FrameGrid {
    std::vector<std::uint64_t> keys;      // sorted, unique cell keys
    std::vector<std::uint32_t> offsets;   // keys.size() + 1 entries into indices
    std::vector<std::uint32_t> indices;   // point indices grouped by cell
    std::vector<Point3> points;           // the same points, in cell order
  };

  std::uint64_t key(std::int64_t ix, std::int64_t iy, std::int64_t iz) const;

  const PointCloudSequence* seq_;
  double cell_;
  std::vector<FrameGrid> grids_;
};

template <typename Fn>
void SequenceIndex::for_each_within(std::size_t frame, const Point3& p, double r, Fn&& fn) const {
  const auto& g = grids_.at(frame);
  if (g.keys.empty()) return;
  const double r2 = r * r;
  auto cell = [this](double x) { return static_cast<std::int64_t>(std::floor(x / cell_)); };
  const std::int64_t x0 = cell(p.x() - r), x1 = cell(p.x() + r);
  const std::int64_t y0 = cell(p.y() - r), y1 = cell(p.y() + r);
  const std::int64_t z0 = cell(p.z() - r), z1 = cell(p.z() + r);
  for (std::int64_t ix = x0; ix <= x1; ++ix)
    for (std::int64_t iy = y0; iy <= y1; ++iy) {
      // z occupies the low key bits, so one (x, y) column is a key range.
      const std::uint64_t lo = key(ix, iy, z0), hi = key(ix, iy, z1);
      auto it = std::lower_bound(g.keys.begin(), g.keys.end(), lo);
      for (; it != g.keys.end() && *it <= hi; ++it) {
        const auto c = static_cast<std::size_t>(it - g.keys.begin());
        for (std::uint32_t s = g.offsets[c]; s < g.offsets[c + 1]; ++s)
          if ((g.points[s] - p).squaredNorm() <= r2) fn(g.indices[s], g.points[s]);
      }
    }
}

/// Brute-force support volume (reference path).
SupportVolume build_support(const PointCloudSequence& seq, const Point3& p, std::size_t t, double r,
                            int tau, VolumeKind kind);

/// Indexed support volume; identical membership and order to the brute-force path.
SupportVolume build_support(const SequenceIndex& index, const Point3& p, std::size_t t, double r,
                            int tau, VolumeKind kind);

/// Inclusive frame window [t - tau, t + tau] clipped to [0, n_frames).
std::pair<std::size_t, std::size_t> frame_window(std::size_t t, int tau, std::size_t n_frames);

}  // namespace hopc
