#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "hopc/detector.hpp"
#include "hopc/geometry.hpp"
#include "hopc/hopc_descriptor.hpp"

namespace hopc {

/// Spatio-temporal cell layout n_x * n_y * n_t.
struct CellGrid {
  int nx = 2;
  int ny = 2;
  int nt = 3;

  int cells() const noexcept { return nx * ny * nt; }
  std::size_t descriptor_size() const noexcept { return static_cast<std::size_t>(cells()) * kHopcSize; }
  void validate() const;
};

/// Cell index of `u` on [lo, hi] split into `n` equal parts. Intervals are
/// half-open except the last; values outside the range clamp to the ends.
int cell_index(double u, double lo, double hi, int n);

/// q' = V^T (q - mu) for every member, using the basis mean and columns.
std::vector<Point3> orient_points(const SupportVolume& vol, const EigenBasisd& basis);

/// HOPC of a neighbourhood basis expressed in a rotated frame, masked by the
/// eigenratio rules: both ratios above theta keep all blocks, only
/// lambda2/lambda3 above keeps block 3, only lambda1/lambda2 above keeps
/// block 1, otherwise zero.
HopcVector masked_hopc(const EigenBasisd& basis, const Eigen::Matrix3d& rotation, double theta,
                       const DirectionSet& dirs);

/// Contribution of one oriented point given its own neighbourhood.
/// An empty neighbourhood contributes nothing.
HopcVector point_contribution(const SupportVolume& nbhd, const Eigen::Matrix3d& rotation, double theta,
                              const DirectionSet& dirs);

struct LocalParams {
  double radius = 0.0;
  CellGrid grid;
  double theta_l = 1.3;
};

/// Computes view-normalized Local HOPC descriptors for keypoints of one
/// sequence. Neighbourhood bases are cached per (frame, point, tau), so
/// describing many keypoints of the same sequence shares work.
class LocalDescriber {
 public:
  LocalDescriber(const SequenceIndex& index, LocalParams params);

  Eigen::VectorXd describe(const StkRecord& stk);
  std::vector<Eigen::VectorXd> describe_all(std::span<const StkRecord> stks);

  std::size_t cache_size() const noexcept { return cache_.size(); }

 private:
  const EigenBasisd& neighbor_basis(MemberRef ref, int tau);

  const SequenceIndex* index_;
  LocalParams params_;
  DirectionSet dirs_;
  std::unordered_map<std::uint64_t, EigenBasisd> cache_;
};

/// One-shot Local HOPC of a keypoint (builds its own cache).
Eigen::VectorXd local_hopc(const StkRecord& stk, const SequenceIndex& index, const LocalParams& params);

/// View-dependent whole-sequence descriptor: spatio-temporal HOPC of every
/// point with a fixed half-window, accumulated over a grid spanning the X/Y
/// bounding box and all frames, each cell L2-normalized.
Eigen::VectorXd holistic_hopc(const PointCloudSequence& seq, const CellGrid& grid, int tau, double radius);

}  // namespace hopc
