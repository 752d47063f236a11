#include "hopc/local_descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hopc {

void CellGrid::validate() const {
  if (nx < 1 || ny < 1 || nt < 1) throw Error(Errc::InvalidArgument, "cell grid dimensions must be positive");
}

int cell_index(double u, double lo, double hi, int n) {
  if (!(hi > lo)) return 0;
  const auto c = static_cast<long>(std::floor((u - lo) / (hi - lo) * n));
  return static_cast<int>(std::clamp<long>(c, 0, n - 1));
}

std::vector<Point3> orient_points(const SupportVolume& vol, const EigenBasisd& basis) {
  if (!is_right_handed_orthonormal(basis.vectors))
    throw Error(Errc::InvalidBasis, "orientation basis is not an orthonormal right-handed frame");
  const Eigen::Matrix3d rt = basis.vectors.transpose();
  std::vector<Point3> out;
  out.reserve(vol.size());
  for (const auto& q : vol.members) out.emplace_back(rt * (q - basis.mean));
  return out;
}

HopcVector masked_hopc(const EigenBasisd& basis, const Eigen::Matrix3d& rotation, double theta,
                       const DirectionSet& dirs) {
  const bool first = eigenratio(basis.values(0), basis.values(1)) > theta;
  const bool second = eigenratio(basis.values(1), basis.values(2)) > theta;
  if (!first && !second) return HopcVector::Zero();
  HopcVector h = hopc(basis.values, rotation * basis.vectors, dirs);
  if (!first) h.head<2 * kNumDirections>().setZero();
  if (!second) h.tail<2 * kNumDirections>().setZero();
  return h;
}

HopcVector point_contribution(const SupportVolume& nbhd, const Eigen::Matrix3d& rotation, double theta,
                              const DirectionSet& dirs) {
  if (nbhd.empty()) return HopcVector::Zero();
  return masked_hopc(analyze(nbhd), rotation, theta, dirs);
}

LocalDescriber::LocalDescriber(const SequenceIndex& index, LocalParams params)
    : index_(&index), params_(params), dirs_(dodecahedron()) {
  params_.grid.validate();
  if (!(params_.radius > 0.0)) throw Error(Errc::InvalidArgument, "local descriptor radius must be positive");
}

const EigenBasisd& LocalDescriber::neighbor_basis(MemberRef ref, int tau) {
  const std::uint64_t key = (static_cast<std::uint64_t>(ref.frame) << 44) |
                            (static_cast<std::uint64_t>(ref.index) << 12) |
                            static_cast<std::uint64_t>(tau & 0xfff);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const Point3& q = index_->sequence().frames[ref.frame].points[ref.index];
  // Never empty: q is its own neighbour.
  const auto nbhd = build_support(*index_, q, ref.frame, params_.radius, tau, VolumeKind::SpatioTemporal);
  return cache_.emplace(key, analyze(nbhd)).first->second;
}

Eigen::VectorXd LocalDescriber::describe(const StkRecord& stk) {
  const auto& grid = params_.grid;
  const double r = params_.radius;
  const auto vol = build_support(*index_, stk.position, stk.frame, r, stk.tau, VolumeKind::SpatioTemporal);
  const auto oriented = orient_points(vol, stk.spatial);
  const Eigen::Matrix3d rotation = stk.spatial.vectors.transpose();

  Eigen::VectorXd desc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.descriptor_size()));
  const double t_lo = static_cast<double>(stk.frame) - stk.tau;
  const double t_hi = static_cast<double>(stk.frame) + stk.tau;
  for (std::size_t i = 0; i < vol.size(); ++i) {
    const int cx = cell_index(oriented[i].x(), -r, r, grid.nx);
    const int cy = cell_index(oriented[i].y(), -r, r, grid.ny);
    const int ct = cell_index(static_cast<double>(vol.refs[i].frame), t_lo, t_hi, grid.nt);
    const int cell = cx + grid.nx * (cy + grid.ny * ct);
    const auto& basis = neighbor_basis(vol.refs[i], stk.tau);
    desc.segment<kHopcSize>(cell * kHopcSize) += masked_hopc(basis, rotation, params_.theta_l, dirs_);
  }
  for (int c = 0; c < grid.cells(); ++c) {
    auto block = desc.segment<kHopcSize>(c * kHopcSize);
    const double n = block.norm();
    if (n > 0.0) block /= n;
  }
  return desc;
}

std::vector<Eigen::VectorXd> LocalDescriber::describe_all(std::span<const StkRecord> stks) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(stks.size());
  for (const auto& s : stks) out.push_back(describe(s));
  return out;
}

Eigen::VectorXd local_hopc(const StkRecord& stk, const SequenceIndex& index, const LocalParams& params) {
  LocalDescriber describer(index, params);
  return describer.describe(stk);
}

Eigen::VectorXd holistic_hopc(const PointCloudSequence& seq, const CellGrid& grid, int tau, double radius) {
  grid.validate();
  if (seq.empty()) throw Error(Errc::EmptySequence, "holistic descriptor of an empty sequence");
  if (tau < 0) throw Error(Errc::InvalidArgument, "temporal scale must be non-negative");

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& f : seq.frames)
    for (const auto& p : f.points) {
      x_lo = std::min(x_lo, p.x());
      x_hi = std::max(x_hi, p.x());
      y_lo = std::min(y_lo, p.y());
      y_hi = std::max(y_hi, p.y());
    }

  const SequenceIndex index(seq, radius);
  const DirectionSet dirs = dodecahedron();
  const double t_hi = static_cast<double>(seq.num_frames() - 1);
  Eigen::VectorXd desc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.descriptor_size()));
  for (std::size_t f = 0; f < seq.num_frames(); ++f) {
    const int ct = cell_index(static_cast<double>(f), 0.0, t_hi, grid.nt);
    for (const auto& p : seq.frames[f].points) {
      const auto vol = build_support(index, p, f, radius, tau, VolumeKind::SpatioTemporal);
      const int cx = cell_index(p.x(), x_lo, x_hi, grid.nx);
      const int cy = cell_index(p.y(), y_lo, y_hi, grid.ny);
      const int cell = cx + grid.nx * (cy + grid.ny * ct);
      desc.segment<kHopcSize>(cell * kHopcSize) += hopc(vol, analyze(vol), dirs);
    }
  }
  for (int c = 0; c < grid.cells(); ++c) {
    auto block = desc.segment<kHopcSize>(c * kHopcSize);
    const double n = block.norm();
    if (n > 0.0) block /= n;
  }
  return desc;
}

}  // namespace hopc
