#include "hopc/hopc_descriptor.hpp"

#include <array>
#include <cmath>

namespace hopc {

namespace {

constexpr double kThresholdSlack = 1e-12;

}  // namespace

DirectionSet dodecahedron(VertexMode mode) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double inv = 1.0 / phi;
  const std::array<double, 2> sign{1.0, -1.0};

  DirectionSet dirs;
  dirs.mode = mode;
  int col = 0;
  for (double sx : sign)
    for (double sy : sign)
      for (double sz : sign) dirs.directions.col(col++) = Eigen::Vector3d(sx, sy, sz);
  for (double a : sign)
    for (double b : sign) dirs.directions.col(col++) = Eigen::Vector3d(0.0, a * inv, b * phi);
  for (double a : sign)
    for (double b : sign) dirs.directions.col(col++) = Eigen::Vector3d(a * inv, b * phi, 0.0);
  for (double a : sign)
    for (double b : sign) dirs.directions.col(col++) = Eigen::Vector3d(a * phi, 0.0, b * inv);

  if (mode == VertexMode::Normalized) {
    dirs.directions.colwise().normalize();
    dirs.psi = std::sqrt(5.0) / 3.0;
  } else {
    dirs.psi = phi + inv;
  }
  return dirs;
}

BinVector project_quantize(const Eigen::Vector3d& v, const DirectionSet& dirs) {
  if (std::abs(v.norm() - 1.0) > 1e-9) throw Error(Errc::NotUnit, "projected vector is not unit length");
  BinVector b = dirs.directions.transpose() * v;
  for (int z = 0; z < kNumDirections; ++z) b(z) = b(z) <= dirs.psi + kThresholdSlack ? 0.0 : b(z) - dirs.psi;
  return b;
}

HopcVector hopc(const Eigen::Vector3d& values, const Eigen::Matrix3d& vectors,
                const DirectionSet& dirs) {
  HopcVector h = HopcVector::Zero();
  for (int j = 0; j < 3; ++j) {
    if (values(j) <= 0.0) continue;
    const BinVector q = project_quantize(vectors.col(j), dirs);
    const double n = q.norm();
    if (n == 0.0) continue;
    h.segment<kNumDirections>(j * kNumDirections) = (values(j) / n) * q;
  }
  return h;
}

HopcVector hopc(const SupportVolume& vol, const EigenBasisd& basis, const DirectionSet& dirs) {
  if (vol.empty()) throw Error(Errc::EmptySupport, "HOPC of an empty support volume");
  return hopc(basis.values, basis.vectors, dirs);
}

}  // namespace hopc
