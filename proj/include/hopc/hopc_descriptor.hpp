#pragma once

#include <Eigen/Core>

#include "hopc/geometry.hpp"

namespace hopc {

inline constexpr int kNumDirections = 20;
inline constexpr int kHopcSize = 3 * kNumDirections;

using BinVector = Eigen::Matrix<double, kNumDirections, 1>;
using HopcVector = Eigen::Matrix<double, kHopcSize, 1>;

enum class VertexMode {
  Normalized,  ///< unit vertices, psi = sqrt(5)/3
  Raw,         ///< vertices of norm sqrt(3), psi = phi + 1/phi = sqrt(5)
};

/// Histogram bin directions: the 20 vertices of a regular dodecahedron.
///
/// Column order is fixed: the 8 cube vertices (+-1,+-1,+-1), then
/// (0,+-1/phi,+-phi), (+-1/phi,+-phi,0), (+-phi,0,+-1/phi). Within each family
/// signs run lexicographically with '+' before '-', first coordinate slowest.
/// Column 0 is (1,1,1) and its antipode (-1,-1,-1) is column 7.
struct DirectionSet {
  Eigen::Matrix<double, 3, kNumDirections> directions;
  /// Dot product between adjacent vertices; the quantization threshold.
  double psi = 0.0;
  VertexMode mode = VertexMode::Normalized;
};

DirectionSet dodecahedron(VertexMode mode = VertexMode::Normalized);

/// b = U^T v, then b(z) <- max(b(z) - psi, 0). Projections within 1e-12 of
/// psi count as "at the threshold" and quantize to zero.
BinVector project_quantize(const Eigen::Vector3d& v, const DirectionSet& dirs);

/// Concatenates lambda_j * q_j / |q_j| for the three columns of `vectors`
/// (q_j = project_quantize(v_j)); blocks with q_j = 0 or lambda_j = 0 are zero.
HopcVector hopc(const Eigen::Vector3d& values, const Eigen::Matrix3d& vectors,
                const DirectionSet& dirs);

/// HOPC of a support volume with its disambiguated basis.
HopcVector hopc(const SupportVolume& vol, const EigenBasisd& basis, const DirectionSet& dirs);

}  // namespace hopc
