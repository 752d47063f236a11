#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hopc/detector.hpp"

namespace hopc {

inline constexpr int kPolychoronVertices = 600;

/// The 600 vertices of the 120-cell, each of squared norm 8, grouped in
/// seven coordinate families of sizes 24, 64, 64, 64, 96, 96, 192.
struct Polychoron600 {
  static constexpr std::array<int, 7> kFamilySizes{24, 64, 64, 64, 96, 96, 192};

  Eigen::Matrix<double, 4, kPolychoronVertices> vertices;
  std::array<int, kPolychoronVertices> family{};
};

/// Enumerates the vertex set from its coordinate families. Throws
/// std::logic_error if the enumeration does not produce 600 vertices.
Polychoron600 build_polychoron();

/// Shared immutable instance.
const Polychoron600& polychoron();

/// Vertex with the largest projection w^T p; ties go to the lowest index.
int nearest_vertex(const Eigen::Vector4d& p, const Polychoron600& poly);

struct StkdParams {
  double theta_g = 1.3;
  /// STKs removed per refinement step; 0 selects ceil(0.05 * n).
  std::size_t removal_per_step = 0;
  /// Refinement never drops below this many STKs.
  std::size_t min_keep = 10;
  /// Normalize x, y, z by one shared spread instead of per axis.
  bool isotropic = false;
  bool l1_normalize = false;
};

struct StkdResult {
  Eigen::VectorXd histogram;
  int iterations = 0;
  std::size_t retained = 0;
  bool constraints_met = false;
  Eigen::Matrix3d basis = Eigen::Matrix3d::Identity();
};

/// Zero-mean, unit-variance normalization of (x, y, z, t). A component with
/// zero variance is left at zero. In isotropic mode x, y, z share the RMS
/// spread of the centered spatial part.
std::vector<Eigen::Vector4d> normalize_4d(std::span<const Eigen::Vector4d> points, bool isotropic);

/// Refinement, alignment and binning of already-normalized 4D points.
/// `quality` drives which points refinement removes first.
StkdResult stkd_normalized(std::span<const Eigen::Vector4d> points, std::span<const double> quality,
                           const StkdParams& params);

/// 600-bin distribution descriptor of a keypoint set. The result does not
/// depend on the order of `stks`.
StkdResult stkd(std::span<const StkRecord> stks, const StkdParams& params);

}  // namespace hopc
