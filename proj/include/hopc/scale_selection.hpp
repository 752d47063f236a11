#pragma once

#include <cstddef>
#include <vector>

#include "hopc/geometry.hpp"

namespace hopc {

struct ScaleParams {
  /// r = sigma * subject height, 0 < sigma < 1.
  double sigma = 0.2;
  /// Largest temporal half-window tried; 0 selects ceil(0.2 * n_frames).
  int max_temporal_scale = 0;
  /// Height is the spread between this percentile of the vertical (y)
  /// coordinate and its complement.
  double height_percentile = 0.99;
};

/// ceil(0.2 * n_frames), at least 1.
int default_max_temporal_scale(std::size_t n_frames);

int resolve_max_temporal_scale(const ScaleParams& params, std::size_t n_frames);

/// Robust vertical extent of the first non-empty frame.
double subject_height(const PointCloudSequence& seq, double percentile = 0.99);

/// Spatial support radius sigma * subject_height.
double spatial_scale(const PointCloudSequence& seq, const ScaleParams& params);

/// lambda2/lambda1 + lambda3/lambda2, or 2 for volumes with fewer than four
/// points or lambda1 = 0.
double scale_objective(const Eigen::Vector3d& eigenvalues, std::size_t n_points);

struct TemporalScale {
  int tau = 1;
  /// False when the minimum sits at the largest scale tried.
  bool keep = false;
  /// Objective for tau = 1..tau_max (index tau - 1).
  std::vector<double> objective;
};

/// Picks the temporal half-window minimizing the eigenratio objective over
/// tau = 1..tau_max; ties (within 1e-12) go to the smallest tau.
TemporalScale temporal_scale(const SequenceIndex& index, const Point3& p, std::size_t t, double r,
                             int tau_max);

TemporalScale temporal_scale(const PointCloudSequence& seq, const Point3& p, std::size_t t, double r,
                             int tau_max);

}  // namespace hopc
