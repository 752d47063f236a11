#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hopc/geometry.hpp"
#include "hopc/hopc_descriptor.hpp"
#include "hopc/scale_selection.hpp"

namespace hopc {

/// A detected spatio-temporal keypoint.
struct StkRecord {
  Point3 position = Point3::Zero();
  std::uint32_t frame = 0;
  std::uint32_t point_index = 0;
  /// Selected temporal half-window.
  int tau = 1;
  EigenBasisd spatial;
  EigenBasisd spatiotemporal;
  double quality = 0.0;
};

struct DetectorParams {
  /// Spatial support radius r.
  double radius = 0.0;
  double theta_stk = 1.3;
  /// Suppression radius r'; non-positive selects 0.5 * radius.
  double nms_radius = 0.0;
  /// Suppression half-window tau' in frames.
  int nms_frames = 2;
  std::size_t max_keypoints = 400;
  double quality_floor = 1e-6;
  /// Every stride-th point of each frame is a candidate.
  int stride = 1;
  /// Largest temporal scale tau_m; 0 selects ceil(0.2 * n_frames).
  int max_temporal_scale = 0;

  double resolved_nms_radius() const noexcept { return nms_radius > 0.0 ? nms_radius : 0.5 * radius; }
  void validate() const;
};

/// lambda1/lambda2 > theta and lambda2/lambda3 > theta (x/0 = inf, 0/0 = 1).
bool eigenratio_ok(const Eigen::Vector3d& lambda, double theta);

/// Chi-square style distance 1/2 sum (a-b)^2 / (a+b); zero-sum bins are skipped.
double quality(const HopcVector& spatial, const HopcVector& spatiotemporal);

/// Quality of a candidate: both bases are histogrammed in the spatial
/// eigenframe (V_S^T V_S and V_S^T V_ST), so the result does not depend on
/// the camera orientation. Each spatio-temporal axis is sign-aligned with its
/// spatial counterpart first.
double keypoint_quality(const EigenBasisd& spatial, const EigenBasisd& spatiotemporal, const DirectionSet& dirs);

/// Mantissa bits kept by round_quality.
inline constexpr int kQualityBits = 40;

/// Rounds eta to kQualityBits significant bits. Symmetric body parts give
/// exactly tied qualities; rounding keeps them tied when the same scene is
/// expressed in another frame, so suppression order stays put.
double round_quality(double eta);

/// Greedy suppression in decreasing quality; a candidate is dropped when an
/// accepted keypoint lies within `radius` in space AND within `frames` in
/// time. Ties in quality keep (frame, input order).
std::vector<StkRecord> nms(std::vector<StkRecord> candidates, double radius, int frames,
                           std::size_t max_keypoints);

using TemporalScaleFn =
    std::function<TemporalScale(const SequenceIndex&, const Point3&, std::size_t, double, int)>;

/// Scores a single candidate point. Returns false when it is rejected by
/// scale selection, the eigenratio test or the quality floor.
bool score_candidate(const SequenceIndex& index, std::size_t frame, std::uint32_t point_index,
                     const DetectorParams& params, int tau_max, const DirectionSet& dirs,
                     const TemporalScaleFn& scale_select, StkRecord& out);

std::vector<StkRecord> detect(const PointCloudSequence& seq, const DetectorParams& params);

std::vector<StkRecord> detect(const PointCloudSequence& seq, const DetectorParams& params,
                              const TemporalScaleFn& scale_select);

}  // namespace hopc
