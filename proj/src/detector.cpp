#include "hopc/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parallel.hpp"

namespace hopc {

void DetectorParams::validate() const {
  if (!(radius > 0.0)) throw Error(Errc::InvalidArgument, "detector radius must be positive");
  if (!(theta_stk > 1.0)) throw Error(Errc::InvalidArgument, "theta_stk must exceed 1");
  if (!(resolved_nms_radius() < radius)) throw Error(Errc::InvalidArgument, "nms radius must be below r");
  if (nms_frames < 0) throw Error(Errc::InvalidArgument, "nms window must be non-negative");
  if (max_keypoints == 0) throw Error(Errc::InvalidArgument, "max_keypoints must be positive");
  if (quality_floor < 0.0) throw Error(Errc::InvalidArgument, "quality floor must be non-negative");
  if (stride < 1) throw Error(Errc::InvalidArgument, "stride must be at least 1");
  if (max_temporal_scale < 0) throw Error(Errc::InvalidArgument, "max temporal scale must be >= 0");
}

bool eigenratio_ok(const Eigen::Vector3d& lambda, double theta) {
  return eigenratio(lambda(0), lambda(1)) > theta && eigenratio(lambda(1), lambda(2)) > theta;
}

double quality(const HopcVector& a, const HopcVector& b) {
  double eta = 0.0;
  for (int i = 0; i < kHopcSize; ++i) {
    const double s = a(i) + b(i);
    if (s == 0.0) continue;
    const double d = a(i) - b(i);
    eta += d * d / s;
  }
  return 0.5 * eta;
}

double keypoint_quality(const EigenBasisd& spatial, const EigenBasisd& spatiotemporal, const DirectionSet& dirs) {
  Eigen::Matrix3d st_in_s = spatial.vectors.transpose() * spatiotemporal.vectors;
  // An axis that merely reversed sign between the two volumes is a
  // disambiguation tie, not motion.
  for (int j = 0; j < 3; ++j)
    if (st_in_s(j, j) < 0.0) st_in_s.col(j) = -st_in_s.col(j);
  return quality(hopc(spatial.values, Eigen::Matrix3d::Identity(), dirs), hopc(spatiotemporal.values, st_in_s, dirs));
}

std::vector<StkRecord> nms(std::vector<StkRecord> candidates, double radius, int frames,
                           std::size_t max_keypoints) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (candidates[a].quality != candidates[b].quality) return candidates[a].quality > candidates[b].quality;
    return candidates[a].frame < candidates[b].frame;
  });

  const double r2 = radius * radius;
  std::vector<StkRecord> kept;
  for (const auto i : order) {
    if (kept.size() >= max_keypoints) break;
    const auto& c = candidates[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const StkRecord& k) {
      const auto dt = static_cast<long>(k.frame) - static_cast<long>(c.frame);
      return std::abs(dt) <= frames && (k.position - c.position).squaredNorm() <= r2;
    });
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

double round_quality(double eta) {
  if (eta == 0.0 || !std::isfinite(eta)) return eta;
  int e = 0;
  const double m = std::frexp(eta, &e);
  return std::ldexp(std::round(std::ldexp(m, kQualityBits)), e - kQualityBits);
}

bool score_candidate(const SequenceIndex& index, std::size_t frame, std::uint32_t point_index,
                     const DetectorParams& params, int tau_max, const DirectionSet& dirs,
                     const TemporalScaleFn& scale_select, StkRecord& out) {
  const auto& p = index.sequence().frames[frame].points[point_index];
  // The tests are conjunctive; the single-frame one runs first because it
  // is the cheapest and rejects the most candidates.
  const auto spatial = build_support(index, p, frame, params.radius, 0, VolumeKind::Spatial);
  if (spatial.empty()) return false;
  const auto basis_s = analyze(spatial);
  if (!eigenratio_ok(basis_s.values, params.theta_stk)) return false;

  const TemporalScale scale = scale_select(index, p, frame, params.radius, tau_max);
  if (!scale.keep) return false;
  const auto st = build_support(index, p, frame, params.radius, scale.tau, VolumeKind::SpatioTemporal);
  if (st.empty()) return false;
  const auto basis_st = analyze(st);
  if (!eigenratio_ok(basis_st.values, params.theta_stk)) return false;

  const double eta = round_quality(keypoint_quality(basis_s, basis_st, dirs));
  if (eta <= params.quality_floor) return false;

  out.position = p;
  out.frame = static_cast<std::uint32_t>(frame);
  out.point_index = point_index;
  out.tau = scale.tau;
  out.spatial = basis_s;
  out.spatiotemporal = basis_st;
  out.quality = eta;
  return true;
}

std::vector<StkRecord> detect(const PointCloudSequence& seq, const DetectorParams& params) {
  return detect(seq, params, [](const SequenceIndex& index, const Point3& p, std::size_t t, double r,
                                int tau_max) { return temporal_scale(index, p, t, r, tau_max); });
}

std::vector<StkRecord> detect(const PointCloudSequence& seq, const DetectorParams& params,
                              const TemporalScaleFn& scale_select) {
  params.validate();
  if (seq.empty()) throw Error(Errc::EmptySequence, "cannot detect keypoints in an empty sequence");
  const int tau_max = params.max_temporal_scale > 0 ? params.max_temporal_scale
                                                    : default_max_temporal_scale(seq.num_frames());
  const SequenceIndex index(seq, params.radius);
  const DirectionSet dirs = dodecahedron();

  // Candidates are scored per frame in parallel and merged in frame order,
  // so the list handed to NMS does not depend on scheduling.
  std::vector<std::vector<StkRecord>> per_frame(seq.num_frames());
  detail::parallel_for(seq.num_frames(), [&](std::size_t f) {
    StkRecord rec;
    const auto n = seq.frames[f].points.size();
    for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(params.stride))
      if (score_candidate(index, f, static_cast<std::uint32_t>(i), params, tau_max, dirs, scale_select, rec))
        per_frame[f].push_back(rec);
  });
  std::vector<StkRecord> candidates;
  for (auto& frame : per_frame) candidates.insert(candidates.end(), frame.begin(), frame.end());
  return nms(std::move(candidates), params.resolved_nms_radius(), params.nms_frames, params.max_keypoints);
}

}  // namespace hopc
