#include "hopc/scale_selection.hpp"

#include <algorithm>
#include <cmath>

namespace hopc {

int default_max_temporal_scale(std::size_t n_frames) {
  return std::max(1, static_cast<int>(std::ceil(0.2 * static_cast<double>(n_frames) - 1e-9)));
}

int resolve_max_temporal_scale(const ScaleParams& params, std::size_t n_frames) {
  return params.max_temporal_scale > 0 ? params.max_temporal_scale : default_max_temporal_scale(n_frames);
}

namespace {

// Linear interpolation between order statistics.
double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct Moments {
  double n = 0.0;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();

  Moments& operator+=(const Moments& o) {
    n += o.n;
    sum += o.sum;
    outer += o.outer;
    return *this;
  }
};

}  // namespace

double subject_height(const PointCloudSequence& seq, double q) {
  if (!(q > 0.5 && q <= 1.0)) throw Error(Errc::InvalidArgument, "height percentile must be in (0.5, 1]");
  for (const auto& frame : seq.frames) {
    if (frame.points.empty()) continue;
    std::vector<double> ys;
    ys.reserve(frame.points.size());
    for (const auto& p : frame.points) ys.push_back(p.y());
    return percentile(ys, q) - percentile(std::move(ys), 1.0 - q);
  }
  throw Error(Errc::EmptySequence, "every frame is empty");
}

double spatial_scale(const PointCloudSequence& seq, const ScaleParams& params) {
  if (!(params.sigma > 0.0 && params.sigma < 1.0))
    throw Error(Errc::BadSigma, "sigma must lie in (0, 1)");
  const double r = params.sigma * subject_height(seq, params.height_percentile);
  if (!(r > 0.0)) throw Error(Errc::EmptySequence, "subject has zero vertical extent");
  return r;
}

double scale_objective(const Eigen::Vector3d& lambda, std::size_t n_points) {
  if (n_points < 4 || lambda(0) <= 0.0) return 2.0;
  return lambda(1) / lambda(0) + eigenratio(lambda(2), lambda(1));
}

TemporalScale temporal_scale(const SequenceIndex& index, const Point3& p, std::size_t t, double r,
                             int tau_max) {
  if (tau_max < 1) throw Error(Errc::InvalidArgument, "tau_max must be at least 1");
  if (!(r > 0.0)) throw Error(Errc::InvalidArgument, "support radius must be positive");
  const auto& seq = index.sequence();
  if (t >= seq.num_frames()) throw Error(Errc::InvalidArgument, "frame index out of range");

  // Only the six distinct second moments are accumulated; this loop is the
  // hot path of detection.
  auto frame_moments = [&](std::size_t f) {
    double n = 0.0, sx = 0.0, sy = 0.0, sz = 0.0, xx = 0.0, xy = 0.0, xz = 0.0, yy = 0.0, yz = 0.0, zz = 0.0;
    index.for_each_within(f, p, r, [&](std::uint32_t, const Point3& q) {
      const double x = q.x() - p.x(), y = q.y() - p.y(), z = q.z() - p.z();
      n += 1.0;
      sx += x, sy += y, sz += z;
      xx += x * x, xy += x * y, xz += x * z;
      yy += y * y, yz += y * z, zz += z * z;
    });
    Moments m;
    m.n = n;
    m.sum << sx, sy, sz;
    m.outer << xx, xy, xz, xy, yy, yz, xz, yz, zz;
    return m;
  };

  TemporalScale out;
  out.objective.reserve(static_cast<std::size_t>(tau_max));
  Moments acc = frame_moments(t);
  const auto last = static_cast<std::ptrdiff_t>(seq.num_frames()) - 1;
  for (int tau = 1; tau <= tau_max; ++tau) {
    const auto before = static_cast<std::ptrdiff_t>(t) - tau;
    const auto after = static_cast<std::ptrdiff_t>(t) + tau;
    if (before >= 0) acc += frame_moments(static_cast<std::size_t>(before));
    if (after <= last) acc += frame_moments(static_cast<std::size_t>(after));

    double a = 2.0;
    if (acc.n >= 4.0) {
      const Eigen::Vector3d mean = acc.sum / acc.n;
      Eigen::Matrix3d c = acc.outer / acc.n - mean * mean.transpose();
      c = 0.5 * (c + c.transpose());
      a = scale_objective(eigen3(c).values, static_cast<std::size_t>(acc.n));
    }
    out.objective.push_back(a);
  }

  const double best = *std::min_element(out.objective.begin(), out.objective.end());
  for (int tau = 1; tau <= tau_max; ++tau) {
    if (out.objective[static_cast<std::size_t>(tau - 1)] <= best + 1e-12) {
      out.tau = tau;
      break;
    }
  }
  out.keep = out.tau != tau_max;
  return out;
}

TemporalScale temporal_scale(const PointCloudSequence& seq, const Point3& p, std::size_t t, double r,
                             int tau_max) {
  const SequenceIndex index(seq, r);
  return temporal_scale(index, p, t, r, tau_max);
}

}  // namespace hopc
