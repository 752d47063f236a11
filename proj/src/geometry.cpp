#include "hopc/geometry.hpp"

#include <utility>

namespace hopc {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptySupport: return "EmptySupport";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case Errc::NotUnit: return "NotUnit";
    case Errc::InvalidBasis: return "InvalidBasis";
    case Errc::TooFewKeypoints: return "TooFewKeypoints";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::BadSigma: return "BadSigma";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::DegenerateClass: return "DegenerateClass";
    case Errc::DegenerateTraining: return "DegenerateTraining";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Parse: return "Parse";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string parse_message(const std::string& what, std::uint64_t offset,
                          std::optional<std::size_t> frame) {
  std::string msg = what + " at byte " + std::to_string(offset);
  if (frame) msg += " (frame " + std::to_string(*frame) + ")";
  return msg;
}

}  // namespace

ParseError::ParseError(const std::string& what, std::uint64_t offset,
                       std::optional<std::size_t> frame)
    : Error(Errc::Parse, parse_message(what, offset, frame)), offset_(offset), frame_(frame) {}

EigenBasisd analyze(const SupportVolume& vol, SignTie tie) {
  const auto cov = covariance(vol);
  const auto eig = eigen3(cov.matrix);
  return disambiguate<double>(eig, cov.mean, vol.members, vol.center, tie);
}

std::pair<std::size_t, std::size_t> frame_window(std::size_t t, int tau, std::size_t n_frames) {
  const auto w = static_cast<std::size_t>(std::max(tau, 0));
  const std::size_t lo = t >= w ? t - w : 0;
  const std::size_t hi = std::min(t + w, n_frames - 1);
  return {lo, hi};
}

namespace {

constexpr std::int64_t kKeyBias = std::int64_t{1} << 20;
constexpr std::int64_t kKeyMask = (std::int64_t{1} << 21) - 1;

std::int64_t cell_of(double x, double cell) { return static_cast<std::int64_t>(std::floor(x / cell)); }

void check_query(const PointCloudSequence& seq, std::size_t t, double r) {
  if (!(r > 0.0)) throw Error(Errc::InvalidArgument, "support radius must be positive");
  if (t >= seq.num_frames()) throw Error(Errc::InvalidArgument, "frame index out of range");
}

}  // namespace

SequenceIndex::SequenceIndex(const PointCloudSequence& seq, double cell_size)
    : seq_(&seq), cell_(cell_size) {
  if (!(cell_size > 0.0)) throw Error(Errc::InvalidArgument, "index cell size must be positive");
  grids_.resize(seq.num_frames());
  std::vector<std::pair<std::uint64_t, std::uint32_t>> tagged;
  for (std::size_t f = 0; f < seq.num_frames(); ++f) {
    const auto& pts = seq.frames[f].points;
    tagged.clear();
    tagged.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& q = pts[i];
      tagged.emplace_back(key(cell_of(q.x(), cell_), cell_of(q.y(), cell_), cell_of(q.z(), cell_)),
                          static_cast<std::uint32_t>(i));
    }
    std::sort(tagged.begin(), tagged.end());
    auto& g = grids_[f];
    g.indices.reserve(tagged.size());
    for (std::size_t i = 0; i < tagged.size(); ++i) {
      if (i == 0 || tagged[i].first != tagged[i - 1].first) {
        g.keys.push_back(tagged[i].first);
        g.offsets.push_back(static_cast<std::uint32_t>(i));
      }
      g.indices.push_back(tagged[i].second);
      g.points.push_back(pts[tagged[i].second]);
    }
    g.offsets.push_back(static_cast<std::uint32_t>(tagged.size()));
  }
}

std::uint64_t SequenceIndex::key(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
  auto pack = [](std::int64_t v) {
    const std::int64_t b = v + kKeyBias;
    if (b < 0 || b > kKeyMask) throw Error(Errc::InvalidArgument, "point outside voxel index range");
    return static_cast<std::uint64_t>(b);
  };
  return (pack(ix) << 42) | (pack(iy) << 21) | pack(iz);
}

void SequenceIndex::query(std::size_t frame, const Point3& p, double r,
                          std::vector<std::uint32_t>& out) const {
  const std::size_t first = out.size();
  for_each_within(frame, p, r, [&](std::uint32_t i, const Point3&) { out.push_back(i); });
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
}

SupportVolume build_support(const PointCloudSequence& seq, const Point3& p, std::size_t t, double r,
                            int tau, VolumeKind kind) {
  check_query(seq, t, r);
  SupportVolume vol;
  vol.center = p;
  vol.kind = kind;
  vol.radius = r;
  vol.halfwidth = kind == VolumeKind::Spatial ? 0 : std::max(tau, 0);
  const auto [lo, hi] = frame_window(t, vol.halfwidth, seq.num_frames());
  const double r2 = r * r;
  for (std::size_t f = lo; f <= hi; ++f) {
    const auto& pts = seq.frames[f].points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if ((pts[i] - p).squaredNorm() <= r2) {
        vol.members.push_back(pts[i]);
        vol.refs.push_back({static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(i)});
      }
    }
  }
  return vol;
}

SupportVolume build_support(const SequenceIndex& index, const Point3& p, std::size_t t, double r,
                            int tau, VolumeKind kind) {
  const auto& seq = index.sequence();
  check_query(seq, t, r);
  SupportVolume vol;
  vol.center = p;
  vol.kind = kind;
  vol.radius = r;
  vol.halfwidth = kind == VolumeKind::Spatial ? 0 : std::max(tau, 0);
  const auto [lo, hi] = frame_window(t, vol.halfwidth, seq.num_frames());
  std::vector<std::uint32_t> hits;
  for (std::size_t f = lo; f <= hi; ++f) {
    hits.clear();
    index.query(f, p, r, hits);
    for (const auto i : hits) {
      vol.members.push_back(seq.frames[f].points[i]);
      vol.refs.push_back({static_cast<std::uint32_t>(f), i});
    }
  }
  return vol;
}

}  // namespace hopc
