#include "hopc/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "hopc/error.hpp"
#include "hopc/recognition.hpp"

namespace hopc {

const char* to_string(Motion m) noexcept {
  switch (m) {
    case Motion::Wave: return "wave";
    case Motion::Punch: return "punch";
    case Motion::Sit: return "sit";
    case Motion::Raise: return "raise";
  }
  return "wave";
}

Motion motion_from_string(const std::string& s) {
  if (s == "wave") return Motion::Wave;
  if (s == "punch") return Motion::Punch;
  if (s == "sit") return Motion::Sit;
  if (s == "raise") return Motion::Raise;
  throw Error(Errc::InvalidArgument, "unknown motion '" + s + "'");
}

CameraPose CameraPose::yaw(double degrees, const Eigen::Vector3d& translation) {
  CameraPose pose;
  pose.rotation = Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
  pose.translation = translation;
  return pose;
}

void SynthSpec::validate() const {
  if (frames < 4) throw Error(Errc::InvalidArgument, "synthetic sequences need at least 4 frames");
  if (!(speed > 0.0)) throw Error(Errc::InvalidArgument, "speed must be positive");
  if (!(height > 0.0)) throw Error(Errc::InvalidArgument, "height must be positive");
  if (!(girth > 0.0)) throw Error(Errc::InvalidArgument, "girth must be positive");
  if (points < 1) throw Error(Errc::InvalidArgument, "need at least one point per frame");
  if (noise < 0.0) throw Error(Errc::InvalidArgument, "noise must be non-negative");
  if (!(period_frames > 0.0)) throw Error(Errc::InvalidArgument, "period must be positive");
}

namespace {

using Eigen::Matrix3d;
using Eigen::Vector3d;

constexpr double kDeg = std::numbers::pi / 180.0;

Matrix3d rot_x(double a) { return Eigen::AngleAxisd(a, Vector3d::UnitX()).toRotationMatrix(); }
Matrix3d rot_z(double a) { return Eigen::AngleAxisd(a, Vector3d::UnitZ()).toRotationMatrix(); }

enum Part : int {
  kTorso,
  kHead,
  kUpperArmL,
  kForearmL,
  kUpperArmR,
  kForearmR,
  kThighL,
  kShinL,
  kThighR,
  kShinR,
  kNumParts
};

// Elliptic tube: starts at `origin`, runs along R * (0,-1,0) for `length`,
// cross-section semi-axes (a along R*x, b along R*z). The head uses the
// same frame as an ellipsoid centred at `origin`.
struct Segment {
  Vector3d origin = Vector3d::Zero();
  Matrix3d frame = Matrix3d::Identity();
  double length = 0.0;
  double a = 0.0;
  double b = 0.0;
};

struct Shape {
  std::array<double, kNumParts> length{};
  std::array<double, kNumParts> a{};
  std::array<double, kNumParts> b{};
};

Shape body_shape(double h, double girth) {
  Shape s;
  auto set = [&](Part p, double len, double a, double b) {
    s.length[p] = len * h;
    s.a[p] = a * h * girth;
    s.b[p] = b * h * girth;
  };
  set(kTorso, 0.29, 0.100, 0.060);
  set(kHead, 0.0, 0.055, 0.062);  // head: a = lateral, b = depth radius
  set(kUpperArmL, 0.17, 0.030, 0.021);
  set(kUpperArmR, 0.17, 0.030, 0.021);
  set(kForearmL, 0.24, 0.024, 0.015);
  set(kForearmR, 0.24, 0.024, 0.015);
  set(kThighL, 0.25, 0.052, 0.036);
  set(kThighR, 0.25, 0.052, 0.036);
  set(kShinL, 0.26, 0.036, 0.025);
  set(kShinR, 0.26, 0.036, 0.025);
  return s;
}

struct Pose {
  // Frontal-plane (about z) and sagittal (about x, forward positive) angles.
  std::array<double, 2> upper_abd{8 * kDeg, 8 * kDeg};
  std::array<double, 2> upper_flex{0.0, 0.0};
  std::array<double, 2> fore_abd{8 * kDeg, 8 * kDeg};
  std::array<double, 2> fore_flex{0.0, 0.0};
  double squat = 0.0;  // thigh flexion; shins counter-rotate
  double lean = 0.0;   // torso forward lean
};

Pose pose_at(Motion motion, double phase) {
  Pose p;
  const double wave = std::sin(phase);
  const double cycle = 0.5 - 0.5 * std::cos(phase);
  switch (motion) {
    case Motion::Wave:
      // Right arm (index 1) out sideways, forearm up and swinging.
      p.upper_abd[1] = 85 * kDeg;
      p.fore_abd[1] = 150 * kDeg + 28 * kDeg * wave;
      break;
    case Motion::Punch:
      for (int side = 0; side < 2; ++side) {
        const double ext = 0.5 + 0.5 * std::sin(phase + side * std::numbers::pi);
        p.upper_abd[side] = 5 * kDeg;
        p.fore_abd[side] = 5 * kDeg;
        p.upper_flex[side] = (20 + 65 * ext) * kDeg;
        p.fore_flex[side] = p.upper_flex[side] + 115 * (1.0 - ext) * kDeg;
      }
      break;
    case Motion::Sit:
      p.squat = 80 * kDeg * cycle;
      p.lean = 25 * kDeg * cycle;
      for (int side = 0; side < 2; ++side) {
        p.upper_flex[side] = 70 * kDeg * cycle;
        p.fore_flex[side] = 80 * kDeg * cycle;
      }
      break;
    case Motion::Raise:
      for (int side = 0; side < 2; ++side) {
        p.upper_abd[side] = (15 + 150 * cycle) * kDeg;
        p.fore_abd[side] = p.upper_abd[side] + 10 * kDeg * cycle;
      }
      break;
  }
  return p;
}

std::array<Segment, kNumParts> skeleton(const Shape& s, const Pose& pose, double h) {
  std::array<Segment, kNumParts> seg;
  const Vector3d down(0.0, -1.0, 0.0);
  const double leg = s.length[kThighL] + s.length[kShinL];
  const double hip_y = leg * std::cos(pose.squat) + 0.02 * h;
  const Vector3d pelvis(0.0, hip_y, 0.0);

  // Torso runs upward from the pelvis: frame maps (0,-1,0) to "up".
  const Matrix3d torso = rot_x(-pose.lean) * rot_z(std::numbers::pi);
  seg[kTorso] = {pelvis + torso * (-down * 0.0), torso, s.length[kTorso], s.a[kTorso], s.b[kTorso]};
  const Vector3d up_axis = rot_x(-pose.lean) * Vector3d(0.0, 1.0, 0.0);
  const Vector3d neck = pelvis + up_axis * s.length[kTorso];
  const Matrix3d body = rot_x(-pose.lean);
  seg[kHead] = {neck + up_axis * 0.095 * h, body, 0.0, s.a[kHead], s.b[kHead]};

  for (int side = 0; side < 2; ++side) {
    const double sx = side == 0 ? 1.0 : -1.0;
    const Vector3d shoulder = neck + body * Vector3d(sx * 0.13 * h, -0.02 * h, 0.0);
    const Matrix3d upper = body * rot_z(sx * pose.upper_abd[side]) * rot_x(-pose.upper_flex[side]);
    const Matrix3d fore = body * rot_z(sx * pose.fore_abd[side]) * rot_x(-pose.fore_flex[side]);
    const Part ua = side == 0 ? kUpperArmL : kUpperArmR;
    const Part fa = side == 0 ? kForearmL : kForearmR;
    seg[ua] = {shoulder, upper, s.length[ua], s.a[ua], s.b[ua]};
    const Vector3d elbow = shoulder + upper * down * s.length[ua];
    seg[fa] = {elbow, fore, s.length[fa], s.a[fa], s.b[fa]};

    const Vector3d hip = pelvis + Vector3d(sx * 0.065 * h, 0.0, 0.0);
    const Matrix3d thigh = rot_x(-pose.squat);
    const Matrix3d shin = rot_x(pose.squat);
    const Part th = side == 0 ? kThighL : kThighR;
    const Part sh = side == 0 ? kShinL : kShinR;
    seg[th] = {hip, thigh, s.length[th], s.a[th], s.b[th]};
    const Vector3d knee = hip + thigh * down * s.length[th];
    seg[sh] = {knee, shin, s.length[sh], s.a[sh], s.b[sh]};
  }
  return seg;
}

// Ramanujan's approximation of the ellipse perimeter.
double ellipse_perimeter(double a, double b) {
  return std::numbers::pi * (3.0 * (a + b) - std::sqrt((3.0 * a + b) * (a + 3.0 * b)));
}

struct SurfaceSample {
  int part;
  double s;      // along the tube, [0, 1]
  double theta;  // around the tube
  Vector3d dir;  // head only: unit direction
};

}  // namespace

SynthSequence synth_generate(const SynthSpec& spec) {
  spec.validate();
  const double h = spec.height;
  const Shape shape = body_shape(h, spec.girth);

  std::array<double, kNumParts> area{};
  double total = 0.0;
  for (int p = 0; p < kNumParts; ++p) {
    if (p == kHead) {
      const double r = 0.5 * (shape.a[p] + shape.b[p]);
      area[p] = 4.0 * std::numbers::pi * r * r;
    } else {
      area[p] = ellipse_perimeter(shape.a[p], shape.b[p]) * shape.length[p];
    }
    total += area[p];
  }

  Rng rng(spec.seed);
  std::vector<SurfaceSample> samples;
  samples.reserve(static_cast<std::size_t>(spec.points));
  std::array<double, kNumParts> cumulative{};
  double acc = 0.0;
  for (int p = 0; p < kNumParts; ++p) cumulative[p] = (acc += area[p] / total);
  for (int i = 0; i < spec.points; ++i) {
    const double u = rng.uniform();
    int part = 0;
    while (part < kNumParts - 1 && u >= cumulative[part]) ++part;
    SurfaceSample smp{part, rng.uniform(), 2.0 * std::numbers::pi * rng.uniform(), Vector3d::Zero()};
    if (part == kHead) {
      Vector3d d(rng.normal(), rng.normal(), rng.normal());
      smp.dir = d.normalized();
    }
    samples.push_back(smp);
  }

  SynthSequence out;
  out.sequence.frames.resize(static_cast<std::size_t>(spec.frames));
  std::vector<std::vector<Vector3d>> world(static_cast<std::size_t>(spec.frames));
  for (int f = 0; f < spec.frames; ++f) {
    const double phase = 2.0 * std::numbers::pi * spec.speed * f / spec.period_frames + spec.phase;
    const auto seg = skeleton(shape, pose_at(spec.motion, phase), h);
    auto& pts = world[static_cast<std::size_t>(f)];
    pts.reserve(samples.size());
    for (const auto& smp : samples) {
      const Segment& sg = seg[smp.part];
      if (smp.part == kHead) {
        const Vector3d local(smp.dir.x() * sg.a, smp.dir.y() * 0.5 * (0.07 * h + sg.b), smp.dir.z() * sg.b);
        pts.push_back(sg.origin + sg.frame * local);
      } else {
        const Vector3d local(sg.a * std::cos(smp.theta), -smp.s * sg.length, sg.b * std::sin(smp.theta));
        pts.push_back(sg.origin + sg.frame * local);
      }
    }
  }

  const double eps = 1e-6 * h;
  out.moving.assign(static_cast<std::size_t>(spec.frames), std::vector<std::uint8_t>(samples.size(), 0));
  for (int f = 0; f < spec.frames; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      bool moves = false;
      if (f > 0) moves = moves || (world[fi][i] - world[fi - 1][i]).norm() > eps;
      if (f + 1 < spec.frames) moves = moves || (world[fi][i] - world[fi + 1][i]).norm() > eps;
      out.moving[fi][i] = moves ? 1 : 0;
    }
  }

  Rng noise(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int f = 0; f < spec.frames; ++f) {
    auto& frame = out.sequence.frames[static_cast<std::size_t>(f)];
    frame.points.reserve(samples.size());
    for (const auto& p : world[static_cast<std::size_t>(f)]) {
      Vector3d c = spec.pose.rotation * p + spec.pose.translation;
      if (spec.noise > 0.0) c.z() += spec.noise * noise.normal();
      frame.points.push_back(c);
    }
  }
  return out;
}

nlohmann::json to_json(const SynthSpec& s) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) rot.push_back({s.pose.rotation(r, 0), s.pose.rotation(r, 1), s.pose.rotation(r, 2)});
  return {
      {"motion", to_string(s.motion)},
      {"speed", s.speed},
      {"height", s.height},
      {"girth", s.girth},
      {"rotation", rot},
      {"translation", {s.pose.translation.x(), s.pose.translation.y(), s.pose.translation.z()}},
      {"noise", s.noise},
      {"frames", s.frames},
      {"points", s.points},
      {"period_frames", s.period_frames},
      {"phase", s.phase},
      {"seed", s.seed},
  };
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  auto get = [&](const char* key, auto& out) {
    if (j.contains(key)) j.at(key).get_to(out);
  };
  if (j.contains("motion")) s.motion = motion_from_string(j.at("motion").get<std::string>());
  get("speed", s.speed);
  get("height", s.height);
  get("girth", s.girth);
  get("noise", s.noise);
  get("frames", s.frames);
  get("points", s.points);
  get("period_frames", s.period_frames);
  get("phase", s.phase);
  get("seed", s.seed);
  if (j.contains("yaw_deg")) s.pose = CameraPose::yaw(j.at("yaw_deg").get<double>(), s.pose.translation);
  if (j.contains("rotation")) {
    const auto& r = j.at("rotation");
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) s.pose.rotation(a, b) = r.at(a).at(b).get<double>();
  }
  if (j.contains("translation")) {
    const auto& t = j.at("translation");
    s.pose.translation = Vector3d(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
  }
  s.validate();
  return s;
}

}  // namespace hopc
