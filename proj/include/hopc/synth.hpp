#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "hopc/types.hpp"

namespace hopc {

enum class Motion { Wave, Punch, Sit, Raise };

const char* to_string(Motion m) noexcept;
Motion motion_from_string(const std::string& s);

/// World-to-camera transform: p_cam = rotation * p_world + translation.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d(0.0, 0.0, 3.0);

  /// Rotation about the vertical (y) axis by `degrees`.
  static CameraPose yaw(double degrees, const Eigen::Vector3d& translation = Eigen::Vector3d(0.0, 0.0, 3.0));
};

/// Articulated stick-body sequence description. The body is a set of
/// elliptic tubes (torso, limbs) and an ellipsoid head, y up, facing +z.
struct SynthSpec {
  Motion motion = Motion::Wave;
  /// Cycles per `period_frames` frames.
  double speed = 1.0;
  double height = 1.75;
  /// Multiplies every limb and torso girth.
  double girth = 1.0;
  CameraPose pose;
  /// Standard deviation of camera-z noise, in scene units.
  double noise = 0.0;
  int frames = 32;
  int points = 1200;
  double period_frames = 32.0;
  /// Phase offset in radians.
  double phase = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthSequence {
  PointCloudSequence sequence;
  /// Per frame, per point: 1 if the point moves relative to an adjacent frame.
  std::vector<std::vector<std::uint8_t>> moving;
};

/// Deterministic for a fixed spec. Surface samples are drawn once and then
/// carried by the skeleton, so static body parts stay exactly still.
SynthSequence synth_generate(const SynthSpec& spec);

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

}  // namespace hopc
