#pragma once

#include <array>
#include <string>
#include <vector>

#include "hopc/pipeline.hpp"
#include "hopc/synth.hpp"

namespace hopc {

/// One recording of the synthetic multi-view action set.
struct SyntheticRecording {
  std::string id;
  int label = 0;
  int subject = 0;
  int view = 0;
  SynthSpec spec;
};

inline constexpr std::array<double, 3> kBenchmarkYawDeg{0.0, 45.0, 90.0};
inline constexpr std::array<Motion, 4> kBenchmarkMotions{Motion::Wave, Motion::Punch, Motion::Sit, Motion::Raise};
inline constexpr int kBenchmarkSubjects = 5;

/// Every motion performed by five body variants (height, build, tempo,
/// phase) and recorded simultaneously by cameras at 0, 45 and 90 degrees
/// yaw; view ids 0, 1, 2. Labels follow kBenchmarkMotions.
std::vector<SyntheticRecording> synthetic_benchmark();

/// Pipeline defaults for the synthetic set. The codebook is smaller than the
/// 1500 words used on real data because each sequence yields only a few
/// dozen keypoints.
PipelineParams synthetic_benchmark_params();

/// Synthesizes and featurizes every recording.
std::vector<TaggedFeatures> featurize(const std::vector<SyntheticRecording>& recordings,
                                      const PipelineParams& params);

}  // namespace hopc
