#include "hopc/benchmark.hpp"

namespace hopc {

namespace {

struct Performer {
  double height;
  double girth;
  double speed;
  double phase;
};

constexpr std::array<Performer, kBenchmarkSubjects> kPerformers{{
    {1.75, 1.00, 1.00, 0.0},
    {1.60, 0.90, 1.10, 0.6},
    {1.85, 1.10, 0.90, 1.3},
    {1.70, 1.20, 1.20, 2.1},
    {1.55, 0.85, 0.95, 2.9},
}};

}  // namespace

std::vector<SyntheticRecording> synthetic_benchmark() {
  std::vector<SyntheticRecording> out;
  for (std::size_t m = 0; m < kBenchmarkMotions.size(); ++m)
    for (std::size_t s = 0; s < kPerformers.size(); ++s)
      for (std::size_t v = 0; v < kBenchmarkYawDeg.size(); ++v) {
        const Performer& p = kPerformers[s];
        SyntheticRecording rec;
        rec.id = std::string(to_string(kBenchmarkMotions[m])) + "_s" + std::to_string(s) + "_v" + std::to_string(v);
        rec.label = static_cast<int>(m);
        rec.subject = static_cast<int>(s);
        rec.view = static_cast<int>(v);
        rec.spec.motion = kBenchmarkMotions[m];
        rec.spec.height = p.height;
        rec.spec.girth = p.girth;
        rec.spec.speed = p.speed;
        rec.spec.phase = p.phase;
        rec.spec.points = 800;
        rec.spec.pose = CameraPose::yaw(kBenchmarkYawDeg[v]);
        // All cameras see the same performance.
        rec.spec.seed = 1000 + 17 * s + m;
        out.push_back(std::move(rec));
      }
  return out;
}

PipelineParams synthetic_benchmark_params() {
  PipelineParams p;
  p.codebook_size = 64;
  p.seed = 2024;
  return p;
}

std::vector<TaggedFeatures> featurize(const std::vector<SyntheticRecording>& recordings,
                                      const PipelineParams& params) {
  std::vector<TaggedFeatures> out;
  out.reserve(recordings.size());
  for (const auto& rec : recordings) {
    TaggedFeatures t;
    t.id = rec.id;
    t.label = rec.label;
    t.subject = rec.subject;
    t.view = rec.view;
    t.features = extract_features(synth_generate(rec.spec).sequence, params);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace hopc
