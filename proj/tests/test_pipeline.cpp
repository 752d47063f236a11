#include <doctest.h>

#include "hopc/benchmark.hpp"
#include "hopc/io.hpp"
#include "hopc/pipeline.hpp"
#include "hopc/synth.hpp"

using namespace hopc;

namespace {

PipelineParams tiny_params() {
  PipelineParams p;
  p.codebook_size = 8;
  p.seed = 3;
  return p;
}

// Two motions, two performers, two views; small enough to run in seconds.
const std::vector<TaggedFeatures>& tiny_set() {
  static const std::vector<TaggedFeatures> samples = [] {
    std::vector<SyntheticRecording> recs;
    for (const Motion m : {Motion::Wave, Motion::Sit})
      for (int s = 0; s < 2; ++s)
        for (int v = 0; v < 2; ++v) {
          SyntheticRecording r;
          r.label = static_cast<int>(m);
          r.subject = s;
          r.view = v;
          r.id = std::string(to_string(m)) + std::to_string(s) + std::to_string(v);
          r.spec.motion = m;
          r.spec.frames = 12;
          r.spec.period_frames = 12;
          r.spec.points = 500;
          r.spec.height = 1.6 + 0.2 * s;
          r.spec.seed = 10 + static_cast<std::uint64_t>(s);
          r.spec.pose = CameraPose::yaw(30.0 * v);
          recs.push_back(r);
        }
    return featurize(recs, tiny_params());
  }();
  return samples;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("parameters survive json") {
  PipelineParams p = tiny_params();
  p.mode = DescriptorMode::LocalOnly;
  p.scale.sigma = 0.25;
  const auto q = pipeline_params_from_json(to_json(p));
  CHECK(q.codebook_size == 8);
  CHECK(q.mode == DescriptorMode::LocalOnly);
  CHECK(q.scale.sigma == 0.25);
  CHECK(to_json(q) == to_json(p));
}

TEST_CASE("action descriptor layout") {
  const auto& samples = tiny_set();
  const CrossViewSplit split({0, 1}, {});
  const auto cb = train_codebook(samples, split, tiny_params());
  const auto d = action_descriptor(samples[0].features, cb, tiny_params());
  CHECK(d.bow.size() == static_cast<Eigen::Index>(cb.kept()));
  CHECK(d.stkd.size() == 600);
  CHECK(d.combined.size() == d.bow.size() + 600);
  CHECK(d.bow.sum() == doctest::Approx(1.0));
  CHECK(d.stkd.sum() == doctest::Approx(1.0));
  CHECK(d.select(DescriptorMode::LocalOnly) == d.bow);
  CHECK(d.select(DescriptorMode::StkdOnly) == d.stkd);
  CHECK(action_descriptor(samples[0].features, cb, tiny_params()).combined == d.combined);
}

TEST_CASE("training refuses test-view samples") {
  const auto& samples = tiny_set();
  const CrossViewSplit split({0}, {1});
  CHECK_THROWS_AS(train_codebook(samples, split, tiny_params()), Error);
  std::vector<TaggedFeatures> train;
  for (const auto& s : samples)
    if (split.is_train(s.view)) train.push_back(s);
  CHECK_NOTHROW(train_codebook(train, split, tiny_params()));
}

TEST_CASE("train, classify and serialize") {
  const auto& samples = tiny_set();
  const CrossViewSplit split({0}, {1});
  std::vector<TaggedFeatures> train;
  for (const auto& s : samples)
    if (split.is_train(s.view)) train.push_back(s);
  const auto cb = train_codebook(train, split, tiny_params());
  const auto model = train_model(train, split, cb, tiny_params());
  CHECK(model.codebook.kept() >= 1);
  for (const auto& s : train) CHECK(classify(model, s.features).label == s.label);

  const auto bytes = encode_model(model, {{"note", "test"}});
  nlohmann::json header;
  const auto back = decode_model(bytes, &header);
  CHECK(header["note"] == "test");
  CHECK(encode_model(back, {{"note", "test"}}) == bytes);
  for (const auto& s : samples) {
    const auto a = classify(model, s.features), b = classify(back, s.features);
    CHECK(a.label == b.label);
    CHECK(a.scores == b.scores);
  }
}

TEST_CASE("cross-view evaluation reports every mode") {
  const auto report = evaluate_cross_view(tiny_set(), CrossViewSplit({0}, {1}), tiny_params());
  CHECK(report.rows.size() == 3 * 4);
  for (const double a : {report.accuracy_combined, report.accuracy_local, report.accuracy_stkd}) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
}

}  // TEST_SUITE
