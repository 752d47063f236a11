#include <doctest.h>

#include <algorithm>

#include <Eigen/Geometry>

#include "hopc/detector.hpp"
#include "hopc/pipeline.hpp"
#include "hopc/scale_selection.hpp"
#include "hopc/synth.hpp"
#include "test_util.hpp"

using namespace hopc;

namespace {

StkRecord candidate(double x, std::uint32_t frame, double eta) {
  StkRecord r;
  r.position = Point3(x, 0, 0);
  r.frame = frame;
  r.quality = eta;
  return r;
}

HopcVector one_hot(int bin, double value) {
  HopcVector h = HopcVector::Zero();
  h(bin) = value;
  return h;
}

const SynthSequence& wave() {
  static const SynthSequence s = [] {
    SynthSpec spec;
    spec.frames = 16;
    spec.period_frames = 16;
    spec.points = 600;
    return synth_generate(spec);
  }();
  return s;
}

}  // namespace

TEST_SUITE("detector") {

TEST_CASE("eigenratio test") {
  CHECK(eigenratio_ok(Eigen::Vector3d(4, 1, 0.5), 1.3));
  CHECK_FALSE(eigenratio_ok(Eigen::Vector3d(1, 1, 1), 1.3));
  CHECK(eigenratio_ok(Eigen::Vector3d(4, 1, 0), 1.3));
  CHECK_FALSE(eigenratio_ok(Eigen::Vector3d(0, 0, 0), 1.3));
}

TEST_CASE("quality factor examples") {
  const HopcVector a = one_hot(3, 0.5);
  CHECK(quality(a, a) == 0.0);
  CHECK(quality(a, HopcVector::Zero()) == doctest::Approx(0.25));
  CHECK(quality(one_hot(1, 1.0), one_hot(2, 1.0)) == 1.0);
}

TEST_CASE("quality factor is symmetric and non-negative") {
  Rng rng(9);
  for (int k = 0; k < 100; ++k) {
    HopcVector a, b;
    for (int i = 0; i < kHopcSize; ++i) {
      a(i) = rng.uniform() < 0.5 ? 0.0 : rng.uniform();
      b(i) = rng.uniform() < 0.5 ? 0.0 : rng.uniform();
    }
    CHECK(quality(a, b) == quality(b, a));
    CHECK(quality(a, b) >= 0.0);
    CHECK(quality(a, a) == 0.0);
  }
}

TEST_CASE("round_quality keeps ties tied") {
  const double eta = 4.790170001e-4;
  CHECK(round_quality(eta) == round_quality(eta * (1 + 1e-15)));
  CHECK(std::abs(round_quality(eta) - eta) <= eta * 1e-12);
  CHECK(round_quality(0.0) == 0.0);
}

TEST_CASE("nms") {
  SUBCASE("close candidates keep the stronger one") {
    const auto kept = nms({candidate(0.0, 0, 3.0), candidate(0.01, 0, 5.0)}, 0.1, 2, 10);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].quality == 5.0);
  }
  SUBCASE("distant candidates both survive") {
    CHECK(nms({candidate(0.0, 0, 3.0), candidate(0.5, 0, 5.0)}, 0.1, 2, 10).size() == 2);
  }
  SUBCASE("same place, far apart in time") {
    CHECK(nms({candidate(0.0, 0, 3.0), candidate(0.0, 5, 5.0)}, 0.1, 2, 10).size() == 2);
  }
  SUBCASE("no padding and a hard cap") {
    CHECK(nms({candidate(0.0, 0, 1.0)}, 0.1, 2, 10).size() == 1);
    std::vector<StkRecord> many;
    for (int i = 0; i < 20; ++i) many.push_back(candidate(i, 0, 1.0 + i));
    const auto kept = nms(many, 0.1, 2, 5);
    CHECK(kept.size() == 5);
    CHECK(kept.front().quality == 20.0);
  }
  SUBCASE("ties resolve by frame, then input order") {
    const auto kept = nms({candidate(0.0, 3, 2.0), candidate(0.01, 1, 2.0), candidate(0.02, 1, 2.0)}, 0.1, 5, 10);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].frame == 1);
    CHECK(kept[0].position.x() == 0.01);
  }
}

TEST_CASE("nms output never has two keypoints close in space and time") {
  Rng rng(13);
  std::vector<StkRecord> c;
  for (int i = 0; i < 300; ++i) {
    StkRecord r;
    r.position = Point3(rng.uniform(), rng.uniform(), rng.uniform());
    r.frame = static_cast<std::uint32_t>(rng.index(10));
    r.quality = rng.uniform();
    c.push_back(r);
  }
  const auto kept = nms(c, 0.2, 2, 40);
  CHECK(kept.size() <= 40);
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t j = i + 1; j < kept.size(); ++j) {
      const bool near = (kept[i].position - kept[j].position).norm() <= 0.2 &&
                        std::abs(static_cast<int>(kept[i].frame) - static_cast<int>(kept[j].frame)) <= 2;
      CHECK_FALSE(near);
    }
}

TEST_CASE("a still sequence has no keypoints") {
  PointCloudSequence still;
  for (int f = 0; f < 8; ++f) still.frames.push_back(wave().sequence.frames[0]);
  DetectorParams p;
  p.radius = 0.2 * subject_height(still);
  CHECK(detect(still, p).empty());
}

TEST_CASE("a sphere is rejected by the eigenratio test") {
  Rng rng(15);
  PointCloudSequence seq;
  for (int f = 0; f < 4; ++f) {
    PointCloudFrame fr;
    for (int i = 0; i < 400; ++i)
      fr.points.push_back(Point3(rng.normal(), rng.normal(), rng.normal()).normalized() * (1.0 + 0.05 * f));
    seq.frames.push_back(fr);
  }
  DetectorParams p;
  p.radius = 2.5;  // each support covers the whole sphere
  CHECK(detect(seq, p).empty());
}

TEST_CASE("keypoints concentrate on the moving limb") {
  const auto& s = wave();
  DetectorParams p;
  p.radius = 0.2 * subject_height(s.sequence);
  const auto stks = detect(s.sequence, p);
  REQUIRE_FALSE(stks.empty());
  std::size_t near_motion = 0;
  for (const auto& k : stks) {
    bool near = false;
    const auto& frame = s.sequence.frames[k.frame].points;
    for (std::size_t i = 0; i < frame.size() && !near; ++i)
      near = s.moving[k.frame][i] && (frame[i] - k.position).norm() <= 2 * p.radius;
    near_motion += near;
  }
  CHECK(static_cast<double>(near_motion) >= 0.9 * static_cast<double>(stks.size()));
  for (const auto& k : stks) {
    CHECK(k.quality > p.quality_floor);
    CHECK(eigenratio_ok(k.spatial.values, p.theta_stk));
    CHECK(eigenratio_ok(k.spatiotemporal.values, p.theta_stk));
    CHECK(k.tau < default_max_temporal_scale(s.sequence.num_frames()));
  }
}

TEST_CASE("detection is equivariant under a rigid motion") {
  const auto& s = wave();
  DetectorParams p;
  p.radius = 0.2 * subject_height(s.sequence);
  const auto a = detect(s.sequence, p);
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.8, Point3(0.3, 1, -0.2).normalized()).toRotationMatrix();
  const Point3 shift(0.5, -1.0, 2.0);
  PointCloudSequence moved = s.sequence;
  for (auto& f : moved.frames)
    for (auto& q : f.points) q = rot * q + shift;
  const auto b = detect(moved, p);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i].frame == a[i].frame);
    CHECK(b[i].tau == a[i].tau);
    CHECK((b[i].position - (rot * a[i].position + shift)).norm() <= 1e-6);
    CHECK(b[i].quality == doctest::Approx(a[i].quality).epsilon(1e-6));
  }
}

TEST_CASE("raising the quality floor never adds keypoints") {
  const auto& s = wave();
  DetectorParams p;
  p.radius = 0.2 * subject_height(s.sequence);
  p.max_keypoints = 100000;
  std::size_t last = detect(s.sequence, p).size();
  for (const double floor : {1e-5, 1e-4, 1e-3}) {
    p.quality_floor = floor;
    const std::size_t n = detect(s.sequence, p).size();
    CHECK(n <= last);
    last = n;
  }
}

TEST_CASE("detector parameters are validated") {
  DetectorParams p;
  CHECK_THROWS_AS(p.validate(), Error);  // no radius
  p.radius = 1.0;
  p.nms_radius = 2.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p.nms_radius = 0.0;
  p.theta_stk = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
}

}  // TEST_SUITE

TEST_SUITE("scale") {

TEST_CASE("spatial scale from the subject height") {
  PointCloudSequence seq;
  PointCloudFrame fr;
  for (int i = 0; i <= 1000; ++i) fr.points.emplace_back(0.1 * i, 1.8 * i / 1000.0, 0.0);
  seq.frames.push_back(fr);
  // Percentile extent of a uniform ramp: 0.98 of the full 1.8.
  ScaleParams p;
  CHECK(spatial_scale(seq, p) == doctest::Approx(0.2 * 0.98 * 1.8).epsilon(1e-12));
  p.height_percentile = 1.0;
  CHECK(spatial_scale(seq, p) == doctest::Approx(0.36).epsilon(1e-12));

  PointCloudSequence big = seq, moved = seq;
  for (auto& q : big.frames[0].points) q *= 1.5;
  for (auto& q : moved.frames[0].points) q += Point3(3, 0, -2);
  CHECK(spatial_scale(big, p) == doctest::Approx(1.5 * spatial_scale(seq, p)).epsilon(1e-12));
  CHECK(spatial_scale(moved, p) == spatial_scale(seq, p));
}

TEST_CASE("spatial scale errors") {
  PointCloudSequence empty;
  empty.frames.resize(3);
  CHECK_THROWS_AS(spatial_scale(empty, {}), Error);
  PointCloudSequence one;
  one.frames.push_back({{{0, 0, 0}, {0, 1, 0}}});
  ScaleParams p;
  p.sigma = 0.0;
  CHECK_THROWS_WITH(spatial_scale(one, p), doctest::Contains("BadSigma"));
  p.sigma = 1.0;
  CHECK_THROWS_AS(spatial_scale(one, p), Error);
}

TEST_CASE("default tau_m") {
  CHECK(default_max_temporal_scale(32) == 7);
  CHECK(default_max_temporal_scale(10) == 2);
  CHECK(default_max_temporal_scale(1) == 1);
}

TEST_CASE("a static scene selects the smallest scale") {
  PointCloudSequence still;
  for (int f = 0; f < 10; ++f) still.frames.push_back(wave().sequence.frames[0]);
  const double r = 0.2 * subject_height(still);
  const auto s = temporal_scale(still, still.frames[0].points[5], 5, r, 4);
  CHECK(s.tau == 1);
  CHECK(s.keep);
}

TEST_CASE("scale objective range and conventions") {
  CHECK(scale_objective(Eigen::Vector3d(1, 1, 1), 10) == 2.0);
  CHECK(scale_objective(Eigen::Vector3d(4, 2, 1), 3) == 2.0);
  CHECK(scale_objective(Eigen::Vector3d(0, 0, 0), 10) == 2.0);
  CHECK(scale_objective(Eigen::Vector3d(4, 0, 0), 10) == 1.0);  // 0/4 + 0/0
  CHECK(scale_objective(Eigen::Vector3d(4, 2, 1), 10) == 1.0);
  const auto& s = wave();
  const double r = 0.2 * subject_height(s.sequence);
  for (std::size_t i = 0; i < s.sequence.frames[8].points.size(); i += 37) {
    const auto ts = temporal_scale(s.sequence, s.sequence.frames[8].points[i], 8, r, 4);
    CHECK(ts.tau >= 1);
    CHECK(ts.tau <= 4);
    CHECK(ts.keep == (ts.tau != 4));
    for (const double a : ts.objective) {
      CHECK(a >= 0.0);
      CHECK(a <= 2.0);
    }
    // The smallest tau within tie slack of the minimum wins.
    const double best = *std::min_element(ts.objective.begin(), ts.objective.end());
    CHECK(ts.objective[static_cast<std::size_t>(ts.tau - 1)] <= best + 1e-12);
    for (int k = 1; k < ts.tau; ++k) CHECK(ts.objective[static_cast<std::size_t>(k - 1)] > best + 1e-12);
  }
}

TEST_CASE("a minimum at tau_m is flagged") {
  // A round blob at the center frame; every other frame adds a pair of
  // points on X further out, so the window only gets more elongated.
  PointCloudSequence seq;
  for (int f = 0; f < 9; ++f) {
    PointCloudFrame fr;
    const int d = std::abs(f - 4);
    if (d == 0) {
      for (int a : {-1, 1}) {
        fr.points.emplace_back(0.1 * a, 0, 0);
        fr.points.emplace_back(0, 0.1 * a, 0);
        fr.points.emplace_back(0, 0, 0.1 * a);
      }
    } else {
      fr.points.emplace_back(d * d, 0.0, 0.0);
      fr.points.emplace_back(-d * d, 0.0, 0.0);
    }
    seq.frames.push_back(fr);
  }
  const auto s = temporal_scale(seq, Point3::Zero(), 4, 100.0, 4);
  for (std::size_t k = 1; k < s.objective.size(); ++k) CHECK(s.objective[k] < s.objective[k - 1]);
  CHECK(s.tau == 4);
  CHECK_FALSE(s.keep);
}

}  // TEST_SUITE
