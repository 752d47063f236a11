#include <doctest.h>

#include <Eigen/Geometry>

#include "hopc/geometry.hpp"
#include "hopc/recognition.hpp"
#include "test_util.hpp"

using namespace hopc;
using test::approx_eq;

TEST_SUITE("geometry") {

TEST_CASE("covariance of three points") {
  const std::vector<Point3> pts{{0, 0, 0}, {2, 0, 0}, {0, 2, 0}};
  const auto c = covariance(pts);
  CHECK(approx_eq(c.mean, Point3(2.0 / 3, 2.0 / 3, 0), 1e-15));
  Eigen::Matrix3d expected;
  expected << 8.0 / 9, -4.0 / 9, 0, -4.0 / 9, 8.0 / 9, 0, 0, 0, 0;
  CHECK(approx_eq(c.matrix, expected, 1e-15));
  const auto e = eigen3(c.matrix);
  CHECK(approx_eq(e.values, Eigen::Vector3d(4.0 / 3, 4.0 / 9, 0.0), 1e-14));
}

TEST_CASE("covariance of an empty set throws") {
  const std::vector<Point3> none;
  CHECK_THROWS_AS(covariance(none), Error);
}

TEST_CASE("eigen3 on diagonal and identity") {
  const auto d = eigen3(Eigen::Vector3d(1, 4, 0).asDiagonal().toDenseMatrix().eval());
  CHECK(d.values == Eigen::Vector3d(4, 1, 0));
  CHECK(std::abs(d.vectors.col(0).dot(Point3::UnitY())) == doctest::Approx(1.0));
  CHECK(std::abs(d.vectors.col(1).dot(Point3::UnitX())) == doctest::Approx(1.0));

  const auto id = eigen3(Eigen::Matrix3d::Identity().eval());
  CHECK(id.values == Eigen::Vector3d::Ones());
  CHECK(approx_eq(id.vectors.transpose() * id.vectors, Eigen::Matrix3d::Identity(), 1e-14));
}

TEST_CASE("eigen3 rejects bad input") {
  Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
  a(0, 1) = 1.0;
  CHECK_THROWS_WITH_AS(eigen3(a), doctest::Contains("NotSymmetric"), Error);
  CHECK_THROWS_AS(eigen3(Eigen::Vector3d(1, 0, -1).asDiagonal().toDenseMatrix().eval()), Error);
}

TEST_CASE("eigen3 matches a Jacobi reference on random PSD matrices") {
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    Eigen::Matrix3d b;
    for (int i = 0; i < 9; ++i) b(i) = rng.normal();
    const Eigen::Matrix3d c = b * b.transpose();
    const auto e = eigen3(c);
    const auto ref = test::jacobi_eigenvalues(c);
    CHECK(approx_eq(e.values, ref, 1e-9 * ref(0)));
    const Eigen::Matrix3d back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((back - c).norm() <= 1e-9 * c.norm());
  }
}

TEST_CASE("eigenratio conventions") {
  CHECK(eigenratio(4.0, 1.0) == 4.0);
  CHECK(std::isinf(eigenratio(1.0, 0.0)));
  CHECK(eigenratio(0.0, 0.0) == 1.0);
}

TEST_CASE("disambiguate flips toward the projection mass") {
  // Members skewed to +x; the solver's -x axis must flip.
  const std::vector<Point3> pts{{3, 0, 0}, {1, 0.5, 0}, {1, -0.5, 0}, {-1, 0, 0.1}, {-1, 0, -0.1}};
  const auto c = covariance(pts);
  EigenDecomposition<double> e = eigen3(c.matrix);
  e.vectors.col(0) = -e.vectors.col(0);
  const auto b = disambiguate(e, c.mean, std::span<const Point3>(pts), Point3::Zero().eval());
  CHECK(b.vectors(0, 0) > 0.0);
  CHECK(is_right_handed_orthonormal(b.vectors));
}

TEST_CASE("disambiguate flags symmetric sets and keeps the input sign") {
  const std::vector<Point3> pts{{1, 0, 0}, {-1, 0, 0}};
  EigenDecomposition<double> e;
  e.values << 1, 0, 0;
  e.vectors = -Eigen::Matrix3d::Identity();
  e.vectors.col(2) = e.vectors.col(0).cross(e.vectors.col(1));
  const auto b = disambiguate(e, Point3::Zero().eval(), std::span<const Point3>(pts), Point3::Zero().eval());
  CHECK(b.degenerate);
  CHECK(b.vectors(0, 0) == -1.0);
  CHECK(is_right_handed_orthonormal(b.vectors));
}

TEST_CASE("disambiguated basis follows a rigid motion of the points") {
  Rng rng(11);
  std::vector<Point3> pts;
  for (int i = 0; i < 60; ++i) pts.emplace_back(3 * rng.uniform() + 0.2, rng.uniform() * rng.uniform(), 0.3 * rng.normal());
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Point3(1, 2, 3).normalized()).toRotationMatrix();
  const Point3 shift(5, -2, 1);
  std::vector<Point3> moved;
  for (const auto& p : pts) moved.push_back(rot * p + shift);

  const auto c0 = covariance(pts), c1 = covariance(moved);
  const auto b0 = disambiguate(eigen3(c0.matrix), c0.mean, std::span<const Point3>(pts), Point3::Zero().eval());
  const auto b1 = disambiguate(eigen3(c1.matrix), c1.mean, std::span<const Point3>(moved), shift);
  CHECK(approx_eq(b1.values, b0.values, 1e-12));
  CHECK(approx_eq(b1.vectors, rot * b0.vectors, 1e-9));
}

TEST_CASE("build_support clips the window and keeps repeated points") {
  PointCloudSequence seq;
  for (int f = 0; f < 3; ++f) seq.frames.push_back({{{0, 0, 0}, {0.5, 0, 0}, {3, 0, 0}}});
  const auto vol = build_support(seq, Point3::Zero(), 0, 1.0, 5, VolumeKind::SpatioTemporal);
  CHECK(vol.size() == 6);  // frames 0..2, two points each
  CHECK(vol.refs.front() == MemberRef{0, 0});
  CHECK(vol.refs.back() == MemberRef{2, 1});

  const auto sp = build_support(seq, Point3::Zero(), 1, 1.0, 5, VolumeKind::Spatial);
  CHECK(sp.size() == 2);
  CHECK(frame_window(0, 5, 3) == std::pair<std::size_t, std::size_t>{0, 2});
}

TEST_CASE("indexed support volume equals brute force") {
  Rng rng(3);
  PointCloudSequence seq;
  for (int f = 0; f < 5; ++f) {
    PointCloudFrame fr;
    for (int i = 0; i < 300; ++i) fr.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
    seq.frames.push_back(fr);
  }
  const SequenceIndex index(seq, 0.6);
  for (int k = 0; k < 50; ++k) {
    const Point3 p(rng.normal(), rng.normal(), rng.normal());
    const std::size_t t = rng.index(5);
    const auto a = build_support(seq, p, t, 0.6, 2, VolumeKind::SpatioTemporal);
    const auto b = build_support(index, p, t, 0.6, 2, VolumeKind::SpatioTemporal);
    REQUIRE(a.size() == b.size());
    CHECK(a.refs == b.refs);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a.members[i] - p).norm() <= 0.6);
  }
}

TEST_CASE("analyze of a rigidly moved volume is equivariant") {
  Rng rng(5);
  PointCloudSequence seq;
  PointCloudFrame fr;
  for (int i = 0; i < 200; ++i) fr.points.emplace_back(2 * rng.uniform(), 0.5 * rng.uniform(), 0.1 * rng.normal());
  seq.frames.push_back(fr);
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(1.1, Point3(0, 1, 1).normalized()).toRotationMatrix();
  PointCloudSequence moved = seq;
  for (auto& p : moved.frames[0].points) p = rot * p;
  const Point3 c(0.4, 0.1, 0.0);
  const auto a = analyze(build_support(seq, c, 0, 0.8, 0, VolumeKind::Spatial));
  const auto b = analyze(build_support(moved, (rot * c).eval(), 0, 0.8, 0, VolumeKind::Spatial));
  CHECK(approx_eq(b.values, a.values, 1e-12));
  CHECK(approx_eq(b.vectors, rot * a.vectors, 1e-9));
}

}  // TEST_SUITE
