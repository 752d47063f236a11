#include <doctest.h>

#include <numbers>

#include <Eigen/Geometry>

#include "hopc/hopc_descriptor.hpp"
#include "hopc/recognition.hpp"
#include "test_util.hpp"

using namespace hopc;
using test::approx_eq;

TEST_SUITE("hopc") {

TEST_CASE("dodecahedron geometry") {
  const auto raw = dodecahedron(VertexMode::Raw);
  const auto unit = dodecahedron();
  const double phi = std::numbers::phi;
  CHECK(raw.psi == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  CHECK(unit.psi == doctest::Approx(std::sqrt(5.0) / 3.0).epsilon(1e-15));
  CHECK(approx_eq(raw.directions.col(0), Eigen::Vector3d(1, 1, 1), 0.0));
  CHECK(approx_eq(raw.directions.col(7), Eigen::Vector3d(-1, -1, -1), 0.0));
  int adjacent = 0;
  for (int i = 0; i < kNumDirections; ++i) {
    CHECK(raw.directions.col(i).norm() == doctest::Approx(std::sqrt(3.0)));
    CHECK(unit.directions.col(i).norm() == doctest::Approx(1.0));
    int near = 0;
    for (int j = 0; j < kNumDirections; ++j)
      if (i != j && std::abs(raw.directions.col(i).dot(raw.directions.col(j)) - (phi + 1 / phi)) < 1e-12) ++near;
    CHECK(near == 3);
    adjacent += near;
  }
  CHECK(adjacent == 60);  // 30 edges, counted from both ends
}

TEST_CASE("project_quantize of a vertex is one-hot") {
  const auto dirs = dodecahedron();
  for (int i = 0; i < kNumDirections; ++i) {
    const BinVector b = project_quantize(dirs.directions.col(i), dirs);
    CHECK(b(i) == doctest::Approx(1.0 - std::sqrt(5.0) / 3.0).epsilon(1e-12));
    CHECK(b.sum() == doctest::Approx(b(i)));
  }
  // The antipode of column 0 votes into column 7.
  const BinVector anti = project_quantize(-dirs.directions.col(0), dirs);
  CHECK(anti(7) > 0.0);
  CHECK(anti.sum() == doctest::Approx(anti(7)));
}

TEST_CASE("a face center votes equally into its five vertices") {
  const auto dirs = dodecahedron();
  // Face centers of this dodecahedron point along (0, +-phi, +-1). Their dot
  // with the face's vertices is the in/circumradius ratio, above psi, so
  // even the direction farthest from every vertex quantizes to non-zero.
  const Eigen::Vector3d center = Eigen::Vector3d(0, std::numbers::phi, 1).normalized();
  const BinVector b = project_quantize(center, dirs);
  CHECK((b.array() > 0.0).count() == 5);
  const double inradius_ratio = (dirs.directions.transpose() * center).maxCoeff();
  CHECK(inradius_ratio > dirs.psi);
  for (int i = 0; i < kNumDirections; ++i)
    if (b(i) > 0.0) CHECK(b(i) == doctest::Approx(inradius_ratio - dirs.psi));
}

TEST_CASE("no unit direction quantizes to zero") {
  const auto dirs = dodecahedron();
  Rng rng(17);
  for (int k = 0; k < 2000; ++k) {
    const Eigen::Vector3d v = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
    CHECK(project_quantize(v, dirs).maxCoeff() > 0.0);
  }
}

TEST_CASE("project_quantize rejects non-unit input") {
  CHECK_THROWS_AS(project_quantize(Eigen::Vector3d(2, 0, 0), dodecahedron()), Error);
}

TEST_CASE("hopc blocks follow the eigenvalues") {
  const auto dirs = dodecahedron();
  const Eigen::Matrix3d v = Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 2, 0.5).normalized()).toRotationMatrix();

  const HopcVector collinear = hopc::hopc(Eigen::Vector3d(2, 0, 0), v, dirs);
  CHECK(collinear.segment<20>(20).isZero());
  CHECK(collinear.segment<20>(40).isZero());

  const HopcVector planar = hopc::hopc(Eigen::Vector3d(2, 1, 0), v, dirs);
  CHECK(planar.segment<20>(40).isZero());

  const Eigen::Vector3d lambda(3, 2, 1);
  const HopcVector full = hopc::hopc(lambda, v, dirs);
  for (int j = 0; j < 3; ++j) {
    const double n = full.segment<20>(20 * j).norm();
    CHECK(n <= lambda(j) + 1e-12);
    CHECK((full.segment<20>(20 * j).array() >= 0.0).all());
  }
}

TEST_CASE("hopc is Lipschitz in the eigenvalues for a fixed basis") {
  const auto dirs = dodecahedron();
  const Eigen::Matrix3d v = Eigen::AngleAxisd(0.9, Eigen::Vector3d(0, 1, 1).normalized()).toRotationMatrix();
  Rng rng(21);
  for (int k = 0; k < 100; ++k) {
    Eigen::Vector3d a(3 + rng.uniform(), 2 + rng.uniform(), rng.uniform());
    Eigen::Vector3d b = a + 1e-3 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    CHECK((hopc::hopc(a, v, dirs) - hopc::hopc(b, v, dirs)).norm() <= (a - b).norm() + 1e-12);
  }
}

TEST_CASE("volume hopc is invariant to translation and follows rotation of the basis") {
  const auto dirs = dodecahedron();
  Rng rng(31);
  PointCloudSequence seq;
  PointCloudFrame fr;
  for (int i = 0; i < 150; ++i) fr.points.emplace_back(2 * rng.uniform(), 0.6 * rng.uniform(), 0.1 * rng.normal());
  seq.frames.push_back(fr);
  const Point3 c(0.8, 0.3, 0.0);
  const auto vol = build_support(seq, c, 0, 0.7, 0, VolumeKind::Spatial);
  const HopcVector h = hopc::hopc(vol, analyze(vol), dirs);

  PointCloudSequence shifted = seq;
  const Point3 t(10, -4, 2);
  for (auto& p : shifted.frames[0].points) p += t;
  const auto vs = build_support(shifted, (c + t).eval(), 0, 0.7, 0, VolumeKind::Spatial);
  CHECK(approx_eq(hopc::hopc(vs, analyze(vs), dirs), h, 1e-9));

  // Expressed in its own eigenframe the descriptor does not see a rotation.
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(2.0, Eigen::Vector3d(1, -1, 2).normalized()).toRotationMatrix();
  PointCloudSequence turned = seq;
  for (auto& p : turned.frames[0].points) p = rot * p;
  const auto vr = build_support(turned, (rot * c).eval(), 0, 0.7, 0, VolumeKind::Spatial);
  const auto ba = analyze(vol), bb = analyze(vr);
  CHECK(approx_eq(hopc::hopc(ba.values, ba.vectors.transpose() * ba.vectors, dirs),
                  hopc::hopc(bb.values, bb.vectors.transpose() * bb.vectors, dirs), 1e-9));
  CHECK(approx_eq(bb.vectors, rot * ba.vectors, 1e-9));
}

}  // TEST_SUITE
