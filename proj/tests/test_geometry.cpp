#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "elcont/geometry.hpp"
#include "elcont/solution_io.hpp"
#include "oracles.hpp"

using namespace elcont;

namespace {

PolygonDomain teardrop_polygon() {
  // Convex 12-gon: blunt nose on the left, tapered tip on the right.
  PolygonDomain d;
  d.vertices = {{0.0, 0.0},    {0.03, -0.055}, {0.12, -0.082}, {0.3, -0.09},
                {0.5, -0.075}, {0.75, -0.045}, {1.0, 0.0},     {0.75, 0.045},
                {0.5, 0.075},  {0.3, 0.09},    {0.12, 0.082},  {0.03, 0.055}};
  d.name = "teardrop";
  return d;
}

}  // namespace

TEST_CASE("polygon validation") {
  PolygonDomain sq = PolygonDomain::square(0.5);
  CHECK(sq.area() == doctest::Approx(1.0));
  CHECK(sq.contains({0.0, 0.0}));
  CHECK(!sq.contains({0.7, 0.0}));
  CHECK(sq.boundary_distance({0.0, 0.0}) == doctest::Approx(0.5));

  PolygonDomain bad;
  bad.vertices = {{0, 0}, {1, 0}};
  CHECK_THROWS_AS(bad.validate(), Error);

  PolygonDomain cw;  // clockwise
  cw.vertices = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
  CHECK_THROWS_AS(cw.validate(), Error);

  PolygonDomain self;  // bow-tie
  self.vertices = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  CHECK_THROWS_AS(self.validate(), Error);

  PolygonDomain line;  // zero area
  line.vertices = {{0, 0}, {1, 0}, {2, 0}};
  CHECK_THROWS_AS(line.validate(), Error);
}

TEST_CASE("coarse square is two triangles over the corners") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 1.5);
  CHECK(m.np() == 4);
  CHECK(m.nt() == 2);
  m.validate(1.0);
}

TEST_CASE("triangulated square respects the edge bound") {
  for (double hmax : {0.1, 0.07}) {
    Mesh m = triangulate(PolygonDomain::square(1.0), hmax);
    m.validate(4.0);
    for (int t = 0; t < m.nt(); ++t) CHECK(m.longest_edge(t) <= 1.05 * hmax + 1e-12);
  }
}

TEST_CASE("point count scales like hmax^-2") {
  int np_coarse = triangulate(PolygonDomain::square(0.5), 0.1).np();
  int np_fine = triangulate(PolygonDomain::square(0.5), 0.05).np();
  double ratio = static_cast<double>(np_fine) / np_coarse;
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("triangulation is deterministic") {
  Mesh a = triangulate(teardrop_polygon(), 0.08);
  Mesh b = triangulate(teardrop_polygon(), 0.08);
  REQUIRE(a.np() == b.np());
  for (int i = 0; i < a.np(); ++i) {
    CHECK(a.points[i].x1 == b.points[i].x1);
    CHECK(a.points[i].x2 == b.points[i].x2);
  }
  CHECK(a.triangles == b.triangles);
}

TEST_CASE("general polygon mesh is conforming with bounded edges") {
  PolygonDomain dom = teardrop_polygon();
  for (double hmax : {0.1, 0.05}) {
    Mesh m = triangulate(dom, hmax);
    m.validate(dom.area());
    for (int t = 0; t < m.nt(); ++t) CHECK(m.longest_edge(t) <= 1.05 * hmax + 1e-12);
    // Polygon vertices appear verbatim.
    for (const auto& v : dom.vertices) {
      bool found = false;
      for (const auto& p : m.points)
        if (p.x1 == v.x1 && p.x2 == v.x2) found = true;
      CHECK(found);
    }
  }
}

TEST_CASE("non-convex polygon") {
  PolygonDomain dom;  // L-shape
  dom.vertices = {{0, 0}, {1, 0}, {1, 0.4}, {0.4, 0.4}, {0.4, 1}, {0, 1}};
  dom.name = "lshape";
  Mesh m = triangulate(dom, 0.09);
  m.validate(dom.area());
  for (int t = 0; t < m.nt(); ++t) CHECK(m.longest_edge(t) <= 1.05 * 0.09 + 1e-12);
}

TEST_CASE("red-green refinement of the two-triangle square") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 1.5);
  RefineResult r = refine(m, {{0}});
  // Hand construction: quadrisect triangle 0 (three edge midpoints), green
  // bisection of triangle 1 through the shared diagonal midpoint.
  CHECK(r.mesh.np() == 7);
  CHECK(r.mesh.nt() == 6);
  r.mesh.validate(1.0);
  // Old points keep indices and coordinates.
  for (int i = 0; i < m.np(); ++i) {
    CHECK(r.mesh.points[i].x1 == m.points[i].x1);
    CHECK(r.mesh.points[i].x2 == m.points[i].x2);
  }
  // Parents partition the children.
  REQUIRE(r.parent.size() == 6);
  int from0 = 0, from1 = 0;
  for (int p : r.parent) (p == 0 ? from0 : from1)++;
  CHECK(from0 == 4);
  CHECK(from1 == 2);
}

TEST_CASE("refining everything quadruples the triangle count") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.3);
  RefinementMarks marks;
  for (int t = 0; t < m.nt(); ++t) marks.marked.push_back(t);
  RefineResult r = refine(m, marks);
  CHECK(r.mesh.nt() == 4 * m.nt());
  r.mesh.validate(1.0);
}

TEST_CASE("refinement rejects bad mark sets") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.3);
  CHECK_THROWS_AS(refine(m, {}), Error);
  CHECK_THROWS_AS(refine(m, {{m.nt()}}), Error);
}

TEST_CASE("interpolation reproduces linear fields exactly") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.2);
  std::vector<double> u(m.np());
  for (int i = 0; i < m.np(); ++i) u[i] = 2.0 * m.points[i].x1 - 0.7 * m.points[i].x2 + 0.3;
  oracle::Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    double x = 0.49 * rng.next(), y = 0.49 * rng.next();
    CHECK(interpolate(m, u, {x, y}) ==
          doctest::Approx(2.0 * x - 0.7 * y + 0.3).epsilon(1e-12));
  }
  CHECK_THROWS_AS(interpolate(m, u, {0.51, 0.0}), Error);
}

TEST_CASE("transfer between meshes preserves linear fields") {
  Mesh coarse = triangulate(PolygonDomain::square(0.5), 0.25);
  Mesh fine = triangulate(PolygonDomain::square(0.5), 0.11);
  std::vector<double> u(coarse.np());
  for (int i = 0; i < coarse.np(); ++i)
    u[i] = 1.5 * coarse.points[i].x1 + coarse.points[i].x2;
  auto v = transfer(coarse, u, fine);
  for (int i = 0; i < fine.np(); ++i)
    CHECK(v[i] == doctest::Approx(1.5 * fine.points[i].x1 + fine.points[i].x2)
                      .epsilon(1e-11));
  // Transfer onto the same mesh is the identity.
  auto w = transfer(coarse, u, coarse);
  for (int i = 0; i < coarse.np(); ++i) CHECK(w[i] == doctest::Approx(u[i]).epsilon(1e-13));
}

TEST_CASE("refined-mesh transfer is exact for P1 fields") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.3);
  std::vector<double> u(m.np());
  oracle::Rng rng(7);
  for (auto& x : u) x = rng.next();
  RefinementMarks marks;
  for (int t = 0; t < m.nt(); t += 2) marks.marked.push_back(t);
  RefineResult r = refine(m, marks);
  auto v = transfer(m, u, r.mesh);
  // Old nodes carry the old values verbatim.
  for (int i = 0; i < m.np(); ++i) CHECK(v[i] == doctest::Approx(u[i]).epsilon(1e-13));
}

TEST_CASE("mesh file round-trip is bit-exact") {
  Mesh m = triangulate(teardrop_polygon(), 0.09);
  std::ostringstream first;
  write_mesh(first, m);
  std::istringstream in(first.str());
  Mesh back = read_mesh(in);
  std::ostringstream second;
  write_mesh(second, back);
  CHECK(first.str() == second.str());
  CHECK(back.np() == m.np());
  CHECK(back.nt() == m.nt());
}

TEST_CASE("solution file round-trip") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.4);
  std::vector<double> u(m.np());
  oracle::Rng rng(3);
  for (auto& x : u) x = 10.0 * rng.next();
  std::ostringstream first;
  write_solution(first, m, -3.25, u);
  std::istringstream in(first.str());
  Solution s = read_solution(in);
  CHECK(s.mu == -3.25);
  REQUIRE(s.values.size() == u.size());
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(s.values[i] == u[i]);
  std::ostringstream second;
  write_solution(second, s.mesh, s.mu, s.values);
  CHECK(first.str() == second.str());
}

TEST_CASE("malformed mesh input is rejected") {
  std::istringstream bad1("not-a-mesh\n");
  CHECK_THROWS_AS(read_mesh(bad1), Error);
  std::istringstream bad2("elcont-mesh v1\nnp 3\nnt 1\n0 0\n1 0\n");
  CHECK_THROWS_AS(read_mesh(bad2), Error);
}
