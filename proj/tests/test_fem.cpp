#include <cmath>
#include <vector>

#include "doctest.h"
#include "elcont/fem.hpp"
#include "elcont/linsolve.hpp"
#include "oracles.hpp"

using namespace elcont;

namespace {

Mesh reference_triangle() {
  Mesh m;
  m.points = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.boundary_edges = {{0, 1}, {1, 2}, {2, 0}};
  m.on_boundary = {1, 1, 1};
  return m;
}

/// Constant-coefficient linear problem -Lap(u) = g(x) as an EllipticProblem.
EllipticProblem poisson_problem(std::function<double(const Point2&)> g) {
  EllipticProblem p;
  p.id = "poisson";
  p.c = 1.0;
  p.a = 0.0;
  p.bc = BoundaryCondition::dirichlet_zero;
  p.domain = PolygonDomain::square(0.5);
  p.f = [g](double, const Point2& x, double, double) { return g(x); };
  p.f_u = [](double, const Point2&, double, double) { return 0.0; };
  p.F = [g](double u, const Point2& x, double, double) { return g(x) * u; };
  return p;
}

// Exact integral over a triangle of lam0^a lam1^b lam2^c (2A * a!b!c!/(a+b+c+2)!).
double bary_integral(double area, int a, int b, int c) {
  auto fact = [](int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  return 2.0 * area * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2);
}

}  // namespace

TEST_CASE("local stiffness and mass on the reference triangle") {
  Mesh m = reference_triangle();
  SparseMatrix k = assemble_stiffness(m, 1.0);
  double k_ref[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  double m_ref[3][3] = {{2, 1, 1}, {1, 2, 1}, {1, 1, 2}};
  SparseMatrix mm = assemble_mass(m);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(k.coeff(i, j) == doctest::Approx(k_ref[i][j]).epsilon(1e-14));
      CHECK(mm.coeff(i, j) == doctest::Approx(m_ref[i][j] / 24.0).epsilon(1e-14));
    }
  // c scales linearly.
  SparseMatrix k2 = assemble_stiffness(m, 2.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(k2.coeff(i, j) == doctest::Approx(2.0 * k.coeff(i, j)).epsilon(1e-14));
}

TEST_CASE("global assembly identities") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.15);
  SparseMatrix k = assemble_stiffness(m, 1.0);
  SparseMatrix mm = assemble_mass(m);
  CHECK(k.is_symmetric());
  CHECK(mm.is_symmetric());
  std::vector<double> ones(m.np(), 1.0);
  auto k1 = k.multiply(ones);
  for (double v : k1) CHECK(std::abs(v) < 1e-12);  // constants in the kernel
  auto m1 = mm.multiply(ones);
  double total = 0.0, onesM = 0.0;
  for (int i = 0; i < m.np(); ++i) {
    CHECK(m1[i] > 0.0);  // positive row sums
    total += m1[i];
    onesM += m1[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));  // sum of entries = area
  CHECK(onesM == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(norm_l2(mm, ones) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate triangles are rejected") {
  Mesh m = reference_triangle();
  m.points[2] = {2.0, 0.0};  // collinear
  CHECK_THROWS_AS(assemble_stiffness(m, 1.0), Error);
  CHECK_THROWS_AS(assemble_mass(m), Error);
}

TEST_CASE("load vector identities") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.2);
  SparseMatrix mm = assemble_mass(m);

  EllipticProblem p_one = poisson_problem([](const Point2&) { return 1.0; });
  std::vector<double> zero(m.np(), 0.0);
  auto load1 = assemble_load(m, p_one, zero, 0.0);
  std::vector<double> ones(m.np(), 1.0);
  auto rowsum = mm.multiply(ones);
  for (int i = 0; i < m.np(); ++i)
    CHECK(load1[i] == doctest::Approx(rowsum[i]).epsilon(1e-12));

  // f(u) = u reproduces M U (quadrature exact at degree 2).
  EllipticProblem p_id = poisson_problem([](const Point2&) { return 0.0; });
  p_id.f = [](double u, const Point2&, double, double) { return u; };
  p_id.f_u = [](double, const Point2&, double, double) { return 1.0; };
  oracle::Rng rng(8);
  std::vector<double> u(m.np());
  for (auto& v : u) v = rng.next();
  auto loadu = assemble_load(m, p_id, u, 0.0);
  auto mu = mm.multiply(u);
  for (int i = 0; i < m.np(); ++i)
    CHECK(loadu[i] == doctest::Approx(mu[i]).epsilon(1e-11).scale(1.0));

  // f(u) = u^3 at u = 2: components sum to 8 * |Omega|.
  EllipticProblem p_cube = poisson_problem([](const Point2&) { return 0.0; });
  p_cube.f = [](double u, const Point2&, double, double) { return u * u * u; };
  p_cube.f_u = [](double u, const Point2&, double, double) { return 3.0 * u * u; };
  std::vector<double> twos(m.np(), 2.0);
  auto load8 = assemble_load(m, p_cube, twos, 0.0);
  double s = 0.0;
  for (double v : load8) s += v;
  CHECK(s == doctest::Approx(8.0).epsilon(1e-10));
}

TEST_CASE("degree-4 quadrature integrates cubic loads exactly") {
  Mesh m = reference_triangle();
  EllipticProblem p = poisson_problem([](const Point2&) { return 0.0; });
  p.bc = BoundaryCondition::neumann_zero;  // keep all three nodes active
  p.f = [](double u, const Point2&, double, double) { return u * u * u; };
  p.f_u = [](double u, const Point2&, double, double) { return 3.0 * u * u; };
  p.quad = QuadRule::order4;
  std::vector<double> u = {0.7, -1.3, 2.1};
  auto load = assemble_load(m, p, u, 0.0);
  // Oracle: expand (sum u_i lam_i)^3 lam_m with exact barycentric integrals.
  for (int mm = 0; mm < 3; ++mm) {
    double exact = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          int e[3] = {0, 0, 0};
          e[i]++, e[j]++, e[k]++, e[mm]++;
          exact += u[i] * u[j] * u[k] * bary_integral(0.5, e[0], e[1], e[2]);
        }
    CHECK(load[mm] == doctest::Approx(exact).epsilon(1e-13));
  }
}

TEST_CASE("jacobian equals linear part when the nonlinearity vanishes") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.25);
  EllipticProblem p = poisson_problem([](const Point2&) { return 0.0; });
  p.a = 2.5;
  FemSystem sys(m, p);
  std::vector<double> zero(sys.n_free(), 0.0);
  SparseMatrix j = sys.jacobian_free(zero, 0.0);
  for (int i = 0; i < sys.n_free(); ++i)
    for (int k = j.row_ptr()[i]; k < j.row_ptr()[i + 1]; ++k) {
      int col = j.col_idx()[k];
      double want = sys.stiffness_free().coeff(i, col) + 2.5 * sys.mass_free().coeff(i, col);
      CHECK(j.values()[k] == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("jacobian agrees with finite differences of the residual") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.3);
  EllipticProblem p = poisson_problem([](const Point2&) { return 0.0; });
  p.f = [](double u, const Point2&, double mu, double) { return mu * u + u * u * u; };
  p.f_u = [](double u, const Point2&, double mu, double) { return mu + 3.0 * u * u; };
  FemSystem sys(m, p);
  oracle::Rng rng(13);
  std::vector<double> u(sys.n_free());
  for (auto& v : u) v = rng.next();
  double mu = 7.0;
  SparseMatrix j = sys.jacobian_free(u, mu);
  auto g0 = sys.residual_free(u, mu);
  const double eps = 1e-6;
  for (int k = 0; k < sys.n_free(); ++k) {
    auto up = u;
    up[k] += eps;
    auto g1 = sys.residual_free(up, mu);
    for (int i = 0; i < sys.n_free(); ++i) {
      double fd = (g1[i] - g0[i]) / eps;
      CHECK(std::abs(fd - j.coeff(i, k)) <= 1e-5);
    }
  }
}

TEST_CASE("reduced stiffness is positive definite") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.3);
  EllipticProblem p = poisson_problem([](const Point2&) { return 0.0; });
  FemSystem sys(m, p);
  int n = sys.n_free();
  oracle::Dense kd(n, std::vector<double>(n)), md(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      kd[i][j] = sys.stiffness_free().coeff(i, j);
      md[i][j] = sys.mass_free().coeff(i, j);
    }
  auto eig = oracle::dense_gen_eig(kd, md);
  CHECK(eig.values.front() > 0.0);
  // Coarse discrete first eigenvalue stays within 25% of 2*pi^2.
  CHECK(eig.values.front() == doctest::Approx(2.0 * M_PI * M_PI).epsilon(0.25));
}

TEST_CASE("nodal l2 norm converges for a smooth sample") {
  for (double hmax : {0.1, 0.05}) {
    Mesh m = triangulate(PolygonDomain::square(0.5), hmax);
    SparseMatrix mm = assemble_mass(m);
    std::vector<double> u(m.np());
    for (int i = 0; i < m.np(); ++i)
      u[i] = std::sin(M_PI * m.points[i].x1) * std::cos(M_PI * m.points[i].x2);
    CHECK(norm_l2(mm, u) == doctest::Approx(0.5).epsilon(hmax == 0.1 ? 0.01 : 0.004));
  }
  CHECK(norm_inf(std::vector<double>{-3.0, 2.0, 0.5}) == 3.0);
}

TEST_CASE("manufactured poisson solution converges at second order") {
  auto exact = [](const Point2& x) {
    return std::cos(M_PI * x.x1) * std::cos(M_PI * x.x2);
  };
  EllipticProblem p = poisson_problem([](const Point2& x) {
    return 2.0 * M_PI * M_PI * std::cos(M_PI * x.x1) * std::cos(M_PI * x.x2);
  });
  std::vector<double> errs;
  for (double hmax : {0.2, 0.1, 0.05}) {
    Mesh m = triangulate(PolygonDomain::square(0.5), hmax);
    FemSystem sys(m, p);
    std::vector<double> u0(sys.n_free(), 0.0);
    NewtonResult nr = newton_solve(sys, u0, 0.0, 1e-12, 5);
    REQUIRE(nr.converged);
    auto u_full = sys.expand(nr.u);
    // True L2 error by degree-4 quadrature per triangle.
    const double a = 0.445948490915965, wa = 0.223381589678011;
    const double b = 0.091576213509771, wb = 0.109951743655322;
    double pts[6][3] = {{a, a, 1 - 2 * a}, {1 - 2 * a, a, a}, {a, 1 - 2 * a, a},
                        {b, b, 1 - 2 * b}, {1 - 2 * b, b, b}, {b, 1 - 2 * b, b}};
    double wts[6] = {wa, wa, wa, wb, wb, wb};
    double err2 = 0.0;
    for (int t = 0; t < m.nt(); ++t) {
      const auto& tri = m.triangles[t];
      double area = m.triangle_area(t);
      for (int q = 0; q < 6; ++q) {
        Point2 x = pts[q][0] * m.points[tri[0]] + pts[q][1] * m.points[tri[1]] +
                   pts[q][2] * m.points[tri[2]];
        double uh = pts[q][0] * u_full[tri[0]] + pts[q][1] * u_full[tri[1]] +
                    pts[q][2] * u_full[tri[2]];
        double d = uh - exact(x);
        err2 += wts[q] * area * d * d;
      }
    }
    errs.push_back(std::sqrt(err2));
  }
  CHECK(errs[0] / errs[1] >= 3.4);
  CHECK(errs[0] / errs[1] <= 4.6);
  CHECK(errs[1] / errs[2] >= 3.4);
  CHECK(errs[1] / errs[2] <= 4.6);
}

TEST_CASE("error estimator vanishes for affine fields") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.3);
  EllipticProblem p = poisson_problem([](const Point2&) { return 0.0; });
  FemSystem sys(m, p);
  std::vector<double> u(m.np());
  for (int i = 0; i < m.np(); ++i) u[i] = 3.0 * m.points[i].x1 - m.points[i].x2 + 0.5;
  auto est = error_estimate(sys, u, 0.0);
  for (double e : est) CHECK(std::abs(e) < 1e-12);
}

TEST_CASE("refining the worst triangle reduces the maximum estimate") {
  EllipticProblem p = poisson_problem([](const Point2& x) {
    return 2.0 * M_PI * M_PI * std::cos(M_PI * x.x1) * std::cos(M_PI * x.x2);
  });
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.25);
  FemSystem sys(m, p);
  NewtonResult nr = newton_solve(sys, std::vector<double>(sys.n_free(), 0.0), 0.0, 1e-12, 5);
  REQUIRE(nr.converged);
  auto est = error_estimate(sys, sys.expand(nr.u), 0.0);
  double emax0 = 0.0;
  for (double e : est) emax0 = std::max(emax0, e);
  REQUIRE(emax0 > 0.0);
  // Mark the whole symmetry orbit of worst triangles, not just one of them.
  RefinementMarks marks;
  for (int t = 0; t < m.nt(); ++t)
    if (est[t] >= 0.999 * emax0) marks.marked.push_back(t);
  RefineResult r = refine(m, marks);
  FemSystem sys2(r.mesh, p);
  NewtonResult nr2 =
      newton_solve(sys2, std::vector<double>(sys2.n_free(), 0.0), 0.0, 1e-12, 5);
  REQUIRE(nr2.converged);
  auto est2 = error_estimate(sys2, sys2.expand(nr2.u), 0.0);
  double emax1 = 0.0;
  for (double e : est2) emax1 = std::max(emax1, e);
  CHECK(emax1 < emax0);
}

TEST_CASE("newton converges quadratically fast on a cubic problem") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.15);
  EllipticProblem p = poisson_problem([](const Point2&) { return 0.0; });
  p.f = [](double u, const Point2&, double mu, double) { return mu * u + u * u * u; };
  p.f_u = [](double u, const Point2&, double mu, double) { return mu + 3.0 * u * u; };
  FemSystem sys(m, p);
  // Start from a bump; at mu = -10 there is a nontrivial solution scale.
  std::vector<double> u0(sys.n_free());
  for (int i = 0; i < sys.n_free(); ++i) {
    Point2 x = m.points[sys.free_nodes()[i]];
    u0[i] = 6.0 * std::cos(M_PI * x.x1) * std::cos(M_PI * x.x2);
  }
  NewtonResult nr = newton_solve(sys, u0, -10.0, 1e-10, 30);
  CHECK(nr.converged);
  CHECK(norm_inf(sys.residual_free(nr.u, -10.0)) <= 1e-10);
  CHECK(norm_inf(nr.u) > 1.0);  // nontrivial
}

TEST_CASE("newton reports divergence instead of looping") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.3);
  EllipticProblem p = poisson_problem([](const Point2&) { return 0.0; });
  p.f = [](double u, const Point2&, double, double) { return std::exp(3.0 * u); };
  p.f_u = [](double u, const Point2&, double, double) { return 3.0 * std::exp(3.0 * u); };
  FemSystem sys(m, p);
  std::vector<double> huge(sys.n_free(), 40.0);
  NewtonResult nr = newton_solve(sys, huge, 0.0, 1e-10, 8);
  CHECK(!nr.converged);
}

TEST_CASE("adapt is a no-op at the triangle budget and refines otherwise") {
  EllipticProblem p = poisson_problem([](const Point2& x) {
    return 2.0 * M_PI * M_PI * std::cos(M_PI * x.x1) * std::cos(M_PI * x.x2);
  });
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.25);
  FemSystem sys(m, p);
  NewtonResult nr = newton_solve(sys, std::vector<double>(sys.n_free(), 0.0), 0.0, 1e-12, 5);
  REQUIRE(nr.converged);
  auto u_full = sys.expand(nr.u);

  AdaptOptions no_op;
  no_op.maxt = m.nt();
  AdaptResult r0 = adapt(m, p, u_full, 0.0, no_op);
  CHECK(r0.generations == 0);
  CHECK(r0.mesh.nt() == m.nt());
  CHECK(!r0.warning);

  AdaptOptions go;
  go.ngen = 3;
  go.maxt = 100 * m.nt();
  go.tol = 1e-10;
  AdaptResult r1 = adapt(m, p, u_full, 0.0, go);
  CHECK(r1.generations == 3);
  CHECK(r1.mesh.nt() > m.nt());
  CHECK(!r1.warning);
  FemSystem sys1(r1.mesh, p);
  CHECK(norm_inf(sys1.residual_free(sys1.reduce(r1.u_full), 0.0)) <= 1e-10);
  CHECK_THROWS_AS(adapt(m, p, u_full, 0.0, AdaptOptions{.ngen = 0}), Error);
}

TEST_CASE("eigenvalue shift hint is a true lower bound") {
  Mesh m = triangulate(PolygonDomain::square(0.5), 0.2);
  EllipticProblem p = poisson_problem([](const Point2&) { return 0.0; });
  p.f = [](double u, const Point2&, double mu, double) { return mu * u + u * u * u; };
  p.f_u = [](double u, const Point2&, double mu, double) { return mu + 3.0 * u * u; };
  FemSystem sys(m, p);
  oracle::Rng rng(4);
  std::vector<double> u(sys.n_free());
  for (auto& v : u) v = 2.0 * rng.next();
  double mu = 55.0;
  double hint = sys.eig_shift_hint(u, mu);
  EigenOptions opts;
  opts.shift = hint;
  EigenResult er = eigs_generalized(sys.jacobian_free(u, mu), sys.mass_free(), 4, opts);
  CHECK(er.all_converged);
  CHECK(er.values.front() > hint);
}
