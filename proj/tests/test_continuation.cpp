#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "elcont/continuation.hpp"
#include "oracles.hpp"

using namespace elcont;

namespace {

/// G(u, mu) = u^2 + mu^2 - 1: the unit circle in the (u, mu) plane.
struct CircleSystem : ContinuationSystem {
  int n() const override { return 1; }
  std::vector<double> residual(std::span<const double> u, double mu) const override {
    return {u[0] * u[0] + mu * mu - 1.0};
  }
  SparseMatrix jacobian(std::span<const double> u, double) const override {
    return SparseMatrix(1, {{0, 0, 2.0 * u[0]}});
  }
  std::vector<double> residual_mu(std::span<const double>, double mu) const override {
    return {2.0 * mu};
  }
};

/// Circle system relying on the finite-difference default for dG/dmu.
struct CircleFd : ContinuationSystem {
  int n() const override { return 1; }
  std::vector<double> residual(std::span<const double> u, double mu) const override {
    return {u[0] * u[0] + mu * mu - 1.0};
  }
  SparseMatrix jacobian(std::span<const double> u, double) const override {
    return SparseMatrix(1, {{0, 0, 2.0 * u[0]}});
  }
};

/// G(u, mu) = mu*u - u^3: pitchfork from the trivial branch at mu = 0.
struct PitchforkSystem : ContinuationSystem {
  int n() const override { return 1; }
  std::vector<double> residual(std::span<const double> u, double mu) const override {
    return {mu * u[0] - u[0] * u[0] * u[0]};
  }
  SparseMatrix jacobian(std::span<const double> u, double mu) const override {
    return SparseMatrix(1, {{0, 0, mu - 3.0 * u[0] * u[0]}});
  }
  std::vector<double> residual_mu(std::span<const double> u, double) const override {
    return {u[0]};
  }
};

ContSettings circle_settings() {
  ContSettings s;
  s.ds = 0.1;
  s.dsmax = 0.2;
  s.dsmin = 1e-4;
  s.tol = 1e-10;
  s.maxit = 12;
  s.xi = 0.5;
  s.neig = 1;
  s.max_steps = 120;
  return s;
}

}  // namespace

TEST_CASE("weighted inner product") {
  std::vector<double> z = {1, 1, 1, 1}, w = {1, 1, 1, 1};
  CHECK(xi_inner(0.5, z, w) == doctest::Approx(2.0).epsilon(1e-15));
  std::vector<double> a = {0, 0, 0, 3.0}, b = {0, 0, 0, -2.0};
  CHECK(xi_inner(0.25, a, b) == doctest::Approx(0.75 * 3.0 * -2.0).epsilon(1e-15));
  CHECK_THROWS_AS(xi_inner(0.0, z, w), Error);
  CHECK_THROWS_AS(xi_inner(1.0, z, w), Error);
  std::vector<double> shorter = {1.0};
  CHECK_THROWS_AS(xi_inner(0.5, z, shorter), Error);
}

TEST_CASE("tangent on the circle") {
  CircleSystem sys;
  std::vector<double> u = {1.0};
  SparseMatrix j = sys.jacobian(u, 0.0);
  auto jm = sys.residual_mu(u, 0.0);
  std::vector<double> prev = {0.0, 1.0};
  auto t = tangent(j, jm, prev, 0.5);
  CHECK(t[0] == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  CHECK(t[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // Orientation follows the previous tangent.
  std::vector<double> prev_down = {0.0, -1.0};
  auto td = tangent(j, jm, prev_down, 0.5);
  CHECK(td[1] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-12));
  // The finite-difference dG/dmu default reproduces the analytic tangent.
  CircleFd fd;
  std::vector<double> u2 = {0.6};
  double mu2 = 0.8;
  auto ta = tangent(sys.jacobian(u2, mu2), sys.residual_mu(u2, mu2), prev, 0.5);
  auto tb = tangent(fd.jacobian(u2, mu2), fd.residual_mu(u2, mu2), prev, 0.5);
  CHECK(ta[0] == doctest::Approx(tb[0]).epsilon(1e-6));
  CHECK(ta[1] == doctest::Approx(tb[1]).epsilon(1e-6));
}

TEST_CASE("tangent along the trivial branch of the cubic problem") {
  EllipticProblem p = lef_test();
  Mesh m = triangulate(p.domain, 0.25);
  FemContinuation sys(m, p);
  int n = sys.n();
  double xi = 1.0 / m.np();
  std::vector<double> zero(n, 0.0);
  std::vector<double> prev(n + 1, 0.0);
  prev.back() = 1.0;
  auto t = tangent(sys.jacobian(zero, 5.0), sys.residual_mu(zero, 5.0), prev, xi);
  for (int i = 0; i < n; ++i) CHECK(std::abs(t[i]) <= 1e-10);
  CHECK(t[n] == doctest::Approx(1.0 / std::sqrt(1.0 - xi)).epsilon(1e-10));
  CHECK(xi_inner(xi, t, t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("corrector lands on the circle in few iterations") {
  CircleSystem sys;
  std::vector<double> u0 = {1.0};
  std::vector<double> t0 = {0.0, std::sqrt(2.0)};
  for (double ds : {0.05, 0.1, 0.2}) {
    std::vector<double> guess = {u0[0] + ds * t0[0]};
    double mu_guess = 0.0 + ds * t0[1];
    auto r = correct(sys, guess, mu_guess, u0, 0.0, t0, ds, 0.5, 1e-10, 12);
    REQUIRE(r.converged);
    CHECK(r.iters <= 5);
    CHECK(std::abs(r.u[0] * r.u[0] + r.mu * r.mu - 1.0) <= 1e-10);
    // Hyperplane condition at the accepted point.
    double p = 0.5 * t0[0] * (r.u[0] - u0[0]) + 0.5 * t0[1] * (r.mu - 0.0) - ds;
    CHECK(std::abs(p) <= 1e-10);
  }
  // A guess that is already a solution on the hyperplane converges immediately.
  auto r0 = correct(sys, u0, 0.0, u0, 0.0, t0, 0.0, 0.5, 1e-10, 12);
  CHECK(r0.converged);
  CHECK(r0.iters <= 1);
}

TEST_CASE("step size law") {
  ContSettings s;
  s.dsmin = 1e-4;
  s.dsmax = 0.5;
  CHECK(step_control(true, 2, 0.1, s) == doctest::Approx(0.13).epsilon(1e-15));
  CHECK(step_control(true, 7, 0.1, s) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(step_control(false, 0, 0.1, s) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(step_control(true, 1, 0.45, s) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(step_control(false, 0, 1.5e-4, s) == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("event classification") {
  auto mk = [](double mu_dot, int n_neg, int det) {
    BranchPoint p;
    p.tangent = {0.0, mu_dot};
    p.n_neg = n_neg;
    p.det_sign = det;
    return p;
  };
  auto ev1 = detect_events(mk(1.0, 0, 1), mk(-1.0, 1, -1));
  REQUIRE(ev1.size() == 1);
  CHECK(ev1[0] == PointType::fold);
  auto ev2 = detect_events(mk(1.0, 0, 1), mk(1.0, 1, -1));
  REQUIRE(ev2.size() == 1);
  CHECK(ev2[0] == PointType::branch);
  auto ev3 = detect_events(mk(1.0, 1, -1), mk(1.0, 3, -1));
  REQUIRE(ev3.size() == 1);
  CHECK(ev3[0] == PointType::branch);
  CHECK(detect_events(mk(1.0, 0, 1), mk(1.0, 0, 1)).empty());
  // A det flip alone is a branch event unless the guard is on.
  CHECK(detect_events(mk(1.0, 0, 1), mk(1.0, 0, -1)).size() == 1);
  CHECK(detect_events(mk(1.0, 0, 1), mk(1.0, 0, -1), true).empty());
}

TEST_CASE("full circle continuation finds both folds") {
  CircleSystem sys;
  std::vector<double> u0 = {1.0};
  Branch b = continue_system(sys, u0, 0.0, circle_settings());
  REQUIRE(b.points.size() >= 30);
  CHECK(b.points.front().point_type == PointType::start);
  CHECK(b.points.back().point_type == PointType::endpoint);

  double xi = b.settings.xi;
  for (size_t i = 0; i < b.points.size(); ++i) {
    const BranchPoint& p = b.points[i];
    CHECK(std::abs(p.u[0] * p.u[0] + p.mu * p.mu - 1.0) <= 1e-9);
    CHECK(xi_inner(xi, p.tangent, p.tangent) == doctest::Approx(1.0).epsilon(1e-10));
    if (i > 0) {
      const BranchPoint& q = b.points[i - 1];
      CHECK(xi_inner(xi, q.tangent, p.tangent) > 0.0);
      double gap = p.s - q.s;
      CHECK(gap >= b.settings.dsmin * (1.0 - 1e-12));
      CHECK(gap <= b.settings.dsmax * (1.0 + 1e-12));
    }
  }
  int folds = 0;
  for (const auto& e : b.events)
    if (e.type == PointType::fold) {
      ++folds;
      CHECK(std::abs(e.mu) > 0.9);
      CHECK(std::abs(e.mu) <= 1.0 + 1e-9);
      CHECK(b.points[e.idx].point_type == PointType::fold);
    }
  CHECK(folds >= 2);
  // Stability flips across each fold: J = 2u changes sign with u.
  for (const auto& e : b.events)
    if (e.type == PointType::fold)
      CHECK(b.points[e.idx].n_neg != b.points[e.idx - 1].n_neg);
}

TEST_CASE("continuation respects the mu window") {
  CircleSystem sys;
  ContSettings s = circle_settings();
  s.mu_max = 0.5;
  std::vector<double> u0 = {1.0};
  Branch b = continue_system(sys, u0, 0.0, s);
  CHECK(b.points.back().mu > 0.5);
  for (size_t i = 0; i + 1 < b.points.size(); ++i) CHECK(b.points[i].mu <= 0.5);
}

TEST_CASE("start polishing accepts near-solutions and rejects garbage") {
  CircleSystem sys;
  ContSettings s = circle_settings();
  s.max_steps = 3;
  std::vector<double> near = {1.0 + 1e-3};
  Branch b = continue_system(sys, near, 0.0, s);
  CHECK(b.points.front().u[0] == doctest::Approx(1.0).epsilon(1e-9));
  // At u = 0, mu = 0 the Jacobian is singular and the residual cannot drop.
  std::vector<double> bad = {0.0};
  CHECK_THROWS_AS(continue_system(sys, bad, 0.0, s), Error);
}

TEST_CASE("scalar pitchfork: branch event, bisection location, switching") {
  PitchforkSystem sys;
  ContSettings s = circle_settings();
  s.ds = 0.1;
  s.dsmax = 0.15;
  s.mu_max = 0.6;
  s.max_steps = 40;
  std::vector<double> u0 = {0.0};
  Branch b = continue_system(sys, u0, -0.5, s);

  int bev = -1;
  for (const auto& e : b.events)
    if (e.type == PointType::branch) bev = e.idx;
  REQUIRE(bev > 0);
  CHECK(std::abs(b.points[bev].mu) < 0.2);
  for (const auto& e : b.events) CHECK(e.type != PointType::fold);

  BranchPoint located = findbif_system(sys, b.points[bev - 1], b.points[bev], s);
  CHECK(std::abs(located.mu) <= 1e-6);
  CHECK_THROWS_AS(findbif_system(sys, b.points[0], b.points[1], s), Error);

  ContSettings sw = s;
  sw.direction = +1;  // the nontrivial pair lives at mu > 0
  auto starts = switch_branch_system(sys, located, 0.05, sw);
  REQUIRE(starts.size() == 2);
  for (const auto& st : starts) {
    CHECK(st.mu == doctest::Approx(located.mu + 1e-4).epsilon(1e-12));
    CHECK(std::abs(st.u[0]) > 5e-3);
    CHECK(std::abs(st.u[0]) < 2e-2);
  }
  CHECK(starts[0].u[0] * starts[1].u[0] < 0.0);  // the two signs
  CHECK_THROWS_AS(switch_branch_system(sys, located, 0.0, sw), Error);

  // Continuing against the branch direction only finds the trivial state,
  // which the non-triviality guard rejects.
  ContSettings swm = sw;
  swm.direction = -1;
  CHECK(switch_branch_system(sys, located, 0.05, swm).empty());
}

TEST_CASE("trivial branch of the cubic problem: crossing, location, switching") {
  EllipticProblem p = lef_test();
  Mesh m = triangulate(p.domain, 0.2);
  ContSettings s;
  s.ds = 0.25;
  s.dsmax = 0.5;
  s.tol = 1e-8;
  s.maxit = 10;
  s.neig = 12;
  s.max_steps = 60;
  s.mu_max = 25.0;
  std::vector<double> zero(m.np(), 0.0);
  Branch b = continue_branch(p, m, zero, 15.0, s);

  REQUIRE(b.events.size() == 1);
  CHECK(b.events[0].type == PointType::branch);
  int idx = b.events[0].idx;
  // Discrete first eigenvalue of the quarter-size square at this mesh width.
  CHECK(b.points[idx].mu > 19.0);
  CHECK(b.points[idx].mu < 22.0);
  CHECK(b.points[idx].n_neg == 1);
  CHECK(b.points[idx - 1].n_neg == 0);

  // Stored points satisfy their invariants when re-assembled from scratch.
  FemSystem checker(m, p);
  for (const auto& pt : b.points) {
    CHECK(norm_inf(checker.residual_free(checker.reduce(pt.u), pt.mu)) <= s.tol * 1.01);
    CHECK(xi_inner(b.settings.xi, pt.tangent, pt.tangent) ==
          doctest::Approx(1.0).epsilon(1e-10));
  }

  BranchPoint located = findbif(p, m, b.points[idx - 1], b.points[idx], s);
  CHECK(located.mu > 19.0);
  CHECK(located.mu < 21.5);

  // The bifurcating pair lives below the crossing, so correct at mu* - 1e-4.
  ContSettings ssw = s;
  ssw.direction = -1;
  auto starts = switch_branch(p, m, located, 0.01, ssw);
  REQUIRE(starts.size() == 2);
  for (const auto& st : starts) {
    CHECK(norm_inf(checker.residual_free(checker.reduce(st.u), st.mu)) <= s.tol * 1.01);
    CHECK(norm_inf(st.u) > 1e-4);
  }
  // Odd nonlinearity: the two starts are sign mirrors.
  for (int i = 0; i < m.np(); ++i)
    CHECK(starts[0].u[i] == doctest::Approx(-starts[1].u[i]).epsilon(1e-6).scale(1e-4));

  // The bifurcating branch is subcritical: following it away from the
  // crossing, mu decreases while the amplitude grows.
  ContSettings s2 = s;
  s2.ds = 0.05;
  s2.dsmax = 0.3;
  s2.max_steps = 12;
  s2.direction = -1;
  s2.mu_min = 0.0;
  Branch nb = continue_branch(p, m, starts[0].u, starts[0].mu, s2);
  REQUIRE(nb.points.size() >= 6);
  CHECK(nb.points.back().mu < located.mu);
  CHECK(nb.points.back().norm_inf > nb.points.front().norm_inf);
}

TEST_CASE("switching refuses a symmetry-induced double crossing") {
  EllipticProblem p = lef_test();
  Mesh m = triangulate(p.domain, 0.2);
  ContSettings s;
  s.ds = 0.25;
  s.dsmax = 0.5;
  s.tol = 1e-8;
  s.neig = 12;
  s.max_steps = 60;
  s.mu_max = 56.0;
  std::vector<double> zero(m.np(), 0.0);
  Branch b = continue_branch(p, m, zero, 45.0, s);

  int idx = -1;
  for (const auto& e : b.events)
    if (e.type == PointType::branch) idx = e.idx;
  REQUIRE(idx > 0);
  CHECK(b.points[idx].n_neg - b.points[idx - 1].n_neg == 2);

  BranchPoint located = findbif(p, m, b.points[idx - 1], b.points[idx], s);
  CHECK_THROWS_AS(switch_branch(p, m, located, 0.01, s), Error);
}

TEST_CASE("adaptive continuation keeps invariants while the mesh grows") {
  EllipticProblem p = lef_test();
  Mesh m = triangulate(p.domain, 0.25);
  // A nontrivial solution at mu = -5 as the starting point.
  FemSystem sys(m, p);
  std::vector<double> g(sys.n_free());
  for (int i = 0; i < sys.n_free(); ++i) {
    Point2 x = m.points[sys.free_nodes()[i]];
    g[i] = 7.0 * std::cos(M_PI * x.x1) * std::cos(M_PI * x.x2);
  }
  NewtonResult nr = newton_solve(sys, g, -5.0, 1e-10, 40);
  REQUIRE(nr.converged);
  REQUIRE(norm_inf(nr.u) > 1.0);

  ContSettings s;
  s.ds = 0.1;
  s.dsmax = 0.2;
  s.tol = 1e-8;
  s.neig = 6;
  s.max_steps = 8;
  s.amod = 3;
  s.ngen = 1;
  s.maxt = 4 * m.nt();
  s.direction = -1;
  Branch b = continue_branch(p, m, sys.expand(nr.u), -5.0, s);
  REQUIRE(b.points.size() >= 7);
  CHECK(b.points.back().np >= b.points.front().np);
  CHECK(b.final_mesh.np() == b.points.back().np);
  // Last point still solves the equations on the final mesh.
  FemSystem fin(b.final_mesh, p);
  CHECK(norm_inf(fin.residual_free(fin.reduce(b.points.back().u),
                                   b.points.back().mu)) <= s.tol * 1.01);
}

TEST_CASE("branch csv serialization") {
  CircleSystem sys;
  ContSettings s = circle_settings();
  s.max_steps = 6;
  std::vector<double> u0 = {1.0};
  Branch b = continue_system(sys, u0, 0.0, s);
  std::ostringstream os;
  write_branch_csv(os, b);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "idx,s,mu,norm_inf,norm_l2,n_neg,det_sign,type,newton_iters,np");
  int rows = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == static_cast<int>(b.points.size()));
  CHECK(os.str().find("start") != std::string::npos);

  std::ostringstream ev;
  write_events_csv(ev, b);
  CHECK(ev.str().rfind("idx,type,mu\n", 0) == 0);
}
