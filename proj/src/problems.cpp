#include "elcont/problems.hpp"

#include <cmath>
#include <memory>
#include <mutex>
#include <random>

#include "elcont/fem.hpp"
#include "elcont/linsolve.hpp"

namespace elcont {

void check_problem_derivative(const EllipticProblem& p) {
  if (!p.f || !p.f_u) throw Error("problem '" + p.id + "': f and f_u required");
  double x1_min = 1e300, x1_max = -1e300, x2_min = 1e300, x2_max = -1e300;
  for (const auto& v : p.domain.vertices) {
    x1_min = std::min(x1_min, v.x1);
    x1_max = std::max(x1_max, v.x1);
    x2_min = std::min(x2_min, v.x2);
    x2_max = std::max(x2_max, v.x2);
  }
  std::mt19937 gen(12345);
  std::uniform_real_distribution<double> uu(-2.0, 2.0), um(-5.0, 5.0), u01(0.0, 1.0);
  const double eps = 1e-6;
  for (int i = 0; i < 100; ++i) {
    double u = uu(gen);
    Point2 x{x1_min + u01(gen) * (x1_max - x1_min), x2_min + u01(gen) * (x2_max - x2_min)};
    double mu = um(gen);
    double s = uu(gen);
    double fd = (p.f(u + eps, x, mu, s) - p.f(u - eps, x, mu, s)) / (2.0 * eps);
    double an = p.f_u(u, x, mu, s);
    if (!(std::abs(fd - an) <= 1e-5))
      throw Error("problem '" + p.id + "': f_u disagrees with finite difference of f (" +
                  std::to_string(an) + " vs " + std::to_string(fd) + ")");
  }
}

double microforce_gamma(const Point2& x, const MicroforceParams& p,
                        const PolygonDomain* domain) {
  if (p.gamma_b <= 0) throw Error("microforce: gamma_b must be positive");
  if (domain && domain->boundary_distance(x) <= 1e-12) return 0.0;
  double d1 = x.x1 - p.gamma_1, d2 = x.x2 - p.gamma_2;
  return p.gamma_a * std::exp(-(d1 * d1 + d2 * d2) / p.gamma_b);
}

EllipticProblem lef_test() {
  EllipticProblem p;
  p.id = "lef";
  p.c = 1.0;
  p.a = 0.0;
  p.bc = BoundaryCondition::dirichlet_zero;
  p.domain = PolygonDomain::square(0.5, "square_half");
  p.f = [](double u, const Point2&, double mu, double) { return mu * u + u * u * u; };
  p.f_u = [](double u, const Point2&, double mu, double) { return mu + 3.0 * u * u; };
  p.F = [](double u, const Point2&, double mu, double) {
    return 0.5 * mu * u * u + 0.25 * u * u * u * u;
  };
  check_problem_derivative(p);
  return p;
}

EllipticProblem lef_microforce(const MicroforceParams& mp) {
  EllipticProblem p;
  p.id = "lef_force";
  p.c = 1.0;
  p.a = 0.0;
  p.bc = BoundaryCondition::dirichlet_zero;
  p.domain = PolygonDomain::square(1.0, "square_unit");
  p.spatial = [mp](const Point2& x) { return microforce_gamma(x, mp); };
  p.f = [](double u, const Point2&, double mu, double s) { return mu * u + u * u * u - s; };
  p.f_u = [](double u, const Point2&, double mu, double) { return mu + 3.0 * u * u; };
  p.F = [](double u, const Point2&, double mu, double s) {
    return 0.5 * mu * u * u + 0.25 * u * u * u * u - s * u;
  };
  p.params = {{"gamma_a", mp.gamma_a},
              {"gamma_b", mp.gamma_b},
              {"gamma_1", mp.gamma_1},
              {"gamma_2", mp.gamma_2}};
  check_problem_derivative(p);
  return p;
}

EllipticProblem lef_microforce_scaled(double mu0, const MicroforceParams& mp) {
  if (mu0 == 0.0) throw Error("scaled problem needs mu0 != 0");
  EllipticProblem p = lef_microforce(mp);
  p.id = "lef_force_scaled";
  p.c = 1.0 / mu0;
  p.f = [mu0](double u, const Point2&, double, double s) {
    return u + (u * u * u - s) / mu0;
  };
  p.f_u = [mu0](double u, const Point2&, double, double) { return 1.0 + 3.0 * u * u / mu0; };
  p.F = [mu0](double u, const Point2&, double, double s) {
    return 0.5 * u * u + (0.25 * u * u * u * u - s * u) / mu0;
  };
  p.params["mu0"] = mu0;
  check_problem_derivative(p);
  return p;
}

namespace {

// Interpolates the pre-solved temperature on its own mesh; locator access is
// serialized so problem callbacks stay shareable across threads.
struct ThetaField {
  Mesh mesh;
  std::vector<double> values;
  Locator locator;
  std::mutex mtx;
  ThetaField(Mesh m, std::vector<double> v)
      : mesh(std::move(m)), values(std::move(v)), locator(mesh) {}
  double at(const Point2& x) {
    std::lock_guard<std::mutex> lock(mtx);
    int t = locator.locate(x, 1e-7);
    if (t < 0) throw Error("temperature lookup outside its mesh");
    auto b = locator.barycentric(t, x);
    const auto& tri = mesh.triangles[t];
    return b[0] * values[tri[0]] + b[1] * values[tri[1]] + b[2] * values[tri[2]];
  }
};

}  // namespace

EllipticProblem caginalp_reduced(const CaginalpParams& cp, const PolygonDomain& domain,
                                 Mesh theta_mesh, std::vector<double> theta) {
  if (static_cast<int>(theta.size()) != theta_mesh.np())
    throw Error("caginalp: temperature length does not match its mesh");
  for (double v : theta)
    if (!std::isfinite(v)) throw Error("caginalp: non-finite temperature value");
  EllipticProblem p;
  p.id = "caginalp";
  p.c = 1.0;
  p.a = 0.0;
  p.bc = BoundaryCondition::neumann_zero;
  p.domain = domain;
  auto field = std::make_shared<ThetaField>(std::move(theta_mesh), std::move(theta));
  p.spatial = [field](const Point2& x) { return field->at(x); };
  double c1 = cp.c1, c2 = cp.c2;
  p.f = [c1, c2](double u, const Point2&, double mu, double s) {
    return -4.0 * u * (u * u - 1.0) + mu * (c1 + 2.0 * c2 * u) * s;
  };
  p.f_u = [c2](double u, const Point2&, double mu, double s) {
    return -12.0 * u * u + 4.0 + 2.0 * c2 * mu * s;
  };
  p.F = [c1, c2](double u, const Point2&, double mu, double s) {
    double w = u * u - 1.0;
    return -w * w + mu * (c1 * u + c2 * u * u) * s;
  };
  p.params = {{"c1", cp.c1}, {"c2", cp.c2}};
  check_problem_derivative(p);
  return p;
}

PolygonDomain wing_domain() {
  PolygonDomain d;
  d.vertices = {{0.0, 0.0},    {0.03, -0.055}, {0.12, -0.082}, {0.3, -0.09},
                {0.5, -0.075}, {0.75, -0.045}, {1.0, 0.0},     {0.75, 0.045},
                {0.5, 0.075},  {0.3, 0.09},    {0.12, 0.082},  {0.03, 0.055}};
  d.name = "wing";
  d.validate();
  return d;
}

std::vector<double> poisson_presolve(const Mesh& mesh, double f_const) {
  SparseMatrix k = assemble_stiffness(mesh, 1.0);
  SparseMatrix m = assemble_mass(mesh);
  std::vector<double> ones(mesh.np(), 1.0), b = m.multiply(ones);
  for (auto& v : b) v *= f_const;
  std::vector<int> free;
  for (int i = 0; i < mesh.np(); ++i)
    if (!mesh.on_boundary[i]) free.push_back(i);
  if (free.empty()) throw Error("poisson: no interior nodes");
  std::vector<double> b_free(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) b_free[i] = b[free[i]];
  auto theta_free = lu_solve(k.submatrix(free), b_free);
  std::vector<double> theta(mesh.np(), 0.0);
  for (std::size_t i = 0; i < free.size(); ++i) theta[free[i]] = theta_free[i];
  return theta;
}

}  // namespace elcont
