#pragma once

// Semilinear elliptic problem definitions: -c*Lap(u) + a*u - f(u,x,mu) = 0
// with zero Dirichlet or Neumann data, plus the built-in case studies.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "elcont/geometry.hpp"

namespace elcont {

enum class BoundaryCondition { dirichlet_zero, neumann_zero };
enum class QuadRule { midpoint3, order4 };

/// One elliptic problem. The nonlinearity f, its u-derivative and its
/// u-antiderivative F all take (u, x, mu, s) where s is the value of an
/// optional precomputed spatial field at x (0 when `spatial` is unset).
struct EllipticProblem {
  std::string id = "custom";
  double c = 1.0;  // diffusion, nonzero
  double a = 0.0;  // linear coefficient
  BoundaryCondition bc = BoundaryCondition::dirichlet_zero;
  PolygonDomain domain;
  std::function<double(double, const Point2&, double, double)> f;
  std::function<double(double, const Point2&, double, double)> f_u;
  std::function<double(double, const Point2&, double, double)> F;  // dF/du = f
  std::function<double(const Point2&)> spatial;  // cached at quadrature points
  QuadRule quad = QuadRule::midpoint3;
  std::map<std::string, double> params;
};

/// Finite-difference consistency check of f_u against f (100 random samples,
/// step 1e-6, tolerance 1e-5). Factories call this; throws Error on mismatch.
void check_problem_derivative(const EllipticProblem& p);

struct MicroforceParams {
  double gamma_a = 10.0;
  double gamma_b = 0.1;
  double gamma_1 = 0.5;
  double gamma_2 = 0.5;
};

/// gamma_a * exp(-[(x1-gamma_1)^2+(x2-gamma_2)^2]/gamma_b); returns exactly 0
/// when a domain is supplied and x lies on its boundary.
double microforce_gamma(const Point2& x, const MicroforceParams& p,
                        const PolygonDomain* domain = nullptr);

/// f = mu*u + u^3, Dirichlet zero on (-0.5,0.5)^2.
EllipticProblem lef_test();

/// f = mu*u + u^3 - gamma(x), Dirichlet zero on (-1,1)^2.
EllipticProblem lef_microforce(const MicroforceParams& p = {});

/// Same equation divided by a fixed mu0 != 0: c = 1/mu0, f = u + (u^3-gamma)/mu0.
/// Residuals equal 1/mu0 times those of lef_microforce at mu = mu0.
EllipticProblem lef_microforce_scaled(double mu0, const MicroforceParams& p = {});

struct CaginalpParams {
  double c1 = 1.0;
  double c2 = 0.05;
};

/// Phase-field order parameter equation with precomputed temperature theta:
/// f = -4*chi*(chi^2-1) + mu*(c1 + 2*c2*chi)*theta(x), Neumann. theta is given
/// as nodal data on theta_mesh and interpolated at quadrature points.
EllipticProblem caginalp_reduced(const CaginalpParams& p, const PolygonDomain& domain,
                                 Mesh theta_mesh, std::vector<double> theta);

/// Built-in 12-vertex wing silhouette: chord 1, max thickness 0.18, blunt
/// leading edge at the origin, tapered trailing tip at (1,0).
PolygonDomain wing_domain();

/// Solves -Lap(theta) = f_const with zero Dirichlet data on the given mesh;
/// returns nodal theta.
std::vector<double> poisson_presolve(const Mesh& mesh, double f_const);

}  // namespace elcont
