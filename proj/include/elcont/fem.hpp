#pragma once

// P1 finite-element assembly for the discrete system G(U,mu) = K_c U + a M U
// - F(U,mu) = 0, together with Newton's method, the per-triangle error
// estimator and adaptive refinement.

#include <span>
#include <vector>

#include "elcont/problems.hpp"
#include "elcont/sparse.hpp"

namespace elcont {

/// Entry (i,j) = c * integral of grad(phi_i).grad(phi_j). Row sums vanish.
SparseMatrix assemble_stiffness(const Mesh& mesh, double c);
/// Entry (i,j) = integral of phi_i*phi_j (exact for P1). Entries sum to |Omega|.
SparseMatrix assemble_mass(const Mesh& mesh);

double norm_inf(std::span<const double> u);
/// sqrt(U^T M U).
double norm_l2(const SparseMatrix& mass, std::span<const double> u);

/// An elliptic problem bound to one mesh: matrices, the Dirichlet reduction
/// and quadrature caches built once; residual/Jacobian/energy evaluations.
/// "free" vectors run over non-Dirichlet nodes, "full" over all nodes.
class FemSystem {
 public:
  FemSystem(Mesh mesh, EllipticProblem prob);

  const Mesh& mesh() const { return mesh_; }
  const EllipticProblem& problem() const { return prob_; }
  int np() const { return mesh_.np(); }
  int n_free() const { return static_cast<int>(free_nodes_.size()); }
  const std::vector<int>& free_nodes() const { return free_nodes_; }

  std::vector<double> reduce(std::span<const double> full) const;
  std::vector<double> expand(std::span<const double> reduced) const;

  const SparseMatrix& stiffness() const { return k_full_; }  // c-weighted, full
  const SparseMatrix& mass() const { return m_full_; }
  const SparseMatrix& stiffness_free() const { return k_free_; }
  const SparseMatrix& mass_free() const { return m_free_; }

  /// F(U,mu), full length: component k = integral of phi_k * f(u_h, x, mu).
  std::vector<double> load_full(std::span<const double> u_full, double mu) const;
  /// G(U,mu) on free nodes.
  std::vector<double> residual_free(std::span<const double> u_free, double mu) const;
  /// D_u G on free nodes: K_c + a M - quadrature of f_u phi_i phi_j.
  SparseMatrix jacobian_free(std::span<const double> u_free, double mu) const;
  /// Strict lower bound for the smallest eigenvalue of (D_u G) psi = lambda M psi;
  /// a safe shift for the eigensolver.
  double eig_shift_hint(std::span<const double> u_free, double mu) const;

  /// J(u) = c/2 u^T K u + a/2 u^T M u - integral of F(u_h, x, mu).
  double energy(std::span<const double> u_free, double mu) const;
  /// Gradient representative d solving K_free d = G(U,mu) (descent direction).
  std::vector<double> gradient_h10(std::span<const double> u_free, double mu) const;

  double norm_l2_free(std::span<const double> u_free) const;

 private:
  Mesh mesh_;
  EllipticProblem prob_;
  std::vector<int> free_nodes_;   // free index -> node
  std::vector<int> free_index_;   // node -> free index or -1
  SparseMatrix k_full_, m_full_, k_free_, m_free_;
  // Quadrature cache, nq points per triangle: position, weight*area,
  // barycentric coordinates (= P1 basis values) and the spatial field value.
  int nq_ = 0;
  std::vector<Point2> q_pos_;
  std::vector<double> q_wa_;
  std::vector<std::array<double, 3>> q_bary_;
  std::vector<double> q_spatial_;

  friend std::vector<double> error_estimate(const FemSystem&, std::span<const double>,
                                            double, double, double);
};

/// Free-function forms building a temporary FemSystem.
std::vector<double> assemble_load(const Mesh& mesh, const EllipticProblem& prob,
                                  std::span<const double> u_full, double mu);
/// Reduced Jacobian on free nodes.
SparseMatrix assemble_jacobian(const Mesh& mesh, const EllipticProblem& prob,
                               std::span<const double> u_full, double mu);
/// Full-length residual with Dirichlet rows zeroed.
std::vector<double> residual(const Mesh& mesh, const EllipticProblem& prob,
                             std::span<const double> u_full, double mu);

/// Per-triangle estimate alpha*||h*(f - a u_h)||_L2(T) +
/// beta*c*(1/2 sum over interior edges of h_tau^2 * jump(n.grad u_h)^2)^(1/2).
std::vector<double> error_estimate(const FemSystem& sys, std::span<const double> u_full,
                                   double mu, double alpha = 0.15, double beta = 0.15);

struct NewtonResult {
  std::vector<double> u;  // free coordinates
  int iters = 0;
  bool converged = false;
  double residual_norm = 0.0;
};

/// Newton iteration on the free nodes at fixed mu. Stops on ||G||_inf <= tol;
/// fails on maxit, non-finite values or two consecutive residual increases.
NewtonResult newton_solve(const FemSystem& sys, std::span<const double> u0_free,
                          double mu, double tol = 1e-8, int maxit = 20);

struct AdaptOptions {
  int ngen = 10;       // refinement generations
  int maxt = 4000;     // stop refining at this triangle count
  double alpha = 0.15;
  double beta = 0.15;
  double mark = 0.7;   // refine triangles with E >= mark * max E
  double tol = 1e-8;   // Newton tolerance for the re-solve
  int maxit = 20;
};

struct AdaptResult {
  Mesh mesh;
  std::vector<double> u_full;
  int generations = 0;
  bool warning = false;  // Newton failed after a refinement; last good pair kept
};

/// Estimate -> mark -> refine -> transfer -> re-solve loop at fixed mu.
AdaptResult adapt(const Mesh& mesh, const EllipticProblem& prob,
                  std::span<const double> u_full, double mu, const AdaptOptions& opt = {});

}  // namespace elcont
