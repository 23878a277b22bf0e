#pragma once

// Multiple-solution search: peak selection over expanding half-spaces, descent
// on the solution submanifold, support-space bookkeeping and Morse indices.
// Produces the unstable starting solutions handed to continuation.

#include <span>
#include <string>
#include <vector>

#include "elcont/fem.hpp"
#include "elcont/problems.hpp"

namespace elcont {

struct MinimaxSettings {
  double tol_grad = 1e-3;  // outer stop on the H10 norm of the energy gradient
  int max_outer = 400;
  int max_inner = 60;
  double armijo_c = 0.25;
  double cont_tol = 1e-8;  // residual bound after the finishing Newton polish
  int newton_maxit = 30;
};

/// Span of previously found solutions, kept orthonormal in the H10 inner
/// product u' K v. The stiffness matrix must outlive the support space.
class SupportSpace {
 public:
  explicit SupportSpace(const SparseMatrix& k);

  int size() const { return static_cast<int>(basis_.size()); }
  const std::vector<std::vector<double>>& basis() const { return basis_; }
  const std::vector<std::vector<double>>& raw() const { return raw_; }

  double k_inner(std::span<const double> a, std::span<const double> b) const;
  /// Removes the basis components of v (twice, for orthogonality to 1e-8).
  std::vector<double> project_out(std::span<const double> v) const;
  /// project_out followed by K-normalization; throws when v collapses into
  /// the span of the basis.
  std::vector<double> normalize_project(std::span<const double> v) const;
  /// Inserts a solution; returns false (and keeps only the raw copy) when it
  /// is K-dependent on the current basis.
  bool add(std::vector<double> solution);

 private:
  const SparseMatrix* k_;
  std::vector<std::vector<double>> basis_;
  std::vector<std::vector<double>> raw_;
};

struct PeakResult {
  std::vector<double> u;          // free coordinates
  std::vector<double> coeff;      // t0, then one weight per basis vector
  double j_value = 0.0;
  int iters = 0;
};

/// Local maximization of J over the half-space spanned by v and the support
/// basis (coefficient of v kept non-negative). warm seeds the coefficients.
PeakResult peak_select(const FemSystem& sys, double mu, const SupportSpace& L,
                       std::span<const double> v, std::span<const double> warm = {});

struct MinimaxResult {
  std::vector<double> u;  // free coordinates, Newton-polished
  int iters = 0;          // outer iterations
  bool converged = false;
  double j_value = 0.0;
  std::vector<double> peak_coeff;
  std::vector<double> j_history;  // accepted peak values, strictly decreasing
};

/// Descent on the peak-selection manifold from sphere direction v0, followed
/// by a Newton polish to the continuation residual bound.
MinimaxResult minimax_search(const FemSystem& sys, double mu, const SupportSpace& L,
                             std::span<const double> v0, const MinimaxSettings& settings);

/// Negative eigenvalues of the second variation at U among the smallest neig;
/// throws when the count is not resolved (neig-th eigenvalue still negative).
int morse_index(const FemSystem& sys, std::span<const double> u_free, double mu,
                int neig);
int morse_index(const EllipticProblem& prob, const Mesh& mesh,
                std::span<const double> u_full, double mu, int neig);

struct SeedBump {
  double x = 0.0;
  double y = 0.0;
  double sign = 1.0;
  double width = 0.1;
};

struct SeedSpec {
  std::vector<SeedBump> bumps;
  std::string label;
  // Number of previously found solutions to support the search with; -1 uses
  // one less than the bump count (lobe count tracks the target Morse index).
  int support = -1;
};

/// Parses `bump(x, y, sign, width) [+ bump(...)]* [+ support(k)]`.
SeedSpec parse_seed(const std::string& text);

/// Signed-Gaussian starting shapes for the square problems (7 for the plain
/// cubic problem, 3 for the forced one). Throws on an unknown problem id.
std::vector<SeedSpec> default_seeds(const std::string& problem_id);

/// Nodal field of a seed; boundary nodes are zeroed when zero_boundary.
std::vector<double> build_seed_field(const Mesh& mesh, const SeedSpec& seed,
                                     bool zero_boundary = true);

struct FoundSolution {
  std::vector<double> u;  // full nodal values
  double mu = 0.0;
  int morse_index = 0;
  double j_value = 0.0;
  double norm_inf = 0.0;
  int seed_index = -1;
  int iters = 0;
};

/// Runs minimax_search seed by seed against a growing support space and keeps
/// the distinct converged solutions with their Morse indices. Seed failures
/// are skipped; the phase-field problem is refused.
std::vector<FoundSolution> find_multiple(const EllipticProblem& prob, const Mesh& mesh,
                                         double mu0, const std::vector<SeedSpec>& seeds,
                                         const MinimaxSettings& settings = {});

}  // namespace elcont
