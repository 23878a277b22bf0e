#pragma once

// Pseudo-arclength continuation: predictor-corrector with step-size control,
// per-point stability counts, fold/branch-point detection, eigenvalue
// bisection for branch-point location and branch switching.

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elcont/fem.hpp"
#include "elcont/linsolve.hpp"
#include "elcont/problems.hpp"

namespace elcont {

struct ContSettings {
  double ds = 0.1;    // initial arclength step
  double dsmax = 0.5;
  double dsmin = 1e-4;
  double tol = 1e-6;  // Newton residual tolerance
  int maxit = 10;
  double xi = 0.0;    // state weight of the arclength metric; 0 = auto (1/np)
  int neig = 100;     // eigenvalues per stability count
  int amod = 0;       // adapt the mesh every amod accepted steps (0 = off)
  int ngen = 10;      // refinement generations per adaptation
  int maxt = 4000;    // triangle budget for adaptation
  int max_steps = 1000;
  int direction = +1;      // initial orientation: sign of the mu tangent
  double delta_sw = 0.01;  // branch-switching perturbation size
  double mu_min = -1e18;   // stop once mu leaves [mu_min, mu_max]
  double mu_max = 1e18;
  double stop_norm_below = 0.0;  // stop when ||u||_inf drops below (0 = off)
  bool det_guard = false;  // ignore det-sign flips with no n_neg change
};

enum class PointType { start, regular, fold, branch, endpoint };
const char* to_string(PointType t);

struct BranchPoint {
  std::vector<double> u;  // nodal values
  double mu = 0.0;
  double s = 0.0;  // accumulated arclength
  std::vector<double> tangent;  // length u.size()+1, mu component last
  double norm_inf = 0.0;
  double norm_l2 = 0.0;
  int n_neg = 0;
  int det_sign = 0;
  PointType point_type = PointType::regular;
  int newton_iters = 0;
  int np = 0;

  double mu_dot() const { return tangent.empty() ? 0.0 : tangent.back(); }
};

struct BranchEvent {
  int idx = 0;
  PointType type = PointType::regular;  // fold or branch
  double mu = 0.0;
};

struct Branch {
  std::vector<BranchPoint> points;
  std::vector<BranchEvent> events;
  std::string problem_id;
  ContSettings settings;  // snapshot with xi resolved
  Mesh final_mesh;        // empty for non-FEM systems
};

/// Parameter-dependent system G(u, mu) = 0 as seen by the continuation loop.
/// Stability counting assumes a symmetric Jacobian.
class ContinuationSystem {
 public:
  virtual ~ContinuationSystem() = default;
  virtual int n() const = 0;
  virtual std::vector<double> residual(std::span<const double> u, double mu) const = 0;
  virtual SparseMatrix jacobian(std::span<const double> u, double mu) const = 0;
  /// dG/dmu; the default is a central finite difference of residual().
  virtual std::vector<double> residual_mu(std::span<const double> u, double mu) const;
  /// Mass matrix of the stability pencil; nullptr means identity.
  virtual const SparseMatrix* mass() const { return nullptr; }
  /// Strict lower bound for the smallest stability eigenvalue, if known.
  virtual std::optional<double> eig_shift(std::span<const double>, double) const {
    return std::nullopt;
  }
};

/// Boundary-reduced FEM problem as a continuation system.
class FemContinuation : public ContinuationSystem {
 public:
  FemContinuation(Mesh mesh, EllipticProblem prob);
  int n() const override;
  std::vector<double> residual(std::span<const double> u, double mu) const override;
  SparseMatrix jacobian(std::span<const double> u, double mu) const override;
  const SparseMatrix* mass() const override;
  std::optional<double> eig_shift(std::span<const double> u, double mu) const override;

  FemSystem& fem() { return fem_; }
  const FemSystem& fem() const { return fem_; }
  /// Swaps in a new mesh (after adaptation); dof layouts change.
  void rebuild(Mesh mesh);

 private:
  EllipticProblem prob_;
  FemSystem fem_;
};

/// Weighted inner product xi * u.w + (1 - xi) * mu * nu of two (u, mu) pairs
/// packed as length n+1 vectors.
double xi_inner(double xi, std::span<const double> z, std::span<const double> w);

/// Unit-xi-norm curve tangent: (DG) zdot = 0, oriented along prev_tangent.
/// Throws SingularMatrixError when the bordered system is singular.
std::vector<double> tangent(const SparseMatrix& jac_u, std::span<const double> jac_mu,
                            std::span<const double> prev_tangent, double xi);

struct CorrectResult {
  std::vector<double> u;
  double mu = 0.0;
  int iters = 0;
  bool converged = false;
  double residual_norm = 0.0;
};

/// Newton iteration at fixed mu.
CorrectResult newton_fixed_mu(const ContinuationSystem& sys, std::span<const double> u0,
                              double mu, double tol, int maxit);

/// Arclength corrector: Newton on (G, p) with the hyperplane constraint
/// p = xi * t_u . (u - u0) + (1 - xi) * t_mu * (mu - mu0) - ds.
CorrectResult correct(const ContinuationSystem& sys, std::span<const double> u_guess,
                      double mu_guess, std::span<const double> u0, double mu0,
                      std::span<const double> tangent0, double ds, double xi,
                      double tol, int maxit);

/// Step-size law: halve on failure, grow 1.3x when the corrector took at most
/// 3 iterations, clamp to [dsmin, dsmax].
double step_control(bool success, int iters, double ds, const ContSettings& s);

/// Fold/branch classification between consecutive accepted points.
std::vector<PointType> detect_events(const BranchPoint& prev, const BranchPoint& cur,
                                     bool det_guard = false);

/// Called after each accepted point with any events raised at it and the mesh
/// the point lives on (an empty mesh for non-FEM systems).
using ContObserver = std::function<void(const BranchPoint&, std::span<const BranchEvent>,
                                        const Mesh&)>;

/// Continuation over a generic system (no mesh adaptation).
Branch continue_system(ContinuationSystem& sys, std::span<const double> u0, double mu0,
                       const ContSettings& settings);

/// Continuation of a FEM problem from a pre-converged start; stores full
/// nodal vectors. With amod > 0 the mesh is adapted every amod-th step.
Branch continue_branch(const EllipticProblem& prob, const Mesh& mesh,
                       std::span<const double> u0_full, double mu0,
                       const ContSettings& settings, const ContObserver& observer = {});

/// Bisection location of the stability change between consecutive branch
/// points; their n_neg counts must differ.
BranchPoint findbif_system(ContinuationSystem& sys, const BranchPoint& a,
                           const BranchPoint& b, const ContSettings& settings);
BranchPoint findbif(const EllipticProblem& prob, const Mesh& mesh, const BranchPoint& a,
                    const BranchPoint& b, const ContSettings& settings);

struct StartSolution {
  std::vector<double> u;
  double mu = 0.0;
};

/// Branch switching by kernel-eigenvector perturbation and fixed-mu Newton
/// correction slightly off the located point. Throws on a non-simple kernel.
std::vector<StartSolution> switch_branch_system(ContinuationSystem& sys,
                                                const BranchPoint& bp, double delta_sw,
                                                const ContSettings& settings);
std::vector<StartSolution> switch_branch(const EllipticProblem& prob, const Mesh& mesh,
                                         const BranchPoint& bp, double delta_sw,
                                         const ContSettings& settings);

/// CSV with header idx,s,mu,norm_inf,norm_l2,n_neg,det_sign,type,newton_iters,np.
void write_branch_csv(std::ostream& os, const Branch& b);
/// Sidecar CSV with header idx,type,mu.
void write_events_csv(std::ostream& os, const Branch& b);

}  // namespace elcont
