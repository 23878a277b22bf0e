#include "elcont/fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "elcont/linsolve.hpp"

namespace elcont {

namespace {

struct QuadPoint {
  std::array<double, 3> bary;
  double w;  // relative weight, sums to 1 over the rule
};

const std::vector<QuadPoint>& quad_rule(QuadRule rule) {
  static const std::vector<QuadPoint> midpoint = {
      {{0.5, 0.5, 0.0}, 1.0 / 3.0},
      {{0.0, 0.5, 0.5}, 1.0 / 3.0},
      {{0.5, 0.0, 0.5}, 1.0 / 3.0},
  };
  static const std::vector<QuadPoint> order4 = [] {
    const double a = 0.445948490915965, wa = 0.223381589678011;
    const double b = 0.091576213509771, wb = 0.109951743655322;
    std::vector<QuadPoint> q;
    q.push_back({{a, a, 1 - 2 * a}, wa});
    q.push_back({{1 - 2 * a, a, a}, wa});
    q.push_back({{a, 1 - 2 * a, a}, wa});
    q.push_back({{b, b, 1 - 2 * b}, wb});
    q.push_back({{1 - 2 * b, b, b}, wb});
    q.push_back({{b, 1 - 2 * b, b}, wb});
    return q;
  }();
  return rule == QuadRule::midpoint3 ? midpoint : order4;
}

// P1 shape gradients on triangle t; also returns the (positive) area.
double shape_gradients(const Mesh& mesh, int t, std::array<Point2, 3>& grad) {
  const auto& tri = mesh.triangles[t];
  Point2 p0 = mesh.points[tri[0]], p1 = mesh.points[tri[1]], p2 = mesh.points[tri[2]];
  double a2 = orient2(p0, p1, p2);
  if (a2 <= 2e-14) throw Error("assembly: degenerate triangle " + std::to_string(t));
  grad[0] = {(p1.x2 - p2.x2) / a2, (p2.x1 - p1.x1) / a2};
  grad[1] = {(p2.x2 - p0.x2) / a2, (p0.x1 - p2.x1) / a2};
  grad[2] = {(p0.x2 - p1.x2) / a2, (p1.x1 - p0.x1) / a2};
  return 0.5 * a2;
}

}  // namespace

SparseMatrix assemble_stiffness(const Mesh& mesh, double c) {
  if (c == 0.0) throw Error("assemble_stiffness: c must be nonzero");
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(mesh.nt()) * 9);
  std::array<Point2, 3> g;
  for (int k = 0; k < mesh.nt(); ++k) {
    double area = shape_gradients(mesh, k, g);
    const auto& tri = mesh.triangles[k];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        t.push_back({tri[i], tri[j], c * area * dot(g[i], g[j])});
  }
  return SparseMatrix(mesh.np(), t);
}

SparseMatrix assemble_mass(const Mesh& mesh) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(mesh.nt()) * 9);
  for (int k = 0; k < mesh.nt(); ++k) {
    double area = mesh.triangle_area(k);
    if (area <= 1e-14) throw Error("assembly: degenerate triangle " + std::to_string(k));
    const auto& tri = mesh.triangles[k];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        t.push_back({tri[i], tri[j], area / 12.0 * (i == j ? 2.0 : 1.0)});
  }
  return SparseMatrix(mesh.np(), t);
}

double norm_inf(std::span<const double> u) {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v));
  return m;
}

double norm_l2(const SparseMatrix& mass, std::span<const double> u) {
  auto mu = mass.multiply(u);
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += u[i] * mu[i];
  return std::sqrt(std::max(0.0, s));
}

FemSystem::FemSystem(Mesh mesh, EllipticProblem prob)
    : mesh_(std::move(mesh)),
      prob_(std::move(prob)),
      k_full_(assemble_stiffness(mesh_, prob_.c)),
      m_full_(assemble_mass(mesh_)) {
  if (!prob_.f || !prob_.f_u) throw Error("FemSystem: problem lacks f or f_u");
  free_index_.assign(mesh_.np(), -1);
  for (int i = 0; i < mesh_.np(); ++i)
    if (prob_.bc == BoundaryCondition::neumann_zero || !mesh_.on_boundary[i]) {
      free_index_[i] = static_cast<int>(free_nodes_.size());
      free_nodes_.push_back(i);
    }
  if (free_nodes_.empty()) throw Error("FemSystem: no free nodes");
  k_free_ = k_full_.submatrix(free_nodes_);
  m_free_ = m_full_.submatrix(free_nodes_);

  const auto& rule = quad_rule(prob_.quad);
  nq_ = static_cast<int>(rule.size());
  q_pos_.resize(static_cast<std::size_t>(mesh_.nt()) * nq_);
  q_wa_.resize(q_pos_.size());
  q_bary_.resize(q_pos_.size());
  q_spatial_.assign(q_pos_.size(), 0.0);
  for (int t = 0; t < mesh_.nt(); ++t) {
    const auto& tri = mesh_.triangles[t];
    double area = mesh_.triangle_area(t);
    for (int q = 0; q < nq_; ++q) {
      std::size_t idx = static_cast<std::size_t>(t) * nq_ + q;
      const auto& b = rule[q].bary;
      q_bary_[idx] = b;
      q_wa_[idx] = rule[q].w * area;
      q_pos_[idx] = b[0] * mesh_.points[tri[0]] + b[1] * mesh_.points[tri[1]] +
                    b[2] * mesh_.points[tri[2]];
      if (prob_.spatial) q_spatial_[idx] = prob_.spatial(q_pos_[idx]);
    }
  }
}

std::vector<double> FemSystem::reduce(std::span<const double> full) const {
  if (static_cast<int>(full.size()) != np()) throw Error("reduce: length mismatch");
  std::vector<double> r(free_nodes_.size());
  for (std::size_t i = 0; i < free_nodes_.size(); ++i) r[i] = full[free_nodes_[i]];
  return r;
}

std::vector<double> FemSystem::expand(std::span<const double> reduced) const {
  if (static_cast<int>(reduced.size()) != n_free()) throw Error("expand: length mismatch");
  std::vector<double> full(np(), 0.0);
  for (std::size_t i = 0; i < free_nodes_.size(); ++i) full[free_nodes_[i]] = reduced[i];
  return full;
}

std::vector<double> FemSystem::load_full(std::span<const double> u_full, double mu) const {
  if (static_cast<int>(u_full.size()) != np()) throw Error("load: length mismatch");
  std::vector<double> r(np(), 0.0);
  for (int t = 0; t < mesh_.nt(); ++t) {
    const auto& tri = mesh_.triangles[t];
    for (int q = 0; q < nq_; ++q) {
      std::size_t idx = static_cast<std::size_t>(t) * nq_ + q;
      const auto& b = q_bary_[idx];
      double uq = b[0] * u_full[tri[0]] + b[1] * u_full[tri[1]] + b[2] * u_full[tri[2]];
      double fv = prob_.f(uq, q_pos_[idx], mu, q_spatial_[idx]);
      if (!std::isfinite(fv))
        throw Error("load: non-finite nonlinearity on triangle " + std::to_string(t));
      double w = q_wa_[idx] * fv;
      for (int k = 0; k < 3; ++k) r[tri[k]] += w * b[k];
    }
  }
  return r;
}

std::vector<double> FemSystem::residual_free(std::span<const double> u_free,
                                             double mu) const {
  auto u_full = expand(u_free);
  auto y = k_full_.multiply(u_full);
  if (prob_.a != 0.0) {
    auto my = m_full_.multiply(u_full);
    for (int i = 0; i < np(); ++i) y[i] += prob_.a * my[i];
  }
  auto f = load_full(u_full, mu);
  for (int i = 0; i < np(); ++i) y[i] -= f[i];
  return reduce(y);
}

SparseMatrix FemSystem::jacobian_free(std::span<const double> u_free, double mu) const {
  auto u_full = expand(u_free);
  std::vector<Triplet> t;
  t.reserve(k_free_.nnz() + m_free_.nnz() +
            static_cast<std::size_t>(mesh_.nt()) * 9);
  for (int i = 0; i < k_free_.n(); ++i)
    for (int k = k_free_.row_ptr()[i]; k < k_free_.row_ptr()[i + 1]; ++k)
      t.push_back({i, k_free_.col_idx()[k], k_free_.values()[k]});
  if (prob_.a != 0.0)
    for (int i = 0; i < m_free_.n(); ++i)
      for (int k = m_free_.row_ptr()[i]; k < m_free_.row_ptr()[i + 1]; ++k)
        t.push_back({i, m_free_.col_idx()[k], prob_.a * m_free_.values()[k]});
  for (int tr = 0; tr < mesh_.nt(); ++tr) {
    const auto& tri = mesh_.triangles[tr];
    for (int q = 0; q < nq_; ++q) {
      std::size_t idx = static_cast<std::size_t>(tr) * nq_ + q;
      const auto& b = q_bary_[idx];
      double uq = b[0] * u_full[tri[0]] + b[1] * u_full[tri[1]] + b[2] * u_full[tri[2]];
      double fu = prob_.f_u(uq, q_pos_[idx], mu, q_spatial_[idx]);
      if (!std::isfinite(fu))
        throw Error("jacobian: non-finite derivative on triangle " + std::to_string(tr));
      double w = q_wa_[idx] * fu;
      for (int i = 0; i < 3; ++i) {
        int fi = free_index_[tri[i]];
        if (fi < 0) continue;
        for (int j = 0; j < 3; ++j) {
          int fj = free_index_[tri[j]];
          if (fj >= 0) t.push_back({fi, fj, -w * b[i] * b[j]});
        }
      }
    }
  }
  return SparseMatrix(n_free(), t);
}

double FemSystem::eig_shift_hint(std::span<const double> u_free, double mu) const {
  auto u_full = expand(u_free);
  double max_fu = -1e300;
  for (int t = 0; t < mesh_.nt(); ++t) {
    const auto& tri = mesh_.triangles[t];
    for (int q = 0; q < nq_; ++q) {
      std::size_t idx = static_cast<std::size_t>(t) * nq_ + q;
      const auto& b = q_bary_[idx];
      double uq = b[0] * u_full[tri[0]] + b[1] * u_full[tri[1]] + b[2] * u_full[tri[2]];
      max_fu = std::max(max_fu, prob_.f_u(uq, q_pos_[idx], mu, q_spatial_[idx]));
    }
  }
  return prob_.a - max_fu - 1.0;
}

double FemSystem::energy(std::span<const double> u_free, double mu) const {
  auto u_full = expand(u_free);
  auto ku = k_full_.multiply(u_full);
  double j = 0.0;
  for (int i = 0; i < np(); ++i) j += 0.5 * u_full[i] * ku[i];
  if (prob_.a != 0.0) {
    auto mu_v = m_full_.multiply(u_full);
    for (int i = 0; i < np(); ++i) j += 0.5 * prob_.a * u_full[i] * mu_v[i];
  }
  if (!prob_.F) throw Error("energy: problem lacks the antiderivative F");
  for (int t = 0; t < mesh_.nt(); ++t) {
    const auto& tri = mesh_.triangles[t];
    for (int q = 0; q < nq_; ++q) {
      std::size_t idx = static_cast<std::size_t>(t) * nq_ + q;
      const auto& b = q_bary_[idx];
      double uq = b[0] * u_full[tri[0]] + b[1] * u_full[tri[1]] + b[2] * u_full[tri[2]];
      j -= q_wa_[idx] * prob_.F(uq, q_pos_[idx], mu, q_spatial_[idx]);
    }
  }
  return j;
}

std::vector<double> FemSystem::gradient_h10(std::span<const double> u_free,
                                            double mu) const {
  if (prob_.bc != BoundaryCondition::dirichlet_zero)
    throw Error("gradient_h10: Dirichlet problems only");
  return lu_solve(k_free_, residual_free(u_free, mu));
}

double FemSystem::norm_l2_free(std::span<const double> u_free) const {
  return norm_l2(m_free_, u_free);
}

std::vector<double> assemble_load(const Mesh& mesh, const EllipticProblem& prob,
                                  std::span<const double> u_full, double mu) {
  return FemSystem(mesh, prob).load_full(u_full, mu);
}

SparseMatrix assemble_jacobian(const Mesh& mesh, const EllipticProblem& prob,
                               std::span<const double> u_full, double mu) {
  FemSystem sys(mesh, prob);
  return sys.jacobian_free(sys.reduce(u_full), mu);
}

std::vector<double> residual(const Mesh& mesh, const EllipticProblem& prob,
                             std::span<const double> u_full, double mu) {
  FemSystem sys(mesh, prob);
  auto g = sys.residual_free(sys.reduce(u_full), mu);
  return sys.expand(g);
}

std::vector<double> error_estimate(const FemSystem& sys, std::span<const double> u_full,
                                   double mu, double alpha, double beta) {
  const Mesh& mesh = sys.mesh_;
  const EllipticProblem& prob = sys.prob_;
  if (static_cast<int>(u_full.size()) != mesh.np())
    throw Error("error_estimate: length mismatch");
  int nt = mesh.nt();
  std::vector<double> est(nt, 0.0);

  // Interior residual: alpha * h_T * ||f - a u_h||_L2(T).
  for (int t = 0; t < nt; ++t) {
    double acc = 0.0;
    const auto& tri = mesh.triangles[t];
    for (int q = 0; q < sys.nq_; ++q) {
      std::size_t idx = static_cast<std::size_t>(t) * sys.nq_ + q;
      const auto& b = sys.q_bary_[idx];
      double uq = b[0] * u_full[tri[0]] + b[1] * u_full[tri[1]] + b[2] * u_full[tri[2]];
      double r = prob.f(uq, sys.q_pos_[idx], mu, sys.q_spatial_[idx]) - prob.a * uq;
      acc += sys.q_wa_[idx] * r * r;
    }
    est[t] = alpha * mesh.longest_edge(t) * std::sqrt(std::max(0.0, acc));
  }

  // Flux jumps over interior edges.
  std::vector<Point2> grad(nt);
  std::array<Point2, 3> g;
  for (int t = 0; t < nt; ++t) {
    shape_gradients(mesh, t, g);
    const auto& tri = mesh.triangles[t];
    grad[t] = u_full[tri[0]] * g[0] + u_full[tri[1]] * g[1] + u_full[tri[2]] * g[2];
  }
  auto nbr = mesh.neighbors();
  double c = std::abs(prob.c);
  for (int t = 0; t < nt; ++t) {
    double acc = 0.0;
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      int t2 = nbr[t][k];
      if (t2 < 0) continue;  // boundary edge: no jump contribution
      Point2 e = mesh.points[tri[(k + 2) % 3]] - mesh.points[tri[(k + 1) % 3]];
      double len = norm(e);
      Point2 n{e.x2 / len, -e.x1 / len};
      double jump = dot(n, grad[t] - grad[t2]);
      acc += len * len * jump * jump;
    }
    est[t] += beta * c * std::sqrt(0.5 * acc);
    if (!std::isfinite(est[t])) throw Error("error_estimate: non-finite estimate");
  }
  return est;
}

NewtonResult newton_solve(const FemSystem& sys, std::span<const double> u0_free,
                          double mu, double tol, int maxit) {
  NewtonResult out;
  out.u.assign(u0_free.begin(), u0_free.end());
  double prev = 1e300;
  int grew = 0;
  for (out.iters = 0; out.iters <= maxit; ++out.iters) {
    auto g = sys.residual_free(out.u, mu);
    double gn = norm_inf(g);
    out.residual_norm = gn;
    if (!std::isfinite(gn)) return out;
    if (gn <= tol) {
      out.converged = true;
      return out;
    }
    if (out.iters == maxit) return out;
    grew = gn > prev ? grew + 1 : 0;
    if (grew >= 2) return out;
    prev = gn;
    SparseMatrix j = sys.jacobian_free(out.u, mu);
    std::vector<double> step;
    try {
      step = lu_solve(j, g);
    } catch (const SingularMatrixError&) {
      return out;
    }
    for (int i = 0; i < sys.n_free(); ++i) out.u[i] -= step[i];
  }
  return out;
}

AdaptResult adapt(const Mesh& mesh, const EllipticProblem& prob,
                  std::span<const double> u_full, double mu, const AdaptOptions& opt) {
  if (opt.ngen < 1) throw Error("adapt: ngen must be >= 1");
  AdaptResult out;
  out.mesh = mesh;
  out.u_full.assign(u_full.begin(), u_full.end());
  for (int gen = 0; gen < opt.ngen; ++gen) {
    if (out.mesh.nt() >= opt.maxt) break;
    FemSystem sys(out.mesh, prob);
    auto est = error_estimate(sys, out.u_full, mu, opt.alpha, opt.beta);
    double emax = *std::max_element(est.begin(), est.end());
    if (emax <= 0.0) break;
    RefinementMarks marks;
    for (int t = 0; t < out.mesh.nt(); ++t)
      if (est[t] >= opt.mark * emax) marks.marked.push_back(t);
    RefineResult r = refine(out.mesh, marks);
    auto u_new = transfer(out.mesh, out.u_full, r.mesh);
    FemSystem sys2(std::move(r.mesh), prob);
    NewtonResult nr = newton_solve(sys2, sys2.reduce(u_new), mu, opt.tol, opt.maxit);
    if (!nr.converged) {
      out.warning = true;
      break;
    }
    out.mesh = sys2.mesh();
    out.u_full = sys2.expand(nr.u);
    ++out.generations;
  }
  return out;
}

}  // namespace elcont
