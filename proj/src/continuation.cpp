#include "elcont/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace elcont {

namespace {

SparseMatrix identity_matrix(int n) {
  std::vector<Triplet> tr(n);
  for (int i = 0; i < n; ++i) tr[i] = {i, i, 1.0};
  return SparseMatrix(n, std::move(tr));
}

ContSettings resolve_settings(const ContSettings& in, int np) {
  ContSettings s = in;
  if (s.xi == 0.0) s.xi = np > 1 ? 1.0 / np : 0.5;
  if (!(s.xi > 0.0 && s.xi < 1.0))
    throw Error("continuation: xi must lie in (0,1), got " + std::to_string(s.xi));
  if (!(s.dsmin > 0.0 && s.dsmin <= s.ds && s.ds <= s.dsmax))
    throw Error("continuation: need 0 < dsmin <= ds <= dsmax");
  if (!(s.tol > 0.0)) throw Error("continuation: tol must be positive");
  if (s.maxit < 1) throw Error("continuation: maxit must be at least 1");
  if (s.max_steps < 1) throw Error("continuation: max_steps must be at least 1");
  if (s.neig < 1) throw Error("continuation: neig must be at least 1");
  if (s.direction != 1 && s.direction != -1)
    throw Error("continuation: direction must be +1 or -1");
  if (s.amod < 0) throw Error("continuation: amod must be non-negative");
  return s;
}

}  // namespace

const char* to_string(PointType t) {
  switch (t) {
    case PointType::start: return "start";
    case PointType::regular: return "regular";
    case PointType::fold: return "fold";
    case PointType::branch: return "branch";
    case PointType::endpoint: return "endpoint";
  }
  return "regular";
}

std::vector<double> ContinuationSystem::residual_mu(std::span<const double> u,
                                                    double mu) const {
  const double h = 1e-6 * (1.0 + std::abs(mu));
  auto rp = residual(u, mu + h);
  auto rm = residual(u, mu - h);
  for (size_t i = 0; i < rp.size(); ++i) rp[i] = (rp[i] - rm[i]) / (2.0 * h);
  return rp;
}

FemContinuation::FemContinuation(Mesh mesh, EllipticProblem prob)
    : prob_(prob), fem_(std::move(mesh), std::move(prob)) {}

int FemContinuation::n() const { return fem_.n_free(); }

std::vector<double> FemContinuation::residual(std::span<const double> u, double mu) const {
  return fem_.residual_free(u, mu);
}

SparseMatrix FemContinuation::jacobian(std::span<const double> u, double mu) const {
  return fem_.jacobian_free(u, mu);
}

const SparseMatrix* FemContinuation::mass() const { return &fem_.mass_free(); }

std::optional<double> FemContinuation::eig_shift(std::span<const double> u,
                                                 double mu) const {
  return fem_.eig_shift_hint(u, mu);
}

void FemContinuation::rebuild(Mesh mesh) {
  fem_ = FemSystem(std::move(mesh), prob_);
}

double xi_inner(double xi, std::span<const double> z, std::span<const double> w) {
  if (z.size() != w.size() || z.empty())
    throw Error("xi_inner: vectors must share a positive length");
  if (!(xi > 0.0 && xi < 1.0)) throw Error("xi_inner: xi must lie in (0,1)");
  double su = 0.0;
  for (size_t i = 0; i + 1 < z.size(); ++i) su += z[i] * w[i];
  return xi * su + (1.0 - xi) * z.back() * w.back();
}

std::vector<double> tangent(const SparseMatrix& jac_u, std::span<const double> jac_mu,
                            std::span<const double> prev_tangent, double xi) {
  const int n = jac_u.n();
  if (static_cast<int>(jac_mu.size()) != n ||
      static_cast<int>(prev_tangent.size()) != n + 1)
    throw Error("tangent: size mismatch");
  std::vector<double> c(n), f(n, 0.0);
  for (int i = 0; i < n; ++i) c[i] = xi * prev_tangent[i];
  double d = (1.0 - xi) * prev_tangent[n];
  BorderedResult br = solve_bordered(jac_u, jac_mu, c, d, f, 1.0);
  std::vector<double> z(n + 1);
  for (int i = 0; i < n; ++i) z[i] = br.x[i];
  z[n] = br.y;
  double nn = xi_inner(xi, z, z);
  if (!(nn > 0.0) || !std::isfinite(nn))
    throw SingularMatrixError("tangent: degenerate bordered solve");
  double inv = 1.0 / std::sqrt(nn);
  for (double& v : z) v *= inv;
  return z;
}

CorrectResult newton_fixed_mu(const ContinuationSystem& sys, std::span<const double> u0,
                              double mu, double tol, int maxit) {
  CorrectResult r;
  r.u.assign(u0.begin(), u0.end());
  r.mu = mu;
  auto res = sys.residual(r.u, mu);
  double gn = norm_inf(res);
  double prev = gn;
  int grew = 0;
  for (int it = 0;; ++it) {
    if (std::isfinite(gn) && gn <= tol) {
      r.iters = it;
      r.converged = true;
      r.residual_norm = gn;
      return r;
    }
    if (it >= maxit || !std::isfinite(gn)) break;
    std::vector<double> step;
    try {
      for (double& v : res) v = -v;
      step = lu_solve(sys.jacobian(r.u, mu), res);
    } catch (const SingularMatrixError&) {
      break;
    }
    for (size_t i = 0; i < step.size(); ++i) r.u[i] += step[i];
    res = sys.residual(r.u, mu);
    gn = norm_inf(res);
    r.iters = it + 1;
    if (gn > prev) {
      if (++grew >= 2) break;
    } else {
      grew = 0;
    }
    prev = gn;
  }
  r.converged = false;
  r.residual_norm = gn;
  return r;
}

CorrectResult correct(const ContinuationSystem& sys, std::span<const double> u_guess,
                      double mu_guess, std::span<const double> u0, double mu0,
                      std::span<const double> tangent0, double ds, double xi,
                      double tol, int maxit) {
  const int n = sys.n();
  if (static_cast<int>(u_guess.size()) != n || static_cast<int>(u0.size()) != n ||
      static_cast<int>(tangent0.size()) != n + 1)
    throw Error("correct: size mismatch");
  CorrectResult r;
  r.u.assign(u_guess.begin(), u_guess.end());
  r.mu = mu_guess;
  std::vector<double> c(n);
  for (int i = 0; i < n; ++i) c[i] = xi * tangent0[i];
  const double d = (1.0 - xi) * tangent0[n];
  auto hyper = [&](std::span<const double> u, double mu) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += c[i] * (u[i] - u0[i]);
    return acc + d * (mu - mu0) - ds;
  };
  auto res = sys.residual(r.u, r.mu);
  double gn = norm_inf(res);
  double p = hyper(r.u, r.mu);
  double prev = gn;
  int grew = 0;
  for (int it = 0;; ++it) {
    if (std::isfinite(gn) && gn <= tol && std::abs(p) <= tol) {
      r.iters = it;
      r.converged = true;
      r.residual_norm = gn;
      return r;
    }
    if (it >= maxit || !std::isfinite(gn) || !std::isfinite(p)) break;
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = -res[i];
    BorderedResult br;
    try {
      br = solve_bordered(sys.jacobian(r.u, r.mu), sys.residual_mu(r.u, r.mu), c, d, f,
                          -p);
    } catch (const SingularMatrixError&) {
      break;
    }
    for (int i = 0; i < n; ++i) r.u[i] += br.x[i];
    r.mu += br.y;
    res = sys.residual(r.u, r.mu);
    gn = norm_inf(res);
    p = hyper(r.u, r.mu);
    r.iters = it + 1;
    if (gn > prev) {
      if (++grew >= 2) break;
    } else {
      grew = 0;
    }
    prev = gn;
  }
  r.converged = false;
  r.residual_norm = gn;
  return r;
}

double step_control(bool success, int iters, double ds, const ContSettings& s) {
  if (!success) return std::max(0.5 * ds, s.dsmin);
  if (iters <= 3) return std::min(1.3 * ds, s.dsmax);
  return ds;
}

std::vector<PointType> detect_events(const BranchPoint& prev, const BranchPoint& cur,
                                     bool det_guard) {
  std::vector<PointType> ev;
  const bool mu_flip = prev.mu_dot() * cur.mu_dot() < 0.0;
  const int dn = cur.n_neg - prev.n_neg;
  const bool det_flip = prev.det_sign * cur.det_sign < 0;
  if (mu_flip && std::abs(dn) == 1) {
    ev.push_back(PointType::fold);
  } else if ((std::abs(dn) >= 1 && !mu_flip) ||
             (det_flip && !(det_guard && dn == 0))) {
    ev.push_back(PointType::branch);
  }
  return ev;
}

namespace {

struct LoopState {
  std::vector<double> u;  // system coordinates
  double mu = 0.0;
  double s = 0.0;
  std::vector<double> t;  // length n+1
};

/// Fills stability fields of a system-coordinate point.
void add_stability(const ContinuationSystem& sys, const SparseMatrix& jac,
                   std::span<const double> u, double mu, int neig, BranchPoint& p) {
  p.det_sign = det_sign(jac);
  const SparseMatrix* m = sys.mass();
  SparseMatrix ident;
  if (!m) {
    ident = identity_matrix(jac.n());
    m = &ident;
  }
  EigenOptions opts;
  if (auto sh = sys.eig_shift(u, mu)) opts.shift = *sh;
  EigenResult er = eigs_generalized(jac, *m, std::min(neig, jac.n()), opts);
  p.n_neg = er.n_negative();
}

/// Hooks specializing the driver loop for FEM (expansion, adaptation) without
/// duplicating it for plain systems.
struct DriverHooks {
  // Converts a system-coordinate point to its stored form and sets norms.
  std::function<BranchPoint(BranchPoint)> finalize;
  // Invoked after accepting point idx; may rebuild the system and remap state.
  std::function<void(int idx, LoopState& st)> adapt;
  std::function<void(const BranchPoint&, std::span<const BranchEvent>)> observe;
};

Branch run_continuation(ContinuationSystem& sys, std::span<const double> u0, double mu0,
                        const ContSettings& rs, const DriverHooks& hooks) {
  Branch branch;
  branch.settings = rs;

  CorrectResult start = newton_fixed_mu(sys, u0, mu0, rs.tol, std::max(rs.maxit, 30));
  if (!start.converged)
    throw Error("continuation: start point does not converge (residual " +
                std::to_string(start.residual_norm) + ")");

  LoopState st;
  st.u = start.u;
  st.mu = start.mu;
  st.s = 0.0;

  SparseMatrix jac = sys.jacobian(st.u, st.mu);
  std::vector<double> prev_t(sys.n() + 1, 0.0);
  prev_t.back() = rs.direction;
  st.t = tangent(jac, sys.residual_mu(st.u, st.mu), prev_t, rs.xi);

  BranchPoint p0;
  p0.u = st.u;
  p0.mu = st.mu;
  p0.s = 0.0;
  p0.tangent = st.t;
  p0.point_type = PointType::start;
  p0.newton_iters = start.iters;
  add_stability(sys, jac, st.u, st.mu, rs.neig, p0);
  branch.points.push_back(hooks.finalize(std::move(p0)));
  if (hooks.observe) hooks.observe(branch.points.back(), {});

  double ds = rs.ds;
  bool ended = false;
  while (static_cast<int>(branch.points.size()) < rs.max_steps && !ended) {
    // Predictor.
    std::vector<double> guess(sys.n());
    for (int i = 0; i < sys.n(); ++i) guess[i] = st.u[i] + ds * st.t[i];
    double mu_guess = st.mu + ds * st.t.back();

    CorrectResult cr = correct(sys, guess, mu_guess, st.u, st.mu, st.t, ds, rs.xi,
                               rs.tol, rs.maxit);
    if (!cr.converged) {
      if (ds <= rs.dsmin * (1.0 + 1e-12)) {
        branch.points.back().point_type = PointType::endpoint;
        break;
      }
      ds = step_control(false, cr.iters, ds, rs);
      continue;
    }

    jac = sys.jacobian(cr.u, cr.mu);
    std::vector<double> new_t;
    try {
      new_t = tangent(jac, sys.residual_mu(cr.u, cr.mu), st.t, rs.xi);
    } catch (const SingularMatrixError&) {
      new_t = st.t;  // exactly singular curve point: keep the orientation
      ended = true;
    }

    BranchPoint p;
    p.u = cr.u;
    p.mu = cr.mu;
    p.s = st.s + ds;
    p.tangent = new_t;
    p.newton_iters = cr.iters;
    add_stability(sys, jac, cr.u, cr.mu, rs.neig, p);
    BranchPoint stored = hooks.finalize(std::move(p));

    const int idx = static_cast<int>(branch.points.size());
    std::vector<BranchEvent> new_events;
    for (PointType t : detect_events(branch.points.back(), stored, rs.det_guard)) {
      stored.point_type = t;
      new_events.push_back({idx, t, stored.mu});
    }
    for (const auto& e : new_events) branch.events.push_back(e);
    branch.points.push_back(std::move(stored));
    if (hooks.observe) hooks.observe(branch.points.back(), new_events);

    st.u = cr.u;
    st.mu = cr.mu;
    st.s += ds;
    st.t = new_t;
    ds = step_control(true, cr.iters, ds, rs);

    if (st.mu < rs.mu_min || st.mu > rs.mu_max) break;
    if (rs.stop_norm_below > 0.0 && branch.points.back().norm_inf < rs.stop_norm_below)
      break;
    if (hooks.adapt) hooks.adapt(idx, st);
  }
  if (branch.points.back().point_type == PointType::regular)
    branch.points.back().point_type = PointType::endpoint;
  return branch;
}

/// System-coordinate finalize: identity mass norms.
BranchPoint plain_finalize(BranchPoint p) {
  p.norm_inf = norm_inf(p.u);
  double acc = 0.0;
  for (double v : p.u) acc += v * v;
  p.norm_l2 = std::sqrt(acc);
  p.np = static_cast<int>(p.u.size());
  return p;
}

}  // namespace

Branch continue_system(ContinuationSystem& sys, std::span<const double> u0, double mu0,
                       const ContSettings& settings) {
  ContSettings rs = resolve_settings(settings, sys.n());
  DriverHooks hooks;
  hooks.finalize = plain_finalize;
  Branch b = run_continuation(sys, u0, mu0, rs, hooks);
  b.problem_id = "system";
  return b;
}

Branch continue_branch(const EllipticProblem& prob, const Mesh& mesh,
                       std::span<const double> u0_full, double mu0,
                       const ContSettings& settings, const ContObserver& observer) {
  if (static_cast<int>(u0_full.size()) != mesh.np())
    throw Error("continue_branch: start vector length != mesh points");
  ContSettings rs = resolve_settings(settings, mesh.np());
  FemContinuation sys(mesh, prob);

  DriverHooks hooks;
  hooks.finalize = [&sys](BranchPoint p) {
    const FemSystem& fem = sys.fem();
    std::vector<double> tu(p.tangent.begin(), p.tangent.end() - 1);
    double tmu = p.tangent.back();
    p.u = fem.expand(p.u);
    p.tangent = fem.expand(tu);
    p.tangent.push_back(tmu);
    p.norm_inf = norm_inf(p.u);
    p.norm_l2 = norm_l2(fem.mass(), p.u);
    p.np = fem.mesh().np();
    return p;
  };
  if (observer)
    hooks.observe = [&](const BranchPoint& p, std::span<const BranchEvent> ev) {
      observer(p, ev, sys.fem().mesh());
    };
  if (rs.amod > 0)
    hooks.adapt = [&sys, &rs](int idx, LoopState& st) {
      if (idx % rs.amod != 0) return;
      const FemSystem& fem = sys.fem();
      if (fem.mesh().nt() >= rs.maxt) return;
      AdaptOptions opt;
      opt.ngen = rs.ngen;
      opt.maxt = rs.maxt;
      opt.tol = rs.tol;
      opt.maxit = std::max(rs.maxit, 20);
      Mesh old_mesh = fem.mesh();  // copy: rebuild invalidates the reference
      std::vector<double> tu(st.t.begin(), st.t.end() - 1);
      std::vector<double> tu_full = fem.expand(tu);
      AdaptResult ar = adapt(old_mesh, sys.fem().problem(), fem.expand(st.u), st.mu, opt);
      if (ar.generations == 0) return;
      std::vector<double> t_new_full = transfer(old_mesh, tu_full, ar.mesh);
      sys.rebuild(ar.mesh);
      st.u = sys.fem().reduce(ar.u_full);
      std::vector<double> t_new = sys.fem().reduce(t_new_full);
      t_new.push_back(st.t.back());
      double nn = xi_inner(rs.xi, t_new, t_new);
      if (!(nn > 0.0)) throw Error("continuation: tangent degenerated after adaptation");
      for (double& v : t_new) v /= std::sqrt(nn);
      st.t = std::move(t_new);
    };

  Branch b = run_continuation(sys, sys.fem().reduce(u0_full), mu0, rs, hooks);
  b.problem_id = prob.id;
  b.final_mesh = sys.fem().mesh();
  return b;
}

namespace {

BranchPoint locate_point(ContinuationSystem& sys, const CorrectResult& cr, double s,
                         std::span<const double> prev_tangent, const ContSettings& rs,
                         const EigenResult& er) {
  BranchPoint p;
  p.u = cr.u;
  p.mu = cr.mu;
  p.s = s;
  SparseMatrix jac = sys.jacobian(cr.u, cr.mu);
  p.tangent = tangent(jac, sys.residual_mu(cr.u, cr.mu), prev_tangent, rs.xi);
  p.det_sign = det_sign(jac);
  p.n_neg = er.n_negative();
  p.point_type = PointType::branch;
  p.newton_iters = cr.iters;
  return plain_finalize(std::move(p));
}

}  // namespace

BranchPoint findbif_system(ContinuationSystem& sys, const BranchPoint& a,
                           const BranchPoint& b, const ContSettings& settings) {
  ContSettings rs = resolve_settings(settings, sys.n());
  const int n = sys.n();
  if (static_cast<int>(a.u.size()) != n || static_cast<int>(b.u.size()) != n)
    throw Error("findbif: segment endpoints do not match the system size");
  if (a.n_neg == b.n_neg)
    throw Error("findbif: segment endpoints have equal n_neg (" +
                std::to_string(a.n_neg) + "); no stability change to locate");
  double lo = 0.0, hi = b.s - a.s;
  if (!(hi > 0.0)) throw Error("findbif: endpoints must be ordered by arclength");

  SparseMatrix ident;
  const SparseMatrix* mptr = sys.mass();
  if (!mptr) {
    ident = identity_matrix(n);
    mptr = &ident;
  }
  auto eig_at = [&](std::span<const double> u, double mu) {
    SparseMatrix jac = sys.jacobian(u, mu);
    EigenOptions opts;
    if (auto sh = sys.eig_shift(u, mu)) opts.shift = *sh;
    return eigs_generalized(jac, *mptr, std::min(rs.neig, n), opts);
  };

  std::optional<BranchPoint> best;
  int failures = 0;
  for (int iter = 0; iter < 80 && hi - lo >= 1e-8; ++iter) {
    double mid = 0.5 * (lo + hi);
    std::vector<double> guess(n);
    for (int i = 0; i < n; ++i) guess[i] = a.u[i] + mid * a.tangent[i];
    double mu_guess = a.mu + mid * a.tangent.back();
    CorrectResult cr = correct(sys, guess, mu_guess, a.u, a.mu, a.tangent, mid, rs.xi,
                               rs.tol, std::max(rs.maxit, 20));
    if (!cr.converged) {
      if (++failures > 10) throw Error("findbif: hyperplane correction kept failing");
      hi = mid;  // retry closer to the resolved endpoint
      continue;
    }
    EigenResult er = eig_at(cr.u, cr.mu);
    double scale = 0.0, lam_min = 1e300;
    for (double v : er.values) {
      scale = std::max(scale, std::abs(v));
      lam_min = std::min(lam_min, std::abs(v));
    }
    best = locate_point(sys, cr, a.s + mid, a.tangent, rs, er);
    if (lam_min <= 1e-6 * scale) return *best;
    if (er.n_negative() == a.n_neg)
      lo = mid;
    else
      hi = mid;
  }
  if (!best) throw Error("findbif: no trial point could be corrected");
  return *best;
}

BranchPoint findbif(const EllipticProblem& prob, const Mesh& mesh, const BranchPoint& a,
                    const BranchPoint& b, const ContSettings& settings) {
  if (a.np != mesh.np() || b.np != mesh.np())
    throw Error("findbif: branch points do not live on the given mesh");
  ContSettings rs = resolve_settings(settings, mesh.np());
  FemContinuation sys(mesh, prob);
  const FemSystem& fem = sys.fem();
  auto shrink = [&fem](const BranchPoint& p) {
    BranchPoint q = p;
    q.u = fem.reduce(p.u);
    std::vector<double> tu(p.tangent.begin(), p.tangent.end() - 1);
    q.tangent = fem.reduce(tu);
    q.tangent.push_back(p.tangent.back());
    return q;
  };
  BranchPoint located = findbif_system(sys, shrink(a), shrink(b), rs);
  std::vector<double> tu(located.tangent.begin(), located.tangent.end() - 1);
  double tmu = located.tangent.back();
  located.u = fem.expand(located.u);
  located.tangent = fem.expand(tu);
  located.tangent.push_back(tmu);
  located.norm_inf = norm_inf(located.u);
  located.norm_l2 = norm_l2(fem.mass(), located.u);
  located.np = mesh.np();
  return located;
}

std::vector<StartSolution> switch_branch_system(ContinuationSystem& sys,
                                                const BranchPoint& bp, double delta_sw,
                                                const ContSettings& settings) {
  if (delta_sw == 0.0) throw Error("switch_branch: delta_sw must be nonzero");
  ContSettings rs = resolve_settings(settings, sys.n());
  const int n = sys.n();
  if (static_cast<int>(bp.u.size()) != n)
    throw Error("switch_branch: point does not match the system size");

  SparseMatrix jac = sys.jacobian(bp.u, bp.mu);
  EigenOptions opts;
  if (auto sh = sys.eig_shift(bp.u, bp.mu)) opts.shift = *sh;
  SparseMatrix ident;
  const SparseMatrix* m = sys.mass();
  if (!m) {
    ident = identity_matrix(n);
    m = &ident;
  }
  EigenResult er = eigs_generalized(jac, *m, std::min(rs.neig, n), opts);
  int k0 = 0;
  for (size_t i = 1; i < er.values.size(); ++i)
    if (std::abs(er.values[i]) < std::abs(er.values[k0])) k0 = static_cast<int>(i);
  double scale = 0.0;
  for (double v : er.values) scale = std::max(scale, std::abs(v));
  double second = 1e300;
  for (size_t i = 0; i < er.values.size(); ++i)
    if (static_cast<int>(i) != k0) second = std::min(second, std::abs(er.values[i]));
  if (er.values.size() > 1 && second <= 1e-6 * scale)
    throw Error("switch_branch: multiple near-zero eigenvalues (|lambda| " +
                std::to_string(std::abs(er.values[k0])) + " and " +
                std::to_string(second) + " against scale " + std::to_string(scale) +
                "); symmetric multiple bifurcation");

  std::vector<double> phi = er.vectors[k0];
  double pn = norm_inf(phi);
  if (!(pn > 0.0)) throw Error("switch_branch: zero kernel vector");
  for (double& v : phi) v /= pn;

  const double mu_t = bp.mu + 1e-4 * rs.direction;
  std::vector<StartSolution> out;
  for (double sgn : {1.0, -1.0}) {
    std::vector<double> guess(n);
    for (int i = 0; i < n; ++i) guess[i] = bp.u[i] + sgn * delta_sw * phi[i];
    CorrectResult nr = newton_fixed_mu(sys, guess, mu_t, rs.tol, 30);
    if (nr.converged && norm_inf(nr.u) > 10.0 * delta_sw * rs.tol)
      out.push_back({std::move(nr.u), mu_t});
  }
  return out;
}

std::vector<StartSolution> switch_branch(const EllipticProblem& prob, const Mesh& mesh,
                                         const BranchPoint& bp, double delta_sw,
                                         const ContSettings& settings) {
  if (bp.np != mesh.np())
    throw Error("switch_branch: branch point does not live on the given mesh");
  ContSettings rs = resolve_settings(settings, mesh.np());
  FemContinuation sys(mesh, prob);
  BranchPoint q = bp;
  q.u = sys.fem().reduce(bp.u);
  auto starts = switch_branch_system(sys, q, delta_sw, rs);
  for (auto& s : starts) s.u = sys.fem().expand(s.u);
  return starts;
}

namespace {

std::string g15(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

}  // namespace

void write_branch_csv(std::ostream& os, const Branch& b) {
  os << "idx,s,mu,norm_inf,norm_l2,n_neg,det_sign,type,newton_iters,np\n";
  for (size_t i = 0; i < b.points.size(); ++i) {
    const BranchPoint& p = b.points[i];
    os << i << ',' << g15(p.s) << ',' << g15(p.mu) << ',' << g15(p.norm_inf) << ','
       << g15(p.norm_l2) << ',' << p.n_neg << ',' << p.det_sign << ','
       << to_string(p.point_type) << ',' << p.newton_iters << ',' << p.np << '\n';
  }
}

void write_events_csv(std::ostream& os, const Branch& b) {
  os << "idx,type,mu\n";
  for (const BranchEvent& e : b.events)
    os << e.idx << ',' << to_string(e.type) << ',' << g15(e.mu) << '\n';
}

}  // namespace elcont
