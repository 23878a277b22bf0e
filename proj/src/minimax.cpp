#include "elcont/minimax.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "elcont/error.hpp"
#include "elcont/linsolve.hpp"

namespace elcont {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> axpy(std::span<const double> x, double alpha, std::span<const double> y) {
  std::vector<double> r(x.begin(), x.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += alpha * y[i];
  return r;
}

// Dense solve for the subspace Newton systems (m <= 8).
bool solve_small(std::vector<std::vector<double>> a, std::vector<double> b,
                 std::vector<double>& out) {
  const int m = static_cast<int>(b.size());
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-14) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < m; ++r) {
      const double fac = a[r][col] / a[col][col];
      for (int c = col; c < m; ++c) a[r][c] -= fac * a[col][c];
      b[r] -= fac * b[col];
    }
  }
  out.assign(m, 0.0);
  for (int r = m - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < m; ++c) s -= a[r][c] * out[c];
    out[r] = s / a[r][r];
  }
  return true;
}

constexpr double kUnboundedJ = 1e12;

}  // namespace

SupportSpace::SupportSpace(const SparseMatrix& k) : k_(&k) {}

double SupportSpace::k_inner(std::span<const double> a, std::span<const double> b) const {
  if (static_cast<int>(a.size()) != k_->n() || a.size() != b.size())
    throw Error("support space: vector length does not match the stiffness matrix");
  return dot(k_->multiply(a), b);
}

std::vector<double> SupportSpace::project_out(std::span<const double> v) const {
  std::vector<double> w(v.begin(), v.end());
  for (int pass = 0; pass < 2; ++pass) {
    if (basis_.empty()) break;
    const std::vector<double> kw = k_->multiply(w);
    std::vector<double> coef(basis_.size());
    for (std::size_t i = 0; i < basis_.size(); ++i) coef[i] = dot(basis_[i], kw);
    for (std::size_t i = 0; i < basis_.size(); ++i)
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= coef[i] * basis_[i][j];
  }
  return w;
}

std::vector<double> SupportSpace::normalize_project(std::span<const double> v) const {
  const double v_nrm = std::sqrt(std::max(k_inner(v, v), 0.0));
  std::vector<double> w = project_out(v);
  const double w_nrm = std::sqrt(std::max(k_inner(w, w), 0.0));
  if (w_nrm <= 1e-10 * std::max(v_nrm, 1e-300))
    throw Error("support space: direction collapses into the span of found solutions");
  for (double& x : w) x /= w_nrm;
  return w;
}

bool SupportSpace::add(std::vector<double> solution) {
  if (static_cast<int>(solution.size()) != k_->n())
    throw Error("support space: vector length does not match the stiffness matrix");
  const double s_nrm = std::sqrt(std::max(k_inner(solution, solution), 0.0));
  std::vector<double> w = project_out(solution);
  const double w_nrm = std::sqrt(std::max(k_inner(w, w), 0.0));
  raw_.push_back(std::move(solution));
  if (w_nrm <= 1e-10 * std::max(s_nrm, 1e-300)) return false;
  for (double& x : w) x /= w_nrm;
  basis_.push_back(std::move(w));
  return true;
}

PeakResult peak_select(const FemSystem& sys, double mu, const SupportSpace& L,
                       std::span<const double> v, std::span<const double> warm) {
  const int n = sys.n_free();
  if (static_cast<int>(v.size()) != n)
    throw Error("peak_select: direction length does not match the free nodes");
  if (std::fabs(L.k_inner(v, v) - 1.0) > 1e-6)
    throw Error("peak_select: direction is not normalized in the H10 product");
  for (const auto& b : L.basis())
    if (std::fabs(L.k_inner(v, b)) > 1e-6)
      throw Error("peak_select: direction is not orthogonal to the support space");

  const int m = 1 + L.size();
  std::vector<std::span<const double>> dirs;
  dirs.emplace_back(v);
  for (const auto& b : L.basis()) dirs.emplace_back(b);

  auto combine = [&](const std::vector<double>& x) {
    std::vector<double> u(n, 0.0);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) u[i] += x[j] * dirs[j][i];
    return u;
  };
  auto j_of = [&](const std::vector<double>& x) { return sys.energy(combine(x), mu); };

  std::vector<double> x(m, 0.0);
  if (static_cast<int>(warm.size()) == m && warm[0] > 0.0) {
    x.assign(warm.begin(), warm.end());
  } else {
    // Seed t0 from a log-spaced ray scan; the basis weights start at zero.
    double best_t = 1e-2, best_j = -1e300;
    for (int k = 0; k <= 80; ++k) {
      const double t = 1e-2 * std::pow(10.0, 4.0 * k / 80.0);
      x[0] = t;
      const double jv = j_of(x);
      if (std::isfinite(jv) && jv > best_j) {
        best_j = jv;
        best_t = t;
      }
    }
    x.assign(m, 0.0);
    x[0] = best_t;
  }

  PeakResult res;
  std::vector<double> u = combine(x);
  double j_cur = sys.energy(u, mu);
  int it = 0;
  for (; it < 200; ++it) {
    if (j_cur > kUnboundedJ)
      throw Error("peak_select: functional unbounded above along the search subspace");
    const std::vector<double> g_full = sys.residual_free(u, mu);
    std::vector<double> g(m);
    for (int j = 0; j < m; ++j) g[j] = dot(g_full, dirs[j]);
    double gnorm = 0.0;
    for (double gi : g) gnorm = std::max(gnorm, std::fabs(gi));
    const double gtol = 1e-11 * (1.0 + std::fabs(j_cur));
    const bool at_floor = x[0] <= 0.0 && g[0] <= 0.0;
    if (gnorm <= gtol || (at_floor && it > 0)) break;

    const SparseMatrix jac = sys.jacobian_free(u, mu);
    std::vector<std::vector<double>> h(m, std::vector<double>(m, 0.0));
    for (int j = 0; j < m; ++j) {
      const std::vector<double> w = jac.multiply(dirs[j]);
      for (int i = 0; i < m; ++i) h[i][j] = dot(dirs[i], w);
    }
    std::vector<double> rhs(m);
    for (int j = 0; j < m; ++j) rhs[j] = -g[j];
    std::vector<double> s;
    bool have_newton = solve_small(h, rhs, s);

    // Trust cap: stay on the local peak branch instead of jumping to a far
    // maximum of the subspace landscape.
    double xmax = 0.0;
    for (double xi : x) xmax = std::max(xmax, std::fabs(xi));
    const double cap = 0.5 * (1.0 + xmax);

    bool moved = false;
    if (have_newton) {
      double smax = 0.0;
      for (double si : s) smax = std::max(smax, std::fabs(si));
      double alpha = smax > cap ? cap / smax : 1.0;
      for (int halve = 0; halve < 12 && !moved; ++halve, alpha *= 0.5) {
        std::vector<double> x_try = axpy(x, alpha, s);
        if (x_try[0] < 0.0) x_try[0] = 0.0;
        const double j_try = j_of(x_try);
        if (std::isfinite(j_try) && j_try >= j_cur - 1e-12 * (1.0 + std::fabs(j_cur))) {
          x = std::move(x_try);
          j_cur = j_try;
          moved = true;
        }
      }
    }
    if (!moved) {
      // Steepest ascent fallback when the Newton step is unusable.
      double alpha = gnorm > cap ? cap / gnorm : 1.0;
      for (int halve = 0; halve < 40 && !moved; ++halve, alpha *= 0.5) {
        std::vector<double> x_try = axpy(x, alpha, g);
        if (x_try[0] < 0.0) x_try[0] = 0.0;
        const double j_try = j_of(x_try);
        if (std::isfinite(j_try) && j_try > j_cur) {
          x = std::move(x_try);
          j_cur = j_try;
          moved = true;
        }
      }
    }
    if (!moved) break;
    u = combine(x);
    j_cur = sys.energy(u, mu);
  }

  if (x[0] <= 1e-12)
    throw Error("peak_select: peak degenerated (coefficient of the direction vanished)");
  {
    const std::vector<double> g_full = sys.residual_free(u, mu);
    double gnorm = 0.0;
    for (int j = 0; j < m; ++j) gnorm = std::max(gnorm, std::fabs(dot(g_full, dirs[j])));
    if (gnorm > 1e-6 * (1.0 + std::fabs(j_cur)))
      throw Error("peak_select: subspace maximization did not converge");
  }
  res.u = std::move(u);
  res.coeff = std::move(x);
  res.j_value = j_cur;
  res.iters = it;
  return res;
}

MinimaxResult minimax_search(const FemSystem& sys, double mu, const SupportSpace& L,
                             std::span<const double> v0, const MinimaxSettings& settings) {
  if (settings.tol_grad <= 0.0 || settings.cont_tol <= 0.0)
    throw Error("minimax_search: tolerances must be positive");
  MinimaxResult res;
  std::vector<double> v = L.normalize_project(v0);
  PeakResult pr = peak_select(sys, mu, L, v);

  auto polish = [&](const std::vector<double>& u0) -> bool {
    try {
      NewtonResult nr = newton_solve(sys, u0, mu, settings.cont_tol, settings.newton_maxit);
      if (!nr.converged) return false;
      res.u = std::move(nr.u);
      res.j_value = sys.energy(res.u, mu);
      res.converged = true;
      return true;
    } catch (const Error&) {
      return false;
    }
  };

  double tol_cur = settings.tol_grad;
  int outer = 0;
  for (; outer < settings.max_outer; ++outer) {
    const std::vector<double> g = sys.residual_free(pr.u, mu);
    const std::vector<double> d = sys.gradient_h10(pr.u, mu);
    const double dn2 = std::max(dot(d, g), 0.0);
    const double dn = std::sqrt(dn2);
    if (dn <= tol_cur) {
      if (polish(pr.u)) break;
      tol_cur *= 0.3;  // polish basin not reached yet; keep descending
      if (tol_cur < 1e-12) break;
      continue;
    }
    bool accepted = false;
    double alpha = 1.0;
    for (int halve = 0; halve < settings.max_inner && !accepted; ++halve, alpha *= 0.5) {
      std::vector<double> v_new;
      PeakResult pr_new;
      try {
        v_new = L.normalize_project(axpy(v, -alpha, d));
        pr_new = peak_select(sys, mu, L, v_new, pr.coeff);
      } catch (const Error&) {
        continue;
      }
      if (pr_new.j_value <= pr.j_value - settings.armijo_c * alpha * dn2) {
        v = std::move(v_new);
        pr = std::move(pr_new);
        accepted = true;
      }
    }
    if (!accepted) {
      polish(pr.u);  // plateau: the peak may already sit on a critical point
      break;
    }
    res.j_history.push_back(pr.j_value);
  }
  res.iters = outer;
  res.peak_coeff = pr.coeff;
  if (!res.converged) {
    res.u = pr.u;
    res.j_value = pr.j_value;
  }
  return res;
}

int morse_index(const FemSystem& sys, std::span<const double> u_free, double mu, int neig) {
  const int n = sys.n_free();
  if (neig < 1) throw Error("morse_index: neig must be at least 1");
  const int k = std::min(neig, n);
  EigenOptions opts;
  opts.shift = sys.eig_shift_hint(u_free, mu);
  const EigenResult er = eigs_generalized(sys.jacobian_free(u_free, mu), sys.mass_free(), k, opts);
  if (!er.all_converged) throw Error("morse_index: eigensolver failed to converge");
  if (k < n && !er.values.empty() && er.values.back() < 0.0)
    throw Error("morse_index: negative eigenvalue count not resolved within neig; increase neig");
  return er.n_negative();
}

int morse_index(const EllipticProblem& prob, const Mesh& mesh, std::span<const double> u_full,
                double mu, int neig) {
  FemSystem sys(mesh, prob);
  return morse_index(sys, sys.reduce(u_full), mu, neig);
}

SeedSpec parse_seed(const std::string& text) {
  SeedSpec spec;
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto expect = [&](const std::string& tok) {
    skip_ws();
    if (text.compare(pos, tok.size(), tok) != 0)
      throw Error("seed: expected '" + tok + "' at position " + std::to_string(pos) + " in '" +
                  text + "'");
    pos += tok.size();
  };
  auto number = [&]() -> double {
    skip_ws();
    const char* start = text.c_str() + pos;
    char* end = nullptr;
    const double val = std::strtod(start, &end);
    if (end == start) throw Error("seed: expected a number in '" + text + "'");
    pos += static_cast<std::size_t>(end - start);
    return val;
  };
  while (true) {
    skip_ws();
    if (text.compare(pos, 7, "support") == 0) {
      expect("support");
      expect("(");
      const double k = number();
      if (k < 0.0 || k != std::floor(k))
        throw Error("seed: support count must be a non-negative integer in '" + text + "'");
      spec.support = static_cast<int>(k);
      expect(")");
      skip_ws();
      if (pos < text.size()) throw Error("seed: support(...) must come last in '" + text + "'");
      break;
    }
    expect("bump");
    expect("(");
    SeedBump b;
    b.x = number();
    expect(",");
    b.y = number();
    expect(",");
    skip_ws();
    if (text.compare(pos, 1, "+") == 0 &&
        (pos + 1 >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos + 1])))) {
      b.sign = 1.0;
      ++pos;
    } else if (text.compare(pos, 1, "-") == 0 &&
               (pos + 1 >= text.size() ||
                !std::isdigit(static_cast<unsigned char>(text[pos + 1])))) {
      b.sign = -1.0;
      ++pos;
    } else {
      b.sign = number();
    }
    if (b.sign != 1.0 && b.sign != -1.0)
      throw Error("seed: bump sign must be +1 or -1 in '" + text + "'");
    expect(",");
    b.width = number();
    if (!(b.width > 0.0)) throw Error("seed: bump width must be positive in '" + text + "'");
    expect(")");
    spec.bumps.push_back(b);
    skip_ws();
    if (pos >= text.size()) break;
    expect("+");
  }
  if (spec.bumps.empty()) throw Error("seed: no bumps in '" + text + "'");
  spec.label = "custom";
  return spec;
}

std::vector<SeedSpec> default_seeds(const std::string& problem_id) {
  double half = 0.0;
  bool full_set = false;
  if (problem_id == "lef") {
    half = 0.5;
    full_set = true;
  } else if (problem_id == "lef_force" || problem_id == "lef_force_scaled") {
    half = 1.0;
  } else {
    throw Error("default_seeds: no seed library for problem '" + problem_id + "'");
  }
  const double w = 0.15 * half;
  const double o = 0.5 * half;
  auto bump = [&](double x, double y, double s) { return SeedBump{x, y, s, w}; };
  std::vector<SeedSpec> seeds;
  if (full_set) {
    seeds.push_back({{bump(0, 0, +1)}, "center", -1});
    seeds.push_back({{bump(o, o, +1), bump(-o, -o, -1)}, "diag", -1});
    seeds.push_back({{bump(-o, o, +1), bump(o, -o, -1)}, "antidiag", -1});
    seeds.push_back({{bump(o, 0, +1), bump(-o, 0, -1)}, "xaxis", -1});
    seeds.push_back({{bump(0, o, +1), bump(0, -o, -1)}, "yaxis", -1});
    seeds.push_back({{bump(o, o, +1), bump(-o, o, -1), bump(-o, -o, +1), bump(o, -o, -1)},
                     "quadrants",
                     -1});
    seeds.push_back({{bump(o, 0, +1), bump(0, o, -1), bump(-o, 0, +1), bump(0, -o, -1)},
                     "axes4",
                     -1});
  } else {
    // The forcing bump sits in the upper-right quadrant and favors negative
    // values there; seed the low states with the negative lobe on that side.
    seeds.push_back({{bump(0, 0, -1)}, "center", -1});
    seeds.push_back({{bump(o, o, -1), bump(-o, -o, +1)}, "diag", -1});
    seeds.push_back({{bump(-o, o, +1), bump(o, -o, -1)}, "antidiag", -1});
  }
  return seeds;
}

std::vector<double> build_seed_field(const Mesh& mesh, const SeedSpec& seed,
                                     bool zero_boundary) {
  if (seed.bumps.empty()) throw Error("seed: no bumps");
  std::vector<double> u(mesh.np(), 0.0);
  for (int i = 0; i < mesh.np(); ++i) {
    if (zero_boundary && mesh.on_boundary[i]) continue;
    const Point2& p = mesh.points[i];
    double val = 0.0;
    for (const SeedBump& b : seed.bumps) {
      const double dx = p.x1 - b.x;
      const double dy = p.x2 - b.y;
      val += b.sign * std::exp(-(dx * dx + dy * dy) / (2.0 * b.width * b.width));
    }
    u[i] = val;
  }
  return u;
}

std::vector<FoundSolution> find_multiple(const EllipticProblem& prob, const Mesh& mesh,
                                         double mu0, const std::vector<SeedSpec>& seeds,
                                         const MinimaxSettings& settings) {
  if (prob.id == "caginalp")
    throw Error(
        "find_multiple: problem 'caginalp' is unsupported; its energy grows without bound "
        "along rays, so peak selection has no maximum (continue from the constant states "
        "instead)");
  if (!prob.F)
    throw Error("find_multiple: problem '" + prob.id + "' has no antiderivative F registered");

  FemSystem sys(mesh, prob);
  std::vector<std::vector<double>> found_free;  // discovery order, free coords
  std::vector<FoundSolution> found;
  const int kNeig = 16;

  for (std::size_t si = 0; si < seeds.size(); ++si) {
    std::vector<double> field = build_seed_field(mesh, seeds[si],
                                                 prob.bc == BoundaryCondition::dirichlet_zero);
    std::vector<double> v0 = sys.reduce(field);
    if (norm_inf(v0) == 0.0) {
      std::fprintf(stderr, "[minimax] seed %zu (%s): zero after boundary reduction, skipped\n",
                   si, seeds[si].label.c_str());
      continue;
    }
    // Index ladder: a k-lobe seed targets a Morse-index-k solution, which
    // needs k-1 supporting solutions below it (explicit support(...) wins).
    int want = seeds[si].support >= 0 ? seeds[si].support
                                      : static_cast<int>(seeds[si].bumps.size()) - 1;
    want = std::min(want, 7);
    const int nsup = std::min<int>(want, static_cast<int>(found_free.size()));
    SupportSpace space(sys.stiffness_free());
    for (int i = 0; i < nsup; ++i) space.add(found_free[i]);
    MinimaxResult mr;
    try {
      mr = minimax_search(sys, mu0, space, v0, settings);
    } catch (const Error& e) {
      std::fprintf(stderr, "[minimax] seed %zu (%s): %s\n", si, seeds[si].label.c_str(),
                   e.what());
      continue;
    }
    if (!mr.converged) {
      std::fprintf(stderr, "[minimax] seed %zu (%s): no convergence in %d outer iterations\n",
                   si, seeds[si].label.c_str(), mr.iters);
      continue;
    }
    std::vector<double> full = sys.expand(mr.u);
    const double nrm = norm_inf(full);
    bool duplicate = false;
    for (const FoundSolution& fs : found) {
      double diff = 0.0;
      for (std::size_t i = 0; i < full.size(); ++i)
        diff = std::max(diff, std::fabs(full[i] - fs.u[i]));
      if (diff <= 1e-3 * std::max(nrm, fs.norm_inf)) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      std::fprintf(stderr, "[minimax] seed %zu (%s): converged to an already found solution\n",
                   si, seeds[si].label.c_str());
      continue;
    }
    FoundSolution fs;
    fs.morse_index = morse_index(sys, mr.u, mu0, kNeig);
    found_free.push_back(std::move(mr.u));
    fs.u = std::move(full);
    fs.mu = mu0;
    fs.j_value = mr.j_value;
    fs.norm_inf = nrm;
    fs.seed_index = static_cast<int>(si);
    fs.iters = mr.iters;
    found.push_back(std::move(fs));
  }
  return found;
}

}  // namespace elcont
