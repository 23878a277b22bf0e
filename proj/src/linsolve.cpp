#include "elcont/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>

namespace elcont {

namespace {

constexpr double kSingularRel = 1e-14;

// Reverse Cuthill-McKee ordering on the (symmetrized) sparsity pattern.
// Returns perm with: row i of the reordered matrix is row perm[i] of A.
std::vector<int> rcm_ordering(const SparseMatrix& a) {
  const int n = a.n();
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
      int j = a.col_idx()[k];
      if (j == i) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& v : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  auto degree = [&](int v) { return static_cast<int>(adj[v].size()); };

  std::vector<int> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  for (;;) {
    int start = -1;
    for (int i = 0; i < n; ++i)
      if (!seen[i] && (start < 0 || degree(i) < degree(start))) start = i;
    if (start < 0) break;
    std::queue<int> q;
    q.push(start);
    seen[start] = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      order.push_back(v);
      std::vector<int> next;
      for (int w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          next.push_back(w);
        }
      std::sort(next.begin(), next.end(),
                [&](int x, int y) { return degree(x) < degree(y); });
      for (int w : next) q.push(w);
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

}  // namespace

LuFactorization::LuFactorization(const SparseMatrix& a) : n_(a.n()) {
  if (n_ == 0) throw Error("lu: empty matrix");
  max_abs_ = a.max_abs();
  perm_ = rcm_ordering(a);
  iperm_.assign(n_, 0);
  for (int i = 0; i < n_; ++i) iperm_[perm_[i]] = i;

  // Bandwidth of the reordered matrix.
  band_ = 0;
  for (int i = 0; i < n_; ++i)
    for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
      band_ = std::max(band_, std::abs(iperm_[i] - iperm_[a.col_idx()[k]]));

  // LAPACK-style band storage with room for pivoting fill: kl = ku = band_,
  // effective upper bandwidth after pivoting is 2*band_.
  const int kl = band_, ku = band_;
  ldab_ = 2 * kl + ku + 1;
  ab_.assign(static_cast<std::size_t>(ldab_) * n_, 0.0);
  auto at = [&](int i, int j) -> double& {
    return ab_[static_cast<std::size_t>(j) * ldab_ + (kl + ku + i - j)];
  };
  for (int i = 0; i < n_; ++i)
    for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
      at(iperm_[i], iperm_[a.col_idx()[k]]) = a.values()[k];

  pivot_row_.assign(n_, 0);
  min_pivot_ = std::numeric_limits<double>::max();
  const double threshold = kSingularRel * max_abs_;
  const int ku_eff = kl + ku;

  for (int j = 0; j < n_; ++j) {
    // Partial pivoting over rows j .. j+kl.
    int last_row = std::min(j + kl, n_ - 1);
    int piv = j;
    for (int i = j + 1; i <= last_row; ++i)
      if (std::abs(at(i, j)) > std::abs(at(piv, j))) piv = i;
    pivot_row_[j] = piv;
    if (piv != j) {
      parity_odd_ = !parity_odd_;
      int last_col = std::min(j + ku_eff, n_ - 1);
      for (int c = j; c <= last_col; ++c) std::swap(at(j, c), at(piv, c));
    }
    double p = at(j, j);
    min_pivot_ = std::min(min_pivot_, std::abs(p));
    if (std::abs(p) <= threshold) {
      singular_ = true;
      // Leave the column uneliminated; solve() refuses singular systems.
      continue;
    }
    if (p < 0) ++neg_pivots_;
    int last_col = std::min(j + ku_eff, n_ - 1);
    for (int i = j + 1; i <= last_row; ++i) {
      double l = at(i, j) / p;
      at(i, j) = l;
      if (l == 0.0) continue;
      for (int c = j + 1; c <= last_col; ++c) at(i, c) -= l * at(j, c);
    }
  }
}

int LuFactorization::det_sign() const {
  if (singular_) return 0;
  int s = (neg_pivots_ % 2 == 0) ? 1 : -1;
  return parity_odd_ ? -s : s;
}

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
  if (static_cast<int>(b.size()) != n_) throw Error("lu solve: length mismatch");
  if (singular_)
    throw SingularMatrixError("lu solve: matrix is singular at working precision");
  const int kl = band_, ku_eff = 2 * band_;
  auto at = [&](int i, int j) -> double {
    return ab_[static_cast<std::size_t>(j) * ldab_ + (kl + band_ + i - j)];
  };
  std::vector<double> x(n_);
  for (int i = 0; i < n_; ++i) x[i] = b[perm_[i]];
  // P b, then L y = P b (unit lower triangular, multipliers stored in band).
  for (int j = 0; j < n_; ++j) {
    if (pivot_row_[j] != j) std::swap(x[j], x[pivot_row_[j]]);
    int last_row = std::min(j + kl, n_ - 1);
    for (int i = j + 1; i <= last_row; ++i) x[i] -= at(i, j) * x[j];
  }
  // U x = y.
  for (int j = n_ - 1; j >= 0; --j) {
    x[j] /= at(j, j);
    int first_row = std::max(0, j - ku_eff);
    for (int i = first_row; i < j; ++i) x[i] -= at(i, j) * x[j];
  }
  std::vector<double> out(n_);
  for (int i = 0; i < n_; ++i) out[perm_[i]] = x[i];
  return out;
}

std::vector<double> lu_solve(const SparseMatrix& a, std::span<const double> b) {
  return LuFactorization(a).solve(b);
}

int det_sign(const SparseMatrix& a) { return LuFactorization(a).det_sign(); }

// --- bordered systems ------------------------------------------------------

namespace {

// Dense LU with partial pivoting; used only as the fallback when the leading
// block of a bordered system is singular.
std::vector<double> dense_solve(std::vector<double> m, std::vector<double> rhs) {
  const int n = static_cast<int>(rhs.size());
  auto a = [&](int i, int j) -> double& { return m[static_cast<std::size_t>(i) * n + j]; };
  double scale = 0.0;
  for (double v : m) scale = std::max(scale, std::abs(v));
  for (int j = 0; j < n; ++j) {
    int piv = j;
    for (int i = j + 1; i < n; ++i)
      if (std::abs(a(i, j)) > std::abs(a(piv, j))) piv = i;
    if (piv != j) {
      for (int c = 0; c < n; ++c) std::swap(a(j, c), a(piv, c));
      std::swap(rhs[j], rhs[piv]);
    }
    if (std::abs(a(j, j)) <= kSingularRel * scale)
      throw SingularMatrixError("bordered solve: bordered matrix is singular");
    for (int i = j + 1; i < n; ++i) {
      double l = a(i, j) / a(j, j);
      if (l == 0.0) continue;
      a(i, j) = l;
      for (int c = j + 1; c < n; ++c) a(i, c) -= l * a(j, c);
      rhs[i] -= l * rhs[j];
    }
  }
  for (int j = n - 1; j >= 0; --j) {
    rhs[j] /= a(j, j);
    for (int i = 0; i < j; ++i) rhs[i] -= a(i, j) * rhs[j];
  }
  return rhs;
}

BorderedResult bordered_fallback(const SparseMatrix& a, std::span<const double> b,
                                 std::span<const double> c, double d,
                                 std::span<const double> f, double g) {
  const int n = a.n();
  std::vector<double> m(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
      m[static_cast<std::size_t>(i) * (n + 1) + a.col_idx()[k]] = a.values()[k];
  for (int i = 0; i < n; ++i) {
    m[static_cast<std::size_t>(i) * (n + 1) + n] = b[i];
    m[static_cast<std::size_t>(n) * (n + 1) + i] = c[i];
  }
  m[static_cast<std::size_t>(n) * (n + 1) + n] = d;
  std::vector<double> rhs(f.begin(), f.end());
  rhs.push_back(g);
  auto sol = dense_solve(std::move(m), std::move(rhs));
  BorderedResult r;
  r.y = sol[n];
  sol.pop_back();
  r.x = std::move(sol);
  return r;
}

}  // namespace

BorderedResult solve_bordered(const SparseMatrix& a, std::span<const double> b,
                              std::span<const double> c, double d,
                              std::span<const double> f, double g) {
  const int n = a.n();
  if (static_cast<int>(b.size()) != n || static_cast<int>(c.size()) != n ||
      static_cast<int>(f.size()) != n)
    throw Error("bordered solve: length mismatch");

  LuFactorization lu(a);
  if (lu.singular()) return bordered_fallback(a, b, c, d, f, g);

  // Block elimination: x = A^{-1}(f - y b) with y from the scalar Schur
  // complement d - c^T A^{-1} b.
  auto ainv_b = lu.solve(b);
  auto ainv_f = lu.solve(f);
  double cab = std::inner_product(c.begin(), c.end(), ainv_b.begin(), 0.0);
  double schur = d - cab;
  double cf = std::inner_product(c.begin(), c.end(), ainv_f.begin(), 0.0);
  double scale = std::abs(d) + std::abs(cab);
  if (std::abs(schur) <= 1e-14 * scale) return bordered_fallback(a, b, c, d, f, g);

  BorderedResult r;
  r.y = (g - cf) / schur;
  r.x.resize(n);
  for (int i = 0; i < n; ++i) r.x[i] = ainv_f[i] - r.y * ainv_b[i];

  // One pass of iterative refinement; block elimination loses accuracy when A
  // is poorly conditioned (continuation near folds).
  std::vector<double> res = a.multiply(r.x);
  double res_y = g - std::inner_product(c.begin(), c.end(), r.x.begin(), 0.0) - d * r.y;
  for (int i = 0; i < n; ++i) res[i] = f[i] - res[i] - r.y * b[i];
  auto dx_f = lu.solve(res);
  double dy = (res_y - std::inner_product(c.begin(), c.end(), dx_f.begin(), 0.0)) / schur;
  for (int i = 0; i < n; ++i) r.x[i] += dx_f[i] - dy * ainv_b[i];
  r.y += dy;
  return r;
}

// --- generalized symmetric eigenproblem ------------------------------------

namespace {

// Implicit-shift QL for a symmetric tridiagonal matrix; eigenvalues in d,
// eigenvectors accumulated in the m-by-m row-major matrix z (pass identity).
void tridiag_ql(std::vector<double>& d, std::vector<double>& e,
                std::vector<double>& z) {
  const int m = static_cast<int>(d.size());
  if (m == 1) return;
  e.push_back(0.0);
  for (int l = 0; l < m; ++l) {
    int iter = 0;
    int seg;
    do {
      for (seg = l; seg < m - 1; ++seg) {
        double dd = std::abs(d[seg]) + std::abs(d[seg + 1]);
        if (std::abs(e[seg]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (seg != l) {
        if (++iter > 64) throw Error("eigs: tridiagonal QL failed to converge");
        double gshift = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(gshift, 1.0);
        gshift = d[seg] - d[l] + e[l] / (gshift + std::copysign(r, gshift));
        double s = 1.0, cth = 1.0, p = 0.0;
        bool broke = false;
        for (int i = seg - 1; i >= l; --i) {
          double fr = s * e[i], bb = cth * e[i];
          r = std::hypot(fr, gshift);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[seg] = 0.0;
            broke = true;
            break;
          }
          s = fr / r;
          cth = gshift / r;
          gshift = d[i + 1] - p;
          r = (d[i] - gshift) * s + 2.0 * cth * bb;
          p = s * r;
          d[i + 1] = gshift + p;
          gshift = cth * r - bb;
          for (int k = 0; k < m; ++k) {
            double fk = z[static_cast<std::size_t>(k) * m + i + 1];
            z[static_cast<std::size_t>(k) * m + i + 1] =
                s * z[static_cast<std::size_t>(k) * m + i] + cth * fk;
            z[static_cast<std::size_t>(k) * m + i] =
                cth * z[static_cast<std::size_t>(k) * m + i] - s * fk;
          }
        }
        // Only a mid-chase breakdown rescans; r underflowing to zero on the
        // last rotation still needs the tail update or the sweep is left
        // half-applied and the matrix is no longer similar to the input.
        if (broke) continue;
        d[l] -= p;
        e[l] = gshift;
        e[seg] = 0.0;
      }
    } while (seg != l);
  }
  e.pop_back();
}

double pseudo_random(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return static_cast<double>(k % 1000003ULL) / 1000003.0 - 0.5;
}

struct LanczosRun {
  std::vector<double> valid_ritz;  // ascending eigenvalues
  std::vector<std::vector<double>> vectors;
};

}  // namespace

int EigenResult::n_negative(double tol) const {
  int c = 0;
  for (double v : values)
    if (v < -tol) ++c;
  return c;
}

EigenResult eigs_generalized(const SparseMatrix& a, const SparseMatrix& m, int k,
                             const EigenOptions& opts) {
  const int n = a.n();
  if (m.n() != n) throw Error("eigs: dimension mismatch");
  if (k <= 0 || k > n) throw Error("eigs: need 0 < k <= n");
  if (!a.is_symmetric(1e-10)) throw Error("eigs: A is not symmetric");
  if (!m.is_symmetric(1e-10)) throw Error("eigs: M is not symmetric");

  // Shift: either the caller's hint or a safe bound below the pencil spectrum
  // refined by a short pilot run.
  double sigma;
  bool pilot = false;
  if (opts.shift) {
    sigma = *opts.shift;
  } else {
    double g_a = std::numeric_limits<double>::max();
    for (int i = 0; i < n; ++i) {
      double diag = 0.0, off = 0.0;
      for (int kk = a.row_ptr()[i]; kk < a.row_ptr()[i + 1]; ++kk) {
        if (a.col_idx()[kk] == i)
          diag = a.values()[kk];
        else
          off += std::abs(a.values()[kk]);
      }
      g_a = std::min(g_a, diag - off);
    }
    if (g_a >= 0) {
      sigma = g_a - 1.0;
    } else {
      // Divide by a mass lower bound so the shift stays below the pencil
      // spectrum; estimated by inverse iteration on M.
      LuFactorization lum(m);
      std::vector<double> v(n);
      for (int i = 0; i < n; ++i) v[i] = pseudo_random(i + 17);
      double lam_min_m = 1.0;
      for (int it = 0; it < 12; ++it) {
        auto w = lum.solve(v);
        double nb = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        for (auto& x : w) x /= nb;
        auto mw = m.multiply(w);
        lam_min_m = std::inner_product(w.begin(), w.end(), mw.begin(), 0.0);
        v = std::move(w);
      }
      sigma = g_a / (0.5 * std::max(lam_min_m, 1e-300)) - 1.0;
      pilot = true;
    }
  }

  auto run_lanczos = [&](double shift, int want, int cap,
                         std::uint64_t salt) -> LanczosRun {
    SparseMatrix shifted = a.add_scaled(m, -shift);
    LuFactorization lu(shifted);
    if (lu.singular())
      throw SingularMatrixError("eigs: shift hits an eigenvalue of the pencil");

    std::vector<std::vector<double>> basis;
    std::vector<double> alpha, beta;  // beta[j] couples v_j and v_{j+1}
    // Two-pass classical Gram-Schmidt against the whole basis in the M-inner
    // product (full reorthogonalization doubles as deflation of converged
    // directions); returns the M-norm of the remainder.
    auto m_orthonormalize = [&](std::vector<double>& w) -> double {
      for (int pass = 0; pass < 2; ++pass) {
        auto mw = m.multiply(w);
        for (const auto& vb : basis) {
          double c = std::inner_product(vb.begin(), vb.end(), mw.begin(), 0.0);
          if (c != 0.0)
            for (int i = 0; i < n; ++i) w[i] -= c * vb[i];
        }
      }
      auto mw = m.multiply(w);
      return std::sqrt(
          std::max(0.0, std::inner_product(w.begin(), w.end(), mw.begin(), 0.0)));
    };

    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
      v[i] = pseudo_random(i + 1234567 + salt * 0x9E3779B97F4A7C15ULL);
    {
      auto mv = m.multiply(v);
      double nb = std::sqrt(std::inner_product(v.begin(), v.end(), mv.begin(), 0.0));
      for (auto& x : v) x /= nb;
    }

    LanczosRun out;
    int restarts = 0;
    while (static_cast<int>(basis.size()) < cap) {
      basis.push_back(v);
      auto mv = m.multiply(v);
      auto w = lu.solve(mv);
      double al = std::inner_product(w.begin(), w.end(), mv.begin(), 0.0);
      alpha.push_back(al);
      double bt = m_orthonormalize(w);
      double breakdown_scale = std::abs(al) + (beta.empty() ? 0.0 : std::abs(beta.back()));
      if (bt <= 1e-13 * std::max(breakdown_scale, 1e-30)) {
        // Invariant subspace. Keep deflating with fresh directions until the
        // subspace cap: stopping as soon as `want` vectors exist can drop the
        // second member of a multiple eigenvalue that the start vector never
        // reached, silently miscounting multiplicities.
        if (static_cast<int>(basis.size()) >= cap || restarts > 32 ||
            static_cast<int>(basis.size()) >= n)
          break;
        ++restarts;
        std::vector<double> fresh(n);
        for (int i = 0; i < n; ++i)
          fresh[i] = pseudo_random(i * 31 + 7777 * restarts +
                                   salt * 0x9E3779B97F4A7C15ULL);
        double nb = m_orthonormalize(fresh);
        if (nb <= 1e-13) break;
        for (auto& x : fresh) x /= nb;
        v = std::move(fresh);
        beta.push_back(0.0);
        continue;
      }
      for (auto& x : w) x /= bt;
      v = std::move(w);
      beta.push_back(bt);
    }
    int msz = static_cast<int>(basis.size());
    if (msz == 0) throw Error("eigs: Lanczos failed to build a basis");
    beta.resize(msz - 1);

    std::vector<double> d = alpha, e = beta;
    std::vector<double> z(static_cast<std::size_t>(msz) * msz, 0.0);
    for (int i = 0; i < msz; ++i) z[static_cast<std::size_t>(i) * msz + i] = 1.0;
    tridiag_ql(d, e, z);

    // Ritz values theta (of the shift-inverted operator) map to lambda =
    // shift + 1/theta; theta <= 0 signals the shift was not below the
    // spectrum and is rejected by the caller.
    std::vector<int> idx(msz);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return d[x] > d[y]; });
    int take = std::min(want, msz);
    for (int t = 0; t < take; ++t) {
      double theta = d[idx[t]];
      double lam = theta != 0.0 ? shift + 1.0 / theta
                                : std::numeric_limits<double>::infinity();
      std::vector<double> psi(n, 0.0);
      for (int jb = 0; jb < msz; ++jb) {
        double w = z[static_cast<std::size_t>(jb) * msz + idx[t]];
        const auto& vb = basis[jb];
        for (int i = 0; i < n; ++i) psi[i] += w * vb[i];
      }
      out.valid_ritz.push_back(lam);
      out.vectors.push_back(std::move(psi));
    }
    // ascending in lambda == descending in theta, which idx already is
    return out;
  };

  int cap = opts.max_subspace > 0 ? std::min(opts.max_subspace, n)
                                  : std::min(n, std::max(2 * k + 60, 100));

  if (pilot) {
    // Tighten the crude shift with a small pilot run before the real one.
    LanczosRun rough = run_lanczos(sigma, std::min(k, 8), std::min(n, 40), 0);
    if (!rough.valid_ritz.empty()) {
      double lmin = rough.valid_ritz.front();
      double spread = std::abs(rough.valid_ritz.back() - lmin);
      double margin = std::max({0.05 * spread, 1e-6 * std::abs(lmin), 1e-9});
      sigma = lmin - margin - 1.0e-3;
    }
  }

  auto finalize = [&](const LanczosRun& run) -> EigenResult {
    EigenResult res;
    int got = static_cast<int>(run.valid_ritz.size());
    res.values.assign(run.valid_ritz.begin(), run.valid_ritz.begin() + std::min(k, got));
    res.vectors.assign(run.vectors.begin(), run.vectors.begin() + std::min(k, got));
    res.converged.assign(res.values.size(), 0);
    res.all_converged = static_cast<int>(res.values.size()) == k;
    for (std::size_t i = 0; i < res.values.size(); ++i) {
      auto ap = a.multiply(res.vectors[i]);
      auto mp = m.multiply(res.vectors[i]);
      double rnorm = 0.0, pnorm = 0.0;
      for (int j = 0; j < n; ++j) {
        double r = ap[j] - res.values[i] * mp[j];
        rnorm += r * r;
        pnorm += res.vectors[i][j] * res.vectors[i][j];
      }
      res.converged[i] = std::sqrt(rnorm) <= opts.residual_tol * std::sqrt(pnorm) ? 1 : 0;
      if (!res.converged[i]) res.all_converged = false;
    }
    return res;
  };

  // Retry with a fresh start vector and a larger subspace if any wanted pair
  // misses the residual tolerance; an unlucky start direction can stall on
  // nearly invariant subspaces.
  EigenResult res;
  for (std::uint64_t salt = 0; salt < 3; ++salt) {
    LanczosRun run = run_lanczos(sigma, k, cap, salt);
    for (int attempt = 0; attempt < 6; ++attempt) {
      // A Ritz value at or below the shift means the shift was not strictly
      // below the spectrum; deepen and retry.
      double worst = std::numeric_limits<double>::max();
      bool bad = false;
      for (double l : run.valid_ritz) {
        if (!std::isfinite(l) || l <= sigma) bad = true;
        worst = std::min(worst, l);
      }
      if (!bad) break;
      sigma = std::min(worst, sigma) - std::max(1.0, std::abs(sigma - worst)) - 1.0;
      run = run_lanczos(sigma, k, cap, salt);
    }
    res = finalize(run);
    if (res.all_converged) break;
    cap = std::min(n, cap + cap / 2);
  }
  return res;
}

}  // namespace elcont
