#include "elcont/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <utility>

#include "elcont/minimax.hpp"
#include "elcont/solution_io.hpp"

namespace elcont {

namespace {

std::string g15(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

double parse_num(const std::string& field, const char* what) {
  const char* s = field.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw Error(std::string(what) + ": expected a number, got '" + field + "'");
  return v;
}

long parse_long(const std::string& field, const char* what) {
  const char* s = field.c_str();
  char* end = nullptr;
  long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0')
    throw Error(std::string(what) + ": expected an integer, got '" + field + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

/// Runs fn(0..n-1) on a bounded pool; results must be written to
/// index-addressed slots so the output order is deterministic.
void parallel_for_ordered(std::size_t n, int jobs,
                          const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  int width = std::min<int>(jobs, static_cast<int>(n));
  pool.reserve(width);
  for (int t = 0; t < width; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

void ensure_parent_dir(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path() && !p.parent_path().empty())
    std::filesystem::create_directories(p.parent_path());
}

double resolve_xi(const ContSettings& s, int np) {
  if (s.xi > 0.0) return s.xi;
  return np > 1 ? 1.0 / np : 0.5;
}

/// Node permutations induced by the axis flips and the diagonal swap, for
/// meshes whose node set is closed under them (identity otherwise).
std::vector<std::vector<int>> symmetry_permutations(const Mesh& mesh) {
  auto key = [](Point2 p) {
    return std::pair<long long, long long>(std::llround(p.x1 * 1e9),
                                           std::llround(p.x2 * 1e9));
  };
  std::map<std::pair<long long, long long>, int> index;
  for (int i = 0; i < mesh.np(); ++i) index[key(mesh.points[i])] = i;
  std::vector<std::vector<int>> perms;
  for (int swap_xy = 0; swap_xy < 2; ++swap_xy)
    for (double sx : {1.0, -1.0})
      for (double sy : {1.0, -1.0}) {
        std::vector<int> perm(mesh.np());
        bool ok = true;
        for (int i = 0; i < mesh.np() && ok; ++i) {
          Point2 p = mesh.points[i];
          Point2 q = swap_xy ? Point2{sy * p.x2, sx * p.x1}
                             : Point2{sx * p.x1, sy * p.x2};
          auto it = index.find(key(q));
          if (it == index.end()) ok = false;
          else perm[i] = it->second;
        }
        if (ok) perms.push_back(std::move(perm));
      }
  if (perms.empty()) {
    std::vector<int> id(mesh.np());
    for (int i = 0; i < mesh.np(); ++i) id[i] = i;
    perms.push_back(std::move(id));
  }
  return perms;
}

/// min over group elements g and signs of ||a - sign * b∘g||_inf.
double orbit_mismatch(const std::vector<std::vector<int>>& perms,
                      std::span<const double> a, std::span<const double> b) {
  double best = 1e300;
  for (const auto& perm : perms)
    for (double sign : {1.0, -1.0}) {
      double d = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::fabs(a[i] - sign * b[perm[i]]));
      best = std::min(best, d);
    }
  return best;
}

struct EventBracket {
  Mesh mesh;
  BranchPoint a, b;
  EventRow ev;
  int n_events = 0;
};

/// Reconstructs the bracketing pair of a saved event: the two snapshot files
/// give (u, mu) on a common mesh; the secant orients a freshly computed curve
/// tangent at the earlier point and the stability counts are recomputed.
EventBracket load_event_bracket(const RunConfig& cfg, const EllipticProblem& prob,
                                const std::string& prefix, int event_index) {
  std::ifstream ef(prefix + ".events");
  if (!ef) throw ConfigError("findbif: cannot open '" + prefix + ".events'");
  std::vector<EventRow> events = read_events_csv(ef);
  if (event_index < 1 || event_index > static_cast<int>(events.size()))
    throw ConfigError("findbif: event index " + std::to_string(event_index) +
                      " out of range; the branch has " + std::to_string(events.size()) +
                      " events");
  EventBracket eb;
  eb.ev = events[event_index - 1];
  eb.n_events = static_cast<int>(events.size());
  Solution sb, sa;
  const std::string stem = prefix + "_ev" + std::to_string(event_index);
  try {
    sb = load_solution(stem + ".sol");
    sa = load_solution(stem + "_pre.sol");
  } catch (const Error& e) {
    throw ConfigError(std::string("findbif: cannot load event snapshots: ") + e.what());
  }
  bool same_mesh =
      sa.mesh.np() == sb.mesh.np() && sa.mesh.triangles == sb.mesh.triangles;
  for (int i = 0; same_mesh && i < sa.mesh.np(); ++i)
    same_mesh = sa.mesh.points[i].x1 == sb.mesh.points[i].x1 &&
                sa.mesh.points[i].x2 == sb.mesh.points[i].x2;
  if (!same_mesh)
    throw Error("findbif: the event brackets a mesh adaptation; "
                "rerun the branch with amod = 0");
  eb.mesh = sb.mesh;

  FemContinuation sys(eb.mesh, prob);
  const FemSystem& fem = sys.fem();
  const int nf = sys.n();
  const double xi = resolve_xi(cfg.cont, eb.mesh.np());
  std::vector<double> ua = fem.reduce(sa.values), ub = fem.reduce(sb.values);
  std::vector<double> secant(nf + 1);
  for (int i = 0; i < nf; ++i) secant[i] = ub[i] - ua[i];
  secant[nf] = sb.mu - sa.mu;
  SparseMatrix jac = sys.jacobian(ua, sa.mu);
  std::vector<double> jmu = sys.residual_mu(ua, sa.mu);
  std::vector<double> t = tangent(jac, jmu, secant, xi);
  const double ds_ab = xi_inner(xi, t, secant);
  if (!(ds_ab > 0.0)) throw Error("findbif: event snapshots are not ordered");

  const int neig = std::min(cfg.cont.neig, nf);
  eb.a.u = sa.values;
  eb.a.mu = sa.mu;
  eb.a.s = 0.0;
  std::vector<double> tu(t.begin(), t.end() - 1);
  eb.a.tangent = fem.expand(tu);
  eb.a.tangent.push_back(t.back());
  eb.a.n_neg = morse_index(prob, eb.mesh, sa.values, sa.mu, neig);
  eb.a.np = eb.mesh.np();
  eb.b.u = sb.values;
  eb.b.mu = sb.mu;
  eb.b.s = ds_ab;
  eb.b.tangent = eb.a.tangent;
  eb.b.n_neg = morse_index(prob, eb.mesh, sb.values, sb.mu, neig);
  eb.b.np = eb.mesh.np();
  return eb;
}

}  // namespace

std::vector<BranchRow> read_branch_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("branch csv: empty stream");
  if (line == "idx,s,mu,norm_inf,norm_l2,n_neg,det_sign,type,newton_iters,np\r")
    line.pop_back();
  if (line != "idx,s,mu,norm_inf,norm_l2,n_neg,det_sign,type,newton_iters,np")
    throw Error("branch csv: unexpected header '" + line + "'");
  std::vector<BranchRow> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 10) throw Error("branch csv: expected 10 fields, got row '" + line + "'");
    BranchRow r;
    r.idx = static_cast<int>(parse_long(f[0], "branch csv"));
    r.s = parse_num(f[1], "branch csv");
    r.mu = parse_num(f[2], "branch csv");
    r.norm_inf = parse_num(f[3], "branch csv");
    r.norm_l2 = parse_num(f[4], "branch csv");
    r.n_neg = static_cast<int>(parse_long(f[5], "branch csv"));
    r.det_sign = static_cast<int>(parse_long(f[6], "branch csv"));
    r.type = f[7];
    r.newton_iters = static_cast<int>(parse_long(f[8], "branch csv"));
    r.np = static_cast<int>(parse_long(f[9], "branch csv"));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<EventRow> read_events_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("events csv: empty stream");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "idx,type,mu") throw Error("events csv: unexpected header '" + line + "'");
  std::vector<EventRow> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 3) throw Error("events csv: expected 3 fields, got row '" + line + "'");
    EventRow r;
    r.idx = static_cast<int>(parse_long(f[0], "events csv"));
    r.type = f[1];
    r.mu = parse_num(f[2], "events csv");
    rows.push_back(std::move(r));
  }
  return rows;
}

int cmd_mesh(const RunConfig& cfg, double hmax, const std::string& out_path,
             std::ostream& out, std::ostream& err) {
  (void)err;
  const double h = hmax > 0.0 ? hmax : cfg.hmax;
  const PolygonDomain dom = config_domain(cfg);
  const Mesh mesh = triangulate(dom, h);
  ensure_parent_dir(out_path);
  save_mesh(out_path, mesh);
  out << "mesh: domain " << dom.name << ", hmax " << g15(h) << ": np " << mesh.np()
      << ", nt " << mesh.nt() << " -> " << out_path << "\n";
  return kExitOk;
}

int cmd_minimax(const RunConfig& cfg, double mu, const std::string& out_dir,
                std::ostream& out, std::ostream& err) {
  EllipticProblem prob = build_problem(cfg);
  const Mesh mesh = triangulate(prob.domain, cfg.hmax);

  std::vector<SeedSpec> seeds;
  if (!cfg.seeds.empty()) {
    seeds = cfg.seeds;
  } else if (cfg.problem_id == "caginalp") {
    // no seed library; hand find_multiple one seed so it can state its refusal
    seeds.push_back(parse_seed("bump(0, 0, +, 0.1)"));
  } else {
    seeds = default_seeds(cfg.problem_id);
  }

  std::vector<FoundSolution> sols;
  try {
    MinimaxSettings ms = cfg.minimax;
    sols = find_multiple(prob, mesh, mu, seeds, ms);
  } catch (const Error& e) {
    err << "minimax: " << e.what() << "\n";
    return kExitNumerical;
  }
  if (sols.empty()) {
    err << "minimax: no seed converged\n";
    return kExitNumerical;
  }

  std::filesystem::create_directories(out_dir.empty() ? "." : out_dir);
  out << "minimax: problem " << cfg.problem_id << ", mu " << g15(mu) << ", np "
      << mesh.np() << "\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-4s %-12s %-4s %-16s %-16s %s\n", "k", "seed", "MI",
                "norm_inf", "J", "file");
  out << buf;
  for (const FoundSolution& fs : sols) {
    const std::string name =
        "start_" + std::to_string(fs.seed_index) + "_MI" + std::to_string(fs.morse_index) +
        ".sol";
    const std::string path =
        (std::filesystem::path(out_dir.empty() ? "." : out_dir) / name).string();
    save_solution(path, mesh, fs.mu, fs.u);
    const std::string& label =
        fs.seed_index < static_cast<int>(seeds.size()) ? seeds[fs.seed_index].label : "?";
    std::snprintf(buf, sizeof(buf), "%-4d %-12s %-4d %-16.9g %-16.9g %s\n", fs.seed_index,
                  label.c_str(), fs.morse_index, fs.norm_inf, fs.j_value, name.c_str());
    out << buf;
  }
  out << "minimax: " << sols.size() << " of " << seeds.size() << " seeds converged\n";
  return kExitOk;
}

int cmd_cont(const RunConfig& cfg, const ContArgs& args, std::ostream& out,
             std::ostream& err) {
  EllipticProblem prob = build_problem(cfg);

  Mesh mesh;
  std::vector<double> u0;
  double mu0 = 0.0;
  std::string source;
  if (args.start_path.empty()) {
    mesh = triangulate(prob.domain, cfg.hmax);
    u0.assign(mesh.np(), 0.0);
    mu0 = args.trivial_mu;
    source = "trivial start";
  } else {
    Solution s;
    try {
      s = load_solution(args.start_path);
    } catch (const Error& e) {
      throw ConfigError(std::string("cont: cannot read start file: ") + e.what());
    }
    mesh = std::move(s.mesh);
    u0 = std::move(s.values);
    mu0 = s.mu;
    source = "'" + args.start_path + "'";
  }

  // residual gate: accept below tol, re-polish below 100*tol, reject otherwise
  FemSystem fem(mesh, prob);
  std::vector<double> uf = fem.reduce(u0);
  const double rn = norm_inf(fem.residual_free(uf, mu0));
  if (rn > cfg.cont.tol) {
    if (rn > 100.0 * cfg.cont.tol)
      throw Error("cont: start " + source + " rejected: residual " + g15(rn) +
                  " exceeds 100 * tol (tol " + g15(cfg.cont.tol) + ")");
    NewtonResult nr = newton_solve(fem, uf, mu0, cfg.cont.tol, 30);
    if (!nr.converged)
      throw Error("cont: start " + source + " re-polish did not converge (residual " +
                  g15(nr.residual_norm) + ")");
    err << "cont: start residual " << g15(rn) << " above tol; re-polished to "
        << g15(nr.residual_norm) << " in " << nr.iters << " iterations\n";
    u0 = fem.expand(nr.u);
  }

  ContSettings rs = cfg.cont;
  if (args.direction != 0) rs.direction = args.direction;

  ensure_parent_dir(args.out_prefix);
  struct SnapState {
    int idx = -1;
    int ev_count = 0;
    std::vector<double> prev_u;
    double prev_mu = 0.0;
    Mesh prev_mesh;
  } snap;
  const std::string prefix = args.out_prefix;
  const int snap_every = cfg.snap_every;
  ContObserver observer = [&](const BranchPoint& p, std::span<const BranchEvent> evs,
                              const Mesh& m) {
    ++snap.idx;
    for (std::size_t k = 0; k < evs.size(); ++k) {
      ++snap.ev_count;
      const std::string stem = prefix + "_ev" + std::to_string(snap.ev_count);
      save_solution(stem + ".sol", m, p.mu, p.u);
      if (!snap.prev_u.empty())
        save_solution(stem + "_pre.sol", snap.prev_mesh, snap.prev_mu, snap.prev_u);
    }
    if (snap_every > 0 && snap.idx % snap_every == 0)
      save_solution(prefix + "_p" + std::to_string(snap.idx) + ".sol", m, p.mu, p.u);
    snap.prev_u = p.u;
    snap.prev_mu = p.mu;
    snap.prev_mesh = m;
  };

  Branch br = continue_branch(prob, mesh, u0, mu0, rs, observer);

  {
    std::ofstream csv(prefix + ".csv");
    if (!csv) throw Error("cont: cannot write '" + prefix + ".csv'");
    write_branch_csv(csv, br);
    std::ofstream evf(prefix + ".events");
    if (!evf) throw Error("cont: cannot write '" + prefix + ".events'");
    write_events_csv(evf, br);
  }

  const BranchPoint& last = br.points.back();
  out << "cont: " << source << ", mu0 " << g15(mu0) << ", direction "
      << (rs.direction > 0 ? "+1" : "-1") << ": " << br.points.size() << " points, "
      << br.events.size() << " events -> " << prefix << ".csv\n";
  for (std::size_t j = 0; j < br.events.size(); ++j)
    out << "  event " << j + 1 << ": " << to_string(br.events[j].type) << " at mu "
        << g15(br.events[j].mu) << " (point " << br.events[j].idx << ")\n";
  out << "cont: final mu " << g15(last.mu) << ", norm_inf " << g15(last.norm_inf)
      << ", n_neg " << last.n_neg << "\n";
  return kExitOk;
}

int cmd_findbif(const RunConfig& cfg, const std::string& branch_prefix, int event_index,
                const std::string& out_path, std::ostream& out, std::ostream& err) {
  (void)err;
  EllipticProblem prob = build_problem(cfg);
  EventBracket eb = load_event_bracket(cfg, prob, branch_prefix, event_index);
  BranchPoint located = findbif(prob, eb.mesh, eb.a, eb.b, cfg.cont);
  ensure_parent_dir(out_path);
  save_solution(out_path, eb.mesh, located.mu, located.u);
  out << "findbif: event " << event_index << " (" << eb.ev.type
      << "): located mu = " << g15(located.mu) << " between n_neg " << eb.a.n_neg
      << " and " << eb.b.n_neg << " -> " << out_path << "\n";
  return kExitOk;
}

int cmd_switch(const RunConfig& cfg, const std::string& branch_prefix, int event_index,
               const std::string& out_prefix, std::ostream& out, std::ostream& err) {
  (void)err;
  EllipticProblem prob = build_problem(cfg);
  EventBracket eb = load_event_bracket(cfg, prob, branch_prefix, event_index);
  BranchPoint located = findbif(prob, eb.mesh, eb.a, eb.b, cfg.cont);
  std::vector<StartSolution> starts =
      switch_branch(prob, eb.mesh, located, cfg.cont.delta_sw, cfg.cont);
  if (starts.empty())
    throw Error("switch: no predictor converged off mu = " + g15(located.mu));
  ensure_parent_dir(out_prefix);
  const char* suffix[2] = {"_plus.sol", "_minus.sol"};
  out << "switch: event " << event_index << ": located mu = " << g15(located.mu) << "\n";
  for (std::size_t i = 0; i < starts.size() && i < 2; ++i) {
    const std::string path = out_prefix + suffix[i];
    save_solution(path, eb.mesh, starts[i].mu, starts[i].u);
    out << "  start " << (i == 0 ? "+" : "-") << ": mu " << g15(starts[i].mu)
        << ", norm_inf " << g15(norm_inf(starts[i].u)) << " -> " << path << "\n";
  }
  return kExitOk;
}

int cmd_poisson(const RunConfig& cfg, double f_const, const std::string& out_path,
                std::ostream& out, std::ostream& err) {
  (void)err;
  const PolygonDomain dom = config_domain(cfg);
  const Mesh mesh = triangulate(dom, cfg.hmax);
  const std::vector<double> theta = poisson_presolve(mesh, f_const);
  ensure_parent_dir(out_path);
  save_solution(out_path, mesh, 0.0, theta);
  double tmax = 0.0;
  for (double v : theta) tmax = std::max(tmax, std::fabs(v));
  out << "poisson: domain " << dom.name << ", f " << g15(f_const) << ", np " << mesh.np()
      << ": max |theta| " << g15(tmax) << " -> " << out_path << "\n";
  return kExitOk;
}

int cmd_crossvalidate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.problem_id != "lef")
    throw ConfigError("crossvalidate: requires the cubic square problem (problem = lef)");
  const EllipticProblem prob = build_problem(cfg);
  const Mesh mesh = triangulate(prob.domain, cfg.hmax);
  const double pi = 3.14159265358979323846;
  const double analytic[4] = {2 * pi * pi, 5 * pi * pi, 8 * pi * pi, 10 * pi * pi};
  bool pass = true;

  // --- strategy (I): multi-solution search at mu = 0, continue to u == 0 ----
  const std::vector<SeedSpec> seeds = config_seeds(cfg);
  const std::vector<FoundSolution> sols = find_multiple(prob, mesh, 0.0, seeds, cfg.minimax);
  if (sols.empty()) {
    err << "crossvalidate: the multi-solution search found nothing\n";
    return kExitNumerical;
  }
  out << "crossvalidate: np " << mesh.np() << ", " << sols.size()
      << " starting solutions at mu = 0\n";

  ContSettings rs1 = cfg.cont;
  rs1.direction = +1;
  rs1.stop_norm_below = 0.05;
  rs1.mu_max = 120.0;
  rs1.mu_min = -5.0;
  std::vector<Branch> branches(sols.size());
  parallel_for_ordered(sols.size(), cfg.jobs, [&](std::size_t i) {
    branches[i] = continue_branch(prob, mesh, sols[i].u, 0.0, rs1);
  });
  for (std::size_t i = 0; i < sols.size(); ++i) {
    const BranchPoint& end = branches[i].points.back();
    const bool on_trivial = end.norm_inf <= rs1.stop_norm_below * (1.0 + 1e-9);
    // The final corrector step snaps onto u == 0 and can drift along the
    // trivial branch before the stop fires; read the connection parameter off
    // the pitchfork parabola norm^2 ~ C (mu* - mu) through the last two
    // nontrivial points instead of the raw endpoint.
    double mu_end = end.mu;
    int q = static_cast<int>(branches[i].points.size()) - 1;
    while (q >= 0 && branches[i].points[q].norm_inf <= rs1.stop_norm_below) --q;
    if (q >= 1) {
      const BranchPoint& p1 = branches[i].points[q - 1];
      const BranchPoint& p2 = branches[i].points[q];
      const double n1 = p1.norm_inf * p1.norm_inf;
      const double n2 = p2.norm_inf * p2.norm_inf;
      if (std::fabs(n1 - n2) > 1e-300) mu_end = (n1 * p2.mu - n2 * p1.mu) / (n1 - n2);
    }
    int kbest = 0;
    double rbest = 1e300;
    for (int k = 0; k < 4; ++k) {
      double r = std::fabs(mu_end - analytic[k]) / analytic[k];
      if (r < rbest) {
        rbest = r;
        kbest = k;
      }
    }
    const bool ok = on_trivial && rbest <= 0.03;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "  (I) branch %zu (%s, MI %d): reaches u = 0 at mu %.6f -> crossing %d "
                  "(analytic %.4f, offset %.2f%%) %s\n",
                  i, seeds[sols[i].seed_index].label.c_str(), sols[i].morse_index, mu_end,
                  kbest + 1, analytic[kbest], 100.0 * rbest, ok ? "ok" : "FAIL");
    out << buf;
    if (!ok) pass = false;
  }

  // --- strategy (II): trivial branch, locate, switch, continue back ---------
  ContSettings rs2 = cfg.cont;
  rs2.direction = +1;
  rs2.mu_min = -5.0;
  rs2.mu_max = 110.0;
  std::vector<double> zeros(mesh.np(), 0.0);
  Branch triv = continue_branch(prob, mesh, zeros, 0.0, rs2);
  out << "  (II) trivial branch: " << triv.points.size() << " points, "
      << triv.events.size() << " events\n";

  struct Recovered {
    std::vector<double> u;
    int crossing = 0;
    char sign = '+';
  };
  std::vector<Recovered> recovered;
  ContSettings rs_sw = cfg.cont;
  rs_sw.direction = -1;  // the nontrivial branches live below each crossing
  int switched = 0;
  for (std::size_t j = 0; j < triv.events.size(); ++j) {
    const BranchEvent& ev = triv.events[j];
    if (ev.idx < 1 || ev.idx >= static_cast<int>(triv.points.size())) continue;
    const BranchPoint& a = triv.points[ev.idx - 1];
    const BranchPoint& b = triv.points[ev.idx];
    const bool silent = a.det_sign == b.det_sign;
    BranchPoint located;
    try {
      located = findbif(prob, mesh, a, b, cfg.cont);
    } catch (const Error& e) {
      out << "  (II) event " << j + 1 << ": findbif failed: " << e.what() << "\n";
      pass = false;
      continue;
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "  (II) event %zu: located mu* = %.6f (n_neg %d -> %d)%s\n", j + 1,
                  located.mu, a.n_neg, b.n_neg,
                  silent ? " [no det-sign flip: found only via findbif]" : "");
    out << buf;
    std::vector<StartSolution> starts;
    try {
      starts = switch_branch(prob, mesh, located, cfg.cont.delta_sw, rs_sw);
      ++switched;
    } catch (const Error& e) {
      out << "  (II) event " << j + 1 << ": switching refused: " << e.what() << "\n";
      continue;  // expected at the symmetry-degenerate double crossings
    }
    for (std::size_t si = 0; si < starts.size(); ++si) {
      ContSettings rsb = cfg.cont;
      rsb.direction = -1;
      rsb.mu_min = -1.0;
      rsb.mu_max = 115.0;
      Branch back = continue_branch(prob, mesh, starts[si].u, starts[si].mu, rsb);
      const BranchPoint& end = back.points.back();
      if (end.mu > 0.5) {
        out << "  (II) event " << j + 1 << " predictor " << (si == 0 ? '+' : '-')
            << ": continuation stalled at mu " << g15(end.mu) << " FAIL\n";
        pass = false;
        continue;
      }
      FemContinuation sys(mesh, prob);
      CorrectResult nr = newton_fixed_mu(sys, sys.fem().reduce(end.u), 0.0, cfg.cont.tol, 30);
      if (!nr.converged) {
        out << "  (II) event " << j + 1 << " predictor " << (si == 0 ? '+' : '-')
            << ": polish at mu = 0 failed FAIL\n";
        pass = false;
        continue;
      }
      recovered.push_back({sys.fem().expand(nr.u), static_cast<int>(j + 1),
                           si == 0 ? '+' : '-'});
    }
  }
  if (recovered.empty()) {
    out << "  (II) recovered no mu = 0 solutions\n";
    pass = false;
  }

  // --- pair (II) against (I) modulo the square's symmetries and sign --------
  const std::vector<std::vector<int>> perms = symmetry_permutations(mesh);
  double worst = 0.0;
  for (const Recovered& rec : recovered) {
    double best = 1e300;
    std::size_t kbest = 0;
    for (std::size_t k = 0; k < sols.size(); ++k) {
      double d = orbit_mismatch(perms, rec.u, sols[k].u);
      if (d < best) {
        best = d;
        kbest = k;
      }
    }
    const double scale = std::max(norm_inf(rec.u), sols[kbest].norm_inf);
    const double rel = scale > 0.0 ? best / scale : best;
    worst = std::max(worst, rel);
    const bool ok = rel <= 0.02;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "  pair: (II) crossing %d predictor %c <-> (I) %s, mismatch %.4g%% %s\n",
                  rec.crossing, rec.sign, seeds[sols[kbest].seed_index].label.c_str(),
                  100.0 * rel, ok ? "ok" : "FAIL");
    out << buf;
    if (!ok) pass = false;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "  max mismatch %.4g%% over %zu pairs\n", 100.0 * worst,
                recovered.size());
  out << buf;
  out << "CROSSVALIDATE: " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitNumerical;
}

namespace {

struct BenchOutcome {
  bool ok = false;
  double fold_mu = 0.0;
  int folds = 0;
  int points = 0;
  int np = 0, nt = 0;
  double tau = -1.0;
  std::string note;
};

/// One forced-problem branch: first-seed search at mu = 0, then continuation
/// in both directions to the mu cutoff. Timed without mesh construction or
/// file I/O.
BenchOutcome bench_branch(const RunConfig& cfg, double h, const ContSettings& rs_in) {
  BenchOutcome r;
  try {
    const EllipticProblem prob = build_problem(cfg);
    const Mesh mesh = triangulate(prob.domain, h);
    r.np = mesh.np();
    r.nt = mesh.nt();
    std::vector<SeedSpec> seeds = cfg.seeds;
    if (seeds.empty()) seeds = default_seeds(cfg.problem_id);
    seeds.resize(1);

    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<FoundSolution> sols =
        find_multiple(prob, mesh, 0.0, seeds, cfg.minimax);
    if (sols.empty()) throw Error("bench: the starting-solution search failed");
    ContSettings rs = rs_in;
    if (rs.mu_min < -1e17) rs.mu_min = -20.0;
    if (rs.mu_max > 1e17) rs.mu_max = 25.0;
    rs.direction = +1;
    Branch fwd = continue_branch(prob, mesh, sols[0].u, 0.0, rs);
    rs.direction = -1;
    Branch bwd = continue_branch(prob, mesh, sols[0].u, 0.0, rs);
    const auto t1 = std::chrono::steady_clock::now();

    r.points = static_cast<int>(fwd.points.size() + bwd.points.size());
    for (const Branch* b : {&fwd, &bwd})
      for (const BranchEvent& e : b->events)
        if (e.type == PointType::fold) {
          if (r.folds == 0) r.fold_mu = e.mu;
          ++r.folds;
        }
    const double mu_stop = rs.mu_min;
    const bool reached = fwd.points.back().mu <= mu_stop + 1e-9 &&
                         bwd.points.back().mu <= mu_stop + 1e-9;
    r.ok = reached && r.folds >= 1;
    if (!reached) r.note = "cutoff not reached";
    r.tau = std::chrono::duration<double>(t1 - t0).count();
  } catch (const Error& e) {
    r.ok = false;
    r.tau = -1.0;
    r.note = e.what();
  }
  return r;
}

}  // namespace

int cmd_bench(const RunConfig& cfg, const std::vector<double>& values,
              const std::string& mode, std::ostream& out, std::ostream& err) {
  std::vector<double> vals = values;
  if (mode == "h") {
    if (vals.empty()) vals = {0.3, 0.2, 0.15, 0.1, 0.07};
    std::vector<BenchOutcome> res(vals.size());
    parallel_for_ordered(vals.size(), cfg.jobs, [&](std::size_t i) {
      res[i] = bench_branch(cfg, vals[i], cfg.cont);
    });
    out << "h,np,nt,tau,branch\n";
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const BenchOutcome& r = res[i];
      out << g15(vals[i]) << ',' << r.np << ',' << r.nt << ','
          << g15(r.ok ? r.tau : -1.0) << ",mi1\n";
      if (!r.note.empty()) err << "bench h=" << g15(vals[i]) << ": " << r.note << "\n";
    }
    return kExitOk;
  }

  const char* column = nullptr;
  if (mode == "tol") {
    if (vals.empty()) vals = {1e-11, 1e-8, 1e-6, 1e-3};
    column = "tol";
  } else if (mode == "xi") {
    if (vals.empty()) vals = {1e-6, 1e-4, 1e-2, 0.1, 0.3, 0.5};
    column = "xi";
  } else if (mode == "neig") {
    if (vals.empty()) vals = {4, 8, 16, 32};
    column = "neig";
  } else {
    throw ConfigError("bench: unknown mode '" + mode + "' (h, tol, xi, neig)");
  }

  std::vector<BenchOutcome> res(vals.size());
  parallel_for_ordered(vals.size(), cfg.jobs, [&](std::size_t i) {
    ContSettings rs = cfg.cont;
    if (mode == "tol") rs.tol = vals[i];
    else if (mode == "xi") rs.xi = vals[i];
    else rs.neig = static_cast<int>(vals[i]);
    res[i] = bench_branch(cfg, cfg.hmax, rs);
  });
  out << column << ",fold_mu,folds,points,tau,ok\n";
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const BenchOutcome& r = res[i];
    out << g15(vals[i]) << ',' << g15(r.fold_mu) << ',' << r.folds << ',' << r.points
        << ',' << g15(r.tau) << ',' << (r.ok ? 1 : 0) << "\n";
    if (!r.note.empty())
      err << "bench " << column << "=" << g15(vals[i]) << ": " << r.note << "\n";
  }
  return kExitOk;
}

}  // namespace elcont
