#pragma once

// Command drivers behind the elcont executable. Each returns a process exit
// code (0 success, 1 usage/config, 2 numerical); hard numerical errors are
// thrown as Error and mapped to 2 by the caller, bad usage as ConfigError
// mapped to 1. All drivers write their report to `out` and diagnostics to
// `err`, so tests can run them in-process.

#include <iosfwd>
#include <string>
#include <vector>

#include "elcont/config.hpp"
#include "elcont/continuation.hpp"

namespace elcont {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

/// Triangulates the configured domain and writes an "elcont-mesh v1" file.
/// hmax <= 0 uses the [mesh] value.
int cmd_mesh(const RunConfig& cfg, double hmax, const std::string& out_path,
             std::ostream& out, std::ostream& err);

/// Runs the multi-solution search at fixed mu; writes start_<k>_MI<m>.sol per
/// solution into out_dir plus a summary table. Exit 0 iff at least one seed
/// converged.
int cmd_minimax(const RunConfig& cfg, double mu, const std::string& out_dir,
                std::ostream& out, std::ostream& err);

struct ContArgs {
  std::string start_path;  // solution file; empty = trivial start u == 0
  double trivial_mu = 0.0;
  int direction = 0;  // +1 / -1; 0 takes the config value
  std::string out_prefix = "branch";
};

/// Continues a branch from a start solution. The start file is
/// residual-checked: accepted as-is below tol, re-polished below 100*tol,
/// rejected otherwise (the diagnostic carries the measured residual). Writes
/// <prefix>.csv, <prefix>.events, snapshots <prefix>_ev<j>.sol and
/// <prefix>_ev<j>_pre.sol per event, and <prefix>_p<idx>.sol every
/// snap_every-th point.
int cmd_cont(const RunConfig& cfg, const ContArgs& args, std::ostream& out,
             std::ostream& err);

/// Locates the stability change bracketed by the event-index-th event of a
/// previous cmd_cont run (1-based, in event order) by eigenvalue bisection and
/// writes the located point as a solution file.
int cmd_findbif(const RunConfig& cfg, const std::string& branch_prefix, int event_index,
                const std::string& out_path, std::ostream& out, std::ostream& err);

/// Locates like cmd_findbif, then branch-switches; writes the two predictor
/// start files <out_prefix>_plus.sol / <out_prefix>_minus.sol. A non-simple
/// kernel surfaces the multiplicity error verbatim.
int cmd_switch(const RunConfig& cfg, const std::string& branch_prefix, int event_index,
               const std::string& out_prefix, std::ostream& out, std::ostream& err);

/// Solves -Laplace theta = f_const on the configured domain and writes the
/// field as a solution file. f_const is NaN-free; pass the config value
/// through the flag default.
int cmd_poisson(const RunConfig& cfg, double f_const, const std::string& out_path,
                std::ostream& out, std::ostream& err);

/// Cross-validates the two solution strategies on the cubic square problem:
/// (I) multi-solution search at mu = 0 plus continuation up to the trivial
/// branch; (II) trivial-branch events, bisection location, branch switching
/// and continuation back to mu = 0. Prints a report; exit 0 iff PASS.
int cmd_crossvalidate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Benchmark harness. mode "h" re-computes the forced-problem branch per mesh
/// width and emits h,np,nt,tau,branch rows (tau = -1 on failure); modes
/// "tol", "xi", "neig" sweep the corresponding parameter at the config mesh
/// width and report the fold location per value.
int cmd_bench(const RunConfig& cfg, const std::vector<double>& values,
              const std::string& mode, std::ostream& out, std::ostream& err);

// --- branch CSV parsing (round-trip of the continuation export) ------------

struct BranchRow {
  int idx = 0;
  double s = 0.0, mu = 0.0, norm_inf = 0.0, norm_l2 = 0.0;
  int n_neg = 0, det_sign = 0;
  std::string type;
  int newton_iters = 0, np = 0;
};

struct EventRow {
  int idx = 0;
  std::string type;
  double mu = 0.0;
};

std::vector<BranchRow> read_branch_csv(std::istream& is);
std::vector<EventRow> read_events_csv(std::istream& is);

}  // namespace elcont
