#pragma once

// Run configuration: an INI-style file with sections [domain], [pde], [params],
// [mesh], [continuation], [minimax]. Unknown sections or keys are errors, as
// are values outside a module's documented range.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "elcont/continuation.hpp"
#include "elcont/error.hpp"
#include "elcont/geometry.hpp"
#include "elcont/minimax.hpp"
#include "elcont/problems.hpp"

namespace elcont {

/// Bad usage or configuration (CLI exit code 1, vs. 2 for numerical failure).
struct ConfigError : Error {
  using Error::Error;
};

struct RunConfig {
  // [domain]; optional for the square problems, which carry their own domain
  std::optional<PolygonDomain> domain;

  // [pde]
  std::string problem_id = "lef";  // lef | lef_force | lef_force_scaled | caginalp
  double mu0 = 1.0;                // scaling parameter of lef_force_scaled

  // [params]
  MicroforceParams micro;
  CaginalpParams cag;
  double f_const = 2000.0;   // temperature forcing of the phase-field presolve
  double theta_hmax = 0.1;   // mesh width of the temperature presolve
  double est_alpha = 0.15;   // error-estimator constants
  double est_beta = 0.15;

  // [mesh]
  double hmax = 0.1;

  // [continuation]
  ContSettings cont;
  int snap_every = 0;  // solution snapshot every k-th accepted point (0 = events only)

  // [minimax]
  MinimaxSettings minimax;
  int minimax_neig = 16;        // eigenvalue budget for Morse indices
  std::vector<SeedSpec> seeds;  // repeated `seed =` lines; empty = problem default

  // global CLI flags, not part of the file
  std::string out_dir = ".";
  int jobs = 1;
  long run_seed = 0;
};

RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);

/// Domain for meshing: the explicit [domain] section if present, otherwise the
/// domain owned by the configured problem.
PolygonDomain config_domain(const RunConfig& cfg);

/// Instantiates the configured problem. The phase-field build runs the
/// temperature presolve on its own mesh of width theta_hmax.
EllipticProblem build_problem(const RunConfig& cfg);

/// Seed list: explicit `seed =` entries, else the problem's default library.
std::vector<SeedSpec> config_seeds(const RunConfig& cfg);

}  // namespace elcont
