#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "elcont/cli.hpp"

namespace {

std::string in_out_dir(const std::string& out_dir, const std::string& name) {
  return (std::filesystem::path(out_dir) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace elcont;
  CLI::App app{"elcont - bifurcation diagrams of semilinear elliptic PDEs on polygons"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  int jobs = 1;
  long run_seed = 0;
  app.add_option("--config", config_path, "configuration file")->required();
  app.add_option("--out", out_dir, "output directory (default .)");
  app.add_option("--jobs", jobs, "worker pool size for independent runs");
  app.add_option("--seed", run_seed, "run seed for randomized tie-breaking");

  // mesh
  CLI::App* c_mesh = app.add_subcommand("mesh", "triangulate the configured domain");
  double mesh_hmax = 0.0;
  std::string mesh_name = "mesh.txt";
  c_mesh->add_option("--hmax", mesh_hmax, "mesh width (default: [mesh] hmax)");
  c_mesh->add_option("--name", mesh_name, "output file name");

  // minimax
  CLI::App* c_mm = app.add_subcommand("minimax", "multiple starting solutions at fixed mu");
  double mm_mu = 0.0;
  c_mm->add_option("--mu", mm_mu, "parameter value (default 0)");

  // cont
  CLI::App* c_cont = app.add_subcommand("cont", "pseudo-arclength continuation");
  ContArgs cont_args;
  bool trivial = false;
  CLI::Option* o_start =
      c_cont->add_option("--start", cont_args.start_path, "start solution file");
  CLI::Option* o_triv =
      c_cont->add_flag("--trivial", trivial, "start from u == 0 on a fresh mesh");
  o_start->excludes(o_triv);
  c_cont->add_option("--mu0", cont_args.trivial_mu, "parameter of the trivial start");
  c_cont->add_option("--direction", cont_args.direction, "+1 or -1 (default: config)")
      ->check(CLI::IsMember({-1, 0, 1}));
  std::string cont_name = "branch";
  c_cont->add_option("--name", cont_name, "output prefix (default branch)");

  // findbif / switch
  CLI::App* c_fb = app.add_subcommand("findbif", "locate a bracketed stability change");
  CLI::App* c_sw = app.add_subcommand("switch", "branch-switch at a located point");
  std::string fb_branch, sw_branch;
  int fb_event = 0, sw_event = 0;
  std::string fb_name = "bif.sol", sw_name = "switch";
  c_fb->add_option("--branch", fb_branch, "prefix of a previous cont run")->required();
  c_fb->add_option("--event", fb_event, "event ordinal, 1-based")->required();
  c_fb->add_option("--name", fb_name, "output file name");
  c_sw->add_option("--branch", sw_branch, "prefix of a previous cont run")->required();
  c_sw->add_option("--event", sw_event, "event ordinal, 1-based")->required();
  c_sw->add_option("--name", sw_name, "output prefix");

  // poisson
  CLI::App* c_po = app.add_subcommand("poisson", "solve -laplace theta = f");
  double po_f = 0.0;
  std::string po_name = "theta.sol";
  CLI::Option* o_f = c_po->add_option("--f", po_f, "constant forcing (default: config)");
  c_po->add_option("--name", po_name, "output file name");

  // crossvalidate
  CLI::App* c_cv =
      app.add_subcommand("crossvalidate", "compare the two solution strategies");

  // bench
  CLI::App* c_be = app.add_subcommand("bench", "performance and robustness sweeps");
  std::string be_mode = "h";
  std::vector<double> be_values;
  std::string be_name;
  c_be->add_option("--mode", be_mode, "h | tol | xi | neig")
      ->check(CLI::IsMember({"h", "tol", "xi", "neig"}));
  c_be->add_option("--values", be_values, "swept values (default per mode)")
      ->delimiter(',');
  c_be->add_option("--name", be_name, "write the CSV to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    RunConfig cfg = load_config(config_path);
    cfg.out_dir = out_dir;
    cfg.jobs = jobs;
    cfg.run_seed = run_seed;
    std::filesystem::create_directories(out_dir);

    if (c_mesh->parsed())
      return cmd_mesh(cfg, mesh_hmax, in_out_dir(out_dir, mesh_name), std::cout,
                      std::cerr);
    if (c_mm->parsed()) return cmd_minimax(cfg, mm_mu, out_dir, std::cout, std::cerr);
    if (c_cont->parsed()) {
      if (cont_args.start_path.empty() && !trivial)
        throw ConfigError("cont: pass --start <file> or --trivial");
      cont_args.out_prefix = in_out_dir(out_dir, cont_name);
      return cmd_cont(cfg, cont_args, std::cout, std::cerr);
    }
    if (c_fb->parsed())
      return cmd_findbif(cfg, fb_branch, fb_event, in_out_dir(out_dir, fb_name),
                         std::cout, std::cerr);
    if (c_sw->parsed())
      return cmd_switch(cfg, sw_branch, sw_event, in_out_dir(out_dir, sw_name), std::cout,
                        std::cerr);
    if (c_po->parsed())
      return cmd_poisson(cfg, o_f->count() ? po_f : cfg.f_const,
                         in_out_dir(out_dir, po_name), std::cout, std::cerr);
    if (c_cv->parsed()) return cmd_crossvalidate(cfg, std::cout, std::cerr);
    if (c_be->parsed()) {
      if (!be_name.empty()) {
        std::ofstream f(in_out_dir(out_dir, be_name));
        if (!f) throw Error("bench: cannot write '" + be_name + "'");
        return cmd_bench(cfg, be_values, be_mode, f, std::cerr);
      }
      return cmd_bench(cfg, be_values, be_mode, std::cout, std::cerr);
    }
    throw ConfigError("no subcommand selected");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
