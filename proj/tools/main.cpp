#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anisostokes/anisostokes.h"

namespace {

constexpr int kUsage = 2;

struct ConfigDeleter {
  void operator()(as_config* c) const { as_config_destroy(c); }
};

int usage_error(const char* what) {
  std::fprintf(stderr, "anisostokes: %s\n", what);
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equal-order Stokes with anisotropic edge stabilisation"};
  app.set_version_flag("--version", "anisostokes 0.1");

  std::optional<std::string> experiment, config, levels, H, stab, gamma, gamma_i, gamma_0, x0, y0, radius, out,
      sweep_step, sweep_max, ratio, boundary, threads;
  bool vtk = false, mm = false, quality = false;

  app.add_option("experiment", experiment, "example1 | example2 | sweep | mesh-quality | single-solve");
  app.add_option("--config", config, "key = value file; flags override it");
  app.add_option("--levels", levels, "comma-separated 1/H values, e.g. 4,8,16,32");
  app.add_option("--H", H, "single level 1/H");
  app.add_option("--stab", stab, "S | S2 | SCIP | none");
  app.add_option("--gamma", gamma, "stabilisation parameter for both edge classes");
  app.add_option("--gamma-i", gamma_i, "parameter on anisotropic edges");
  app.add_option("--gamma-0", gamma_0, "parameter on regular edges");
  app.add_option("--x0", x0, "circle centre x (comma-separated list allowed)");
  app.add_option("--y0", y0, "circle centre y");
  app.add_option("--radius", radius, "circle radius");
  app.add_option("--out", out, "output directory");
  app.add_option("--sweep-step", sweep_step, "x0 increment of the sweep");
  app.add_option("--sweep-max", sweep_max, "last x0 of the sweep");
  app.add_option("--ratio", ratio, "thin-row ratio of the alternating mesh");
  app.add_option("--boundary", boundary, "do-nothing | dirichlet");
  app.add_option("--threads", threads, "worker threads (capped by ANISOSTOKES_THREADS)");
  app.add_flag("--vtk", vtk, "write legacy VTK fields");
  app.add_flag("--mm", mm, "write system matrices in MatrixMarket format");
  app.add_flag("--quality", quality, "write mesh quality metrics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }
  if (levels && H) return usage_error("--levels and --H are mutually exclusive");

  as_config* raw = nullptr;
  if (as_config_create(&raw) != AS_OK) return usage_error(as_last_error());
  const std::unique_ptr<as_config, ConfigDeleter> cfg(raw);

  if (config && as_config_load(cfg.get(), config->c_str()) != AS_OK) return usage_error(as_last_error());

  const std::vector<std::pair<const char*, const std::optional<std::string>*>> overrides = {
      {"experiment", &experiment}, {"levels", &levels},         {"levels", &H},          {"stab", &stab},
      {"gamma", &gamma},           {"gamma_i", &gamma_i},       {"gamma_0", &gamma_0},   {"x0", &x0},
      {"y0", &y0},                 {"radius", &radius},         {"out", &out},           {"sweep_step", &sweep_step},
      {"sweep_max", &sweep_max},   {"ratio", &ratio},           {"boundary", &boundary}, {"threads", &threads},
  };
  for (const auto& [key, value] : overrides)
    if (value->has_value() && as_config_set(cfg.get(), key, (*value)->c_str()) != AS_OK)
      return usage_error(as_last_error());
  if (vtk) as_config_set(cfg.get(), "vtk", "true");
  if (mm) as_config_set(cfg.get(), "mm", "true");
  if (quality) as_config_set(cfg.get(), "quality", "true");

  if (as_config_validate(cfg.get()) != AS_OK) return usage_error(as_last_error());
  int code = 0;
  if (as_run(cfg.get(), &code) != AS_OK) return usage_error(as_last_error());
  return code;
}
