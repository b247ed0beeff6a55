#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anisostokes/stabilize.hpp"

namespace anisostokes {

enum class Experiment { Example1, Example2, Sweep, MeshQuality, SingleSolve };
enum class BoundaryMode { Auto, DoNothing, Dirichlet };
enum class Geometry { Auto, Alternating, Circle };

struct RunConfig {
  Experiment experiment = Experiment::Example1;
  std::vector<int> levels{4, 8, 16, 32};  // 1/H
  StabVariant stab = StabVariant::S;
  std::optional<double> gamma_i, gamma_0;  // unset: per-experiment default
  std::vector<double> x0{0.0};
  double y0 = 0.0;
  double radius = 0.4;
  std::string out = "out";
  bool vtk = false, mm = false, quality = false;
  double sweep_step = 1e-3;
  double sweep_max = 0.249;
  double ratio = 1e-3;
  double nu = 1.0;
  double snap_tol = 1e-8;
  bool skip_outer_patch_jumps = true;
  BoundaryMode boundary = BoundaryMode::Auto;
  Geometry geometry = Geometry::Auto;
  int threads = 1;

  [[nodiscard]] Geometry resolved_geometry() const noexcept;
  [[nodiscard]] BoundaryMode resolved_boundary() const noexcept;
  [[nodiscard]] StabConfig stab_config() const;
};

std::string_view to_string(Experiment e) noexcept;
std::string_view to_string(StabVariant v) noexcept;

// Comma-separated list of accepted config keys.
const std::string& config_keys();

// Sets one key from its textual value; throws config-error naming the key.
void set_option(RunConfig& cfg, std::string_view key, std::string_view value);
// Applies `key = value` lines (# comments) on top of cfg; errors carry the line number.
void apply_config(RunConfig& cfg, std::istream& in);
void apply_config_file(RunConfig& cfg, const std::string& path);
// Throws config-error naming the offending field.
void validate(const RunConfig& cfg);
RunConfig parse_config(std::istream& in);

// Process exit codes.
inline constexpr int kExitOk = 0, kExitUsage = 2, kExitNumerical = 3, kExitMesh = 4;
int exit_code_for(ErrorCode code) noexcept;

// Runs the experiment, writes artifacts plus manifest.txt into cfg.out, returns an exit code.
int run(const RunConfig& cfg, std::ostream& log);

// Lowercase hex SHA-256 of a file.
std::string sha256_file(const std::string& path);

}  // namespace anisostokes
