#include "anisostokes/experiments.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>

#include "anisostokes/verify.hpp"

namespace anisostokes {

namespace fs = std::filesystem;

std::string_view to_string(Experiment e) noexcept {
  switch (e) {
    case Experiment::Example1: return "example1";
    case Experiment::Example2: return "example2";
    case Experiment::Sweep: return "sweep";
    case Experiment::MeshQuality: return "mesh-quality";
    case Experiment::SingleSolve: return "single-solve";
  }
  return "?";
}

std::string_view to_string(StabVariant v) noexcept {
  switch (v) {
    case StabVariant::None: return "none";
    case StabVariant::S: return "S";
    case StabVariant::S2: return "S2";
    case StabVariant::Scip: return "SCIP";
  }
  return "?";
}

Geometry RunConfig::resolved_geometry() const noexcept {
  if (geometry != Geometry::Auto) return geometry;
  return experiment == Experiment::Example1 || experiment == Experiment::SingleSolve ? Geometry::Alternating
                                                                                      : Geometry::Circle;
}

BoundaryMode RunConfig::resolved_boundary() const noexcept {
  if (boundary != BoundaryMode::Auto) return boundary;
  return experiment == Experiment::SingleSolve ? BoundaryMode::Dirichlet : BoundaryMode::DoNothing;
}

StabConfig RunConfig::stab_config() const {
  const bool circle = resolved_geometry() == Geometry::Circle;
  double dflt = circle ? 2.5e-3 : 1e-2;
  if (stab == StabVariant::S2 || stab == StabVariant::Scip) dflt *= 4.0;
  if (stab == StabVariant::None) dflt = 0.0;
  StabConfig s{stab, gamma_i.value_or(dflt), gamma_0.value_or(dflt), skip_outer_patch_jumps};
  return s;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  fail(ErrorCode::ConfigError,
       "bad value for '" + std::string(key) + "': '" + std::string(value) + "' (expected " + std::string(expected) + ")");
}

double to_double(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, value, "a number");
  return out;
}

int to_int(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, value, "an integer");
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  bad_value(key, value, "true or false");
}

template <class T, class F>
std::vector<T> to_list(std::string_view value, F&& one) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto piece = value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(one(piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

StabVariant to_variant(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (v == "S" || v == "s") return StabVariant::S;
  if (v == "S2" || v == "s2") return StabVariant::S2;
  if (v == "SCIP" || v == "Scip" || v == "scip") return StabVariant::Scip;
  if (v == "none") return StabVariant::None;
  bad_value(key, value, "S, S2, SCIP or none");
}

Experiment to_experiment(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  for (Experiment e : {Experiment::Example1, Experiment::Example2, Experiment::Sweep, Experiment::MeshQuality,
                       Experiment::SingleSolve})
    if (v == to_string(e)) return e;
  bad_value(key, value, "example1, example2, sweep, mesh-quality or single-solve");
}

using Setter = void (*)(RunConfig&, std::string_view, std::string_view);

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"experiment", [](RunConfig& c, std::string_view k, std::string_view v) { c.experiment = to_experiment(k, v); }},
      {"levels",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.levels = to_list<int>(v, [k](std::string_view s) { return to_int(k, s); });
       }},
      {"stab", [](RunConfig& c, std::string_view k, std::string_view v) { c.stab = to_variant(k, v); }},
      {"gamma",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.gamma_i = to_double(k, v);
         c.gamma_0 = c.gamma_i;
       }},
      {"gamma_i", [](RunConfig& c, std::string_view k, std::string_view v) { c.gamma_i = to_double(k, v); }},
      {"gamma_0", [](RunConfig& c, std::string_view k, std::string_view v) { c.gamma_0 = to_double(k, v); }},
      {"x0",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.x0 = to_list<double>(v, [k](std::string_view s) { return to_double(k, s); });
       }},
      {"y0", [](RunConfig& c, std::string_view k, std::string_view v) { c.y0 = to_double(k, v); }},
      {"radius", [](RunConfig& c, std::string_view k, std::string_view v) { c.radius = to_double(k, v); }},
      {"out", [](RunConfig& c, std::string_view, std::string_view v) { c.out = trim(v); }},
      {"vtk", [](RunConfig& c, std::string_view k, std::string_view v) { c.vtk = to_bool(k, v); }},
      {"mm", [](RunConfig& c, std::string_view k, std::string_view v) { c.mm = to_bool(k, v); }},
      {"quality", [](RunConfig& c, std::string_view k, std::string_view v) { c.quality = to_bool(k, v); }},
      {"sweep_step", [](RunConfig& c, std::string_view k, std::string_view v) { c.sweep_step = to_double(k, v); }},
      {"sweep_max", [](RunConfig& c, std::string_view k, std::string_view v) { c.sweep_max = to_double(k, v); }},
      {"ratio", [](RunConfig& c, std::string_view k, std::string_view v) { c.ratio = to_double(k, v); }},
      {"nu", [](RunConfig& c, std::string_view k, std::string_view v) { c.nu = to_double(k, v); }},
      {"snap_tol", [](RunConfig& c, std::string_view k, std::string_view v) { c.snap_tol = to_double(k, v); }},
      {"skip_outer_patch_jumps",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.skip_outer_patch_jumps = to_bool(k, v); }},
      {"boundary",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         const std::string s = trim(v);
         if (s == "do-nothing") c.boundary = BoundaryMode::DoNothing;
         else if (s == "dirichlet") c.boundary = BoundaryMode::Dirichlet;
         else if (s == "auto") c.boundary = BoundaryMode::Auto;
         else bad_value(k, v, "do-nothing, dirichlet or auto");
       }},
      {"geometry",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         const std::string s = trim(v);
         if (s == "alternating") c.geometry = Geometry::Alternating;
         else if (s == "circle") c.geometry = Geometry::Circle;
         else if (s == "auto") c.geometry = Geometry::Auto;
         else bad_value(k, v, "alternating, circle or auto");
       }},
      {"threads", [](RunConfig& c, std::string_view k, std::string_view v) { c.threads = to_int(k, v); }},
  };
  return table;
}

}  // namespace

const std::string& config_keys() {
  static const std::string keys = [] {
    std::string s;
    for (const auto& [k, _] : setters()) s += (s.empty() ? "" : ", ") + k;
    return s;
  }();
  return keys;
}

void set_option(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto it = setters().find(trim(key));
  if (it == setters().end())
    fail(ErrorCode::ConfigError, "unknown key '" + std::string(key) + "'; valid keys: " + config_keys());
  it->second(cfg, it->first, value);
}

void apply_config(RunConfig& cfg, std::istream& in) {
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ConfigError, "line " + std::to_string(no) + ": expected 'key = value'");
    try {
      set_option(cfg, trim(std::string_view(body).substr(0, eq)), std::string_view(body).substr(eq + 1));
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::ConfigError, "cannot read config file " + path);
  apply_config(cfg, in);
}

void validate(const RunConfig& cfg) {
  auto check = [](bool ok, const std::string& field, const std::string& why) {
    require(ok, ErrorCode::ConfigError, "invalid " + field + ": " + why);
  };
  check(!cfg.levels.empty(), "levels", "at least one mesh level is required");
  for (int n : cfg.levels) check(n >= 1 && n <= 4096, "levels", "each level must be 1/H with 1 <= 1/H <= 4096");
  const StabConfig s = cfg.stab_config();
  if (cfg.stab != StabVariant::None) {
    check(s.gamma_aniso > 0.0 && std::isfinite(s.gamma_aniso), "gamma_i", "must be positive");
    check(s.gamma_regular > 0.0 && std::isfinite(s.gamma_regular), "gamma_0", "must be positive");
  }
  check(!cfg.x0.empty(), "x0", "at least one value is required");
  check(cfg.radius > 0.0, "radius", "must be positive");
  check(cfg.sweep_step > 0.0, "sweep_step", "must be positive");
  check(cfg.sweep_max >= 0.0, "sweep_max", "must be non-negative");
  check(cfg.ratio > 0.0 && cfg.ratio < 1.0, "ratio", "must lie in (0, 1)");
  check(cfg.nu > 0.0, "nu", "must be positive");
  check(cfg.snap_tol >= 0.0, "snap_tol", "must be non-negative");
  check(cfg.threads >= 1, "threads", "must be at least 1");
  check(!cfg.out.empty(), "out", "must name a directory");
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  apply_config(cfg, in);
  validate(cfg);
  return cfg;
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError:
    case ErrorCode::IoError: return kExitUsage;
    case ErrorCode::UnsupportedCut:
    case ErrorCode::DegenerateCell:
    case ErrorCode::InvertedCell: return kExitMesh;
    default: return kExitNumerical;
  }
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot read " + path);
  const std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1, ErrorCode::InternalError, "sha256 init");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

namespace {

class Runner {
 public:
  Runner(const RunConfig& cfg, std::ostream& log) : cfg_(cfg), log_(log), dir_(cfg.out) {}

  int operator()() {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    require(!ec && fs::is_directory(dir_), ErrorCode::IoError, "cannot create output directory " + cfg_.out);
    switch (cfg_.experiment) {
      case Experiment::Example1:
      case Experiment::Example2: convergence(); break;
      case Experiment::Sweep: sweep(); break;
      case Experiment::MeshQuality: quality_only(); break;
      case Experiment::SingleSolve: single_solve(); break;
    }
    write_manifest();
    return status_;
  }

 private:
  static double H_of(int n) { return 1.0 / static_cast<double>(n); }

  std::shared_ptr<const Mesh> mesh_for(int n, double x0) const {
    if (cfg_.resolved_geometry() == Geometry::Alternating) return example1_mesh(H_of(n), cfg_.ratio);
    return example2_mesh(H_of(n), x0, cfg_.y0, cfg_.radius, cfg_.snap_tol);
  }

  ProblemSetup setup_for(std::shared_ptr<const Mesh> mesh, double x0) const {
    ProblemSetup s;
    s.mesh = std::move(mesh);
    const bool circle = cfg_.resolved_geometry() == Geometry::Circle;
    if (cfg_.resolved_boundary() == BoundaryMode::Dirichlet) {
      s.dirichlet_tags = {kLeft, kRight, kBottom, kTop};
      if (circle) s.dirichlet_tags.push_back(kInterface);
      s.gauge = PressureGauge::MeanZeroShift;
    } else {
      s.dirichlet_tags = circle ? example2_dirichlet_tags() : example1_dirichlet_tags();
    }
    s.stab = cfg_.stab_config();
    s.exact = ExactSolution(circle ? x0 : 0.0, circle ? cfg_.y0 : 0.0, cfg_.radius, cfg_.nu);
    return s;
  }

  std::string suffix(int n, double x0) const {
    std::string s = "H" + std::to_string(n);
    if (cfg_.resolved_geometry() == Geometry::Circle && cfg_.x0.size() > 1) s += "_x0_" + fmt6(x0);
    return s;
  }

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    std::ofstream os(p, std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::IoError, "cannot write " + p.string());
    if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) artifacts_.push_back(name);
    return os;
  }

  void record_failure(const std::string& what, const Error& e) {
    log_ << "FAILED " << what << ": [" << to_string(e.code()) << "] " << e.what() << std::endl;
    status_ = std::max(status_, exit_code_for(e.code()));
  }

  // Assembles and solves one level; optional matrix / field dumps.
  DiscreteSolution solve_level(const ProblemSetup& setup, const std::string& tag) {
    DiscreteSolution out;
    out.space = std::make_shared<const FeSpace>(setup.mesh, setup.dirichlet_tags);
    const StokesSystem sys = assemble_problem(setup, *out.space, &out.gauge);
    if (out.gauge.singular_warning) log_ << "warning " << tag << ": " << out.gauge.message << std::endl;
    if (cfg_.mm) {
      const std::string name = "matrix_" + tag + ".mtx";
      open(name).close();
      write_matrix_market(sys.matrix, (dir_ / name).string());
    }
    StokesSolution s = solve_stokes(sys, *out.space, setup.tol);
    out.v1 = std::move(s.v1);
    out.v2 = std::move(s.v2);
    out.p = std::move(s.p);
    out.report = s.report;
    if (cfg_.vtk) {
      std::ofstream os = open("solution_" + tag + ".vtk");
      write_vtk_fields(*setup.mesh, out.v1, out.v2, out.p, os);
    }
    return out;
  }

  // One quality table per level, rows ordered by x0.
  void add_quality_row(int n, double x0, const QualityReport& q) {
    std::string& t = quality_[n];
    if (t.empty()) t = "x0,K_max,K_min,ratio,e_max,e_min,kappa_max,angle_max\n";
    t += fmt6(x0) + ',' + fmt6(q.K_max) + ',' + fmt6(q.K_min) + ',' + fmt6(q.ratio) + ',' + fmt6(q.e_max) + ',' +
         fmt6(q.e_min) + ',' + fmt6(q.kappa_max) + ',' + fmt6(q.angle_max) + '\n';
  }

  void flush_quality() {
    for (const auto& [n, text] : quality_) {
      std::ofstream os = open("quality_H" + std::to_string(n) + ".csv");
      os << text;
    }
  }

  std::vector<double> x0_values() const {
    return cfg_.resolved_geometry() == Geometry::Circle ? cfg_.x0 : std::vector<double>{0.0};
  }

  void convergence() {
    const std::vector<double> xs = x0_values();
    for (double x0 : xs) {
      ConvergenceRecord rec;
      for (int n : cfg_.levels) {
        const std::string tag = suffix(n, x0);
        try {
          const auto mesh = mesh_for(n, x0);
          if (cfg_.quality) add_quality_row(n, x0, mesh_quality_report(*mesh));
          const ProblemSetup setup = setup_for(mesh, x0);
          const auto sol = solve_level(setup, tag);
          const ErrorNorms e = error_norms(*sol.space, sol.v1, sol.v2, sol.p, setup.exact);
          rec.rows.push_back({H_of(n), e});
          log_ << tag << ": |grad(v-vh)|=" << fmt6(e.v_h1) << " |v-vh|=" << fmt6(e.v_l2)
               << " |p-ph|=" << fmt6(e.p_l2) << " |grad(p-ph)|=" << fmt6(e.p_h1)
               << " residual=" << fmt6(sol.report.residual) << std::endl;
        } catch (const Error& e) {
          record_failure(tag, e);
        }
      }
      const std::string name =
          xs.size() > 1 ? "convergence_x0_" + fmt6(x0) + ".csv" : std::string("convergence.csv");
      std::ofstream os = open(name);
      write_convergence_csv(rec, os);
    }
    flush_quality();
  }

  void quality_only() {
    for (double x0 : x0_values())
      for (int n : cfg_.levels) {
        try {
          const auto mesh = mesh_for(n, x0);
          const QualityReport q = mesh_quality_report(*mesh);
          add_quality_row(n, x0, q);
          log_ << suffix(n, x0) << ": kappa_max=" << fmt6(q.kappa_max) << " K_min=" << fmt6(q.K_min) << std::endl;
          if (cfg_.vtk) {
            std::ofstream v = open("mesh_" + suffix(n, x0) + ".vtk");
            write_vtk_mesh(*mesh, v);
          }
        } catch (const Error& e) {
          record_failure(suffix(n, x0), e);
        }
      }
    flush_quality();
  }

  void sweep() {
    for (int n : cfg_.levels) {
      SweepConfig sc;
      sc.H = H_of(n);
      sc.x0_begin = 0.0;
      sc.x0_end = cfg_.sweep_max;
      sc.step = cfg_.sweep_step;
      sc.y0 = cfg_.y0;
      sc.radius = cfg_.radius;
      sc.stab = cfg_.stab_config();
      sc.snap_tol = cfg_.snap_tol;
      sc.threads = thread_cap();
      const std::vector<SweepRow> rows = x0_sweep(sc);
      std::size_t bad = 0;
      for (const SweepRow& r : rows)
        if (!r.ok) {
          ++bad;
          log_ << "FAILED H" << n << " x0=" << fmt6(r.x0) << ": " << r.error << std::endl;
        }
      if (bad > 0) status_ = std::max(status_, kExitNumerical);
      log_ << "H" << n << ": " << rows.size() - bad << '/' << rows.size() << " sweep points solved" << std::endl;
      std::ofstream os = open("sweep_H" + std::to_string(n) + ".csv");
      write_sweep_csv(rows, os);
    }
  }

  void single_solve() {
    const int n = cfg_.levels.front();
    const double x0 = cfg_.x0.front();
    const std::string tag = suffix(n, x0);
    std::ofstream os = open("solve.csv");
    os << "H,x0,status,residual,rcond_estimate,err_v_h1,err_v_l2,err_p_l2,err_p_h1\n";
    try {
      const ProblemSetup setup = setup_for(mesh_for(n, x0), x0);
      const auto sol = solve_level(setup, tag);
      const ErrorNorms e = error_norms(*sol.space, sol.v1, sol.v2, sol.p, setup.exact);
      os << fmt6(H_of(n)) << ',' << fmt6(x0) << ",ok," << fmt6(sol.report.residual) << ','
         << fmt6(sol.report.rcond_estimate) << ',' << fmt6(e.v_h1) << ',' << fmt6(e.v_l2) << ',' << fmt6(e.p_l2)
         << ',' << fmt6(e.p_h1) << '\n';
      log_ << tag << ": solved, residual=" << fmt6(sol.report.residual) << std::endl;
    } catch (const SolveError& e) {
      os << fmt6(H_of(n)) << ',' << fmt6(x0) << ",singular," << fmt6(e.report().residual) << ','
         << fmt6(e.report().rcond_estimate) << ",,,,\n";
      record_failure(tag, e);
    } catch (const Error& e) {
      os << fmt6(H_of(n)) << ',' << fmt6(x0) << ',' << to_string(e.code()) << ",,,,,,\n";
      record_failure(tag, e);
    }
  }

  int thread_cap() const {
    int t = cfg_.threads;
    if (const char* env = std::getenv("ANISOSTOKES_THREADS")) {
      const int cap = std::atoi(env);
      if (cap >= 1) t = std::min(t, cap);
    }
    return std::max(t, 1);
  }

  void write_manifest() {
    std::sort(artifacts_.begin(), artifacts_.end());
    std::ofstream os(dir_ / "manifest.txt", std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::IoError, "cannot write manifest");
    for (const std::string& a : artifacts_) os << sha256_file((dir_ / a).string()) << "  " << a << '\n';
  }

  const RunConfig& cfg_;
  std::ostream& log_;
  fs::path dir_;
  std::vector<std::string> artifacts_;
  std::map<int, std::string> quality_;
  int status_ = kExitOk;
};

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
  try {
    validate(cfg);
    log << to_string(cfg.experiment) << " stab=" << to_string(cfg.stab) << std::endl;
    return Runner(cfg, log)();
  } catch (const Error& e) {
    log << "error [" << to_string(e.code()) << "]: " << e.what() << std::endl;
    return exit_code_for(e.code());
  }
}

}  // namespace anisostokes
