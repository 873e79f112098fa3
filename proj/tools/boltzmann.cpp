// Command-line driver: weight caches, runs, scaling sweeps and oracle checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "boltz/cli_io.hpp"
#include "boltz/collision.hpp"
#include "boltz/conservation.hpp"
#include "boltz/oracle.hpp"
#include "boltz/parallel_runtime.hpp"
#include "boltz/solver.hpp"

namespace fs = std::filesystem;
using namespace boltz;

namespace {

int cmd_precompute(const std::string& config_path, std::string out, const std::string& storage,
                   bool force_quadrature) {
  const auto config = parse_config(config_path);
  if (out.empty()) out = config.weights_cache;
  if (out.empty()) {
    spdlog::error("no output path: pass --out or set weights.cache");
    return 2;
  }
  VelocityGrid grid(config.n, choose_domain(config.support_radius));
  TableOptions options;
  options.force_quadrature = force_quadrature;
  if (storage == "dense") options.storage = TableStorage::dense;
  if (storage == "reduced") options.storage = TableStorage::reduced;
  const auto start = std::chrono::steady_clock::now();
  TaskPool pool(1);
  const auto table = precompute_table(grid, config.kernel, options, &pool);
  save_table(table, out);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("wrote %s: N=%d L=%g lambda=%g entries=%llu crc32=%08x (%.2f s)\n", out.c_str(),
              grid.n(), grid.half_width(), config.kernel.lambda,
              static_cast<unsigned long long>(table.entry_count()), table.checksum(), secs);
  return 0;
}

int cmd_verify(const std::string& path, const std::string& config_path, int samples) {
  const auto table = load_table(path);
  const auto& meta = table.metadata();
  VelocityGrid grid(meta.n, meta.half_width);
  CollisionKernel kernel{meta.lambda, meta.beta};
  if (!config_path.empty()) {
    const auto config = parse_config(config_path);
    table.require_match(VelocityGrid(config.n, choose_domain(config.support_radius)),
                        config.kernel);
  }
  const std::size_t origin = grid.flat(grid.n() / 2, grid.n() / 2, grid.n() / 2);
  double zero_row = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    zero_row = std::max(zero_row, std::abs(table.at(origin, j)));
  }
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const std::size_t k = pick(rng), j = pick(rng);
    const auto ref = ghat_entry(grid.frequency(j), grid.frequency(k), kernel, grid.half_width());
    worst = std::max(worst, std::abs(table.at(k, j) - ref));
  }
  const bool ok = zero_row <= 1e-10 && worst <= 1e-10;
  std::printf("%s: N=%d L=%g lambda=%g crc32=%08x\n", path.c_str(), meta.n, meta.half_width,
              meta.lambda, table.checksum());
  std::printf("  max |G(xi,0)| = %.3e, max sample deviation = %.3e over %d entries: %s\n",
              zero_row, worst, samples, ok ? "ok" : "FAILED");
  return ok ? 0 : 1;
}

int cmd_run(const std::string& config_path, int workers, int cores) {
  const auto config = parse_config(config_path);
  const fs::path dir = config.output.dir;
  fs::create_directories(dir);
  const auto config_text = format_config(config);
  atomic_write(dir / "config.cfg", config_text);

  std::vector<MomentRow> moments;
  std::vector<MarginalRow> marginals;
  std::vector<std::string> outputs{(dir / "config.cfg").string(), (dir / "moments.csv").string()};
  if (config.output.marginals) outputs.push_back((dir / "marginals.csv").string());
  int snapshot = 0;

  auto observer = [&](const DistributionState& state) {
    const auto rows = moment_rows(state);
    moments.insert(moments.end(), rows.begin(), rows.end());
    write_moments(moments, dir / "moments.csv");
    if (config.output.marginals) {
      const auto g = marginal_rows(state);
      marginals.insert(marginals.end(), g.begin(), g.end());
      write_marginals(marginals, dir / "marginals.csv");
    }
    if (config.output.snapshots) {
      char name[32];
      std::snprintf(name, sizeof name, "f_%04d.bin", snapshot++);
      save_snapshot(state, config.kernel, dir / name);
      outputs.push_back((dir / name).string());
    }
  };

  const auto summary = run(config, RunOptions{workers, cores}, observer);
  RunManifest manifest{config_text, version_string(), summary.table_checksum, summary, outputs};
  write_manifest(manifest, dir / "manifest.json");
  std::printf("%zu steps (dt=%.6g) in %.2f s; max drift mass=%.2e momentum=%.2e energy=%.2e; %s\n",
              summary.steps, summary.dt, summary.wall_seconds, summary.max_drift.mass,
              summary.max_drift.momentum, summary.max_drift.energy,
              summary.conservation_ok ? "conservation ok" : "CONSERVATION CHECK FAILED");
  return summary.conservation_ok ? 0 : 1;
}

std::vector<int> parse_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stoi(item));
  return out;
}

int cmd_scaling(const std::string& config_path, const std::string& workers_list,
                const std::string& cores_list, int steps, const std::string& out) {
  const auto config = parse_config(config_path);
  auto grid = std::make_shared<const VelocityGrid>(config.n, choose_domain(config.support_radius));
  auto table = prepare_table(config, *grid);
  CollisionStepper stepper(grid, table, config.epsilon);
  SpatialMesh mesh(config.cells, config.x0);
  Transport transport(config.left, config.right);
  DistributionState initial(grid, mesh);
  initialize(initial, config.init);
  const double dt = config.dt.value_or(cfl_dt(mesh, *grid, config.cfl));

  std::ostringstream csv;
  csv << "workers,cores,wall_seconds,speedup\n";
  double baseline = 0.0;
  for (int w : parse_list(workers_list)) {
    for (int c : parse_list(cores_list)) {
      const auto nw = std::min<std::size_t>(static_cast<std::size_t>(w), mesh.size());
      ParallelRuntime rt(partition_cells(mesh.size(), nw), transport, mesh, grid, c);
      rt.scatter(initial);
      const auto start = std::chrono::steady_clock::now();
      for (int s = 0; s < steps; ++s) rt.strang_step(stepper, dt);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (baseline == 0.0) baseline = secs;
      csv << w << ',' << c << ',' << secs << ',' << baseline / secs << '\n';
    }
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    atomic_write(out, csv.str());
  }
  return 0;
}

double rel_l2(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

double gaussian(const Vec3& v, const Vec3& c, const Vec3& t) {
  double e = 0.0, norm = 1.0;
  for (int i = 0; i < 3; ++i) {
    e += (v[i] - c[i]) * (v[i] - c[i]) / (2.0 * t[i]);
    norm *= std::sqrt(2.0 * std::numbers::pi * t[i]);
  }
  return std::exp(-e) / norm;
}

bool report(const char* name, double delta, double tol) {
  const bool ok = delta <= tol;
  std::printf("%-12s delta=%.3e tol=%.1e %s\n", name, delta, tol, ok ? "PASS" : "FAIL");
  return ok;
}

int cmd_oracle(const std::string& which, int n, double r) {
  const bool all = which == "all";
  bool ok = true;
  bool known = all;
  if (all || which == "transform") {
    known = true;
    VelocityGrid grid(n, choose_domain(r));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> f(grid.size());
    for (double& x : f) x = u(rng);
    const auto fast = forward_transform(f, grid);
    const auto slow = oracle::direct_transform(f, grid);
    double d = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      d = std::max(d, std::abs(fast[k] - slow[k]));
      scale = std::max(scale, std::abs(slow[k]));
    }
    ok &= report("transform", d / scale, 1e-12);
  }
  if (all || which == "weights") {
    known = true;
    VelocityGrid grid(n, choose_domain(r));
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    double d = 0.0;
    for (double lambda : {0.0, 1.0}) {
      for (int s = 0; s < 50; ++s) {
        const auto xi = grid.frequency(pick(rng));
        const auto zeta = grid.frequency(pick(rng));
        const double ref = oracle::simpson_ghat(xi, zeta, lambda, grid.half_width(), 20000);
        d = std::max(d, std::abs(ghat_closed_form(xi, zeta, {lambda, 1.0}, grid.half_width()) - ref));
      }
    }
    ok &= report("weights", d, 1e-9);
  }
  if (all || which == "collision") {
    known = true;
    VelocityGrid grid(n, choose_domain(r));
    const auto table = precompute_table(grid, CollisionKernel{});
    auto f = [](const Vec3& v) {
      return 0.5 * gaussian(v, {0.8, 0.0, 0.0}, {1, 1, 1}) +
             0.5 * gaussian(v, {-0.8, 0.0, 0.0}, {1, 1, 1});
    };
    std::vector<double> fv(grid.size());
    for (std::size_t k = 0; k < fv.size(); ++k) fv[k] = f(grid.velocity(k));
    const auto q = collide(fv, grid, table);
    oracle::DirectCollisionOptions opt;
    opt.relative_speed_cutoff = grid.half_width();
    const auto ref = oracle::direct_collision(f, grid, 0.0, opt);
    ok &= report("collision", rel_l2(q, ref), 0.05);
  }
  if (all || which == "projection") {
    known = true;
    VelocityGrid grid(4, choose_domain(r));
    ConservationProjector proj(grid);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < ConservationProjector::kConstraints; ++i) {
      rows.emplace_back(proj.row(i).begin(), proj.row(i).end());
    }
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> x(grid.size());
    for (double& v : x) v = g(rng);
    const auto a = proj.project(x);
    const auto b = oracle::kkt_projection(x, rows);
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    ok &= report("projection", d, 1e-10);
  }
  if (!known) {
    spdlog::error("unknown oracle case '{}' (transform, weights, collision, projection, all)", which);
    return 2;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral Boltzmann solver"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* weights = app.add_subcommand("weights", "Weight table cache");
  weights->require_subcommand(1);
  auto* pre = weights->add_subcommand("precompute", "Compute and save a weight table");
  std::string pre_config, pre_out, storage = "auto";
  bool force_quadrature = false;
  pre->add_option("config", pre_config, "Run configuration")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", pre_out, "Output path (default: weights.cache)");
  pre->add_option("--storage", storage, "auto, dense or reduced")
      ->check(CLI::IsMember({"auto", "dense", "reduced"}));
  pre->add_flag("--force-quadrature", force_quadrature, "Use adaptive quadrature for every entry");

  auto* ver = weights->add_subcommand("verify", "Check a saved weight table");
  std::string ver_path, ver_config;
  int samples = 200;
  ver->add_option("file", ver_path, "Weight cache")->required()->check(CLI::ExistingFile);
  ver->add_option("--config", ver_config, "Also require a match with this configuration");
  ver->add_option("--samples", samples, "Entries recomputed by quadrature");

  auto* run_cmd = app.add_subcommand("run", "Run a simulation");
  std::string run_config;
  int workers = 1, cores = 1;
  run_cmd->add_option("config", run_config, "Run configuration")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--workers", workers, "Worker groups (cell ranges)")->check(CLI::PositiveNumber);
  run_cmd->add_option("--cores-per-worker", cores, "Cores per worker group")
      ->check(CLI::PositiveNumber);

  auto* scaling = app.add_subcommand("scaling", "Time Strang steps over worker/core counts");
  std::string sc_config, sc_workers = "1,2,4", sc_cores = "1", sc_out;
  int sc_steps = 1;
  scaling->add_option("config", sc_config, "Run configuration")->required()->check(CLI::ExistingFile);
  scaling->add_option("--workers", sc_workers, "Comma-separated worker counts");
  scaling->add_option("--cores-per-worker", sc_cores, "Comma-separated core counts");
  scaling->add_option("--steps", sc_steps, "Steps per measurement")->check(CLI::PositiveNumber);
  scaling->add_option("--out", sc_out, "CSV path (default: stdout)");

  auto* oracle_cmd = app.add_subcommand("oracle", "Compare fast paths with brute-force references");
  std::string which = "all";
  int oracle_n = 8;
  double oracle_r = 2.0;
  oracle_cmd->add_option("case", which, "transform, weights, collision, projection or all");
  oracle_cmd->add_option("--n", oracle_n, "Lattice size")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--R", oracle_r, "Support radius")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (pre->parsed()) return cmd_precompute(pre_config, pre_out, storage, force_quadrature);
    if (ver->parsed()) return cmd_verify(ver_path, ver_config, samples);
    if (run_cmd->parsed()) return cmd_run(run_config, workers, cores);
    if (scaling->parsed()) return cmd_scaling(sc_config, sc_workers, sc_cores, sc_steps, sc_out);
    if (oracle_cmd->parsed()) return cmd_oracle(which, oracle_n, oracle_r);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 2;
}
