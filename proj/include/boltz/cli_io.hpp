#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "boltz/solver.hpp"

namespace boltz {

/// Config problem; `line()` is 0 when the problem is not tied to one line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// Parses `section.key = value` lines (`#` starts a comment).
///
/// Required: grid.N, grid.R, kernel.lambda, time.t_final, space.cells,
/// bc.left, bc.right, init.kind, output.every, output.dir.
/// Optional with defaults: kernel.beta = 1, physics.epsilon = 1, time.cfl = 0.9,
/// time.dt, space.x0 = 0, init.rho = 1, init.velocity = 0,0,0, init.T = 1,
/// init.T2 = 2, init.fraction = 0.5, init.shift = 1, init.bkw_K = 0.65,
/// output.marginals = true, output.snapshots = false, weights.cache.
///
/// space.cells: `uniform:count,width`, `refined:count@width,count@width,...`
/// (segments left to right) or an explicit comma-separated width list.
/// bc.*: `wall:Tw` or `wall:Tw,vx,vy,vz`, `noflux`, `periodic`.
SolverConfig parse_config(const std::filesystem::path& path);
SolverConfig parse_config_text(std::string_view text, const std::string& source = "<config>");

/// Canonical text form; parse_config_text(format_config(c)) == c.
std::string format_config(const SolverConfig& config);
void write_config(const SolverConfig& config, const std::filesystem::path& path);

std::vector<double> parse_cells(std::string_view spec);

/// Replaces `path` with `content` via a temporary file and rename.
void atomic_write(const std::filesystem::path& path, std::string_view content);

struct MomentRow {
  std::size_t cell = 0;
  double x = 0.0;
  Moments m;
};
std::vector<MomentRow> moment_rows(const DistributionState& state);
/// CSV `t,cell,x,rho,vx,vy,vz,T`, 17 significant digits.
void write_moments(std::span<const MomentRow> rows, const std::filesystem::path& path);
std::vector<MomentRow> read_moments(const std::filesystem::path& path);

struct MarginalRow {
  double t = 0.0;
  std::size_t cell = 0;
  double x = 0.0;
  double v1 = 0.0;
  double g = 0.0;
};
std::vector<MarginalRow> marginal_rows(const DistributionState& state);
/// CSV `t,cell,x,v1,g` for one state.
void write_marginal(const DistributionState& state, const std::filesystem::path& path);
void write_marginals(std::span<const MarginalRow> rows, const std::filesystem::path& path);
std::vector<MarginalRow> read_marginals(const std::filesystem::path& path);

/// Full f dump: weight-cache header with magic "BLTZFSNP" and count =
/// cells * N^3, then the values as little-endian f64, cell-major.
void save_snapshot(const DistributionState& state, const CollisionKernel& kernel,
                   const std::filesystem::path& path);
struct Snapshot {
  BinaryHeader header;
  std::vector<double> values;
};
Snapshot load_snapshot(const std::filesystem::path& path);

struct RunManifest {
  std::string config_text;
  std::string version;
  std::uint32_t table_checksum = 0;
  RunSummary summary;
  std::vector<std::string> outputs;
};
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

/// Library version string.
std::string version_string();

}  // namespace boltz
