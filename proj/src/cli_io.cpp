#include "boltz/cli_io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#ifndef BOLTZ_VERSION
#define BOLTZ_VERSION "0.0.0"
#endif

namespace boltz {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Throws std::invalid_argument; callers add the line number.
double to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

long to_integer(std::string_view s) {
  s = trim(s);
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

bool to_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

Vec3 to_vec3(std::string_view s) {
  const auto parts = split(s, ',');
  if (parts.size() != 3) throw std::invalid_argument("expected three comma-separated numbers");
  return {to_double(parts[0]), to_double(parts[1]), to_double(parts[2])};
}

BoundaryCondition to_bc(std::string_view s) {
  s = trim(s);
  if (s == "noflux") return NoFluxBC{};
  if (s == "periodic") return PeriodicBC{};
  if (s.starts_with("wall:")) {
    const auto parts = split(s.substr(5), ',');
    WallBC w;
    w.temperature = to_double(parts[0]);
    if (parts.size() == 4) {
      w.velocity = {to_double(parts[1]), to_double(parts[2]), to_double(parts[3])};
    } else if (parts.size() != 1) {
      throw std::invalid_argument("wall takes Tw or Tw,vx,vy,vz");
    }
    w.validate();
    return w;
  }
  throw std::invalid_argument("unknown boundary '" + std::string(s) +
                              "' (expected wall:Tw[,vx,vy,vz], noflux or periodic)");
}

InitialKind to_kind(std::string_view s) {
  s = trim(s);
  if (s == "maxwellian") return InitialKind::maxwellian;
  if (s == "two_temperature") return InitialKind::two_temperature;
  if (s == "two_maxwellians") return InitialKind::two_maxwellians;
  if (s == "bkw") return InitialKind::bkw;
  throw std::invalid_argument("unknown init.kind '" + std::string(s) + "'");
}

const char* kind_name(InitialKind k) {
  switch (k) {
    case InitialKind::maxwellian: return "maxwellian";
    case InitialKind::two_temperature: return "two_temperature";
    case InitialKind::two_maxwellians: return "two_maxwellians";
    case InitialKind::bkw: return "bkw";
  }
  return "?";
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string bc_text(const BoundaryCondition& bc) {
  if (std::holds_alternative<NoFluxBC>(bc)) return "noflux";
  if (std::holds_alternative<PeriodicBC>(bc)) return "periodic";
  const auto& w = std::get<WallBC>(bc);
  return "wall:" + num(w.temperature) + "," + num(w.velocity[0]) + "," + num(w.velocity[1]) + "," +
         num(w.velocity[2]);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "grid.N",        "grid.R",          "kernel.lambda",  "kernel.beta",    "physics.epsilon",
      "time.t_final",  "time.cfl",        "time.dt",        "space.cells",    "space.x0",
      "bc.left",       "bc.right",        "init.kind",      "init.rho",       "init.velocity",
      "init.T",        "init.T2",         "init.fraction",  "init.shift",     "init.bkw_K",
      "output.every",  "output.dir",      "output.marginals", "output.snapshots",
      "weights.cache"};
  return keys;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  for (auto f : split(line, ',')) out.emplace_back(f);
  return out;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + what
                                  : source + ": " + what),
      line_(line) {}

std::vector<double> parse_cells(std::string_view spec) {
  spec = trim(spec);
  std::vector<double> widths;
  if (spec.starts_with("uniform:")) {
    const auto parts = split(spec.substr(8), ',');
    if (parts.size() != 2) throw std::invalid_argument("uniform takes count,width");
    const long count = to_integer(parts[0]);
    const double width = to_double(parts[1]);
    if (count < 1) throw std::invalid_argument("uniform cell count must be positive");
    widths.assign(static_cast<std::size_t>(count), width);
  } else if (spec.starts_with("refined:")) {
    for (auto seg : split(spec.substr(8), ',')) {
      const auto at = seg.find('@');
      if (at == std::string_view::npos) {
        throw std::invalid_argument("refined segments are count@width, got '" +
                                    std::string(seg) + "'");
      }
      const long count = to_integer(seg.substr(0, at));
      const double width = to_double(seg.substr(at + 1));
      if (count < 1) throw std::invalid_argument("segment cell count must be positive");
      widths.insert(widths.end(), static_cast<std::size_t>(count), width);
    }
  } else {
    for (auto w : split(spec, ',')) widths.push_back(to_double(w));
  }
  for (double w : widths) {
    if (!(w > 0.0)) throw std::invalid_argument("cell widths must be positive");
  }
  return widths;
}

SolverConfig parse_config_text(std::string_view text, const std::string& source) {
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> entries;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source, line_no, "expected 'section.key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!known_keys().contains(key)) throw ConfigError(source, line_no, "unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(source, line_no, "empty value for '" + key + "'");
    if (auto it = entries.find(key); it != entries.end()) {
      throw ConfigError(source, line_no,
                        "duplicate key '" + key + "' (first set on line " +
                            std::to_string(it->second.line) + ")");
    }
    entries.emplace(key, Entry{value, line_no});
    if (end == text.size()) break;
  }

  for (const char* key : {"grid.N", "grid.R", "kernel.lambda", "time.t_final", "space.cells",
                          "bc.left", "bc.right", "init.kind", "output.every", "output.dir"}) {
    if (!entries.contains(key)) {
      throw ConfigError(source, 0, std::string("missing required key '") + key + "'");
    }
  }

  SolverConfig c;
  auto with = [&](const std::string& key, auto&& apply) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    try {
      apply(it->second.value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source, it->second.line, key + ": " + e.what());
    }
  };
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
    return v;
  };

  with("grid.N", [&](const std::string& v) {
    const long n = to_integer(v);
    if (n < 4 || n % 2 != 0) throw std::invalid_argument("N must be even and at least 4");
    c.n = static_cast<int>(n);
  });
  with("grid.R", [&](const std::string& v) { c.support_radius = positive(to_double(v), "R"); });
  with("kernel.lambda", [&](const std::string& v) {
    c.kernel.lambda = to_double(v);
    if (!(c.kernel.lambda >= 0.0 && c.kernel.lambda <= 1.0)) {
      throw std::invalid_argument("lambda " + v + " is outside the supported range [0, 1]");
    }
  });
  with("kernel.beta", [&](const std::string& v) {
    c.kernel.beta = to_double(v);
    if (c.kernel.beta != 1.0) throw std::invalid_argument("only beta = 1 is supported");
  });
  with("physics.epsilon", [&](const std::string& v) { c.epsilon = positive(to_double(v), "epsilon"); });
  with("time.t_final", [&](const std::string& v) { c.t_final = positive(to_double(v), "t_final"); });
  with("time.cfl", [&](const std::string& v) {
    c.cfl = to_double(v);
    if (!(c.cfl > 0.0 && c.cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0, 1]");
  });
  with("time.dt", [&](const std::string& v) { c.dt = positive(to_double(v), "dt"); });
  with("space.cells", [&](const std::string& v) { c.cells = parse_cells(v); });
  with("space.x0", [&](const std::string& v) { c.x0 = to_double(v); });
  with("bc.left", [&](const std::string& v) { c.left = to_bc(v); });
  with("bc.right", [&](const std::string& v) { c.right = to_bc(v); });
  with("init.kind", [&](const std::string& v) { c.init.kind = to_kind(v); });
  with("init.rho", [&](const std::string& v) { c.init.rho = positive(to_double(v), "rho"); });
  with("init.velocity", [&](const std::string& v) { c.init.velocity = to_vec3(v); });
  with("init.T", [&](const std::string& v) { c.init.temperature = positive(to_double(v), "T"); });
  with("init.T2", [&](const std::string& v) { c.init.temperature2 = positive(to_double(v), "T2"); });
  with("init.fraction", [&](const std::string& v) {
    c.init.fraction = to_double(v);
    if (!(c.init.fraction >= 0.0 && c.init.fraction <= 1.0)) {
      throw std::invalid_argument("fraction must lie in [0, 1]");
    }
  });
  with("init.shift", [&](const std::string& v) { c.init.shift = to_double(v); });
  with("init.bkw_K", [&](const std::string& v) {
    c.init.bkw_k = to_double(v);
    if (!(c.init.bkw_k >= 0.6 && c.init.bkw_k < 1.0)) {
      throw std::invalid_argument("bkw_K must lie in [0.6, 1)");
    }
  });
  with("output.every", [&](const std::string& v) { c.output.every = positive(to_double(v), "every"); });
  with("output.dir", [&](const std::string& v) { c.output.dir = v; });
  with("output.marginals", [&](const std::string& v) { c.output.marginals = to_bool(v); });
  with("output.snapshots", [&](const std::string& v) { c.output.snapshots = to_bool(v); });
  with("weights.cache", [&](const std::string& v) { c.weights_cache = v; });

  if (std::holds_alternative<PeriodicBC>(c.left) != std::holds_alternative<PeriodicBC>(c.right)) {
    throw ConfigError(source, entries.at("bc.right").line,
                      "periodic boundaries must be set on both sides");
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, 0, e.what());
  }
  return c;
}

SolverConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

std::string format_config(const SolverConfig& c) {
  std::ostringstream s;
  s << "grid.N = " << c.n << "\n";
  s << "grid.R = " << num(c.support_radius) << "\n";
  s << "kernel.lambda = " << num(c.kernel.lambda) << "\n";
  s << "kernel.beta = " << num(c.kernel.beta) << "\n";
  s << "physics.epsilon = " << num(c.epsilon) << "\n";
  s << "time.t_final = " << num(c.t_final) << "\n";
  s << "time.cfl = " << num(c.cfl) << "\n";
  if (c.dt) s << "time.dt = " << num(*c.dt) << "\n";
  s << "space.cells = ";
  for (std::size_t j = 0; j < c.cells.size(); ++j) s << (j ? "," : "") << num(c.cells[j]);
  s << "\n";
  s << "space.x0 = " << num(c.x0) << "\n";
  s << "bc.left = " << bc_text(c.left) << "\n";
  s << "bc.right = " << bc_text(c.right) << "\n";
  s << "init.kind = " << kind_name(c.init.kind) << "\n";
  s << "init.rho = " << num(c.init.rho) << "\n";
  s << "init.velocity = " << num(c.init.velocity[0]) << "," << num(c.init.velocity[1]) << ","
    << num(c.init.velocity[2]) << "\n";
  s << "init.T = " << num(c.init.temperature) << "\n";
  s << "init.T2 = " << num(c.init.temperature2) << "\n";
  s << "init.fraction = " << num(c.init.fraction) << "\n";
  s << "init.shift = " << num(c.init.shift) << "\n";
  s << "init.bkw_K = " << num(c.init.bkw_k) << "\n";
  s << "output.every = " << num(c.output.every) << "\n";
  s << "output.dir = " << c.output.dir << "\n";
  s << "output.marginals = " << (c.output.marginals ? "true" : "false") << "\n";
  s << "output.snapshots = " << (c.output.snapshots ? "true" : "false") << "\n";
  if (!c.weights_cache.empty()) s << "weights.cache = " << c.weights_cache << "\n";
  return s.str();
}

void write_config(const SolverConfig& config, const std::filesystem::path& path) {
  atomic_write(path, format_config(config));
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<MomentRow> moment_rows(const DistributionState& state) {
  const auto m = compute_moments(state);
  std::vector<MomentRow> rows;
  rows.reserve(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) rows.push_back({j, state.mesh().center(j), m[j]});
  return rows;
}

void write_moments(std::span<const MomentRow> rows, const std::filesystem::path& path) {
  std::ostringstream s;
  s << std::setprecision(17) << "t,cell,x,rho,vx,vy,vz,T\n";
  for (const auto& r : rows) {
    s << r.m.time << ',' << r.cell << ',' << r.x << ',' << r.m.rho << ',' << r.m.velocity[0] << ','
      << r.m.velocity[1] << ',' << r.m.velocity[2] << ',' << r.m.temperature << '\n';
  }
  atomic_write(path, s.str());
}

std::vector<MomentRow> read_moments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (trim(line) != "t,cell,x,rho,vx,vy,vz,T") {
    throw std::runtime_error(path.string() + ": unexpected moments header");
  }
  std::vector<MomentRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = csv_fields(line);
    if (f.size() != 8) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    }
    MomentRow r;
    r.m.time = to_double(f[0]);
    r.cell = static_cast<std::size_t>(to_integer(f[1]));
    r.x = to_double(f[2]);
    r.m.rho = to_double(f[3]);
    r.m.velocity = {to_double(f[4]), to_double(f[5]), to_double(f[6])};
    r.m.temperature = to_double(f[7]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<MarginalRow> marginal_rows(const DistributionState& state) {
  const auto& grid = state.grid();
  std::vector<MarginalRow> rows;
  rows.reserve(state.cells() * static_cast<std::size_t>(grid.n()));
  for (std::size_t j = 0; j < state.cells(); ++j) {
    const auto g = marginal(state.cell(j), grid);
    for (int k = 0; k < grid.n(); ++k) {
      rows.push_back({state.time, j, state.mesh().center(j), grid.node(k),
                      g[static_cast<std::size_t>(k)]});
    }
  }
  return rows;
}

void write_marginals(std::span<const MarginalRow> rows, const std::filesystem::path& path) {
  std::ostringstream s;
  s << std::setprecision(17) << "t,cell,x,v1,g\n";
  for (const auto& r : rows) {
    s << r.t << ',' << r.cell << ',' << r.x << ',' << r.v1 << ',' << r.g << '\n';
  }
  atomic_write(path, s.str());
}

void write_marginal(const DistributionState& state, const std::filesystem::path& path) {
  write_marginals(marginal_rows(state), path);
}

std::vector<MarginalRow> read_marginals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (trim(line) != "t,cell,x,v1,g") {
    throw std::runtime_error(path.string() + ": unexpected marginal header");
  }
  std::vector<MarginalRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = csv_fields(line);
    if (f.size() != 5) throw std::runtime_error(path.string() + ": expected 5 fields");
    rows.push_back({to_double(f[0]), static_cast<std::size_t>(to_integer(f[1])), to_double(f[2]),
                    to_double(f[3]), to_double(f[4])});
  }
  return rows;
}

void save_snapshot(const DistributionState& state, const CollisionKernel& kernel,
                   const std::filesystem::path& path) {
  std::ostringstream out(std::ios::binary);
  BinaryHeader h;
  std::memcpy(h.magic, "BLTZFSNP", 8);
  h.n = static_cast<std::uint32_t>(state.grid().n());
  h.half_width = state.grid().half_width();
  h.lambda = kernel.lambda;
  h.beta = kernel.beta;
  h.rule = 0;
  h.count = state.data().size();
  write_binary_header(out, h);
  out.write(reinterpret_cast<const char*>(state.data().data()),
            static_cast<std::streamsize>(state.data().size_bytes()));
  atomic_write(path, out.str());
}

Snapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError("cannot open snapshot " + path.string());
  Snapshot s;
  s.header = read_binary_header(in, "BLTZFSNP");
  const std::uint64_t m = static_cast<std::uint64_t>(s.header.n) * s.header.n * s.header.n;
  if (m == 0 || s.header.count % m != 0) {
    throw WeightFormatError("snapshot count is not a multiple of N^3");
  }
  s.values.resize(s.header.count);
  const auto bytes = static_cast<std::streamsize>(s.header.count * sizeof(double));
  in.read(reinterpret_cast<char*>(s.values.data()), bytes);
  if (in.gcount() != bytes) throw WeightTruncatedError("snapshot truncated: " + path.string());
  return s;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  for (const auto& o : manifest.outputs) {
    if (!std::filesystem::exists(o)) throw std::runtime_error("manifest output missing: " + o);
  }
  const auto& s = manifest.summary;
  nlohmann::json j;
  j["config"] = manifest.config_text;
  j["version"] = manifest.version;
  j["weight_checksum"] = manifest.table_checksum;
  j["timing"] = {{"wall_seconds", s.wall_seconds},
                 {"table_seconds", s.table_seconds},
                 {"steps", s.steps},
                 {"dt", s.dt}};
  j["drift"] = {{"mass", s.max_drift.mass},
                {"momentum", s.max_drift.momentum},
                {"energy", s.max_drift.energy}};
  j["min_f"] = s.min_f;
  j["max_shell_fraction"] = s.max_shell_fraction;
  j["conservation_ok"] = s.conservation_ok;
  j["outputs"] = manifest.outputs;
  atomic_write(path, j.dump(2) + "\n");
}

std::string version_string() { return BOLTZ_VERSION; }

}  // namespace boltz
