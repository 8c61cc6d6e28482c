#include "conslaw/output.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <ctime>
#include <fstream>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "conslaw/error.hpp"
#include "conslaw/expr.hpp"

#ifndef CONSLAW_GIT_REVISION
#define CONSLAW_GIT_REVISION "unknown"
#endif
#ifndef CONSLAW_VERSION
#define CONSLAW_VERSION "0.0.0"
#endif

namespace conslaw {

namespace fs = std::filesystem;

namespace {

std::string join_doubles(const double* v, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? " " : "") + format_double(v[i]);
  return out;
}

std::string join_ints(const int* v, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? " " : "") + std::to_string(v[i]);
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& s) {
  std::vector<T> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) {
    T v{};
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
      throw IoError("snapshot header: bad value for '" + key + "': '" + s + "'");
    out.push_back(v);
  }
  return out;
}

void ensure_parent(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
}

std::string header_block(const OutputHeader& h) {
  std::string out;
  for (const auto& [k, v] : h.lines()) out += k + ": " + v + "\n";
  return out;
}

std::string cell_label(const Index3& c) {
  return std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]);
}

}  // namespace

std::string tool_version() { return CONSLAW_VERSION; }
std::string source_revision() { return CONSLAW_GIT_REVISION; }

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

OutputHeader OutputHeader::make(const std::string& config_digest) {
  OutputHeader h;
  h.tool_version = conslaw::tool_version();
  h.revision = source_revision();
  h.config_digest = config_digest;
  h.created = utc_timestamp();
  return h;
}

std::vector<std::pair<std::string, std::string>> OutputHeader::lines() const {
  std::vector<std::pair<std::string, std::string>> out{
      {"tool_version", tool_version}, {"revision", revision}, {"config_digest", config_digest}};
  if (seed) out.emplace_back("seed", std::to_string(*seed));
  if (sample) out.emplace_back("sample", std::to_string(*sample));
  if (level) out.emplace_back("level", std::to_string(*level));
  out.emplace_back("created", created);
  for (const auto& kv : extra) out.push_back(kv);
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_snapshot(const fs::path& path, const Field& field, const OutputHeader& header, double t,
                    const std::vector<std::string>& components) {
  if (static_cast<int>(components.size()) != field.ncomp())
    throw IoError("snapshot: " + std::to_string(components.size()) + " component names for " +
                  std::to_string(field.ncomp()) + " components");
  const GridSpec& g = field.grid();
  const std::vector<double> values = field.interior_values();
  std::string text = "format: conslaw-snapshot\nformat_version: " + std::to_string(kSnapshotFormatVersion) + "\n";
  text += header_block(header);
  std::string names;
  for (const auto& c : components) names += (names.empty() ? "" : " ") + c;
  text += "time: " + format_double(t) + "\n";
  text += "dim: " + std::to_string(g.dim) + "\n";
  text += "cells: " + join_ints(g.cells.data(), 3) + "\n";
  text += "origin: " + join_doubles(g.origin.data(), 3) + "\n";
  text += "extent: " + join_doubles(g.extent.data(), 3) + "\n";
  text += "ghost_width: " + std::to_string(g.ghost_width) + "\n";
  text += "components: " + names + "\n";
  text += "dtype: float64-le\n";
  text += "count: " + std::to_string(values.size()) + "\n\n";

  std::string payload(values.size() * sizeof(double), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(values[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    std::memcpy(payload.data() + i * sizeof(double), &bits, sizeof bits);
  }
  write_text_file(path, text + payload);
}

Snapshot read_snapshot(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  const auto end = data.find("\n\n");
  if (end == std::string::npos) throw IoError(path.string() + ": header is not terminated by a blank line");

  std::vector<std::pair<std::string, std::string>> entries;
  std::map<std::string, std::string> kv;
  std::istringstream hs(data.substr(0, end + 1));
  std::string line;
  while (std::getline(hs, line)) {
    const auto colon = line.find(": ");
    if (colon == std::string::npos) throw IoError(path.string() + ": corrupt header line '" + line + "'");
    const std::string key = line.substr(0, colon), value = line.substr(colon + 2);
    if (kv.count(key)) throw IoError(path.string() + ": duplicate header key '" + key + "'");
    kv[key] = value;
    entries.emplace_back(key, value);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError(path.string() + ": header missing '" + key + "'");
    return it->second;
  };
  if (need("format") != "conslaw-snapshot") throw IoError(path.string() + ": not a conslaw snapshot");
  if (need("format_version") != std::to_string(kSnapshotFormatVersion))
    throw IoError(path.string() + ": unsupported format_version " + need("format_version") +
                  " (this build reads " + std::to_string(kSnapshotFormatVersion) + ")");
  if (need("dtype") != "float64-le") throw IoError(path.string() + ": unsupported dtype " + need("dtype"));

  Snapshot s;
  s.header.tool_version = need("tool_version");
  s.header.revision = need("revision");
  s.header.config_digest = need("config_digest");
  s.header.created = need("created");
  if (kv.count("seed")) s.header.seed = parse_list<std::uint64_t>("seed", kv["seed"]).at(0);
  if (kv.count("sample")) s.header.sample = parse_list<std::uint64_t>("sample", kv["sample"]).at(0);
  if (kv.count("level")) s.header.level = parse_list<int>("level", kv["level"]).at(0);

  static const std::set<std::string> standard{
      "format", "format_version", "tool_version", "revision", "config_digest", "seed", "sample",
      "level", "created", "time", "dim", "cells", "origin", "extent", "ghost_width",
      "components", "dtype", "count"};
  for (const auto& [k, v] : entries)
    if (!standard.count(k)) s.header.extra.emplace_back(k, v);

  const auto tv = parse_list<double>("time", need("time"));
  const auto dim = parse_list<int>("dim", need("dim"));
  const auto cells = parse_list<int>("cells", need("cells"));
  const auto origin = parse_list<double>("origin", need("origin"));
  const auto extent = parse_list<double>("extent", need("extent"));
  const auto ghost = parse_list<int>("ghost_width", need("ghost_width"));
  const auto count = parse_list<std::size_t>("count", need("count"));
  if (tv.size() != 1 || dim.size() != 1 || cells.size() != 3 || origin.size() != 3 ||
      extent.size() != 3 || ghost.size() != 1 || count.size() != 1)
    throw IoError(path.string() + ": malformed grid description in header");
  std::istringstream cs(need("components"));
  for (std::string c; cs >> c;) s.components.push_back(c);
  s.t = tv[0];

  GridSpec g;
  try {
    g = GridSpec::uniform(dim[0], {cells[0], cells[1], cells[2]}, {origin[0], origin[1], origin[2]},
                          {extent[0], extent[1], extent[2]}, ghost[0]);
    g.validate();
  } catch (const ConfigError& e) {
    throw IoError(path.string() + ": invalid grid in header: " + e.what());
  }
  const std::size_t expected = g.interior_count() * s.components.size();
  if (count[0] != expected)
    throw IoError(path.string() + ": header count " + std::to_string(count[0]) +
                  " does not match grid and components (" + std::to_string(expected) + ")");
  const std::size_t bytes = data.size() - (end + 2);
  if (bytes != expected * sizeof(double))
    throw IoError(path.string() + ": expected " + std::to_string(expected) + " floats, found " +
                  std::to_string(bytes / sizeof(double)) +
                  (bytes % sizeof(double) ? " and a partial value" : ""));

  std::vector<double> values(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, data.data() + end + 2 + i * sizeof(double), sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    values[i] = std::bit_cast<double>(bits);
  }
  s.field = Field(g, static_cast<int>(s.components.size()), 0.0);
  s.field.set_interior_values(values);
  return s;
}

std::string csv_header_comment(const OutputHeader& header) {
  std::string out;
  for (const auto& [k, v] : header.lines()) out += "# " + k + ": " + v + "\n";
  return out;
}

void write_field_csv(const fs::path& path, const Field& field, const OutputHeader& header, double t,
                     const std::vector<std::string>& components) {
  const GridSpec& g = field.grid();
  std::string text = csv_header_comment(header) + "# time: " + format_double(t) + "\n";
  const char* axes[] = {"x", "y", "z"};
  for (int a = 0; a < g.dim; ++a) text += std::string(a ? "," : "") + axes[a];
  for (const auto& c : components) text += "," + c;
  text += "\n";
  for_each_interior(g, [&](const Index3& i) {
    const Point3 x = cell_center(g, i);
    for (int a = 0; a < g.dim; ++a) text += (a ? "," : "") + format_double(x[static_cast<std::size_t>(a)]);
    for (int c = 0; c < field.ncomp(); ++c) text += "," + format_double(field.at(c, i));
    text += "\n";
  });
  write_text_file(path, text);
}

std::vector<fs::path> write_stats(const UqResult& result, const OutputHeader& header,
                                  const fs::path& directory, const std::vector<FunctionalSpec>& specs,
                                  const std::vector<std::string>& components) {
  std::vector<fs::path> written;
  for (std::size_t t = 0; t < result.times.size(); ++t) {
    const TimeEstimate& te = result.times[t];
    if (te.functionals.size() != specs.size()) throw IoError("functional count mismatch in write_stats");
    for (std::size_t f = 0; f < specs.size(); ++f) {
      OutputHeader h = header;
      h.extra.emplace_back("functional", specs[f].name);
      h.extra.emplace_back("samples", std::to_string(result.samples));
      const std::string stem = specs[f].name + "_";
      const std::string suffix = "_t" + std::to_string(t);
      const Accumulator& acc = te.functionals[f];
      if (const auto* m = std::get_if<MomentAccumulator>(&acc)) {
        OutputHeader hm = h, hv = h;
        hm.extra.emplace_back("statistic", "mean");
        hv.extra.emplace_back("statistic", "variance");
        written.push_back(directory / (stem + "mean" + suffix + ".snap"));
        write_snapshot(written.back(), m->mean(), hm, te.t, components);
        written.push_back(directory / (stem + "variance" + suffix + ".snap"));
        write_snapshot(written.back(), m->variance(), hv, te.t, components);
      } else if (const auto* hist = std::get_if<Histogram>(&acc)) {
        h.extra.emplace_back("component", components.at(static_cast<std::size_t>(hist->component())));
        std::string text = csv_header_comment(h) + "# time: " + format_double(te.t) + "\n";
        text += "probe,i,j,k,bin_lo,bin_hi,count\n";
        for (std::size_t p = 0; p < hist->probes().size(); ++p) {
          const auto counts = hist->counts(p);
          for (int b = 0; b < hist->bins() + 2; ++b) {
            const double lo = b == 0 ? -INFINITY : hist->bin_edge(b - 1);
            const double hi = b == hist->bins() + 1 ? INFINITY : hist->bin_edge(b);
            text += std::to_string(p) + "," + cell_label(hist->probes()[p]) + "," + format_double(lo) +
                    "," + format_double(hi) + "," + std::to_string(counts[static_cast<std::size_t>(b)]) + "\n";
          }
        }
        written.push_back(directory / (specs[f].name + suffix + ".csv"));
        write_text_file(written.back(), text);
      } else {
        const auto& sf = std::get<StructureFunctionAccumulator>(acc);
        h.extra.emplace_back("component", components.at(static_cast<std::size_t>(sf.component())));
        h.extra.emplace_back("exponent", format_double(sf.p()));
        std::string text = csv_header_comment(h) + "# time: " + format_double(te.t) + "\n";
        text += "h,value\n";
        const auto v = sf.values();
        for (std::size_t k = 0; k < v.size(); ++k) text += std::to_string(k) + "," + format_double(v[k]) + "\n";
        written.push_back(directory / (specs[f].name + suffix + ".csv"));
        write_text_file(written.back(), text);
      }
    }
  }
  return written;
}

std::vector<fs::path> write_stats(const MlmcResult& result, const OutputHeader& header,
                                  const fs::path& directory, const std::vector<std::string>& components) {
  std::vector<fs::path> written;
  for (std::size_t t = 0; t < result.times.size(); ++t) {
    const MlmcEstimate& e = result.times[t];
    OutputHeader h = header;
    h.extra.emplace_back("functional", "moments");
    h.extra.emplace_back("estimator", "mlmc");
    std::string counts;
    for (const auto& l : e.levels) counts += (counts.empty() ? "" : " ") + std::to_string(l.count());
    h.extra.emplace_back("level_samples", counts);
    h.extra.emplace_back("max_correction", format_double(e.max_correction()));
    OutputHeader hm = h, hv = h;
    hm.extra.emplace_back("statistic", "mean");
    hv.extra.emplace_back("statistic", "variance");
    const std::string suffix = "_t" + std::to_string(t) + ".snap";
    written.push_back(directory / ("moments_mean" + suffix));
    write_snapshot(written.back(), e.mean(), hm, e.t, components);
    written.push_back(directory / ("moments_variance" + suffix));
    write_snapshot(written.back(), e.variance(), hv, e.t, components);
  }
  return written;
}

}  // namespace conslaw
