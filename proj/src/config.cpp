#include "conslaw/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "conslaw/error.hpp"
#include "conslaw/parallel.hpp"

namespace conslaw {

namespace {

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
  int key_col = 1;
  int value_col = 1;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  return out;
}

class Reader {
 public:
  Reader(std::string_view text, std::string source) : source_(std::move(source)) { lex(text); }

  [[noreturn]] void fail(int line, int col, const std::string& what) const {
    throw ConfigError(source_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
  [[noreturn]] void fail(const Entry& e, const std::string& what) const {
    fail(e.line, e.value_col, "key '" + e.key + "': " + what);
  }
  [[noreturn]] void fail_section(const std::string& section, const std::string& what) const {
    const auto it = section_line_.find(section);
    fail(it == section_line_.end() ? 1 : it->second, 1, "[" + section + "]: " + what);
  }

  bool has_section(const std::string& s) const { return section_line_.count(s) > 0; }
  const std::vector<Entry>& entries() const { return entries_; }

  const Entry* find(const std::string& section, const std::string& key) const {
    for (const Entry& e : entries_)
      if (e.section == section && e.key == key) return &e;
    return nullptr;
  }
  const Entry& require(const std::string& section, const std::string& key) const {
    if (const Entry* e = find(section, key)) return *e;
    fail_section(section, "missing required key '" + key + "'");
  }

  void allow_keys(const std::string& section, const std::set<std::string>& keys) const {
    for (const Entry& e : entries_)
      if (e.section == section && !keys.count(e.key))
        fail(e.line, e.key_col, "unknown key '" + e.key + "' in [" + section + "]");
  }

  double to_double(const Entry& e, const std::string& s) const {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
      fail(e, "expected a number, got '" + s + "'");
    return v;
  }
  long long to_int(const Entry& e, const std::string& s) const {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
      fail(e, "expected an integer, got '" + s + "'");
    return v;
  }

  double get_double(const Entry& e) const { return to_double(e, e.value); }
  long long get_int(const Entry& e) const { return to_int(e, e.value); }
  std::vector<double> get_doubles(const Entry& e) const {
    std::vector<double> out;
    for (const auto& p : split(e.value, ',')) out.push_back(to_double(e, p));
    return out;
  }
  std::vector<long long> get_ints(const Entry& e) const {
    std::vector<long long> out;
    for (const auto& p : split(e.value, ',')) out.push_back(to_int(e, p));
    return out;
  }
  std::string get_choice(const Entry& e, const std::vector<std::string>& choices) const {
    const std::string v = lower(e.value);
    if (std::find(choices.begin(), choices.end(), v) != choices.end()) return v;
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    fail(e, "expected one of {" + list + "}, got '" + e.value + "'");
  }

 private:
  void lex(std::string_view text) {
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view raw = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
      if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
      const std::string line = trim(raw);
      if (line.empty()) {
        if (nl == text.size()) break;
        continue;
      }
      const int indent = static_cast<int>(raw.find_first_not_of(" \t")) + 1;
      if (line.front() == '[') {
        if (line.back() != ']') fail(line_no, indent, "malformed section header");
        section = lower(trim(std::string_view(line).substr(1, line.size() - 2)));
        static const std::set<std::string> known{"grid", "scheme", "initial", "parallel", "uq", "output"};
        if (!known.count(section)) fail(line_no, indent, "unknown section [" + section + "]");
        if (section_line_.count(section)) fail(line_no, indent, "duplicate section [" + section + "]");
        section_line_[section] = line_no;
      } else {
        const auto eq = raw.find('=');
        if (eq == std::string_view::npos) fail(line_no, indent, "expected 'key = value'");
        if (section.empty()) fail(line_no, indent, "key outside of any section");
        Entry e;
        e.section = section;
        e.key = trim(raw.substr(0, eq));
        e.value = trim(raw.substr(eq + 1));
        e.line = line_no;
        e.key_col = indent;
        const auto vstart = raw.find_first_not_of(" \t", eq + 1);
        e.value_col = static_cast<int>(vstart == std::string_view::npos ? eq + 1 : vstart) + 1;
        if (e.key.empty()) fail(line_no, indent, "empty key");
        if (find(section, e.key)) fail(line_no, indent, "duplicate key '" + e.key + "'");
        entries_.push_back(std::move(e));
      }
      if (nl == text.size()) break;
    }
  }

  std::string source_;
  std::vector<Entry> entries_;
  std::map<std::string, int> section_line_;
};

bool is_word(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::string canonical_value(std::string_view v) {
  std::string out;
  const std::string t = trim(v);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isspace(static_cast<unsigned char>(t[i]))) {
      out += t[i];
      continue;
    }
    std::size_t j = i;
    while (j < t.size() && std::isspace(static_cast<unsigned char>(t[j]))) ++j;
    if (!out.empty() && j < t.size() && is_word(out.back()) && is_word(t[j])) out += ' ';
    i = j - 1;
  }
  return out;
}

int component_index(const Reader& rd, const Entry& e, const EquationModel& model) {
  const auto names = model.component_names();
  for (std::size_t c = 0; c < names.size(); ++c)
    if (names[c] == e.value) return static_cast<int>(c);
  const long long v = rd.get_int(e);
  if (v < 0 || v >= model.ncomp()) rd.fail(e, "component out of range");
  return static_cast<int>(v);
}

Index3 probe_cell(const GridSpec& g, const std::vector<double>& p) {
  Index3 c{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) {
    const double f = (p[static_cast<std::size_t>(a)] - g.origin[a]) / g.cell_size(a);
    c[a] = std::clamp(static_cast<int>(std::floor(f)), 0, g.cells[a] - 1);
  }
  return c;
}

void parse_grid(const Reader& rd, RunConfig& cfg) {
  rd.allow_keys("grid", {"dim", "cells", "origin", "extent", "ghost_width"});
  const Entry& dim_e = rd.require("grid", "dim");
  const long long dim = rd.get_int(dim_e);
  if (dim < 1 || dim > 3) rd.fail(dim_e, "dim must be 1, 2 or 3");
  const int d = static_cast<int>(dim);

  auto per_axis = [&](const Entry& e, auto values, auto fallback) {
    using T = typename decltype(values)::value_type;
    if (values.size() == 1) values.resize(static_cast<std::size_t>(d), values[0]);
    if (static_cast<int>(values.size()) != d)
      rd.fail(e, "expected " + std::to_string(d) + " comma-separated values");
    std::array<T, 3> out{fallback, fallback, fallback};
    for (int a = 0; a < d; ++a) out[static_cast<std::size_t>(a)] = values[static_cast<std::size_t>(a)];
    return out;
  };

  const Entry& cells_e = rd.require("grid", "cells");
  const auto cells = per_axis(cells_e, rd.get_ints(cells_e), 1LL);
  Index3 ci{1, 1, 1};
  for (int a = 0; a < 3; ++a) {
    if (cells[a] < 1 || cells[a] > (1 << 24)) rd.fail(cells_e, "cell counts must be in [1, 2^24]");
    ci[a] = static_cast<int>(cells[a]);
  }
  Point3 origin{0, 0, 0}, extent{1, 1, 1};
  if (const Entry* e = rd.find("grid", "origin")) origin = per_axis(*e, rd.get_doubles(*e), 0.0);
  if (const Entry* e = rd.find("grid", "extent")) extent = per_axis(*e, rd.get_doubles(*e), 1.0);
  int ghost = 2;
  if (const Entry* e = rd.find("grid", "ghost_width")) {
    const long long g = rd.get_int(*e);
    if (g < 1 || g > 8) rd.fail(*e, "ghost_width must be in [1, 8]");
    ghost = static_cast<int>(g);
  }
  try {
    cfg.grid = GridSpec::uniform(d, ci, origin, extent, ghost);
    cfg.grid.validate();
  } catch (const ConfigError& err) {
    rd.fail_section("grid", err.what());
  }
}

void parse_scheme(const Reader& rd, RunConfig& cfg) {
  rd.allow_keys("scheme", {"equation", "gamma", "velocity", "flux", "reconstruction", "rk_order",
                           "cfl", "t_end", "boundary", "max_steps"});
  const int dim = cfg.grid.dim;
  SchemeConfig& s = cfg.scheme;

  const Entry& eq = rd.require("scheme", "equation");
  const std::string kind = rd.get_choice(eq, {"euler", "burgers", "advection"});
  const Entry* gamma_e = rd.find("scheme", "gamma");
  const Entry* vel_e = rd.find("scheme", "velocity");
  if (gamma_e && kind != "euler") rd.fail(*gamma_e, "only valid for equation = euler");
  if (vel_e && kind != "advection") rd.fail(*vel_e, "only valid for equation = advection");
  if (kind == "euler") {
    s.model = EquationModel::euler(dim, gamma_e ? rd.get_double(*gamma_e) : 1.4);
  } else if (kind == "burgers") {
    s.model = EquationModel::burgers(dim);
  } else {
    Point3 v{1.0, 0.0, 0.0};
    if (vel_e) {
      const auto vals = rd.get_doubles(*vel_e);
      if (static_cast<int>(vals.size()) != dim) rd.fail(*vel_e, "expected one velocity per axis");
      v = {0, 0, 0};
      for (int a = 0; a < dim; ++a) v[static_cast<std::size_t>(a)] = vals[static_cast<std::size_t>(a)];
    }
    s.model = EquationModel::advection(dim, v);
  }
  try {
    s.model.validate();
  } catch (const ConfigError& err) {
    rd.fail(gamma_e ? *gamma_e : eq, err.what());
  }

  if (const Entry* e = rd.find("scheme", "flux")) {
    s.flux = rd.get_choice(*e, {"rusanov", "hllc"}) == "hllc" ? FluxKind::HLLC : FluxKind::Rusanov;
    try {
      check_flux_compatible(s.flux, s.model);
    } catch (const ConfigError& err) {
      rd.fail(*e, err.what());
    }
  }
  s.recon = {ReconstructionType::WENO3};
  if (const Entry* e = rd.find("scheme", "reconstruction")) {
    const std::string r = rd.get_choice(*e, {"none", "weno2", "weno3"});
    s.recon.type = r == "none" ? ReconstructionType::None
                   : r == "weno2" ? ReconstructionType::WENO2
                                  : ReconstructionType::WENO3;
    if (s.recon.radius() > cfg.grid.ghost_width)
      rd.fail(*e, "needs ghost_width >= " + std::to_string(s.recon.radius()));
  }
  if (const Entry* e = rd.find("scheme", "rk_order")) {
    const long long o = rd.get_int(*e);
    if (o < 1 || o > 3) rd.fail(*e, "rk_order must be 1, 2 or 3");
    s.rk_order = static_cast<int>(o);
  }
  if (const Entry* e = rd.find("scheme", "cfl")) {
    s.cfl = rd.get_double(*e);
    if (!(s.cfl > 0.0 && s.cfl <= 1.0)) rd.fail(*e, "cfl must lie in (0, 1]");
  }
  const Entry& t_e = rd.require("scheme", "t_end");
  s.t_end = rd.get_double(t_e);
  if (!(s.t_end >= 0.0)) rd.fail(t_e, "t_end must be >= 0");
  s.bc = {BoundaryKind::Periodic, BoundaryKind::Periodic, BoundaryKind::Periodic};
  if (const Entry* e = rd.find("scheme", "boundary")) {
    const auto parts = split(e->value, ',');
    if (parts.size() != 1 && static_cast<int>(parts.size()) != dim)
      rd.fail(*e, "expected one boundary kind or one per axis");
    for (int a = 0; a < dim; ++a) {
      const std::string b = lower(parts[parts.size() == 1 ? 0 : static_cast<std::size_t>(a)]);
      if (b != "periodic" && b != "outflow")
        rd.fail(*e, "expected periodic or outflow, got '" + b + "'");
      s.bc[static_cast<std::size_t>(a)] = b == "periodic" ? BoundaryKind::Periodic : BoundaryKind::Outflow;
    }
  }
  if (const Entry* e = rd.find("scheme", "max_steps")) {
    const long long n = rd.get_int(*e);
    if (n < 0) rd.fail(*e, "max_steps must be >= 0");
    cfg.max_steps = static_cast<std::size_t>(n);
  }
  try {
    s.validate(cfg.grid);
  } catch (const ConfigError& err) {
    rd.fail_section("scheme", err.what());
  }
}

void parse_uq(const Reader& rd, RunConfig& cfg) {
  rd.allow_keys("uq", {"method", "samples", "seed", "stochastic_dim", "levels", "level_samples",
                       "workers", "functionals", "histogram_probes", "histogram_range",
                       "histogram_bins", "histogram_component", "structure_exponent",
                       "structure_max_offset", "structure_component"});
  UqSection& u = cfg.uq;
  u.present = rd.has_section("uq");
  if (const Entry* e = rd.find("uq", "seed")) {
    const long long s = rd.get_int(*e);
    if (s < 0) rd.fail(*e, "seed must be >= 0");
    u.seed = static_cast<std::uint64_t>(s);
  }
  if (const Entry* e = rd.find("uq", "stochastic_dim")) {
    const long long d = rd.get_int(*e);
    if (d < 0 || d > 256) rd.fail(*e, "stochastic_dim must be in [0, 256]");
    u.stochastic_dim = static_cast<int>(d);
  }
  if (!u.present) return;

  if (const Entry* e = rd.find("uq", "method"))
    u.method = rd.get_choice(*e, {"mc", "qmc"}) == "qmc" ? SamplingMethod::QMC : SamplingMethod::MC;
  if (const Entry* e = rd.find("uq", "workers")) {
    const long long w = rd.get_int(*e);
    if (w < 1 || w > 1024) rd.fail(*e, "workers must be in [1, 1024]");
    u.workers = static_cast<int>(w);
  }
  if (const Entry* e = rd.find("uq", "levels")) {
    const long long l = rd.get_int(*e);
    if (l < 1 || l > 16) rd.fail(*e, "levels must be in [1, 16]");
    u.levels = static_cast<int>(l);
  }
  if (u.levels == 1) {
    const Entry& m = rd.require("uq", "samples");
    const long long M = rd.get_int(m);
    if (M < 1) rd.fail(m, "samples must be >= 1");
    u.samples = static_cast<std::size_t>(M);
    if (const Entry* e = rd.find("uq", "level_samples")) rd.fail(*e, "only valid with levels > 1");
  } else {
    const Entry& ls = rd.require("uq", "level_samples");
    for (long long M : rd.get_ints(ls)) {
      if (M < 1) rd.fail(ls, "level sample counts must be >= 1");
      u.level_samples.push_back(static_cast<std::size_t>(M));
    }
    if (static_cast<int>(u.level_samples.size()) != u.levels)
      rd.fail(ls, "expected " + std::to_string(u.levels) + " sample counts");
    if (const Entry* e = rd.find("uq", "samples")) rd.fail(*e, "use level_samples when levels > 1");
    const int ratio = 1 << (u.levels - 1);
    for (int a = 0; a < cfg.grid.dim; ++a)
      if (cfg.grid.cells[a] % ratio != 0 || cfg.grid.cells[a] / ratio < 1)
        rd.fail(*rd.find("uq", "levels"), "grid cells must be divisible by 2^(levels-1)");
  }

  std::vector<std::string> names{"moments"};
  if (const Entry* e = rd.find("uq", "functionals")) {
    names.clear();
    for (const auto& n : split(e->value, ',')) {
      const std::string v = lower(n);
      if (v != "moments" && v != "histogram" && v != "structure")
        rd.fail(*e, "unknown functional '" + n + "' (expected moments, histogram or structure)");
      if (std::find(names.begin(), names.end(), v) != names.end())
        rd.fail(*e, "functional '" + v + "' listed twice");
      names.push_back(v);
    }
    if (u.levels > 1 && (names.size() != 1 || names[0] != "moments"))
      rd.fail(*e, "MLMC supports only the moments functional");
  }
  const bool want_hist = std::count(names.begin(), names.end(), "histogram") > 0;
  const bool want_sf = std::count(names.begin(), names.end(), "structure") > 0;
  for (const Entry& e : rd.entries()) {
    if (e.section != "uq") continue;
    if (e.key.rfind("histogram_", 0) == 0 && !want_hist)
      rd.fail(e, "histogram is not listed in functionals");
    if (e.key.rfind("structure_", 0) == 0 && !want_sf)
      rd.fail(e, "structure is not listed in functionals");
  }

  const EquationModel& model = cfg.scheme.model;
  for (const auto& n : names) {
    FunctionalSpec f;
    f.name = n;
    if (n == "moments") {
      f.kind = FunctionalKind::Moments;
    } else if (n == "histogram") {
      f.kind = FunctionalKind::Histogram;
      const Entry& pe = rd.require("uq", "histogram_probes");
      for (const auto& pt : split(pe.value, ';')) {
        std::vector<double> coords;
        std::istringstream is(pt);
        std::string tok;
        while (is >> tok) coords.push_back(rd.to_double(pe, tok));
        if (static_cast<int>(coords.size()) != cfg.grid.dim)
          rd.fail(pe, "each probe needs " + std::to_string(cfg.grid.dim) + " coordinates");
        for (int a = 0; a < cfg.grid.dim; ++a) {
          const double c = coords[static_cast<std::size_t>(a)];
          if (c < cfg.grid.origin[a] || c > cfg.grid.origin[a] + cfg.grid.extent[a])
            rd.fail(pe, "probe outside the domain");
        }
        f.probes.push_back(probe_cell(cfg.grid, coords));
      }
      const Entry& re = rd.require("uq", "histogram_range");
      const auto range = rd.get_doubles(re);
      if (range.size() != 2 || !(range[1] > range[0])) rd.fail(re, "expected 'lo, hi' with lo < hi");
      f.lo = range[0];
      f.hi = range[1];
      if (const Entry* e = rd.find("uq", "histogram_bins")) {
        const long long b = rd.get_int(*e);
        if (b < 1 || b > 100000) rd.fail(*e, "bins must be in [1, 100000]");
        f.bins = static_cast<int>(b);
      }
      if (const Entry* e = rd.find("uq", "histogram_component")) f.component = component_index(rd, *e, model);
    } else {
      f.kind = FunctionalKind::StructureFunction;
      if (const Entry* e = rd.find("uq", "structure_exponent")) {
        f.p = rd.get_double(*e);
        if (!(f.p >= 1.0)) rd.fail(*e, "exponent must be >= 1");
      }
      if (const Entry* e = rd.find("uq", "structure_max_offset")) {
        const long long h = rd.get_int(*e);
        if (h < 0) rd.fail(*e, "max_offset must be >= 0");
        f.max_offset = static_cast<int>(h);
      }
      if (const Entry* e = rd.find("uq", "structure_component")) f.component = component_index(rd, *e, model);
    }
    u.functionals.push_back(std::move(f));
  }
}

void parse_initial(const Reader& rd, RunConfig& cfg) {
  const EquationModel& model = cfg.scheme.model;
  InitSpec& init = cfg.init;
  init.form = InitForm::Primitive;
  const Entry* form_e = rd.find("initial", "variables");
  if (form_e) {
    init.form = rd.get_choice(*form_e, {"primitive", "conserved"}) == "conserved"
                    ? InitForm::Conserved
                    : InitForm::Primitive;
    if (model.kind != EquationKind::Euler && init.form == InitForm::Conserved)
      init.form = InitForm::Primitive;
  }
  const auto names = initial_variable_names(model, init.form);
  std::set<std::string> allowed(names.begin(), names.end());
  allowed.insert("variables");
  rd.allow_keys("initial", allowed);

  for (const auto& n : names) {
    const Entry& e = rd.require("initial", n);
    Expr ex;
    try {
      ex = parse_expr(e.value);
    } catch (const ConfigError& err) {
      // shift the expression position to a file column
      std::string msg = err.what();
      int col = e.value_col;
      const std::string tag = "position ";
      if (const auto p = msg.find(tag); p != std::string::npos) {
        int pos = 0;
        std::from_chars(msg.data() + p + tag.size(), msg.data() + msg.size(), pos);
        col += pos - 1;
      }
      rd.fail(e.line, col, "key '" + n + "': " + msg);
    }
    if (ex.max_random_index() >= cfg.uq.stochastic_dim)
      rd.fail(e, "uses X" + std::to_string(ex.max_random_index()) + " but [uq] stochastic_dim is " +
                     std::to_string(cfg.uq.stochastic_dim));
    init.exprs.push_back(ex);
    init.texts.push_back(e.value);
  }

  // spot check: finite values on a subsample of cell centres for a few
  // random vectors
  const GridSpec& g = cfg.grid;
  const auto d = static_cast<std::size_t>(cfg.uq.stochastic_dim);
  std::vector<std::vector<double>> randoms{std::vector<double>(d, 0.0), std::vector<double>(d, 0.5)};
  for (std::uint64_t k = 0; k < 4; ++k) randoms.push_back(draw_point(SamplingMethod::MC, 0, cfg.uq.stochastic_dim, k));
  Index3 stride{1, 1, 1};
  for (int a = 0; a < g.dim; ++a) stride[a] = std::max(1, g.cells[a] / 16);
  for (std::size_t c = 0; c < init.exprs.size(); ++c)
    for (const auto& r : randoms)
      for (int k = 0; k < g.cells[2]; k += stride[2])
        for (int j = 0; j < g.cells[1]; j += stride[1])
          for (int i = 0; i < g.cells[0]; i += stride[0]) {
            const Point3 x = cell_center(g, {i, j, k});
            if (!std::isfinite(init.exprs[c].eval(x, r)))
              rd.fail(*rd.find("initial", names[c]),
                      "not finite at cell (" + std::to_string(i) + "," + std::to_string(j) + "," +
                          std::to_string(k) + ")");
          }
}

void parse_parallel(const Reader& rd, RunConfig& cfg) {
  rd.allow_keys("parallel", {"ranks"});
  if (const Entry* e = rd.find("parallel", "ranks")) {
    try {
      cfg.ranks = parse_ranks(e->value, cfg.grid.dim);
      decompose(cfg.grid, RankTopology::make(cfg.grid.dim, cfg.ranks, cfg.scheme.bc));
    } catch (const ConfigError& err) {
      rd.fail(*e, err.what());
    }
  }
}

void parse_output(const Reader& rd, RunConfig& cfg) {
  rd.allow_keys("output", {"directory", "times", "formats"});
  if (const Entry* e = rd.find("output", "directory")) {
    if (e->value.empty()) rd.fail(*e, "directory must not be empty");
    cfg.output.directory = e->value;
  }
  if (const Entry* e = rd.find("output", "times")) {
    cfg.output.times = rd.get_doubles(*e);
    for (std::size_t i = 0; i < cfg.output.times.size(); ++i) {
      const double t = cfg.output.times[i];
      if (!(t >= 0.0 && t < cfg.scheme.t_end)) rd.fail(*e, "times must lie in [0, t_end)");
      if (i > 0 && !(t > cfg.output.times[i - 1])) rd.fail(*e, "times must increase");
    }
  }
  if (const Entry* e = rd.find("output", "formats")) {
    cfg.output.snapshot = cfg.output.csv = false;
    for (const auto& f : split(e->value, ',')) {
      const std::string v = lower(f);
      if (v == "snapshot") {
        cfg.output.snapshot = true;
      } else if (v == "csv") {
        cfg.output.csv = true;
      } else {
        rd.fail(*e, "unknown format '" + f + "' (expected snapshot or csv)");
      }
    }
  }
}

}  // namespace

std::vector<std::string> initial_variable_names(const EquationModel& model, InitForm form) {
  if (model.kind != EquationKind::Euler) return {"u"};
  std::vector<std::string> out{"rho"};
  const char* axes[] = {"x", "y", "z"};
  for (int a = 0; a < model.dim; ++a)
    out.push_back(std::string(form == InitForm::Primitive ? "v" : "m") + axes[a]);
  out.push_back(form == InitForm::Primitive ? "p" : "E");
  return out;
}

std::vector<GridSpec> RunConfig::level_grids() const {
  std::vector<GridSpec> out;
  for (int l = 0; l < uq.levels; ++l) {
    const int ratio = 1 << (uq.levels - 1 - l);
    Index3 cells = grid.cells;
    for (int a = 0; a < grid.dim; ++a) cells[a] /= ratio;
    out.push_back(GridSpec::uniform(grid.dim, cells, grid.origin, grid.extent, grid.ghost_width));
  }
  return out;
}

RunConfig parse_config(std::string_view text, const std::string& source) {
  const Reader rd(text, source);
  for (const char* s : {"grid", "scheme", "initial"})
    if (!rd.has_section(s)) rd.fail(1, 1, std::string("missing section [") + s + "]");
  RunConfig cfg;
  parse_grid(rd, cfg);
  parse_scheme(rd, cfg);
  parse_uq(rd, cfg);
  parse_initial(rd, cfg);
  parse_parallel(rd, cfg);
  parse_output(rd, cfg);
  cfg.canonical = canonicalize_config(text);
  cfg.digest = sha256_hex(cfg.canonical);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string canonicalize_config(std::string_view text) {
  const Reader rd(text, "config");
  std::vector<std::string> lines;
  for (const Entry& e : rd.entries()) lines.push_back(e.section + "." + e.key + "=" + canonical_value(e.value));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Field eval_init(const InitSpec& init, const EquationModel& model, const GridSpec& grid,
                std::span<const double> random) {
  const auto names = initial_variable_names(model, init.form);
  if (init.exprs.size() != names.size())
    throw ConfigError("initial data needs " + std::to_string(names.size()) + " expressions");
  const int ncomp = model.ncomp();
  Field f(grid, ncomp, 0.0);
  std::vector<double> v(init.exprs.size());
  for_each_interior(grid, [&](const Index3& i) {
    const Point3 x = cell_center(grid, i);
    const std::string where =
        " at cell (" + std::to_string(i[0]) + "," + std::to_string(i[1]) + "," + std::to_string(i[2]) + ")";
    for (std::size_t c = 0; c < v.size(); ++c) {
      v[c] = init.exprs[c].eval(x, random);
      if (!std::isfinite(v[c]))
        throw NumericalError("initial data: '" + names[c] + " = " +
                             (c < init.texts.size() ? init.texts[c] : print_expr(init.exprs[c])) +
                             "' is not finite" + where);
    }
    State u{};
    if (model.kind == EquationKind::Euler && init.form == InitForm::Primitive) {
      PrimitiveState w{v[0], {0, 0, 0}, v.back()};
      for (int a = 0; a < model.dim; ++a) w.v[static_cast<std::size_t>(a)] = v[static_cast<std::size_t>(1 + a)];
      try {
        u = primitive_to_conserved(model, w);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string("initial data: ") + e.what() + where);
      }
    } else {
      for (int c = 0; c < ncomp; ++c) u[static_cast<std::size_t>(c)] = v[static_cast<std::size_t>(c)];
      if (!is_physical(model, u)) throw NumericalError("initial data: unphysical state" + where);
    }
    for (int c = 0; c < ncomp; ++c) f.at(c, i) = u[static_cast<std::size_t>(c)];
  });
  return f;
}

InitialData make_initial_data(const RunConfig& cfg) {
  return [init = cfg.init, model = cfg.scheme.model](const GridSpec& grid, std::span<const double> random) {
    return eval_init(init, model, grid, random);
  };
}

Index3 parse_ranks(std::string_view text, int dim) {
  std::string s(text);
  std::replace(s.begin(), s.end(), 'x', ',');
  std::replace(s.begin(), s.end(), 'X', ',');
  const auto parts = split(s, ',');
  if (parts.empty() || parts.size() > 3) throw ConfigError("ranks must look like 2x2");
  Index3 r{1, 1, 1};
  for (std::size_t a = 0; a < parts.size(); ++a) {
    int v = 0;
    const auto res = std::from_chars(parts[a].data(), parts[a].data() + parts[a].size(), v);
    if (parts[a].empty() || res.ec != std::errc() || res.ptr != parts[a].data() + parts[a].size() || v < 1)
      throw ConfigError("ranks must be positive integers, got '" + std::string(text) + "'");
    r[a] = v;
  }
  for (int a = dim; a < 3; ++a)
    if (r[static_cast<std::size_t>(a)] != 1)
      throw ConfigError("ranks '" + std::string(text) + "' need a " + std::to_string(a + 1) +
                        "D grid, config is " + std::to_string(dim) + "D");
  return r;
}

}  // namespace conslaw
