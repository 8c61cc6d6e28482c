#include "conslaw/output.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "conslaw/error.hpp"
#include "doctest.h"

using namespace conslaw;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "conslaw_test_output";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Field random_field(const GridSpec& g, int ncomp, unsigned seed) {
  std::mt19937_64 rng(seed);
  Field f(g, ncomp, 0.0);
  // raw bit patterns, including subnormals and negative zero
  for (int c = 0; c < ncomp; ++c)
    for_each_interior(g, [&](const Index3& i) {
      double v = std::bit_cast<double>(rng());
      if (!std::isfinite(v)) v = -0.0;
      f.at(c, i) = v;
    });
  return f;
}

OutputHeader header() {
  OutputHeader h = OutputHeader::make(std::string(64, 'a'));
  h.seed = 42;
  h.sample = 3;
  return h;
}

}  // namespace

TEST_CASE("snapshot round trip is bitwise") {
  const auto g = GridSpec::uniform(3, {5, 4, 3}, {0.1, -1.0, 0.0}, {1.0 / 3.0, 2.0, 0.7}, 2);
  const Field f = random_field(g, 5, 1);
  const fs::path p = scratch("roundtrip.snap");
  write_snapshot(p, f, header(), 0.125, {"rho", "mx", "my", "mz", "E"});
  const Snapshot s = read_snapshot(p);
  CHECK(s.field.grid() == g);
  CHECK(s.field.interior_equal(f));
  CHECK(s.t == 0.125);
  CHECK(s.components == std::vector<std::string>{"rho", "mx", "my", "mz", "E"});
  CHECK(s.header.config_digest == std::string(64, 'a'));
  CHECK(s.header.seed == 42u);
  CHECK(s.header.sample == 3u);
  CHECK_FALSE(s.header.level.has_value());
  CHECK(s.header.revision == source_revision());
}

TEST_CASE("snapshot header is text terminated by a blank line") {
  const auto g = GridSpec::uniform(1, {4}, {0}, {1}, 2);
  const fs::path p = scratch("layout.snap");
  Field f(g, 1, 0.0);
  for (int i = 0; i < 4; ++i) f(0, i) = i + 1.0;
  write_snapshot(p, f, header(), 0.0, {"u"});
  const std::string data = slurp(p);
  const auto end = data.find("\n\n");
  REQUIRE(end != std::string::npos);
  CHECK(data.size() == end + 2 + 4 * sizeof(double));
  CHECK(data.find("config_digest: ") < end);
  CHECK(data.find("created: ") < end);
  double second;
  std::memcpy(&second, data.data() + end + 2 + 8, 8);
  CHECK(second == 2.0);
}

TEST_CASE("corrupt snapshots are refused") {
  const auto g = GridSpec::uniform(1, {8}, {0}, {1}, 2);
  const fs::path p = scratch("corrupt.snap");
  write_snapshot(p, random_field(g, 1, 2), header(), 0.0, {"u"});
  const std::string good = slurp(p);

  auto expect_error = [&](const std::string& contents, const std::string& fragment) {
    const fs::path q = scratch("corrupt_variant.snap");
    write_text_file(q, contents);
    try {
      read_snapshot(q);
      FAIL("expected an error");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  expect_error(good.substr(0, good.size() - 12), "expected 8 floats, found 6");
  const auto digest = good.find("config_digest: ");
  const auto eol = good.find('\n', digest);
  expect_error(good.substr(0, digest) + good.substr(eol + 1), "header missing 'config_digest'");
  std::string v2 = good;
  v2.replace(v2.find("format_version: 1"), 17, "format_version: 2");
  expect_error(v2, "unsupported format_version");
  expect_error("no header here", "blank line");
  CHECK_THROWS_AS(read_snapshot(scratch("does_not_exist.snap")), IoError);
}

TEST_CASE("field CSV carries the header") {
  const auto g = GridSpec::uniform(2, {2, 2}, {0, 0}, {1, 1}, 2);
  Field f(g, 1, 1.5);
  const fs::path p = scratch("field.csv");
  write_field_csv(p, f, header(), 0.5, {"u"});
  const std::string text = slurp(p);
  CHECK(text.rfind("# tool_version: ", 0) == 0);
  CHECK(text.find("# config_digest: ") != std::string::npos);
  CHECK(text.find("x,y,u\n0.25,0.25,1.5\n") != std::string::npos);
}

TEST_CASE("statistics files") {
  const auto g = GridSpec::uniform(1, {8}, {0}, {1}, 2);
  UqResult r;
  r.samples = 3;
  FunctionalSpec moments;
  FunctionalSpec hist;
  hist.kind = FunctionalKind::Histogram;
  hist.name = "pdf";
  hist.probes = {{1, 0, 0}};
  hist.lo = 0;
  hist.hi = 1;
  hist.bins = 4;
  FunctionalSpec sf;
  sf.kind = FunctionalKind::StructureFunction;
  sf.name = "sf";
  sf.max_offset = 5;
  const std::vector<FunctionalSpec> specs{moments, hist, sf};
  TimeEstimate te;
  te.t = 0.5;
  for (const auto& s : specs) te.functionals.push_back(make_accumulator(s, g, 1));
  Field f(g, 1, 0.25);
  for (int k = 0; k < 3; ++k)
    for (auto& a : te.functionals) accumulate(a, f);
  r.times.push_back(te);

  const fs::path dir = scratch("stats");
  fs::remove_all(dir);
  const auto files = write_stats(r, header(), dir, specs, {"u"});
  REQUIRE(files.size() == 4);
  const Snapshot var = read_snapshot(dir / "moments_variance_t0.snap");
  for (double v : var.field.interior_values()) CHECK(v == 0.0);
  const Snapshot mean = read_snapshot(dir / "moments_mean_t0.snap");
  CHECK(mean.field.interior_equal(f));

  std::istringstream sfs(slurp(dir / "sf_t0.csv"));
  int data_rows = 0;
  bool seen_columns = false;
  for (std::string line; std::getline(sfs, line);) {
    if (line.rfind("#", 0) == 0) continue;
    if (!seen_columns) {
      CHECK(line == "h,value");
      seen_columns = true;
      continue;
    }
    ++data_rows;
  }
  CHECK(data_rows == 6);

  const std::string pdf = slurp(dir / "pdf_t0.csv");
  CHECK(pdf.find("0,1,0,0,0.25,0.5,3\n") != std::string::npos);
  CHECK(pdf.find("# functional: pdf") != std::string::npos);

  // repeated writes differ only in the created line
  const fs::path dir2 = scratch("stats2");
  fs::remove_all(dir2);
  OutputHeader h2 = header();
  h2.created = "1970-01-01T00:00:00Z";
  write_stats(r, h2, dir2, specs, {"u"});
  auto strip = [](std::string s) {
    const auto p = s.find("created: ");
    return s.erase(p, s.find('\n', p) - p);
  };
  for (const auto& name : {"moments_mean_t0.snap", "pdf_t0.csv", "sf_t0.csv"})
    CHECK(strip(slurp(dir / name)) == strip(slurp(dir2 / name)));
}

TEST_CASE("write failures name the path") {
  try {
    write_text_file("/proc/definitely/not/writable.txt", "x");
    FAIL("expected failure");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/proc/definitely") != std::string::npos);
  }
}
