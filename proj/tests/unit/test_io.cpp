// Deterministic text I/O: number formatting, CSV round trips, potential
// loaders, presets, and the sparse-matrix export.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "alloylab/core.hpp"
#include "alloylab/grid.hpp"
#include "alloylab/io.hpp"
#include "alloylab/potential.hpp"

using namespace alloylab;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("doubles survive a text round trip bit for bit") {
  for (double v : {1.0 / 3.0, -0.0, 1e-308, 6.02214076e23, 12345.678901234567,
                   -std::numbers::pi, 5e-324}) {
    const std::string text = format_double(v);
    const double back = parse_double(text, "test");
    CHECK(std::signbit(back) == std::signbit(v));
    CHECK(back == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(parse_double("  42.5\r", "test") == 42.5);
  CHECK_THROWS_AS(parse_double("4x2", "test"), ConfigError);
  CHECK_THROWS_AS(parse_int("12.5", "test"), ConfigError);
}

TEST_CASE("csv writer enforces width and the reader recovers the cells") {
  CsvWriter w({"name", "count", "value", "flag"});
  w.row("alpha", 3, 0.125, true);
  w.row("beta", -1, 2.0 / 3.0, false);
  CHECK(w.rows() == 2u);
  CHECK_THROWS_AS(w.row("too", "few"), ConfigError);
  const CsvTable t = parse_csv(w.body(), "test");
  REQUIRE(t.rows.size() == 2u);
  CHECK(t.header == std::vector<std::string>{"name", "count", "value", "flag"});
  CHECK(t.rows[0][0] == "alpha");
  CHECK(parse_int(t.rows[0][1], "test") == 3);
  CHECK(parse_double(t.rows[1][2], "test") == 2.0 / 3.0);
  CHECK(t.rows[1][3] == "0");
  CHECK(t.column("value") == 2);
  CHECK_THROWS_AS(t.column("missing"), ConfigError);
}

TEST_CASE("ragged csv input is rejected with context") {
  CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n", "ragged"), ConfigError);
  CHECK_THROWS_AS(parse_csv("", "empty"), ConfigError);
}

TEST_CASE("single-site potentials round-trip through csv files") {
  const GridSpec spec(1, 8);
  const SingleSitePotential original = make_dipole_single_site(spec, 2.5);
  CsvWriter w({"k1", "value"});
  original.u.for_each_local([&](const IVec& l) { w.row(l[0], original.u.at_local(l)); });
  const auto path = temp_file("alloylab_site_roundtrip.csv");
  write_text_file(path, w.body());
  const SingleSitePotential loaded = load_single_site_csv(path, spec);
  original.u.for_each_local(
      [&](const IVec& l) { CHECK(loaded.u.at_local(l) == original.u.at_local(l)); });
  CHECK(loaded.has_negative_part);
  std::filesystem::remove(path);
}

TEST_CASE("csv loaders reject holes, duplicates, and stray coordinates") {
  const GridSpec spec(1, 4);
  const auto path = temp_file("alloylab_bad_field.csv");
  write_text_file(path, "k1,value\n0,0\n1,0\n2,0\n3,0\n");  // missing node 4
  CHECK_THROWS_AS(load_single_site_csv(path, spec), ConfigError);
  write_text_file(path, "k1,value\n0,0\n1,0\n2,0\n3,0\n4,0\n4,0\n");
  CHECK_THROWS_AS(load_single_site_csv(path, spec), ConfigError);
  write_text_file(path, "k1,value\n0,0\n1,0\n2,0\n3,0\n5,0\n");
  CHECK_THROWS_AS(load_single_site_csv(path, spec), ConfigError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_text_file(temp_file("alloylab_does_not_exist.csv")), ConfigError);
}

TEST_CASE("periodic loader enforces the wrap identity") {
  const GridSpec spec(1, 4);
  const auto path = temp_file("alloylab_periodic.csv");
  // value at node 4 differs from node 0: not periodic.
  write_text_file(path, "k1,value\n0,1\n1,2\n2,3\n3,2\n4,9\n");
  CHECK_THROWS_AS(load_periodic_potential_csv(path, spec), ConfigError);
  write_text_file(path, "k1,value\n0,1\n1,2\n2,3\n3,2\n4,1\n");
  CHECK_NOTHROW(load_periodic_potential_csv(path, spec));
  std::filesystem::remove(path);
}

TEST_CASE("preset names parse with optional numeric arguments") {
  CHECK(parse_preset("bump").name == "bump");
  CHECK_FALSE(parse_preset("bump").argument.has_value());
  CHECK(parse_preset("bump(2.5)").argument.value() == 2.5);
  CHECK_THROWS_AS(parse_preset("bump(2.5"), ConfigError);
  CHECK_THROWS_AS(parse_preset("bump(x)"), ConfigError);
}

TEST_CASE("potential presets construct the advertised fields") {
  const GridSpec spec(1, 8);
  CHECK_NOTHROW(periodic_preset("zero", spec));
  CHECK_NOTHROW(periodic_preset("cosine(0.5)", spec));
  CHECK_THROWS_AS(periodic_preset("zero(1)", spec), ConfigError);
  CHECK_THROWS_AS(periodic_preset("sawtooth", spec), ConfigError);
  const SingleSitePotential kn = single_site_preset("kn-bump(0.25)", spec);
  const KnModel direct = kn_single_site(0.25, spec);
  kn.u.for_each_local(
      [&](const IVec& l) { CHECK(kn.u.at_local(l) == direct.u.u.at_local(l)); });
  CHECK_THROWS_AS(single_site_preset("mystery", spec), ConfigError);
}

TEST_CASE("sparse matrices export in coordinate text form") {
  Eigen::SparseMatrix<double> m(2, 3);
  m.insert(0, 0) = 1.5;
  m.insert(1, 2) = -0.25;
  m.makeCompressed();
  const std::string text = matrix_coordinate_text(m);
  CHECK(text == "2 3 2\n0 0 1.5\n1 2 -0.25\n");
}
