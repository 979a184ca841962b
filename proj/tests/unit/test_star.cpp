#include "cryocurate/star.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace cryocurate;
using namespace cryocurate::star;
using namespace cryocurate::testing;

namespace {

ErrorCode code_of(std::string_view text) {
  try {
    read_star(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("three-column loop") {
  const auto t = read_star(
      "data_test\n"
      "loop_\n"
      "_a\n_b\n_c\n"
      "1 2 3\n"
      "4 5 6\n");
  REQUIRE(t.blocks.size() == 1);
  CHECK(t.blocks[0].name == "test");
  const auto& loop = t.blocks[0].loops.at(0);
  CHECK(loop.columns == std::vector<std::string>{"_a", "_b", "_c"});
  REQUIRE(loop.rows.size() == 2);
  for (const auto& row : loop.rows) CHECK(row.size() == loop.columns.size());
  CHECK(loop.get_int(1, "_b") == 5);
}

TEST_CASE("RELION particle file") {
  const auto t = read_star(read_text(fixture_path("star/relion_particles.star")));
  const auto& exp = expected()["relion_particles"];
  CHECK(t.blocks.size() == 2);
  const auto* particles = t.find_block("particles");
  REQUIRE(particles != nullptr);
  const auto* loop = particles->find_loop("_rlnImageName");
  REQUIRE(loop != nullptr);
  const auto names = loop->column("_rlnImageName");
  REQUIRE(names.size() == exp["image_names"].size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(names[i] == exp["image_names"][i].get<std::string>());
    CHECK(loop->get_float(i, "rlnCoordinateX") == exp["coordinate_x"][i].get<double>());
  }
  const auto* optics = t.find_block("optics");
  REQUIRE(optics != nullptr);
  CHECK(optics->loops[0].get_float(0, "_rlnVoltage") == 300.0);
}

TEST_CASE("pairs, quoting, comments and text fields") {
  const auto t = read_star(
      "# leading comment\n"
      "data_\n"
      "_rlnName 'two words' # trailing comment\n"
      "_rlnOther \"it's here\"\n"
      "_rlnText\n"
      ";line one\n"
      "line two\n"
      ";\n");
  const auto& b = t.blocks.at(0);
  CHECK(b.name.empty());
  CHECK(*b.find_value("_rlnName") == "two words");
  CHECK(*b.find_value("_rlnOther") == "it's here");
  CHECK(*b.find_value("_rlnText") == "line one\nline two");
}

TEST_CASE("syntax errors carry line numbers") {
  try {
    read_star("data_x\nloop_\n_a\n_b\n_c\n1 2 3\n4 5\n");
    FAIL("expected StarSyntaxError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StarSyntaxError);
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
  CHECK(code_of("data_x\nloop_\n_a\n_b\n_c\n1 2 3 4\n5 6\n") == ErrorCode::StarSyntaxError);
  CHECK(code_of("data_x\n_a\n") == ErrorCode::StarSyntaxError);
  CHECK(code_of("_a 1\n") == ErrorCode::StarSyntaxError);
  CHECK(code_of("data_x\n_a 'open\n") == ErrorCode::StarSyntaxError);
  CHECK(code_of("data_x\n_a\n;never closed\n") == ErrorCode::StarSyntaxError);
}

TEST_CASE("rows may continue across lines") {
  const auto t = read_star("data_x\nloop_\n_a\n_b\n1\n2\n3 4\n");
  CHECK(t.blocks[0].loops[0].rows.size() == 2);
}

TEST_CASE("write then read is the identity") {
  StarTable t;
  StarBlock b{"mixed", {{"_key", "plain"}, {"_spaced", "has space"}, {"_empty", ""}}, {}};
  b.loops.push_back({{"_x", "_y"},
                     {{"1", "two words"}, {"_looks_like_tag", "data_value"}, {"'q'", "multi\nline"}}});
  t.blocks.push_back(b);
  t.blocks.push_back({"", {}, {{{"_only"}, {{"#hash"}, {";semi"}}}}});
  const std::string text = write_star(t);
  CHECK(read_star(text) == t);
  CHECK(write_star(read_star(text)) == text);

  const auto relion = read_star(read_text(fixture_path("star/relion_particles.star")));
  CHECK(read_star(write_star(relion)) == relion);
}

TEST_CASE("empty table writes an empty document") {
  CHECK(write_star(StarTable{}).empty());
  CHECK(read_star("").blocks.empty());
}
