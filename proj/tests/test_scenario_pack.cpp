#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "core/errors.hpp"
#include "core/scenario_pack.hpp"

using namespace sa;

namespace {

const char* kPackText =
    R"({"pack_name": "p", "pack_version": "2"}
{"name": "a", "description": "first", "category": "x"}
{"name": "b", "description": "second", "category": "y", "expected_behavior": "refuse"}

{"name": "c", "description": "third", "category": "x", "language": "no", "extra_key": 7}
)";

}  // namespace

TEST_CASE("parses header, scenarios, blank lines, extras") {
  ScenarioPack p = parse_pack_text(kPackText, "fallback");
  CHECK(p.pack_name == "p");
  CHECK(p.pack_version == "2");
  REQUIRE(p.size() == 3);
  CHECK(p.scenarios[1].expected_behavior == "refuse");
  CHECK(p.scenarios[2].language == "no");
  CHECK(p.scenarios[2].extras["extra_key"] == 7);
  CHECK(p.categories() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("fallback name applies without a header line") {
  ScenarioPack p = parse_pack_text(R"({"name":"a","description":"d"})", "stem");
  CHECK(p.pack_name == "stem");
  CHECK(p.size() == 1);
}

TEST_CASE("digest is order sensitive and stable") {
  ScenarioPack p = parse_pack_text(kPackText, "f");
  CHECK(p.digest == ScenarioPack::compute_digest(p));
  ScenarioPack q = p;
  std::swap(q.scenarios[0], q.scenarios[1]);
  CHECK(ScenarioPack::compute_digest(q) != p.digest);
  q = p;
  q.pack_version = "3";
  CHECK(ScenarioPack::compute_digest(q) != p.digest);
}

TEST_CASE("serialize round-trips to an identical digest") {
  ScenarioPack p = parse_pack_text(kPackText, "f");
  ScenarioPack q = parse_pack_text(p.serialize_jsonl(), "f");
  CHECK(q.digest == p.digest);
  CHECK(q.size() == p.size());
  CHECK(q.scenarios[2].extras == p.scenarios[2].extras);
}

TEST_CASE("missing required fields raise parse errors with line numbers") {
  CHECK_THROWS_WITH_AS(parse_pack_text(R"({"description":"no name"})", "f"),
                       doctest::Contains("line 1"), Error);
  CHECK_THROWS_WITH_AS(parse_pack_text("{\"name\":\"a\",\"description\":\"d\"}\nnot json", "f"),
                       doctest::Contains("line 2"), Error);
  CHECK_THROWS_WITH_AS(parse_pack_text(R"({"name":"a","description":""})", "f"),
                       doctest::Contains("description"), Error);
}

TEST_CASE("duplicate names cite both lines") {
  const char* dup =
      "{\"name\":\"a\",\"description\":\"d\"}\n"
      "{\"name\":\"b\",\"description\":\"d\"}\n"
      "{\"name\":\"a\",\"description\":\"e\"}\n";
  try {
    parse_pack_text(dup, "f");
    FAIL("expected duplicate-name error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    std::string msg = e.what();
    CHECK(msg.find("lines 1 and 3") != std::string::npos);
  }
}

TEST_CASE("empty pack is rejected") {
  CHECK_THROWS_AS(parse_pack_text("", "f"), Error);
  CHECK_THROWS_AS(parse_pack_text(R"({"pack_name":"p","pack_version":"1"})", "f"), Error);
}

TEST_CASE("category filter keeps order and recomputes digest") {
  ScenarioPack p = parse_pack_text(kPackText, "f");
  ScenarioPack x = filter_by_category(p, "x");
  REQUIRE(x.size() == 2);
  CHECK(x.scenarios[0].name == "a");
  CHECK(x.scenarios[1].name == "c");
  CHECK(x.digest != p.digest);
  CHECK_THROWS_AS(filter_by_category(p, "absent"), Error);
}

TEST_CASE("load_pack reads files and reports missing ones") {
  std::string path = "test_pack_tmp.jsonl";
  {
    std::ofstream out(path);
    out << kPackText;
  }
  ScenarioPack p = load_pack(path);
  CHECK(p.size() == 3);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_pack("does_not_exist.jsonl"), Error);
}
