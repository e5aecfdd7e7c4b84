#include <filesystem>
#include <fstream>

#include "bnblab/model.hpp"
#include "doctest.h"

using namespace bnblab;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "bnblab_test_model";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("parse_variable_key recognises the unit-commitment patterns") {
  auto k = parse_variable_key("is_on[5,13]");
  CHECK(k.base == "is_on");
  CHECK(k.generator == 5);
  CHECK(k.time == 13);
  CHECK_FALSE(k.startup_category.has_value());

  k = parse_variable_key("startup[2,7,1]");
  CHECK(k.base == "startup");
  CHECK(k.generator == 2);
  CHECK(k.time == 7);
  CHECK(k.startup_category == 1);

  k = parse_variable_key("slack_17");
  CHECK(k.base == "slack_17");
  CHECK_FALSE(k.generator.has_value());
  CHECK_FALSE(k.time.has_value());

  // Wrong arity or malformed indices fall through.
  CHECK(parse_variable_key("startup[2,7]").base == "startup[2,7]");
  CHECK(parse_variable_key("is_on[1,2,3]").base == "is_on[1,2,3]");
  CHECK(parse_variable_key("is_on[01,2]").base == "is_on[01,2]");
  CHECK(parse_variable_key("p[1,2]").base == "p[1,2]");
  CHECK(parse_variable_key("").base.empty());
}

TEST_CASE("rendering a parsed key reproduces the raw text") {
  for (const char* raw : {"is_on[0,0]", "switch_on[12,23]", "switch_off[3,4]", "startup[10,0,2]",
                          "x", "is_on[", "startup[1,2,3]x"}) {
    CHECK(parse_variable_key(raw).render() == raw);
  }
}

TEST_CASE("minimal instance file loads") {
  const auto p = temp_file("minimal.json");
  write(p, R"({"name":"m","variables":[{"name":"b","kind":"binary","lb":0,"ub":1,"obj":-1}],)"
           R"("constraints":[]})");
  const auto inst = load_instance(p);
  CHECK(inst.num_variables() == 1);
  CHECK(inst.num_binaries() == 1);
  CHECK(inst.num_constraints() == 0);
}

TEST_CASE("load errors carry context") {
  const auto p = temp_file("bad.json");
  write(p, R"({"variables":[{"name":"x","kind":"continuous","lb":0,"ub":1,"obj":0}],)"
           R"("constraints":[{"terms":[[3,1.0]],"sense":">=","rhs":0}]})");
  CHECK_THROWS_WITH_AS(load_instance(p), doctest::Contains("constraint 0"), ModelError);

  write(p, "{\n\"variables\": [\n{\"name\": \"x\",, }\n]}");
  CHECK_THROWS_WITH_AS(load_instance(p), doctest::Contains("line 3"), ModelError);

  write(p, R"({"variables":[{"name":"x","kind":"binary","lb":0,"ub":2,"obj":0}],"constraints":[]})");
  CHECK_THROWS_WITH_AS(load_instance(p), doctest::Contains("variable 0 (x)"), ModelError);

  write(p, R"({"variables":[{"name":"x","kind":"binary","lb":0,"obj":0}],"constraints":[]})");
  CHECK_THROWS_WITH_AS(load_instance(p), doctest::Contains("variables[0]: missing field \"ub\""),
                       ModelError);

  write(p, R"({"sense":"max","variables":[],"constraints":[]})");
  CHECK_THROWS_AS(load_instance(p), ModelError);

  write(p, R"({"variables":[{"name":"x","kind":"continuous","lb":0,"ub":1,"obj":0}],)"
           R"("constraints":[{"terms":[[0,1],[0,2]],"sense":"<=","rhs":1}]})");
  CHECK_THROWS_WITH_AS(load_instance(p), doctest::Contains("duplicate"), ModelError);

  CHECK_THROWS_AS(load_instance(temp_file("does_not_exist.json")), ModelError);
}

TEST_CASE("save/load round-trip is the identity and byte-stable") {
  MILPInstance inst;
  inst.name = "rt";
  inst.variables.push_back({parse_variable_key("is_on[0,1]"), VarKind::binary, 0, 1, 0.1});
  inst.variables.push_back({parse_variable_key("p[0,1]"), VarKind::continuous, -1.5,
                            std::numeric_limits<double>::infinity(), 1.0 / 3.0});
  inst.variables.push_back({parse_variable_key("startup[0,1,2]"), VarKind::binary, 0, 1, 7e-17});
  inst.constraints.push_back({{{1, 2.0}, {0, -0.7}}, Sense::le, 0.0});
  inst.constraints.push_back({{{2, 1.0}}, Sense::eq, 1.0});
  inst.validate();

  const auto p1 = temp_file("rt1.json");
  const auto p2 = temp_file("rt2.json");
  save_instance(inst, p1);
  const auto back = load_instance(p1);
  CHECK(back == inst);
  for (int j = 0; j < inst.num_variables(); ++j)
    CHECK(back.variables[j].key.raw == inst.variables[j].key.raw);
  save_instance(back, p2);
  CHECK(instance_to_json(back) == instance_to_json(inst));
}
