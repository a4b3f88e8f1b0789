#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "indexbundle/bvp.hpp"
#include "indexbundle/json_io.hpp"
#include "indexbundle/random_families.hpp"

using namespace indexbundle;

namespace {

const ToleranceConfig kCfg;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("canonical emission is a fixed point after one parse") {
  Json doc;
  doc["zeta"] = 0.1;
  doc["alpha"] = 3;
  doc["list"] = {1.5, 2, Json::array({true, nullptr})};
  doc["name"] = "with \"quotes\" and \\ backslash";
  const std::string once = canonical_dump(doc);
  const std::string twice = canonical_dump(parse_json_text(once, "mem"));
  CHECK(once == twice);
  // keys come out sorted
  CHECK(once.find("\"alpha\"") < once.find("\"list\""));
  CHECK(once.find("\"list\"") < once.find("\"name\""));
  // 17 significant digits survive the round trip
  const Json parsed = parse_json_text(once, "mem");
  CHECK(parsed["zeta"].get<double>() == 0.1);
}

TEST_CASE("mesh JSON round trips byte-identically in canonical form") {
  for (const BaseMesh& mesh :
       {circle_mesh(8), sphere_mesh(0), interval_mesh(4),
        product_with_interval(share(circle_mesh(4)), 3)}) {
    const Json j = mesh_to_json(mesh);
    const std::string text = canonical_dump(j);
    const BaseMesh reloaded = mesh_from_json(parse_json_text(text, "mem"), "mem");
    CHECK(reloaded == mesh);
    CHECK(canonical_dump(mesh_to_json(reloaded)) == text);
  }
}

TEST_CASE("bundle JSON round trips complex entries exactly") {
  const auto sphere = share(sphere_mesh(0));
  const auto bott = bott_bundle(sphere);
  const Json j = bundle_to_json(bott);
  const auto any = bundle_from_json(j, sphere, "bundle");
  const auto& reloaded = std::get<ProjectionField<cxd>>(any);
  REQUIRE(reloaded.proj.size() == bott.proj.size());
  for (std::size_t v = 0; v < bott.proj.size(); ++v) {
    CHECK((reloaded.proj[v] - bott.proj[v]).cwiseAbs().maxCoeff() == 0.0);
  }

  const auto circle = share(circle_mesh(8));
  const auto moebius = moebius_bundle(circle);
  const auto back = bundle_from_json(bundle_to_json(moebius), circle, "bundle");
  const auto& real_reloaded = std::get<ProjectionField<double>>(back);
  for (std::size_t v = 0; v < moebius.proj.size(); ++v) {
    CHECK((real_reloaded.proj[v] - moebius.proj[v]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("morphism files round trip through the filesystem") {
  const auto mesh = share(circle_mesh(8));
  Rng rng(9);
  const auto family = random_isomorphism_family<double>(mesh, 3, 2, rng, kCfg);
  const std::string path = temp_path("indexbundle_test_morphism.json");
  write_json_file(path, morphism_to_json(family, *mesh));
  const auto any = load_morphism_file(path, kCfg);
  const auto& reloaded = std::get<MorphismField<double>>(any);
  REQUIRE(reloaded.mats.size() == family.mats.size());
  for (std::size_t v = 0; v < family.mats.size(); ++v) {
    CHECK(spectral_norm<double>(reloaded.mats[v] - family.mats[v]) <= 1e-15);
  }
  std::filesystem::remove(path);
}

TEST_CASE("schema violations name the offending JSON path") {
  SUBCASE("missing member") {
    Json j = mesh_to_json(circle_mesh(4));
    j.erase("vertices");
    CHECK_THROWS_AS(mesh_from_json(j, "doc"), ParseError);
    try {
      mesh_from_json(j, "doc");
    } catch (const ParseError& e) {
      CHECK(e.path() == "doc/vertices");
    }
  }
  SUBCASE("wrong type deep inside an array") {
    Json j = mesh_to_json(circle_mesh(4));
    j["edges"][2][1] = "oops";
    try {
      mesh_from_json(j, "doc");
      CHECK(false);
    } catch (const ParseError& e) {
      CHECK(e.path() == "doc/edges/2");
    }
  }
  SUBCASE("truncated file") {
    const std::string path = temp_path("indexbundle_truncated.json");
    std::ofstream(path) << "{\"kind\": \"circle\", \"vert";
    CHECK_THROWS_AS(load_json_file(path), ParseError);
    std::filesystem::remove(path);
  }
  SUBCASE("scalar tag is validated") {
    const auto mesh = share(circle_mesh(4));
    Json j = bundle_to_json(trivial_field<double>(mesh, 2, 1));
    j["scalar"] = "quaternion";
    CHECK_THROWS_AS(bundle_from_json(j, mesh, "bundle"), ParseError);
  }
}

TEST_CASE("records and reports serialize faithfully") {
  InvariantRecord record{-1, {1, 0}, {2}};
  const Json j = record_to_json(record);
  CHECK(record_from_json(j, "rec") == record);

  RunReport report;
  report.command = "axioms verify";
  report.seed = 42;
  report.trials = 3;
  report.checks.push_back({"normalisation", 3, 0, ""});
  report.checks.push_back({"direct-sum", 3, 1, "trial 2: mismatch"});
  const Json rj = run_report_to_json(report, kCfg);
  CHECK(rj["pass"] == false);
  CHECK(rj["checks"].size() == 2);
  CHECK(rj["config"]["delta_edge"] == 0.5);
}
