#include <doctest.h>

#include <json.hpp>

#include "brw/config.hpp"
#include "brw/errors.hpp"

using namespace brw;
using nlohmann::json;

static json minimal() {
  return json::parse(R"({
    "dim": 1,
    "kernel": [
      {"offset": [1], "rate": 0.5},
      {"offset": [-1], "rate": 0.5}
    ],
    "sources": [
      {"position": [0], "coeffs": [1.0, -3.0, 2.0]}
    ]
  })");
}

TEST_CASE("minimal single-source config parses") {
  ConfigFile cfg = parse_config_json(minimal());
  CHECK(cfg.brw.source_count() == 1);
  CHECK(cfg.brw.kernel.dim == 1);
  CHECK(cfg.brw.sources[0].intensity == doctest::Approx(1.0));
  // defaults resolved
  CHECK(cfg.numerics.truncation_radius == 200);
  CHECK(cfg.simulation.replicas == 10000);
}

TEST_CASE("unknown keys are rejected") {
  json doc = minimal();
  doc["beta_total"] = 1.0;
  CHECK_THROWS_AS(parse_config_json(doc), ParseError);

  json doc2 = minimal();
  doc2["numerics"] = {{"quadrature_nodess", 8}};
  CHECK_THROWS_AS(parse_config_json(doc2), ParseError);
}

TEST_CASE("asymmetric kernel fails kernel validation") {
  json doc = minimal();
  doc["kernel"][1]["rate"] = 0.25;
  CHECK_THROWS_AS(parse_config_json(doc), AsymmetricKernel);
}

TEST_CASE("schema errors carry field-addressed messages") {
  json doc = minimal();
  doc["kernel"][0].erase("rate");
  try {
    parse_config_json(doc);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("kernel[0]") != std::string::npos);
  }

  json doc2 = minimal();
  doc2["sources"][0]["position"] = {0, 0};  // wrong arity for dim = 1
  CHECK_THROWS_AS(parse_config_json(doc2), ParseError);
}

TEST_CASE("resolved echo reparses to the same configuration") {
  json doc = minimal();
  doc["numerics"] = {{"window_radius", 9}};
  doc["simulation"] = {{"seed", 77}, {"replicas", 500}};
  ConfigFile cfg = parse_config_json(doc);
  CHECK(cfg.numerics.window_radius == 9);
  CHECK(cfg.simulation.seed == 77);

  ConfigFile again = parse_config_json(json::parse(cfg.resolved));
  CHECK(again.resolved == cfg.resolved);
  CHECK(again.simulation.replicas == 500);
}

TEST_CASE("missing file and invalid JSON report ParseError") {
  CHECK_THROWS_AS(parse_config("/nonexistent/path.json"), ParseError);
}
