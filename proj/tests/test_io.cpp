#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "twomirror/demo.hpp"
#include "twomirror/io.hpp"

using namespace twomirror;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("twomirror_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json minimal_problem() {
  return json{
      {"format_version", 1},
      {"dimension", 1},
      {"beta", 2.0},
      {"source",
       {{"points", json::array({{{"coords", {0.0}}, {"weight", 0.5}},
                                {{"coords", {1.0}}, {"weight", 0.5}}})}}},
      {"target",
       {{"points", json::array({{{"coords", {0.5}}, {"weight", 0.5}},
                                {{"coords", {1.5}}, {"weight", 0.5}}})}}}};
}

}  // namespace

TEST_CASE("parse_problem reads a minimal points document") {
  ProblemFile pf = parse_problem(minimal_problem());
  CHECK(pf.dimension == 1);
  CHECK(pf.beta == 2.0);
  CHECK(pf.d == -1.0);
  CHECK(pf.source.size() == 2);
  CHECK(pf.target.points()[1] == Point{1.5});
  CHECK(pf.solver.method == "exact");
}

TEST_CASE("parse_problem rejects malformed documents") {
  json doc = minimal_problem();
  doc["format_version"] = 7;
  CHECK_THROWS_AS(parse_problem(doc), ParseError);
  doc = minimal_problem();
  doc["beta"] = -1.0;
  CHECK_THROWS_AS(parse_problem(doc), ParseError);
  doc = minimal_problem();
  doc["source"].erase("points");
  CHECK_THROWS_AS(parse_problem(doc), ParseError);
  doc = minimal_problem();
  doc["source"]["points"][0]["coords"] = {0.0, 0.0};  // wrong dimension
  CHECK_THROWS_AS(parse_problem(doc), ParseError);
  doc = minimal_problem();
  doc["source"]["points"][0]["weight"] = -0.5;
  CHECK_THROWS_AS(parse_problem(doc), ParseError);
}

TEST_CASE("grid blocks become cell-measure weighted point clouds") {
  json doc = minimal_problem();
  doc["dimension"] = 2;
  doc["source"] = {{"grid",
                    {{"origin", {0.0, 0.0}},
                     {"spacing", {0.5, 0.5}},
                     {"values", {{1.0, 1.0}, {1.0, 1.0}}}}}};
  doc["target"] = {{"grid",
                    {{"origin", {2.0, 0.0}},
                     {"spacing", {1.0, 1.0}},
                     {"values", {{1.0}}}}}};
  ProblemFile pf = parse_problem(doc);
  REQUIRE(pf.source.size() == 4);
  for (double w : pf.source.weights()) CHECK(w == doctest::Approx(0.25));
  CHECK(pf.source.points()[1] == Point{0.0, 0.5});  // row-major, col fastest
  CHECK(pf.source.points()[2] == Point{0.5, 0.0});
  REQUIRE(pf.target.size() == 1);
  CHECK(pf.target.weights()[0] == doctest::Approx(1.0));

  doc["source"]["grid"]["spacing"] = {0.5, -0.5};
  CHECK_THROWS_AS(parse_problem(doc), ParseError);
}

TEST_CASE("PGM intensities: ascii, binary, gamma, and zero images") {
  TempDir tmp;
  write_text(tmp.file("a.pgm"), "P2\n# comment\n2 2\n255\n255 0\n0 255\n");
  json doc = minimal_problem();
  doc["dimension"] = 2;
  doc["source"] = {{"pgm",
                    {{"origin", {0.0, 0.0}},
                     {"spacing", {1.0, 1.0}},
                     {"path", tmp.file("a.pgm")}}}};
  doc["target"] = doc["source"];
  ProblemFile pf = parse_problem(doc);
  REQUIRE(pf.source.size() == 4);
  CHECK(pf.source.weights()[0] == doctest::Approx(1.0));
  CHECK(pf.source.weights()[1] == doctest::Approx(0.0));

  std::string p5 = "P5\n2 1\n255\n";
  p5.push_back(static_cast<char>(128));
  p5.push_back(static_cast<char>(255));
  write_text(tmp.file("b.pgm"), p5);
  doc["source"]["pgm"]["path"] = tmp.file("b.pgm");
  doc["source"]["pgm"]["gamma"] = true;
  pf = parse_problem(doc);
  CHECK(pf.source.weights()[0] ==
        doctest::Approx(std::pow(128.0 / 255.0, 2.2)));
  CHECK(pf.source.weights()[1] == doctest::Approx(1.0));

  // An all-black image has no mass anywhere.
  write_text(tmp.file("z.pgm"), "P2\n2 1\n255\n0 0\n");
  doc["source"]["pgm"]["path"] = tmp.file("z.pgm");
  doc["source"]["pgm"].erase("gamma");
  CHECK_THROWS_AS(parse_problem(doc), std::invalid_argument);

  write_text(tmp.file("bad.pgm"), "P7\n2 2\n255\n");
  doc["source"]["pgm"]["path"] = tmp.file("bad.pgm");
  CHECK_THROWS_AS(parse_problem(doc), ParseError);
  doc["source"]["pgm"]["path"] = tmp.file("missing.pgm");
  CHECK_THROWS_AS(parse_problem(doc), IoError);
}

TEST_CASE("problem round trip through file and back") {
  TempDir tmp;
  ProblemFile pf = parse_problem(minimal_problem());
  pf.demo = "custom";
  pf.d = 0.5;
  write_json(tmp.file("p.json"), problem_to_json(pf));
  ProblemFile back = load_problem_file(tmp.file("p.json"));
  CHECK(back.dimension == pf.dimension);
  CHECK(back.beta == pf.beta);
  CHECK(back.d == 0.5);
  CHECK(back.demo == "custom");
  CHECK(back.source.points() == pf.source.points());
  CHECK(back.source.weights() == pf.source.weights());
  CHECK(back.target.points() == pf.target.points());

  ValidatedProblem vp = load_problem(tmp.file("p.json"));
  CHECK(vp.spec.beta == 2.0);
  CHECK_THROWS_AS(load_problem(tmp.file("nope.json")), IoError);
  write_text(tmp.file("broken.json"), "{ not json");
  CHECK_THROWS_AS(load_problem(tmp.file("broken.json")), ParseError);
}

TEST_CASE("pair and plan round trips") {
  ReflectorPair pair;
  pair.zeta = {0.0, 0.25};
  pair.omega = {-0.5, -0.125};
  pair.beta = 1.5;
  pair.kind = ReflectorKind::TypeB;
  pair.gauge = GaugeAnchor::MinZetaZero;
  ReflectorPair back = pair_from_json(pair_to_json(pair));
  CHECK(back.zeta == pair.zeta);
  CHECK(back.omega == pair.omega);
  CHECK(back.beta == pair.beta);
  CHECK(back.kind == ReflectorKind::TypeB);
  CHECK(back.gauge == GaugeAnchor::MinZetaZero);
  CHECK_THROWS_AS(pair_from_json(json{{"zeta", {0.0}}}), ParseError);

  TransportPlan plan;
  plan.entries = {PlanEntry{0, 1, 0.5}, PlanEntry{1, 0, 0.5}};
  plan.cost = 0.625;
  TransportPlan pback = plan_from_json(plan_to_json(plan));
  REQUIRE(pback.entries.size() == 2);
  CHECK(pback.entries[1].i == 1);
  CHECK(pback.entries[1].mass == 0.5);
  CHECK(pback.cost == 0.625);
  CHECK_THROWS_AS(plan_from_json(json{{"cost", 1.0}}), ParseError);
}

TEST_CASE("2D mesh export: counts, values, and deterministic bytes") {
  TempDir tmp;
  GridSpec g{{0.0, 0.0}, {0.5, 0.5}, {3, 4}};
  std::vector<double> h(12);
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = 0.1 * k;
  write_height_field_mesh(tmp.file("m.mesh"), g, h);
  const std::string text = slurp(tmp.file("m.mesh"));
  std::size_t verts = 0, faces = 0;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("v ", 0) == 0) ++verts;
    if (line.rfind("f ", 0) == 0) ++faces;
  }
  CHECK(verts == 12);
  CHECK(faces == 2 * 2 * 3);  // 2 per cell, (3-1)x(4-1) cells
  write_height_field_mesh(tmp.file("m2.mesh"), g, h);
  CHECK(slurp(tmp.file("m2.mesh")) == text);

  GridSpec bad{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, {2, 2, 2}};
  CHECK_THROWS_AS(write_height_field_mesh(tmp.file("x"), bad, h),
                  std::invalid_argument);
}

TEST_CASE("1D mesh export writes a polyline CSV") {
  TempDir tmp;
  GridSpec g{{0.0}, {0.25}, {3}};
  write_height_field_mesh(tmp.file("line.csv"), g, {1.0, 2.0, 3.0});
  const std::string text = slurp(tmp.file("line.csv"));
  CHECK(text.rfind("x,height\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("export_meshes writes both surfaces plus metadata") {
  TempDir tmp;
  DemoInstance demo = make_demo("stretch1d", 16);
  SolveResult res = solve_exact(demo.spec, Direction::MinCost);
  ReflectorPair pair =
      duals_to_reflectors(res.duals, demo.spec, Direction::MinCost);
  export_meshes(pair, demo.spec, 0.25, demo.source_grid, demo.target_grid,
                tmp.file("meshes"));
  CHECK(fs::exists(tmp.path / "meshes" / "reflector1.csv"));
  CHECK(fs::exists(tmp.path / "meshes" / "reflector2.csv"));
  json meta;
  std::ifstream(tmp.file("meshes/mesh_meta.json")) >> meta;
  CHECK(meta["beta"] == 1.0);
  CHECK(meta["d"] == 0.25);
  CHECK(meta["l"] == 1.25);
  CHECK(meta["kind"] == "A");
}

TEST_CASE("verification report round trip") {
  TempDir tmp;
  VerificationReport r;
  r.opl_max_abs_dev = 1e-14;
  r.pushforward_l1_error = 2e-12;
  r.cost_A = 0.125;
  r.cost_B = 0.5;
  r.monge_ampere_residuals = {0.01, 0.005};
  r.opl_passed = true;
  r.pushforward_passed = true;
  write_report(r, tmp.file("report.json"), CheckThresholds{},
               json{{"method", "exact"}});
  json doc;
  std::ifstream(tmp.file("report.json")) >> doc;
  CHECK(doc["opl_max_abs_dev"] == 1e-14);
  CHECK(doc["cost_B"] == 0.5);
  CHECK(doc["passed"]["opl"] == true);
  CHECK(doc["passed"]["reflection"] == false);
  CHECK(doc["monge_ampere_residuals"].size() == 2);
  CHECK(doc["thresholds"]["opl"] == 1e-9);
  CHECK(doc["solver"]["method"] == "exact");

  VerificationReport empty;
  write_report(empty, tmp.file("r2.json"));
  std::ifstream(tmp.file("r2.json")) >> doc;
  CHECK(doc["monge_ampere_residuals"].is_null());
}
