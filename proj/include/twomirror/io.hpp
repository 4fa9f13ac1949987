#pragma once

// File formats: the versioned problem document (JSON), reflector pair and
// plan persistence, height-field mesh export, and the verification report.
// All writers format deterministically so re-export is byte-identical.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "twomirror/core.hpp"
#include "twomirror/ot.hpp"
#include "twomirror/reflector.hpp"
#include "twomirror/verify.hpp"

namespace twomirror {

using json = nlohmann::json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverBlock {
  std::string method = "exact";    // exact | entropic
  std::string type = "A";          // A | B | both
  double epsilon = 0.0;            // entropic; 0 -> relative default
  std::size_t max_points = 5000;
  double mass_tolerance = 1e-6;
  std::uint64_t seed = 0;
};

struct ProblemFile {
  int format_version = 1;
  int dimension = 0;
  double beta = 1.0;
  double d = -1.0;  // front offset for reports/meshes; < 0 means "use beta"
  DiscreteMeasure source;
  DiscreteMeasure target;
  SolverBlock solver;
  std::string demo;  // set when generated by cmd_demo; enables MA sweeps
};

namespace detail {

// Full-precision scientific formatting; 17 significant digits round-trips
// doubles exactly.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

inline DiscreteMeasure measure_from_json(const json& block, int dim,
                                         const std::string& side);

// Minimal PGM reader: P2 (ascii) and P5 (binary), 8 or 16 bit.
inline std::vector<std::vector<double>> read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PGM file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5")
    throw ParseError("unsupported PGM magic '" + magic + "' in " + path);
  auto next_token = [&in]() {
    std::string t;
    while (in >> t) {
      if (t[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return t;
    }
    throw ParseError("truncated PGM header");
  };
  const int width = std::stoi(next_token());
  const int height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535)
    throw ParseError("bad PGM header");
  std::vector<std::vector<double>> rows(height, std::vector<double>(width));
  if (magic == "P2") {
    for (auto& row : rows)
      for (double& v : row) {
        long raw;
        if (!(in >> raw)) throw ParseError("truncated PGM data");
        v = static_cast<double>(raw) / maxval;
      }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    for (auto& row : rows)
      for (double& v : row) {
        unsigned raw = 0;
        for (int b = 0; b < bytes; ++b) {
          const int c = in.get();
          if (c == EOF) throw ParseError("truncated PGM data");
          raw = (raw << 8) | static_cast<unsigned>(c);
        }
        v = static_cast<double>(raw) / maxval;
      }
  }
  return rows;
}

inline DiscreteMeasure measure_from_grid(const Point& origin,
                                         const std::vector<double>& spacing,
                                         const std::vector<std::vector<double>>& rows,
                                         int dim) {
  double cell = 1.0;
  for (double s : spacing) {
    if (!(s > 0.0)) throw ParseError("grid spacing must be > 0");
    cell *= s;
  }
  std::vector<Point> pts;
  std::vector<double> w;
  if (dim == 1) {
    if (rows.size() != 1) throw ParseError("1D grid expects a single row");
    for (std::size_t i = 0; i < rows[0].size(); ++i) {
      const double v = rows[0][i];
      if (v < 0.0) throw ParseError("negative intensity in grid");
      pts.push_back({origin[0] + spacing[0] * static_cast<double>(i)});
      w.push_back(v * cell);
    }
  } else if (dim == 2) {
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        const double v = rows[r][c];
        if (v < 0.0) throw ParseError("negative intensity in grid");
        pts.push_back({origin[0] + spacing[0] * static_cast<double>(r),
                       origin[1] + spacing[1] * static_cast<double>(c)});
        w.push_back(v * cell);
      }
  } else {
    throw ParseError("grid blocks support dimension 1 or 2");
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

inline DiscreteMeasure measure_from_json(const json& block, int dim,
                                         const std::string& side) {
  try {
    if (block.contains("points")) {
      std::vector<Point> pts;
      std::vector<double> w;
      for (const auto& e : block.at("points")) {
        Point p = e.at("coords").get<Point>();
        if (static_cast<int>(p.size()) != dim)
          throw ParseError(side + ": point dimension mismatch");
        const double wt = e.at("weight").get<double>();
        if (wt < 0.0) throw ParseError(side + ": negative weight");
        pts.push_back(std::move(p));
        w.push_back(wt);
      }
      return DiscreteMeasure(std::move(pts), std::move(w));
    }
    if (block.contains("grid")) {
      const auto& g = block.at("grid");
      Point origin = g.at("origin").get<Point>();
      auto spacing = g.at("spacing").get<std::vector<double>>();
      if (static_cast<int>(origin.size()) != dim ||
          static_cast<int>(spacing.size()) != dim)
        throw ParseError(side + ": grid origin/spacing dimension mismatch");
      std::vector<std::vector<double>> rows;
      const auto& vals = g.at("values");
      if (dim == 1) {
        rows.push_back(vals.get<std::vector<double>>());
      } else {
        for (const auto& row : vals)
          rows.push_back(row.get<std::vector<double>>());
      }
      return measure_from_grid(origin, spacing, rows, dim);
    }
    if (block.contains("pgm")) {
      const auto& pg = block.at("pgm");
      if (dim != 2) throw ParseError(side + ": pgm blocks require dimension 2");
      Point origin = pg.at("origin").get<Point>();
      auto spacing = pg.at("spacing").get<std::vector<double>>();
      auto rows = read_pgm(pg.at("path").get<std::string>());
      if (pg.value("gamma", false))
        for (auto& row : rows)
          for (double& v : row) v = std::pow(v, 2.2);
      return measure_from_grid(origin, spacing, rows, 2);
    }
  } catch (const json::exception& e) {
    throw ParseError(side + " block: " + e.what());
  }
  throw ParseError(side + " block must contain points, grid, or pgm");
}

}  // namespace detail

inline ProblemFile parse_problem(const json& doc) {
  ProblemFile pf;
  try {
    pf.format_version = doc.at("format_version").get<int>();
    if (pf.format_version != 1)
      throw ParseError("unsupported format_version " +
                       std::to_string(pf.format_version));
    pf.dimension = doc.at("dimension").get<int>();
    if (pf.dimension < 1) throw ParseError("dimension must be >= 1");
    pf.beta = doc.at("beta").get<double>();
    if (!(pf.beta > 0.0)) throw ParseError("beta must be > 0");
    pf.d = doc.value("d", -1.0);
    pf.demo = doc.value("demo", std::string());
    pf.source = detail::measure_from_json(doc.at("source"), pf.dimension,
                                          "source");
    pf.target = detail::measure_from_json(doc.at("target"), pf.dimension,
                                          "target");
    if (doc.contains("solver")) {
      const auto& s = doc.at("solver");
      pf.solver.method = s.value("method", pf.solver.method);
      pf.solver.type = s.value("type", pf.solver.type);
      pf.solver.epsilon = s.value("epsilon", pf.solver.epsilon);
      pf.solver.max_points = s.value("max_points", pf.solver.max_points);
      pf.solver.mass_tolerance =
          s.value("mass_tolerance", pf.solver.mass_tolerance);
      pf.solver.seed = s.value("seed", pf.solver.seed);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("problem file: ") + e.what());
  }
  return pf;
}

inline ProblemFile load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open problem file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(std::string(path) + ": " + e.what());
  }
  return parse_problem(doc);
}

inline ProblemSpec to_spec(const ProblemFile& pf) {
  return ProblemSpec{pf.source, pf.target, pf.beta, pf.solver.mass_tolerance};
}

// Loads and normalizes in one step; the usual entry point.
inline ValidatedProblem load_problem(const std::string& path,
                                     bool force = false) {
  return validate_problem(to_spec(load_problem_file(path)), force);
}

inline json measure_to_json(const DiscreteMeasure& m) {
  json pts = json::array();
  for (std::size_t k = 0; k < m.size(); ++k)
    pts.push_back({{"coords", m.points()[k]}, {"weight", m.weights()[k]}});
  return {{"points", pts}};
}

inline json problem_to_json(const ProblemFile& pf) {
  json doc;
  doc["format_version"] = 1;
  doc["dimension"] = pf.dimension;
  doc["beta"] = pf.beta;
  if (pf.d >= 0.0) doc["d"] = pf.d;
  if (!pf.demo.empty()) doc["demo"] = pf.demo;
  doc["source"] = measure_to_json(pf.source);
  doc["target"] = measure_to_json(pf.target);
  doc["solver"] = {{"method", pf.solver.method},
                   {"type", pf.solver.type},
                   {"epsilon", pf.solver.epsilon},
                   {"max_points", pf.solver.max_points},
                   {"mass_tolerance", pf.solver.mass_tolerance},
                   {"seed", pf.solver.seed}};
  return doc;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

inline void write_json(const std::string& path, const json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

// --- reflector pair / plan persistence -----------------------------------

inline json pair_to_json(const ReflectorPair& pair) {
  return {{"zeta", pair.zeta},
          {"omega", pair.omega},
          {"beta", pair.beta},
          {"kind", pair.kind == ReflectorKind::TypeA ? "A" : "B"},
          {"gauge", pair.gauge == GaugeAnchor::MinZetaZero ? "min_zeta_zero"
                                                           : "raw"}};
}

inline ReflectorPair pair_from_json(const json& doc) {
  ReflectorPair pair;
  try {
    pair.zeta = doc.at("zeta").get<std::vector<double>>();
    pair.omega = doc.at("omega").get<std::vector<double>>();
    pair.beta = doc.at("beta").get<double>();
    pair.kind = doc.at("kind").get<std::string>() == "B" ? ReflectorKind::TypeB
                                                         : ReflectorKind::TypeA;
    pair.gauge = doc.at("gauge").get<std::string>() == "min_zeta_zero"
                     ? GaugeAnchor::MinZetaZero
                     : GaugeAnchor::Raw;
  } catch (const json::exception& e) {
    throw ParseError(std::string("pair file: ") + e.what());
  }
  return pair;
}

inline json plan_to_json(const TransportPlan& plan) {
  json entries = json::array();
  for (const PlanEntry& e : plan.entries)
    entries.push_back({e.i, e.j, e.mass});
  return {{"entries", entries}, {"cost", plan.cost}};
}

inline TransportPlan plan_from_json(const json& doc) {
  TransportPlan plan;
  try {
    for (const auto& e : doc.at("entries"))
      plan.entries.push_back(
          PlanEntry{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    plan.cost = doc.at("cost").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("plan file: ") + e.what());
  }
  return plan;
}

// --- mesh export ----------------------------------------------------------

// Triangulated height-field mesh over a 2D grid: `v x1 x2 height` vertex
// lines followed by `f a b c` faces with 1-based indices. For 1D supports a
// polyline CSV (`x,height`) is written instead.
inline void write_height_field_mesh(const std::string& path,
                                    const GridSpec& grid,
                                    const std::vector<double>& heights) {
  std::ostringstream os;
  if (grid.shape.size() == 1) {
    os << "x,height\n";
    for (int i = 0; i < grid.shape[0]; ++i)
      os << detail::fmt(grid.origin[0] + grid.spacing[0] * i) << ","
         << detail::fmt(heights[static_cast<std::size_t>(i)]) << "\n";
    write_text(path, os.str());
    return;
  }
  if (grid.shape.size() != 2)
    throw std::invalid_argument("mesh export supports dimension 1 or 2");
  const int rows = grid.shape[0], cols = grid.shape[1];
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      os << "v " << detail::fmt(grid.origin[0] + grid.spacing[0] * r) << " "
         << detail::fmt(grid.origin[1] + grid.spacing[1] * c) << " "
         << detail::fmt(heights[static_cast<std::size_t>(r) * cols + c])
         << "\n";
    }
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) {
      const int a = r * cols + c + 1;  // 1-based
      const int b = r * cols + c + 2;
      const int cc = (r + 1) * cols + c + 1;
      const int dd = (r + 1) * cols + c + 2;
      os << "f " << a << " " << b << " " << dd << "\n";
      os << "f " << a << " " << dd << " " << cc << "\n";
    }
  write_text(path, os.str());
}

// Writes both reflector meshes plus a metadata sidecar recording beta, the
// chosen front offset d (absolute OPL is beta + d), and the gauge.
inline void export_meshes(const ReflectorPair& pair, const ProblemSpec& spec,
                          double d, const GridSpec& first_grid,
                          const GridSpec& second_grid,
                          const std::string& out_dir) {
  const SampledSurfaces s = export_sampling(pair, spec, first_grid, second_grid);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string ext = first_grid.shape.size() == 1 ? ".csv" : ".mesh";
  write_height_field_mesh((fs::path(out_dir) / ("reflector1" + ext)).string(),
                          s.first_grid, s.first_heights);
  write_height_field_mesh((fs::path(out_dir) / ("reflector2" + ext)).string(),
                          s.second_grid, s.second_heights);
  json meta = {{"beta", pair.beta},
               {"d", d},
               {"l", pair.beta + d},
               {"gauge", pair.gauge == GaugeAnchor::MinZetaZero
                             ? "min_zeta_zero"
                             : "raw"},
               {"kind", pair.kind == ReflectorKind::TypeA ? "A" : "B"}};
  write_json((fs::path(out_dir) / "mesh_meta.json").string(), meta);
}

// --- verification report --------------------------------------------------

inline json report_to_json(const VerificationReport& r,
                           const CheckThresholds& thr) {
  json doc;
  doc["thresholds"] = {{"opl", thr.opl},
                       {"flat_reflection", thr.flat_reflection},
                       {"pushforward_plan", thr.pushforward_plan},
                       {"energy_balance", thr.energy_balance},
                       {"slackness", thr.slackness},
                       {"duality", thr.duality}};
  doc["opl_max_abs_dev"] = r.opl_max_abs_dev;
  doc["reflection_max_angle_residual"] = r.reflection_max_angle_residual;
  doc["pushforward_l1_error"] = r.pushforward_l1_error;
  doc["pushforward_map_l1_error"] = r.pushforward_map_l1_error;
  doc["monge_ampere_residuals"] = r.monge_ampere_residuals.empty()
                                      ? json(nullptr)
                                      : json(r.monge_ampere_residuals);
  doc["energy_balance_rel_error"] = r.energy_balance_rel_error;
  doc["cost_A"] = r.cost_A;
  doc["cost_B"] = r.cost_B;
  doc["random_plan_costs"] = {{"count", r.random_plan_costs.count},
                              {"min", r.random_plan_costs.min_cost},
                              {"max", r.random_plan_costs.max_cost},
                              {"mean", r.random_plan_costs.mean_cost}};
  doc["passed"] = {{"opl", r.opl_passed},
                   {"reflection", r.reflection_passed},
                   {"pushforward", r.pushforward_passed},
                   {"energy", r.energy_passed},
                   {"certificate", r.certificate_passed}};
  return doc;
}

inline void write_report(const VerificationReport& r, const std::string& path,
                         const CheckThresholds& thr = {},
                         const json& solver_meta = json::object()) {
  json doc = report_to_json(r, thr);
  doc["solver"] = solver_meta;
  write_json(path, doc);
}

}  // namespace twomirror
