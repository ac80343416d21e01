// conformal-lab: batch front door for the conformal-point analyses.
//
//   conformal-lab run <job.json> [--out report.json] [--plot out.svg]
//                      [--csv samples.csv] [--seed N] [--threads N]
//   conformal-lab verify [--suite all|commutation|graph|determinant|relations]
//   conformal-lab schema
//
// Exit codes: 0 success, 2 precondition/schema errors, 3 budget or
// convergence failures.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "conformal/domain.hpp"
#include "conformal/errors.hpp"
#include "conformal/expr.hpp"
#include "conformal/fields.hpp"
#include "conformal/flow.hpp"
#include "conformal/index.hpp"
#include "conformal/sphere.hpp"
#include "conformal/symplecto.hpp"

using nlohmann::json;
using namespace conformal;

namespace {

// ---------------------------------------------------------------------------
// Deterministic JSON writing: fixed key order, %.17g for every number.

std::string fmt17(double v) {
  char buf[40];
  snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class JsonWriter {
 public:
  std::string out;
  void raw(const std::string& s) { out += s; }
  void str(const std::string& s) {
    out += '"';
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            snprintf(buf, sizeof buf, "\\u%04x", c);
            out += buf;
          } else {
            out += c;
          }
      }
    }
    out += '"';
  }
  void key(const std::string& k, bool first = false) {
    if (!first) out += ',';
    str(k);
    out += ':';
  }
  void num(double v) { out += fmt17(v); }
  void integer(long long v) { out += std::to_string(v); }
  void boolean(bool b) { out += b ? "true" : "false"; }
};

void write_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IOError("cannot open " + tmp + " for writing");
    f << content;
    if (!f.good()) throw IOError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IOError("rename to " + path + " failed: " + ec.message());
}

// ---------------------------------------------------------------------------
// Job parsing.

struct JobSpec {
  json raw;
  std::string kind;
  std::string hamiltonian;       // field/loewner/riemannian/flow
  std::string conformal_factor;  // riemannian
  std::string map_f, map_g;      // map
  std::string support;           // sphere
  json domain;
  int n = 1;
  std::vector<double> epsilons;
  double resolution = 0.02;
  double floor = 1e-9;
  double tolerance = 1e-10;
};

[[noreturn]] void schema_error(const std::string& msg) {
  throw Error("SchemaError", msg);
}

void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) schema_error("unknown key \"" + it.key() + "\" in " + where);
  }
}

JobSpec parse_job(const json& j) {
  if (!j.is_object()) schema_error("job must be a JSON object");
  JobSpec job;
  job.raw = j;
  if (j.value("schema", "") != "conformal-lab/1")
    schema_error("missing or unsupported \"schema\" (want conformal-lab/1)");
  job.kind = j.value("kind", "");
  static const std::vector<std::string> kinds{
      "field", "loewner", "riemannian", "map", "flow", "sphere", "verify"};
  if (std::find(kinds.begin(), kinds.end(), job.kind) == kinds.end())
    schema_error("kind must be one of field|loewner|riemannian|map|flow|"
                 "sphere|verify");

  std::vector<std::string> allowed{"schema", "kind", "resolution", "floor"};
  if (job.kind == "field" || job.kind == "loewner" ||
      job.kind == "riemannian" || job.kind == "flow")
    allowed.push_back("hamiltonian");
  if (job.kind == "riemannian") allowed.push_back("conformal_factor");
  if (job.kind == "loewner") allowed.push_back("n");
  if (job.kind == "flow") {
    allowed.push_back("epsilon");
    allowed.push_back("epsilons");
    allowed.push_back("tolerance");
  }
  if (job.kind == "map") allowed.push_back("map");
  if (job.kind == "sphere") allowed.push_back("support");
  if (job.kind != "sphere" && job.kind != "verify")
    allowed.push_back("domain");
  reject_unknown(j, allowed, "job");

  if (j.contains("resolution")) job.resolution = j["resolution"].get<double>();
  if (j.contains("floor")) job.floor = j["floor"].get<double>();
  if (j.contains("tolerance")) job.tolerance = j["tolerance"].get<double>();
  if (!(job.resolution > 0) || !(job.floor > 0))
    schema_error("resolution and floor must be positive");

  auto need_string = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string())
      schema_error(std::string("kind ") + job.kind + " needs string \"" +
                   key + "\"");
    return j[key].get<std::string>();
  };
  if (job.kind == "field" || job.kind == "loewner" ||
      job.kind == "riemannian" || job.kind == "flow")
    job.hamiltonian = need_string("hamiltonian");
  if (job.kind == "riemannian")
    job.conformal_factor = need_string("conformal_factor");
  if (job.kind == "sphere") job.support = need_string("support");
  if (job.kind == "loewner") {
    if (!j.contains("n") || !j["n"].is_number_integer())
      schema_error("kind loewner needs integer \"n\"");
    job.n = j["n"].get<int>();
  }
  if (job.kind == "flow") {
    if (j.contains("epsilon")) job.epsilons = {j["epsilon"].get<double>()};
    if (j.contains("epsilons"))
      for (const auto& e : j["epsilons"]) job.epsilons.push_back(e.get<double>());
    if (job.epsilons.empty())
      schema_error("kind flow needs \"epsilon\" or \"epsilons\"");
  }
  if (job.kind == "map") {
    if (!j.contains("map") || !j["map"].is_object())
      schema_error("kind map needs object \"map\" with f and g");
    reject_unknown(j["map"], {"f", "g"}, "map");
    job.map_f = j["map"].value("f", "");
    job.map_g = j["map"].value("g", "");
    if (job.map_f.empty() || job.map_g.empty())
      schema_error("map needs expression strings f and g");
  }
  if (j.contains("domain")) {
    job.domain = j["domain"];
    if (!job.domain.is_object()) schema_error("domain must be an object");
    std::string dt = job.domain.value("type", "");
    if (dt == "circle")
      reject_unknown(job.domain, {"type", "center", "radius"}, "domain");
    else if (dt == "ellipse")
      reject_unknown(job.domain, {"type", "a", "b"}, "domain");
    else if (dt == "parametric")
      reject_unknown(job.domain, {"type", "x", "y"}, "domain");
    else
      schema_error("domain.type must be circle|ellipse|parametric");
  }
  return job;
}

PlanarDomain make_domain(const json& d) {
  if (d.is_null()) return PlanarDomain(BoundaryCurve::circle());
  std::string t = d.value("type", "circle");
  if (t == "circle") {
    Vec2 c{0, 0};
    if (d.contains("center")) {
      c.x = d["center"][0].get<double>();
      c.y = d["center"][1].get<double>();
    }
    return PlanarDomain(BoundaryCurve::circle(c, d.value("radius", 1.0)));
  }
  if (t == "ellipse")
    return PlanarDomain(
        BoundaryCurve::ellipse(d.value("a", 1.0), d.value("b", 1.0)));
  return PlanarDomain(BoundaryCurve::parametric(d["x"].get<std::string>(),
                                                d["y"].get<std::string>()));
}

// ---------------------------------------------------------------------------
// Verify suites (shared between `verify` and kind=verify jobs).

struct SuiteResult {
  std::string name;
  double residual = 0;
  double tolerance = 0;
  bool pass = false;
};

SuiteResult suite_commutation() {
  SuiteResult r{"commutation", 0, 1e-6, false};
  for (const BoundaryCurve& curve :
       {BoundaryCurve::circle(), BoundaryCurve::ellipse(1.0, 0.6)}) {
    TubularChart chart(curve);
    auto H = field_from_text("(1 - x^2 - y^2)^2 * (1 + 0.3*x)");
    ScalarField f_ts{
        [H, chart](double t, double s, int order) {
          return pullback_jet(H, chart, t, s, order);
        },
        6, "pullback"};
    for (int n : {2, 3}) {
      std::vector<Vec2> probes;
      for (int i = 0; i < 25; ++i)
        probes.push_back({curve.length() * i / 25.0,
                          0.25 * chart.s_max() * ((i % 5) - 2)});
      r.residual = std::fmax(r.residual,
                             verify_commutation(n, f_ts, chart, probes));
    }
  }
  r.pass = r.residual <= r.tolerance;
  return r;
}

SuiteResult suite_graph() {
  SuiteResult r{"graph", graph_pullback_identity_residual(), 1e-15, false};
  r.pass = r.residual <= r.tolerance;
  return r;
}

SuiteResult suite_determinant(unsigned seed) {
  SuiteResult r{"determinant", 0, 1e-10, false};
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    // Random SL(2) Jacobian: J = [[a, b], [c, (1 + b c)/a]].
    double a = 0, b = U(rng), c = U(rng);
    while (std::fabs(a) < 0.1) a = U(rng);
    Mat2 J{a, b, c, (1.0 + b * c) / a};
    r.residual = std::fmax(
        r.residual,
        std::fabs(transversality_determinant(J) - (2.0 + J.a + J.d)));
  }
  // Shear (x, y) -> (-x + y, -y): not transverse, determinant exactly 0.
  Mat2 shear{-1, 1, 0, -1};
  r.residual = std::fmax(r.residual,
                         std::fabs(transversality_determinant(shear)));
  r.pass = r.residual <= r.tolerance;
  return r;
}

SuiteResult suite_relations() {
  SuiteResult r{"relations", 0, 1e-6, false};
  std::vector<Vec2> probes;
  for (int i = 0; i < 20; ++i) {
    double a = 6.2831853071795862 * i / 20.0;
    probes.push_back({0.55 * std::cos(a), 0.55 * std::sin(a)});
  }
  auto H = field_from_text("0.01*(1 - x^2 - y^2)^2");
  PlanarMap F = map_from_generating_function(H);
  r.residual = derivative_relations_check(H, F, probes);
  r.pass = r.residual <= r.tolerance;
  return r;
}

std::vector<SuiteResult> run_suites(const std::string& which, unsigned seed) {
  std::vector<SuiteResult> out;
  if (which == "all" || which == "commutation")
    out.push_back(suite_commutation());
  if (which == "all" || which == "graph") out.push_back(suite_graph());
  if (which == "all" || which == "determinant")
    out.push_back(suite_determinant(seed));
  if (which == "all" || which == "relations")
    out.push_back(suite_relations());
  if (out.empty())
    schema_error("unknown suite \"" + which +
                 "\" (want all|commutation|graph|determinant|relations)");
  return out;
}

// ---------------------------------------------------------------------------
// Report assembly.

struct RunOutput {
  std::optional<WindingResult> boundary;
  std::vector<ZeroCertificate> certificates;
  int degree_sum = 0;
  long evaluations = 0;
  std::vector<std::string> warnings;
  std::map<std::string, double> diagnostics;  // ordered for determinism
  std::vector<FieldVsFlowRow> experiment;
  std::vector<SuiteResult> suites;
  std::vector<Umbilic> umbilics;
  double line_field_sum = 0;

  // For CSV/SVG emission.
  std::optional<VectorField> field;
  std::optional<PlanarDomain> domain;
  std::optional<SupportFunction> sphere_support;
};

void fill_locate(RunOutput& out, const LocateResult& loc) {
  out.boundary = loc.boundary;
  out.certificates = loc.certificates;
  out.degree_sum = loc.degree_sum;
  out.evaluations = loc.evaluations;
  for (const auto& w : loc.warnings) out.warnings.push_back(w);
}

RunOutput run_job(const JobSpec& job, unsigned seed) {
  RunOutput out;
  if (job.kind == "verify") {
    out.suites = run_suites("all", seed);
    return out;
  }
  if (job.kind == "sphere") {
    SupportFunction Hs = SupportFunction::from_text(job.support);
    out.sphere_support = Hs;
    UmbilicResult u = find_umbilics(Hs, job.resolution, job.floor);
    out.umbilics = u.umbilics;
    out.degree_sum = u.degree_sum;
    out.line_field_sum = u.line_field_sum;
    out.evaluations = u.evaluations;
    out.warnings = u.warnings;
    return out;
  }

  PlanarDomain D = make_domain(job.domain);
  out.domain = D;

  if (job.kind == "field" || job.kind == "loewner" ||
      job.kind == "riemannian") {
    auto H = field_from_text(job.hamiltonian);
    VectorField V;
    if (job.kind == "field")
      V = conformal_defect(H);
    else if (job.kind == "loewner")
      V = loewner_field(H, job.n);
    else
      V = riemannian_defect(H, field_from_text(job.conformal_factor));
    out.field = V;
    fill_locate(out, locate_zeros(V, D, job.resolution, job.floor));
    return out;
  }

  if (job.kind == "map" || job.kind == "flow") {
    PlanarMap F;
    if (job.kind == "map") {
      F.f = field_from_text(job.map_f);
      F.g = field_from_text(job.map_g);
      F.label = "(" + job.map_f + ", " + job.map_g + ")";
      F.symplectic_claimed = true;
    }
    if (job.kind == "flow") {
      auto H = field_from_text(job.hamiltonian);
      if (job.epsilons.size() > 1) {
        out.experiment = field_vs_flow_experiment(
            H, job.epsilons, D, job.resolution, job.floor, job.tolerance);
        out.field = conformal_defect(H);
        return out;
      }
      F = flow_as_map(H, job.epsilons[0], job.tolerance);
    }
    MapConformalResult mc =
        conformal_points_of_map(F, D, job.resolution, job.floor);
    fill_locate(out, mc.zeros);
    out.diagnostics["boundary_identity_residual"] = mc.boundary_identity;
    out.diagnostics["closedness_residual"] = mc.closedness_residual;
    out.diagnostics["moderateness_min"] = mc.moderateness_min;
    if (F.symplectic_claimed)
      out.diagnostics["symplectic_residual"] = *F.worst_symplectic_residual;
    MidpointMap m(F);
    VectorField V;
    V.label = "packed";
    V.value = [F, m](Vec2 w) {
      Vec2 p = m.inverse(w);
      Mat2 J = F.jacobian(p);
      return Vec2{J.a - J.d, J.b + J.c};
    };
    V.jacobian = detail::fd_jacobian(V.value);
    V.jacobian_is_fd = true;
    out.field = V;
    return out;
  }
  schema_error("unhandled kind " + job.kind);
}

std::string report_json(const JobSpec& job, unsigned seed,
                        const RunOutput* out, const Error* err) {
  JsonWriter w;
  w.raw("{");
  w.key("schema", true);
  w.str("conformal-lab/1");
  w.key("job");
  w.raw(job.raw.dump());  // nlohmann: sorted keys, deterministic
  w.key("seed");
  w.integer(seed);
  w.key("status");
  w.str(err ? "error" : "ok");
  if (err) {
    w.key("error");
    w.raw("{");
    w.key("code", true);
    w.str(err->code());
    w.key("message");
    w.str(err->what());
    w.raw("}");
  }
  if (out) {
    if (out->boundary) {
      w.key("boundary_winding");
      w.raw("{");
      w.key("value", true);
      w.num(out->boundary->value);
      w.key("guaranteed");
      w.boolean(out->boundary->guaranteed);
      w.key("min_abs");
      w.num(out->boundary->min_abs);
      w.raw("}");
    }
    w.key("certificates");
    w.raw("[");
    for (size_t i = 0; i < out->certificates.size(); ++i) {
      const auto& c = out->certificates[i];
      if (i) w.raw(",");
      w.raw("{");
      w.key("center", true);
      w.raw("[" + fmt17(c.center.x) + "," + fmt17(c.center.y) + "]");
      w.key("half_width");
      w.num(c.half_width);
      w.key("degree");
      w.integer(c.degree);
      w.key("guaranteed");
      w.boolean(c.guaranteed);
      w.key("polished");
      if (c.polished_ok)
        w.raw("[" + fmt17(c.polished.x) + "," + fmt17(c.polished.y) + "]");
      else
        w.raw("null");
      w.key("polish_residual");
      w.num(c.polish_residual);
      w.raw("}");
    }
    w.raw("]");
    w.key("degree_sum");
    w.integer(out->degree_sum);
    if (!out->umbilics.empty() || out->sphere_support) {
      w.key("umbilics");
      w.raw("[");
      for (size_t i = 0; i < out->umbilics.size(); ++i) {
        const auto& u = out->umbilics[i];
        if (i) w.raw(",");
        w.raw("{");
        w.key("normal", true);
        w.raw("[" + fmt17(u.normal.x) + "," + fmt17(u.normal.y) + "," +
              fmt17(u.normal.z) + "]");
        w.key("surface_point");
        w.raw("[" + fmt17(u.surface_point.x) + "," +
              fmt17(u.surface_point.y) + "," + fmt17(u.surface_point.z) +
              "]");
        w.key("chart");
        w.str(u.chart == 0 ? "north" : "south");
        w.key("degree");
        w.integer(u.degree);
        w.raw("}");
      }
      w.raw("]");
      w.key("line_field_sum");
      w.num(out->line_field_sum);
    }
    if (!out->experiment.empty()) {
      w.key("experiment");
      w.raw("[");
      for (size_t i = 0; i < out->experiment.size(); ++i) {
        const auto& row = out->experiment[i];
        if (i) w.raw(",");
        w.raw("{");
        w.key("epsilon", true);
        w.num(row.eps);
        w.key("kind");
        w.str(i == 0 ? "field" : "flow");
        w.key("certificates");
        w.integer(row.certificate_count);
        w.key("degree_sum");
        w.integer(row.degree_sum);
        w.key("error");
        w.str(row.error);
        w.raw("}");
      }
      w.raw("]");
    }
    if (!out->suites.empty()) {
      w.key("suites");
      w.raw("[");
      for (size_t i = 0; i < out->suites.size(); ++i) {
        const auto& s = out->suites[i];
        if (i) w.raw(",");
        w.raw("{");
        w.key("name", true);
        w.str(s.name);
        w.key("max_residual");
        w.num(s.residual);
        w.key("tolerance");
        w.num(s.tolerance);
        w.key("pass");
        w.boolean(s.pass);
        w.raw("}");
      }
      w.raw("]");
    }
    w.key("diagnostics");
    w.raw("{");
    bool first = true;
    for (const auto& [k, v] : out->diagnostics) {
      w.key(k, first);
      w.num(v);
      first = false;
    }
    w.raw("}");
    w.key("evaluations");
    w.integer(out->evaluations);
    w.key("warnings");
    w.raw("[");
    for (size_t i = 0; i < out->warnings.size(); ++i) {
      if (i) w.raw(",");
      w.str(out->warnings[i]);
    }
    w.raw("]");
  }
  w.raw("}\n");
  return w.out;
}

// ---------------------------------------------------------------------------
// CSV and SVG emission.

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  return out + "\"";
}

std::string make_csv(const RunOutput& out) {
  std::string csv;
  if (out.sphere_support) {
    csv = "chart,x,y,defect_x,defect_y\r\n";
    ScalarField gf = stereo_conformal_factor();
    for (int ci = 0; ci < 2; ++ci) {
      StereoChart chart;
      chart.north = ci == 0;
      VectorField V =
          riemannian_defect(chart_pullback(*out.sphere_support, chart), gf);
      for (int i = 0; i < 24; ++i)
        for (int j = 0; j < 24; ++j) {
          double x = -1.2 + 2.4 * (i + 0.5) / 24;
          double y = -1.2 + 2.4 * (j + 0.5) / 24;
          if (x * x + y * y > 1.44) continue;
          Vec2 v = V.value({x, y});
          csv += std::string(ci == 0 ? "north" : "south") + "," + fmt17(x) +
                 "," + fmt17(y) + "," + fmt17(v.x) + "," + fmt17(v.y) +
                 "\r\n";
        }
    }
    return csv;
  }
  if (!out.field || !out.domain) {
    csv = "name,value\r\n";
    for (const auto& s : out.suites)
      csv += csv_escape(s.name) + "," + fmt17(s.residual) + "\r\n";
    return csv;
  }
  csv = "x,y,field_x,field_y\r\n";
  Vec2 lo = out.domain->bounding_box_min(), hi = out.domain->bounding_box_max();
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      Vec2 p{lo.x + (hi.x - lo.x) * (i + 0.5) / 32,
             lo.y + (hi.y - lo.y) * (j + 0.5) / 32};
      if (!out.domain->inside(p)) continue;
      Vec2 v = out.field->value(p);
      csv += fmt17(p.x) + "," + fmt17(p.y) + "," + fmt17(v.x) + "," +
             fmt17(v.y) + "\r\n";
    }
  return csv;
}

void svg_quiver(std::string& svg, const VectorField& V,
                const std::function<bool(Vec2)>& inside, Vec2 lo, Vec2 hi,
                double ox, double oy, double scale) {
  auto X = [&](double x) { return ox + (x - lo.x) * scale; };
  auto Y = [&](double y) { return oy + (hi.y - y) * scale; };
  // Normalize arrow lengths to the grid pitch.
  double pitch = (hi.x - lo.x) / 24.0;
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      Vec2 p{lo.x + (hi.x - lo.x) * (i + 0.5) / 24,
             lo.y + (hi.y - lo.y) * (j + 0.5) / 24};
      if (!inside(p)) continue;
      Vec2 v = V.value(p);
      double m = v.norm();
      if (m < 1e-300) continue;
      Vec2 tip = p + v * (0.42 * pitch / m);
      svg += "<line x1=\"" + fmt17(X(p.x)) + "\" y1=\"" + fmt17(Y(p.y)) +
             "\" x2=\"" + fmt17(X(tip.x)) + "\" y2=\"" + fmt17(Y(tip.y)) +
             "\" stroke=\"#4477aa\" stroke-width=\"1\" "
             "marker-end=\"url(#ar)\"/>\n";
    }
}

std::string make_svg(const RunOutput& out) {
  std::string svg;
  const char* head =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
      "height=\"WIDTHpx\" viewBox=\"0 0 640 HEIGHT\">\n"
      "<defs><marker id=\"ar\" markerWidth=\"6\" markerHeight=\"6\" "
      "refX=\"5\" refY=\"3\" orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\" "
      "fill=\"#4477aa\"/></marker></defs>\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (out.sphere_support) {
    // Two chart panels side by side.
    svg = head;
    svg.replace(svg.find("WIDTHpx"), 7, "320");
    svg.replace(svg.find("HEIGHT"), 6, "320");
    ScalarField gf = stereo_conformal_factor();
    for (int ci = 0; ci < 2; ++ci) {
      StereoChart chart;
      chart.north = ci == 0;
      VectorField V =
          riemannian_defect(chart_pullback(*out.sphere_support, chart), gf);
      double ox = ci * 320.0;
      double scale = 300.0 / 2.4;
      Vec2 lo{-1.2, -1.2}, hi{1.2, 1.2};
      svg += "<circle cx=\"" + fmt17(ox + 160) +
             "\" cy=\"160\" r=\"150\" fill=\"none\" stroke=\"black\"/>\n";
      svg_quiver(svg, V,
                 [](Vec2 p) { return p.x * p.x + p.y * p.y <= 1.44; }, lo,
                 hi, ox + 10, 10, scale);
      for (const auto& u : out.umbilics) {
        if (u.chart != ci) continue;
        double px = ox + 10 + (u.chart_center.x - lo.x) * scale;
        double py = 10 + (hi.y - u.chart_center.y) * scale;
        svg += "<circle cx=\"" + fmt17(px) + "\" cy=\"" + fmt17(py) +
               "\" r=\"5\" fill=\"none\" stroke=\"#cc3311\" "
               "stroke-width=\"2\"/>\n<text x=\"" + fmt17(px + 7) +
               "\" y=\"" + fmt17(py - 7) + "\" font-size=\"12\">" +
               std::to_string(u.degree) + "</text>\n";
      }
      svg += "<text x=\"" + fmt17(ox + 12) +
             "\" y=\"304\" font-size=\"12\">" +
             std::string(ci == 0 ? "north" : "south") + " chart</text>\n";
    }
    svg += "</svg>\n";
    return svg;
  }

  if (!out.field || !out.domain) {
    svg = head;
    svg.replace(svg.find("WIDTHpx"), 7, "80");
    svg.replace(svg.find("HEIGHT"), 6, "80");
    svg += "<text x=\"10\" y=\"40\" font-size=\"12\">no field plot for this "
           "job kind</text>\n</svg>\n";
    return svg;
  }

  Vec2 lo = out.domain->bounding_box_min(), hi = out.domain->bounding_box_max();
  double span = std::fmax(hi.x - lo.x, hi.y - lo.y);
  double scale = 600.0 / span;
  svg = head;
  svg.replace(svg.find("WIDTHpx"), 7, "640");
  svg.replace(svg.find("HEIGHT"), 6, "640");
  auto X = [&](double x) { return 20 + (x - lo.x) * scale; };
  auto Y = [&](double y) { return 20 + (hi.y - y) * scale; };
  svg += "<path d=\"";
  for (int i = 0; i <= 256; ++i) {
    Vec2 p = out.domain->boundary().point_at_tau((i % 256) / 256.0);
    svg += (i == 0 ? "M" : "L") + fmt17(X(p.x)) + " " + fmt17(Y(p.y));
  }
  svg += "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  PlanarDomain D = *out.domain;
  svg_quiver(svg, *out.field, [D](Vec2 p) { return D.inside(p); }, lo, hi,
             20, 20, scale);
  for (const auto& c : out.certificates) {
    double x = X(c.center.x - c.half_width), y = Y(c.center.y + c.half_width);
    double s = 2 * c.half_width * scale;
    svg += "<rect x=\"" + fmt17(x) + "\" y=\"" + fmt17(y) + "\" width=\"" +
           fmt17(s) + "\" height=\"" + fmt17(s) +
           "\" fill=\"none\" stroke=\"#cc3311\" stroke-width=\"2\"/>\n"
           "<text x=\"" + fmt17(x + s + 4) + "\" y=\"" + fmt17(y - 4) +
           "\" font-size=\"14\" fill=\"#cc3311\">" +
           std::to_string(c.degree) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

int category_exit_code(const Error& e) {
  const std::string& c = e.code();
  if (c == "BudgetExceeded" || c == "StepFailure" || c == "NewtonDivergence")
    return 3;
  return 2;
}

const char* kSchemaText = R"SCHEMA({
  "schema": "conformal-lab/1",
  "kind": "field | loewner | riemannian | map | flow | sphere | verify",
  "hamiltonian": "expression in x, y   (field, loewner, riemannian, flow)",
  "conformal_factor": "expression in x, y   (riemannian)",
  "n": "integer >= 1   (loewner)",
  "epsilon": "number   (flow; or \"epsilons\": [numbers] for the experiment table)",
  "tolerance": "integrator tolerance   (flow, default 1e-10)",
  "map": {"f": "expression in x, y", "g": "expression in x, y"},
  "support": "expression in X, Y, Z on the unit sphere   (sphere)",
  "domain": {"type": "circle", "center": [0, 0], "radius": 1.0},
  "resolution": "certificate box size, default 0.02",
  "floor": "vanishing threshold along contours, default 1e-9"
})SCHEMA";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conformal-lab: conformal points of area preserving maps"};
  app.require_subcommand(1);

  std::string job_path, out_path, plot_path, csv_path;
  unsigned seed = 0;
  int threads = 1;
  auto* run = app.add_subcommand("run", "run a JSON job");
  run->add_option("job", job_path, "job JSON file")->required();
  run->add_option("--out", out_path, "report JSON path");
  run->add_option("--plot", plot_path, "SVG plot path");
  run->add_option("--csv", csv_path, "CSV samples path");
  run->add_option("--seed", seed, "seed for randomized probes");
  run->add_option("--threads", threads, "worker thread cap");

  std::string suite = "all";
  auto* verify = app.add_subcommand("verify", "run lemma-check suites");
  verify->add_option("--suite", suite,
                     "all|commutation|graph|determinant|relations");

  auto* schema = app.add_subcommand("schema", "print the job JSON schema");

  CLI11_PARSE(app, argc, argv);

  if (schema->parsed()) {
    printf("%s\n", kSchemaText);
    return 0;
  }

  if (verify->parsed()) {
    try {
      auto suites = run_suites(suite, 0);
      bool all_pass = true;
      for (const auto& s : suites) {
        printf("%-12s max residual %.3e (tol %.0e)  %s\n", s.name.c_str(),
               s.residual, s.tolerance, s.pass ? "PASS" : "FAIL");
        all_pass = all_pass && s.pass;
      }
      return all_pass ? 0 : 2;
    } catch (const Error& e) {
      fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
      return category_exit_code(e);
    }
  }

  // run
  JobSpec job;
  try {
    std::ifstream f(job_path);
    if (!f) throw IOError("cannot read " + job_path);
    json j = json::parse(f, nullptr, true);
    job = parse_job(j);
  } catch (const json::exception& e) {
    fprintf(stderr, "error [SchemaError]: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
    return category_exit_code(e);
  }

  RunOutput out;
  std::optional<Error> failure;
  try {
    out = run_job(job, seed);
  } catch (const Error& e) {
    failure.emplace(e);
  }

  std::string report = report_json(job, seed, failure ? nullptr : &out,
                                   failure ? &*failure : nullptr);
  try {
    if (!out_path.empty())
      write_atomic(out_path, report);
    else
      fputs(report.c_str(), stdout);
    if (!failure) {
      if (!csv_path.empty()) write_atomic(csv_path, make_csv(out));
      if (!plot_path.empty()) write_atomic(plot_path, make_svg(out));
    }
  } catch (const Error& e) {
    fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
    return 2;
  }
  if (failure) {
    fprintf(stderr, "error [%s]: %s\n", failure->code().c_str(),
            failure->what());
    return category_exit_code(*failure);
  }
  return 0;
}
