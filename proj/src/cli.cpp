#include "vclone/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vclone/cloning.hpp"
#include "vclone/sampler.hpp"
#include "vclone/sdp.hpp"

namespace vclone::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(8) << v;
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double number_at(const json& v, const std::string& context) {
  if (!v.is_number()) throw ParseError(context + ": expected a number");
  return v.get<double>();
}

ComplexMatrix parse_matrix(const json& rows, const std::string& context) {
  if (!rows.is_array() || rows.empty()) throw ParseError(context + ": expected a non-empty array of rows");
  const auto d = static_cast<Eigen::Index>(rows.size());
  ComplexMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const json& row = rows[i];
    const std::string rc = context + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d) {
      throw ParseError(rc + ": expected a row of " + std::to_string(d) + " entries");
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      const json& z = row[j];
      const std::string ec = rc + "[" + std::to_string(j) + "]";
      if (z.is_number()) {
        m(i, j) = Complex(z.get<double>(), 0.0);
      } else if (z.is_array() && z.size() == 2) {
        m(i, j) = Complex(number_at(z[0], ec + "[0]"), number_at(z[1], ec + "[1]"));
      } else {
        throw ParseError(ec + ": expected [re, im]");
      }
    }
  }
  return m;
}

json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

DensityMatrix preset(const std::string& name, const std::string& context) {
  if (name == "zero") return DensityMatrix::from_bloch(0, 0, 1);
  if (name == "one") return DensityMatrix::from_bloch(0, 0, -1);
  if (name == "plus") return DensityMatrix::from_bloch(1, 0, 0);
  if (name == "minus") return DensityMatrix::from_bloch(-1, 0, 0);
  if (name == "y+") return DensityMatrix::from_bloch(0, 1, 0);
  if (name == "y-") return DensityMatrix::from_bloch(0, -1, 0);
  if (name == "mixed") return DensityMatrix::maximally_mixed(2);
  throw ParseError(context + ": unknown preset '" + name +
                   "' (expected zero, one, plus, minus, y+, y-, mixed)");
}

std::vector<double> as_vector(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

// Dominant eigenvector of a state that must be pure.
PureState as_pure(const DensityMatrix& rho, const std::string& context) {
  if (std::abs(rho.purity() - 1.0) > 1e-9) {
    throw ParseError(context + ": state is not pure (purity " + fmt(rho.purity()) + ")");
  }
  const HermitianEigen e = eig_hermitian(rho.op());
  return PureState::normalized(e.vectors.col(0));
}

std::vector<DensityMatrix> densities(const std::vector<StateEntry>& states) {
  std::vector<DensityMatrix> out;
  for (const auto& s : states) out.push_back(s.rho);
  return out;
}

double clone_residual(const QPDecomposition& q, const std::vector<DensityMatrix>& states, int n) {
  double r = 0.0;
  for (const auto& s : states) {
    r = std::max(r, max_abs(apply_qpd(q, s.op()).matrix() - tensor_power(s.matrix(), n)));
  }
  return r;
}

json qpd_summary(const QPDecomposition& q) {
  return {{"lambda_plus", q.lambda_plus()},
          {"lambda_minus", q.lambda_minus()},
          {"cost", qpd_cost(q)},
          {"dim_in", q.dim_in()},
          {"dim_out", q.dim_out()},
          {"plus_branch_cptp", is_cptp(q.choi_plus(), 1e-9).ok},
          {"minus_branch_cptp", is_cptp(q.choi_minus(), 1e-9).ok}};
}

void flatten(const json& v, const std::string& key, std::vector<std::pair<std::string, std::string>>& rows) {
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) {
      flatten(it.value(), key.empty() ? it.key() : key + "." + it.key(), rows);
    }
  } else if (v.is_array()) {
    const bool flat = std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_primitive(); });
    if (!flat) {
      if (std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_object(); })) {
        for (std::size_t i = 0; i < v.size(); ++i) flatten(v[i], key + "[" + std::to_string(i) + "]", rows);
      } else {
        rows.emplace_back(key, "<" + std::to_string(v.size()) + " rows>");
      }
      return;
    }
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += v[i].is_number_float() ? fmt(v[i].get<double>()) : v[i].dump();
    }
    rows.emplace_back(key, s + "]");
  } else if (v.is_number_float()) {
    rows.emplace_back(key, fmt(v.get<double>()));
  } else if (v.is_string()) {
    rows.emplace_back(key, v.get<std::string>());
  } else {
    rows.emplace_back(key, v.dump());
  }
}

// Exact Choi-level comparison used by the QPD round trip.
double qpd_distance(const QPDecomposition& a, const QPDecomposition& b) {
  return max_abs(a.combined().matrix() - b.combined().matrix());
}

std::vector<StateEntry> demo_pair() { return parse_state_list("zero,plus"); }

}  // namespace

// ---------------------------------------------------------------------------
// Input parsing

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line/column
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": invalid JSON (" + e.what() + ")");
  }
}

DensityMatrix parse_state(const json& spec, const std::string& context) {
  try {
    if (spec.is_string()) return preset(spec.get<std::string>(), context);
    if (!spec.is_object()) throw ParseError(context + ": expected a preset name or an object");
    const int kinds = static_cast<int>(spec.contains("preset")) + static_cast<int>(spec.contains("bloch")) +
                      static_cast<int>(spec.contains("matrix"));
    if (kinds != 1) throw ParseError(context + ": give exactly one of 'preset', 'bloch', 'matrix'");
    if (spec.contains("preset")) {
      if (!spec["preset"].is_string()) throw ParseError(context + ".preset: expected a string");
      return preset(spec["preset"].get<std::string>(), context + ".preset");
    }
    if (spec.contains("bloch")) {
      const json& b = spec["bloch"];
      if (!b.is_array() || b.size() != 3) throw ParseError(context + ".bloch: expected [x, y, z]");
      const double x = number_at(b[0], context + ".bloch[0]");
      const double y = number_at(b[1], context + ".bloch[1]");
      const double z = number_at(b[2], context + ".bloch[2]");
      if (x * x + y * y + z * z > 1.0 + 1e-12) throw ParseError(context + ".bloch: vector longer than 1");
      return DensityMatrix::from_bloch(x, y, z);
    }
    return DensityMatrix(parse_matrix(spec["matrix"], context + ".matrix"));
  } catch (const LinalgError& e) {
    throw ParseError(context + ": " + e.what());
  }
}

StateEntry parse_state_entry(const json& spec, const std::string& context) {
  StateEntry e;
  e.spec = spec;
  e.rho = parse_state(spec, context);
  if (spec.is_string()) {
    e.label = spec.get<std::string>();
  } else if (spec.contains("label") && spec["label"].is_string()) {
    e.label = spec["label"].get<std::string>();
  } else if (spec.contains("preset") && spec["preset"].is_string()) {
    e.label = spec["preset"].get<std::string>();
  } else {
    e.label = context;
  }
  return e;
}

std::vector<StateEntry> parse_state_list(const std::string& csv) {
  std::vector<StateEntry> out;
  std::stringstream ss(csv);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) throw ParseError("--states: empty entry at position " + std::to_string(i));
    out.push_back(parse_state_entry(json(item), "--states[" + std::to_string(i) + "]"));
    ++i;
  }
  if (out.empty()) throw ParseError("--states: no states given");
  return out;
}

std::vector<StateEntry> states_from_json(const json& doc, const std::string& context) {
  if (!doc.is_object()) throw ParseError(context + ": expected a JSON object");
  if (!doc.contains("schema") || doc["schema"] != kStatesSchema) {
    throw ParseError(context + ".schema: expected \"" + std::string(kStatesSchema) + "\"");
  }
  if (!doc.contains("states") || !doc["states"].is_array() || doc["states"].empty()) {
    throw ParseError(context + ".states: expected a non-empty array");
  }
  std::vector<StateEntry> out;
  for (std::size_t i = 0; i < doc["states"].size(); ++i) {
    out.push_back(parse_state_entry(doc["states"][i], context + ".states[" + std::to_string(i) + "]"));
  }
  const int d = out.front().rho.dim();
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].rho.dim() != d) {
      throw ParseError(context + ".states[" + std::to_string(i) + "]: dimension " +
                       std::to_string(out[i].rho.dim()) + " differs from " + std::to_string(d));
    }
  }
  return out;
}

std::vector<StateEntry> load_states(const std::string& path) {
  return states_from_json(parse_json_text(read_file(path), path), path);
}

json states_document(const std::vector<StateEntry>& states) {
  json arr = json::array();
  for (const auto& s : states) arr.push_back(s.spec);
  return {{"schema", kStatesSchema}, {"states", arr}};
}

json qpd_to_json(const QPDecomposition& q) {
  return {{"schema", kQpdSchema},
          {"dim_in", q.dim_in()},
          {"dim_out", q.dim_out()},
          {"lambda_plus", q.lambda_plus()},
          {"lambda_minus", q.lambda_minus()},
          {"choi_plus", matrix_to_json(q.choi_plus().matrix())},
          {"choi_minus", matrix_to_json(q.choi_minus().matrix())}};
}

QPDecomposition qpd_from_json(const json& doc, const std::string& context) {
  if (!doc.is_object()) throw ParseError(context + ": expected a JSON object");
  if (!doc.contains("schema") || doc["schema"] != kQpdSchema) {
    throw ParseError(context + ".schema: expected \"" + std::string(kQpdSchema) + "\"");
  }
  for (const char* key : {"dim_in", "dim_out", "lambda_plus", "lambda_minus", "choi_plus", "choi_minus"}) {
    if (!doc.contains(key)) throw ParseError(context + ": missing field '" + key + "'");
  }
  if (!doc["dim_in"].is_number_integer() || !doc["dim_out"].is_number_integer()) {
    throw ParseError(context + ": dim_in and dim_out must be integers");
  }
  const int din = doc["dim_in"].get<int>();
  const int dout = doc["dim_out"].get<int>();
  const double lp = number_at(doc["lambda_plus"], context + ".lambda_plus");
  const double lm = number_at(doc["lambda_minus"], context + ".lambda_minus");
  try {
    const ChoiMatrix jp(din, dout, HermitianOperator(parse_matrix(doc["choi_plus"], context + ".choi_plus")));
    const ChoiMatrix jm(din, dout, HermitianOperator(parse_matrix(doc["choi_minus"], context + ".choi_minus")));
    return QPDecomposition(lp, lm, jp, jm);
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(context + ": " + e.what());
  }
}

void save_qpd(const std::string& path, const QPDecomposition& q) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot write file");
  out << qpd_to_json(q).dump(2) << "\n";
}

QPDecomposition load_qpd(const std::string& path) {
  return qpd_from_json(parse_json_text(read_file(path), path), path);
}

HermitianOperator parse_observable(const std::string& text) {
  if (!text.empty() && text.front() == '{') {
    const json doc = parse_json_text(text, "--observable");
    if (!doc.contains("matrix")) throw ParseError("--observable: expected {\"matrix\": ...}");
    try {
      return HermitianOperator(parse_matrix(doc["matrix"], "--observable.matrix"));
    } catch (const LinalgError& e) {
      throw ParseError(std::string("--observable: ") + e.what());
    }
  }
  try {
    return HermitianOperator(pauli::from_word(text));
  } catch (const std::exception& e) {
    throw ParseError("--observable: '" + text + "' is not a Pauli word (" + e.what() + ")");
  }
}

double default_tolerance() {
  const char* env = std::getenv("VCLONE_TOL");
  if (env == nullptr || *env == '\0') return sdp::Options{}.tol;
  char* end = nullptr;
  const double v = std::strtod(env, &end);
  if (end == env || *end != '\0' || !(v > 0.0) || !std::isfinite(v)) {
    throw ParseError(std::string("VCLONE_TOL: expected a positive number, got '") + env + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Reports

void Report::check(const std::string& name, bool passed, const std::string& detail) {
  checks.push_back({name, passed, detail});
  if (!passed && exit_code == kSuccess) exit_code = kCrossCheckFailure;
}

bool Report::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

json Report::to_json() const {
  json cs = json::array();
  for (const auto& c : checks) cs.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  json j = {{"command", command},   {"version", kVersion}, {"inputs", inputs},
            {"results", results},   {"checks", cs},        {"timings", timings},
            {"exit_code", exit_code}};
  if (!message.empty()) j["message"] = message;
  return j;
}

std::string Report::to_text() const {
  std::ostringstream os;
  os << "vclone " << command << "\n";
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(results, "", rows);
  std::size_t w = 0;
  for (const auto& r : rows) w = std::max(w, r.first.size());
  for (const auto& r : rows) os << "  " << std::left << std::setw(static_cast<int>(w) + 2) << r.first << r.second << "\n";
  if (!checks.empty()) {
    os << "checks\n";
    for (const auto& c : checks) {
      os << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name;
      if (!c.detail.empty()) os << "  " << c.detail;
      os << "\n";
    }
  }
  if (!message.empty()) os << message << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Commands

Report cmd_clonable(const std::vector<StateEntry>& states) {
  const auto t0 = Clock::now();
  Report r;
  r.command = "clonable";
  r.inputs["states"] = states_document(states);
  const std::vector<DensityMatrix> rho = densities(states);
  const cloning::ClonabilityResult c = cloning::check_virtually_clonable(rho);
  r.results["clonable"] = c.clonable;
  r.results["rank"] = c.rank;
  r.results["num_states"] = states.size();
  r.results["gram_singular_values"] = as_vector(c.gram_singular_values);
  if (!c.clonable) {
    try {
      r.results["min_copies"] = cloning::min_copies_for_independence(rho, static_cast<int>(rho.size()));
    } catch (const cloning::CloningError& e) {
      r.results["min_copies"] = nullptr;
      r.results["min_copies_error"] = e.what();
    }
    r.message = "states are linearly dependent: no virtual cloner exists";
  }
  r.timings["total_seconds"] = seconds_since(t0);
  return r;
}

Report cmd_cost(const std::vector<StateEntry>& states, const CostOptions& opts) {
  const auto t0 = Clock::now();
  Report r;
  r.command = "cost";
  r.inputs = {{"states", states_document(states)}, {"k", opts.k}, {"n", opts.n}, {"tol", opts.tol}};
  cloning::CloneProblem p;
  p.states = densities(states);
  p.k = opts.k;
  p.n = opts.n;
  sdp::Options so;
  so.tol = opts.tol;
  cloning::CloneCostResult c;
  try {
    c = cloning::optimal_cost(p, so);
  } catch (const cloning::NotClonableError& e) {
    r.exit_code = kNoGo;
    r.results["clonable"] = false;
    r.message = std::string("no-go: ") + e.what();
    r.timings["total_seconds"] = seconds_since(t0);
    return r;
  }
  r.results["clonable"] = true;
  r.results["eta"] = c.eta;
  r.results["qpd"] = qpd_summary(c.qpd);
  r.results["clone_residual"] = c.clone_residual;
  const auto& sr = c.solver_report;
  r.results["solver"] = {{"primal_value", sr.primal_value},
                         {"dual_value", sr.dual_value},
                         {"duality_gap", sr.gap},
                         {"primal_iterations", sr.primal_iterations},
                         {"dual_iterations", sr.dual_iterations},
                         {"separate_dual_solve", sr.separate_dual}};
  const cloning::DualFeasibility f = cloning::check_dual_certificate(p, c.dual_certificate);
  r.results["certificate"] = {{"objective", f.objective},
                              {"lower_min_eigenvalue", f.lower_min_eigenvalue},
                              {"upper_min_eigenvalue", f.upper_min_eigenvalue}};
  r.check("duality_gap", sr.gap < 1e-6, "gap " + fmt(sr.gap) + " < 1e-6");
  r.check("clone_residual", c.clone_residual < 1e-6, fmt(c.clone_residual) + " < 1e-6");
  r.check("branches_cptp", is_cptp(c.qpd.choi_plus(), 1e-9).ok && is_cptp(c.qpd.choi_minus(), 1e-9).ok, "");
  r.check("certificate_feasible", f.feasible(1e-6), "");
  r.check("certificate_objective", f.objective <= c.eta + 1e-6, fmt(f.objective) + " <= eta + 1e-6");

  if (states.size() == 2 && opts.k == 1) {
    const cloning::CloneBounds b = cloning::cost_bounds(p.states[0], p.states[1], opts.n);
    r.results["bounds"] = {{"lower", b.lower}, {"upper", b.upper}};
    r.check("within_bounds", b.lower - 1e-7 <= c.eta && c.eta <= b.upper + 1e-7,
            fmt(b.lower) + " <= " + fmt(c.eta) + " <= " + fmt(b.upper));
  }
  if (states.size() == 2 && std::abs(p.states[0].purity() - 1) < 1e-9 && std::abs(p.states[1].purity() - 1) < 1e-9) {
    const double a = cloning::pure_pair_cost(as_pure(p.states[0], "state 0"), as_pure(p.states[1], "state 1"),
                                             opts.k, opts.n);
    r.results["analytic_eta"] = a;
    r.check("analytic_agreement", std::abs(a - c.eta) < 1e-5, "|eta - analytic| = " + fmt(std::abs(a - c.eta)));
  }
  r.timings["solver_seconds"] = sr.seconds;
  r.timings["total_seconds"] = seconds_since(t0);
  return r;
}

Report cmd_bounds(const std::vector<StateEntry>& states, int n, const std::string& priors) {
  const auto t0 = Clock::now();
  Report r;
  r.command = "bounds";
  r.inputs = {{"states", states_document(states)}, {"n", n}, {"priors", priors}};
  if (states.size() != 2) throw ParseError("bounds: needs exactly two states");
  std::vector<double> grid;
  if (priors == "grid") {
    grid = cloning::default_prior_grid();
  } else {
    char* end = nullptr;
    const double p1 = std::strtod(priors.c_str(), &end);
    if (end == priors.c_str() || *end != '\0' || !(p1 > 0.0 && p1 < 1.0)) {
      throw ParseError("--priors: expected 'grid' or a number in (0, 1), got '" + priors + "'");
    }
    grid = {p1};
  }
  const cloning::CloneBounds b = cloning::cost_bounds(states[0].rho, states[1].rho, n, grid);
  r.results["lower"] = b.lower;
  r.results["upper"] = b.upper;
  r.results["equal_prior_lower"] = b.equal_prior_lower;
  r.results["priors_used"] = {b.priors_used.first, b.priors_used.second};
  r.check("ordered", 1.0 - 1e-12 <= b.lower && b.lower <= b.upper + 1e-12, "1 <= lower <= upper");
  r.check("grid_not_worse", b.lower >= b.equal_prior_lower - 1e-12, "lower >= equal-prior lower");
  r.timings["total_seconds"] = seconds_since(t0);
  return r;
}

Report cmd_map(const std::vector<StateEntry>& states, const std::string& method, int n,
               const std::string& out, double tol) {
  const auto t0 = Clock::now();
  Report r;
  r.command = "map";
  r.inputs = {{"states", states_document(states)}, {"method", method}, {"n", n}, {"out", out}};
  const std::vector<DensityMatrix> rho = densities(states);
  if (!cloning::check_virtually_clonable(rho).clonable) {
    r.exit_code = kNoGo;
    r.message = "no-go: states are linearly dependent, no virtual cloner exists";
    return r;
  }
  sdp::Options so;
  so.tol = tol;
  QPDecomposition q;
  if (method == "thm1") {
    const ChoiMatrix j = cloning::build_cloning_map(rho, n);
    const MapDiagnostics d = is_hptp(j, 1e-9);
    r.results["hptp"] = d.ok;
    r.check("hptp", d.ok, "TP error " + fmt(d.trace_preservation_error));
    try {
      q = optimal_qpd(j, so);
    } catch (const ChannelError& e) {
      throw cloning::SolverFailure(e.what(), sdp::Status::MaxIterations);
    }
  } else if (method == "pure-optimal") {
    if (rho.size() != 2) throw ParseError("--method pure-optimal: needs exactly two states");
    q = cloning::optimal_pure_cloner(as_pure(rho[0], "state 0"), as_pure(rho[1], "state 1"), 1, n);
    const double expected = cloning::pure_pair_cost(as_pure(rho[0], "state 0"), as_pure(rho[1], "state 1"), 1, n);
    r.results["analytic_eta"] = expected;
    r.check("cost_matches_formula", std::abs(qpd_cost(q) - expected) < 1e-12,
            "|cost - formula| = " + fmt(std::abs(qpd_cost(q) - expected)));
  } else if (method == "discrimination") {
    q = cloning::discrimination_cloner(rho, n, so);
    if (rho.size() == 2) {
      const double expected = 4.0 / trace_norm(rho[0].op() - rho[1].op()) - 1.0;
      r.results["expected_cost"] = expected;
      r.check("cost_matches_upper_bound", std::abs(qpd_cost(q) - expected) < 1e-9,
              "|cost - (4/|r1-r2| - 1)| = " + fmt(std::abs(qpd_cost(q) - expected)));
    }
  } else {
    throw ParseError("--method: expected thm1, pure-optimal or discrimination, got '" + method + "'");
  }
  const double res = clone_residual(q, rho, n);
  r.results["qpd"] = qpd_summary(q);
  r.results["clone_residual"] = res;
  r.check("clone_residual", res < (method == "pure-optimal" ? 1e-9 : 1e-8), fmt(res));
  if (!out.empty()) {
    save_qpd(out, q);
    const QPDecomposition back = load_qpd(out);
    const double rt = clone_residual(back, rho, n);
    r.results["written"] = out;
    r.check("round_trip", rt < 1e-8 && qpd_distance(q, back) < 1e-12, "reloaded residual " + fmt(rt));
  }
  r.timings["total_seconds"] = seconds_since(t0);
  return r;
}

Report cmd_simulate(const SimulateOptions& o) {
  const auto t0 = Clock::now();
  Report r;
  r.command = "simulate";
  r.inputs = {{"qpd_file", o.qpd_file}, {"state", o.state},   {"observable", o.observable},
              {"rounds", o.rounds},     {"seed", o.seed},     {"trials", o.trials},
              {"epsilon", o.epsilon}};
  const QPDecomposition q = load_qpd(o.qpd_file);
  const json state_spec = (!o.state.empty() && o.state.front() == '{') ? parse_json_text(o.state, "--state")
                                                                        : json(o.state);
  const DensityMatrix rho = parse_state(state_spec, "--state");
  const HermitianOperator x = parse_observable(o.observable);
  if (rho.dim() != q.dim_in()) {
    throw ParseError("--state: dimension " + std::to_string(rho.dim()) + " does not match map input " +
                     std::to_string(q.dim_in()));
  }
  if (x.dim() != q.dim_out()) {
    throw ParseError("--observable: dimension " + std::to_string(x.dim()) + " does not match map output " +
                     std::to_string(q.dim_out()));
  }
  if (o.rounds == 0) throw ParseError("--rounds: must be positive");
  const double eta = qpd_cost(q);
  const double truth = sampler::exact_expectation(q, rho.op(), x);
  r.results["eta"] = eta;
  r.results["exact_expectation"] = truth;

  const double x2 = max_abs(x.matrix() * x.matrix() - ComplexMatrix::Identity(x.dim(), x.dim()));
  const double n = static_cast<double>(o.rounds);
  if (x2 <= 1e-10) {
    const sampler::DichotomicObservable obs(x);
    const sampler::Estimate e = sampler::simulate_virtual_measurement(q, rho, obs, o.rounds, o.seed, o.threads);
    r.results["mean"] = e.mean;
    r.results["second_moment"] = e.second_moment;
    r.results["standard_error"] = e.standard_error;
    r.results["plus_branch_fraction"] = static_cast<double>(e.plus_branch_count) / n;
    json curve = json::array();
    for (double eps : {0.01, 0.05, 0.1}) curve.push_back({{"epsilon", eps}, {"bound", e.hoeffding(eps)}});
    r.results["hoeffding"] = curve;
    r.check("mean_within_5_sigma", std::abs(e.mean - truth) <= 5 * eta / std::sqrt(n),
            "|mean - exact| = " + fmt(std::abs(e.mean - truth)) + " <= 5 eta/sqrt(N) = " + fmt(5 * eta / std::sqrt(n)));
    r.check("second_moment_exact", e.second_moment == eta * eta, "");
    if (o.trials > 0) {
      const auto tc = Clock::now();
      const sampler::Coverage c =
          sampler::empirical_coverage(q, rho, obs, o.rounds, o.trials, o.epsilon, o.seed, o.threads);
      r.results["coverage"] = {{"trials", c.trials},     {"epsilon", o.epsilon}, {"fraction", c.fraction},
                               {"bound", c.bound},       {"slack", c.slack},     {"exceedances", c.exceedances}};
      r.check("coverage_within_bound", c.within_bound(),
              fmt(c.fraction) + " <= " + fmt(c.bound) + " + " + fmt(c.slack));
      r.timings["coverage_seconds"] = seconds_since(tc);
    }
  } else {
    const sampler::GeneralEstimate g = sampler::simulate_general_observable(q, rho, x, o.rounds, o.seed, o.threads);
    r.results["mean"] = g.mean;
    r.results["x_min"] = g.x_min;
    r.results["x_max"] = g.x_max;
    r.results["effective_eta"] = g.effective_eta;
    r.results["standard_error"] = g.range_scale * g.rescaled.standard_error;
    r.results["caveat"] = g.caveat;
    json curve = json::array();
    for (double eps : {0.01, 0.05, 0.1}) {
      curve.push_back({{"epsilon", eps}, {"bound", sampler::hoeffding_bound(g.effective_eta, o.rounds, eps)}});
    }
    r.results["hoeffding"] = curve;
    r.check("mean_within_5_sigma", std::abs(g.mean - truth) <= 5 * g.effective_eta / std::sqrt(n),
            "|mean - exact| = " + fmt(std::abs(g.mean - truth)));
    if (o.trials > 0) r.message = "coverage runs need a dichotomic observable; --trials ignored";
  }
  r.timings["total_seconds"] = seconds_since(t0);
  return r;
}

Report cmd_demo(std::uint64_t seed, double tol) {
  const auto t0 = Clock::now();
  Report r;
  r.command = "demo";
  r.inputs = {{"seed", seed}, {"tol", tol}};
  const std::vector<StateEntry> pair = demo_pair();
  const double eta2 = std::sqrt(1.5);
  auto stage = [&](const std::string& name, const Report& sub) {
    r.results[name] = sub.results;
    r.timings[name + "_seconds"] = sub.timings.value("total_seconds", 0.0);
    for (const auto& c : sub.checks) r.check(name + "." + c.name, c.passed, c.detail);
  };

  const Report cl = cmd_clonable(pair);
  stage("clonable", cl);
  r.check("clonable.zero_plus", cl.results["clonable"].get<bool>() && cl.results["rank"] == 2, "");

  const Report dep = cmd_clonable(parse_state_list("zero,one,mixed"));
  stage("dependent", dep);
  r.check("dependent.not_clonable", !dep.results["clonable"].get<bool>(), "");
  r.check("dependent.min_copies", dep.results.value("min_copies", json(0)) == 2, "");
  {
    cloning::CloneProblem p;
    p.states = densities(parse_state_list("zero,one,mixed"));
    const sdp::Status s = sdp::solve(cloning::primal_sdp(p)).status;
    r.check("dependent.primal_infeasible", s == sdp::Status::Infeasible, sdp::to_string(s));
  }

  CostOptions co;
  co.tol = tol;
  const Report c2 = cmd_cost(pair, co);
  stage("cost_n2", c2);
  const double e2 = c2.results.value("eta", 0.0);
  r.check("cost_n2.sqrt_3_2", std::abs(e2 - eta2) < 1e-6, fmt(e2));
  co.n = 3;
  const Report c3 = cmd_cost(pair, co);
  stage("cost_n3", c3);
  r.check("cost_n3.sqrt_7_4", std::abs(c3.results.value("eta", 0.0) - std::sqrt(1.75)) < 1e-6, "");

  const Report b = cmd_bounds(pair, 2, "grid");
  stage("bounds", b);
  r.check("bounds.equal_prior_lower", std::abs(b.results["equal_prior_lower"].get<double>() - eta2) < 1e-9, "");
  r.check("bounds.upper", std::abs(b.results["upper"].get<double>() - (2 * std::sqrt(2.0) - 1)) < 1e-9, "");
  r.check("bounds.sandwich",
          b.results["lower"].get<double>() - 1e-7 <= e2 && e2 <= b.results["upper"].get<double>() + 1e-7, "");

  const Report mp = cmd_map(pair, "pure-optimal", 2, "", tol);
  stage("map_pure_optimal", mp);
  const Report md = cmd_map(pair, "discrimination", 2, "", tol);
  stage("map_discrimination", md);
  const Report md3 = cmd_map(pair, "discrimination", 3, "", tol);
  r.check("map_discrimination.independent_of_n",
          md3.results["qpd"]["cost"].get<double>() == md.results["qpd"]["cost"].get<double>(), "");
  const Report mt = cmd_map(pair, "thm1", 2, "", tol);
  stage("map_thm1", mt);
  r.check("map_thm1.cost_at_least_optimal", mt.results["qpd"]["cost"].get<double>() >= e2 - 1e-6, "");

  // serialize the optimal cloner and simulate it from the file
  const QPDecomposition q = cloning::optimal_pure_cloner(as_pure(pair[0].rho, "zero"), as_pure(pair[1].rho, "plus"), 1, 2);
  const json doc = qpd_to_json(q);
  const QPDecomposition back = qpd_from_json(parse_json_text(doc.dump(), "demo"));
  r.check("qpd_round_trip", clone_residual(back, densities(pair), 2) < 1e-8 && qpd_distance(q, back) < 1e-12, "");

  const std::string tmp = (std::filesystem::temp_directory_path() /
                           ("vclone_demo_" + std::to_string(seed) + "_" +
                            std::to_string(Clock::now().time_since_epoch().count()) + ".json"))
                              .string();
  save_qpd(tmp, q);
  SimulateOptions so;
  so.qpd_file = tmp;
  so.state = "plus";
  so.observable = "XX";
  so.rounds = 1000000;
  so.seed = seed;
  const Report s1 = cmd_simulate(so);
  stage("simulate", s1);
  r.check("simulate.exact_expectation_one", std::abs(s1.results["exact_expectation"].get<double>() - 1.0) < 1e-10, "");
  so.state = "zero";
  so.observable = "ZZ";
  so.rounds = 10000;
  so.trials = 200;
  const Report s2 = cmd_simulate(so);
  stage("coverage", s2);
  std::filesystem::remove(tmp);

  r.results["summary"] = {{"checks", r.checks.size()},
                          {"failed", std::count_if(r.checks.begin(), r.checks.end(),
                                                   [](const Check& c) { return !c.passed; })}};
  r.message = r.all_passed() ? "all cross-checks passed" : "cross-check failures";
  r.timings["total_seconds"] = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------
// argv

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Virtual cloning of quantum states: clonability, optimal cost, bounds, maps, sampling"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  bool as_json = false;
  double tol_flag = 0.0;
  app.add_flag("--json", as_json, "Emit the report as JSON");
  app.add_option("--tol", tol_flag, "Solver tolerance (overrides VCLONE_TOL)")->check(CLI::PositiveNumber);

  std::string states_file, states_csv;
  auto add_states = [&](CLI::App* sub) {
    auto* f = sub->add_option("states_file", states_file, "JSON file with schema vclone-states/1");
    auto* s = sub->add_option("--states", states_csv, "Comma-separated presets, e.g. zero,plus");
    f->excludes(s);
  };

  auto* c_clonable = app.add_subcommand("clonable", "Linear-independence test for a state set");
  add_states(c_clonable);

  int k = 1, n = 2;
  auto* c_cost = app.add_subcommand("cost", "Optimal virtual cloning cost via SDP");
  add_states(c_cost);
  c_cost->add_option("--k", k, "Input copies")->check(CLI::PositiveNumber);
  c_cost->add_option("--n", n, "Output copies")->check(CLI::PositiveNumber);

  std::string priors = "grid";
  auto* c_bounds = app.add_subcommand("bounds", "Discrimination bounds on the cloning cost");
  add_states(c_bounds);
  c_bounds->add_option("--n", n, "Output copies")->check(CLI::PositiveNumber);
  c_bounds->add_option("--priors", priors, "'grid' or a value of p1");

  std::string method = "pure-optimal", out_file;
  auto* c_map = app.add_subcommand("map", "Build a cloner and its quasiprobability decomposition");
  add_states(c_map);
  c_map->add_option("--method", method, "thm1 | pure-optimal | discrimination")
      ->check(CLI::IsMember({"thm1", "pure-optimal", "discrimination"}));
  c_map->add_option("--n", n, "Output copies")->check(CLI::PositiveNumber);
  c_map->add_option("--out", out_file, "Write the decomposition to this file");

  SimulateOptions sim;
  auto* c_sim = app.add_subcommand("simulate", "Sample the physical implementation of a decomposition");
  c_sim->add_option("qpd_file", sim.qpd_file, "Decomposition file (schema vclone-qpd/1)")->required();
  c_sim->add_option("--state", sim.state, "Preset name or JSON state object");
  c_sim->add_option("--observable", sim.observable, "Pauli word (e.g. XX) or {\"matrix\": ...}")->required();
  c_sim->add_option("--rounds", sim.rounds, "Number of samples");
  c_sim->add_option("--seed", sim.seed, "Sampler seed");
  c_sim->add_option("--trials", sim.trials, "Coverage trials (0 = skip)");
  c_sim->add_option("--epsilon", sim.epsilon, "Deviation threshold for coverage");
  c_sim->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");

  std::uint64_t demo_seed = 2024;
  auto* c_demo = app.add_subcommand("demo", "End-to-end |0>/|+> pipeline with cross-checks");
  c_demo->add_option("--seed", demo_seed, "Sampler seed");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  }

  auto states = [&]() {
    if (!states_csv.empty()) return parse_state_list(states_csv);
    if (!states_file.empty()) return load_states(states_file);
    throw ParseError("give a states file or --states");
  };

  Report report;
  try {
    const double tol = tol_flag > 0.0 ? tol_flag : default_tolerance();
    if (c_clonable->parsed()) {
      report = cmd_clonable(states());
    } else if (c_cost->parsed()) {
      report = cmd_cost(states(), CostOptions{k, n, tol});
    } else if (c_bounds->parsed()) {
      report = cmd_bounds(states(), n, priors);
    } else if (c_map->parsed()) {
      report = cmd_map(states(), method, n, out_file, tol);
    } else if (c_sim->parsed()) {
      report = cmd_simulate(sim);
    } else {
      report = cmd_demo(demo_seed, tol);
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  } catch (const cloning::NotClonableError& e) {
    err << "no-go: " << e.what() << "\n";
    return kNoGo;
  } catch (const cloning::SolverFailure& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const std::exception& e) {
    // remaining library errors reject the given input (bad n, identical states, ...)
    err << "error: " << e.what() << "\n";
    return kParseError;
  }
  out << (as_json ? report.to_json().dump(2) + "\n" : report.to_text());
  return report.exit_code;
}

}  // namespace vclone::cli
