#pragma once

// Command-line front end. Every command returns a Report that renders as a
// plain table or as JSON; `run` wires the commands to argv.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vclone/channels.hpp"
#include "vclone/linalg.hpp"

namespace vclone::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kStatesSchema = "vclone-states/1";
inline constexpr const char* kQpdSchema = "vclone-qpd/1";

enum ExitCode : int {
  kSuccess = 0,
  kParseError = 2,
  kNoGo = 3,
  kSolverFailure = 4,
  kCrossCheckFailure = 5,
};

/// Malformed input; the message names the file, line or field involved.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StateEntry {
  std::string label;
  json spec;  // as given, echoed into reports
  DensityMatrix rho;
};

/// A preset name ("zero", "one", "plus", "minus", "y+", "y-", "mixed"), or an
/// object with one of "preset", "bloch": [x, y, z] or "matrix": rows of
/// [re, im] pairs, plus an optional "label".
DensityMatrix parse_state(const json& spec, const std::string& context = "state");
StateEntry parse_state_entry(const json& spec, const std::string& context);
/// Comma-separated presets, e.g. "zero,plus".
std::vector<StateEntry> parse_state_list(const std::string& csv);
/// {"schema": "vclone-states/1", "states": [...]}
std::vector<StateEntry> states_from_json(const json& doc, const std::string& context);
std::vector<StateEntry> load_states(const std::string& path);
json states_document(const std::vector<StateEntry>& states);

/// Parses JSON text, reporting line and column on failure.
json parse_json_text(const std::string& text, const std::string& source);

json qpd_to_json(const QPDecomposition& q);
QPDecomposition qpd_from_json(const json& doc, const std::string& context = "qpd");
void save_qpd(const std::string& path, const QPDecomposition& q);
QPDecomposition load_qpd(const std::string& path);

/// A Pauli word such as "XX", or a JSON object {"matrix": ...} given inline.
HermitianOperator parse_observable(const std::string& text);

/// VCLONE_TOL when set (ParseError if malformed), else the solver default.
double default_tolerance();

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Report {
  std::string command;
  json inputs = json::object();
  json results = json::object();
  json timings = json::object();
  std::vector<Check> checks;
  std::string message;
  int exit_code = kSuccess;

  void check(const std::string& name, bool passed, const std::string& detail);
  bool all_passed() const;
  json to_json() const;
  std::string to_text() const;
};

struct CostOptions {
  int k = 1;
  int n = 2;
  double tol = 1e-8;
};

Report cmd_clonable(const std::vector<StateEntry>& states);
Report cmd_cost(const std::vector<StateEntry>& states, const CostOptions& opts);
/// `priors` is "grid" or a single value of p1.
Report cmd_bounds(const std::vector<StateEntry>& states, int n, const std::string& priors);
/// method: "thm1", "pure-optimal" or "discrimination"; `out` may be empty.
Report cmd_map(const std::vector<StateEntry>& states, const std::string& method, int n,
               const std::string& out, double tol = 1e-8);

struct SimulateOptions {
  std::string qpd_file;
  std::string state = "plus";
  std::string observable;
  std::uint64_t rounds = 100000;
  std::uint64_t seed = 1;
  int trials = 0;
  double epsilon = 0.1;
  unsigned threads = 0;
};

Report cmd_simulate(const SimulateOptions& opts);
Report cmd_demo(std::uint64_t seed, double tol = 1e-8);

/// Full command line; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vclone::cli
