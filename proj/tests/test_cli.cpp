#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vclone/cli.hpp"
#include "vclone/cloning.hpp"

using namespace vclone;
using namespace vclone::cli;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("vclone_test_" + name)).string();
}

void write(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "vclone");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(StateSpec, PresetsBlochAndMatrix) {
  EXPECT_NEAR(parse_state(json("plus")).matrix()(0, 1).real(), 0.5, 1e-15);
  EXPECT_NEAR(parse_state(json("y-")).matrix()(1, 0).imag(), -0.5, 1e-15);
  const DensityMatrix b = parse_state(json::parse(R"({"bloch": [0, 0, 0.5]})"));
  EXPECT_NEAR(b.matrix()(0, 0).real(), 0.75, 1e-15);
  const DensityMatrix m = parse_state(json::parse(R"({"matrix": [[[0.5, 0], [0, -0.5]], [[0, 0.5], [0.5, 0]]]})"));
  EXPECT_LT(max_abs(m.matrix() - parse_state(json("y+")).matrix()), 1e-15);
}

TEST(StateSpec, ErrorsNameTheField) {
  try {
    parse_state(json::parse(R"({"bloch": [1, 1, 0]})"), "states[1]");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("states[1].bloch"), std::string::npos);
  }
  try {
    parse_state(json::parse(R"({"matrix": [[[1, 0], [0, 0]], [[0, 0], "x"]]})"), "s");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("s.matrix[1][1]"), std::string::npos);
  }
  EXPECT_THROW(parse_state(json("bogus")), ParseError);
  EXPECT_THROW(parse_state(json::parse(R"({"matrix": [[[2, 0], [0, 0]], [[0, 0], [-1, 0]]]})")), ParseError);
  EXPECT_THROW(parse_state_list("zero,,plus"), ParseError);
}

TEST(StateSpec, FileSchemaAndLineNumbers) {
  const std::string good = temp_path("states_good.json");
  write(good, R"({"schema": "vclone-states/1", "states": ["zero", {"bloch": [1, 0, 0], "label": "p"}]})");
  const auto s = load_states(good);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].label, "p");

  const std::string bad = temp_path("states_bad.json");
  write(bad, "{\n  \"schema\": \"vclone-states/1\",\n  \"states\": [\"zero\",]\n}\n");
  try {
    load_states(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(bad + ":3:"), std::string::npos) << e.what();
  }
  const std::string wrong = temp_path("states_wrong.json");
  write(wrong, R"({"schema": "other", "states": ["zero"]})");
  EXPECT_THROW(load_states(wrong), ParseError);
}

TEST(Qpd, FileRoundTripKeepsCloneResidual) {
  const auto q = cloning::optimal_pure_cloner(PureState::basis(2, 0), PureState::normalized(ComplexVector::Ones(2)), 1, 3);
  const std::string path = temp_path("qpd.json");
  save_qpd(path, q);
  const QPDecomposition back = load_qpd(path);
  EXPECT_EQ(back.lambda_plus(), q.lambda_plus());
  EXPECT_EQ(back.lambda_minus(), q.lambda_minus());
  for (const auto& s : {DensityMatrix::from_bloch(0, 0, 1), DensityMatrix::from_bloch(1, 0, 0)}) {
    EXPECT_LT(max_abs(apply_qpd(back, s.op()).matrix() - tensor_power(s.matrix(), 3)), 1e-8);
  }
  json doc = qpd_to_json(q);
  doc["lambda_minus"] = 0.5;
  EXPECT_THROW(qpd_from_json(doc), ParseError);
}

TEST(Observable, PauliWordsAndMatrices) {
  EXPECT_EQ(parse_observable("XZ").dim(), 4);
  EXPECT_EQ(parse_observable(R"({"matrix": [[1, 0], [0, 2]]})").dim(), 2);
  EXPECT_THROW(parse_observable("XQ"), ParseError);
}

TEST(Commands, Clonable) {
  const Report a = cmd_clonable(parse_state_list("zero,plus"));
  EXPECT_TRUE(a.results["clonable"].get<bool>());
  const Report b = cmd_clonable(parse_state_list("zero,one,mixed"));
  EXPECT_FALSE(b.results["clonable"].get<bool>());
  EXPECT_EQ(b.results["min_copies"], 2);
  EXPECT_TRUE(cmd_clonable(parse_state_list("mixed")).results["clonable"].get<bool>());
}

TEST(Commands, CostExamples) {
  CostOptions o;
  const Report a = cmd_cost(parse_state_list("zero,plus"), o);
  EXPECT_NEAR(a.results["eta"].get<double>(), std::sqrt(1.5), 1e-6);
  EXPECT_EQ(a.exit_code, kSuccess);
  const Report b = cmd_cost(parse_state_list("zero,one"), o);
  EXPECT_NEAR(b.results["eta"].get<double>(), 1.0, 1e-6);
  o.n = 3;
  const Report c = cmd_cost(parse_state_list("zero,plus"), o);
  EXPECT_NEAR(c.results["eta"].get<double>(), std::sqrt(1.75), 1e-6);
  const Report d = cmd_cost(parse_state_list("zero,one,mixed"), CostOptions{});
  EXPECT_EQ(d.exit_code, kNoGo);
  EXPECT_NE(d.message.find("linearly dependent"), std::string::npos);
}

TEST(Commands, BoundsExamples) {
  const Report a = cmd_bounds(parse_state_list("zero,plus"), 2, "grid");
  EXPECT_NEAR(a.results["equal_prior_lower"].get<double>(), 1.22474487, 1e-8);
  EXPECT_NEAR(a.results["upper"].get<double>(), 1.82842712, 1e-8);
  const Report b = cmd_bounds(parse_state_list("zero,one"), 2, "0.3");
  EXPECT_NEAR(b.results["lower"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(b.results["upper"].get<double>(), 1.0, 1e-12);
  EXPECT_THROW(cmd_bounds(parse_state_list("zero,plus"), 2, "1.5"), ParseError);

  const auto mixed = states_from_json(
      json::parse(R"({"schema": "vclone-states/1", "states": [{"bloch": [0, 0, 0.5]}, {"bloch": [0.5, 0, 0]}]})"), "m");
  const Report c = cmd_bounds(mixed, 2, "grid");
  const Report e = cmd_cost(mixed, CostOptions{});
  const double eta = e.results["eta"].get<double>();
  EXPECT_LE(c.results["lower"].get<double>() - 1e-7, eta);
  EXPECT_LE(eta, c.results["upper"].get<double>() + 1e-7);
}

TEST(Commands, MapMethods) {
  const std::string path = temp_path("map.json");
  const Report p = cmd_map(parse_state_list("zero,plus"), "pure-optimal", 2, path);
  EXPECT_NEAR(p.results["qpd"]["cost"].get<double>(), std::sqrt(1.5), 1e-12);
  EXPECT_LT(p.results["clone_residual"].get<double>(), 1e-9);
  EXPECT_TRUE(p.all_passed());
  EXPECT_TRUE(std::filesystem::exists(path));

  const Report d = cmd_map(parse_state_list("zero,plus"), "discrimination", 2, "");
  EXPECT_NEAR(d.results["qpd"]["cost"].get<double>(), 2 * std::sqrt(2.0) - 1, 1e-9);
  const Report t = cmd_map(parse_state_list("zero,plus"), "thm1", 2, "");
  EXPECT_TRUE(t.results["hptp"].get<bool>());
  EXPECT_TRUE(t.all_passed());
  EXPECT_THROW(cmd_map(parse_state_list("zero,plus"), "magic", 2, ""), ParseError);
}

TEST(Commands, SimulateReportsHoeffdingCurve) {
  const std::string path = temp_path("sim.json");
  ASSERT_EQ(cmd_map(parse_state_list("zero,plus"), "pure-optimal", 2, path).exit_code, kSuccess);
  SimulateOptions o;
  o.qpd_file = path;
  o.observable = "XX";
  o.rounds = 200000;
  o.seed = 3;
  const Report r = cmd_simulate(o);
  ASSERT_EQ(r.results["hoeffding"].size(), 3u);
  EXPECT_DOUBLE_EQ(r.results["hoeffding"][1]["epsilon"].get<double>(), 0.05);
  const double eta = r.results["eta"].get<double>();
  EXPECT_EQ(r.results["second_moment"].get<double>(), eta * eta);
  EXPECT_TRUE(r.all_passed());
  // re-running the echoed inputs reproduces the estimate bitwise
  SimulateOptions again = o;
  again.seed = r.inputs["seed"].get<std::uint64_t>();
  again.rounds = r.inputs["rounds"].get<std::uint64_t>();
  EXPECT_EQ(cmd_simulate(again).results["mean"].get<double>(), r.results["mean"].get<double>());

  o.observable = "ZZ";
  o.state = R"({"bloch": [0, 0, 1]})";
  o.trials = 20;
  o.rounds = 5000;
  const Report c = cmd_simulate(o);
  EXPECT_TRUE(c.results.contains("coverage"));
  o.observable = "Z";
  EXPECT_THROW(cmd_simulate(o), ParseError);
}

TEST(Commands, CostReportIsReproducibleFromEchoedInputs) {
  const Report a = cmd_cost(parse_state_list("zero,y+"), CostOptions{});
  const auto states = states_from_json(a.inputs["states"], "echo");
  CostOptions o;
  o.k = a.inputs["k"];
  o.n = a.inputs["n"];
  o.tol = a.inputs["tol"];
  const Report b = cmd_cost(states, o);
  EXPECT_NEAR(a.results["eta"].get<double>(), b.results["eta"].get<double>(), 1e-9);
}

TEST(Run, ExitCodes) {
  EXPECT_EQ(run_cli({"clonable", "--states", "zero,plus"}).code, kSuccess);
  EXPECT_EQ(run_cli({"cost", "--states", "zero,one,mixed"}).code, kNoGo);
  EXPECT_EQ(run_cli({"cost", "--states", "zero,bogus"}).code, kParseError);
  EXPECT_EQ(run_cli({"cost", "--states", "zero,plus", "--n", "1"}).code, kParseError);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kParseError);
  EXPECT_EQ(run_cli({"simulate", temp_path("missing.json"), "--observable", "XX"}).code, kParseError);
  EXPECT_EQ(run_cli({"--help"}).code, kSuccess);
}

TEST(Run, JsonOutputAndTableDigits) {
  const RunResult j = run_cli({"cost", "--states", "zero,plus", "--json"});
  ASSERT_EQ(j.code, kSuccess) << j.err;
  const json doc = json::parse(j.out);
  EXPECT_EQ(doc["command"], "cost");
  EXPECT_NEAR(doc["results"]["eta"].get<double>(), std::sqrt(1.5), 1e-6);
  EXPECT_EQ(doc["inputs"]["states"]["schema"], kStatesSchema);

  const RunResult t = run_cli({"bounds", "--states", "zero,plus"});
  EXPECT_NE(t.out.find("1.8284271"), std::string::npos) << t.out;
}

TEST(Run, ToleranceFromEnvironment) {
  setenv("VCLONE_TOL", "1e-9", 1);
  EXPECT_DOUBLE_EQ(default_tolerance(), 1e-9);
  const RunResult r = run_cli({"cost", "--states", "zero,plus", "--json"});
  EXPECT_DOUBLE_EQ(json::parse(r.out)["inputs"]["tol"].get<double>(), 1e-9);
  setenv("VCLONE_TOL", "abc", 1);
  EXPECT_THROW(default_tolerance(), ParseError);
  EXPECT_EQ(run_cli({"clonable", "--states", "zero"}).code, kParseError);
  unsetenv("VCLONE_TOL");
  EXPECT_DOUBLE_EQ(default_tolerance(), 1e-8);
}
