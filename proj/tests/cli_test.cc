// Runs the soskit executable on the problem files and checks results and
// exit codes; nothing here calls the library in-process.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
};

fs::path Scratch(const std::string& name) { return fs::path(::testing::TempDir()) / ("soskit_cli_" + name); }

CliRun Cli(const std::vector<std::string>& args) {
  std::string cmd = SOSKIT_CLI;
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Problem(const std::string& name) { return (fs::path(SOSKIT_PROBLEMS) / name).string(); }

std::string KindOf(const std::string& problem) {
  std::ifstream in(Problem(problem));
  return json::parse(in).at("kind").get<std::string>();
}

void ExpectClose(const json& got, const json& want, double tol, const std::string& path) {
  if (want.is_array()) {
    ASSERT_TRUE(got.is_array()) << path;
    ASSERT_EQ(got.size(), want.size()) << path;
    for (std::size_t i = 0; i < want.size(); ++i) ExpectClose(got[i], want[i], tol, path + "[" + std::to_string(i) + "]");
  } else if (want.is_number()) {
    ASSERT_TRUE(got.is_number()) << path;
    EXPECT_NEAR(got.get<double>(), want.get<double>(), tol) << path;
  } else {
    EXPECT_EQ(got, want) << path;
  }
}

const json& At(const json& j, const std::string& dotted) {
  const json* cur = &j;
  std::stringstream s(dotted);
  std::string part;
  while (std::getline(s, part, '.')) cur = &cur->at(part);
  return *cur;
}

TEST(CliTest, GoldenCases) {
  std::ifstream in(SOSKIT_GOLDEN);
  const json cases = json::parse(in);
  for (const auto& c : cases) {
    const std::string name = c.at("name");
    SCOPED_TRACE(name);
    std::vector<std::string> args = {KindOf(c.at("problem")), "--in", Problem(c.at("problem"))};
    if (c.contains("args"))
      for (const auto& a : c.at("args")) args.push_back(a.get<std::string>());
    const CliRun r = Cli(args);
    EXPECT_EQ(r.code, c.at("exit").get<int>());
    if (r.code == 3) continue;
    const json out = json::parse(r.out);
    EXPECT_EQ(out.at("schema_version"), 1);
    EXPECT_EQ(out.at("kind"), args[0]);
    if (!c.contains("expect")) continue;
    for (const auto& [key, want] : c.at("expect").items()) ExpectClose(At(out, key), want, c.value("tol", 0.0), key);
  }
}

std::string WithoutWallTime(const fs::path& p) {
  std::ifstream in(p);
  json j = json::parse(in);
  j.at("diagnostics").erase("wall_seconds");
  return j.dump();
}

TEST(CliTest, OutputIsDeterministic) {
  for (const std::string problem : {"robust.json", "jsr.json", "barrier.json", "dating.json"}) {
    const fs::path a = Scratch("a.json"), b = Scratch("b.json");
    ASSERT_EQ(Cli({KindOf(problem), "--in", Problem(problem), "--out", a.string(), "--seed", "7"}).code, 0);
    ASSERT_EQ(Cli({KindOf(problem), "--in", Problem(problem), "--out", b.string(), "--seed", "7"}).code, 0);
    EXPECT_EQ(WithoutWallTime(a), WithoutWallTime(b)) << problem;
  }
}

TEST(CliTest, SequenceIsOneBased) {
  const json out = json::parse(Cli({"jsr-trajectory", "--in", Problem("nilpotent.json")}).out);
  for (const auto& s : out.at("result").at("sequence")) {
    EXPECT_GE(s.get<int>(), 1);
    EXPECT_LE(s.get<int>(), 2);
  }
}

TEST(CliTest, ReportAndCsv) {
  const fs::path csv = Scratch("traj.csv");
  const CliRun r = Cli({"lyapunov", "--in", Problem("jet.json"), "--report", "--csv", csv.string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(json::parse(r.out).at("report").get<std::string>().find("Lyapunov"), std::string::npos);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "trajectory,t,x,y,V");
  const json jsr = json::parse(Cli({"jsr", "--in", Problem("jsr.json"), "--report"}).out);
  EXPECT_NE(jsr.at("report").get<std::string>().find("<= rho <="), std::string::npos);
}

void WriteFile(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

TEST(CliTest, InputErrorsExitThree) {
  const fs::path p = Scratch("bad.json");
  WriteFile(p, "{not json");
  EXPECT_EQ(Cli({"bound", "--in", p.string()}).code, 3);
  WriteFile(p, R"({"schema_version": 1, "kind": "pop", "variables": ["x"], "objective": "x^2"})");
  EXPECT_EQ(Cli({"bound", "--in", p.string()}).code, 3);  // kind mismatch
  WriteFile(p, R"({"schema_version": 2, "kind": "pop", "variables": ["x"], "objective": "x^2"})");
  EXPECT_EQ(Cli({"pop", "--in", p.string()}).code, 3);
  WriteFile(p, R"({"schema_version": 1, "kind": "pop", "variables": ["x"], "objective": "x^2 + z"})");
  EXPECT_EQ(Cli({"pop", "--in", p.string()}).code, 3);
  WriteFile(p, R"({"schema_version": 1, "kind": "pop", "variables": ["x"], "objective": "x^2", "extra": 1})");
  EXPECT_EQ(Cli({"pop", "--in", p.string()}).code, 3);
  WriteFile(p, R"({"schema_version": 1, "kind": "copositive", "matrix": [[1, 2], [3, 1]]})");
  EXPECT_EQ(Cli({"copositive", "--in", p.string()}).code, 3);
  EXPECT_EQ(Cli({"pop", "--in", Scratch("missing.json").string()}).code, 3);
  EXPECT_EQ(Cli({"no-such-kind", "--in", p.string()}).code, 3);
  EXPECT_EQ(Cli({"pop"}).code, 3);
}

TEST(CliTest, UnboundedPopIsNoCertificate) {
  const fs::path p = Scratch("unbounded.json");
  WriteFile(p, R"({"schema_version": 1, "kind": "pop", "variables": ["x", "y"], "objective": "x^2*y^2 + x"})");
  const CliRun r = Cli({"pop", "--in", p.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(json::parse(r.out).at("status"), "no_certificate");
}

TEST(CliTest, RawSosWritesConicDump) {
  const fs::path p = Scratch("raw.json"), dump = Scratch("raw.conic");
  WriteFile(p, R"({"schema_version": 1, "kind": "raw-sos", "variables": ["x"], "polynomial": "x^4 + 1", "conic_dump": ")" +
                   dump.string() + R"("})");
  const CliRun r = Cli({"raw-sos", "--in", p.string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(json::parse(r.out).at("result").at("sos").get<bool>());
  EXPECT_TRUE(fs::exists(dump));
  EXPECT_GT(fs::file_size(dump), 0u);
}

}  // namespace
