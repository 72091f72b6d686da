#include "commopt/exactnum/matrix.hpp"
#include "commopt/instances/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

using namespace commopt;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run sh(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(COMMOPT_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / ("commopt_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

// Strict RFC 4180: CRLF record ends, quoted fields with doubled quotes, no
// bare quotes or line breaks inside unquoted fields, equal field counts.
std::optional<std::vector<std::vector<std::string>>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (text[i] == '"') {
      ++i;
      for (;;) {
        if (i >= n) return std::nullopt;
        if (text[i] == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field += text[i++];
      }
    } else {
      while (i < n && text[i] != ',' && text[i] != '\r' && text[i] != '\n') {
        if (text[i] == '"') return std::nullopt;
        field += text[i++];
      }
    }
    if (i < n && text[i] == ',') {
      row.push_back(std::move(field));
      field.clear();
      ++i;
      continue;
    }
    if (i + 1 < n && text[i] == '\r' && text[i + 1] == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      i += 2;
      continue;
    }
    return std::nullopt;  // bare LF, or data after a closing quote
  }
  if (!row.empty() || !field.empty()) return std::nullopt;  // last record must end in CRLF
  for (const auto& r : rows)
    if (r.size() != rows.front().size()) return std::nullopt;
  return rows;
}

std::map<std::string, std::string> fields(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(": ");
    if (colon != std::string::npos) out[line.substr(0, colon)] = line.substr(colon + 2);
  }
  return out;
}

ExactVector parse_vector(std::string s) {
  ExactVector v;
  s = s.substr(1, s.size() - 2);
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(' '));
    v.push_back(parse_rational(tok));
  }
  return v;
}

std::string gen(const std::string& name, const std::string& args) {
  const auto r = sh("gen " + args + " -o " + path(name));
  EXPECT_EQ(r.code, 0) << args;
  return path(name);
}

}  // namespace

TEST(CliGen, WritesInstanceAndHash) {
  const auto r1 = sh("gen --kind linsys-feasible --n 8 --d 3 --L 8 --s 2 --seed 1 -o " + path("a.json"));
  ASSERT_EQ(r1.code, 0);
  auto inst = instances::read_file(path("a.json"));
  EXPECT_EQ(inst.n, 8u);
  EXPECT_EQ(inst.s, 2u);
  const auto r2 = sh("gen --kind linsys-feasible --n 8 --d 3 --L 8 --s 2 --seed 1 -o " + path("b.json"));
  std::smatch m1, m2;
  ASSERT_TRUE(std::regex_search(r1.out, m1, std::regex("hash ([0-9a-f]{16})")));
  ASSERT_TRUE(std::regex_search(r2.out, m2, std::regex("hash ([0-9a-f]{16})")));
  EXPECT_EQ(m1[1], m2[1]);
  std::ifstream in(path("a.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(m1[1].str(), instances::hash_hex(instances::content_hash(ss.str())));

  EXPECT_EQ(sh("gen --kind linsys-feasible --n 2 --d 3 -o " + path("under.json")).code, 0);
  EXPECT_EQ(instances::read_file(path("under.json")).n, 2u);

  // Without -o the instance goes to stdout.
  const auto stdout_gen = sh("gen --kind regression --n 5 --d 2 --seed 3");
  EXPECT_EQ(stdout_gen.code, 0);
  EXPECT_NO_THROW(instances::parse(stdout_gen.out));
}

TEST(CliRun, LinsysDetPrintsSolution) {
  const auto file = gen("feas.json", "--kind linsys-feasible --n 8 --d 3 --L 8 --s 2 --seed 1");
  const auto r = sh("run --protocol linsys-det --input " + file);
  ASSERT_EQ(r.code, 0);
  auto f = fields(r.out);
  EXPECT_EQ(f["status"], "OK");
  ASSERT_TRUE(f.count("x"));
  auto inst = instances::read_file(file);
  EXPECT_EQ(multiply(inst.A, parse_vector(f["x"])), inst.b);
  EXPECT_GT(std::stoull(f["total_bits"]), 0u);
  EXPECT_GT(std::stoull(f["rounds"]), 0u);

  const auto bad = gen("infeas.json", "--kind linsys-infeasible --n 8 --d 3 --seed 2");
  const auto ri = sh("run --protocol linsys-det --input " + bad);
  EXPECT_EQ(ri.code, 0);
  EXPECT_EQ(fields(ri.out)["status"], "INFEASIBLE");
}

TEST(CliRun, L2ObjectiveMatchesRecomputation) {
  const auto file = gen("reg.json", "--kind regression --n 20 --d 3 --s 3 --seed 4");
  const auto r = sh("run --protocol l2-exact --input " + file);
  ASSERT_EQ(r.code, 0);
  auto f = fields(r.out);
  auto inst = instances::read_file(file);
  const ExactVector x = parse_vector(f["x"]);
  Rational sq = 0;
  const ExactVector ax = multiply(inst.A, x);
  for (std::size_t i = 0; i < inst.n; ++i) sq += (ax[i] - inst.b[i]) * (ax[i] - inst.b[i]);
  EXPECT_EQ(parse_rational(f["objective_squared"]), sq);
  EXPECT_NEAR(std::stod(f["objective"]), std::sqrt(sq.get_d()), 1e-9 * std::sqrt(sq.get_d()));
}

TEST(CliRun, DeterministicForFixedSeed) {
  const auto file = gen("lp.json", "--kind lp-bounded --n 30 --d 3 --seed 7");
  const auto a = sh("run --protocol lp-clarkson --seed 7 --input " + file);
  const auto b = sh("run --protocol lp-clarkson --seed 7 --input " + file);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(sh("run --protocol lp-clarkson --input " + file, "COMMOPT_SEED=7").out, a.out);
  EXPECT_EQ(sh("run --protocol lp-clarkson --seed 7 --mode blackboard --input " + file).code, 0);
}

TEST(CliRun, CsvRecordAndTranscript) {
  const auto file = gen("reg2.json", "--kind regression --n 12 --d 2 --s 3 --seed 5");
  const auto r = sh("run --protocol l2-exact --csv --transcript " + path("t.csv") + " --input " + file);
  ASSERT_EQ(r.code, 0);
  auto rec = parse_csv(r.out);
  ASSERT_TRUE(rec.has_value()) << r.out;
  ASSERT_EQ(rec->size(), 2u);
  EXPECT_EQ((*rec)[0][0], "protocol");
  EXPECT_EQ((*rec)[1][3], "OK");

  std::ifstream in(path("t.csv"), std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  auto t = parse_csv(ss.str());
  ASSERT_TRUE(t.has_value());
  std::uint64_t sum = 0;
  for (std::size_t i = 1; i < t->size(); ++i) sum += std::stoull((*t)[i][4]);
  EXPECT_EQ(std::to_string(sum), (*rec)[1][6]);
}

TEST(CliExit, Codes) {
  const auto file = gen("e.json", "--kind lp-bounded --n 10 --d 7 --seed 1");
  EXPECT_EQ(sh("").code, 2);
  EXPECT_EQ(sh("frobnicate").code, 2);
  EXPECT_EQ(sh("gen --kind nope").code, 2);
  EXPECT_EQ(sh("gen --kind regression --n 2 --d 3").code, 2);
  EXPECT_EQ(sh("run --protocol nope --input " + file).code, 2);
  EXPECT_EQ(sh("run --protocol l2-exact --eps 1.5 --input " + file).code, 2);
  EXPECT_EQ(sh("run --protocol l2-exact --input " + file, "COMMOPT_SEED=abc").code, 2);
  {
    std::ofstream bad(path("bad.json"));
    bad << "{\"n\": ";
  }
  EXPECT_EQ(sh("run --protocol l2-exact --input " + path("bad.json")).code, 3);
  EXPECT_EQ(sh("run --protocol l2-exact --input " + path("missing.json")).code, 3);
  EXPECT_EQ(sh("run --protocol lp-seidel --input " + file).code, 4);  // depth cap at d = 7
  EXPECT_EQ(sh("--help").code, 0);
}

TEST(CliBench, SweepOverServersOnFixedBody) {
  const auto file = gen("body.json", "--kind linsys-feasible --n 16 --d 3 --s 2 --seed 9");
  const auto r = sh("bench --protocols linsys-det,linsys-solve-rand --sweep s=2..8 --seeds 3 --input " + file);
  ASSERT_EQ(r.code, 0);
  auto rows = parse_csv(r.out);
  ASSERT_TRUE(rows.has_value()) << r.out;
  EXPECT_EQ((*rows)[0], (std::vector<std::string>{"protocol", "s", "seed", "total_bits", "rounds", "status", "correct"}));
  ASSERT_EQ(rows->size(), 1u + 2 * 7 * 3);
  std::map<std::pair<std::string, std::string>, int> joined;
  for (std::size_t i = 1; i < rows->size(); ++i) {
    const auto& row = (*rows)[i];
    joined[{row[1], row[2]}] |= row[0] == "linsys-det" ? 1 : 2;
    EXPECT_EQ(row[6], "true");
  }
  EXPECT_EQ(joined.size(), 7u * 3);
  for (const auto& [key, mask] : joined) EXPECT_EQ(mask, 3);
  EXPECT_EQ(sh("bench --protocols linsys-det --sweep d=2..3 --input " + file).code, 2);
  EXPECT_EQ(sh("bench --protocols linsys-det --sweep s=5..2").code, 2);
}

TEST(CliBench, BitsMatchTranscript) {
  const auto file = gen("lpb.json", "--kind lp-bounded --n 20 --d 2 --s 3 --seed 2");
  const auto r = sh("bench --protocols lp-clarkson --sweep s=3..3 --seeds 1 --seed 5 --input " + file);
  ASSERT_EQ(r.code, 0);
  auto rows = parse_csv(r.out);
  ASSERT_TRUE(rows.has_value());
  ASSERT_EQ(rows->size(), 2u);
  ASSERT_EQ(sh("run --protocol lp-clarkson --seed 5 --transcript " + path("b.csv") + " --input " + file).code, 0);
  std::ifstream in(path("b.csv"), std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  auto t = parse_csv(ss.str());
  ASSERT_TRUE(t.has_value());
  std::uint64_t sum = 0;
  for (std::size_t i = 1; i < t->size(); ++i) sum += std::stoull((*t)[i][4]);
  EXPECT_EQ(std::to_string(sum), (*rows)[1][3]);
}

TEST(CliBench, GeneratedSweep) {
  const auto r = sh("bench --protocols lp-clarkson,lp-seidel --kind lp-bounded --n 12 --d 2 --sweep d=2..3 --seeds 2");
  ASSERT_EQ(r.code, 0);
  auto rows = parse_csv(r.out);
  ASSERT_TRUE(rows.has_value());
  EXPECT_EQ(rows->size(), 1u + 2 * 2 * 2);
  for (std::size_t i = 1; i < rows->size(); ++i) EXPECT_EQ((*rows)[i][6], "true");
}
