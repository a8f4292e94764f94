// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace
{

struct Run
{
  int status = -1;
  std::string out;
};

Run Exec(const std::string &args)
{
  const std::string cmd = std::string(ENZRES_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE *pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0)
  {
    r.out.append(buf, n);
  }
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string Slurp(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir
{
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("enzres_cli_" + std::to_string(::getpid())))
  {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const char *name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("mesh command")
{
  TempDir tmp;
  const Run r = Exec("mesh --kind concentric --rd 1 --r0 1.367171 --h 0.05 -o " + tmp / "m.enzmesh");
  CHECK(r.status == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc.at("schema_version") == 1);
  CHECK(doc.at("nodes").get<int>() > 0);

  CHECK(Exec("mesh --kind concentric --rd 2 --r0 1").status == 2);
  CHECK(Exec("mesh --bogus").status == 2);
  CHECK(Exec("").status == 2);

  CHECK(Exec("mesh --kind file --in " + tmp / "m.enzmesh" + " -o " + tmp / "copy.enzmesh").status == 0);
  CHECK(Slurp(tmp.path / "m.enzmesh") == Slurp(tmp.path / "copy.enzmesh"));
  CHECK(Exec("mesh --kind file --in " + tmp / "missing.enzmesh").status == 2);
}

TEST_CASE("lambda0, expand and resonate")
{
  TempDir tmp;
  REQUIRE(Exec("mesh --rd 1 --r0 1.367171 --h 0.05 -o " + tmp / "m.enzmesh").status == 0);

  const Run l0 = Exec("lambda0 --mesh " + tmp / "m.enzmesh" + " --lo 6 --hi 14");
  CHECK(l0.status == 0);
  CHECK(nlohmann::json::parse(l0.out).at("lambda0").get<double>() == doctest::Approx(9.0).epsilon(0.01));
  CHECK(Exec("lambda0 --mesh " + tmp / "m.enzmesh" + " --lo 10 --hi 14").status == 2);

  REQUIRE(Exec("expand --mesh " + tmp / "m.enzmesh" + " --order 3 -o " + tmp / "s.json").status == 0);
  const Run rs = Exec("resonate --series " + tmp / "s.json" +
                      " --eps-inf 6.7 --omega-p 0.7 --omega-0 1 --gamma-max 0.006 --steps 12");
  CHECK(rs.status == 0);
  std::istringstream csv(rs.out);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "gamma,re_omega,im_omega,re_delta,im_delta,newton_iters");
  int rows = 0;
  while (std::getline(csv, line))
  {
    std::vector<double> cols;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
    {
      cols.push_back(std::stod(cell));
    }
    REQUIRE(cols.size() == 6);
    if (cols[0] > 0.0)
    {
      CHECK(cols[2] < 0.0);
    }
    rows++;
  }
  CHECK(rows == 13);

  std::ofstream(tmp.path / "bad.json") << "{\"schema_version\": 1}";
  CHECK(Exec("resonate --series " + tmp / "bad.json").status == 2);
  CHECK(Exec("resonate --series " + tmp / "s.json" + " --omega-0 0.7 --omega-p 0").status == 2);
}

TEST_CASE("optimize command")
{
  TempDir tmp;
  const Run r = Exec("optimize --h 0.1 -o " + tmp / "d.json" + " --csv " + tmp / "d.csv");
  CHECK(r.status == 0);
  const auto doc = nlohmann::json::parse(Slurp(tmp.path / "d.json"));
  CHECK(doc.at("converged") == true);
  CHECK(doc.at("lambda1").get<double>() < 0.0);
  CHECK(Slurp(tmp.path / "d.csv").rfind("centroid_x,centroid_y,theta,density", 0) == 0);
}

TEST_CASE("validate-disk")
{
  const Run r = Exec("validate-disk --h 0.02");
  CHECK(r.status == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
}
