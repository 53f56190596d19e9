#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ftgcl/io.hpp"
#include "ftgcl/topo_embed.hpp"
#include "test_util.hpp"

using namespace ftgcl;

namespace {

int run(const std::string& args, const fs::path& capture) {
  const std::string cmd = std::string(FTGCL_CLI_PATH) + " " + args + " > " + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small labeled dataset written in the loader format.
fs::path make_dataset(const fs::path& root, std::uint64_t seed) {
  auto d = planted_partition(3, 12, 0.4, 0.03, 5, 0.5, seed);
  const fs::path dir = root / "data";
  save_dataset(d, dir);
  return dir;
}

}  // namespace

TEST(Cli, DemoBarbellRowsCoincideWithinRoles) {
  test::TempDir tmp;
  const auto csv = tmp.path / "embedding.csv";
  ASSERT_EQ(run("demo-barbell --m1 6 --m2 2 --out " + csv.string(), tmp.path / "log"), 0) << slurp(tmp.path / "log");
  const Matrix r = read_matrix_csv(csv);
  ASSERT_EQ(r.rows(), 14);
  const Graph g = barbell(6, 2);
  const auto role = test::egonet_role_classes(14, [&](std::size_t v) { return egonet(g, v, 1).local; });
  for (Index i = 0; i < 14; ++i)
    for (Index j = 0; j < 14; ++j)
      if (role[static_cast<std::size_t>(i)] == role[static_cast<std::size_t>(j)])
        EXPECT_LE((r.row(i) - r.row(j)).norm(), 1e-8 * std::max(1.0, r.row(i).norm())) << i << " " << j;
}

TEST(Cli, HomophilyOfSingleLabelToyIsOne) {
  test::TempDir tmp;
  Dataset d;
  d.graph = path_graph(5);
  d.features = Matrix::Ones(5, 2);
  d.labels = std::vector<int>(5, 0);
  save_dataset(d, tmp.path / "toy");
  const auto out = tmp.path / "metrics.json";
  ASSERT_EQ(run("eval --data " + (tmp.path / "toy").string() + " --task homophily --out " + out.string(),
                tmp.path / "log"),
            0)
      << slurp(tmp.path / "log");
  auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j.at("task"), "homophily");
  EXPECT_DOUBLE_EQ(j.at("homophily").get<double>(), 1.0);
}

TEST(Cli, ArgumentErrorsExitTwo) {
  test::TempDir tmp;
  EXPECT_EQ(run("demo-barbell --bogus 3", tmp.path / "log"), 2);
  EXPECT_NE(slurp(tmp.path / "log").find("Usage"), std::string::npos);
  EXPECT_EQ(run("train --variant ft --out x.ckpt", tmp.path / "log"), 2);
  EXPECT_EQ(run("no-such-command", tmp.path / "log"), 2);
}

TEST(Cli, RuntimeErrorsExitOne) {
  test::TempDir tmp;
  EXPECT_EQ(run("eval --data " + (tmp.path / "missing").string() + " --task homophily", tmp.path / "log"), 1);
  EXPECT_FALSE(slurp(tmp.path / "log").empty());
}

TEST(Cli, PipelineIsReproducible) {
  test::TempDir tmp;
  const auto data = make_dataset(tmp.path, 3);
  std::string outputs[2];
  for (int rep = 0; rep < 2; ++rep) {
    const auto dir = tmp.path / ("run" + std::to_string(rep));
    const auto log = tmp.path / "log";
    ASSERT_EQ(run("gen-views --data " + data.string() + " --kmax 3 --gamma 5 --walk-len 4 --basis 10 --seed 4 --out " +
                      (dir / "views").string(),
                  log),
              0)
        << slurp(log);
    std::ofstream(tmp.path / "cfg.json") << R"({"d": 8, "d_prime": 8, "k_max": 3, "iterations": 6, "lr": 0.01})";
    ASSERT_EQ(run("train --data " + data.string() + " --views " + (dir / "views").string() +
                      " --variant ft --config " + (tmp.path / "cfg.json").string() + " --seed 4 --out " +
                      (dir / "model.ckpt").string(),
                  log),
              0)
        << slurp(log);
    ASSERT_EQ(run("eval --data " + data.string() + " --ckpt " + (dir / "model.ckpt").string() +
                      " --task classify --seed 4 --out " + (dir / "metrics.json").string(),
                  log),
              0)
        << slurp(log);
    ASSERT_EQ(run("eval --data " + data.string() + " --ckpt " + (dir / "model.ckpt").string() +
                      " --task linkpred --seed 4 --out " + (dir / "link.json").string(),
                  log),
              0)
        << slurp(log);
    outputs[rep] = slurp(dir / "views" / "views.json") + slurp(dir / "model.ckpt") + slurp(dir / "train_log.jsonl") +
                   slurp(dir / "metrics.json") + slurp(dir / "link.json");
    auto m = nlohmann::json::parse(slurp(dir / "metrics.json"));
    EXPECT_GE(m.at("accuracy").get<double>(), 0.0);
    EXPECT_TRUE(m.at("auc").is_null());
    auto l = nlohmann::json::parse(slurp(dir / "link.json"));
    EXPECT_GE(l.at("auc").get<double>(), 0.0);
    const std::string trace = slurp(dir / "train_log.jsonl");
    EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 6);
  }
  EXPECT_EQ(outputs[0], outputs[1]);
}
