#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "selfrep/action_gate.hpp"
#include "selfrep/artifacts.hpp"
#include "selfrep/cli.hpp"
#include "selfrep/config.hpp"
#include "selfrep/errors.hpp"
#include "selfrep/hashing.hpp"
#include "selfrep/text_io.hpp"
#include "support.hpp"

using namespace selfrep;
namespace fs = std::filesystem;

TEST(Config, DefaultsMatchTheReferenceSetup) {
  const ExperimentConfig c;
  EXPECT_EQ(c.dataset.n_segments * c.dataset.n_maneuvers * c.dataset.n_degradations, 20000);
  EXPECT_EQ(c.train_fraction, 0.8);
  EXPECT_EQ(c.calibration_count, 2000);
  EXPECT_EQ(c.training.hidden_width, 209);
  EXPECT_EQ(c.training.hidden_layers, 2);
  EXPECT_EQ(c.training.batch_size, 64);
  EXPECT_EQ(c.training.learning_rate, 5e-4);
  EXPECT_EQ(c.alphas, (std::vector<double>{0.1, 0.05, 0.01}));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesCommentsAndLists) {
  const auto c = parse_config(
      "# experiment\n"
      "seed = 7\n"
      "\n"
      "dataset.n_segments = 4   # small\n"
      "conformal.alphas = 0.2, 0.1\n"
      "scenario.simulate = false\n");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.dataset.n_segments, 4);
  EXPECT_EQ(c.alphas, (std::vector<double>{0.2, 0.1}));
  EXPECT_FALSE(c.scenario.simulate);
  EXPECT_EQ(c.overrides, (std::vector<std::string>{"seed", "dataset.n_segments", "conformal.alphas", "scenario.simulate"}));
}

TEST(Config, ErrorsCarryLineNumbers) {
  try {
    parse_config("seed = 1\n\ndataset.n_segmnets = 3\n", "exp.cfg");
    FAIL() << "unknown key accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("exp.cfg:3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("dataset.n_segmnets"), std::string::npos);
  }
  EXPECT_THROW(parse_config("seed 1\n"), ValidationError);
  EXPECT_THROW(parse_config("dataset.n_segments = many\n"), ValidationError);
  EXPECT_THROW(parse_config("scenario.simulate = maybe\n"), ValidationError);
}

TEST(Config, HashTracksEveryValue) {
  ExperimentConfig a, b;
  EXPECT_EQ(a.hash(), b.hash());
  for (const auto& key : ExperimentConfig::keys()) {
    ExperimentConfig c;
    const auto before = c.get(key);
    c.set(key, before);
    EXPECT_EQ(c.hash(), a.hash()) << key;  // round trip through text is lossless
  }
  b.set("training.learning_rate", "0.001");
  EXPECT_NE(a.hash(), b.hash());
}

TEST(Config, ValidationRejectsBadValues) {
  ExperimentConfig c;
  c.alphas = {0.7};
  EXPECT_THROW(c.validate(), ValidationError);
  c = ExperimentConfig{};
  c.calibration_count = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = ExperimentConfig{};
  c.train_fraction = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
}

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

/// A pipeline small enough for a unit test: 600 samples, one narrow network.
void write_small_config(const fs::path& path) {
  io::write_file(path,
                 "dataset.n_segments = 6\n"
                 "dataset.n_maneuvers = 5\n"
                 "dataset.n_degradations = 20\n"
                 "dataset.segment_pool = 24\n"
                 "split.train_fraction = 0.6\n"
                 "split.calibration_count = 100\n"
                 "training.hidden_width = 32\n"
                 "training.max_epochs = 150\n"
                 "training.patience_epochs = 20\n"
                 "conformal.alphas = 0.1\n"
                 "scenario.degradation_sets = 2\n"
                 "scenario.simulate = false\n");
}

}  // namespace

TEST(Cli, UnknownCommandAndBadFlags) {
  EXPECT_EQ(run_cli({"fly"}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"train", "--bogus"}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({}).code, cli::kExitValidation);
  const auto r = run_cli({"--version"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find(kVersion), std::string::npos);
}

TEST(Cli, MissingArtifactsNameTheProducer) {
  selfrep::testing::TempDir dir("cli_missing");
  const auto out = dir.path().string();
  auto r = run_cli({"evaluate", "--out", out});
  EXPECT_EQ(r.code, cli::kExitMissingArtifact);
  EXPECT_NE(r.err.find("gen-dataset"), std::string::npos) << r.err;
  r = run_cli({"train", "--config", (dir / "absent.cfg").string(), "--out", out});
  EXPECT_EQ(r.code, cli::kExitValidation);
}

TEST(Cli, SmallPipelineEndToEnd) {
  selfrep::testing::TempDir dir("cli_pipeline");
  const auto cfg = (dir / "small.cfg").string();
  write_small_config(cfg);
  const auto out = (dir / "run").string();
  for (const char* cmd : {"gen-roads", "gen-dataset", "train", "calibrate", "evaluate", "scenario"}) {
    const auto r = run_cli({cmd, "--config", cfg, "--out", out, "--seed", "3"});
    ASSERT_EQ(r.code, cli::kExitOk) << cmd << ": " << r.err;
  }
  const fs::path run = out;
  for (const char* f : {"dataset.csv", "splits.json", "model_a0.1.json", "calibration_a0.1.json",
                        "evaluation_a0.1.json", "scenario.csv", "assessment.json", "manifest_evaluate.json"})
    EXPECT_TRUE(fs::exists(run / f)) << f;

  const auto eval = nlohmann::json::parse(io::read_file(run / "evaluation_a0.1.json"));
  EXPECT_GT(eval["coverage"].get<double>(), 0.75);

  // Manifests hash what they list.
  const auto manifest = nlohmann::json::parse(io::read_file(run / "manifest_train.json"));
  ASSERT_FALSE(manifest["outputs"].empty());
  for (const auto& [name, hash] : manifest["outputs"].items()) EXPECT_EQ(hash, sha256_file(run / name)) << name;
  EXPECT_EQ(manifest["seed"], 3);

  // predict over two feature rows.
  std::string csv;
  for (std::size_t f = 0; f < kFeatureCount; ++f) csv += std::string(f ? "," : "") + std::string(feature_names()[f]);
  csv += "\n2.8,3.2,0.001,0.01,40,40,3,1,1,1,1,1,1,1,1,1,1,1,1\n2.8,3.2,0.001,0.01,40,40,3,0,0,0,0,0,0,0,0,1,1,1,1\n";
  io::write_file(dir / "rows.csv", csv);
  auto r = run_cli({"predict", "--config", cfg, "--out", out, "--seed", "3", "--input", (dir / "rows.csv").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto pred = io::read_lines(run / "predictions.csv");
  ASSERT_EQ(pred.size(), 3u);

  // A different seed changes the split; stale models must be refused.
  r = run_cli({"calibrate", "--config", cfg, "--out", out, "--seed", "4"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("different split"), std::string::npos) << r.err;

  // The trained gate rules out more options when steering is lost. The lane leaves
  // 7 cm of free space, of the order of the nominal deviations in this small world.
  const auto model = load_model(run / "model_a0.1.json");
  const auto cal = load_calibration(run / "calibration_a0.1.json");
  const auto range = FeatureRange::from_config({}, {});
  SceneContext scene;
  scene.segment = selfrep::testing::straight_segment(150.0, 2.10, 3.0, "gate");
  scene.speed_kmh = 40.0;
  const std::vector<double> grid{1, 2, 3, 4, 5};
  auto count_feasible = [&](const SceneContext& s) {
    int n = 0;
    for (const auto& a : enumerate_admissible(s, grid, model, cal, range)) n += a.verdict == Verdict::feasible;
    return n;
  };
  const int nominal = count_feasible(scene);
  EXPECT_EQ(nominal, 5);
  scene.degradation.steer_angle = {0.05, 0.05, 0.05, 0.05};
  scene.degradation.steer_rate = {0.05, 0.05, 0.05, 0.05};
  const int severe = count_feasible(scene);
  EXPECT_GT(nominal, severe);
}

TEST(Cli, RerunIsByteIdentical) {
  selfrep::testing::TempDir dir("cli_repeat");
  const auto cfg = (dir / "small.cfg").string();
  write_small_config(cfg);
  std::string hashes[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = (dir / ("run" + std::to_string(i))).string();
    for (const char* cmd : {"gen-dataset", "train"}) {
      const auto r = run_cli({cmd, "--config", cfg, "--out", out, "--set", "training.max_epochs=5"});
      ASSERT_EQ(r.code, cli::kExitOk) << cmd << ": " << r.err;
    }
    hashes[i] = sha256_file(fs::path(out) / "dataset.csv") + sha256_file(fs::path(out) / "model_a0.1.json");
  }
  EXPECT_EQ(hashes[0], hashes[1]);
}
