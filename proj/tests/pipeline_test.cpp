#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "psychoforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace psychoforge;
using pipeline::Config;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("pf_pipeline_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& text) {
  fs::path path = temp_dir() / "config.ini";
  write_text_file(path, text);
  return path;
}

std::string small_config(const fs::path& out, std::uint64_t seed = 11) {
  return "[run]\n"
         "seed = " + std::to_string(seed) + "\n"
         "out_dir = " + out.generic_string() + "\n"
         "[synthetic]\n"
         "students = 40\n"
         "questions = 64\n"
         "density = 0.5\n"
         "[features]\n"
         "embedding_dim = 8\n"
         "[train]\n"
         "epochs = 30\n"
         "patience = 30\n"
         "batch_size = 256\n"
         "learning_rate = 0.003\n"
         "hidden1 = 16\n"
         "hidden2 = 8\n"
         "[efficiency]\n"
         "repetitions = 2\n"
         "fractions = 0.25,0.5,1.0\n";
}

Config load_small(const fs::path& out, std::uint64_t seed = 11) {
  return pipeline::load_config(write_config(small_config(out, seed)));
}

std::string validation_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected ValidationError";
  return "";
}

class CountingProvider : public pedafeat::LlmProvider {
 public:
  explicit CountingProvider(std::uint64_t seed)
      : inner_(std::make_shared<pedafeat::MockLlmProvider>(seed)) {}

  std::string complete(const std::string& prompt,
                       const pedafeat::GenerationSettings& settings) override {
    ++calls_;
    return inner_->complete(prompt, settings);
  }

  int calls() const { return calls_.load(); }

 private:
  std::shared_ptr<pedafeat::LlmProvider> inner_;
  std::atomic<int> calls_{0};
};

}  // namespace

TEST(ConfigFile, MinimalFileKeepsDefaults) {
  Config c = pipeline::load_config(write_config("[run]\nseed = 3\n"));
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.out_dir, fs::path("out"));
  EXPECT_EQ(c.synthetic_students, 250);
  EXPECT_EQ(c.synthetic_questions, 400);
  EXPECT_DOUBLE_EQ(c.synthetic_density, 0.4);
  EXPECT_EQ(c.provider, "mock");
  EXPECT_EQ(c.abstract_source, "llm");
  EXPECT_EQ(c.embedding_dim, 16u);
  EXPECT_EQ(c.train.epochs, 60);
  EXPECT_EQ(c.train.patience, 12);
  EXPECT_EQ(c.fit.max_iterations, 2000);
  EXPECT_EQ(c.efficiency_fractions.size(), 15u);
  EXPECT_EQ(c.efficiency_repetitions, 5);
  EXPECT_TRUE(c.llm_runs.empty());
  EXPECT_EQ(c.cache_file(), fs::path("out") / "llm_runs.jsonl");
}

TEST(ConfigFile, ReadsEverySection) {
  Config c = pipeline::load_config(write_config(
      "# commented\n"
      "[run]\n"
      "seed = 42\n"
      "out_dir = /tmp/pf_somewhere\n"
      "\n"
      "[synthetic]\n"
      "students = 12\n"
      "questions = 34\n"
      "density = 0.9\n"
      "[split]\n"
      "train = 0.6\n"
      "validation = 0.2\n"
      "holdout = 0.2\n"
      "[provider]\n"
      "kind = http\n"
      "model = solver-2\n"
      "endpoint = http://localhost:9000/v1/complete\n"
      "temperature = 0.5\n"
      "timeout_seconds = 30\n"
      "max_in_flight = 2\n"
      "attempts = 5\n"
      "[features]\n"
      "abstract_source = textfeat\n"
      "embedding_dim = 4\n"
      "[train]\n"
      "epochs = 7\n"
      "patience = 3\n"
      "batch_size = 64\n"
      "learning_rate = 0.01\n"
      "dropout = 0.1\n"
      "l2 = 0.001\n"
      "embedding_dim = 6\n"
      "hidden1 = 10\n"
      "hidden2 = 5\n"
      "[fit]\n"
      "max_iterations = 500\n"
      "tolerance = 0.0001\n"
      "prior_precision = 0.02\n"
      "bound = 4\n"
      "[efficiency]\n"
      "repetitions = 3\n"
      "fractions = 0.1,0.5,1.0\n"
      "[llm]\n"
      "runs_bloom_level = 5\n"));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.out_dir, fs::path("/tmp/pf_somewhere"));
  EXPECT_EQ(c.synthetic_students, 12);
  EXPECT_DOUBLE_EQ(c.split_ratios[0], 0.6);
  EXPECT_EQ(c.provider, "http");
  EXPECT_EQ(c.model_tag, "solver-2");
  EXPECT_EQ(c.endpoint, "http://localhost:9000/v1/complete");
  EXPECT_DOUBLE_EQ(c.temperature, 0.5);
  EXPECT_EQ(c.timeout_seconds, 30);
  EXPECT_EQ(c.max_in_flight, 2);
  EXPECT_EQ(c.retry_attempts, 5);
  EXPECT_EQ(c.abstract_source, "textfeat");
  EXPECT_EQ(c.embedding_dim, 4u);
  EXPECT_EQ(c.train.epochs, 7);
  EXPECT_EQ(c.train.batch_size, 64u);
  EXPECT_EQ(c.train.emb_dim, 6u);
  EXPECT_EQ(c.train.hidden1, 10u);
  EXPECT_EQ(c.fit.max_iterations, 500);
  EXPECT_DOUBLE_EQ(c.fit.bound, 4.0);
  EXPECT_EQ(c.efficiency_repetitions, 3);
  EXPECT_EQ(c.efficiency_fractions, (std::vector<double>{0.1, 0.5, 1.0}));
  EXPECT_EQ(c.llm_runs.at("bloom_level"), 5);
}

TEST(ConfigFile, CollectsAllViolationsInOneError) {
  fs::path path = write_config(
      "[run]\n"
      "seed = 1\n"
      "[synthetic]\n"
      "density = 1.5\n"
      "[provider]\n"
      "kind = banana\n"
      "[train]\n"
      "epochs = 0\n"
      "[llm]\n"
      "runs_bogus_feature = 2\n"
      "[mystery]\n"
      "x = 1\n");
  std::string msg = validation_message([&] { pipeline::load_config(path); });
  EXPECT_NE(msg.find("density"), std::string::npos) << msg;
  EXPECT_NE(msg.find("kind"), std::string::npos) << msg;
  EXPECT_NE(msg.find("epochs"), std::string::npos) << msg;
  EXPECT_NE(msg.find("runs_bogus_feature"), std::string::npos) << msg;
  EXPECT_NE(msg.find("[mystery]"), std::string::npos) << msg;
}

TEST(ConfigFile, RejectsUnknownKeysAndMalformedStructure) {
  std::string unknown = validation_message(
      [&] { pipeline::load_config(write_config("[run]\nseeed = 3\n")); });
  EXPECT_NE(unknown.find("seeed"), std::string::npos);
  EXPECT_NE(unknown.find("unknown key"), std::string::npos);

  std::string stray = validation_message(
      [&] { pipeline::load_config(write_config("seed = 3\n")); });
  EXPECT_NE(stray.find("before any [section]"), std::string::npos);

  std::string duplicate = validation_message(
      [&] { pipeline::load_config(write_config("[run]\nseed = 1\nseed = 2\n")); });
  EXPECT_NE(duplicate.find("duplicate key"), std::string::npos);

  std::string noeq = validation_message(
      [&] { pipeline::load_config(write_config("[run]\nseed\n")); });
  EXPECT_NE(noeq.find("key = value"), std::string::npos);

  EXPECT_THROW(pipeline::load_config(temp_dir() / "missing.ini"), ValidationError);
}

TEST(ConfigFile, CrossFieldChecks) {
  std::string http = validation_message(
      [&] { pipeline::load_config(write_config("[provider]\nkind = http\n")); });
  EXPECT_NE(http.find("endpoint"), std::string::npos);

  std::string paths = validation_message(
      [&] { pipeline::load_config(write_config("[paths]\nquestions = q.jsonl\n")); });
  EXPECT_NE(paths.find("set together"), std::string::npos);

  std::string conflict = validation_message([&] {
    pipeline::load_config(write_config(
        "[paths]\nembeddings = e.jsonl\n[features]\nembedding_dim = 8\n"));
  });
  EXPECT_NE(conflict.find("conflicts"), std::string::npos);

  std::string negative = validation_message(
      [&] { pipeline::load_config(write_config("[train]\nhidden1 = -4\n")); });
  EXPECT_NE(negative.find("negative"), std::string::npos);

  std::string ratios = validation_message(
      [&] { pipeline::load_config(write_config("[split]\ntrain = 0.9\n")); });
  EXPECT_NE(ratios.find("sum to 1"), std::string::npos);
}

TEST(Stages, MissingPrerequisiteNamesProducer) {
  Config cfg = load_small(temp_dir() / "out");

  std::string split = validation_message([&] { pipeline::run_split(cfg); });
  EXPECT_NE(split.find("run 'simulate' first"), std::string::npos) << split;

  pipeline::run_simulate(cfg);

  std::string features = validation_message([&] { pipeline::run_features(cfg); });
  EXPECT_NE(features.find("run 'llm_extract' first"), std::string::npos) << features;

  std::string train = validation_message([&] { pipeline::run_train(cfg); });
  EXPECT_NE(train.find("run 'split' first"), std::string::npos) << train;

  std::string fit = validation_message([&] { pipeline::run_fit_irt(cfg); });
  EXPECT_NE(fit.find("run 'predict' first"), std::string::npos) << fit;
}

TEST(Stages, WarmCacheRunsZeroProviderCalls) {
  Config cfg = load_small(temp_dir() / "out");
  pipeline::run_simulate(cfg);

  CountingProvider cold(derive_seed(cfg.seed, "llm-mock"));
  pipeline::run_llm_extract(cfg, cold);
  EXPECT_GT(cold.calls(), 0);
  std::string runs = read_text_file(cfg.cache_file());
  std::string aggregates = read_text_file(pipeline::Artifacts(cfg).llm_aggregates());

  CountingProvider warm(derive_seed(cfg.seed, "llm-mock"));
  pipeline::run_llm_extract(cfg, warm);
  EXPECT_EQ(warm.calls(), 0);
  EXPECT_EQ(read_text_file(cfg.cache_file()), runs);
  EXPECT_EQ(read_text_file(pipeline::Artifacts(cfg).llm_aggregates()), aggregates);
}

TEST(EndToEnd, RunAllArtifactsManifestsAndDeterminism) {
  fs::path dir_a = temp_dir() / "a";
  fs::path dir_b = temp_dir() / "b";
  Config cfg_a = load_small(dir_a);
  Config cfg_b = load_small(dir_b);

  pedafeat::MockLlmProvider prov_a(derive_seed(cfg_a.seed, "llm-mock"));
  pedafeat::MockLlmProvider prov_b(derive_seed(cfg_b.seed, "llm-mock"));
  pipeline::run_all(cfg_a, prov_a);
  pipeline::run_all(cfg_b, prov_b);
  pipeline::run_efficiency(cfg_a);
  pipeline::run_efficiency(cfg_b);
  pipeline::run_ablation(cfg_a);
  pipeline::run_ablation(cfg_b);

  const std::vector<std::string> expected{
      "config.json",         "questions.jsonl",
      "responses.csv",       "truth.json",
      "split.csv",           "reference_betas.csv",
      "reference_thetas.csv", "reference_fit.json",
      "llm_runs.jsonl",      "llm_aggregates.jsonl",
      "embeddings.jsonl",    "features.csv",
      "model.json",          "history.csv",
      "predictions.csv",     "betas.csv",
      "thetas.csv",          "fit.json",
      "metrics.json",        "efficiency.json",
      "ablation.json"};
  for (const std::string& name : expected)
    EXPECT_TRUE(fs::exists(dir_a / name)) << name;
  for (const char* stage :
       {"simulate", "split", "llm_extract", "features", "train", "predict",
        "fit_irt", "evaluate", "efficiency", "ablation"})
    EXPECT_TRUE(fs::exists(dir_a / (std::string(stage) + ".manifest.json"))) << stage;

  std::set<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(dir_a))
    names_a.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(dir_b))
    names_b.insert(e.path().filename().string());
  EXPECT_EQ(names_a, names_b);
  for (const std::string& name : names_a) {
    SCOPED_TRACE(name);
    EXPECT_EQ(read_text_file(dir_a / name), read_text_file(dir_b / name));
  }

  nlohmann::json metrics = nlohmann::json::parse(read_text_file(dir_a / "metrics.json"));
  EXPECT_EQ(metrics.at("counts").at("n_students").get<int>(), 40);
  EXPECT_EQ(metrics.at("counts").at("n_questions").get<int>(), 64);
  int n_responses = metrics.at("counts").at("n_responses").get<int>();
  EXPECT_EQ(metrics.at("classification").at("all").at("n").get<int>(), n_responses);
  EXPECT_TRUE(metrics.at("classification").contains("holdout"));
  const nlohmann::json& holdout = metrics.at("difficulty_agreement").at("holdout");
  EXPECT_TRUE(std::isfinite(
      holdout.at("model_vs_truth").at("pearson").get<double>()));
  EXPECT_GT(holdout.at("model_vs_reference").at("rmse").get<double>(), 0.0);

  nlohmann::json efficiency =
      nlohmann::json::parse(read_text_file(dir_a / "efficiency.json"));
  EXPECT_EQ(efficiency.at("curve").at("points").size(), 3u);
  EXPECT_GT(efficiency.at("curve").at("model_rmse").get<double>(), 0.0);

  nlohmann::json ablation = nlohmann::json::parse(read_text_file(dir_a / "ablation.json"));
  ASSERT_EQ(ablation.at("presets").size(), 4u);
  EXPECT_EQ(ablation.at("presets")[0].at("name"), "embeddings_only");
  EXPECT_EQ(ablation.at("presets")[3].at("name"), "full");

  nlohmann::json manifest =
      nlohmann::json::parse(read_text_file(dir_a / "train.manifest.json"));
  EXPECT_EQ(manifest.at("stage"), "train");
  EXPECT_EQ(manifest.at("version"), pipeline::kVersion);
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 11u);
  EXPECT_EQ(manifest.at("timestamp"), "1970-01-01T00:00:00Z");
  EXPECT_EQ(manifest.at("inputs").at("features.csv").get<std::string>().size(), 16u);
  EXPECT_EQ(manifest.at("config_hash").get<std::string>().size(), 16u);
  EXPECT_GT(manifest.at("counts").at("train_samples").get<int>(), 0);

  // Re-running downstream stages in place must reproduce identical bytes.
  pipeline::run_fit_irt(cfg_a);
  pipeline::run_evaluate(cfg_a);
  EXPECT_EQ(read_text_file(dir_a / "betas.csv"), read_text_file(dir_b / "betas.csv"));
  EXPECT_EQ(read_text_file(dir_a / "metrics.json"),
            read_text_file(dir_b / "metrics.json"));
}

TEST(EndToEnd, DifferentSeedsChangeTheCorpus) {
  fs::path dir_a = temp_dir() / "a";
  fs::path dir_b = temp_dir() / "b";
  Config cfg_a = load_small(dir_a, 11);
  Config cfg_b = load_small(dir_b, 12);
  pipeline::run_simulate(cfg_a);
  pipeline::run_simulate(cfg_b);
  EXPECT_NE(read_text_file(dir_a / "responses.csv"),
            read_text_file(dir_b / "responses.csv"));
  EXPECT_NE(read_text_file(dir_a / "truth.json"), read_text_file(dir_b / "truth.json"));
}

TEST(Predictions, LoaderRejectsCorruptGrids) {
  fs::path dir = temp_dir();
  auto file = [&](const std::string& text) {
    fs::path p = dir / "predictions.csv";
    write_text_file(p, text);
    return p;
  };

  EXPECT_THROW(pipeline::detail::load_predictions(file("id,p\n")), ValidationError);

  std::string dup = validation_message([&] {
    pipeline::detail::load_predictions(
        file("student_id,question_id,p\ns1,q1,0.5\ns1,q1,0.5\n"));
  });
  EXPECT_NE(dup.find("duplicate"), std::string::npos);

  std::string incomplete = validation_message([&] {
    pipeline::detail::load_predictions(
        file("student_id,question_id,p\ns1,q1,0.5\ns2,q2,0.5\n"));
  });
  EXPECT_NE(incomplete.find("incomplete"), std::string::npos);

  std::string range = validation_message([&] {
    pipeline::detail::load_predictions(file("student_id,question_id,p\ns1,q1,1.5\n"));
  });
  EXPECT_NE(range.find("[0, 1]"), std::string::npos);

  pipeline::detail::PredictionMatrix m = pipeline::detail::load_predictions(
      file("student_id,question_id,p\ns1,q1,0.25\ns1,q2,0.75\ns2,q1,0.5\ns2,q2,1\n"));
  EXPECT_EQ(m.student_ids, (std::vector<std::string>{"s1", "s2"}));
  EXPECT_EQ(m.question_ids, (std::vector<std::string>{"q1", "q2"}));
  EXPECT_DOUBLE_EQ(m.p[1][0], 0.5);
}

TEST(Cli, ExitCodesMatchTheContract) {
  const char* bin = std::getenv("PSYCHOFORGE_BIN");
  if (!bin) GTEST_SKIP() << "PSYCHOFORGE_BIN not set";

  auto run = [&](const std::string& args) {
    std::string cmd = std::string(bin) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };

  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("simulate --help"), 0);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("simulate"), 1);
  EXPECT_EQ(run("no_such_command --config x.ini"), 1);
  EXPECT_EQ(run("simulate --config " + (temp_dir() / "missing.ini").string()), 1);

  fs::path bad = write_config("[synthetic]\ndensity = 7\n");
  EXPECT_EQ(run("simulate --config " + bad.string()), 1);

  fs::path out = temp_dir() / "cli_out";
  fs::path good = write_config(small_config(out));
  EXPECT_EQ(run("simulate --config " + good.string()), 0);
  EXPECT_TRUE(fs::exists(out / "questions.jsonl"));
  EXPECT_TRUE(fs::exists(out / "simulate.manifest.json"));

  // --seed overrides the config seed.
  fs::path out2 = temp_dir() / "cli_out2";
  EXPECT_EQ(run("simulate --config " + good.string() + " --seed 99 --out " +
                out2.string()),
            0);
  EXPECT_NE(read_text_file(out / "responses.csv"), read_text_file(out2 / "responses.csv"));

  // Out directory blocked by a regular file is a runtime failure, not a
  // validation failure.
  fs::path blocker = temp_dir() / "blocker";
  write_text_file(blocker, "x");
  fs::path blocked = write_config(small_config(blocker));
  EXPECT_EQ(run("simulate --config " + blocked.string()), 2);
}
