#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "psychoforge/pedafeat_http.hpp"
#include "psychoforge/pipeline.hpp"

namespace pf = psychoforge;

namespace {

std::shared_ptr<pf::pedafeat::LlmProvider> make_provider(
    const pf::pipeline::Config& cfg) {
  std::shared_ptr<pf::pedafeat::LlmProvider> base;
  if (cfg.provider == "mock") {
    base = std::make_shared<pf::pedafeat::MockLlmProvider>(
        pf::derive_seed(cfg.seed, "llm-mock"));
  } else {
    pf::pedafeat::HttpProviderConfig http;
    http.endpoint = cfg.endpoint;
    http.timeout_seconds = cfg.timeout_seconds;
    base = std::make_shared<pf::pedafeat::HttpLlmProvider>(http);
  }
  return std::make_shared<pf::pedafeat::RetryingProvider>(std::move(base),
                                                          cfg.retry_attempts);
}

constexpr const char* kFooter = R"(Config is an INI file; see configs/synthetic.ini for a commented example.
Overrides: --seed replaces [run] seed, --out replaces [run] out_dir,
--provider replaces [provider] kind. The http provider reads its API key from
the PSYCHOFORGE_API_KEY environment variable, never from config.

Artifacts (in the out directory):
  config.json            resolved configuration (excluding the out directory)
  questions.jsonl        one question per line: question_id, statement, options,
                         correct_index, has_image
  responses.csv          student_id,question_id,correct
  truth.json             synthetic runs only: true theta/beta by id
  split.csv              question_id,split (train|validation|holdout)
  reference_betas.csv    question_id,beta    (1PL fit on the real responses)
  reference_thetas.csv   student_id,theta
  reference_fit.json     reference 1PL fit summary (iterations, objective)
  llm_runs.jsonl         raw provider responses, keyed (question, feature, model, run)
  llm_aggregates.jsonl   per-question aggregated LLM feature values
  embeddings.jsonl       {"id", "vector"} rows; options keyed question_id#option_k
  features.csv           question_id plus one column per feature
  model.json             network weights + standardizer + column list
  history.csv            epoch,train_loss,val_loss
  predictions.csv        student_id,question_id,p for every pair
  betas.csv, thetas.csv  1PL fit on the binarized predictions
  fit.json               that fit's summary (iterations, objective)
  metrics.json           classification + difficulty-agreement metrics
  efficiency.json        RMSE efficiency curve over holdout questions
  ablation.json          the four feature-subset presets
  <stage>.manifest.json  input/output content hashes, seed, config hash, version

Exit codes: 0 success, 1 validation error, 2 runtime failure.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "psychoforge: estimates 1PL difficulty for multiple-choice questions by "
      "training a correctness-prediction network, simulating a full response "
      "matrix, and refitting the 1PL model on it."};
  app.set_version_flag("--version", pf::pipeline::kVersion);
  app.footer(kFooter);
  app.require_subcommand(1);

  struct {
    std::string config;
    std::string out;
    std::string provider;
    std::uint64_t seed = 0;
  } args;

  struct Command {
    const char* name;
    const char* help;
  };
  const std::vector<Command> commands{
      {"simulate",
       "Generate a synthetic corpus, or ingest [paths] questions/responses -> "
       "questions.jsonl, responses.csv, truth.json"},
      {"split",
       "Fit the reference 1PL on real responses and stratify questions -> "
       "split.csv, reference_betas.csv, reference_thetas.csv, reference_fit.json"},
      {"llm_extract",
       "Extract pedagogical features through the provider -> llm_runs.jsonl, "
       "llm_aggregates.jsonl"},
      {"features",
       "Build embeddings and assemble the feature table -> embeddings.jsonl, "
       "features.csv"},
      {"train", "Train the correctness network -> model.json, history.csv"},
      {"predict",
       "Predict every student x question probability -> predictions.csv"},
      {"fit_irt",
       "Binarize predictions and fit 1PL -> betas.csv, thetas.csv, fit.json"},
      {"evaluate",
       "Classification and difficulty-agreement metrics -> metrics.json"},
      {"efficiency",
       "RMSE efficiency curve on holdout questions -> efficiency.json"},
      {"ablation", "Train the four feature-subset presets -> ablation.json"},
      {"run_all",
       "simulate, split, llm_extract, features, train, predict, fit_irt, "
       "evaluate"},
  };
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", args.config, "INI config file")->required();
    sub->add_option("--seed", args.seed, "override [run] seed");
    sub->add_option("--out", args.out, "override [run] out_dir");
    sub->add_option("--provider", args.provider, "override [provider] kind")
        ->check(CLI::IsMember({"mock", "http"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  try {
    pf::pipeline::Config cfg = pf::pipeline::load_config(args.config);
    if (sub->count("--seed")) cfg.seed = args.seed;
    if (!args.out.empty()) cfg.out_dir = args.out;
    if (!args.provider.empty()) {
      cfg.provider = args.provider;
      if (cfg.provider == "http" && cfg.endpoint.empty())
        throw pf::ValidationError(
            "--provider http requires [provider] endpoint in the config");
    }

    std::shared_ptr<pf::pedafeat::LlmProvider> provider;
    if (command == "run_all" || command == "llm_extract") provider = make_provider(cfg);

    if (command == "run_all") {
      for (const std::string& stage : pf::pipeline::run_all_stages()) {
        pf::pipeline::run_stage(cfg, stage, provider.get());
        std::printf("%s: done\n", stage.c_str());
      }
    } else {
      pf::pipeline::run_stage(cfg, command, provider.get());
      std::printf("%s: done\n", command.c_str());
    }
    std::printf("artifacts in %s\n", cfg.out_dir.string().c_str());
  } catch (const pf::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
