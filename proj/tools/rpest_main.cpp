// Command-line front end: prepare | train-structural | train | evaluate
// | predict. Exit codes: 0 ok, 1 usage, 2 data/parse error, 3 numeric
// failure, 4 missing prerequisite.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rpest/commands.hpp"
#include "rpest/common.hpp"
#include "rpest/config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> ablation;
  std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  cmd->add_option("--seed", args.seed, "override the run seed");
  cmd->add_option("--threads", args.threads,
                  "worker threads (1 = fully deterministic)");
  cmd->add_option("--ablation", args.ablation, "'full' or 'text-only'")
      ->check(CLI::IsMember({"full", "text-only"}));
  cmd->add_option("--set", args.overrides,
                  "extra key=value config overrides")
      ->take_all();
}

rpest::RunConfig resolve(const CommonArgs& args) {
  rpest::RunConfig config;
  if (!args.config_path.empty()) config = rpest::load_config(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw rpest::ParseError(0, "--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed) config.seed = *args.seed;
  if (args.threads) config.threads = *args.threads;
  if (args.ablation) config.text_only = *args.ablation == "text-only";
  config.finalize();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relation prediction over knowledge graphs from structural "
               "and textual node embeddings"};
  app.require_subcommand(1);

  CommonArgs prepare_args, structural_args, train_args, eval_args,
      predict_args;

  CLI::App* prepare = app.add_subcommand(
      "prepare", "Parse splits, build caches, report dataset & OOV stats");
  add_common(prepare, prepare_args);

  CLI::App* structural = app.add_subcommand(
      "train-structural", "Random walks + skip-gram structural embeddings");
  add_common(structural, structural_args);

  CLI::App* train =
      app.add_subcommand("train", "Train the relation predictor");
  add_common(train, train_args);

  std::string eval_checkpoint, predict_checkpoint;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Ranking metrics on the test split");
  add_common(evaluate, eval_args);
  evaluate->add_option("--checkpoint", eval_checkpoint,
                       "checkpoint path (default: <work_dir>/model.rpst)");

  std::string head_id, tail_id;
  std::int32_t top_m = 10;
  CLI::App* predict =
      app.add_subcommand("predict", "Rank relations for one entity pair");
  add_common(predict, predict_args);
  predict->add_option("--checkpoint", predict_checkpoint,
                      "checkpoint path (default: <work_dir>/model.rpst)");
  predict->add_option("--head", head_id, "head entity id")->required();
  predict->add_option("--tail", tail_id, "tail entity id")->required();
  predict->add_option("--top", top_m, "relations to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints help/usage message
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (prepare->parsed()) {
      rpest::cmd_prepare(resolve(prepare_args), std::cout);
    } else if (structural->parsed()) {
      rpest::cmd_train_structural(resolve(structural_args), std::cout);
    } else if (train->parsed()) {
      rpest::cmd_train(resolve(train_args), std::cout);
    } else if (evaluate->parsed()) {
      const auto config = resolve(eval_args);
      const std::string path =
          eval_checkpoint.empty() ? config.checkpoint_path() : eval_checkpoint;
      rpest::cmd_evaluate(config, path, std::cout);
    } else if (predict->parsed()) {
      const auto config = resolve(predict_args);
      const std::string path = predict_checkpoint.empty()
                                   ? config.checkpoint_path()
                                   : predict_checkpoint;
      rpest::cmd_predict(config, path, head_id, tail_id, top_m, std::cout);
    }
  } catch (const rpest::PrerequisiteError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const rpest::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const rpest::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const rpest::UnknownEntityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const rpest::DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const rpest::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
