// seq2label command line: corpus generation, training, evaluation, and the
// attention-variant ablation. Flags override config-file keys; every command
// writes its resolved configuration next to its outputs.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seq2label/commands.hpp"
#include "seq2label/config.hpp"

namespace {

using namespace seq2label;

struct TrainFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string variant;
  std::string dilation_rates;
  std::int64_t kernel_size = 0;
  std::int64_t hier = -1;
  std::int64_t epochs = 0;
  std::int64_t hidden = 0;
  bool mask_emitted = true;
};

void add_common_train_flags(CLI::App* cmd, TrainFlags& f, bool with_variant) {
  cmd->add_option("--config", f.config_path, "run config file (key = value)")->required();
  cmd->add_option("--seed", f.seed, "root seed override");
  cmd->add_option("--out", f.out_dir, "output directory")->required();
  if (with_variant)
    cmd->add_option("--variant", f.variant,
                    "attention variant: none|conventional|mdc_only|additive|hybrid");
  cmd->add_option("--dilation-rates", f.dilation_rates, "comma-separated dilation rates");
  cmd->add_option("--kernel-size", f.kernel_size, "convolution kernel size");
  cmd->add_option("--hier", f.hier, "hierarchical encoder boundary N (0 = MDC)");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--hidden", f.hidden, "hidden dimension");
  cmd->add_option("--mask-emitted", f.mask_emitted,
                  "mask already-emitted labels during decoding (true/false)");
}

RunConfig resolve_run_config(const CLI::App* cmd, const TrainFlags& f, bool with_variant) {
  RunConfig cfg = RunConfig::from_kv(read_kv_file(f.config_path));
  if (cmd->count("--seed")) cfg.seed = f.seed;
  if (with_variant && cmd->count("--variant")) cfg.attention_variant = f.variant;
  if (cmd->count("--dilation-rates"))
    cfg.dilation_rates = detail::parse_int_csv("dilation_rates", f.dilation_rates);
  if (cmd->count("--kernel-size")) cfg.kernel_size = f.kernel_size;
  if (cmd->count("--hier")) cfg.hier = f.hier;
  if (cmd->count("--epochs")) cfg.epochs = f.epochs;
  if (cmd->count("--hidden")) cfg.hidden_dim = f.hidden;
  if (cmd->count("--mask-emitted")) cfg.mask_emitted = f.mask_emitted;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequence-to-sequence multi-label text classifier"};
  app.require_subcommand(1);

  auto* gen_cmd = app.add_subcommand("gencorpus", "generate a synthetic planted-phrase corpus");
  std::string gen_config_path, gen_out;
  std::uint64_t gen_seed = 1;
  gen_cmd->add_option("--config", gen_config_path, "generator config file")->required();
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--out", gen_out, "output directory")->required();

  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_common_train_flags(train_cmd, train_flags, true);

  TrainFlags ablate_flags;
  auto* ablate_cmd =
      app.add_subcommand("ablate", "train and compare all five attention variants");
  add_common_train_flags(ablate_cmd, ablate_flags, false);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
  EvalArgs eval_args;
  std::string bands_csv;
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file or run directory")
      ->required();
  eval_cmd->add_option("--data", eval_args.data, "corpus file to evaluate")->required();
  eval_cmd->add_option("--bands", bands_csv,
                       "comma-separated top-k exclusions for band micro-F1");
  eval_cmd->add_option("--out", eval_args.out_dir, "output directory for the report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      cmd_gencorpus(gen_config_from_kv(read_kv_file(gen_config_path)), gen_seed, gen_out);
      std::cout << "gencorpus: wrote train/dev/test and manifest to " << gen_out << "\n";
    } else if (train_cmd->parsed()) {
      cmd_train(resolve_run_config(train_cmd, train_flags, true), train_flags.out_dir);
    } else if (ablate_cmd->parsed()) {
      cmd_ablate(resolve_run_config(ablate_cmd, ablate_flags, false), ablate_flags.out_dir);
    } else if (eval_cmd->parsed()) {
      if (!bands_csv.empty())
        eval_args.bands = seq2label::detail::parse_int_csv("bands", bands_csv);
      cmd_eval(eval_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
