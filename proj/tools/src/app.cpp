// Copyright 2026 The divergescope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "divergescope/cli/app.hpp"

#include <cstdlib>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "divergescope/cipher.hpp"
#include "divergescope/cli/stages.hpp"
#include "divergescope/error.hpp"

namespace divergescope::cli {

namespace {

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<unsigned> threads;
  std::string output_dir;
};

Config build_config(const GlobalOptions& g) {
  Config config;
  if (!g.config_path.empty()) config.load_file(g.config_path);
  if (const char* env = std::getenv("DIVERGESCOPE_THREADS"); env != nullptr && *env != '\0') {
    config.set("threads", env);
  }
  for (const auto& o : g.overrides) config.apply_override(o);
  if (g.threads) config.set("threads", std::to_string(*g.threads));
  if (!g.output_dir.empty()) config.set("output_dir", g.output_dir);
  config.threads();
  return config;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"divergescope: semantic divergence scoring and data selection for parallel corpora", "divergescope"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  GlobalOptions g;
  app.add_option("-c,--config", g.config_path, "Flat key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override one configuration key (key=value); repeatable");
  app.add_option("--threads", g.threads, "Worker threads (also DIVERGESCOPE_THREADS)")->check(CLI::PositiveNumber);
  app.add_option("-o,--output-dir", g.output_dir, "Artifact directory (config key output_dir)");

  std::function<void(Run&)> action;
  std::string command;
  auto add = [&](const char* name, const char* help, std::function<void(Run&)> fn) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&, name, fn = std::move(fn)] {
      command = name;
      action = fn;
    });
    return sub;
  };

  add("align", "Train IBM Model 2 in both directions and write symmetrized alignments", stage_align);
  add("dict", "Extract the bilingual dictionary from the trained aligners", stage_dict);
  add("datagen", "Build synthetic train/dev/test datasets from corpus positives", stage_datagen);
  add("train-embed", "Train bilingual word embeddings", stage_train_embed);
  add("train-vdpwi", "Train the divergence model", stage_train_vdpwi);
  add("train-feat", "Train the alignment-feature classifier", stage_train_feat);

  std::string model = "vdpwi";
  std::string input = "test";
  std::string scores_file;
  auto* score = add("score", "Score pairs with a model or ingest an external score file", [&](Run& run) {
    std::optional<std::filesystem::path> file;
    if (!scores_file.empty()) file = scores_file;
    stage_score(run, model, input, file);
  });
  score->add_option("--model", model, "vdpwi, feat, cosine or random; names the output with --scores-file")
      ->capture_default_str();
  score->add_option("--input", input, "train, dev, test, corpus, or an unlabeled pair TSV")->capture_default_str();
  score->add_option("--scores-file", scores_file, "External pair_id<TAB>score file")->check(CLI::ExistingFile);

  auto* tune = add("tune", "Tune the decision threshold on dev scores", [&](Run& run) { stage_tune(run, model); });
  tune->add_option("--model", model, "Scorer whose dev scores to use")->capture_default_str();
  auto* eval = add("eval", "Evaluate test scores at the tuned threshold", [&](Run& run) { stage_eval(run, model); });
  eval->add_option("--model", model, "Scorer whose test scores to use")->capture_default_str();

  std::string annotations;
  auto* kappa = add("kappa", "Fleiss' kappa and majority labels for an annotation file",
                    [&](Run& run) { stage_kappa(run, annotations); });
  kappa->add_option("annotations", annotations, "item_id<TAB>count_equivalent<TAB>count_divergent")
      ->required()
      ->check(CLI::ExistingFile);

  std::optional<double> keep;
  std::string select_model;
  auto* select = add("select", "Keep the least divergent fraction of the corpus", [&](Run& run) {
    std::optional<std::filesystem::path> file;
    if (!scores_file.empty()) file = scores_file;
    stage_select(run, select_model.empty() ? run.config().get("select.model") : select_model, file);
  });
  select->add_option("--model", select_model, "Scorer (default: config select.model)");
  select->add_option("--scores-file", scores_file, "External corpus scores")->check(CLI::ExistingFile);
  select->add_option("--keep", keep, "Fraction to keep (config select.keep_fraction)");

  add("pipeline", "Run every stage end to end", [](Run& run) { stage_pipeline(run); });

  std::string cipher_prefix;
  auto* gen = add("gen-cipher", "Write the configured cipher corpus as <prefix>.e and <prefix>.f", [&](Run& run) {
    const auto cipher = make_cipher_corpus(run.config().cipher_options());
    write_parallel(run.output(cipher_prefix + ".e"), run.output(cipher_prefix + ".f"), cipher.pairs);
  });
  gen->add_option("prefix", cipher_prefix, "Output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 1;
  }

  try {
    auto config = build_config(g);
    if (keep) config.set("select.keep_fraction", fmt::format("{}", *keep));
    Run run(std::move(config), command, err);
    action(run);
    const auto manifest = run.write_manifest();
    fmt::print(err, "manifest: {}\n", manifest.string());
    return 0;
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return e.exit_status();
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return static_cast<int>(Error::Kind::kData);
  }
}

}  // namespace divergescope::cli
