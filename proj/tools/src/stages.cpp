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

#include "divergescope/cli/stages.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <openssl/evp.h>

#include "divergescope/align.hpp"
#include "divergescope/cipher.hpp"
#include "divergescope/datagen.hpp"
#include "divergescope/embed.hpp"
#include "divergescope/error.hpp"
#include "divergescope/features.hpp"
#include "divergescope/select.hpp"
#include "divergescope/vdpwi.hpp"
#include "json.hpp"

#ifndef DIVERGESCOPE_VERSION
#define DIVERGESCOPE_VERSION "unknown"
#endif

namespace divergescope::cli {

namespace fs = std::filesystem;

Run::Run(Config config, std::string subcommand, std::ostream& log)
    : config_(std::move(config)), subcommand_(std::move(subcommand)), log_(log) {
  std::error_code ec;
  fs::create_directories(config_.output_dir(), ec);
  if (ec) throw DataError(fmt::format("cannot create {}: {}", config_.output_dir().string(), ec.message()));
}

fs::path Run::artifact(const std::string& name) const { return config_.output_dir() / name; }

const fs::path& Run::input(const fs::path& path) {
  if (!outputs_.contains(path)) inputs_.insert(path);
  return path;
}

const fs::path& Run::output(const fs::path& path) {
  outputs_.insert(path);
  return path;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read {}", path.string()));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buffer[1 << 16];
  while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

fs::path Run::write_manifest() {
  nlohmann::json j;
  j["tool"] = "divergescope";
  j["version"] = DIVERGESCOPE_VERSION;
#if defined(__VERSION__)
  j["compiler"] = __VERSION__;
#endif
  j["subcommand"] = subcommand_;
  j["config"] = config_.entries();
  nlohmann::json seeds;
  for (const auto& [key, value] : config_.entries()) {
    if (key.ends_with(".seed")) seeds[key] = value;
  }
  j["seeds"] = seeds;
  auto hashes = [](const std::set<fs::path>& paths) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& p : paths) {
      if (fs::is_regular_file(p)) list.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    }
    return list;
  };
  j["inputs"] = hashes(inputs_);
  j["outputs"] = hashes(outputs_);
  const auto path = artifact(fmt::format("manifest.{}.json", subcommand_));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
  return path;
}

namespace {

constexpr const char* kModels[] = {"cosine", "feat", "vdpwi"};

std::string alignment_name(const char* what) { return fmt::format("corpus.align.{}", what); }

void log_warnings(Run& run, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) fmt::print(run.log(), "warning: {}\n", w);
}

std::pair<Ibm2Model, Ibm2Model> load_aligners(Run& run) {
  return {load_ibm2_file(run.input(run.artifact("aligner.e2f"))), load_ibm2_file(run.input(run.artifact("aligner.f2e")))};
}

BilingualDictionary load_dictionary(Run& run) {
  return read_dictionary(run.input(run.artifact("dict.e2f.tsv")), run.input(run.artifact("dict.f2e.tsv")));
}

std::vector<LabeledPair> load_dataset(Run& run, const std::string& name) {
  return read_labeled_tsv_file(run.input(run.artifact(name + ".tsv")));
}

EmbeddingTable load_vectors(Run& run) {
  std::vector<std::string> warnings;
  auto table = load_embeddings_file(run.input(run.artifact("embeddings.txt")), &warnings);
  log_warnings(run, warnings);
  return table;
}

std::vector<SentencePair> input_pairs(Run& run, const std::string& input) {
  if (input == "train" || input == "dev" || input == "test") return unlabeled(load_dataset(run, input));
  if (input == "corpus") return load_corpus(run);
  if (!fs::exists(input)) {
    throw UsageError(fmt::format("score input '{}' is neither train, dev, test, corpus nor a file", input));
  }
  return read_tsv_file(run.input(input));
}

std::string input_label(const std::string& input) {
  if (input == "train" || input == "dev" || input == "test" || input == "corpus") return input;
  return fs::path(input).stem().string();
}

fs::path scores_path(const Run& run, const std::string& model, const std::string& input) {
  return run.artifact(fmt::format("scores.{}.{}.tsv", model, input_label(input)));
}

std::vector<ScoredPair> read_scores(Run& run, const std::string& model, const std::string& input,
                                    const std::vector<SentencePair>& pairs) {
  const auto path = scores_path(run, model, input);
  if (!fs::exists(path)) {
    throw UsageError(fmt::format("{} not found; run `score --model {} --input {}` first", path.string(), model, input));
  }
  return ingest_scores_file(run.input(path), pairs);
}

double read_threshold(Run& run, const std::string& model) {
  const auto path = run.artifact(fmt::format("threshold.{}.txt", model));
  std::ifstream in(run.input(path));
  if (!in) throw UsageError(fmt::format("{} not found; run `tune --model {}` first", path.string(), model));
  std::string text;
  in >> text;
  double t = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), t);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw DataError(fmt::format("{}: bad threshold", path.string()));
  return t;
}

void write_text(Run& run, const fs::path& path, const std::string& text) {
  std::ofstream out(run.output(path), std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out << text;
}

}  // namespace

std::vector<SentencePair> load_corpus(Run& run) {
  const auto& cfg = run.config();
  const auto& source = cfg.get("corpus.source");
  const auto& target = cfg.get("corpus.target");
  std::vector<SentencePair> pairs;
  if (source.empty() && target.empty()) {
    pairs = make_cipher_corpus(cfg.cipher_options()).pairs;
  } else if (source.empty() || target.empty()) {
    throw UsageError("corpus.source and corpus.target must be given together");
  } else {
    auto loaded = load_parallel(run.input(source), run.input(target));
    if (loaded.rejected > 0) fmt::print(run.log(), "corpus: {} lines with an empty side skipped\n", loaded.rejected);
    pairs = std::move(loaded.pairs);
  }
  auto dedup = deduplicate(pairs);
  if (dedup.removed > 0) fmt::print(run.log(), "corpus: {} duplicate pairs removed\n", dedup.removed);
  if (dedup.pairs.empty()) throw DataError("corpus is empty");
  return std::move(dedup.pairs);
}

void stage_align(Run& run) {
  const auto& cfg = run.config();
  const auto pairs = load_corpus(run);
  write_tsv_file(run.output(run.artifact("corpus.tsv")), pairs);
  const int ibm1 = static_cast<int>(cfg.get_size("align.ibm1_iterations"));
  const int ibm2 = static_cast<int>(cfg.get_size("align.ibm2_iterations"));
  const EmOptions em{cfg.threads()};
  const auto ef = train_aligner(pairs, Direction::kEtoF, ibm1, ibm2, em);
  const auto fe = train_aligner(pairs, Direction::kFtoE, ibm1, ibm2, em);
  save_ibm2_file(run.output(run.artifact("aligner.e2f")), ef);
  save_ibm2_file(run.output(run.artifact("aligner.f2e")), fe);
  const auto aligned = align_corpus(ef, fe, pairs);
  write_alignments_file(run.output(run.artifact(alignment_name("forward"))), aligned.forward);
  write_alignments_file(run.output(run.artifact(alignment_name("reverse"))), aligned.reverse);
  for (const auto h : kAllHeuristics) {
    write_alignments_file(run.output(run.artifact(alignment_name(std::string(heuristic_name(h)).c_str()))),
                          aligned.symmetrized.at(h));
  }
  fmt::print(run.log(), "align: {} pairs, {} source types, {} target types\n", pairs.size(),
             ef.table.source.size() - 1, ef.table.target.size() - 1);
}

void stage_dict(Run& run) {
  const auto [ef, fe] = load_aligners(run);
  const double threshold = run.config().get_double("dict.threshold");
  const auto dict = extract_dictionary(ef, fe, threshold);
  write_dictionary(run.output(run.artifact("dict.e2f.tsv")), run.output(run.artifact("dict.f2e.tsv")), dict);
  fmt::print(run.log(), "dict: {} entries at threshold {}\n", dict.entry_count(), threshold);
}

void stage_datagen(Run& run) {
  const auto& cfg = run.config();
  const auto pairs = load_corpus(run);
  const auto dict = load_dictionary(run);
  const double dev = cfg.get_double("split.dev_fraction");
  const double test = cfg.get_double("split.test_fraction");
  const auto split = split_corpus(pairs, {1.0 - dev - test, dev, test}, cfg.get_seed("split.seed"));
  const auto ratio = cfg.get_size("datagen.ratio");
  const auto seed = cfg.get_seed("datagen.seed");
  const auto options = cfg.negative_options();
  struct Part {
    const char* name;
    const std::vector<SentencePair>* source;
    const char* count_key;
  };
  const Part parts[] = {{"train", &split.train, "datagen.positives"},
                        {"dev", &split.dev, "datagen.dev_positives"},
                        {"test", &split.test, "datagen.test_positives"}};
  std::uint64_t offset = 0;
  for (const auto& part : parts) {
    const auto positives = sample_pairs(*part.source, cfg.get_size(part.count_key), seed + offset);
    const auto pool = generate_negatives(positives, dict, options);
    const auto data = assemble_dataset(positives, pool, ratio, seed + offset);
    if (!data.warning.empty()) fmt::print(run.log(), "warning: {}: {}\n", part.name, data.warning);
    write_labeled_tsv_file(run.output(run.artifact(fmt::format("{}.tsv", part.name))), data.examples);
    fmt::print(run.log(), "datagen: {} = {} positives + {} negatives (pool {})\n", part.name, data.positive_count,
               data.negative_count, pool.size());
    ++offset;
  }
}

void stage_train_embed(Run& run) {
  const auto pairs = load_corpus(run);
  const auto alignments = read_alignments_file(run.input(run.artifact(alignment_name("grow-diag-final-and"))), pairs);
  std::vector<std::string> warnings;
  const auto table = train_bilingual_embeddings(pairs, alignments, run.config().embedding_options(), &warnings);
  log_warnings(run, warnings);
  save_embeddings_file(run.output(run.artifact("embeddings.txt")), table);
  fmt::print(run.log(), "train-embed: {} vectors of dim {}\n", table.size(), table.dim());
}

void stage_train_vdpwi(Run& run) {
  const auto config = run.config().vdpwi_config();
  const auto train = load_dataset(run, "train");
  const auto dev = load_dataset(run, "dev");
  const auto embeddings = load_vectors(run);
  const auto truncated = count_truncated(unlabeled(train), config);
  if (truncated > 0) {
    fmt::print(run.log(), "train-vdpwi: {} training pairs truncated to {} tokens\n", truncated, config.clamp_length());
  }
  VdpwiTrainOptions options;
  auto& log = run.log();
  const auto result = train_vdpwi(train, dev, config, embeddings, options);
  log_warnings(run, result.warnings);
  std::string history = "epoch\ttrain_kl\tdev_pearson\n";
  history += fmt::format("0\t{:.6f}\tnan\n", result.initial_train_kl);
  for (const auto& e : result.history) {
    history += fmt::format("{}\t{:.6f}\t{:.6f}\n", e.epoch, e.train_kl, e.validation_pearson);
    fmt::print(log, "train-vdpwi: epoch {} kl {:.4f} dev pearson {:.4f}\n", e.epoch, e.train_kl, e.validation_pearson);
  }
  write_text(run, run.artifact("vdpwi.history.tsv"), history);
  save_vdpwi_file(run.output(run.artifact("vdpwi.model")), result.model);
  fmt::print(log, "train-vdpwi: selected epoch {}\n", result.selected_epoch);
}

namespace {

std::vector<Features> features_for(Run& run, const std::vector<SentencePair>& pairs) {
  const auto [ef, fe] = load_aligners(run);
  const auto dict = load_dictionary(run);
  const auto heuristics = run.config().feature_heuristics();
  const auto aligned = align_corpus(ef, fe, pairs);
  return extract_all(pairs, aligned, dict, heuristics, run.config().threads());
}

}  // namespace

void stage_train_feat(Run& run) {
  const auto train = load_dataset(run, "train");
  const auto pairs = unlabeled(train);
  const auto features = features_for(run, pairs);
  std::vector<Label> labels;
  for (const auto& lp : train) labels.push_back(lp.label);
  const auto names = feature_names(run.config().feature_heuristics());
  const auto model = train_linear(features, labels, names, run.config().linear_options());
  save_linear_model_file(run.output(run.artifact("feat.model.json")), model);
  std::ostringstream dump;
  write_features(dump, names, pairs, features);
  write_text(run, run.artifact("train.features.tsv"), dump.str());
  fmt::print(run.log(), "train-feat: {} features, training accuracy {:.4f}\n", names.size(), model.training_accuracy);
}

fs::path stage_score(Run& run, const std::string& model, const std::string& input,
                     const std::optional<fs::path>& scores_file) {
  const auto pairs = input_pairs(run, input);
  std::vector<ScoredPair> scores;
  if (scores_file) {
    scores = ingest_scores_file(run.input(*scores_file), pairs);
    if (scores.size() != pairs.size()) {
      throw DataError(fmt::format("{} scores {} of {} pairs", scores_file->string(), scores.size(), pairs.size()));
    }
  } else if (model == "cosine") {
    const auto table = load_vectors(run);
    for (const auto& p : pairs) scores.push_back({p.id, cosine_score(p, table)});
  } else if (model == "feat") {
    const auto linear = load_linear_model_file(run.input(run.artifact("feat.model.json")));
    if (linear.feature_names != feature_names(run.config().feature_heuristics())) {
      throw UsageError("feat.model.json was trained with a different feat.heuristics setting");
    }
    const auto features = features_for(run, pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i) scores.push_back({pairs[i].id, score_linear(linear, features[i])});
  } else if (model == "vdpwi") {
    const auto vdpwi = load_vdpwi_file(run.input(run.artifact("vdpwi.model")));
    const auto table = load_vectors(run);
    scores = score_pairs(vdpwi, pairs, table, run.config().threads());
  } else if (model == "random") {
    scores = random_scores(pairs, run.config().get_seed("select.seed"));
  } else {
    throw UsageError(fmt::format("unknown model '{}' (vdpwi|feat|cosine|random)", model));
  }
  const auto path = scores_path(run, model, input);
  write_scores_file(run.output(path), scores);
  fmt::print(run.log(), "score: {} {} pairs -> {}\n", model, scores.size(), path.string());
  return path;
}

ThresholdResult stage_tune(Run& run, const std::string& model) {
  const auto dev = load_dataset(run, "dev");
  const auto scores = read_scores(run, model, "dev", unlabeled(dev));
  const auto result = tune_threshold(scores, dev, run.config().overall_f());
  write_text(run, run.artifact(fmt::format("threshold.{}.txt", model)), fmt::format("{:.17g}\n", result.threshold));
  fmt::print(run.log(), "tune: {} threshold {:.6f}, dev overall F {:.4f}\n", model, result.threshold, result.overall_f);
  return result;
}

EvalReport stage_eval(Run& run, const std::string& model) {
  const auto test = load_dataset(run, "test");
  const auto scores = read_scores(run, model, "test", unlabeled(test));
  const double threshold = read_threshold(run, model);
  const auto report = evaluate_scores(scores, test, threshold, run.config().overall_f());
  const auto text = format_report_text(report, fmt::format("{} on test ({} pairs)", model, test.size()));
  write_text(run, run.artifact(fmt::format("report.{}.txt", model)), text);
  write_text(run, run.artifact(fmt::format("report.{}.tsv", model)), format_report_kv(report, threshold));
  run.log() << text;
  return report;
}

KappaResult stage_kappa(Run& run, const fs::path& annotations) {
  const auto matrix = read_annotations(run.input(annotations));
  const auto kappa = fleiss_kappa(matrix);
  std::string text = fmt::format("items\t{}\nraters_per_item\t{}\nfleiss_kappa\t{:.6f}\ndegenerate\t{}\n",
                                 matrix.counts.size(), matrix.raters_per_item, kappa.kappa, kappa.degenerate ? 1 : 0);
  if (matrix.raters_per_item % 2 == 1) {
    std::map<std::pair<std::string, int>, std::size_t> groups;
    for (const auto& m : majority_vote(matrix)) ++groups[{std::string(label_name(m.label)), m.agreement}];
    for (const auto& [key, count] : groups) text += fmt::format("majority_{}_{}\t{}\n", key.first, key.second, count);
  }
  write_text(run, run.artifact("kappa.tsv"), text);
  run.log() << text;
  return kappa;
}

std::vector<SentencePair> stage_select(Run& run, const std::string& model, const std::optional<fs::path>& scores_file) {
  const auto pairs = load_corpus(run);
  const auto path = scores_path(run, model, "corpus");
  if (scores_file || !fs::exists(path)) stage_score(run, model, "corpus", scores_file);
  const auto scores = read_scores(run, model, "corpus", pairs);
  const auto kept = select_top(pairs, scores, run.config().get_double("select.keep_fraction"));
  write_selection(run.output(run.artifact("selected.e")), run.output(run.artifact("selected.f")),
                  run.output(run.artifact("selected.ids")), kept);
  fmt::print(run.log(), "select: kept {} of {} pairs by {}\n", kept.size(), pairs.size(), model);
  return kept;
}

std::vector<ScorerResult> stage_pipeline(Run& run) {
  stage_align(run);
  stage_dict(run);
  stage_datagen(run);
  stage_train_embed(run);
  stage_train_feat(run);
  stage_train_vdpwi(run);
  std::vector<ScorerResult> results;
  std::string summary = "model\tthreshold\tdev_overall_f\ttest_overall_f\n";
  for (const char* model : kModels) {
    stage_score(run, model, "dev");
    stage_score(run, model, "test");
    ScorerResult r;
    r.model = model;
    const auto tuned = stage_tune(run, model);
    r.threshold = tuned.threshold;
    r.dev_overall_f = tuned.overall_f;
    r.test = stage_eval(run, model);
    summary += fmt::format("{}\t{:.6f}\t{:.6f}\t{:.6f}\n", model, r.threshold, r.dev_overall_f, r.test.overall_f);
    results.push_back(std::move(r));
  }
  write_text(run, run.artifact("summary.tsv"), summary);
  const auto& model = run.config().get("select.model");
  stage_score(run, model, "corpus");
  stage_select(run, model);
  return results;
}

}  // namespace divergescope::cli
