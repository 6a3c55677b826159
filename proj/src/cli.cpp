/*
 * Copyright 2026 The twec-metaphor Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "twec/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>

#include "twec/corpus.hpp"
#include "twec/error.hpp"
#include "twec/keyvalue.hpp"
#include "twec/measures.hpp"
#include "twec/metaphors.hpp"
#include "twec/model_io.hpp"
#include "twec/stats.hpp"
#include "twec/synthcorpus.hpp"
#include "twec/training.hpp"

namespace twec {

namespace fs = std::filesystem;

namespace {

struct Settings {
  std::string config;
  std::vector<std::string> slices;  // NAME=PATH
  std::size_t min_count = 5;
  bool lowercase = true;
  std::string punctuation = "separator";

  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr = 0.025;
  double min_lr = 1e-4;
  double subsample = 1e-3;
  std::uint64_t seed = 1;
  bool deterministic = false;
  std::size_t threads = 1;

  std::string vocab;
  std::string compass;
  std::vector<std::string> models;
  std::string model;
  std::string metaphors;
  std::string measures;
  std::string coherence;
  std::string out;
  std::size_t snd_n = 500;
  bool cross_genre = false;
  std::size_t runs = 1;

  std::string correction = "holm";
  double alpha = 0.05;
  std::size_t bins = 20;

  std::vector<std::string> conllu;
  std::string keywords;
  bool allow_article = false;
  bool dedup = false;
  std::string template_out;

  std::string spec;
  std::string word;
  std::size_t k = 10;
};

// Config values that name files; relative ones resolve against the config file's directory.
const std::set<std::string> kPathKeys = {"slice",    "vocab",    "compass",   "model",  "models", "metaphors",
                                         "measures", "coherence", "out",      "conllu", "keywords", "template",
                                         "spec"};

void add_corpus_options(CLI::App* sub, Settings& s) {
  sub->add_option("--slice", s.slices, "Slice corpus as NAME=PATH, NAME = EPOCH_GENRE; one document per line (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sub->add_option("--min-count", s.min_count, "Drop words with fewer total occurrences");
  sub->add_option("--lowercase", s.lowercase, "Lowercase tokens (true/false)");
  sub->add_option("--punctuation", s.punctuation, "Punctuation handling: separator or strip")
      ->check(CLI::IsMember({"separator", "strip"}));
}

void add_training_options(CLI::App* sub, Settings& s, bool with_dim) {
  if (with_dim) sub->add_option("--dim", s.dim, "Embedding dimension");
  sub->add_option("--window", s.window, "Context window (words on each side)");
  sub->add_option("--negatives", s.negatives, "Negative samples per target");
  sub->add_option("--epochs", s.epochs, "Training epochs");
  sub->add_option("--lr", s.lr, "Initial learning rate");
  sub->add_option("--min-lr", s.min_lr, "Learning-rate floor reached at the end of training");
  sub->add_option("--subsample", s.subsample, "Frequent-word subsampling threshold t (0 disables)");
  sub->add_option("--seed", s.seed, "Seed for every random choice");
  sub->add_flag("--deterministic", s.deterministic, "Single worker, bit-reproducible training");
  sub->add_option("--threads", s.threads, "Worker threads (ignored with --deterministic)");
}

void add_config_option(CLI::App* sub, Settings& s) {
  sub->add_option("--config", s.config,
                  "key = value file; keys are long flag names, flags on the command line take precedence");
}

void add_measure_options(CLI::App* sub, Settings& s) {
  sub->add_option("--snd-n", s.snd_n, "Neighbourhood size for semantic neighbourhood density");
  sub->add_flag("--cross-genre", s.cross_genre, "Also write vector coherence across genres within each epoch");
}

void add_stats_options(CLI::App* sub, Settings& s) {
  sub->add_option("--correction", s.correction, "Multiple-comparison correction: holm or bonferroni")
      ->check(CLI::IsMember({"holm", "bonferroni"}));
  sub->add_option("--alpha", s.alpha, "Significance level after correction");
  sub->add_option("--bins", s.bins, "Histogram bins per variable");
}

std::unique_ptr<CLI::App> make_app(Settings& s) {
  auto app = std::make_unique<CLI::App>("Temporal word embeddings with a compass, and metaphor measures", "twec");
  app->option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->require_subcommand(1);
  app->set_version_flag("--version", kVersion, "Print the version and exit");

  auto* bv = app->add_subcommand("build-vocab", "Count words over all slices and write the shared vocabulary");
  add_config_option(bv, s);
  add_corpus_options(bv, s);
  bv->add_option("--out", s.out, "Output directory")->required();

  auto* tc = app->add_subcommand("train-compass", "Train the atemporal compass on all slices together");
  add_config_option(tc, s);
  add_corpus_options(tc, s);
  tc->add_option("--vocab", s.vocab, "Reuse a build-vocab directory instead of counting again");
  add_training_options(tc, s, true);
  tc->add_option("--out", s.out, "Output compass directory")->required();

  auto* ts = app->add_subcommand("train-slice", "Train slice embeddings against a frozen compass");
  add_config_option(ts, s);
  ts->add_option("--compass", s.compass, "Compass directory")->required();
  ts->add_option("--slice", s.slices, "Slice corpus as NAME=PATH (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  add_training_options(ts, s, false);
  ts->add_option("--out", s.out, "Output directory; each slice goes to OUT/NAME")->required();

  auto* me = app->add_subcommand("measure", "Compute CS, SND, VC and frequency for every metaphor in every slice");
  add_config_option(me, s);
  me->add_option("--compass", s.compass, "Compass directory the slice models were trained against")->required();
  me->add_option("--model", s.models, "Slice model directory (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->required();
  me->add_option("--metaphors", s.metaphors, "Metaphor CSV")->required();
  add_measure_options(me, s);
  me->add_option("--threads", s.threads, "Slices measured in parallel");
  me->add_option("--out", s.out, "Output directory")->required();

  auto* ex = app->add_subcommand("extract", "Find NOUN di NOUN candidates in CoNLL-U files");
  add_config_option(ex, s);
  ex->add_option("--conllu", s.conllu, "CoNLL-U file or directory of *.conllu files (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->required();
  ex->add_option("--keywords", s.keywords, "Keyword lemmas, one per line; empty keeps every candidate");
  ex->add_flag("--allow-article", s.allow_article, "Accept the di + article variant (del, della, di il ...)");
  ex->add_flag("--dedup", s.dedup, "Keep the first candidate per surface form");
  ex->add_option("--out", s.out, "Candidate CSV")->required();
  ex->add_option("--template", s.template_out, "Also write a metaphor CSV template for annotation");

  auto* nb = app->add_subcommand("neighbors", "Print the nearest neighbours of a word in one slice");
  nb->add_option("word", s.word, "Query word")->required();
  nb->add_option("--model", s.model, "Slice model directory")->required();
  nb->add_option("-k", s.k, "Number of neighbours");

  auto* st = app->add_subcommand("stats", "Descriptives, correlations, histograms and the analysis table");
  add_config_option(st, s);
  st->add_option("--measures", s.measures, "measures.csv from measure")->required();
  st->add_option("--coherence", s.coherence, "coherence.csv from measure")->required();
  st->add_option("--metaphors", s.metaphors, "Metaphor CSV used for the VC join")->required();
  add_stats_options(st, s);
  st->add_option("--out", s.out, "Output directory")->required();

  auto* sy = app->add_subcommand("synth", "Generate a synthetic corpus with planted structure");
  add_config_option(sy, s);
  sy->add_option("--spec", s.spec, "Plant specification")->required();
  sy->add_option("--seed", s.seed, "Override the seed in the spec");
  sy->add_option("--out", s.out, "Output directory")->required();

  auto* pl = app->add_subcommand("pipeline", "build-vocab, train-compass, train-slice, measure and stats in one go");
  add_config_option(pl, s);
  add_corpus_options(pl, s);
  add_training_options(pl, s, true);
  pl->add_option("--metaphors", s.metaphors, "Metaphor CSV")->required();
  add_measure_options(pl, s);
  pl->add_option("--runs", s.runs, "Independent replications; measures are averaged over runs");
  add_stats_options(pl, s);
  pl->add_option("--out", s.out, "Output directory")->required();

  return app;
}

// ---------------------------------------------------------------------------
// Config expansion

std::string normalise_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

bool user_gave(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

std::string resolve_path(const std::string& value, const fs::path& base) {
  const fs::path p(value);
  if (p.is_absolute()) return value;
  return (base / p).lexically_normal().string();
}

// Inserts config entries as flags ahead of the user's own, so later flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  if (args.empty() || args[0].empty() || args[0][0] == '-') return args;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[0]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (config.empty()) return args;

  const auto kv = KeyValues::load(config);
  const fs::path base = fs::absolute(fs::path(config)).parent_path();
  std::vector<std::string> injected;
  for (const auto& [raw_key, value] : kv.entries()) {
    const std::string key = normalise_key(raw_key);
    const std::string flag = "--" + key;
    CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw(flag);
    if (!opt) throw ValidationError(config + ": unknown key '" + raw_key + "' for " + args[0]);
    if (user_gave(args, flag)) continue;
    if (opt->get_expected_max() == 0) {
      if (parse_bool(value, raw_key)) injected.push_back(flag);
      continue;
    }
    std::string v = value;
    if (key == "slice") {
      const auto eq = v.find('=');
      if (eq != std::string::npos) v = v.substr(0, eq + 1) + resolve_path(v.substr(eq + 1), base);
    } else if (kPathKeys.count(key)) {
      v = resolve_path(v, base);
    }
    injected.push_back(flag);
    injected.push_back(v);
  }
  std::vector<std::string> out{args[0]};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

// ---------------------------------------------------------------------------
// Manifests

std::uint64_t file_checksum(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  Fnv1a h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.digest();
}

class Manifest {
 public:
  Manifest(const std::string& subcommand, const CLI::App& sub, const Settings& s)
      : start_(std::chrono::steady_clock::now()), deterministic_(s.deterministic) {
    kv_.add("tool", "twec");
    kv_.add("version", kVersion);
    kv_.add("subcommand", subcommand);
    kv_.add("seed", std::to_string(s.seed));
    for (const CLI::Option* opt : sub.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config" || name == "out") continue;
      std::string value;
      if (opt->count() > 0) {
        const auto results = opt->results();
        for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
        if (opt->get_expected_max() == 0) value = "true";
      } else {
        value = opt->get_default_str();
        if (opt->get_expected_max() == 0 && value.empty()) value = "false";
      }
      kv_.add("config." + name, value);
    }
  }

  void input(const fs::path& p) { inputs_.emplace_back(p.string(), file_checksum(p)); }
  void input_dir(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != "manifest.txt") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) input(f);
  }
  void fingerprint(std::uint64_t fp) { fingerprint_ = fp; }
  void seed(std::uint64_t seed) { kv_.set("seed", std::to_string(seed)); }

  void write(const fs::path& dir) const {
    fs::create_directories(dir);
    write_file(dir / "manifest.txt");
  }

  void write_file(const fs::path& file) const {
    KeyValues kv = kv_;
    for (const auto& [path, sum] : inputs_) kv.add("input." + path, hex64(sum));
    if (fingerprint_) kv.add("compass_fingerprint", hex64(*fingerprint_));
    // wall time would make deterministic output trees differ between runs
    if (!deterministic_) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      kv.add("wall_time_s", format_double(secs));
    }
    kv.save(file);
  }

 private:
  KeyValues kv_;
  std::vector<std::pair<std::string, std::uint64_t>> inputs_;
  std::optional<std::uint64_t> fingerprint_;
  std::chrono::steady_clock::time_point start_;
  bool deterministic_;
};

// ---------------------------------------------------------------------------
// Shared steps

TokenizerConfig tokenizer(const Settings& s) {
  TokenizerConfig cfg;
  cfg.lowercase = s.lowercase;
  cfg.punctuation = s.punctuation == "strip" ? PunctuationMode::Strip : PunctuationMode::Separator;
  return cfg;
}

std::pair<SliceId, fs::path> parse_slice_arg(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
    throw ValidationError("--slice expects NAME=PATH, got '" + arg + "'");
  return {SliceId::parse(arg.substr(0, eq)), fs::path(arg.substr(eq + 1))};
}

std::vector<CorpusSlice> load_slices(const Settings& s, const TokenizerConfig& cfg, Manifest* manifest) {
  if (s.slices.empty()) throw ValidationError("no --slice given");
  std::vector<CorpusSlice> out;
  std::set<SliceId> seen;
  for (const auto& arg : s.slices) {
    auto [id, path] = parse_slice_arg(arg);
    if (!seen.insert(id).second) throw ValidationError("slice " + id.name() + " given twice");
    out.push_back(load_slice(path, id, cfg));
    if (manifest) manifest->input(path);
  }
  return out;
}

Hyperparams hyperparams(const Settings& s) {
  Hyperparams hp;
  hp.dim = s.dim;
  hp.window = s.window;
  hp.negatives = s.negatives;
  hp.epochs = s.epochs;
  hp.initial_lr = s.lr;
  hp.min_lr = s.min_lr;
  hp.subsample_t = s.subsample;
  hp.seed = s.seed;
  hp.deterministic = s.deterministic;
  hp.threads = s.deterministic ? 1 : s.threads;
  hp.validate();
  return hp;
}

void save_vocab_dir(const fs::path& dir, const Vocabulary& vocab, const TokenizerConfig& cfg) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "vocab.tsv", std::ios::binary);
    if (!out) throw ValidationError("cannot write " + (dir / "vocab.tsv").string());
    write_vocab_dump(out, vocab);
  }
  KeyValues meta;
  meta.add("kind", "vocab");
  meta.add("vocab_size", std::to_string(vocab.size()));
  meta.add("min_count", std::to_string(vocab.min_count()));
  for (std::size_t i = 0; i < vocab.slices().size(); ++i)
    meta.add("slice_tokens." + vocab.slices()[i].name(), std::to_string(vocab.slice_total(i)));
  tokenizer_to_kv(cfg, meta);
  meta.save(dir / "vocab.meta");
}

Vocabulary load_vocab_dir(const fs::path& dir) {
  const auto meta = KeyValues::load(dir / "vocab.meta");
  if (meta.require("kind") != "vocab") throw ValidationError(dir.string() + " is not a vocabulary directory");
  std::ifstream in(dir / "vocab.tsv", std::ios::binary);
  if (!in) throw ValidationError("cannot open " + (dir / "vocab.tsv").string());
  std::string header;
  std::getline(in, header);
  std::vector<std::uint64_t> totals;
  std::istringstream hs(header);
  std::string col;
  for (std::size_t i = 0; std::getline(hs, col, '\t'); ++i)
    if (i >= 2) totals.push_back(meta.require_u64("slice_tokens." + col));
  in.clear();
  in.seekg(0);
  return read_vocab_dump(in, totals, meta.require_u64("min_count"), (dir / "vocab.tsv").string());
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "twec: warning: " << w << '\n';
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  return in;
}

void write_measure_tables(const fs::path& dir, const MeasureTables& tables, bool cross_genre) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "measures.csv");
    write_measures(out, tables.measures);
  }
  {
    auto out = open_out(dir / "coherence.csv");
    write_coherence(out, tables.coherence);
  }
  if (cross_genre) {
    auto out = open_out(dir / "cross_genre.csv");
    write_cross_genre(out, tables.cross_genre);
  }
  std::size_t truncated = 0;
  for (const auto& r : tables.measures) truncated += r.truncated_neighborhood;
  if (truncated)
    std::cerr << "twec: warning: " << truncated
              << " measure rows used a truncated neighbourhood (fewer trained words than --snd-n)\n";
}

void write_stats(const fs::path& dir, const std::vector<AnalysisRow>& rows, const Settings& s) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "analysis_table.csv");
    write_analysis_table(out, rows);
  }
  if (rows.empty()) throw DataError("no measure rows to summarise");
  {
    auto out = open_out(dir / "descriptives.csv");
    write_descriptives(out, descriptives(rows));
  }
  {
    auto out = open_out(dir / "correlations.csv");
    write_correlations(out, correlation_matrix(rows, kAnalysisVariables, parse_correction(s.correction), s.alpha));
  }
  auto out = open_out(dir / "histograms.csv");
  write_histograms(out, histograms(rows, s.bins));
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_build_vocab(const CLI::App& sub, const Settings& s) {
  Manifest manifest("build-vocab", sub, s);
  const auto cfg = tokenizer(s);
  const auto slices = load_slices(s, cfg, &manifest);
  const auto vocab = build_vocab(slices, s.min_count);
  save_vocab_dir(s.out, vocab, cfg);
  manifest.write(s.out);
  return 0;
}

int cmd_train_compass(const CLI::App& sub, const Settings& s) {
  Manifest manifest("train-compass", sub, s);
  const auto cfg = tokenizer(s);
  const auto hp = hyperparams(s);
  const auto slices = load_slices(s, cfg, &manifest);
  std::shared_ptr<const Vocabulary> vocab;
  if (!s.vocab.empty()) {
    vocab = std::make_shared<const Vocabulary>(load_vocab_dir(s.vocab));
    manifest.input(fs::path(s.vocab) / "vocab.tsv");
  } else {
    vocab = std::make_shared<const Vocabulary>(build_vocab(slices, s.min_count));
  }
  const auto compass = train_compass(slices, vocab, hp);
  save_compass(s.out, compass, cfg);
  manifest.fingerprint(compass.fingerprint());
  manifest.write(s.out);
  return 0;
}

int cmd_train_slice(const CLI::App& sub, const Settings& s) {
  Manifest manifest("train-slice", sub, s);
  const auto loaded = load_compass(s.compass);
  manifest.input(fs::path(s.compass) / "compass.meta");
  manifest.fingerprint(loaded.model.fingerprint());

  // Stored compass hyperparameters, except where a flag was given.
  Hyperparams hp = loaded.model.hyperparams;
  auto given = [&](const char* flag) { return sub.get_option(flag)->count() > 0; };
  if (given("--window")) hp.window = s.window;
  if (given("--negatives")) hp.negatives = s.negatives;
  if (given("--epochs")) hp.epochs = s.epochs;
  if (given("--lr")) hp.initial_lr = s.lr;
  if (given("--min-lr")) hp.min_lr = s.min_lr;
  if (given("--subsample")) hp.subsample_t = s.subsample;
  if (given("--seed")) hp.seed = s.seed;
  if (given("--deterministic")) hp.deterministic = true;
  if (given("--threads")) hp.threads = s.threads;
  if (hp.deterministic) hp.threads = 1;
  hp.validate();
  manifest.seed(hp.seed);

  const auto slices = load_slices(s, loaded.tokenizer, &manifest);
  for (const auto& slice : slices) {
    const auto model = train_slice(slice, loaded.model, hp);
    const fs::path dir = fs::path(s.out) / slice.id.name();
    save_slice_model(dir, model);
    manifest.write(dir);
  }
  manifest.write(s.out);
  return 0;
}

int cmd_measure(const CLI::App& sub, const Settings& s) {
  Manifest manifest("measure", sub, s);
  const auto loaded = load_compass(s.compass);
  manifest.input(fs::path(s.compass) / "compass.meta");
  const auto set = load_metaphors(s.metaphors);
  print_warnings(set.warnings);
  manifest.input(s.metaphors);

  std::vector<SliceEmbeddings> models;
  for (const auto& dir : s.models) {
    models.push_back(load_slice_model(dir, loaded.model.vocab));
    manifest.input(fs::path(dir) / "slice.meta");
  }
  // Models that disagree among themselves are reported before the compass check.
  for (const auto& m : models)
    if (m.compass_fingerprint != models.front().compass_fingerprint)
      throw AlignmentError("slice models " + models.front().slice.name() + " and " + m.slice.name() +
                           " have different compass fingerprints (" + hex64(models.front().compass_fingerprint) +
                           " and " + hex64(m.compass_fingerprint) + ")");
  const auto fp = loaded.model.fingerprint();
  if (models.front().compass_fingerprint != fp)
    throw AlignmentError("slice models were trained against compass " + hex64(models.front().compass_fingerprint) +
                         " but --compass has fingerprint " + hex64(fp));
  manifest.fingerprint(fp);

  MeasureOptions opt;
  opt.snd_n = s.snd_n;
  opt.threads = s.threads;
  opt.cross_genre = s.cross_genre;
  const auto tables = measure_all(set.metaphors, models, *loaded.model.vocab, opt);
  write_measure_tables(s.out, tables, s.cross_genre);
  manifest.write(s.out);
  return 0;
}

std::vector<fs::path> conllu_files(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const auto& a : args) {
    const fs::path p(a);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".conllu") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw ValidationError("no such CoNLL-U file or directory: " + a);
    }
  }
  return out;
}

int cmd_extract(const CLI::App& sub, const Settings& s) {
  Manifest manifest("extract", sub, s);
  KeywordLexicon keywords;
  if (!s.keywords.empty()) {
    keywords = load_keywords(s.keywords);
    manifest.input(s.keywords);
  }
  std::vector<CandidateExtraction> all;
  for (const auto& file : conllu_files(s.conllu)) {
    auto found = extract_candidates(file, keywords, s.allow_article);
    all.insert(all.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
    manifest.input(file);
  }
  if (s.dedup) all = deduplicate(std::move(all));
  {
    auto out = open_out(s.out);
    write_candidates(out, all);
  }
  if (!s.template_out.empty()) {
    auto out = open_out(s.template_out);
    write_annotation_template(out, all);
  }
  // a file output gets its manifest next to it
  manifest.write_file(s.out + ".manifest.txt");
  return 0;
}

int cmd_neighbors(const Settings& s) {
  if (s.k < 1) throw ValidationError("-k must be >= 1");
  const auto model = load_slice_model(s.model);
  const auto list = nearest_neighbors(s.word, model, s.k);
  char buf[64];
  for (const auto& n : list.neighbors) {
    std::snprintf(buf, sizeof buf, "%.6f", n.cosine);
    std::cout << model.vocab->word(n.word) << '\t' << buf << '\n';
  }
  if (list.truncated)
    std::cerr << "twec: warning: only " << list.neighbors.size() << " trained words besides the query\n";
  return 0;
}

int cmd_stats(const CLI::App& sub, const Settings& s) {
  Manifest manifest("stats", sub, s);
  auto min = open_in(s.measures);
  const auto measures = read_measures(min, s.measures);
  auto cin = open_in(s.coherence);
  const auto coherence = read_coherence(cin, s.coherence);
  const auto set = load_metaphors(s.metaphors);
  print_warnings(set.warnings);
  for (const auto* p : {&s.measures, &s.coherence, &s.metaphors}) manifest.input(*p);
  write_stats(s.out, build_analysis_table(measures, coherence, set.metaphors), s);
  manifest.write(s.out);
  return 0;
}

int cmd_synth(const CLI::App& sub, const Settings& s) {
  Manifest manifest("synth", sub, s);
  auto spec = PlantSpec::load(s.spec);
  manifest.input(s.spec);
  if (sub.get_option("--seed")->count() > 0) spec.seed = s.seed;
  manifest.seed(spec.seed);
  const auto corpus = generate(spec);
  write_synth_corpus(s.out, spec, corpus);
  manifest.write(s.out);
  return 0;
}

int cmd_pipeline(const CLI::App& sub, const Settings& s) {
  if (s.runs < 1) throw ValidationError("--runs must be >= 1");
  const fs::path out(s.out);
  Manifest manifest("pipeline", sub, s);
  const auto cfg = tokenizer(s);
  const Hyperparams base = hyperparams(s);
  const auto slices = load_slices(s, cfg, &manifest);
  const auto set = load_metaphors(s.metaphors);
  print_warnings(set.warnings);
  manifest.input(s.metaphors);

  const auto vocab = std::make_shared<const Vocabulary>(build_vocab(slices, s.min_count));
  save_vocab_dir(out / "vocab", *vocab, cfg);
  manifest.write(out / "vocab");

  MeasureOptions opt;
  opt.snd_n = s.snd_n;
  opt.threads = s.deterministic ? 1 : s.threads;
  opt.cross_genre = s.cross_genre;

  std::vector<MeasureTables> runs;
  for (std::size_t r = 1; r <= s.runs; ++r) {
    Hyperparams hp = base;
    hp.seed = base.seed + (r - 1);  // run r uses seed + r - 1
    const fs::path dir = s.runs == 1 ? out : out / ("run" + std::to_string(r));
    const auto compass = train_compass(slices, vocab, hp);
    save_compass(dir / "compass", compass, cfg);
    manifest.fingerprint(compass.fingerprint());
    manifest.write(dir / "compass");
    std::vector<SliceEmbeddings> models;
    for (const auto& slice : slices) {
      models.push_back(train_slice(slice, compass, hp));
      const fs::path sdir = dir / "slices" / slice.id.name();
      save_slice_model(sdir, models.back());
      manifest.write(sdir);
    }
    runs.push_back(measure_all(set.metaphors, models, *vocab, opt));
    write_measure_tables(dir / "measures", runs.back(), s.cross_genre);
    manifest.write(dir / "measures");
    if (s.runs > 1) manifest.write(dir);
  }
  const MeasureTables tables = s.runs == 1 ? runs.front() : average_runs(runs);
  if (s.runs > 1) {
    write_measure_tables(out / "measures", tables, s.cross_genre);
    manifest.write(out / "measures");
  }
  // Stats read the written tables back, so the result equals running `stats` on them.
  auto min = open_in(out / "measures" / "measures.csv");
  const auto measures = read_measures(min, (out / "measures" / "measures.csv").string());
  auto cin = open_in(out / "measures" / "coherence.csv");
  const auto coherence = read_coherence(cin, (out / "measures" / "coherence.csv").string());
  write_stats(out / "stats", build_analysis_table(measures, coherence, set.metaphors), s);
  manifest.write(out / "stats");
  manifest.write(out);
  return 0;
}

int dispatch(CLI::App& app, const Settings& s) {
  for (const CLI::App* sub : app.get_subcommands()) {
    const std::string name = sub->get_name();
    if (name == "build-vocab") return cmd_build_vocab(*sub, s);
    if (name == "train-compass") return cmd_train_compass(*sub, s);
    if (name == "train-slice") return cmd_train_slice(*sub, s);
    if (name == "measure") return cmd_measure(*sub, s);
    if (name == "extract") return cmd_extract(*sub, s);
    if (name == "neighbors") return cmd_neighbors(s);
    if (name == "stats") return cmd_stats(*sub, s);
    if (name == "synth") return cmd_synth(*sub, s);
    if (name == "pipeline") return cmd_pipeline(*sub, s);
  }
  throw ValidationError("no subcommand");
}

int fail(const char* kind, const std::string& what, int code) {
  std::cerr << "twec: error: " << kind << ": " << what << '\n';
  return code;
}

}  // namespace

std::unique_ptr<CLI::App> build_app() {
  auto settings = std::make_shared<Settings>();
  auto app = make_app(*settings);
  // keep the bound storage alive as long as the app
  app->callback([settings] {});
  return app;
}

int run(int argc, char** argv) {
  Settings settings;
  auto app = make_app(settings);
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(args, *app);
    std::reverse(args.begin(), args.end());
    try {
      app->parse(std::move(args));
    } catch (const CLI::ParseError& e) {
      const int code = app->exit(e);
      return code == 0 ? 0 : 1;
    }
    return dispatch(*app, settings);
  } catch (const VocabularyMiss& e) {
    return fail("vocabulary", e.what(), 2);
  } catch (const AlignmentError& e) {
    return fail("alignment", e.what(), 2);
  } catch (const DataError& e) {
    return fail("data", e.what(), 2);
  } catch (const UndefinedStatistic& e) {
    return fail("data", e.what(), 2);
  } catch (const ValidationError& e) {
    return fail("validation", e.what(), 1);
  } catch (const DivergenceError& e) {
    return fail("divergence", e.what(), 1);
  } catch (const fs::filesystem_error& e) {
    return fail("io", e.what(), 1);
  }
}

}  // namespace twec
