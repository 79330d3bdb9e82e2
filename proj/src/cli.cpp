#include "infodens/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "infodens/analytics.hpp"
#include "infodens/attention.hpp"
#include "infodens/corpus.hpp"
#include "infodens/density.hpp"
#include "infodens/error.hpp"
#include "infodens/lexical.hpp"
#include "infodens/log.hpp"
#include "infodens/probability.hpp"
#include "infodens/selection.hpp"

namespace infodens::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct GlobalOptions {
  std::string config_path;
  std::string log_base = "nats";
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool verbose = false;
  bool quiet = false;
};

struct IngestOptions {
  std::string input;
  std::string out;
  std::size_t min_freq = 1;
};

struct SynthOptions {
  SynthSpec spec;
  std::string out;
};

struct TrainOptions {
  std::string corpus;
  std::string out;
  AttentionConfig config;
};

struct EvaluateOptions {
  std::string corpus;
  std::string model;
  std::string split = "test";
};

struct SelectOptions {
  std::string corpus;
  std::string model;
  std::string mode = "quantile";
  double q = 0.875;
  double threshold = 0.0;
  std::size_t target_avg_len = 0;
  std::string out;
  std::string audit;
};

struct ProbabilityOptions {
  std::string source = "ngram";
  int order = 3;
  double k = 0.1;
};

struct UidOptions {
  std::string distance = "squared";
  std::string rate = "corpus_mean";
  std::string unit = "token";
};

struct DensityCommand {
  std::string corpus;
  std::string out;
  ProbabilityOptions probs;
  UidOptions uid;
  std::size_t kde_grid = 512;
};

struct LexicalCommand {
  std::string corpus;
  std::string out;
};

struct CompareCommand {
  std::string original;
  std::vector<std::string> variants;
  std::vector<std::string> sidecars;
  std::string out;
  std::string split = "all";
  ProbabilityOptions probs;
  UidOptions uid;
  std::size_t kde_grid = 512;
  bool histograms = false;
};

struct ScaleCommand {
  std::string corpus;
  std::string model;
  std::string selection;
  std::vector<double> factors = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::string target = "selected";
  std::string split = "test";
  std::string out;
};

std::string option_key(const CLI::Option* opt) {
  std::string name = opt->get_single_name();
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

std::vector<std::string> json_to_results(const nlohmann::json& v) {
  std::vector<std::string> out;
  auto scalar = [](const nlohmann::json& x) -> std::string {
    if (x.is_string()) return x.get<std::string>();
    if (x.is_boolean()) return x.get<bool>() ? "true" : "false";
    return x.dump();
  };
  if (v.is_array()) {
    for (const auto& x : v) out.push_back(scalar(x));
  } else {
    out.push_back(scalar(v));
  }
  return out;
}

// Values from the config file fill every option the command line left unset.
void apply_config(CLI::App* app, const nlohmann::json& section) {
  if (!section.is_object()) return;
  for (CLI::Option* opt : app->get_options()) {
    if (opt->count() > 0 || opt->get_single_name() == "help" || opt->get_single_name() == "config") continue;
    const std::string key = option_key(opt);
    auto it = section.find(key);
    if (it == section.end()) it = section.find(opt->get_single_name());
    if (it == section.end()) continue;
    opt->add_result(json_to_results(*it));
    opt->run_callback();
  }
}

ojson resolved_options(const CLI::App* app) {
  ojson j = ojson::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help") continue;
    const auto& results = opt->results();
    if (results.empty()) {
      j[option_key(opt)] = opt->get_default_str();
    } else if (results.size() == 1) {
      j[option_key(opt)] = results.front();
    } else {
      j[option_key(opt)] = results;
    }
  }
  return j;
}

Split split_arg(const std::string& tag) { return parse_split(tag); }

std::optional<Split> optional_split(const std::string& tag) {
  if (tag == "all") return std::nullopt;
  return parse_split(tag);
}

std::pair<std::string, std::string> tag_value(const std::string& arg, const char* what) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
    throw UsageError(std::string(what) + " must look like tag=path, got '" + arg + "'");
  }
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::ordered_json metrics_json(const EvalMetrics& m) {
  ojson j;
  j["auc_macro"] = m.auc_macro;
  j["auc_micro"] = m.auc_micro;
  j["f1_macro"] = m.f1_macro;
  j["f1_micro"] = m.f1_micro;
  j["p_at_5"] = m.p_at_5;
  j["documents"] = m.documents;
  j["macro_auc_labels"] = m.macro_auc_labels;
  return j;
}

UidConfig uid_config(const UidOptions& o) {
  UidConfig c;
  c.distance = parse_uid_distance(o.distance);
  c.rate_source = parse_rate_source(o.rate);
  c.unit = parse_uid_unit(o.unit);
  return c;
}

void add_probability_flags(CLI::App* cmd, ProbabilityOptions& p) {
  cmd->add_option("--prob-source", p.source, "ngram or sidecar:<path>");
  cmd->add_option("--ngram-order", p.order, "n-gram order")->check(CLI::PositiveNumber);
  cmd->add_option("--ngram-k", p.k, "add-k smoothing constant")->check(CLI::NonNegativeNumber);
}

void add_uid_flags(CLI::App* cmd, UidOptions& u) {
  cmd->add_option("--uid-distance", u.distance, "squared or absolute");
  cmd->add_option("--uid-rate", u.rate, "corpus_mean or document_mean");
  cmd->add_option("--uid-unit", u.unit, "token or sentence");
}

// Builds the provider for a corpus. The n-gram is trained on train_corpus.
std::unique_ptr<ProbabilityProvider> make_provider(const ProbabilityOptions& p, const Corpus& train_corpus,
                                                   const Corpus& target) {
  if (p.source == "ngram") {
    auto model = std::make_shared<const NgramModel>(train_ngram(train_corpus, p.order, p.k));
    return std::make_unique<NgramProvider>(model);
  }
  if (p.source.rfind("sidecar:", 0) == 0) {
    const std::string path = p.source.substr(8);
    if (path.empty()) throw UsageError("--prob-source sidecar: needs a path");
    return std::make_unique<SidecarProvider>(load_external_probs(path, target), path);
  }
  throw UsageError("unknown probability source '" + p.source + "' (expected ngram or sidecar:<path>)");
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
}

int cmd_ingest(const IngestOptions& o, std::ostream& out) {
  require(o.input, "<corpus.jsonl>");
  require(o.out, "--out");
  CorpusOptions copts;
  copts.min_token_frequency = o.min_freq;
  Corpus corpus = load_corpus(o.input, copts);
  save_corpus(corpus, o.out);
  ojson j;
  j["documents"] = corpus.documents.size();
  j["labels"] = corpus.label_vocab.size();
  j["vocabulary"] = corpus.token_vocab.size();
  j["train_tokens"] = corpus.token_vocab.total();
  out << j.dump() << '\n';
  return 0;
}

int cmd_synth(const SynthOptions& o, const GlobalOptions& g, std::ostream& out) {
  require(o.out, "--out");
  Corpus corpus = synthesize_corpus(o.spec, g.seed);
  save_corpus(corpus, o.out);
  ojson j;
  j["documents"] = corpus.documents.size();
  j["labels"] = corpus.label_vocab.size();
  j["train"] = corpus.split(Split::Train).size();
  j["valid"] = corpus.split(Split::Valid).size();
  j["test"] = corpus.split(Split::Test).size();
  out << j.dump() << '\n';
  return 0;
}

int cmd_train(TrainOptions o, const GlobalOptions& g) {
  require(o.corpus, "--corpus");
  require(o.out, "--out");
  Corpus corpus = load_corpus(o.corpus);
  o.config.seed = g.seed;
  TrainReport report;
  AttentionModel model = train_attention(corpus, o.config, &report);
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    log::info("epoch " + std::to_string(e + 1) + " loss " + exact(report.epoch_loss[e]));
  }
  save_model(model, o.out);
  return 0;
}

int cmd_evaluate(const EvaluateOptions& o, const GlobalOptions& g, std::ostream& out) {
  require(o.corpus, "--corpus");
  require(o.model, "--model");
  Corpus corpus = load_corpus(o.corpus);
  AttentionModel model = load_model(o.model);
  EvalMetrics m = evaluate(model, corpus, split_arg(o.split), g.threads);
  ojson j = metrics_json(m);
  j["split"] = o.split;
  out << j.dump() << '\n';
  return 0;
}

int cmd_select(const SelectOptions& o, const GlobalOptions& g, std::ostream& out) {
  require(o.corpus, "--corpus");
  require(o.model, "--model");
  require(o.out, "--out");
  Corpus corpus = load_corpus(o.corpus);
  AttentionModel model = load_model(o.model);
  SelectionCriteria criteria;
  if (o.mode == "quantile") {
    criteria = SelectionCriteria::quantile(o.q);
  } else if (o.mode == "fixed") {
    criteria = SelectionCriteria::fixed(o.threshold);
  } else {
    throw UsageError("--mode must be quantile or fixed");
  }
  ReduceOptions ropts;
  ropts.threads = g.threads;
  if (o.target_avg_len > 0) ropts.target_avg_length = o.target_avg_len;
  Reduction r = reduce_corpus(corpus, model, criteria, ropts);
  const std::string audit = o.audit.empty() ? o.out + ".audit.jsonl" : o.audit;
  save_corpus(r.corpus, o.out);
  write_audit(r.audit, audit);

  double before = 0.0;
  double after = 0.0;
  std::size_t negations = 0;
  for (const auto& d : corpus.documents) before += static_cast<double>(d.tokens.size());
  for (const auto& d : r.corpus.documents) after += static_cast<double>(d.tokens.size());
  for (const auto& a : r.audit) negations += a.dropped_negations.size();
  const double n = std::max<double>(1.0, static_cast<double>(corpus.documents.size()));
  ojson j;
  j["documents"] = corpus.documents.size();
  j["mean_length_original"] = before / n;
  j["mean_length_reduced"] = after / n;
  j["mode"] = r.calibrated_threshold ? "fixed" : o.mode;
  if (r.calibrated_threshold) j["calibrated_threshold"] = *r.calibrated_threshold;
  j["dropped_negations"] = negations;
  j["audit"] = audit;
  out << j.dump() << '\n';
  return 0;
}

int cmd_density(const DensityCommand& o, const GlobalOptions& g, const ojson& config) {
  require(o.corpus, "--corpus");
  require(o.out, "--out");
  Corpus corpus = load_corpus(o.corpus);
  auto provider = make_provider(o.probs, corpus, corpus);
  DensityOptions dopts;
  dopts.uid = uid_config(o.uid);
  dopts.log_base = parse_log_base(g.log_base);
  dopts.threads = g.threads;
  DensityRun run = corpus_density(corpus, *provider, dopts);

  static constexpr const char* kNames[] = {"mean_surprisal", "entropy_frequency", "entropy_contextual",
                                           "uid_deviation"};
  std::array<std::vector<double>, 4> samples;
  std::string csv = "doc_id,variant,metric,value\n";
  for (const auto& p : run.profiles) {
    const double values[] = {p.mean_surprisal, p.entropy_frequency, p.entropy_contextual, p.uid_deviation};
    for (std::size_t m = 0; m < 4; ++m) {
      csv += p.doc_id + ",original," + kNames[m] + "," + exact(values[m]) + "\n";
      samples[m].push_back(values[m]);
    }
  }
  StagedWriter writer(o.out);
  writer.add("metrics.csv", csv);
  ojson summary;
  summary["schema_version"] = 1;
  summary["toolkit_version"] = INFODENS_VERSION;
  summary["seed"] = g.seed;
  summary["probability_source"] = provider->name();
  summary["settings"] = {{"log_base", std::string(to_string(dopts.log_base))},
                         {"uid_distance", std::string(to_string(run.uid.distance))},
                         {"uid_rate_source", std::string(to_string(run.uid.rate_source))},
                         {"uid_unit", std::string(to_string(run.uid.unit))},
                         {"entropy_estimators", {"frequency (type-summed)", "contextual (position-summed, / n)"}}};
  summary["config"] = config;
  summary["mu_c"] = run.uid.mu_c;
  ojson means = ojson::object();
  for (std::size_t m = 0; m < 4; ++m) {
    double sum = 0.0;
    for (double x : samples[m]) sum += x;
    means[kNames[m]] = samples[m].empty() ? ojson(nullptr) : ojson(sum / static_cast<double>(samples[m].size()));
    if (!samples[m].empty()) {
      KdeCurve c = kde(samples[m], std::nullopt, o.kde_grid);
      writer.add(std::string(kNames[m]) + ".svg",
                 svg_line_chart(std::string("Kernel density: ") + kNames[m], kNames[m], "density",
                                {SvgSeries{"original", c.xs, c.ys, {}}}));
    }
  }
  summary["means"] = std::move(means);
  summary["documents"] = run.profiles.size();
  ojson failures = ojson::array();
  for (const auto& f : run.failures) failures.push_back({{"doc_id", f.doc_id}, {"kind", f.kind}, {"message", f.message}});
  summary["failures"] = std::move(failures);
  writer.add("summary.json", summary.dump(2) + "\n");
  writer.commit();
  for (const auto& f : run.failures) log::warn("density failed for '" + f.doc_id + "': " + f.message);
  return 0;
}

int cmd_lexical(const LexicalCommand& o, const GlobalOptions& g, const ojson& config) {
  require(o.corpus, "--corpus");
  require(o.out, "--out");
  Corpus corpus = load_corpus(o.corpus);
  std::vector<LexicalProfile> profiles;
  for (const auto& d : corpus.documents) profiles.push_back(lexical_profile(d));

  std::string csv = "doc_id,variant,metric,value\n";
  std::vector<double> flesch, herdan;
  for (const auto& p : profiles) {
    csv += p.doc_id + ",original,word_count," + std::to_string(p.word_count) + "\n";
    csv += p.doc_id + ",original,sentence_count," + std::to_string(p.sentence_count) + "\n";
    csv += p.doc_id + ",original,syllable_count," + std::to_string(p.syllable_count) + "\n";
    csv += p.doc_id + ",original,type_count," + std::to_string(p.type_count) + "\n";
    csv += p.doc_id + ",original,flesch," + exact(p.flesch) + "\n";
    csv += p.doc_id + ",original,herdan_c," + exact(p.herdan_c) + "\n";
    flesch.push_back(p.flesch);
    herdan.push_back(p.herdan_c);
  }
  auto sorted_plot = [](std::vector<double> values, const std::string& name) {
    std::sort(values.begin(), values.end());
    SvgSeries s{"original", {}, values, {}};
    for (std::size_t i = 0; i < values.size(); ++i) s.xs.push_back(static_cast<double>(i));
    return svg_line_chart("Per-document " + name + " (sorted)", "document rank", name, {s});
  };
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
  };
  double words = 0.0;
  for (const auto& p : profiles) words += static_cast<double>(p.word_count);

  StagedWriter writer(o.out);
  writer.add("metrics.csv", csv);
  ojson summary;
  summary["schema_version"] = 1;
  summary["toolkit_version"] = INFODENS_VERSION;
  summary["seed"] = g.seed;
  summary["settings"] = {{"syllables", "vowel groups (aeiouy), silent final e, floor 1"},
                         {"tokens", "normalized (lowercase) words"},
                         {"length_unit", "words"}};
  summary["config"] = config;
  summary["documents"] = profiles.size();
  summary["means"] = {{"flesch", profiles.empty() ? ojson(nullptr) : ojson(mean(flesch))},
                      {"herdan_c", profiles.empty() ? ojson(nullptr) : ojson(mean(herdan))},
                      {"words", profiles.empty() ? ojson(nullptr) : ojson(words / static_cast<double>(profiles.size()))}};
  writer.add("summary.json", summary.dump(2) + "\n");
  if (!profiles.empty()) {
    writer.add("flesch_sorted.svg", sorted_plot(flesch, "flesch"));
    writer.add("herdan_c_sorted.svg", sorted_plot(herdan, "herdan_c"));
  }
  writer.commit();
  return 0;
}

int cmd_compare(const CompareCommand& o, const GlobalOptions& g, const ojson& config) {
  require(o.original, "--original");
  require(o.out, "--out");
  if (o.variants.empty()) throw UsageError("compare needs at least one --variant tag=path");

  std::vector<std::pair<std::string, Corpus>> corpora;
  corpora.emplace_back("original", load_corpus(o.original));
  for (const auto& v : o.variants) {
    auto [tag, path] = tag_value(v, "--variant");
    corpora.emplace_back(tag, load_corpus(path));
  }

  std::map<std::string, std::string> sidecars;
  for (const auto& s : o.sidecars) {
    auto [tag, path] = tag_value(s, "--sidecar");
    sidecars[tag] = path;
  }
  std::vector<std::unique_ptr<ProbabilityProvider>> providers;
  std::shared_ptr<const NgramModel> shared_ngram;
  for (const auto& [tag, corpus] : corpora) {
    if (!sidecars.empty()) {
      auto it = sidecars.find(tag);
      if (it == sidecars.end()) throw UsageError("no --sidecar given for variant '" + tag + "'");
      providers.push_back(std::make_unique<SidecarProvider>(load_external_probs(it->second, corpus), it->second));
    } else if (o.probs.source == "ngram") {
      // One estimator for every variant: the n-gram of the original corpus.
      if (!shared_ngram) {
        shared_ngram = std::make_shared<const NgramModel>(train_ngram(corpora.front().second, o.probs.order, o.probs.k));
      }
      providers.push_back(std::make_unique<NgramProvider>(shared_ngram));
    } else {
      throw UsageError("compare takes --prob-source ngram or per-variant --sidecar tag=path");
    }
  }

  std::vector<VariantInput> inputs;
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    inputs.push_back({corpora[i].first, &corpora[i].second, providers[i].get()});
  }
  CompareOptions copts;
  copts.density.uid = uid_config(o.uid);
  copts.density.log_base = parse_log_base(g.log_base);
  copts.density.threads = g.threads;
  copts.split = optional_split(o.split);
  copts.kde_grid = o.kde_grid;
  copts.histograms = o.histograms;
  CorpusComparison cmp = compare_corpora(inputs, copts);
  ReportContext ctx;
  ctx.seed = g.seed;
  ctx.config = config;
  emit_report(cmp, o.out, ctx);
  return 0;
}

int cmd_scale(const ScaleCommand& o, const GlobalOptions& g, std::ostream& out) {
  require(o.corpus, "--corpus");
  require(o.model, "--model");
  require(o.selection, "--selection");
  if (o.factors.empty()) throw UsageError("--factors needs at least one value");
  Corpus corpus = load_corpus(o.corpus);
  AttentionModel model = load_model(o.model);
  auto audit = read_audit(o.selection);
  auto docs = o.split == "all" ? corpus.split(Split::Train) : corpus.split(split_arg(o.split));
  if (o.split == "all") {
    docs.clear();
    for (const auto& d : corpus.documents) docs.push_back(&d);
  }
  if (docs.empty()) throw ValidationError("split '" + o.split + "' has no documents");
  auto points = scale_sweep(model, docs, audit, o.factors, parse_scale_target(o.target), g.threads);
  std::string table = "target,factor,f1_micro,f1_macro,auc_micro,auc_macro,p_at_5\n";
  for (const auto& p : points) {
    table += std::string(to_string(parse_scale_target(o.target))) + "," + exact(p.factor) + "," +
             exact(p.metrics.f1_micro) + "," + exact(p.metrics.f1_macro) + "," + exact(p.metrics.auc_micro) + "," +
             exact(p.metrics.auc_macro) + "," + exact(p.metrics.p_at_5) + "\n";
  }
  if (!o.out.empty()) {
    std::filesystem::path path(o.out);
    StagedWriter writer(path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
    writer.add(path.filename().string(), table);
    writer.commit();
  }
  out << table;
  return 0;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  err << j.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"infodens: information density analytics and attention-based content reduction"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config file; command-line flags take precedence");
  app.add_option("--log-base", g.log_base, "nats or bits")->check(CLI::IsMember({"nats", "bits"}));
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--threads", g.threads, "worker threads for per-document maps (0 = all cores)");
  app.add_flag("--verbose", g.verbose, "log progress to stderr");
  app.add_flag("--quiet", g.quiet, "log errors only");

  IngestOptions ingest;
  auto* c_ingest = app.add_subcommand("ingest", "validate a JSONL corpus and write the normalized store");
  c_ingest->add_option("input", ingest.input, "corpus JSONL");
  c_ingest->add_option("--out", ingest.out, "output corpus store");
  c_ingest->add_option("--min-freq", ingest.min_freq, "minimum train frequency for the vocabulary");

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  c_synth->add_option("--labels", synth.spec.labels, "label count");
  c_synth->add_option("--docs-per-label", synth.spec.docs_per_label, "documents per primary label");
  c_synth->add_option("--labels-per-doc", synth.spec.labels_per_doc, "labels on each document");
  c_synth->add_option("--keywords-per-label", synth.spec.keywords_per_label, "keyword types per label");
  c_synth->add_option("--keyword-repeats", synth.spec.keyword_repeats, "occurrences of each keyword");
  c_synth->add_option("--filler-vocab", synth.spec.filler_vocab, "filler vocabulary size");
  c_synth->add_option("--zipf", synth.spec.zipf_exponent, "Zipf exponent of filler draws");
  c_synth->add_option("--mean-length", synth.spec.mean_length, "mean document length in words");
  c_synth->add_option("--length-spread", synth.spec.length_spread, "relative half-width of the length range");
  c_synth->add_option("--redundancy", synth.spec.redundancy, "copy-paste redundancy rate in [0, 1)");
  c_synth->add_option("--valid-fraction", synth.spec.valid_fraction, "fraction of documents in valid");
  c_synth->add_option("--test-fraction", synth.spec.test_fraction, "fraction of documents in test");
  c_synth->add_option("--out", synth.out, "output corpus JSONL");

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "train the label-attention classifier");
  c_train->add_option("--corpus", train.corpus, "corpus JSONL");
  c_train->add_option("--d-h", train.config.d_h, "hidden size")->check(CLI::PositiveNumber);
  c_train->add_option("--window", train.config.window, "context window (odd)");
  c_train->add_option("--epochs", train.config.epochs, "training epochs");
  c_train->add_option("--lr", train.config.learning_rate, "learning rate");
  c_train->add_option("--batch-size", train.config.batch_size, "mini-batch size")->check(CLI::PositiveNumber);
  c_train->add_option("--out", train.out, "model checkpoint");

  EvaluateOptions evaluate_opts;
  auto* c_eval = app.add_subcommand("evaluate", "score a split and print metrics as JSON");
  c_eval->add_option("--corpus", evaluate_opts.corpus, "corpus JSONL");
  c_eval->add_option("--model", evaluate_opts.model, "model checkpoint");
  c_eval->add_option("--split", evaluate_opts.split, "train, valid or test");

  SelectOptions select;
  auto* c_select = app.add_subcommand("select", "attention-based word selection");
  c_select->add_option("--corpus", select.corpus, "corpus JSONL");
  c_select->add_option("--model", select.model, "model checkpoint");
  c_select->add_option("--mode", select.mode, "quantile or fixed");
  c_select->add_option("--q", select.q, "quantile in (0, 1)");
  c_select->add_option("--threshold", select.threshold, "fixed global threshold");
  c_select->add_option("--target-avg-len", select.target_avg_len, "calibrate a global threshold to this mean length");
  c_select->add_option("--out", select.out, "reduced corpus JSONL");
  c_select->add_option("--audit", select.audit, "selection audit JSONL (default <out>.audit.jsonl)");

  DensityCommand density;
  auto* c_density = app.add_subcommand("density", "surprisal, entropy and UID report");
  c_density->add_option("--corpus", density.corpus, "corpus JSONL");
  c_density->add_option("--out", density.out, "report directory");
  c_density->add_option("--kde-grid", density.kde_grid, "minimum KDE grid size");
  add_probability_flags(c_density, density.probs);
  add_uid_flags(c_density, density.uid);

  LexicalCommand lexical;
  auto* c_lexical = app.add_subcommand("lexical", "Flesch reading ease and Herdan richness report");
  c_lexical->add_option("--corpus", lexical.corpus, "corpus JSONL");
  c_lexical->add_option("--out", lexical.out, "report directory");

  CompareCommand compare;
  auto* c_compare = app.add_subcommand("compare", "compare an original corpus with reduced or summarized variants");
  c_compare->add_option("--original", compare.original, "original corpus JSONL");
  c_compare->add_option("--variant", compare.variants, "tag=path of a variant corpus (repeatable)");
  c_compare->add_option("--sidecar", compare.sidecars, "tag=path probability sidecar per variant (repeatable)");
  c_compare->add_option("--split", compare.split, "all, train, valid or test");
  c_compare->add_option("--kde-grid", compare.kde_grid, "minimum KDE grid size");
  c_compare->add_flag("--histograms", compare.histograms, "overlay unit-area histograms on the KDE plots");
  c_compare->add_option("--out", compare.out, "report directory");
  add_probability_flags(c_compare, compare.probs);
  add_uid_flags(c_compare, compare.uid);

  ScaleCommand scale;
  auto* c_scale = app.add_subcommand("scale-ablation", "F1 versus embedding scaling factor");
  c_scale->add_option("--corpus", scale.corpus, "corpus JSONL");
  c_scale->add_option("--model", scale.model, "model checkpoint");
  c_scale->add_option("--selection", scale.selection, "selection audit JSONL");
  c_scale->add_option("--factors", scale.factors, "comma-separated scaling factors")->delimiter(',');
  c_scale->add_option("--target", scale.target, "selected or non_selected");
  c_scale->add_option("--split", scale.split, "train, valid, test or all");
  c_scale->add_option("--out", scale.out, "also write the table to this CSV file");

  // Global flags are accepted before or after the subcommand name.
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    nlohmann::json file_config = nlohmann::json::object();
    if (!g.config_path.empty()) {
      std::ifstream in(g.config_path);
      if (!in) throw IoError("cannot open config '" + g.config_path + "'");
      try {
        file_config = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed config: ") + e.what(), 1);
      }
      if (auto it = file_config.find("global"); it != file_config.end()) apply_config(&app, *it);
      if (auto it = file_config.find(cmd->get_name()); it != file_config.end()) apply_config(cmd, *it);
    }
    if (g.quiet) {
      log::set_level(log::Level::Error);
    } else if (g.verbose) {
      log::set_level(log::Level::Info);
    }

    ojson config;
    config["global"] = resolved_options(&app);
    config[cmd->get_name()] = resolved_options(cmd);

    const std::string name = cmd->get_name();
    if (name == "ingest") return cmd_ingest(ingest, out);
    if (name == "synth") return cmd_synth(synth, g, out);
    if (name == "train") return cmd_train(train, g);
    if (name == "evaluate") return cmd_evaluate(evaluate_opts, g, out);
    if (name == "select") return cmd_select(select, g, out);
    if (name == "density") return cmd_density(density, g, config);
    if (name == "lexical") return cmd_lexical(lexical, g, config);
    if (name == "compare") return cmd_compare(compare, g, config);
    if (name == "scale-ablation") return cmd_scale(scale, g, out);
    throw UsageError("unknown command '" + name + "'");
  } catch (const UsageError& e) {
    print_error(err, e.kind(), e.what());
    return 2;
  } catch (const Error& e) {
    print_error(err, e.kind(), e.what());
    return 1;
  } catch (const CLI::Error& e) {
    print_error(err, "usage", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
}

}  // namespace infodens::cli
