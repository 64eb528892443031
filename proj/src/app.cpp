#include "hiepar/app.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hiepar/assign.hpp"
#include "hiepar/baselines.hpp"
#include "hiepar/corpus.hpp"
#include "hiepar/encoder.hpp"
#include "hiepar/eval.hpp"
#include "hiepar/mlc.hpp"
#include "hiepar/taxonomy.hpp"

namespace hiepar::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

fs::path PipelineConfig::resolve(const std::string& path) const {
  fs::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

fs::path PipelineConfig::output_path(std::string_view file) const { return resolve(output_dir) / fs::path(file); }

namespace {

std::size_t positive_size(const json& value, const std::string& key) {
  if (!value.is_number_integer() || value.get<long long>() < 1) {
    throw Error("config: '" + key + "' must be a positive integer");
  }
  return value.get<std::size_t>();
}

double positive_double(const json& value, const std::string& key) {
  if (!value.is_number() || !(value.get<double>() > 0.0)) throw Error("config: '" + key + "' must be positive");
  return value.get<double>();
}

std::string string_value(const json& value, const std::string& key) {
  if (!value.is_string()) throw Error("config: '" + key + "' must be a string");
  return value.get<std::string>();
}

using Setter = std::function<void(PipelineConfig&, const json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto size_field = [](std::size_t PipelineConfig::*field) {
      return Setter([field](PipelineConfig& c, const json& v, const std::string& k) { c.*field = positive_size(v, k); });
    };
    auto string_field = [](std::string PipelineConfig::*field) {
      return Setter([field](PipelineConfig& c, const json& v, const std::string& k) { c.*field = string_value(v, k); });
    };
    t["records"] = string_field(&PipelineConfig::records);
    t["taxonomy"] = string_field(&PipelineConfig::taxonomy);
    t["output_dir"] = string_field(&PipelineConfig::output_dir);
    t["external_scores"] = string_field(&PipelineConfig::external_scores);
    t["mlc"] = string_field(&PipelineConfig::mlc);
    t["seed"] = [](PipelineConfig& c, const json& v, const std::string& k) {
      if (!v.is_number_unsigned()) throw Error("config: '" + k + "' must be a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    };
    t["test_year"] = [](PipelineConfig& c, const json& v, const std::string& k) {
      c.test_year = static_cast<int>(positive_size(v, k));
    };
    t["min_papers"] = size_field(&PipelineConfig::min_papers);
    t["min_count"] = size_field(&PipelineConfig::min_count);
    t["max_sentences"] = size_field(&PipelineConfig::max_sentences);
    t["max_tokens"] = size_field(&PipelineConfig::max_tokens);
    t["embed_dim"] = size_field(&PipelineConfig::embed_dim);
    t["hidden_dim"] = size_field(&PipelineConfig::hidden_dim);
    t["attention_dim"] = size_field(&PipelineConfig::attention_dim);
    t["epochs"] = size_field(&PipelineConfig::epochs);
    t["batch_size"] = size_field(&PipelineConfig::batch_size);
    t["knn_k"] = size_field(&PipelineConfig::knn_k);
    t["mlbra_k"] = size_field(&PipelineConfig::mlbra_k);
    t["report_candidates"] = size_field(&PipelineConfig::report_candidates);
    t["learning_rate"] = [](PipelineConfig& c, const json& v, const std::string& k) {
      c.learning_rate = positive_double(v, k);
    };
    t["init_scale"] = [](PipelineConfig& c, const json& v, const std::string& k) {
      c.init_scale = positive_double(v, k);
    };
    t["highlight_threshold"] = [](PipelineConfig& c, const json& v, const std::string& k) {
      c.highlight_threshold = positive_double(v, k);
    };
    t["exclude_authors"] = [](PipelineConfig& c, const json& v, const std::string& k) {
      if (!v.is_boolean()) throw Error("config: '" + k + "' must be true or false");
      c.exclude_authors = v.get<bool>();
    };
    t["k_grid"] = [](PipelineConfig& c, const json& v, const std::string& k) {
      if (!v.is_array() || v.empty()) throw Error("config: '" + k + "' must be a non-empty list");
      c.k_grid.clear();
      for (const auto& item : v) c.k_grid.push_back(positive_size(item, k));
    };
    return t;
  }();
  return table;
}

json parse_json_text(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(what + ": invalid JSON: " + e.what());
  }
}

}  // namespace

PipelineConfig parse_config(std::string_view json_text, const fs::path& base_dir) {
  const json root = parse_json_text(json_text, "config");
  if (!root.is_object()) throw Error("config: expected a JSON object");
  PipelineConfig config;
  config.base_dir = base_dir;
  for (const auto& [key, value] : root.items()) {
    auto it = setters().find(key);
    if (it == setters().end()) throw Error("config: unknown key '" + key + "'");
    it->second(config, value, key);
  }
  return config;
}

PipelineConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error("config: path not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json root = parse_json_text(buffer.str(), "config " + path.string());
  if (!root.is_object()) throw Error("config: expected a JSON object");
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("config: override '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    root[key] = value.is_discarded() ? json(text) : value;
  }
  return parse_config(root.dump(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void validate_config(const PipelineConfig& config) {
  if (config.records.empty()) throw Error("config: 'records' is required");
  if (config.taxonomy.empty()) throw Error("config: 'taxonomy' is required");
  if (config.output_dir.empty()) throw Error("config: 'output_dir' is required");
  if (config.test_year < 1) throw Error("config: 'test_year' must be a positive integer");
  if (config.k_grid.empty()) throw Error("config: 'k_grid' must be a non-empty list");
  for (auto k : config.k_grid) {
    if (k < 1) throw Error("config: 'k_grid' entries must be positive");
  }
  using Field = std::pair<const char*, std::size_t>;
  for (auto [name, value] : std::initializer_list<Field>{
           {"min_papers", config.min_papers}, {"min_count", config.min_count},
           {"max_sentences", config.max_sentences}, {"max_tokens", config.max_tokens},
           {"embed_dim", config.embed_dim}, {"hidden_dim", config.hidden_dim},
           {"attention_dim", config.attention_dim}, {"epochs", config.epochs},
           {"batch_size", config.batch_size}, {"knn_k", config.knn_k},
           {"mlbra_k", config.mlbra_k}, {"report_candidates", config.report_candidates}}) {
    if (value < 1) throw Error(std::string("config: '") + name + "' must be a positive integer");
  }
  if (!(config.learning_rate > 0.0) || !(config.init_scale > 0.0) || !(config.highlight_threshold > 0.0)) {
    throw Error("config: learning_rate, init_scale and highlight_threshold must be positive");
  }
  mlc::kind_from_string(config.mlc);
}

namespace {

ordered_json snapshot_json(const PipelineConfig& c) {
  ordered_json j;
  j["records"] = c.records;
  j["taxonomy"] = c.taxonomy;
  j["external_scores"] = c.external_scores;
  j["seed"] = c.seed;
  j["test_year"] = c.test_year;
  j["min_papers"] = c.min_papers;
  j["min_count"] = c.min_count;
  j["max_sentences"] = c.max_sentences;
  j["max_tokens"] = c.max_tokens;
  j["embed_dim"] = c.embed_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["attention_dim"] = c.attention_dim;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["init_scale"] = c.init_scale;
  j["mlc"] = c.mlc;
  j["knn_k"] = c.knn_k;
  j["mlbra_k"] = c.mlbra_k;
  j["k_grid"] = c.k_grid;
  j["report_candidates"] = c.report_candidates;
  j["exclude_authors"] = c.exclude_authors;
  j["highlight_threshold"] = c.highlight_threshold;
  return j;
}

}  // namespace

std::string config_snapshot(const PipelineConfig& config) { return snapshot_json(config).dump(2); }

// ---------------------------------------------------------------------------
// Stages

namespace {

constexpr Stage kAllStages[] = {Stage::kIngest, Stage::kTrain,   Stage::kPredict,  Stage::kExport,
                                Stage::kAssign, Stage::kEval,    Stage::kCoarsen,  Stage::kBaseline,
                                Stage::kHighlight};

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kIngest: return "ingest";
    case Stage::kTrain: return "train";
    case Stage::kPredict: return "predict";
    case Stage::kExport: return "export";
    case Stage::kAssign: return "assign";
    case Stage::kEval: return "eval";
    case Stage::kCoarsen: return "coarsen";
    case Stage::kBaseline: return "baseline";
    case Stage::kHighlight: return "highlight";
  }
  return "?";
}

Stage stage_from_string(std::string_view name) {
  for (Stage stage : kAllStages) {
    if (stage_name(stage) == name) return stage;
  }
  throw Error("unknown stage '" + std::string(name) + "'");
}

std::string files::coarse(int strategy) { return "coarse_s" + std::to_string(strategy) + ".kv"; }

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256: digest initialisation failed");
  }
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof(buffer));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

namespace {

// Digest cache keyed by path, size and modification time; inputs are
// hashed once per process even though every stage fingerprints them.
std::string cached_digest(const fs::path& path) {
  static std::map<std::string, std::pair<std::string, std::string>> cache;
  const auto stamp = std::to_string(fs::file_size(path)) + "@" +
                     std::to_string(fs::last_write_time(path).time_since_epoch().count());
  auto& entry = cache[fs::absolute(path).lexically_normal().string()];
  if (entry.first != stamp) entry = {stamp, sha256_file(path)};
  return entry.second;
}

void require_input(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw Error(what + ": path not found: " + path.string());
}

// Settings a stage's outputs depend on, including everything upstream.
ordered_json fingerprint(const PipelineConfig& c, Stage stage) {
  ordered_json j;
  require_input(c.resolve(c.records), "records");
  require_input(c.resolve(c.taxonomy), "taxonomy");
  j["records_sha256"] = cached_digest(c.resolve(c.records));
  j["taxonomy_sha256"] = cached_digest(c.resolve(c.taxonomy));
  for (auto key : {"test_year", "min_papers", "min_count", "max_sentences", "max_tokens"}) {
    j[key] = snapshot_json(c)[key];
  }
  if (stage == Stage::kIngest || stage == Stage::kBaseline) return j;
  for (auto key : {"seed", "embed_dim", "hidden_dim", "attention_dim", "epochs", "batch_size", "learning_rate",
                   "init_scale"}) {
    j[key] = snapshot_json(c)[key];
  }
  if (stage == Stage::kTrain || stage == Stage::kExport) return j;
  if (stage == Stage::kHighlight) {
    j["highlight_threshold"] = c.highlight_threshold;
    return j;
  }
  j["mlc"] = c.mlc;
  j["knn_k"] = c.knn_k;
  j["external_scores_sha256"] = c.external_scores.empty() ? "" : cached_digest(c.resolve(c.external_scores));
  if (stage == Stage::kPredict) return j;
  j["mlbra_k"] = c.mlbra_k;
  j["report_candidates"] = c.report_candidates;
  j["exclude_authors"] = c.exclude_authors;
  if (stage == Stage::kAssign || stage == Stage::kCoarsen) return j;
  j["k_grid"] = c.k_grid;
  return j;
}

fs::path state_path(const PipelineConfig& c, const std::string& key) {
  return c.resolve(c.output_dir) / ".state" / (key + ".json");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Bookkeeping for one stage execution: timing, fingerprint and the
// digests of what it wrote, consulted by downstream stages.
class StageRun {
 public:
  StageRun(const PipelineConfig& config, Stage stage, std::string key, std::ostream* log)
      : config_(config), stage_(stage), key_(std::move(key)), log_(log),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(config_.resolve(config_.output_dir) / ".state");
    fs::remove(state_path(config_, key_));
  }

  fs::path output(std::string_view file) {
    outputs_.emplace_back(file);
    return config_.output_path(file);
  }

  void note(const std::string& message) const {
    if (log_ != nullptr) *log_ << '[' << key_ << "] " << message << '\n';
  }

  void finish() {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    ordered_json state;
    state["stage"] = stage_name(stage_);
    state["fingerprint"] = fingerprint(config_, stage_);
    ordered_json outputs = ordered_json::object();
    for (const auto& file : outputs_) outputs[file] = sha256_file(config_.output_path(file));
    state["outputs"] = outputs;
    state["seconds"] = elapsed.count();
    write_text(state_path(config_, key_), state.dump(2) + "\n");
    note("done in " + format_double(std::round(elapsed.count() * 1000.0) / 1000.0) + " s");
  }

 private:
  const PipelineConfig& config_;
  Stage stage_;
  std::string key_;
  std::ostream* log_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
};

// Path of an upstream artifact after checking it exists and is current.
fs::path require_artifact(const PipelineConfig& c, Stage producer, std::string_view file,
                          const std::string& state_key = {}) {
  const fs::path path = c.output_path(file);
  const std::string producer_name(stage_name(producer));
  if (!fs::is_regular_file(path)) {
    throw Error("missing artifact " + path.string() + " (run '" + producer_name + "' first)");
  }
  const fs::path state_file = state_path(c, state_key.empty() ? producer_name : state_key);
  if (!fs::is_regular_file(state_file)) {
    throw Error("stale artifact " + path.string() + ": no completed '" + producer_name + "' run recorded");
  }
  const json state = parse_json_text(read_text(state_file), state_file.string());
  if (state.at("fingerprint") != json::parse(fingerprint(c, producer).dump())) {
    throw Error("stale artifact " + path.string() + ": '" + producer_name +
                "' ran with different settings or inputs; rerun it");
  }
  const auto& outputs = state.at("outputs");
  const std::string name(file);
  if (!outputs.contains(name) || outputs.at(name).get<std::string>() != sha256_file(path)) {
    throw Error("stale artifact " + path.string() + ": changed since '" + producer_name + "' wrote it");
  }
  return path;
}

// ---------------------------------------------------------------------------
// Artifact formats

ordered_json sentences_json(const corpus::Document& document) {
  ordered_json sentences = ordered_json::array();
  for (const auto& sentence : document.sentences) sentences.push_back(sentence);
  return sentences;
}

corpus::Document document_from_json(std::string owner, const json& sentences) {
  corpus::Document document;
  document.owner_id = std::move(owner);
  for (const auto& sentence : sentences) document.sentences.push_back(sentence.get<std::vector<TokenId>>());
  return document;
}

LabelSet labels_from_json(const json& labels) {
  LabelSet set;
  for (const auto& label : labels) set.insert(label.get<LabelId>());
  return set;
}

template <typename Fn>
void for_each_json_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(path.string() + " line " + std::to_string(number) + ": " + e.what());
    }
  }
}

void write_reviewers(const fs::path& path, const std::vector<corpus::ReviewerProfile>& profiles) {
  std::ofstream out(path);
  for (const auto& p : profiles) {
    ordered_json j;
    j["id"] = p.reviewer_id;
    j["papers"] = p.publication_count;
    j["labels"] = p.label_set.ids();
    j["sentences"] = sentences_json(p.document);
    out << j.dump() << '\n';
  }
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<corpus::ReviewerProfile> read_reviewers(const fs::path& path) {
  std::vector<corpus::ReviewerProfile> profiles;
  for_each_json_line(path, [&](const json& j) {
    corpus::ReviewerProfile p;
    p.reviewer_id = j.at("id").get<std::string>();
    p.publication_count = j.at("papers").get<std::size_t>();
    p.label_set = labels_from_json(j.at("labels"));
    p.document = document_from_json(p.reviewer_id, j.at("sentences"));
    profiles.push_back(std::move(p));
  });
  return profiles;
}

void write_papers(const fs::path& path, const std::vector<corpus::PaperRecord>& papers) {
  std::ofstream out(path);
  for (const auto& p : papers) {
    ordered_json j;
    j["id"] = p.paper_id;
    j["year"] = p.year;
    j["authors"] = p.author_ids;
    j["labels"] = p.label_set.ids();
    j["sentences"] = sentences_json(p.document);
    out << j.dump() << '\n';
  }
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<corpus::PaperRecord> read_papers(const fs::path& path) {
  std::vector<corpus::PaperRecord> papers;
  for_each_json_line(path, [&](const json& j) {
    corpus::PaperRecord p;
    p.paper_id = j.at("id").get<std::string>();
    p.year = j.at("year").get<int>();
    p.author_ids = j.at("authors").get<std::vector<std::string>>();
    p.label_set = labels_from_json(j.at("labels"));
    p.document = document_from_json(p.paper_id, j.at("sentences"));
    papers.push_back(std::move(p));
  });
  return papers;
}

std::vector<std::string> read_label_paths(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<std::string> paths;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || parse_integer(std::string_view(line).substr(0, tab)) !=
                                        static_cast<long long>(paths.size())) {
      throw Error(path.string() + ": expected dense 'id<TAB>path' lines");
    }
    paths.push_back(line.substr(tab + 1));
  }
  return paths;
}

taxonomy::Taxonomy taxonomy_from_labels(const fs::path& path) { return taxonomy::Taxonomy::load(read_label_paths(path)); }

std::set<std::string> excluded_for(const PipelineConfig& c, const corpus::PaperRecord& paper) {
  if (!c.exclude_authors) return {};
  return {paper.author_ids.begin(), paper.author_ids.end()};
}

encoder::TrainConfig train_config(const PipelineConfig& c, std::size_t vocab_size, std::size_t label_count) {
  encoder::TrainConfig t;
  t.dims.vocab = static_cast<encoder::Index>(vocab_size);
  t.dims.embed = static_cast<encoder::Index>(c.embed_dim);
  t.dims.hidden = static_cast<encoder::Index>(c.hidden_dim);
  t.dims.attention = static_cast<encoder::Index>(c.attention_dim);
  t.dims.labels = static_cast<encoder::Index>(label_count);
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.learning_rate = c.learning_rate;
  t.init_scale = c.init_scale;
  t.seed = c.seed;
  return t;
}

template <typename Owner>
mlc::FeatureMatrix document_features(const std::vector<Owner>& owners, const encoder::ModelParams& params,
                                     std::string Owner::*id, corpus::Document Owner::*document) {
  mlc::FeatureMatrix features;
  features.values.resize(static_cast<encoder::Index>(owners.size()), 2 * params.dims.hidden);
  for (std::size_t i = 0; i < owners.size(); ++i) {
    features.owner_ids.push_back(owners[i].*id);
    features.values.row(static_cast<encoder::Index>(i)) =
        encoder::encode_document(owners[i].*document, params).vector.transpose();
  }
  return features;
}

std::string kv_line(const std::string& key, double value) { return key + "=" + format_double(value) + "\n"; }

// Outcome per paper given the assignment report: the first candidate's
// labels, or nothing when the paper was flagged (best overlap = 0).
std::vector<eval::AssignmentOutcome> assignment_outcomes(const std::vector<corpus::PaperRecord>& papers,
                                                         const std::vector<corpus::ReviewerProfile>& reviewers,
                                                         const fs::path& report_path) {
  std::map<std::string, const LabelSet*> reviewer_labels;
  for (const auto& r : reviewers) reviewer_labels[r.reviewer_id] = &r.label_set;
  std::ifstream in(report_path);
  if (!in) throw Error("cannot read " + report_path.string());
  std::map<std::string, assign::AssignmentLine> lines;
  for (auto& line : assign::read_assignment_report(in)) lines[line.paper_id] = std::move(line);
  std::vector<eval::AssignmentOutcome> outcomes;
  for (const auto& paper : papers) {
    auto it = lines.find(paper.paper_id);
    if (it == lines.end()) throw Error(report_path.string() + ": no assignment for paper '" + paper.paper_id + "'");
    eval::AssignmentOutcome outcome{paper.label_set, std::nullopt};
    if (it->second.best_overlap > 0 && !it->second.candidates.empty()) {
      auto r = reviewer_labels.find(it->second.candidates.front().reviewer_id);
      if (r == reviewer_labels.end()) {
        throw Error(report_path.string() + ": unknown reviewer '" + it->second.candidates.front().reviewer_id + "'");
      }
      outcome.top_reviewer_labels = *r->second;
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

}  // namespace

void run_ingest(const PipelineConfig& c, std::ostream* log) {
  require_input(c.resolve(c.taxonomy), "taxonomy");
  require_input(c.resolve(c.records), "records");
  StageRun run(c, Stage::kIngest, "ingest", log);
  const auto tax = taxonomy::Taxonomy::load_file(c.resolve(c.taxonomy));
  const auto raw = corpus::read_records(c.resolve(c.records));
  const auto prepared = corpus::prepare_records(raw, tax);
  auto split = corpus::split_by_year(prepared, c.test_year);
  for (const auto& warning : split.warnings) run.note("warning: " + warning);

  std::vector<corpus::TokenizedText> texts;
  texts.reserve(split.train.size());
  for (const auto& record : split.train) texts.push_back(record.text);
  const auto vocab = corpus::build_vocabulary(texts, c.min_count);
  const corpus::EncodeLimits limits{c.max_sentences, c.max_tokens};
  const auto profiles = corpus::build_reviewer_profiles(split.train, vocab, c.min_papers, limits);
  if (profiles.empty()) {
    throw Error("no author has at least " + std::to_string(c.min_papers) + " papers before the test year");
  }
  const auto papers = corpus::build_paper_records(split.test, vocab, limits);

  vocab.save(run.output(files::kVocab));
  {
    std::ofstream out(run.output(files::kLabels));
    for (LabelId id = 0; id < tax.label_count(); ++id) out << id << '\t' << tax.label_string(id) << '\n';
  }
  write_reviewers(run.output(files::kReviewers), profiles);
  write_papers(run.output(files::kPapers), papers);

  double reviewer_labels = 0.0, paper_labels = 0.0;
  LabelSet used;
  for (const auto& p : profiles) reviewer_labels += static_cast<double>(p.label_set.size());
  for (const auto& p : papers) {
    paper_labels += static_cast<double>(p.label_set.size());
    used.merge(p.label_set);
  }
  for (const auto& p : profiles) used.merge(p.label_set);
  ordered_json stats;
  stats["labels"] = tax.label_count();
  stats["labels_used"] = used.size();
  stats["reviewers"] = profiles.size();
  stats["papers"] = papers.size();
  stats["train_pool_records"] = split.train.size();
  stats["vocabulary"] = vocab.size();
  stats["mean_labels_per_reviewer"] = reviewer_labels / static_cast<double>(profiles.size());
  stats["mean_labels_per_paper"] = papers.empty() ? 0.0 : paper_labels / static_cast<double>(papers.size());
  write_text(run.output(files::kStats), stats.dump(2) + "\n");
  run.note(std::to_string(profiles.size()) + " reviewers, " + std::to_string(papers.size()) + " papers, " +
           std::to_string(vocab.size()) + " vocabulary entries");
  run.finish();
}

void run_train(const PipelineConfig& c, std::ostream* log) {
  const auto vocab_path = require_artifact(c, Stage::kIngest, files::kVocab);
  const auto labels_path = require_artifact(c, Stage::kIngest, files::kLabels);
  const auto reviewers_path = require_artifact(c, Stage::kIngest, files::kReviewers);
  StageRun run(c, Stage::kTrain, "train", log);
  const auto vocab = corpus::Vocabulary::load(vocab_path);
  const auto label_count = read_label_paths(labels_path).size();
  const auto profiles = read_reviewers(reviewers_path);
  const auto result = encoder::train(profiles, train_config(c, vocab.size(), label_count),
                                     [&](std::size_t epoch, double loss) {
                                       run.note("epoch " + std::to_string(epoch) + " loss " + format_double(loss));
                                     });
  encoder::save_model(run.output(files::kModel), result.params);
  std::ofstream history(run.output(files::kLossHistory));
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
    history << e + 1 << '\t' << format_double(result.loss_history[e]) << '\n';
  }
  history.close();
  run.finish();
}

void run_predict(const PipelineConfig& c, std::ostream* log) {
  const auto labels_path = require_artifact(c, Stage::kIngest, files::kLabels);
  const auto papers_path = require_artifact(c, Stage::kIngest, files::kPapers);
  const auto label_count = static_cast<encoder::Index>(read_label_paths(labels_path).size());
  const auto papers = read_papers(papers_path);
  std::vector<mlc::Vec> rows;
  if (!c.external_scores.empty()) {
    require_input(c.resolve(c.external_scores), "external_scores");
    StageRun run(c, Stage::kPredict, "predict", log);
    rows = mlc::import_scores(c.resolve(c.external_scores), label_count);
    if (rows.size() != papers.size()) {
      throw Error("external scores have " + std::to_string(rows.size()) + " rows for " +
                  std::to_string(papers.size()) + " papers");
    }
    mlc::export_scores(rows, 0, run.output(files::kScores));
    run.note("imported external scores for " + std::to_string(rows.size()) + " papers");
    run.finish();
    return;
  }
  const auto model_path = require_artifact(c, Stage::kTrain, files::kModel);
  const auto reviewers_path = require_artifact(c, Stage::kIngest, files::kReviewers);
  StageRun run(c, Stage::kPredict, "predict", log);
  const auto params = encoder::load_model(model_path);
  mlc::MlcOptions options;
  options.kind = mlc::kind_from_string(c.mlc);
  options.knn_k = c.knn_k;
  options.label_count = label_count;
  options.encoder = &params;
  const auto reviewers = read_reviewers(reviewers_path);
  const auto train_features = document_features(reviewers, params, &corpus::ReviewerProfile::reviewer_id,
                                                &corpus::ReviewerProfile::document);
  std::vector<LabelSet> train_labels;
  for (const auto& r : reviewers) train_labels.push_back(r.label_set);
  const auto classifier = mlc::train_mlc(options, train_features, train_labels);
  for (const auto& paper : papers) {
    rows.push_back(classifier->predict_scores(encoder::encode_document(paper.document, params).vector));
  }
  mlc::export_scores(rows, 0, run.output(files::kScores));
  run.note("scored " + std::to_string(rows.size()) + " papers with " + c.mlc);
  run.finish();
}

void run_export(const PipelineConfig& c, std::ostream* log) {
  const auto labels_path = require_artifact(c, Stage::kIngest, files::kLabels);
  const auto papers_path = require_artifact(c, Stage::kIngest, files::kPapers);
  const auto reviewers_path = require_artifact(c, Stage::kIngest, files::kReviewers);
  const auto model_path = require_artifact(c, Stage::kTrain, files::kModel);
  StageRun run(c, Stage::kExport, "export", log);
  const auto label_count = static_cast<encoder::Index>(read_label_paths(labels_path).size());
  const auto params = encoder::load_model(model_path);
  const auto reviewers = read_reviewers(reviewers_path);
  const auto papers = read_papers(papers_path);
  std::vector<LabelSet> reviewer_labels, paper_labels;
  for (const auto& r : reviewers) reviewer_labels.push_back(r.label_set);
  for (const auto& p : papers) paper_labels.push_back(p.label_set);
  mlc::export_sparse_dataset(document_features(reviewers, params, &corpus::ReviewerProfile::reviewer_id,
                                               &corpus::ReviewerProfile::document),
                             reviewer_labels, label_count, run.output(files::kMlcTrain));
  mlc::export_sparse_dataset(document_features(papers, params, &corpus::PaperRecord::paper_id,
                                               &corpus::PaperRecord::document),
                             paper_labels, label_count, run.output(files::kMlcTest));
  run.finish();
}

void run_assign(const PipelineConfig& c, std::ostream* log) {
  const auto labels_path = require_artifact(c, Stage::kIngest, files::kLabels);
  const auto papers_path = require_artifact(c, Stage::kIngest, files::kPapers);
  const auto reviewers_path = require_artifact(c, Stage::kIngest, files::kReviewers);
  const auto scores_path = require_artifact(c, Stage::kPredict, files::kScores);
  StageRun run(c, Stage::kAssign, "assign", log);
  const auto label_count = static_cast<encoder::Index>(read_label_paths(labels_path).size());
  const auto papers = read_papers(papers_path);
  const auto scores = mlc::import_scores(scores_path, label_count);
  if (scores.size() != papers.size()) throw Error(scores_path.string() + ": row count differs from papers");
  std::vector<assign::Reviewer> reviewers;
  for (auto& r : read_reviewers(reviewers_path)) reviewers.push_back({r.reviewer_id, r.label_set});
  const std::size_t k = std::min<std::size_t>(c.mlbra_k, static_cast<std::size_t>(label_count));
  std::vector<assign::Recommendation> recommendations;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < papers.size(); ++i) {
    recommendations.push_back(assign::mlbra(papers[i].paper_id, scores[i], reviewers, k, excluded_for(c, papers[i])));
    if (recommendations.back().no_overlap) ++flagged;
  }
  std::ofstream out(run.output(files::kAssignments));
  assign::write_assignment_report(out, recommendations, c.report_candidates);
  out.close();
  run.note(std::to_string(papers.size()) + " papers assigned, " + std::to_string(flagged) + " without label overlap");
  run.finish();
}

void run_eval(const PipelineConfig& c, std::ostream* log) {
  const auto labels_path = require_artifact(c, Stage::kIngest, files::kLabels);
  const auto papers_path = require_artifact(c, Stage::kIngest, files::kPapers);
  const auto reviewers_path = require_artifact(c, Stage::kIngest, files::kReviewers);
  const auto scores_path = require_artifact(c, Stage::kPredict, files::kScores);
  const auto report_path = require_artifact(c, Stage::kAssign, files::kAssignments);
  StageRun run(c, Stage::kEval, "eval", log);
  const auto tax = taxonomy_from_labels(labels_path);
  const auto label_count = static_cast<encoder::Index>(tax.label_count());
  const auto papers = read_papers(papers_path);
  const auto scores = mlc::import_scores(scores_path, label_count);
  if (scores.size() != papers.size()) throw Error(scores_path.string() + ": row count differs from papers");
  const std::size_t depth =
      std::min(*std::max_element(c.k_grid.begin(), c.k_grid.end()), static_cast<std::size_t>(label_count));
  std::vector<std::vector<LabelId>> ranked;
  std::vector<LabelSet> truths;
  for (std::size_t i = 0; i < papers.size(); ++i) {
    ranked.push_back(mlc::top_k(scores[i], depth));
    truths.push_back(papers[i].label_set);
  }
  auto report = eval::ranking_metrics(ranked, truths, c.k_grid);
  const auto outcomes = assignment_outcomes(papers, read_reviewers(reviewers_path), report_path);
  report.accuracy = eval::accuracy(outcomes);
  report.coarse_accuracy_strategy1 = eval::coarse_accuracy(outcomes, tax, taxonomy::CoarseningStrategy::kTopThree);
  report.coarse_accuracy_strategy2 = eval::coarse_accuracy(outcomes, tax, taxonomy::CoarseningStrategy::kDropLast);
  write_text(run.output(files::kMetricsTable), eval::format_table(report));
  write_text(run.output(files::kMetrics), eval::format_key_values(report));
  run.note("accuracy " + format_double(*report.accuracy));
  run.finish();
}

void run_coarsen(const PipelineConfig& c, int strategy, std::ostream* log) {
  const auto chosen = taxonomy::strategy_from_int(strategy);
  const auto labels_path = require_artifact(c, Stage::kIngest, files::kLabels);
  const auto papers_path = require_artifact(c, Stage::kIngest, files::kPapers);
  const auto reviewers_path = require_artifact(c, Stage::kIngest, files::kReviewers);
  const auto report_path = require_artifact(c, Stage::kAssign, files::kAssignments);
  StageRun run(c, Stage::kCoarsen, "coarsen_s" + std::to_string(strategy), log);
  const auto tax = taxonomy_from_labels(labels_path);
  const auto outcomes = assignment_outcomes(read_papers(papers_path), read_reviewers(reviewers_path), report_path);
  const double value = eval::coarse_accuracy(outcomes, tax, chosen);
  write_text(run.output(files::coarse(strategy)), "strategy=" + std::to_string(strategy) + "\n" +
                                                      "papers=" + std::to_string(outcomes.size()) + "\n" +
                                                      kv_line("coarse_accuracy", value));
  run.note("coarse accuracy " + format_double(value));
  run.finish();
}

void run_baseline(const PipelineConfig& c, std::ostream* log) {
  const auto papers_path = require_artifact(c, Stage::kIngest, files::kPapers);
  const auto reviewers_path = require_artifact(c, Stage::kIngest, files::kReviewers);
  StageRun run(c, Stage::kBaseline, "baseline", log);
  const auto papers = read_papers(papers_path);
  const auto reviewers = read_reviewers(reviewers_path);
  std::vector<corpus::Document> documents;
  std::vector<std::string> ids;
  for (const auto& r : reviewers) {
    documents.push_back(r.document);
    ids.push_back(r.reviewer_id);
  }
  const auto model = baselines::fit_tfidf(documents);
  std::vector<baselines::SparseVector> vectors;
  for (const auto& d : documents) vectors.push_back(baselines::tfidf_vector(d, model));

  std::vector<eval::AssignmentOutcome> outcomes;
  std::size_t flagged = 0;
  for (const auto& paper : papers) {
    const auto query = baselines::tfidf_vector(paper.document, model);
    const auto excluded = excluded_for(c, paper);
    baselines::Retrieval hit;
    if (std::none_of(ids.begin(), ids.end(), [&](const std::string& id) { return excluded.contains(id); })) {
      hit = baselines::baseline_retrieve(query, vectors, ids);
    } else {
      std::vector<baselines::SparseVector> kept_vectors;
      std::vector<std::string> kept_ids;
      std::vector<std::size_t> index;
      for (std::size_t r = 0; r < ids.size(); ++r) {
        if (excluded.contains(ids[r])) continue;
        kept_vectors.push_back(vectors[r]);
        kept_ids.push_back(ids[r]);
        index.push_back(r);
      }
      hit = baselines::baseline_retrieve(query, kept_vectors, kept_ids);
      if (hit.reviewer) hit.reviewer = index[*hit.reviewer];
    }
    eval::AssignmentOutcome outcome{paper.label_set, std::nullopt};
    if (hit.reviewer) {
      outcome.top_reviewer_labels = reviewers[*hit.reviewer].label_set;
    } else {
      ++flagged;
    }
    outcomes.push_back(std::move(outcome));
  }
  const double value = eval::accuracy(outcomes);
  write_text(run.output(files::kBaseline), "method=bow_tfidf\npapers=" + std::to_string(papers.size()) + "\n" +
                                               "flagged=" + std::to_string(flagged) + "\n" +
                                               kv_line("accuracy", value));
  run.note("tf-idf accuracy " + format_double(value));
  run.finish();
}

void run_highlight(const PipelineConfig& c, std::ostream* log) {
  const auto vocab_path = require_artifact(c, Stage::kIngest, files::kVocab);
  const auto papers_path = require_artifact(c, Stage::kIngest, files::kPapers);
  const auto model_path = require_artifact(c, Stage::kTrain, files::kModel);
  StageRun run(c, Stage::kHighlight, "highlight", log);
  const auto vocab = corpus::Vocabulary::load(vocab_path);
  const auto params = encoder::load_model(model_path);
  std::ofstream trace(run.output(files::kAttention));
  std::ofstream marks(run.output(files::kHighlights));
  for (const auto& paper : read_papers(papers_path)) {
    const auto encoding = encoder::encode_document(paper.document, params);
    encoder::write_attention_trace(trace, paper.document, encoding.attention, vocab);
    const auto highlights = encoder::attention_highlights(paper.document, params, c.highlight_threshold);
    for (const auto& t : highlights.tokens) {
      if (!t.highlighted) break;
      marks << paper.paper_id << '\t' << t.sentence << '\t' << t.position << '\t' << vocab.token(t.token) << '\t'
            << format_double(t.weight) << '\n';
    }
  }
  trace.close();
  marks.close();
  run.finish();
}

void run_stage(Stage stage, const PipelineConfig& config, std::ostream* log, int coarsen_strategy) {
  try {
    switch (stage) {
      case Stage::kIngest: run_ingest(config, log); break;
      case Stage::kTrain: run_train(config, log); break;
      case Stage::kPredict: run_predict(config, log); break;
      case Stage::kExport: run_export(config, log); break;
      case Stage::kAssign: run_assign(config, log); break;
      case Stage::kEval: run_eval(config, log); break;
      case Stage::kCoarsen: run_coarsen(config, coarsen_strategy, log); break;
      case Stage::kBaseline: run_baseline(config, log); break;
      case Stage::kHighlight: run_highlight(config, log); break;
    }
  } catch (const std::exception& e) {
    throw Error(std::string(stage_name(stage)) + ": " + e.what());
  }
}

void write_manifest(const PipelineConfig& c) {
  ordered_json manifest;
  manifest["config"] = snapshot_json(c);
  ordered_json inputs;
  for (const auto& [name, path] :
       std::initializer_list<std::pair<std::string, std::string>>{{"records", c.records}, {"taxonomy", c.taxonomy}}) {
    const fs::path resolved = c.resolve(path);
    require_input(resolved, name);
    inputs[name] = {{"file", resolved.filename().string()}, {"sha256", cached_digest(resolved)}};
  }
  manifest["inputs"] = inputs;
  const fs::path stats = c.output_path(files::kStats);
  manifest["statistics"] = fs::is_regular_file(stats) ? ordered_json::parse(read_text(stats)) : ordered_json();
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(c.resolve(c.output_dir))) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || name == files::kManifest || name == files::kTimings) continue;
    names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  ordered_json artifacts = ordered_json::object();
  for (const auto& name : names) artifacts[name] = sha256_file(c.output_path(name));
  manifest["artifacts"] = artifacts;
  write_text(c.output_path(files::kManifest), manifest.dump(2) + "\n");

  ordered_json timings = ordered_json::object();
  const fs::path state_dir = c.resolve(c.output_dir) / ".state";
  if (fs::is_directory(state_dir)) {
    std::vector<fs::path> states;
    for (const auto& entry : fs::directory_iterator(state_dir)) states.push_back(entry.path());
    std::sort(states.begin(), states.end());
    for (const auto& path : states) {
      const auto state = json::parse(read_text(path));
      timings[path.stem().string()] = state.value("seconds", 0.0);
    }
  }
  write_text(c.output_path(files::kTimings), timings.dump(2) + "\n");
}

void run_pipeline(const PipelineConfig& config, std::optional<Stage> from, std::ostream* log) {
  validate_config(config);
  require_input(config.resolve(config.taxonomy), "taxonomy");
  require_input(config.resolve(config.records), "records");
  if (!config.external_scores.empty()) require_input(config.resolve(config.external_scores), "external_scores");
  bool started = !from.has_value();
  for (Stage stage : kAllStages) {
    if (!started && stage == *from) started = true;
    if (!started) continue;
    if (stage == Stage::kCoarsen) {
      run_stage(stage, config, log, 1);
      run_stage(stage, config, log, 2);
    } else {
      run_stage(stage, config, log);
    }
  }
  write_manifest(config);
}

}  // namespace hiepar::app
