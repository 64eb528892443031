#include "hiepar/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace hiepar::synthetic {

namespace {

std::string numbered(const char* prefix, std::size_t a) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%s%02zu", prefix, a);
  return buffer;
}

std::string numbered(const char* prefix, std::size_t a, const char* infix, std::size_t b) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%s%02zu%s%02zu", prefix, a, infix, b);
  return buffer;
}

// Label i hangs under area i % 4 at path length 3 + (i / 4) % 5, so the
// tree mixes depths 3..7 and neighbouring labels share prefixes.
std::vector<std::string> make_taxonomy(std::size_t label_count) {
  constexpr std::size_t kAreas = 4;
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < label_count; ++i) {
    const std::size_t area = i % kAreas;
    const std::size_t length = 3 + (i / kAreas) % 5;
    std::string path = "Computing > " + numbered("Area ", area);
    for (std::size_t depth = 2; depth + 1 < length; ++depth) {
      path += " > " + numbered("Branch ", area, "-", depth);
    }
    path += " > " + numbered("Topic ", i);
    lines.push_back(std::move(path));
  }
  return lines;
}

class ZipfSampler {
 public:
  explicit ZipfSampler(std::size_t n) : cumulative_(n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += 1.0 / static_cast<double>(i + 1);
      cumulative_[i] = total;
    }
    for (double& c : cumulative_) c /= total;
  }

  std::size_t operator()(RandomStream& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

struct Vocab {
  std::vector<std::vector<std::string>> signature;
  std::vector<std::vector<std::string>> style;
  std::vector<std::string> noise;
  ZipfSampler zipf;
};

std::size_t between(RandomStream& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

std::string sentence(RandomStream& rng, const Vocab& vocab, const SyntheticConfig& config,
                     const std::vector<LabelId>& labels, std::size_t style, std::size_t length) {
  std::string out;
  for (std::size_t t = 0; t < length; ++t) {
    const double u = rng.uniform();
    const std::string* word;
    if (u < config.signature_rate) {
      const auto& sig = vocab.signature[labels[rng.below(labels.size())]];
      word = &sig[rng.below(sig.size())];
    } else if (u < config.signature_rate + config.style_rate) {
      word = &vocab.style[style][rng.below(vocab.style[style].size())];
    } else {
      word = &vocab.noise[vocab.zipf(rng)];
    }
    if (!out.empty()) out += ' ';
    out += *word;
  }
  return out + '.';
}

corpus::RawRecord make_paper(RandomStream& rng, const Vocab& vocab, const SyntheticConfig& config,
                             std::string id, std::string author, int year, std::vector<LabelId> labels,
                             std::size_t style, const std::vector<std::string>& taxonomy_lines) {
  std::sort(labels.begin(), labels.end());
  corpus::RawRecord record;
  record.paper_id = std::move(id);
  record.author_ids = {std::move(author)};
  record.year = year;
  record.title = sentence(rng, vocab, config, labels, style, between(rng, 5, 8));
  const std::size_t sentences = between(rng, 3, 5);
  for (std::size_t s = 0; s < sentences; ++s) {
    if (s > 0) record.abstract_text += ' ';
    record.abstract_text += sentence(rng, vocab, config, labels, style, between(rng, 8, 12));
  }
  for (LabelId label : labels) record.labels.push_back(taxonomy_lines[label]);
  return record;
}

std::vector<LabelId> pick_labels(RandomStream& rng, std::size_t label_count, std::size_t count) {
  std::vector<LabelId> all(label_count);
  for (std::size_t i = 0; i < label_count; ++i) all[i] = static_cast<LabelId>(i);
  rng.shuffle(all);
  all.resize(count);
  return all;
}

}  // namespace

SyntheticCorpus generate(const SyntheticConfig& config) {
  if (config.label_count < 2 || config.reviewers == 0 || config.test_papers == 0 ||
      config.min_reviewer_labels == 0 || config.min_reviewer_labels > config.max_reviewer_labels ||
      config.max_reviewer_labels > config.label_count || config.max_test_labels == 0 ||
      config.min_reviewer_papers < config.max_reviewer_labels ||
      config.min_reviewer_papers > config.max_reviewer_papers || config.styles == 0 ||
      config.signature_rate + config.style_rate > 1.0) {
    throw Error("synthetic: inconsistent generator settings");
  }
  SyntheticCorpus out;
  out.taxonomy_lines = make_taxonomy(config.label_count);

  Vocab vocab{{}, {}, {}, ZipfSampler(config.noise_words)};
  for (std::size_t l = 0; l < config.label_count; ++l) {
    auto& sig = vocab.signature.emplace_back();
    for (std::size_t j = 0; j < config.signature_tokens; ++j) sig.push_back(numbered("topic", l, "w", j));
  }
  for (std::size_t c = 0; c < config.styles; ++c) {
    auto& words = vocab.style.emplace_back();
    for (std::size_t j = 0; j < config.style_words; ++j) words.push_back(numbered("style", c, "w", j));
  }
  for (std::size_t n = 0; n < config.noise_words; ++n) vocab.noise.push_back(numbered("w", n));
  out.signature = vocab.signature;

  RandomStream rng = RandomStream::named(config.seed, "synthetic");
  const int train_years = std::max(1, config.test_year - config.first_year);
  std::size_t paper_counter = 0;

  for (std::size_t r = 0; r < config.reviewers; ++r) {
    const std::string author = numbered("r", r);
    const std::size_t label_n = between(rng, config.min_reviewer_labels, config.max_reviewer_labels);
    // First label cycles through the label space so every label has reviewers.
    std::vector<LabelId> labels{static_cast<LabelId>(r % config.label_count)};
    for (LabelId extra : pick_labels(rng, config.label_count, config.label_count)) {
      if (labels.size() == label_n) break;
      if (std::find(labels.begin(), labels.end(), extra) == labels.end()) labels.push_back(extra);
    }
    const std::size_t style = rng.below(config.styles);
    const std::size_t papers = between(rng, config.min_reviewer_papers, config.max_reviewer_papers);
    for (std::size_t p = 0; p < papers; ++p) {
      std::vector<LabelId> paper_labels;
      if (p < labels.size()) {
        paper_labels.push_back(labels[p]);
      } else {
        auto copy = labels;
        rng.shuffle(copy);
        copy.resize(between(rng, 1, std::min<std::size_t>(2, copy.size())));
        paper_labels = copy;
      }
      const int year = config.first_year + static_cast<int>(rng.below(static_cast<std::uint64_t>(train_years)));
      out.records.push_back(make_paper(rng, vocab, config, numbered("p", paper_counter++), author, year,
                                       paper_labels, style, out.taxonomy_lines));
    }
  }
  for (std::size_t t = 0; t < config.test_papers; ++t) {
    const std::size_t label_n = between(rng, 1, config.max_test_labels);
    const std::size_t style = rng.below(config.styles);
    out.records.push_back(make_paper(rng, vocab, config, numbered("q", t), numbered("n", t), config.test_year,
                                     pick_labels(rng, config.label_count, label_n), style, out.taxonomy_lines));
  }
  return out;
}

std::string record_to_json(const corpus::RawRecord& record) {
  nlohmann::ordered_json j;
  j["paper_id"] = record.paper_id;
  j["title"] = record.title;
  j["abstract"] = record.abstract_text;
  j["authors"] = record.author_ids;
  j["year"] = record.year;
  j["labels"] = record.labels;
  return j.dump();
}

std::string pipeline_config_json() {
  nlohmann::ordered_json j;
  j["records"] = "records.jsonl";
  j["taxonomy"] = "taxonomy.txt";
  j["output_dir"] = "run";
  j["seed"] = 1;
  j["test_year"] = 2017;
  j["min_papers"] = 15;
  j["min_count"] = 2;
  j["max_sentences"] = 100;
  j["max_tokens"] = 50;
  j["embed_dim"] = 32;
  j["hidden_dim"] = 24;
  j["attention_dim"] = 24;
  j["epochs"] = 30;
  j["batch_size"] = 8;
  j["learning_rate"] = 0.015;
  j["init_scale"] = 0.1;
  j["mlc"] = "network_head";
  j["knn_k"] = 10;
  j["mlbra_k"] = 2;
  j["k_grid"] = {1, 3, 5, 7, 10, 13};
  j["report_candidates"] = 10;
  j["exclude_authors"] = true;
  j["highlight_threshold"] = 0.1;
  return j.dump(2) + "\n";
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream taxonomy(dir / "taxonomy.txt");
  for (const auto& line : corpus.taxonomy_lines) taxonomy << line << '\n';
  std::ofstream records(dir / "records.jsonl");
  for (const auto& record : corpus.records) records << record_to_json(record) << '\n';
  if (!taxonomy || !records) throw Error("synthetic: cannot write corpus to " + dir.string());
}

}  // namespace hiepar::synthetic
