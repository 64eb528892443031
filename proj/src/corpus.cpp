#include "hiepar/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace hiepar::corpus {

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

TokenizedSentence tokenize_sentence(std::string_view sentence) {
  TokenizedSentence tokens;
  std::string current;
  for (char ch : sentence) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

}  // namespace

RawRecord parse_record(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw Error("malformed record: expected a JSON object");

  RawRecord record;
  try {
    record.paper_id = j.at("paper_id").get<std::string>();
    record.title = j.value("title", std::string{});
    record.abstract_text = j.value("abstract", std::string{});
    record.year = j.at("year").get<int>();
    for (const auto& author : j.at("authors")) {
      record.author_ids.push_back(author.is_object() ? author.at("id").get<std::string>()
                                                     : author.get<std::string>());
    }
    record.labels = j.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed record: ") + e.what());
  }
  return record;
}

void validate_records(const std::vector<RawRecord>& records) {
  std::set<std::string_view> seen;
  for (const auto& record : records) {
    if (record.paper_id.empty()) throw Error("record with empty paper_id");
    if (!seen.insert(record.paper_id).second) {
      throw Error("duplicate paper_id '" + record.paper_id + "'");
    }
    if (record.labels.empty()) throw Error("record '" + record.paper_id + "' has no labels");
    if (record.year < 1000 || record.year > 9999) {
      throw Error("record '" + record.paper_id + "' has invalid year " + std::to_string(record.year));
    }
  }
}

std::vector<RawRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("records: path not found: " + path.string());
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    try {
      records.push_back(parse_record(line));
    } catch (const Error& e) {
      throw Error("records line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  validate_records(records);
  return records;
}

TokenizedText tokenize(std::string_view text) {
  TokenizedText sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool boundary = is_terminator(text[i]) &&
                          (i + 1 == text.size() || is_space(static_cast<unsigned char>(text[i + 1])));
    if (boundary) {
      auto tokens = tokenize_sentence(text.substr(start, i - start));
      if (!tokens.empty()) sentences.push_back(std::move(tokens));
      start = i + 1;
    }
  }
  if (start < text.size()) {
    auto tokens = tokenize_sentence(text.substr(start));
    if (!tokens.empty()) sentences.push_back(std::move(tokens));
  }
  return sentences;
}

TokenizedText tokenize_record(const RawRecord& record) {
  TokenizedText text = tokenize(record.title);
  for (auto& sentence : tokenize(record.abstract_text)) text.push_back(std::move(sentence));
  return text;
}

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

void Vocabulary::add(std::string token) {
  const auto id = static_cast<TokenId>(tokens_.size());
  if (!index_.emplace(token, id).second) throw Error("vocabulary: duplicate token '" + token + "'");
  tokens_.push_back(std::move(token));
}

TokenId Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.find(token) != index_.end(); }

void Vocabulary::save(std::ostream& out) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("vocabulary: cannot write " + path.string());
  save(out);
}

Vocabulary Vocabulary::load(std::istream& in) {
  Vocabulary vocabulary;
  vocabulary.tokens_.clear();
  vocabulary.index_.clear();
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw Error("vocabulary line " + std::to_string(line_number) + ": missing tab");
    }
    const auto index = parse_integer(std::string_view(line).substr(tab + 1));
    if (index != static_cast<long long>(vocabulary.tokens_.size())) {
      throw Error("vocabulary line " + std::to_string(line_number) + ": indices must be dense and sorted");
    }
    vocabulary.add(line.substr(0, tab));
  }
  if (vocabulary.tokens_.size() < 2 || vocabulary.tokens_[kPad] != kPadToken ||
      vocabulary.tokens_[kUnk] != kUnkToken) {
    throw Error("vocabulary: reserved PAD/UNK entries missing");
  }
  return vocabulary;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("vocabulary: path not found: " + path.string());
  return load(in);
}

Vocabulary build_vocabulary(const std::vector<TokenizedText>& documents, std::size_t min_count) {
  if (min_count < 1) throw Error("vocabulary: min_count must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& document : documents) {
    for (const auto& sentence : document) {
      for (const auto& token : sentence) ++counts[token];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : counts) {
    if (count >= min_count) kept.emplace_back(token, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  Vocabulary vocabulary;
  vocabulary.min_count_ = min_count;
  for (auto& [token, count] : kept) vocabulary.add(std::move(token));
  return vocabulary;
}

std::size_t Document::token_count() const {
  std::size_t total = 0;
  for (const auto& sentence : sentences) total += sentence.size();
  return total;
}

Document encode(std::string owner_id, const TokenizedText& text, const Vocabulary& vocabulary,
                const EncodeLimits& limits) {
  Document document;
  document.owner_id = std::move(owner_id);
  for (const auto& sentence : text) {
    if (document.sentences.size() >= limits.max_sentences) break;
    if (sentence.empty()) continue;
    std::vector<TokenId> ids;
    const std::size_t length = std::min(sentence.size(), limits.max_tokens);
    ids.reserve(length);
    for (std::size_t t = 0; t < length; ++t) ids.push_back(vocabulary.index_of(sentence[t]));
    if (!ids.empty()) document.sentences.push_back(std::move(ids));
  }
  if (document.sentences.empty()) throw Error("empty document '" + document.owner_id + "'");
  return document;
}

TokenizedText decode(const Document& document, const Vocabulary& vocabulary) {
  TokenizedText text;
  for (const auto& sentence : document.sentences) {
    TokenizedSentence tokens;
    for (TokenId id : sentence) tokens.push_back(vocabulary.token(id));
    text.push_back(std::move(tokens));
  }
  return text;
}

std::vector<PreparedRecord> prepare_records(const std::vector<RawRecord>& records,
                                            const taxonomy::Taxonomy& taxonomy) {
  std::vector<PreparedRecord> prepared;
  prepared.reserve(records.size());
  for (const auto& record : records) {
    PreparedRecord item;
    item.paper_id = record.paper_id;
    item.author_ids = record.author_ids;
    item.year = record.year;
    item.text = tokenize_record(record);
    for (const auto& label : record.labels) {
      auto id = taxonomy.find_label(label);
      if (!id) throw Error("record '" + record.paper_id + "': unknown label '" + label + "'");
      item.labels.insert(*id);
    }
    prepared.push_back(std::move(item));
  }
  return prepared;
}

YearSplit split_by_year(const std::vector<PreparedRecord>& records, int test_year) {
  YearSplit split;
  for (const auto& record : records) {
    (record.year == test_year ? split.test : split.train).push_back(record);
  }
  if (split.test.empty()) throw Error("empty test split (no records in " + std::to_string(test_year) + ")");
  if (split.train.empty()) split.warnings.push_back("train pool is empty: every record is from the test year");
  return split;
}

std::vector<ReviewerProfile> build_reviewer_profiles(const std::vector<PreparedRecord>& records,
                                                     const Vocabulary& vocabulary,
                                                     std::size_t min_papers,
                                                     const EncodeLimits& limits) {
  if (min_papers < 1) throw Error("min_papers must be >= 1");
  std::map<std::string, std::vector<const PreparedRecord*>> by_author;
  for (const auto& record : records) {
    // An author listed twice on one paper still counts the paper once.
    std::set<std::string_view> authors(record.author_ids.begin(), record.author_ids.end());
    for (auto author : authors) by_author[std::string(author)].push_back(&record);
  }

  std::vector<ReviewerProfile> profiles;
  for (auto& [author, papers] : by_author) {
    if (papers.size() < min_papers) continue;
    std::sort(papers.begin(), papers.end(), [](const PreparedRecord* a, const PreparedRecord* b) {
      return a->year != b->year ? a->year < b->year : a->paper_id < b->paper_id;
    });
    ReviewerProfile profile;
    profile.reviewer_id = author;
    profile.publication_count = papers.size();
    TokenizedText text;
    for (const auto* paper : papers) {
      text.insert(text.end(), paper->text.begin(), paper->text.end());
      profile.label_set.merge(paper->labels);
    }
    profile.document = encode(author, text, vocabulary, limits);
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

std::vector<PaperRecord> build_paper_records(const std::vector<PreparedRecord>& records,
                                             const Vocabulary& vocabulary,
                                             const EncodeLimits& limits) {
  std::vector<PaperRecord> papers;
  papers.reserve(records.size());
  for (const auto& record : records) {
    PaperRecord paper;
    paper.paper_id = record.paper_id;
    paper.document = encode(record.paper_id, record.text, vocabulary, limits);
    paper.label_set = record.labels;
    paper.year = record.year;
    paper.author_ids = record.author_ids;
    papers.push_back(std::move(paper));
  }
  return papers;
}

}  // namespace hiepar::corpus
