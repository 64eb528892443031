#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hiepar/common.hpp"
#include "hiepar/taxonomy.hpp"

namespace hiepar::corpus {

// One publication as it appears in the input records file.
struct RawRecord {
  std::string paper_id;
  std::string title;
  std::string abstract_text;
  std::vector<std::string> author_ids;
  int year = 0;
  std::vector<std::string> labels;  // " > "-separated taxonomy paths
};

// Parses one line of the records file (a JSON object).
RawRecord parse_record(std::string_view line);
// Reads a line-delimited records file. Validates the per-record and
// corpus-level invariants (unique ids, non-empty labels, 4-digit years).
std::vector<RawRecord> read_records(const std::filesystem::path& path);
void validate_records(const std::vector<RawRecord>& records);

using TokenizedSentence = std::vector<std::string>;
using TokenizedText = std::vector<TokenizedSentence>;

// Lowercases ASCII, splits sentences at '.', '!' or '?' followed by
// whitespace (or end of text), and splits tokens on runs of characters
// that are not ASCII alphanumerics. Bytes >= 0x80 are kept inside tokens
// so UTF-8 words survive intact. Empty sentences are dropped.
TokenizedText tokenize(std::string_view text);

// Title followed by abstract, each tokenized on its own.
TokenizedText tokenize_record(const RawRecord& record);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kFirstRegular = 2;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  std::size_t size() const { return tokens_.size(); }
  std::size_t min_count() const { return min_count_; }
  // Unknown tokens map to kUnk.
  TokenId index_of(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }

  // "token<TAB>index" lines sorted by index.
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(std::istream& in);
  static Vocabulary load(const std::filesystem::path& path);

  friend Vocabulary build_vocabulary(const std::vector<TokenizedText>& documents,
                                     std::size_t min_count);

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::map<std::string, TokenId, std::less<>> index_;
  std::size_t min_count_ = 1;
};

// Keeps tokens with corpus frequency >= min_count; indices follow
// descending frequency, ties in lexicographic order.
Vocabulary build_vocabulary(const std::vector<TokenizedText>& documents, std::size_t min_count);

struct EncodeLimits {
  std::size_t max_sentences = 100;
  std::size_t max_tokens = 50;
};

// Word-sentence-document hierarchy of token ids.
struct Document {
  std::string owner_id;
  std::vector<std::vector<TokenId>> sentences;

  std::size_t token_count() const;
  friend bool operator==(const Document&, const Document&) = default;
};

// Maps tokens through the vocabulary and truncates to the limits, keeping
// the earliest sentences and tokens. Throws "empty document" if nothing
// remains.
Document encode(std::string owner_id, const TokenizedText& text, const Vocabulary& vocabulary,
                const EncodeLimits& limits);
TokenizedText decode(const Document& document, const Vocabulary& vocabulary);

// A record after tokenization and label resolution.
struct PreparedRecord {
  std::string paper_id;
  std::vector<std::string> author_ids;
  int year = 0;
  TokenizedText text;
  LabelSet labels;
};

// Throws on labels that are not registered in the taxonomy.
std::vector<PreparedRecord> prepare_records(const std::vector<RawRecord>& records,
                                            const taxonomy::Taxonomy& taxonomy);

struct YearSplit {
  std::vector<PreparedRecord> train;
  std::vector<PreparedRecord> test;
  std::vector<std::string> warnings;
};

// Test split = records published in test_year; train pool = the rest.
YearSplit split_by_year(const std::vector<PreparedRecord>& records, int test_year);

struct ReviewerProfile {
  std::string reviewer_id;
  Document document;
  LabelSet label_set;
  std::size_t publication_count = 0;
};

// One profile per author with at least min_papers records, sorted by
// reviewer id. The profile text concatenates the author's papers in
// (year, paper_id) order before encoding.
std::vector<ReviewerProfile> build_reviewer_profiles(const std::vector<PreparedRecord>& records,
                                                     const Vocabulary& vocabulary,
                                                     std::size_t min_papers,
                                                     const EncodeLimits& limits);

struct PaperRecord {
  std::string paper_id;
  Document document;
  LabelSet label_set;
  int year = 0;
  std::vector<std::string> author_ids;
};

std::vector<PaperRecord> build_paper_records(const std::vector<PreparedRecord>& records,
                                             const Vocabulary& vocabulary,
                                             const EncodeLimits& limits);

}  // namespace hiepar::corpus
