#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hiepar/corpus.hpp"

namespace hiepar::baselines {

// (token id, weight) pairs sorted by token id.
using SparseVector = std::vector<std::pair<TokenId, double>>;

// TF-IDF weighted bag of words: weight(t) = count(t) * ln(N / df(t)).
// Reserved vocabulary entries (PAD, UNK) are not modelled.
class TfidfModel {
 public:
  std::size_t document_count() const { return document_count_; }
  std::size_t term_count() const { return idf_.size(); }
  std::optional<double> idf(TokenId token) const;
  std::optional<std::size_t> document_frequency(TokenId token) const;

  friend TfidfModel fit_tfidf(std::span<const corpus::Document> documents);

 private:
  std::size_t document_count_ = 0;
  std::map<TokenId, std::pair<std::size_t, double>> idf_;  // token -> (df, idf)
};

TfidfModel fit_tfidf(std::span<const corpus::Document> documents);

// Tokens absent from the model are ignored.
SparseVector tfidf_vector(const corpus::Document& document, const TfidfModel& model);

double cosine(const SparseVector& a, const SparseVector& b);

struct Retrieval {
  std::optional<std::size_t> reviewer;  // index into the candidate list; nullopt = flagged
  double similarity = 0.0;
};

// Most similar reviewer by cosine; ties by ascending reviewer id. Flagged
// when the query is all-zero or no reviewer has positive similarity.
Retrieval baseline_retrieve(const SparseVector& paper, std::span<const SparseVector> reviewers,
                            std::span<const std::string> reviewer_ids);

}  // namespace hiepar::baselines
