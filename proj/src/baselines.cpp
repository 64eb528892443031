#include "hiepar/baselines.hpp"

#include <cmath>
#include <set>

namespace hiepar::baselines {

std::optional<double> TfidfModel::idf(TokenId token) const {
  auto it = idf_.find(token);
  if (it == idf_.end()) return std::nullopt;
  return it->second.second;
}

std::optional<std::size_t> TfidfModel::document_frequency(TokenId token) const {
  auto it = idf_.find(token);
  if (it == idf_.end()) return std::nullopt;
  return it->second.first;
}

TfidfModel fit_tfidf(std::span<const corpus::Document> documents) {
  if (documents.empty()) throw Error("fit_tfidf: empty corpus");
  TfidfModel model;
  model.document_count_ = documents.size();
  for (const auto& document : documents) {
    std::set<TokenId> seen;
    for (const auto& sentence : document.sentences) {
      for (TokenId token : sentence) {
        if (token >= corpus::Vocabulary::kFirstRegular) seen.insert(token);
      }
    }
    for (TokenId token : seen) ++model.idf_[token].first;
  }
  const auto n = static_cast<double>(model.document_count_);
  for (auto& [token, entry] : model.idf_) {
    entry.second = std::log(n / static_cast<double>(entry.first));
  }
  return model;
}

SparseVector tfidf_vector(const corpus::Document& document, const TfidfModel& model) {
  std::map<TokenId, std::size_t> counts;
  for (const auto& sentence : document.sentences) {
    for (TokenId token : sentence) ++counts[token];
  }
  SparseVector out;
  for (const auto& [token, count] : counts) {
    if (auto idf = model.idf(token)) out.emplace_back(token, static_cast<double>(count) * *idf);
  }
  return out;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  double na = 0.0, nb = 0.0;
  for (const auto& [t, w] : a) na += w * w;
  for (const auto& [t, w] : b) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Retrieval baseline_retrieve(const SparseVector& paper, std::span<const SparseVector> reviewers,
                            std::span<const std::string> reviewer_ids) {
  if (reviewers.size() != reviewer_ids.size()) throw Error("baseline_retrieve: ids and vectors differ in count");
  Retrieval best;
  for (std::size_t r = 0; r < reviewers.size(); ++r) {
    const double sim = cosine(paper, reviewers[r]);
    if (!(sim > 0.0)) continue;
    if (!best.reviewer || sim > best.similarity ||
        (sim == best.similarity && reviewer_ids[r] < reviewer_ids[*best.reviewer])) {
      best.reviewer = r;
      best.similarity = sim;
    }
  }
  return best;
}

}  // namespace hiepar::baselines
