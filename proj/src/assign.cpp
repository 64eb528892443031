#include "hiepar/assign.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

namespace hiepar::assign {

std::size_t label_overlap(std::span<const LabelId> predicted_top_k, const LabelSet& reviewer_labels) {
  return count_in(predicted_top_k, reviewer_labels);
}

Recommendation mlbra(const std::string& paper_id, const mlc::Vec& paper_scores,
                     std::span<const Reviewer> reviewers, std::size_t k,
                     const std::set<std::string>& excluded) {
  if (reviewers.empty()) throw Error("mlbra: no reviewers");
  Recommendation rec;
  rec.paper_id = paper_id;
  rec.predicted_top_k = mlc::top_k(paper_scores, k);

  std::vector<Candidate> scored;
  scored.reserve(reviewers.size());
  for (const auto& reviewer : reviewers) {
    if (excluded.contains(reviewer.id)) continue;
    scored.push_back({reviewer.id, label_overlap(rec.predicted_top_k, reviewer.labels), reviewer.labels.size()});
    rec.best_overlap = std::max(rec.best_overlap, scored.back().overlap);
  }
  if (scored.empty()) throw Error("mlbra: every reviewer is excluded for paper '" + paper_id + "'");

  for (auto& candidate : scored) {
    if (candidate.overlap == rec.best_overlap) rec.candidates.push_back(std::move(candidate));
  }
  std::sort(rec.candidates.begin(), rec.candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.label_count != b.label_count ? a.label_count > b.label_count : a.reviewer_id < b.reviewer_id;
  });
  rec.no_overlap = rec.best_overlap == 0;
  return rec;
}

std::vector<SimilarReviewer> similar_reviewers(const mlc::Vec& paper_vector,
                                               const mlc::FeatureMatrix& reviewer_vectors,
                                               std::size_t n) {
  if (n < 1) throw Error("similar_reviewers: n must be >= 1");
  if (paper_vector.size() != reviewer_vectors.dim()) throw Error("similar_reviewers: dimension mismatch");
  std::vector<SimilarReviewer> all;
  all.reserve(reviewer_vectors.owner_ids.size());
  for (Eigen::Index r = 0; r < reviewer_vectors.rows(); ++r) {
    all.push_back({reviewer_vectors.owner_ids[static_cast<std::size_t>(r)],
                   mlc::cosine_similarity(paper_vector, reviewer_vectors.values.row(r).transpose())});
  }
  const std::size_t keep = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [](const SimilarReviewer& a, const SimilarReviewer& b) {
                      return a.similarity != b.similarity ? a.similarity > b.similarity
                                                          : a.reviewer_id < b.reviewer_id;
                    });
  all.resize(keep);
  return all;
}

void write_assignment_report(std::ostream& out, std::span<const Recommendation> recommendations,
                             std::size_t max_candidates) {
  for (const auto& rec : recommendations) {
    out << rec.paper_id << '\t' << rec.best_overlap << '\t';
    const std::size_t count =
        max_candidates == 0 ? rec.candidates.size() : std::min(max_candidates, rec.candidates.size());
    for (std::size_t i = 0; i < count; ++i) {
      const auto& c = rec.candidates[i];
      if (i > 0) out << ';';
      out << c.reviewer_id << ':' << c.overlap << ':' << c.label_count;
    }
    out << '\n';
  }
}

std::vector<AssignmentLine> read_assignment_report(std::istream& in) {
  std::vector<AssignmentLine> lines;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    auto bad = [&](const std::string& what) {
      return Error("assignment report line " + std::to_string(line_number) + ": " + what);
    };
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) throw bad("expected three tab-separated fields");
    AssignmentLine entry;
    entry.paper_id = line.substr(0, tab1);
    entry.best_overlap = static_cast<std::size_t>(parse_integer(std::string_view(line).substr(tab1 + 1, tab2 - tab1 - 1)));
    std::string_view list = std::string_view(line).substr(tab2 + 1);
    while (!list.empty()) {
      const auto semi = list.find(';');
      const auto item = list.substr(0, semi);
      // Reviewer ids may contain ':'; overlap and count are the last two fields.
      const auto c2 = item.rfind(':');
      const auto c1 = c2 == std::string_view::npos || c2 == 0 ? std::string_view::npos : item.rfind(':', c2 - 1);
      if (c1 == std::string_view::npos) throw bad("malformed candidate '" + std::string(item) + "'");
      entry.candidates.push_back({std::string(item.substr(0, c1)),
                                  static_cast<std::size_t>(parse_integer(item.substr(c1 + 1, c2 - c1 - 1))),
                                  static_cast<std::size_t>(parse_integer(item.substr(c2 + 1)))});
      if (semi == std::string_view::npos) break;
      list.remove_prefix(semi + 1);
    }
    lines.push_back(std::move(entry));
  }
  return lines;
}

}  // namespace hiepar::assign
