#pragma once

#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hiepar/common.hpp"
#include "hiepar/mlc.hpp"

namespace hiepar::assign {

struct Reviewer {
  std::string id;
  LabelSet labels;
};

struct Candidate {
  std::string reviewer_id;
  std::size_t overlap = 0;
  std::size_t label_count = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct Recommendation {
  std::string paper_id;
  std::vector<LabelId> predicted_top_k;
  std::size_t best_overlap = 0;
  std::vector<Candidate> candidates;
  // Set when no reviewer shares any predicted label; candidates then hold
  // every eligible reviewer ordered by label count.
  bool no_overlap = false;
};

// |top_k ∩ reviewer_labels|
std::size_t label_overlap(std::span<const LabelId> predicted_top_k, const LabelSet& reviewer_labels);

inline constexpr std::size_t kDefaultMlbraK = 5;

// Multi-label based reviewer assignment. Reviewers reaching the maximum
// overlap are ranked by descending label count, then ascending id.
// Reviewers listed in `excluded` (e.g. the paper's own authors) are skipped.
Recommendation mlbra(const std::string& paper_id, const mlc::Vec& paper_scores,
                     std::span<const Reviewer> reviewers, std::size_t k,
                     const std::set<std::string>& excluded = {});

struct SimilarReviewer {
  std::string reviewer_id;
  double similarity = 0.0;
};

inline constexpr std::size_t kDefaultSimilarReviewers = 5;

// Top-n reviewers by cosine similarity of representation vectors; ties by
// ascending reviewer id. Zero-norm vectors have similarity 0.
std::vector<SimilarReviewer> similar_reviewers(const mlc::Vec& paper_vector,
                                               const mlc::FeatureMatrix& reviewer_vectors,
                                               std::size_t n = kDefaultSimilarReviewers);

// One line per paper: "paper_id<TAB>best_overlap<TAB>rid:overlap:count;rid:overlap:count...".
// At most `max_candidates` candidates are written (all when 0).
void write_assignment_report(std::ostream& out, std::span<const Recommendation> recommendations,
                             std::size_t max_candidates = 0);

struct AssignmentLine {
  std::string paper_id;
  std::size_t best_overlap = 0;
  std::vector<Candidate> candidates;
};

std::vector<AssignmentLine> read_assignment_report(std::istream& in);

}  // namespace hiepar::assign
