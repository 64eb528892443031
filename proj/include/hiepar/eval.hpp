#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hiepar/common.hpp"
#include "hiepar/taxonomy.hpp"

namespace hiepar::eval {

// Fraction of the true labels present in the predicted top-k list.
double recall_at_k(std::span<const LabelId> predicted_top_k, const LabelSet& true_labels);

// sum_{n=1..k} 1{ranked[n] in truth} / log2(n + 1). Positions past the end
// of `ranked` count as misses.
double dcg_at_k(std::span<const LabelId> ranked, const LabelSet& true_labels, std::size_t k);
// DCG normalized by the ideal DCG over min(k, |truth|) positions.
double ndcg_at_k(std::span<const LabelId> ranked, const LabelSet& true_labels, std::size_t k);

// One evaluated paper: its true labels and the true labels of the first
// recommended reviewer (nullopt when the paper was flagged or no reviewer
// was returned, which counts as a failure).
struct AssignmentOutcome {
  LabelSet paper_labels;
  std::optional<LabelSet> top_reviewer_labels;
};

double accuracy(std::span<const AssignmentOutcome> outcomes);
double coarse_accuracy(std::span<const AssignmentOutcome> outcomes, const taxonomy::Taxonomy& taxonomy,
                       taxonomy::CoarseningStrategy strategy);

inline const std::vector<std::size_t> kDefaultKGrid = {1, 3, 5, 7, 10, 13, 25, 50};

struct MetricsReport {
  std::vector<std::size_t> k_grid;
  std::vector<double> recall;  // mean Recall@k per grid entry
  std::vector<double> ndcg;    // mean NDCG@k per grid entry
  std::optional<double> accuracy;
  std::optional<double> coarse_accuracy_strategy1;
  std::optional<double> coarse_accuracy_strategy2;
  std::size_t paper_count = 0;
};

// Averages Recall@k and NDCG@k over papers. `ranked` holds each paper's
// labels in predicted order (at least max(k_grid) long, or all labels).
MetricsReport ranking_metrics(const std::vector<std::vector<LabelId>>& ranked,
                              const std::vector<LabelSet>& truths, const std::vector<std::size_t>& k_grid);

// Aligned plain-text table.
std::string format_table(const MetricsReport& report);
// "name=value" lines, e.g. "recall@5=0.0364".
std::string format_key_values(const MetricsReport& report);

}  // namespace hiepar::eval
