#include "hiepar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hiepar::eval {

namespace {

void require_truth(const LabelSet& truth) {
  if (truth.empty()) throw Error("metric: empty true label set");
}

double discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

std::string fixed4(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

}  // namespace

double recall_at_k(std::span<const LabelId> predicted_top_k, const LabelSet& true_labels) {
  require_truth(true_labels);
  return static_cast<double>(count_in(predicted_top_k, true_labels)) /
         static_cast<double>(true_labels.size());
}

double dcg_at_k(std::span<const LabelId> ranked, const LabelSet& true_labels, std::size_t k) {
  require_truth(true_labels);
  if (k < 1) throw Error("metric: k must be >= 1");
  double dcg = 0.0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (true_labels.contains(ranked[i])) dcg += discount(i + 1);
  }
  return dcg;
}

double ndcg_at_k(std::span<const LabelId> ranked, const LabelSet& true_labels, std::size_t k) {
  const double dcg = dcg_at_k(ranked, true_labels, k);
  double ideal = 0.0;
  const std::size_t n = std::min(k, true_labels.size());
  for (std::size_t i = 1; i <= n; ++i) ideal += discount(i);
  return dcg / ideal;
}

double accuracy(std::span<const AssignmentOutcome> outcomes) {
  if (outcomes.empty()) throw Error("accuracy: no papers");
  std::size_t hits = 0;
  for (const auto& outcome : outcomes) {
    if (outcome.top_reviewer_labels && outcome.paper_labels.intersects(*outcome.top_reviewer_labels)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double coarse_accuracy(std::span<const AssignmentOutcome> outcomes, const taxonomy::Taxonomy& taxonomy,
                       taxonomy::CoarseningStrategy strategy) {
  if (outcomes.empty()) throw Error("coarse_accuracy: no papers");
  std::size_t hits = 0;
  for (const auto& outcome : outcomes) {
    if (outcome.top_reviewer_labels &&
        taxonomy::coarse_match(outcome.paper_labels, *outcome.top_reviewer_labels, taxonomy, strategy)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

MetricsReport ranking_metrics(const std::vector<std::vector<LabelId>>& ranked,
                              const std::vector<LabelSet>& truths, const std::vector<std::size_t>& k_grid) {
  if (ranked.size() != truths.size()) throw Error("metrics: predictions and truths differ in count");
  if (ranked.empty()) throw Error("metrics: no papers");
  MetricsReport report;
  report.k_grid = k_grid;
  report.paper_count = ranked.size();
  report.recall.assign(k_grid.size(), 0.0);
  report.ndcg.assign(k_grid.size(), 0.0);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    for (std::size_t g = 0; g < k_grid.size(); ++g) {
      const std::size_t k = std::min(k_grid[g], ranked[i].size());
      report.recall[g] += recall_at_k(std::span(ranked[i]).first(k), truths[i]);
      report.ndcg[g] += ndcg_at_k(ranked[i], truths[i], k_grid[g]);
    }
  }
  for (std::size_t g = 0; g < k_grid.size(); ++g) {
    report.recall[g] /= static_cast<double>(ranked.size());
    report.ndcg[g] /= static_cast<double>(ranked.size());
  }
  return report;
}

std::string format_table(const MetricsReport& report) {
  std::ostringstream out;
  out << "papers: " << report.paper_count << "\n\n";
  out << "metric ";
  for (auto k : report.k_grid) {
    std::string header = "@" + std::to_string(k);
    out << std::string(header.size() < 8 ? 8 - header.size() : 1, ' ') << header;
  }
  out << '\n';
  auto row = [&](const char* name, const std::vector<double>& values) {
    out << name;
    for (double v : values) out << "  " << fixed4(v);
    out << '\n';
  };
  row("R      ", report.recall);
  row("NDCG   ", report.ndcg);
  if (report.accuracy || report.coarse_accuracy_strategy1 || report.coarse_accuracy_strategy2) out << '\n';
  if (report.accuracy) out << "accuracy              " << fixed4(*report.accuracy) << '\n';
  if (report.coarse_accuracy_strategy1) {
    out << "accuracy (strategy 1) " << fixed4(*report.coarse_accuracy_strategy1) << '\n';
  }
  if (report.coarse_accuracy_strategy2) {
    out << "accuracy (strategy 2) " << fixed4(*report.coarse_accuracy_strategy2) << '\n';
  }
  return out.str();
}

std::string format_key_values(const MetricsReport& report) {
  std::ostringstream out;
  out << "papers=" << report.paper_count << '\n';
  for (std::size_t g = 0; g < report.k_grid.size(); ++g) {
    out << "recall@" << report.k_grid[g] << '=' << format_double(report.recall[g]) << '\n';
  }
  for (std::size_t g = 0; g < report.k_grid.size(); ++g) {
    out << "ndcg@" << report.k_grid[g] << '=' << format_double(report.ndcg[g]) << '\n';
  }
  if (report.accuracy) out << "accuracy=" << format_double(*report.accuracy) << '\n';
  if (report.coarse_accuracy_strategy1) {
    out << "coarse_accuracy_s1=" << format_double(*report.coarse_accuracy_strategy1) << '\n';
  }
  if (report.coarse_accuracy_strategy2) {
    out << "coarse_accuracy_s2=" << format_double(*report.coarse_accuracy_strategy2) << '\n';
  }
  return out.str();
}

}  // namespace hiepar::eval
