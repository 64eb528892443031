#include <algorithm>
#include <numeric>

#include "hiepar/mlc.hpp"

namespace hiepar::mlc {

MlcKind kind_from_string(std::string_view name) {
  if (name == "network_head") return MlcKind::kNetworkHead;
  if (name == "knn") return MlcKind::kKnn;
  throw Error("mlc: unknown classifier kind '" + std::string(name) + "'");
}

std::string_view to_string(MlcKind kind) {
  return kind == MlcKind::kNetworkHead ? "network_head" : "knn";
}

NetworkHead::NetworkHead(Mat weights, Vec bias) : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.rows() != bias_.size()) throw Error("network_head: weight/bias size mismatch");
}

NetworkHead::NetworkHead(const encoder::ModelParams& params)
    : NetworkHead(params.output_weights, params.output_bias) {}

Vec NetworkHead::predict_scores(const Vec& feature) const {
  if (feature.size() != weights_.cols()) {
    throw Error("network_head: feature dimension " + std::to_string(feature.size()) + " != " +
                std::to_string(weights_.cols()));
  }
  const Vec scores = weights_ * feature + bias_;
  return scores.unaryExpr([](double f) { return encoder::sigmoid(f); });
}

KnnClassifier::KnnClassifier(const FeatureMatrix& features, std::vector<LabelSet> label_sets,
                             Index label_count, std::size_t k)
    : normalized_(features.values), label_sets_(std::move(label_sets)), label_count_(label_count), k_(k) {
  if (normalized_.rows() == 0) throw Error("knn: empty training set");
  if (static_cast<std::size_t>(normalized_.rows()) != label_sets_.size()) {
    throw Error("knn: feature rows and label sets differ in count");
  }
  if (k_ == 0) throw Error("knn: k must be positive");
  for (Index r = 0; r < normalized_.rows(); ++r) {
    const double norm = normalized_.row(r).norm();
    if (norm > 0.0) normalized_.row(r) /= norm;
  }
  for (const auto& set : label_sets_) {
    if (!set.empty() && set.ids().back() >= static_cast<LabelId>(label_count_)) {
      throw Error("knn: label id outside label space");
    }
  }
}

Vec KnnClassifier::predict_scores(const Vec& feature) const {
  if (feature.size() != normalized_.cols()) {
    throw Error("knn: feature dimension " + std::to_string(feature.size()) + " != " +
                std::to_string(normalized_.cols()));
  }
  Vec scores = Vec::Zero(label_count_);
  const double norm = feature.norm();
  if (norm == 0.0) return scores;
  const Vec similarity = normalized_ * (feature / norm);

  std::vector<Index> rows(static_cast<std::size_t>(similarity.size()));
  std::iota(rows.begin(), rows.end(), Index{0});
  const std::size_t k = std::min(k_, rows.size());
  std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end(),
                    [&](Index a, Index b) {
                      return similarity[a] != similarity[b] ? similarity[a] > similarity[b] : a < b;
                    });
  for (std::size_t n = 0; n < k; ++n) {
    const Index row = rows[n];
    const double weight = std::max(similarity[row], 0.0);
    for (LabelId id : label_sets_[static_cast<std::size_t>(row)]) scores[id] += weight;
  }
  return scores;
}

std::unique_ptr<MultiLabelClassifier> train_mlc(const MlcOptions& options, const FeatureMatrix& features,
                                                const std::vector<LabelSet>& label_sets) {
  if (features.rows() == 0) throw Error("mlc: empty training set");
  if (static_cast<std::size_t>(features.rows()) != label_sets.size()) {
    throw Error("mlc: feature rows and label sets differ in count");
  }
  switch (options.kind) {
    case MlcKind::kNetworkHead: {
      if (options.encoder == nullptr) throw Error("mlc: network_head requires a trained encoder");
      auto head = std::make_unique<NetworkHead>(*options.encoder);
      if (head->feature_dim() != features.dim()) throw Error("mlc: feature dimension does not match encoder");
      return head;
    }
    case MlcKind::kKnn:
      return std::make_unique<KnnClassifier>(features, label_sets, options.label_count, options.knn_k);
  }
  throw Error("mlc: unknown classifier kind");
}

std::vector<LabelId> top_k(const Vec& scores, std::size_t k) {
  if (k < 1 || k > static_cast<std::size_t>(scores.size())) {
    throw Error("top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(scores.size()) + "]");
  }
  std::vector<LabelId> ids(static_cast<std::size_t>(scores.size()));
  std::iota(ids.begin(), ids.end(), LabelId{0});
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                    [&](LabelId a, LabelId b) {
                      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                    });
  ids.resize(k);
  return ids;
}

double cosine_similarity(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw Error("cosine: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace hiepar::mlc
