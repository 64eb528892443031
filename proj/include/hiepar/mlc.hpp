#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hiepar/common.hpp"
#include "hiepar/encoder.hpp"

namespace hiepar::mlc {

using encoder::Index;
using encoder::Mat;
using encoder::Vec;

// One feature row per owner (reviewer or paper).
struct FeatureMatrix {
  std::vector<std::string> owner_ids;
  Mat values;  // rows = owners

  Index rows() const { return values.rows(); }
  Index dim() const { return values.cols(); }
};

enum class MlcKind { kNetworkHead, kKnn };

MlcKind kind_from_string(std::string_view name);
std::string_view to_string(MlcKind kind);

class MultiLabelClassifier {
 public:
  virtual ~MultiLabelClassifier() = default;
  virtual MlcKind kind() const = 0;
  virtual Index feature_dim() const = 0;
  virtual Index label_count() const = 0;
  // Relevance score for every label. Throws on dimension mismatch.
  virtual Vec predict_scores(const Vec& feature) const = 0;
};

// The encoder's sigmoid output layer applied to a document vector.
class NetworkHead final : public MultiLabelClassifier {
 public:
  NetworkHead(Mat weights, Vec bias);
  explicit NetworkHead(const encoder::ModelParams& params);

  MlcKind kind() const override { return MlcKind::kNetworkHead; }
  Index feature_dim() const override { return weights_.cols(); }
  Index label_count() const override { return weights_.rows(); }
  Vec predict_scores(const Vec& feature) const override;

 private:
  Mat weights_;
  Vec bias_;
};

// Cosine k-nearest-neighbour ranker. The score of label l is the sum of
// max(cosine, 0) over the k most similar training rows carrying l.
// Neighbour ties are broken by ascending training row.
class KnnClassifier final : public MultiLabelClassifier {
 public:
  KnnClassifier(const FeatureMatrix& features, std::vector<LabelSet> label_sets, Index label_count,
                std::size_t k);

  MlcKind kind() const override { return MlcKind::kKnn; }
  Index feature_dim() const override { return normalized_.cols(); }
  Index label_count() const override { return label_count_; }
  std::size_t k() const { return k_; }
  Vec predict_scores(const Vec& feature) const override;

 private:
  Mat normalized_;  // unit-length rows (zero rows stay zero)
  std::vector<LabelSet> label_sets_;
  Index label_count_;
  std::size_t k_;
};

inline constexpr std::size_t kDefaultKnnK = 10;

struct MlcOptions {
  MlcKind kind = MlcKind::kNetworkHead;
  std::size_t knn_k = kDefaultKnnK;
  Index label_count = 0;
  // Required for kNetworkHead: the trained encoder the head is taken from.
  const encoder::ModelParams* encoder = nullptr;
};

std::unique_ptr<MultiLabelClassifier> train_mlc(const MlcOptions& options, const FeatureMatrix& features,
                                                const std::vector<LabelSet>& label_sets);

// k labels by descending score; ties by ascending label id.
std::vector<LabelId> top_k(const Vec& scores, std::size_t k);

double cosine_similarity(const Vec& a, const Vec& b);

// ---------------------------------------------------------------------------
// Sparse files for external extreme classifiers.
//
// Dataset: header "N D L", then per row "l1,l2,... i1:v1 i2:v2 ..." with
// zero-based indices, features sorted by index, values in shortest
// round-trip decimal. A row without labels starts directly with its
// first feature. Zero entries are omitted.
//
// Scores: one line per row, whitespace-separated "idx:score" pairs.

struct SparseDataset {
  FeatureMatrix features;  // owner ids are "0", "1", ...
  std::vector<LabelSet> label_sets;
  Index label_count = 0;
};

void export_sparse_dataset(const FeatureMatrix& features, const std::vector<LabelSet>& label_sets,
                           Index label_count, const std::filesystem::path& path);
SparseDataset import_sparse_dataset(const std::filesystem::path& path);

// Writes each row's `keep` best labels (all when keep == 0) in descending
// score order.
void export_scores(const std::vector<Vec>& rows, std::size_t keep, const std::filesystem::path& path);
// Labels missing from a line get the lowest finite score so they rank last.
// An optional "N L" header line is accepted and validated.
std::vector<Vec> import_scores(const std::filesystem::path& path, Index label_count);

}  // namespace hiepar::mlc
