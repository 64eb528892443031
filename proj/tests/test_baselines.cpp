#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "hiepar/baselines.hpp"
#include "oracles.hpp"

using namespace hiepar;
using namespace hiepar::baselines;

namespace {

corpus::Document doc(std::vector<TokenId> tokens, std::string owner = "d") {
  return corpus::Document{std::move(owner), {std::move(tokens)}};
}

}  // namespace

TEST(Tfidf, IdfValues) {
  const std::vector<corpus::Document> docs{doc({2, 3}), doc({2, 4}), doc({2, 4}), doc({2, 5, 5})};
  const auto model = fit_tfidf(docs);
  EXPECT_EQ(model.document_count(), 4u);
  EXPECT_EQ(*model.idf(2), 0.0);
  EXPECT_NEAR(*model.idf(3), 1.3862943611198906, 1e-15);
  EXPECT_EQ(*model.document_frequency(4), 2u);
  EXPECT_EQ(*model.document_frequency(5), 1u);
  EXPECT_FALSE(model.idf(9).has_value());
  EXPECT_FALSE(model.idf(corpus::Vocabulary::kUnk).has_value());
}

TEST(Tfidf, EmptyCorpusIsAnError) { EXPECT_THROW(fit_tfidf({}), Error); }

TEST(Tfidf, WeightIsCountTimesIdf) {
  const std::vector<corpus::Document> docs{doc({3}), doc({4})};
  const auto model = fit_tfidf(docs);
  const auto v = tfidf_vector(doc({3, 7, 3}), model);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].first, 3u);
  EXPECT_EQ(v[0].second, 2.0 * std::log(2.0));
  EXPECT_TRUE(tfidf_vector(doc({8, 9}), model).empty());
}

TEST(Tfidf, RandomCorpusMatchesCountingOracle) {
  RandomStream rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<corpus::Document> docs;
    const std::size_t n = 1 + rng.below(12);
    for (std::size_t i = 0; i < n; ++i) docs.push_back(oracle::random_document(rng, 15, 3, 6));
    const auto model = fit_tfidf(docs);
    std::map<TokenId, std::size_t> df;
    for (const auto& d : docs) {
      std::set<TokenId> seen;
      for (const auto& s : d.sentences) seen.insert(s.begin(), s.end());
      for (TokenId t : seen) ++df[t];
    }
    EXPECT_EQ(model.term_count(), df.size());
    for (const auto& [t, count] : df) {
      EXPECT_EQ(*model.document_frequency(t), count);
      EXPECT_EQ(*model.idf(t), std::log(static_cast<double>(n) / static_cast<double>(count)));
    }
    const auto query = oracle::random_document(rng, 15, 3, 6);
    std::map<TokenId, double> tf;
    for (const auto& s : query.sentences) {
      for (TokenId t : s) tf[t] += 1.0;
    }
    SparseVector expected;
    for (const auto& [t, count] : tf) {
      if (df.count(t)) expected.emplace_back(t, count * std::log(static_cast<double>(n) / static_cast<double>(df[t])));
    }
    EXPECT_EQ(tfidf_vector(query, model), expected);
  }
}

TEST(Retrieve, IdenticalTextComesFirst) {
  const std::vector<corpus::Document> reviewers{doc({2, 3, 4}), doc({5, 6, 7}), doc({2, 6, 8})};
  const auto model = fit_tfidf(reviewers);
  std::vector<SparseVector> vectors;
  for (const auto& r : reviewers) vectors.push_back(tfidf_vector(r, model));
  const std::vector<std::string> ids{"a", "b", "c"};
  const auto hit = baseline_retrieve(tfidf_vector(doc({5, 6, 7}), model), vectors, ids);
  ASSERT_TRUE(hit.reviewer.has_value());
  EXPECT_EQ(*hit.reviewer, 1u);
  EXPECT_NEAR(hit.similarity, 1.0, 1e-15);
}

TEST(Retrieve, OrthogonalVocabulariesAreFlagged) {
  const std::vector<corpus::Document> reviewers{doc({2, 3}), doc({4, 5})};
  const auto model = fit_tfidf(reviewers);
  std::vector<SparseVector> vectors;
  for (const auto& r : reviewers) vectors.push_back(tfidf_vector(r, model));
  const std::vector<std::string> ids{"a", "b"};
  EXPECT_FALSE(baseline_retrieve(tfidf_vector(doc({9}), model), vectors, ids).reviewer.has_value());
  EXPECT_FALSE(baseline_retrieve(SparseVector{{7, 1.0}}, vectors, ids).reviewer.has_value());
}

TEST(Retrieve, TiesGoToSmallestId) {
  const std::vector<SparseVector> vectors{{{2, 1.0}}, {{2, 3.0}}, {{2, 2.0}}};
  const std::vector<std::string> ids{"m", "c", "x"};
  const auto hit = baseline_retrieve(SparseVector{{2, 0.5}}, vectors, ids);
  EXPECT_EQ(*hit.reviewer, 1u);
}

TEST(Retrieve, RandomInstanceMatchesBruteForceAndScaling) {
  RandomStream rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SparseVector> vectors;
    std::vector<std::string> ids;
    for (int r = 0; r < 50; ++r) {
      SparseVector v;
      for (TokenId t = 2; t < 30; ++t) {
        if (rng.below(4) == 0) v.emplace_back(t, rng.uniform(0.1, 3.0));
      }
      vectors.push_back(v);
      ids.push_back("r" + std::to_string(1000 - r));
    }
    SparseVector q;
    for (TokenId t = 2; t < 30; ++t) {
      if (rng.below(3) == 0) q.emplace_back(t, rng.uniform(0.1, 3.0));
    }
    std::optional<std::size_t> best;
    double best_sim = 0.0;
    for (std::size_t r = 0; r < vectors.size(); ++r) {
      std::map<TokenId, double> m(vectors[r].begin(), vectors[r].end());
      double dot = 0, nq = 0, nr = 0;
      for (auto [t, w] : q) {
        nq += w * w;
        if (m.count(t)) dot += w * m[t];
      }
      for (auto [t, w] : vectors[r]) nr += w * w;
      if (nq == 0 || nr == 0) continue;
      const double sim = dot / std::sqrt(nq * nr);
      if (sim > 0 && (!best || sim > best_sim || (sim == best_sim && ids[r] < ids[*best]))) {
        best = r;
        best_sim = sim;
      }
    }
    const auto hit = baseline_retrieve(q, vectors, ids);
    EXPECT_EQ(hit.reviewer, best);
    SparseVector scaled = q;
    for (auto& [t, w] : scaled) w *= 4.0;
    EXPECT_EQ(baseline_retrieve(scaled, vectors, ids).reviewer, best);
  }
}
