#include <gtest/gtest.h>

#include <sstream>

#include "hiepar/assign.hpp"
#include "oracles.hpp"

using namespace hiepar;
using namespace hiepar::assign;

namespace {

// Scores placing `top` first, in order, over `label_count` labels.
mlc::Vec scores_with_top(const std::vector<LabelId>& top, std::size_t label_count) {
  mlc::Vec s = mlc::Vec::Zero(static_cast<mlc::Index>(label_count));
  for (std::size_t i = 0; i < top.size(); ++i) s(top[i]) = 10.0 - static_cast<double>(i);
  return s;
}

}  // namespace

TEST(LabelOverlap, CountsSharedLabels) {
  const std::vector<LabelId> top{1277, 1824};
  EXPECT_EQ(label_overlap(top, LabelSet{50, 787, 1277, 1824}), 2u);
  EXPECT_EQ(label_overlap(top, LabelSet{1, 2}), 0u);
  EXPECT_EQ(label_overlap(top, LabelSet{5, 1277, 1824, 1900}), 2u);
}

TEST(Mlbra, CaseStudyReviewerOrder) {
  // Three reviewers all cover both predicted labels; more labels rank first.
  const std::vector<Reviewer> reviewers{
      {"r_1348", LabelSet{1277, 1824, 10, 11, 12}},
      {"r_4603", LabelSet{50, 787, 1277, 1824}},
      {"r_15377", LabelSet{1277, 1824, 20, 21, 22, 23, 24, 25}},
      {"r_9", LabelSet{1277, 3}},
  };
  const auto rec = mlbra("p_155", scores_with_top({1277, 1824}, 2000), reviewers, 2);
  EXPECT_EQ(rec.predicted_top_k, (std::vector<LabelId>{1277, 1824}));
  EXPECT_EQ(rec.best_overlap, 2u);
  ASSERT_EQ(rec.candidates.size(), 3u);
  EXPECT_EQ(rec.candidates[0].reviewer_id, "r_15377");
  EXPECT_EQ(rec.candidates[1].reviewer_id, "r_1348");
  EXPECT_EQ(rec.candidates[2].reviewer_id, "r_4603");
  for (const auto& c : rec.candidates) EXPECT_EQ(c.overlap, 2u);
  EXPECT_FALSE(rec.no_overlap);
}

TEST(Mlbra, SingleReviewer) {
  const std::vector<Reviewer> reviewers{{"only", LabelSet{4}}};
  const auto rec = mlbra("p", scores_with_top({4, 1}, 6), reviewers, 2);
  EXPECT_EQ(rec.best_overlap, 1u);
  ASSERT_EQ(rec.candidates.size(), 1u);
  EXPECT_EQ(rec.candidates[0].reviewer_id, "only");
}

TEST(Mlbra, NoOverlapFlagsAndKeepsEveryone) {
  const std::vector<Reviewer> reviewers{{"a", LabelSet{7}}, {"b", LabelSet{8, 9}}};
  const auto rec = mlbra("p", scores_with_top({0, 1}, 10), reviewers, 2);
  EXPECT_TRUE(rec.no_overlap);
  EXPECT_EQ(rec.best_overlap, 0u);
  ASSERT_EQ(rec.candidates.size(), 2u);
  EXPECT_EQ(rec.candidates[0].reviewer_id, "b");
}

TEST(Mlbra, ExcludedReviewersAreSkipped) {
  const std::vector<Reviewer> reviewers{{"author", LabelSet{0, 1}}, {"other", LabelSet{0}}};
  const auto rec = mlbra("p", scores_with_top({0, 1}, 3), reviewers, 2, {"author"});
  ASSERT_EQ(rec.candidates.size(), 1u);
  EXPECT_EQ(rec.candidates[0].reviewer_id, "other");
  EXPECT_THROW(mlbra("p", scores_with_top({0}, 3), reviewers, 1, {"author", "other"}), Error);
  EXPECT_THROW(mlbra("p", scores_with_top({0}, 3), {}, 1), Error);
}

TEST(Mlbra, MatchesExhaustiveOracle) {
  RandomStream rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t label_count = 5 + rng.below(46);
    const std::size_t reviewer_count = 1 + rng.below(200);
    std::vector<Reviewer> reviewers;
    for (std::size_t r = 0; r < reviewer_count; ++r) {
      reviewers.push_back({"r" + std::to_string(rng.below(100000)) + "_" + std::to_string(r),
                           oracle::random_label_set(rng, label_count, std::min<std::size_t>(8, label_count))});
    }
    mlc::Vec scores(static_cast<mlc::Index>(label_count));
    for (mlc::Index l = 0; l < scores.size(); ++l) scores(l) = static_cast<double>(rng.below(10));
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(10, label_count));
    const auto rec = mlbra("p", scores, reviewers, k);
    std::vector<double> raw(scores.data(), scores.data() + scores.size());
    const auto expected = oracle::mlbra(oracle::top_k(raw, k), reviewers);
    EXPECT_EQ(rec.best_overlap, expected.best_overlap);
    ASSERT_EQ(rec.candidates.size(), expected.ranked.size());
    for (std::size_t i = 0; i < expected.ranked.size(); ++i) EXPECT_EQ(rec.candidates[i].reviewer_id, expected.ranked[i]);
  }
}

TEST(SimilarReviewers, IdenticalVectorRanksFirst) {
  mlc::FeatureMatrix f;
  f.owner_ids = {"a", "b", "c"};
  f.values.resize(3, 2);
  f.values << 1, 0, 0.6, 0.8, 0, 1;
  const mlc::Vec q = f.values.row(1).transpose();
  const auto top = similar_reviewers(q, f);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].reviewer_id, "b");
  EXPECT_NEAR(top[0].similarity, 1.0, 1e-15);
  EXPECT_EQ(kDefaultSimilarReviewers, 5u);
}

TEST(SimilarReviewers, MatchesBruteForceSort) {
  RandomStream rng(9);
  mlc::FeatureMatrix f;
  f.values.resize(50, 4);
  for (int r = 0; r < 50; ++r) {
    f.owner_ids.push_back("r" + std::to_string(r));
    for (int j = 0; j < 4; ++j) f.values(r, j) = rng.uniform(-1, 1);
  }
  mlc::Vec q(4);
  for (int j = 0; j < 4; ++j) q(j) = rng.uniform(-1, 1);
  std::vector<std::pair<double, std::string>> all;
  for (int r = 0; r < 50; ++r) {
    const mlc::Vec row = f.values.row(r).transpose();
    all.emplace_back(-row.dot(q) / (row.norm() * q.norm()), f.owner_ids[static_cast<std::size_t>(r)]);
  }
  std::sort(all.begin(), all.end());
  const auto top = similar_reviewers(q, f, 10);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(top[i].reviewer_id, all[i].second);
}

TEST(AssignmentReport, WriteReadRoundTrip) {
  const std::vector<Reviewer> reviewers{{"a:1", LabelSet{0, 1}}, {"b", LabelSet{0}}, {"c", LabelSet{2}}};
  std::vector<Recommendation> recs{mlbra("p1", scores_with_top({0, 1}, 3), reviewers, 2),
                                   mlbra("p2", scores_with_top({2}, 3), reviewers, 1)};
  std::stringstream buffer;
  write_assignment_report(buffer, recs);
  EXPECT_EQ(buffer.str(), "p1\t2\ta:1:2:2\np2\t1\tc:1:1\n");
  const auto lines = read_assignment_report(buffer);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0].candidates[0], (Candidate{"a:1", 2, 2}));
  std::stringstream bad("p1\t2\n");
  EXPECT_THROW(read_assignment_report(bad), Error);
}

TEST(AssignmentReport, CandidateLimit) {
  const std::vector<Reviewer> reviewers{{"a", LabelSet{0}}, {"b", LabelSet{0}}, {"c", LabelSet{0}}};
  const std::vector<Recommendation> recs{mlbra("p", scores_with_top({0}, 2), reviewers, 1)};
  std::stringstream buffer;
  write_assignment_report(buffer, recs, 2);
  EXPECT_EQ(buffer.str(), "p\t1\ta:1:1;b:1:1\n");
}
