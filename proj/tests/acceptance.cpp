// Acceptance runner: one PASS/FAIL/SKIP line per criterion, nonzero exit
// when anything fails. The optional argument is a scratch directory for
// the end-to-end runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hiepar/app.hpp"
#include "hiepar/assign.hpp"
#include "hiepar/corpus.hpp"
#include "hiepar/encoder.hpp"
#include "hiepar/eval.hpp"
#include "hiepar/mlc.hpp"
#include "hiepar/synthetic.hpp"
#include "hiepar/taxonomy.hpp"
#include "oracles.hpp"

using namespace hiepar;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using encoder::Index;
using encoder::Vec;

namespace {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome fail(std::string detail) { return {Verdict::kFail, std::move(detail)}; }
Outcome check(bool ok, std::string detail) { return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)}; }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

std::map<std::string, double> read_key_values(const fs::path& path) {
  std::map<std::string, double> values;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    try {
      values[line.substr(0, eq)] = parse_double(line.substr(eq + 1));
    } catch (const Error&) {
    }
  }
  return values;
}

encoder::ModelDims toy_dims(Index vocab = 20) {
  encoder::ModelDims dims;
  dims.vocab = vocab;
  dims.embed = 4;
  dims.hidden = 3;
  dims.attention = 3;
  dims.labels = 4;
  return dims;
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto start = Clock::now();
  RandomStream rng(101);
  const auto params = encoder::ModelParams::random(toy_dims(), rng, 0.5);
  const std::vector<corpus::Document> docs{oracle::random_document(rng, 20, 3, 5, "a"),
                                           oracle::random_document(rng, 20, 3, 5, "b")};
  const std::vector<LabelSet> labels{LabelSet{0, 2}, LabelSet{3}};
  const std::vector<encoder::Example> batch{{&docs[0], &labels[0]}, {&docs[1], &labels[1]}};
  const auto result = oracle::check_gradients(batch, params, 1e-5);
  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << "max relative error " << result.max_relative_error << " over " << result.coordinates
         << " coordinates (worst " << result.worst_tensor << "), " << elapsed << " s";
  return check(result.max_relative_error < 1e-4 && elapsed < 60.0, detail.str());
}

bool within_hull(const Vec& value, const std::vector<oracle::Vector>& points, double tol) {
  for (Index j = 0; j < value.size(); ++j) {
    double lo = points[0][static_cast<std::size_t>(j)], hi = lo;
    for (const auto& p : points) {
      lo = std::min(lo, p[static_cast<std::size_t>(j)]);
      hi = std::max(hi, p[static_cast<std::size_t>(j)]);
    }
    if (value(j) < lo - tol || value(j) > hi + tol) return false;
  }
  return true;
}

Outcome attention_invariants() {
  RandomStream rng(102);
  double worst_sum = 0.0;
  std::size_t hull_violations = 0, single_violations = 0;
  for (int pass_index = 0; pass_index < 1000; ++pass_index) {
    const auto params = encoder::ModelParams::random(toy_dims(30), rng, 1.0);
    const auto doc = oracle::random_document(rng, 30, 4, 6);
    const auto encoding = encoder::encode_document(doc, params);
    const auto reference = oracle::encode_document(doc, params);
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      const auto& w = encoding.attention.word_weights[s];
      worst_sum = std::max(worst_sum, std::abs(w.sum() - 1.0));
      if (doc.sentences[s].size() == 1 && w(0) != 1.0) ++single_violations;
      const auto sentence = encoder::encode_sentence(doc.sentences[s], params);
      if (!within_hull(sentence.vector, reference.word_states[s], 1e-12)) ++hull_violations;
    }
    worst_sum = std::max(worst_sum, std::abs(encoding.attention.sentence_weights.sum() - 1.0));
    if (doc.sentences.size() == 1 && encoding.attention.sentence_weights(0) != 1.0) ++single_violations;
    if (!within_hull(encoding.vector, reference.sentence_states, 1e-12)) ++hull_violations;
  }
  Vec one(1);
  one << 3.7;
  if (encoder::softmax(one)(0) != 1.0) ++single_violations;
  std::ostringstream detail;
  detail << "max |sum-1| " << worst_sum << ", hull violations " << hull_violations << ", single-element violations "
         << single_violations;
  return check(worst_sum <= 1e-6 && hull_violations == 0 && single_violations == 0, detail.str());
}

Outcome loss_oracle() {
  RandomStream rng(103);
  double worst = 0.0;
  for (int b = 0; b < 1000; ++b) {
    const std::size_t docs = 1 + rng.below(8), labels = 1 + rng.below(12);
    std::vector<Vec> scores, targets;
    std::vector<oracle::Vector> raw_scores, raw_targets;
    for (std::size_t d = 0; d < docs; ++d) {
      Vec f(static_cast<Index>(labels)), y(static_cast<Index>(labels));
      for (std::size_t l = 0; l < labels; ++l) {
        f(static_cast<Index>(l)) = rng.uniform(-10.0, 10.0);
        y(static_cast<Index>(l)) = static_cast<double>(rng.below(2));
      }
      scores.push_back(f);
      targets.push_back(y);
      raw_scores.emplace_back(f.data(), f.data() + f.size());
      raw_targets.emplace_back(y.data(), y.data() + y.size());
    }
    worst = std::max(worst, std::abs(encoder::bce_loss(scores, targets) - oracle::naive_bce(raw_scores, raw_targets)));
  }
  const std::vector<Vec> f{Vec::Zero(2)};
  Vec y(2);
  y << 1.0, 0.0;
  const std::vector<Vec> t{y};
  const double two_ln2 = std::abs(encoder::bce_loss(f, t) - 2.0 * std::log(2.0));
  std::ostringstream detail;
  detail << "max deviation from naive " << worst << ", |bce([1,0],[0,0]) - 2ln2| " << two_ln2;
  return check(worst <= 1e-9 && two_ln2 <= 1e-12, detail.str());
}

Outcome metric_oracles() {
  RandomStream rng(104);
  const auto tax = taxonomy::Taxonomy::load({"R > A > x", "R > A > y > z", "R > B > u > v > w", "R > B > u > q",
                                             "R > C > m", "R > A > y > n > o > p", "R > C > m2 > m3 > m4",
                                             "R > D > e > f > g > h > i"});
  std::size_t mismatches = 0;
  double worst_ndcg = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t label_count = 2 + rng.below(50);
    const auto truth = oracle::random_label_set(rng, label_count, std::min<std::size_t>(6, label_count));
    std::vector<LabelId> ranked(label_count);
    for (std::size_t i = 0; i < label_count; ++i) ranked[i] = static_cast<LabelId>(i);
    rng.shuffle(ranked);
    const std::size_t k = 1 + rng.below(label_count);
    const std::vector<LabelId> top(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k));
    if (eval::recall_at_k(top, truth) != oracle::recall(top, truth)) ++mismatches;
    worst_ndcg = std::max(worst_ndcg, std::abs(eval::ndcg_at_k(ranked, truth, k) - oracle::ndcg(ranked, truth, k)));

    std::vector<eval::AssignmentOutcome> outcomes;
    const std::size_t n = 1 + rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      eval::AssignmentOutcome o{oracle::random_label_set(rng, tax.label_count(), 3), std::nullopt};
      if (rng.below(6) != 0) o.top_reviewer_labels = oracle::random_label_set(rng, tax.label_count(), 4);
      outcomes.push_back(o);
    }
    if (eval::accuracy(outcomes) != oracle::accuracy(outcomes)) ++mismatches;
    if (eval::coarse_accuracy(outcomes, tax, taxonomy::CoarseningStrategy::kTopThree) !=
        oracle::coarse_accuracy(outcomes, tax, 1)) {
      ++mismatches;
    }
    if (eval::coarse_accuracy(outcomes, tax, taxonomy::CoarseningStrategy::kDropLast) !=
        oracle::coarse_accuracy(outcomes, tax, 2)) {
      ++mismatches;
    }
  }
  const std::vector<LabelId> worked{0, 2, 1};
  const double example = eval::ndcg_at_k(worked, LabelSet{0, 1}, 3);
  std::ostringstream detail;
  detail << "exact mismatches " << mismatches << ", max NDCG deviation " << worst_ndcg << ", worked example "
         << example;
  return check(mismatches == 0 && worst_ndcg <= 1e-9 && std::abs(example - 0.9197) <= 1e-4, detail.str());
}

Outcome mlbra_oracle() {
  RandomStream rng(105);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t label_count = 1 + rng.below(50);
    const std::size_t reviewer_count = 1 + rng.below(200);
    std::vector<assign::Reviewer> reviewers;
    for (std::size_t r = 0; r < reviewer_count; ++r) {
      reviewers.push_back({"r_" + std::to_string(rng.below(1000000)) + "_" + std::to_string(r),
                           oracle::random_label_set(rng, label_count, std::min<std::size_t>(10, label_count))});
    }
    mlc::Vec scores(static_cast<Index>(label_count));
    for (Index l = 0; l < scores.size(); ++l) scores(l) = static_cast<double>(rng.below(8));
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(10, label_count));
    const auto rec = assign::mlbra("p", scores, reviewers, k);
    std::vector<double> raw(scores.data(), scores.data() + scores.size());
    const auto top = oracle::top_k(raw, k);
    const auto expected = oracle::mlbra(top, reviewers);
    bool same = rec.predicted_top_k == top && rec.best_overlap == expected.best_overlap &&
                rec.candidates.size() == expected.ranked.size();
    for (std::size_t i = 0; same && i < expected.ranked.size(); ++i) {
      same = rec.candidates[i].reviewer_id == expected.ranked[i] && rec.candidates[i].overlap == expected.best_overlap;
    }
    if (!same) ++mismatches;
  }

  // Case study: three reviewers with both predicted labels.
  const std::vector<assign::Reviewer> case_study{
      {"r_1348", LabelSet{1277, 1824, 12, 340, 999}},
      {"r_4603", LabelSet{50, 787, 1277, 1824}},
      {"r_15377", LabelSet{1277, 1824, 3, 77, 402, 1100, 1500, 1900}},
  };
  mlc::Vec scores = mlc::Vec::Zero(1944);
  scores(1277) = 0.9;
  scores(1824) = 0.8;
  const auto rec = assign::mlbra("p_155", scores, case_study, 2);
  std::vector<std::string> order;
  bool all_two = true;
  for (const auto& c : rec.candidates) {
    order.push_back(c.reviewer_id);
    all_two = all_two && c.overlap == 2;
  }
  const bool case_ok = rec.best_overlap == 2 && all_two &&
                       order == std::vector<std::string>{"r_15377", "r_1348", "r_4603"};
  std::ostringstream detail;
  detail << "random mismatches " << mismatches << "/500, case study best overlap " << rec.best_overlap << " order";
  for (const auto& id : order) detail << ' ' << id;
  return check(mismatches == 0 && case_ok, detail.str());
}

Outcome coarsening() {
  const auto tax = taxonomy::Taxonomy::load({"CCS > Networks > Network protocols > Protocol correctness > "
                                             "Protocol testing and verification > Formal verification"});
  const auto& six = tax.label_path(0);
  const auto s1 = taxonomy::coarsen(six, taxonomy::CoarseningStrategy::kTopThree);
  const auto s2 = taxonomy::coarsen(six, taxonomy::CoarseningStrategy::kDropLast);
  const bool lengths_ok = six.size() == 6 && s1.size() == 3 && s2.size() == 5;

  std::vector<std::string> lines = synthetic::generate({}).taxonomy_lines;
  lines.push_back("Computing > Y > Z");
  lines.push_back("Computing > Y > Z > W > V > U > T");
  const auto all = taxonomy::Taxonomy::load(lines);
  std::size_t violations = 0;
  for (LabelId l = 0; l < all.label_count(); ++l) {
    const auto& path = all.label_path(l);
    for (auto strategy : {taxonomy::CoarseningStrategy::kTopThree, taxonomy::CoarseningStrategy::kDropLast}) {
      const auto c = taxonomy::coarsen(path, strategy);
      if (c.size() > path.size() || !std::equal(c.begin(), c.end(), path.begin())) ++violations;
    }
    const auto once = taxonomy::coarsen(path, taxonomy::CoarseningStrategy::kTopThree);
    if (taxonomy::coarsen(once, taxonomy::CoarseningStrategy::kTopThree) != once) ++violations;
  }
  std::ostringstream detail;
  detail << "length 6 -> " << s1.size() << " / " << s2.size() << ", property violations " << violations << " over "
         << all.label_count() << " paths";
  return check(lengths_ok && violations == 0, detail.str());
}

// ---------------------------------------------------------------------------
// End-to-end checks share one synthetic run.

struct SyntheticRun {
  fs::path corpus_dir;
  app::PipelineConfig config;
  synthetic::SyntheticCorpus corpus;
  double seconds = 0.0;
  std::string error;
};

SyntheticRun run_synthetic(const fs::path& work) {
  SyntheticRun run;
  run.corpus_dir = work / "synthetic";
  fs::remove_all(run.corpus_dir);
  run.corpus = synthetic::generate({});
  synthetic::write_corpus(run.corpus, run.corpus_dir);
  std::ofstream(run.corpus_dir / "config.json") << synthetic::pipeline_config_json();
  const auto start = Clock::now();
  try {
    run.config = app::load_config(run.corpus_dir / "config.json");
    app::run_pipeline(run.config, std::nullopt, &std::cout);
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.seconds = seconds_since(start);
  return run;
}

Outcome synthetic_end_to_end(const SyntheticRun& run) {
  if (!run.error.empty()) return fail("pipeline failed: " + run.error);
  const auto metrics = read_key_values(run.config.output_path(app::files::kMetrics));
  const auto baseline = read_key_values(run.config.output_path(app::files::kBaseline));
  const bool have = metrics.count("recall@3") && metrics.count("accuracy") && baseline.count("accuracy");
  if (!have) return fail("metrics.kv or baseline.kv incomplete");
  const double recall3 = metrics.at("recall@3"), acc = metrics.at("accuracy"), base = baseline.at("accuracy");
  std::ostringstream detail;
  detail << "epochs " << run.config.epochs << ", Recall@3 " << recall3 << ", accuracy " << acc << " vs TF-IDF "
         << base << ", " << run.seconds << " s";
  return check(run.config.epochs <= 30 && run.seconds < 600.0 && recall3 >= 0.8 && acc > base, detail.str());
}

Outcome transparency(const SyntheticRun& run) {
  if (!run.error.empty()) return fail("pipeline failed: " + run.error);
  const auto& c = run.config;
  const auto tax = taxonomy::Taxonomy::load(run.corpus.taxonomy_lines);
  const auto vocab = corpus::Vocabulary::load(c.output_path(app::files::kVocab));
  const auto params = encoder::load_model(c.output_path(app::files::kModel));
  const auto prepared = corpus::prepare_records(run.corpus.records, tax);
  const auto split = corpus::split_by_year(prepared, c.test_year);
  const auto papers = corpus::build_paper_records(split.test, vocab, {c.max_sentences, c.max_tokens});
  std::size_t hits = 0, highlighted_docs = 0;
  for (const auto& paper : papers) {
    std::set<std::string> signature;
    for (LabelId l : paper.label_set) {
      signature.insert(run.corpus.signature[l].begin(), run.corpus.signature[l].end());
    }
    const auto highlights = encoder::attention_highlights(paper.document, params, c.highlight_threshold);
    const std::size_t top = std::min<std::size_t>(3, highlights.tokens.size());
    for (std::size_t i = 0; i < top; ++i) {
      if (signature.count(vocab.token(highlights.tokens[i].token))) {
        ++hits;
        break;
      }
    }
    if (!highlights.tokens.empty() && highlights.tokens[0].highlighted) ++highlighted_docs;
  }
  const double rate = papers.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(papers.size());
  std::ostringstream detail;
  detail << "signature token in top-3 word weights for " << hits << "/" << papers.size() << " documents ("
         << rate << "); " << highlighted_docs << " documents have a token above threshold "
         << c.highlight_threshold;
  return check(rate >= 0.8, detail.str());
}

Outcome determinism(const SyntheticRun& run) {
  if (!run.error.empty()) return fail("pipeline failed: " + run.error);
  auto rerun = run.config;
  rerun.output_dir = "run_repeat";
  try {
    app::run_pipeline(rerun);
  } catch (const std::exception& e) {
    return fail("second run failed: " + std::string(e.what()));
  }
  const bool same_manifest = slurp(run.config.output_path(app::files::kManifest)) ==
                             slurp(rerun.output_path(app::files::kManifest));

  const auto model_path = run.config.output_path(app::files::kModel);
  const auto params = encoder::load_model(model_path);
  std::ostringstream saved(std::ios::binary);
  encoder::save_model(saved, params);
  std::istringstream reread(saved.str(), std::ios::binary);
  const bool model_ok = saved.str() == slurp(model_path) && encoder::bit_equal(encoder::load_model(reread), params);

  bool sparse_ok = true;
  for (auto name : {app::files::kMlcTrain, app::files::kMlcTest}) {
    const auto path = run.config.output_path(name);
    const auto dataset = mlc::import_sparse_dataset(path);
    const auto copy = run.corpus_dir / ("roundtrip_" + std::string(name));
    mlc::export_sparse_dataset(dataset.features, dataset.label_sets, dataset.label_count, copy);
    sparse_ok = sparse_ok && slurp(copy) == slurp(path);
    const auto again = mlc::import_sparse_dataset(copy);
    sparse_ok = sparse_ok && again.features.values == dataset.features.values && again.label_sets == dataset.label_sets;
  }
  std::ostringstream detail;
  detail << "manifests " << (same_manifest ? "identical" : "differ") << ", model round trip "
         << (model_ok ? "exact" : "lossy") << ", sparse datasets " << (sparse_ok ? "exact" : "lossy");
  return check(same_manifest && model_ok && sparse_ok, detail.str());
}

Outcome real_corpus_statistics(const fs::path& work) {
  const char* records = std::getenv("HIEPAR_ACM_RECORDS");
  const char* tax = std::getenv("HIEPAR_ACM_TAXONOMY");
  if (!records || !tax) return {Verdict::kSkip, "HIEPAR_ACM_RECORDS / HIEPAR_ACM_TAXONOMY not set"};
  app::PipelineConfig c;
  c.base_dir = work;
  c.records = fs::absolute(records).string();
  c.taxonomy = fs::absolute(tax).string();
  c.output_dir = "acm";
  try {
    app::run_ingest(c);
  } catch (const std::exception& e) {
    return fail(std::string("ingest failed: ") + e.what());
  }
  const auto parsed = nlohmann::json::parse(slurp(c.output_path(app::files::kStats)));
  std::map<std::string, double> stats;
  for (const char* key : {"labels", "reviewers", "papers", "mean_labels_per_reviewer", "mean_labels_per_paper"}) {
    stats[key] = parsed.at(key).get<double>();
  }
  std::ostringstream detail;
  detail << "labels " << stats["labels"] << ", reviewers " << stats["reviewers"] << ", papers " << stats["papers"]
         << ", mean labels " << stats["mean_labels_per_reviewer"] << " / " << stats["mean_labels_per_paper"];
  return check(stats["labels"] == 1944 && stats["reviewers"] == 22575 && stats["papers"] == 13449 &&
                   std::abs(stats["mean_labels_per_reviewer"] - 12.88) <= 0.01 &&
                   std::abs(stats["mean_labels_per_paper"] - 1.83) <= 0.01,
               detail.str());
}

Outcome guarded(const std::function<Outcome()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return fail(std::string("exception: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "hiepar_acceptance";
  fs::create_directories(work);

  std::vector<std::pair<std::string, Outcome>> results;
  auto record = [&](std::string name, const std::function<Outcome()>& body) {
    results.emplace_back(std::move(name), guarded(body));
  };
  record("gradient correctness", gradient_correctness);
  record("attention invariants", attention_invariants);
  record("loss oracle", loss_oracle);
  record("metric oracles", metric_oracles);
  record("mlbra oracle", mlbra_oracle);
  record("coarsening", coarsening);
  const SyntheticRun run = run_synthetic(work);
  record("synthetic end-to-end", [&] { return synthetic_end_to_end(run); });
  record("transparency", [&] { return transparency(run); });
  record("determinism and persistence", [&] { return determinism(run); });
  record("real corpus statistics", [&] { return real_corpus_statistics(work); });

  int failures = 0;
  std::cout << '\n';
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& [name, outcome] = results[i];
    const char* tag = outcome.verdict == Verdict::kPass ? "PASS" : outcome.verdict == Verdict::kFail ? "FAIL" : "SKIP";
    if (outcome.verdict == Verdict::kFail) ++failures;
    std::cout << "criterion " << i + 1 << " [" << tag << "] " << name << ": " << outcome.detail << '\n';
  }
  return failures == 0 ? 0 : 1;
}
