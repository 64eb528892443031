#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hiepar/corpus.hpp"

namespace hiepar::synthetic {

// Planted-topic corpus. Every label owns a handful of signature tokens;
// reviewers write about their labels in one of several house styles, so
// style words dominate raw text overlap while only signature tokens carry
// the labels.
struct SyntheticConfig {
  std::uint64_t seed = 7;
  std::size_t label_count = 20;
  std::size_t signature_tokens = 5;
  std::size_t reviewers = 200;
  std::size_t min_reviewer_labels = 2;
  std::size_t max_reviewer_labels = 4;
  std::size_t min_reviewer_papers = 15;
  std::size_t max_reviewer_papers = 18;
  std::size_t test_papers = 100;
  std::size_t max_test_labels = 2;
  int test_year = 2017;
  int first_year = 2005;
  std::size_t styles = 8;
  std::size_t style_words = 25;
  std::size_t noise_words = 400;
  double signature_rate = 0.15;
  double style_rate = 0.45;
};

struct SyntheticCorpus {
  std::vector<std::string> taxonomy_lines;
  std::vector<corpus::RawRecord> records;
  // signature[label] = tokens planted for the label with that taxonomy id
  std::vector<std::vector<std::string>> signature;
};

SyntheticCorpus generate(const SyntheticConfig& config);

// Writes taxonomy.txt and records.jsonl into `dir`.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

// Pipeline config for a corpus written by write_corpus, with paths
// relative to the corpus directory and encoder sizes scaled down to the
// corpus.
std::string pipeline_config_json();

// One JSON object per line, in the input records format.
std::string record_to_json(const corpus::RawRecord& record);

}  // namespace hiepar::synthetic
