#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hiepar {

using LabelId = std::uint32_t;
using TokenId = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sparse binary label vector: sorted, duplicate-free label ids.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<LabelId> ids);
  explicit LabelSet(std::vector<LabelId> ids);

  const std::vector<LabelId>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains(LabelId id) const;
  void insert(LabelId id);
  void merge(const LabelSet& other);

  std::size_t intersection_size(const LabelSet& other) const;
  bool intersects(const LabelSet& other) const { return intersection_size(other) > 0; }

  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<LabelId> ids_;
};

// Number of elements of `ranked` (assumed duplicate-free) present in `set`.
std::size_t count_in(std::span<const LabelId> ranked, const LabelSet& set);

// Deterministic 64-bit generator (SplitMix64 seeding a xoshiro256** core).
// Unlike the standard distributions, every draw is fully specified, so
// sequences are reproducible across compilers and platforms.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);
  // Child stream derived from a master seed and a stream name.
  static RandomStream named(std::uint64_t master_seed, std::string_view name);

  std::uint64_t next();
  double uniform();                                  // [0, 1)
  double uniform(double low, double high);           // [low, high)
  std::size_t below(std::size_t bound);              // [0, bound)

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::uint64_t state_[4];
};

// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);
// Strict parse of a full string as a double; throws Error on failure.
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

std::vector<std::string_view> split_whitespace(std::string_view text);
std::string_view trim(std::string_view text);

}  // namespace hiepar
