#ifndef TSFUSE_SYMBOLIC_BAG_H_
#define TSFUSE_SYMBOLIC_BAG_H_

#include <cstdint>
#include <span>
#include <vector>

namespace tsfuse {

// Bag dimensions never exceed this; longer vocabularies are hashed into it.
inline constexpr uint64_t kMaxBagDim = 4096;

// Dimension of a bag over words of `word_length` symbols from an alphabet of
// `alphabet` letters: min(alphabet^word_length, 4096).
uint64_t bag_dimension(int alphabet, int word_length);

// Base-`alphabet` word code, most significant symbol first.
uint64_t word_code(std::span<const int> symbols, int alphabet);

// Position of a word code in the bag. Direct when the vocabulary fits,
// otherwise Fibonacci hashing onto the top 12 bits:
// (code * 0x9E3779B97F4A7C15) >> 52.
uint64_t bag_slot(uint64_t code, int alphabet, int word_length);

// Accumulates words with numerosity reduction: a word equal to the previous
// one is not counted again.
class WordBag {
 public:
  WordBag(int alphabet, int word_length);

  void add(std::span<const int> symbols);

  const std::vector<double>& counts() const { return counts_; }
  // Number of words counted after numerosity reduction.
  uint64_t total() const { return total_; }

 private:
  int alphabet_;
  int word_length_;
  std::vector<double> counts_;
  uint64_t total_ = 0;
  bool has_previous_ = false;
  uint64_t previous_ = 0;
};

}  // namespace tsfuse

#endif  // TSFUSE_SYMBOLIC_BAG_H_
