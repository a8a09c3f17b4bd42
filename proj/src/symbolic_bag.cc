#include "tsfuse/symbolic_bag.h"

#include "tsfuse/errors.h"

namespace tsfuse {

uint64_t bag_dimension(int alphabet, int word_length) {
  if (alphabet < 2 || word_length < 1) {
    throw ParamError("alphabet must be >= 2 and word length >= 1");
  }
  uint64_t dim = 1;
  for (int i = 0; i < word_length; ++i) {
    dim *= static_cast<uint64_t>(alphabet);
    if (dim >= kMaxBagDim) return kMaxBagDim;
  }
  return dim;
}

uint64_t word_code(std::span<const int> symbols, int alphabet) {
  uint64_t code = 0;
  for (int s : symbols) code = code * static_cast<uint64_t>(alphabet) + s;
  return code;
}

uint64_t bag_slot(uint64_t code, int alphabet, int word_length) {
  uint64_t vocab = 1;
  for (int i = 0; i < word_length; ++i) {
    vocab *= static_cast<uint64_t>(alphabet);
    if (vocab > kMaxBagDim) {
      return (code * 0x9E3779B97F4A7C15ULL) >> 52;
    }
  }
  return code;
}

WordBag::WordBag(int alphabet, int word_length)
    : alphabet_(alphabet),
      word_length_(word_length),
      counts_(bag_dimension(alphabet, word_length), 0.0) {}

void WordBag::add(std::span<const int> symbols) {
  const uint64_t code = word_code(symbols, alphabet_);
  if (has_previous_ && code == previous_) return;
  has_previous_ = true;
  previous_ = code;
  counts_[bag_slot(code, alphabet_, word_length_)] += 1.0;
  ++total_;
}

}  // namespace tsfuse
