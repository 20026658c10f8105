#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace poal {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

inline constexpr std::size_t words_for(std::size_t bits) {
  return (bits + kWordBits - 1) / kWordBits;
}

/// Word-level helpers over equally sized bit rows.
namespace bits {

inline bool test(std::span<const Word> row, std::size_t i) {
  return (row[i / kWordBits] >> (i % kWordBits)) & Word{1};
}
inline void set(std::span<Word> row, std::size_t i) {
  row[i / kWordBits] |= Word{1} << (i % kWordBits);
}
inline void reset(std::span<Word> row, std::size_t i) {
  row[i / kWordBits] &= ~(Word{1} << (i % kWordBits));
}
inline void clear(std::span<Word> row) {
  for (auto& w : row) w = 0;
}
inline void copy(std::span<Word> dst, std::span<const Word> src) {
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = src[k];
}
inline void or_into(std::span<Word> dst, std::span<const Word> src) {
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] |= src[k];
}
inline bool any(std::span<const Word> row) {
  for (auto w : row)
    if (w) return true;
  return false;
}
inline bool intersects(std::span<const Word> a, std::span<const Word> b) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] & b[k]) return true;
  return false;
}
inline std::size_t count(std::span<const Word> row) {
  std::size_t c = 0;
  for (auto w : row) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

/// Calls f(i) for each set bit, ascending.
template <class F>
void for_each(std::span<const Word> row, F&& f) {
  for (std::size_t k = 0; k < row.size(); ++k) {
    Word w = row[k];
    while (w) {
      f(k * kWordBits + static_cast<std::size_t>(std::countr_zero(w)));
      w &= w - 1;
    }
  }
}

/// First set bit of a & b, or npos-like sentinel `none`.
inline std::size_t first_common(std::span<const Word> a, std::span<const Word> b,
                                std::size_t none) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (Word w = a[k] & b[k]) return k * kWordBits + static_cast<std::size_t>(std::countr_zero(w));
  return none;
}

}  // namespace bits

/// Square n-by-n bit matrix; bit (r, c) stands for the ordered pair (r, c).
class BitMatrix {
 public:
  BitMatrix() = default;
  explicit BitMatrix(std::size_t n) : n_(n), stride_(words_for(n)), data_(n * stride_, 0) {}

  std::size_t size() const { return n_; }
  std::size_t stride() const { return stride_; }

  bool test(std::size_t r, std::size_t c) const {
    return (data_[r * stride_ + c / kWordBits] >> (c % kWordBits)) & Word{1};
  }
  void set(std::size_t r, std::size_t c) {
    data_[r * stride_ + c / kWordBits] |= Word{1} << (c % kWordBits);
  }
  void reset(std::size_t r, std::size_t c) {
    data_[r * stride_ + c / kWordBits] &= ~(Word{1} << (c % kWordBits));
  }

  std::span<Word> row(std::size_t r) { return {data_.data() + r * stride_, stride_}; }
  std::span<const Word> row(std::size_t r) const { return {data_.data() + r * stride_, stride_}; }

  void clear() { std::fill(data_.begin(), data_.end(), Word{0}); }
  std::size_t count() const { return bits::count(data_); }
  bool any() const { return bits::any(data_); }

  BitMatrix transposed() const;

  /// Calls f(r, c) for each set bit in row-major order.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t r = 0; r < n_; ++r) bits::for_each(row(r), [&](std::size_t c) { f(r, c); });
  }

  BitMatrix& operator|=(const BitMatrix& o);
  BitMatrix& operator&=(const BitMatrix& o);
  /// this &= ~o
  BitMatrix& subtract(const BitMatrix& o);

  bool operator==(const BitMatrix& o) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t stride_ = 0;
  std::vector<Word> data_;
};

}  // namespace poal
