#include "poal/bitmatrix.hpp"

#include <stdexcept>

namespace poal {

BitMatrix BitMatrix::transposed() const {
  BitMatrix t(n_);
  for_each([&](std::size_t r, std::size_t c) { t.set(c, r); });
  return t;
}

BitMatrix& BitMatrix::operator|=(const BitMatrix& o) {
  if (o.n_ != n_) throw std::invalid_argument("BitMatrix size mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] |= o.data_[k];
  return *this;
}

BitMatrix& BitMatrix::operator&=(const BitMatrix& o) {
  if (o.n_ != n_) throw std::invalid_argument("BitMatrix size mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] &= o.data_[k];
  return *this;
}

BitMatrix& BitMatrix::subtract(const BitMatrix& o) {
  if (o.n_ != n_) throw std::invalid_argument("BitMatrix size mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] &= ~o.data_[k];
  return *this;
}

}  // namespace poal
