#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace thermomap {

/// Fixed-capacity FIFO. Pushing into a full buffer evicts the oldest element.
template <typename T, std::size_t Capacity>
class RingBuffer {
  static_assert(Capacity > 0);

 public:
  static constexpr std::size_t capacity() { return Capacity; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  bool full() const { return count_ == Capacity; }

  void push(const T& value) {
    storage_[(head_ + count_) % Capacity] = value;
    if (count_ == Capacity) {
      head_ = (head_ + 1) % Capacity;
    } else {
      ++count_;
    }
  }

  /// Index 0 is the oldest retained element.
  const T& operator[](std::size_t i) const { return storage_[(head_ + i) % Capacity]; }
  const T& oldest() const { return (*this)[0]; }
  const T& newest() const { return (*this)[count_ - 1]; }

  std::vector<T> to_vector() const {
    std::vector<T> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < count_; ++i) out.push_back((*this)[i]);
    return out;
  }

  void clear() {
    head_ = 0;
    count_ = 0;
  }

 private:
  std::array<T, Capacity> storage_{};
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

}  // namespace thermomap
