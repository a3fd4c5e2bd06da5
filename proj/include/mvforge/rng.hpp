#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace mvforge {

/// Counter-based generator built on the SplitMix64 output function.
///
/// The n-th output (n = 1, 2, ...) of a stream with key k is
///
///     mix64(k + n * 0x9E3779B97F4A7C15)
///
/// where mix64 is the SplitMix64 finalizer below. A stream keyed with k thus
/// reproduces the classic SplitMix64 sequence seeded with k. Child streams are
/// derived with split(tag), which is a pure function of (key, tag), so any
/// frame or scene stream can be regenerated without replaying its parents.
///
/// Conversions:
///   uniform()        (x >> 11) * 2^-53, in [0, 1)
///   uniform_int(n)   rejection of x < (2^64 mod n), then x mod n
class CounterRng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::string_view kName = "splitmix64-ctr/1";
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSplitGamma = 0xD1B54A32D192ED03ULL;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Key of the child stream labelled `tag`.
  static constexpr std::uint64_t derive(std::uint64_t key,
                                        std::uint64_t tag) noexcept {
    return mix64(key ^ mix64(tag * kSplitGamma + kGamma));
  }

  constexpr CounterRng split(std::uint64_t tag) const noexcept {
    return CounterRng(derive(key_, tag));
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  constexpr std::uint64_t next() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  constexpr result_type operator()() noexcept { return next(); }
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Unbiased integer in [0, n). n must be positive.
  constexpr std::uint64_t uniform_int(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % n;
    }
  }

  /// Index drawn with probability proportional to weights[i].
  /// Weights must be non-negative with a positive sum.
  std::size_t weighted_index(std::span<const double> weights) noexcept {
    double total = 0.0;
    for (double w : weights) total += w;
    double target = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (target < weights[i]) return i;
      target -= weights[i];
    }
    // Rounding can leave target marginally above the last bucket.
    for (std::size_t i = weights.size(); i-- > 0;)
      if (weights[i] > 0.0) return i;
    return 0;
  }

  /// Fisher-Yates, drawing from the back.
  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mvforge
