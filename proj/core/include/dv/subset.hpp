#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dv {

// A subset S of the cohort N = {0, ..., n-1}. Stored as a packed bitset; for
// n <= 64 this is a single word, which the enumeration loops use directly.
// The canonical external form is the sorted member list.
class SubsetKey {
 public:
  SubsetKey() = default;
  explicit SubsetKey(std::size_t n);

  static SubsetKey from_members(std::size_t n, std::span<const std::size_t> members);
  static SubsetKey from_mask(std::size_t n, std::uint64_t mask);
  static SubsetKey full(std::size_t n);
  // Parses the comma-separated canonical text ("" is the empty set).
  static SubsetKey parse(std::size_t n, std::string_view text);

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept;
  bool empty() const noexcept { return size() == 0; }
  bool contains(std::size_t i) const noexcept;

  void insert(std::size_t i);
  void erase(std::size_t i);
  SubsetKey with(std::size_t i) const;
  SubsetKey without(std::size_t i) const;

  // Only valid for n <= 64.
  std::uint64_t mask() const;

  std::vector<std::size_t> members() const;
  std::string to_string() const;
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  friend bool operator==(const SubsetKey&, const SubsetKey&) = default;
  friend std::strong_ordering operator<=>(const SubsetKey& a, const SubsetKey& b);

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

struct SubsetKeyHash {
  std::size_t operator()(const SubsetKey& s) const noexcept;
};

}  // namespace dv
