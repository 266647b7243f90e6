#include "dv/subset.hpp"

#include <bit>
#include <charconv>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"

namespace dv {

namespace {

constexpr std::size_t kWordBits = 64;

std::size_t word_count(std::size_t n) { return (n + kWordBits - 1) / kWordBits; }

}  // namespace

SubsetKey::SubsetKey(std::size_t n) : n_(n), words_(word_count(n), 0) {
  if (n == 0) throw Error(ErrorCode::kInvalidParam, "cohort size must be positive");
}

SubsetKey SubsetKey::from_members(std::size_t n, std::span<const std::size_t> members) {
  SubsetKey s(n);
  std::size_t prev = 0;
  bool first = true;
  for (std::size_t i : members) {
    if (i >= n) {
      throw Error(ErrorCode::kInvalidParam,
                  "index " + std::to_string(i) + " outside cohort of size " + std::to_string(n));
    }
    if (!first && i <= prev) {
      throw Error(ErrorCode::kInvalidParam, "members must be strictly increasing");
    }
    s.insert(i);
    prev = i;
    first = false;
  }
  return s;
}

SubsetKey SubsetKey::from_mask(std::size_t n, std::uint64_t mask) {
  if (n > kWordBits) throw Error(ErrorCode::kInvalidParam, "mask form requires n <= 64");
  SubsetKey s(n);
  if (n < kWordBits && (mask >> n) != 0) {
    throw Error(ErrorCode::kInvalidParam, "mask has bits outside the cohort");
  }
  s.words_[0] = mask;
  return s;
}

SubsetKey SubsetKey::full(std::size_t n) {
  SubsetKey s(n);
  for (std::size_t i = 0; i < n; ++i) s.insert(i);
  return s;
}

SubsetKey SubsetKey::parse(std::size_t n, std::string_view text) {
  std::vector<std::size_t> members;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view token = text.substr(0, comma);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
      throw Error(ErrorCode::kParseError, "bad subset token '" + std::string(token) + "'");
    }
    members.push_back(value);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
    if (text.empty()) throw Error(ErrorCode::kParseError, "trailing comma in subset text");
  }
  return from_members(n, members);
}

std::size_t SubsetKey::size() const noexcept {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

bool SubsetKey::contains(std::size_t i) const noexcept {
  if (i >= n_) return false;
  return (words_[i / kWordBits] >> (i % kWordBits)) & 1U;
}

void SubsetKey::insert(std::size_t i) {
  if (i >= n_) throw Error(ErrorCode::kInvalidParam, "index outside cohort");
  words_[i / kWordBits] |= (std::uint64_t{1} << (i % kWordBits));
}

void SubsetKey::erase(std::size_t i) {
  if (i >= n_) throw Error(ErrorCode::kInvalidParam, "index outside cohort");
  words_[i / kWordBits] &= ~(std::uint64_t{1} << (i % kWordBits));
}

SubsetKey SubsetKey::with(std::size_t i) const {
  SubsetKey s = *this;
  s.insert(i);
  return s;
}

SubsetKey SubsetKey::without(std::size_t i) const {
  SubsetKey s = *this;
  s.erase(i);
  return s;
}

std::uint64_t SubsetKey::mask() const {
  if (n_ > kWordBits) throw Error(ErrorCode::kInvalidParam, "mask form requires n <= 64");
  return words_.empty() ? 0 : words_[0];
}

std::vector<std::size_t> SubsetKey::members() const {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits != 0) {
      const int b = std::countr_zero(bits);
      out.push_back(w * kWordBits + static_cast<std::size_t>(b));
      bits &= bits - 1;
    }
  }
  return out;
}

std::string SubsetKey::to_string() const {
  std::string out;
  for (std::size_t i : members()) {
    if (!out.empty()) out.push_back(',');
    out += std::to_string(i);
  }
  return out;
}

std::strong_ordering operator<=>(const SubsetKey& a, const SubsetKey& b) {
  if (auto c = a.n_ <=> b.n_; c != 0) return c;
  for (std::size_t w = a.words_.size(); w-- > 0;) {
    if (auto c = a.words_[w] <=> b.words_[w]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

std::size_t SubsetKeyHash::operator()(const SubsetKey& s) const noexcept {
  std::uint64_t h = mix64(s.n());
  for (auto w : s.words()) h = mix64(h ^ w);
  return static_cast<std::size_t>(h);
}

}  // namespace dv
