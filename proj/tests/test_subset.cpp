#include <gtest/gtest.h>

#include <unordered_set>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"
#include "dv/subset.hpp"

using dv::SubsetKey;

TEST(SubsetKey, CanonicalTextRoundTrip) {
  const std::vector<std::size_t> members{0, 3, 5};
  const auto s = SubsetKey::from_members(8, members);
  EXPECT_EQ(s.to_string(), "0,3,5");
  EXPECT_EQ(SubsetKey::parse(8, "0,3,5"), s);
  EXPECT_EQ(SubsetKey(8).to_string(), "");
  EXPECT_TRUE(SubsetKey::parse(8, "").empty());
}

TEST(SubsetKey, RejectsNonCanonicalMembers) {
  const std::vector<std::size_t> unsorted{3, 1};
  const std::vector<std::size_t> dup{1, 1};
  const std::vector<std::size_t> out_of_range{9};
  EXPECT_THROW(SubsetKey::from_members(8, unsorted), dv::Error);
  EXPECT_THROW(SubsetKey::from_members(8, dup), dv::Error);
  EXPECT_THROW(SubsetKey::from_members(8, out_of_range), dv::Error);
  EXPECT_THROW(SubsetKey::parse(8, "1,x"), dv::Error);
}

TEST(SubsetKey, EqualityIsMemberEquality) {
  auto a = SubsetKey::from_mask(10, 0b1010);
  auto b = SubsetKey(10);
  b.insert(3);
  b.insert(1);
  EXPECT_EQ(a, b);
  EXPECT_EQ(dv::SubsetKeyHash{}(a), dv::SubsetKeyHash{}(b));
  b.erase(3);
  EXPECT_NE(a, b);
  EXPECT_EQ(b.members(), std::vector<std::size_t>{1});
}

TEST(SubsetKey, MaskAgreesWithMembers) {
  for (std::uint64_t mask = 0; mask < 256; ++mask) {
    const auto s = SubsetKey::from_mask(8, mask);
    EXPECT_EQ(s.mask(), mask);
    EXPECT_EQ(s.size(), static_cast<std::size_t>(std::popcount(mask)));
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(s.contains(i), ((mask >> i) & 1) != 0);
  }
}

TEST(SubsetKey, WideCohorts) {
  auto s = SubsetKey(200);
  s.insert(0);
  s.insert(64);
  s.insert(199);
  EXPECT_EQ(s.to_string(), "0,64,199");
  EXPECT_EQ(SubsetKey::parse(200, s.to_string()), s);
  EXPECT_EQ(SubsetKey::full(200).size(), 200u);
  EXPECT_FALSE(s.without(64).contains(64));
  EXPECT_TRUE(s.with(65).contains(65));
}

TEST(SubsetKey, OrderingIsTotal) {
  std::unordered_set<SubsetKey, dv::SubsetKeyHash> seen;
  for (std::uint64_t m = 0; m < 64; ++m) seen.insert(SubsetKey::from_mask(6, m));
  EXPECT_EQ(seen.size(), 64u);
  EXPECT_TRUE(SubsetKey::from_mask(6, 1) != SubsetKey::from_mask(6, 2));
  EXPECT_TRUE((SubsetKey::from_mask(6, 1) <=> SubsetKey::from_mask(6, 1)) == 0);
}

TEST(Numeric, BinomialAndCompensatedSum) {
  EXPECT_EQ(dv::binomial(10, 3), 120.0);
  EXPECT_EQ(dv::binomial(30, 15), 155117520.0);
  EXPECT_NEAR(std::exp(dv::log_binomial(60, 30)), 1.1826458156486e17, 1e5);
  dv::CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1000.0);
}

TEST(Numeric, SeedDerivationIsStable) {
  EXPECT_EQ(dv::derive_seed(1, 2), dv::derive_seed(1, 2));
  EXPECT_NE(dv::derive_seed(1, 2), dv::derive_seed(2, 1));
  EXPECT_NE(dv::derive_seed(1, 2, 3), dv::derive_seed(1, 3, 2));
  EXPECT_EQ(dv::fnv1a("abc"), dv::fnv1a("abc"));
  const double u = dv::to_unit(dv::mix64(7));
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
}
