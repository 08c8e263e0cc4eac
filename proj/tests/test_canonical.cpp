#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "flipchain/canonical.hpp"
#include "flipchain/exact.hpp"
#include "test_access.hpp"

using namespace flipchain;

namespace {

std::vector<NodeId> shuffled_labels(std::uint32_t n, std::uint64_t seed) {
  std::vector<NodeId> perm(n + 1);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::uint32_t i = n; i > 1; --i) std::swap(perm[i], perm[1 + rng.below(i)]);
  return perm;
}

}  // namespace

TEST(Canonical, TetrahedronIsChristmasTreeFour) {
  EXPECT_EQ(canonical_code(make_tetrahedron()), canonical_code(make_christmas_tree(4)));
}

TEST(Canonical, InvariantUnderRelabeling) {
  auto t = make_christmas_tree(11);
  Rng rng(5);
  for (int k = 0; k < 200; ++k) t.flip_slot(static_cast<std::uint32_t>(rng.below(t.link_count())));
  const auto code = canonical_code(t);
  for (std::uint64_t s = 1; s <= 10; ++s) EXPECT_EQ(canonical_code(t.relabeled(shuffled_labels(11, s))), code);
}

TEST(Canonical, MirrorImagesAgree) {
  // Reflection of the double wheel: reverse the path 3..n.
  const std::uint32_t n = 9;
  const auto t = make_christmas_tree(n);
  std::vector<NodeId> perm(n + 1);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin() + 3, perm.end());
  EXPECT_EQ(canonical_code(t.relabeled(perm)), canonical_code(t));
}

TEST(Canonical, DistinguishesDegreeSequences) {
  auto t = make_christmas_tree(8);
  const auto before = canonical_code(t);
  ASSERT_TRUE(t.flip(*t.find_link(1, 4)).flipped());
  EXPECT_NE(canonical_code(t), before);
}

TEST(Canonical, ClassCountsAtSmallN) {
  // Unlabelled sphere triangulations with 4..7 vertices: 1, 1, 2, 5.
  const std::vector<std::size_t> expected{1, 1, 2, 5};
  for (std::uint32_t n = 4; n <= 7; ++n) {
    EXPECT_EQ(count_isomorphism_classes(enumerate_labeled(n)), expected[n - 4]) << n;
  }
}

TEST(Canonical, InvalidInputRejected) {
  auto t = make_christmas_tree(6);
  TriangulationTestAccess::skew_degree_cache(t);
  EXPECT_THROW(canonical_code(t), usage_error);
}
