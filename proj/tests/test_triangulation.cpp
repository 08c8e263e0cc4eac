#include <gtest/gtest.h>

#include <algorithm>
#include <stdexcept>

#include "flipchain/dynamics.hpp"
#include "flipchain/triangulation.hpp"
#include "test_access.hpp"

using namespace flipchain;

namespace {

std::uint32_t degree_of(const Triangulation& t, NodeId v) { return t.degree(v); }

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Triangulation, TetrahedronCounts) {
  const auto t = make_tetrahedron();
  EXPECT_TRUE(validate(t).empty());
  EXPECT_EQ(t.node_count(), 4u);
  EXPECT_EQ(t.link_count(), 6u);
  EXPECT_EQ(t.triangles().size(), 4u);
  for (NodeId v = 1; v <= 4; ++v) EXPECT_EQ(degree_of(t, v), 3u);
}

TEST(Triangulation, ChristmasTreeEulerCounts) {
  for (std::uint32_t n : {4u, 5u, 7u, 20u, 1000u}) {
    const auto t = make_christmas_tree(n);
    EXPECT_TRUE(validate(t).empty()) << n;
    EXPECT_EQ(t.link_count(), 3 * n - 6);
    EXPECT_EQ(t.triangles().size(), 2 * n - 4);
  }
}

TEST(Triangulation, ChristmasTreeDegrees) {
  // Hand count: the two apexes see everyone, the path ends have degree 3,
  // interior path nodes have degree 4.
  const std::uint32_t n = 9;
  const auto t = make_christmas_tree(n);
  EXPECT_EQ(degree_of(t, 1), n - 1);
  EXPECT_EQ(degree_of(t, 2), n - 1);
  EXPECT_EQ(degree_of(t, 3), 3u);
  EXPECT_EQ(degree_of(t, n), 3u);
  for (NodeId v = 4; v < n; ++v) EXPECT_EQ(degree_of(t, v), 4u);
  EXPECT_EQ(t.sum_squared_degrees(), 2u * 64 + 2 * 9 + 5 * 16);
}

TEST(Triangulation, ChristmasTreeFour) {
  EXPECT_TRUE(make_christmas_tree(4).same_links(make_tetrahedron()));
  EXPECT_THROW(make_christmas_tree(3), std::domain_error);
}

TEST(Triangulation, LinkedAndFind) {
  const auto t = make_christmas_tree(7);
  EXPECT_TRUE(t.linked(1, 4));
  EXPECT_TRUE(t.linked(4, 1));
  EXPECT_FALSE(t.linked(3, 5));
  EXPECT_FALSE(t.find_link(3, 5).has_value());
  const auto id = t.find_link(4, 1);
  ASSERT_TRUE(id);
  EXPECT_EQ(t.endpoints(*id), NodePair(1, 4));
  EXPECT_EQ(t.opposite_vertices(*id), NodePair(3, 5));
}

TEST(Triangulation, FlipOneFourGivesThreeFive) {
  auto t = make_christmas_tree(7);
  const auto id = *t.find_link(1, 4);
  EXPECT_TRUE(t.is_flippable(id));
  const auto outcome = t.flip(id);
  ASSERT_TRUE(outcome.flipped());
  EXPECT_EQ(outcome.removed, NodePair(1, 4));
  EXPECT_EQ(outcome.added, NodePair(3, 5));
  EXPECT_TRUE(t.linked(3, 5));
  EXPECT_FALSE(t.linked(1, 4));
  EXPECT_TRUE(validate(t).empty());
  EXPECT_EQ(t.degree(1), 5u);
  EXPECT_EQ(t.degree(4), 3u);
  EXPECT_EQ(t.degree(3), 4u);
  EXPECT_EQ(t.degree(5), 5u);
}

TEST(Triangulation, TetrahedronRejectsEveryFlip) {
  auto t = make_tetrahedron();
  const auto before = t.link_pairs();
  for (std::uint32_t s = 0; s < t.link_count(); ++s) {
    const auto id = t.link_at(s);
    EXPECT_FALSE(t.is_flippable(id));
    EXPECT_FALSE(t.flip(id).flipped());
  }
  EXPECT_EQ(t.link_pairs(), before);
}

TEST(Triangulation, StaleHandleRejected) {
  auto t = make_christmas_tree(7);
  const auto id = *t.find_link(1, 4);
  ASSERT_TRUE(t.flip(id).flipped());
  EXPECT_THROW(t.flip(id), usage_error);
  EXPECT_THROW(t.endpoints(LinkId{999, 0}), usage_error);
}

TEST(Triangulation, FlipTwiceRestores) {
  auto t = make_christmas_tree(12);
  const auto start = t.link_pairs();
  for (std::uint32_t s = 0; s < t.link_count(); ++s) {
    const auto out = t.flip_slot(s);
    if (!out.flipped()) continue;
    ASSERT_TRUE(t.flip_slot(s).flipped());
    EXPECT_EQ(t.link_pairs(), start);
  }
}

TEST(Triangulation, RandomFlipsStaySound) {
  auto t = make_christmas_tree(60);
  Rng rng(7);
  for (int k = 0; k < 20000; ++k) {
    t.flip_slot(static_cast<std::uint32_t>(rng.below(t.link_count())));
    if (k % 1000 == 0) {
      ASSERT_TRUE(validate(t).empty()) << k;
    }
  }
  EXPECT_TRUE(validate(t).empty());
  std::uint64_t sq = 0;
  for (NodeId v = 1; v <= t.node_count(); ++v) sq += std::uint64_t{t.degree(v)} * t.degree(v);
  EXPECT_EQ(sq, t.sum_squared_degrees());
}

TEST(Triangulation, FromTrianglesRejectsNonSpheres) {
  std::vector<Triangle> faces{{1, 2, 3}, {1, 2, 4}, {1, 3, 4}};
  EXPECT_THROW(Triangulation::from_triangles(4, faces), usage_error);
  faces.emplace_back(2, 3, 5);
  EXPECT_THROW(Triangulation::from_triangles(4, faces), usage_error);
  EXPECT_THROW(Triangulation::from_triangles(3, faces), usage_error);
  // Two tetrahedra sharing nothing: right shape locally, wrong Euler count.
  const std::vector<Triangle> two{{1, 2, 3}, {1, 2, 4}, {1, 3, 4}, {2, 3, 4},
                                  {5, 6, 7}, {5, 6, 8}, {5, 7, 8}, {6, 7, 8}};
  EXPECT_THROW(Triangulation::from_triangles(8, two), usage_error);
}

TEST(Triangulation, ValidateReportsCorruption) {
  {
    auto t = make_christmas_tree(8);
    TriangulationTestAccess::drop_adjacency(t, 1, 4);
    const auto problems = validate(t);
    EXPECT_TRUE(mentions(problems, "adjacency")) << problems.front();
    EXPECT_EQ(std::count_if(problems.begin(), problems.end(),
                            [](const std::string& p) { return p.find("does not reference") != std::string::npos; }),
              1);
  }
  {
    auto t = make_christmas_tree(8);
    TriangulationTestAccess::add_stray_adjacency(t, 3, 6, 0);
    EXPECT_TRUE(mentions(validate(t), "parallel link or stray entry"));
  }
  {
    auto t = make_christmas_tree(8);
    TriangulationTestAccess::skew_degree_cache(t);
    EXPECT_TRUE(mentions(validate(t), "squared-degree"));
  }
  {
    auto t = make_christmas_tree(8);
    const auto slot = t.find_link(1, 4)->slot;
    TriangulationTestAccess::set_apex(t, slot, 7);
    EXPECT_FALSE(validate(t).empty());
  }
}

TEST(Triangulation, RelabelKeepsShape) {
  const auto t = make_christmas_tree(7);
  std::vector<NodeId> perm{0, 7, 6, 5, 4, 3, 2, 1};
  const auto r = t.relabeled(perm);
  EXPECT_TRUE(validate(r).empty());
  EXPECT_EQ(r.degree(7), 6u);
  EXPECT_EQ(r.degree(5), 3u);
  EXPECT_FALSE(r.same_links(t));
  EXPECT_TRUE(r.relabeled(perm).same_links(t));
  EXPECT_THROW(t.relabeled(std::vector<NodeId>{0, 1}), usage_error);
}

TEST(Serialization, RoundTrip) {
  auto t = make_christmas_tree(15);
  Rng rng(3);
  for (int k = 0; k < 500; ++k) t.flip_slot(static_cast<std::uint32_t>(rng.below(t.link_count())));
  const auto text = serialize(t);
  EXPECT_TRUE(text.starts_with("tri n=15 f=26\n"));
  const auto back = deserialize(text);
  EXPECT_TRUE(back.same_links(t));
  EXPECT_EQ(serialize(back), text);
}

TEST(Serialization, TetrahedronText) {
  EXPECT_EQ(serialize(make_tetrahedron()), "tri n=4 f=4\n1 2 3\n1 2 4\n1 3 4\n2 3 4\n");
}

TEST(Serialization, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      deserialize(text);
    } catch (const parse_error& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(""), 1u);
  EXPECT_EQ(line_of("tri n=4\n"), 1u);
  EXPECT_EQ(line_of("tri n=4 f=5\n"), 1u);
  EXPECT_EQ(line_of("tri n=4 f=4\n1 2 3\n1 2 x\n"), 3u);
  EXPECT_EQ(line_of("tri n=4 f=4\n1 2 3\n1 2 9\n"), 3u);
  EXPECT_EQ(line_of("tri n=4 f=4\n1 2 3\n1 1 2\n"), 3u);
  EXPECT_EQ(line_of("tri n=4 f=4\n1 2 3\n3 2 1\n"), 3u);
  EXPECT_EQ(line_of("tri n=4 f=4\n1 2 3\n1 2 4\n"), 3u);
  EXPECT_EQ(line_of("tri n=5 f=6\n1 2 3\n1 2 4\n1 2 5\n"), 4u);
  // Right counts, wrong surface.
  EXPECT_NE(line_of("tri n=5 f=6\n1 2 3\n1 2 4\n1 3 4\n2 3 4\n1 2 5\n1 3 5\n"), 0u);
}
