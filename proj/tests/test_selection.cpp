#include <doctest.h>

#include "regard/error.hpp"
#include "selection_oracle.hpp"

using namespace regard;
using namespace regard::testing;

namespace {

std::vector<DemographicGroup> generic_groups() {
  // g0/g1 gender, g2/g3 race, g4/g5 orientation; even columns advantaged.
  std::vector<DemographicGroup> out;
  const Axis axes[] = {Axis::gender, Axis::race, Axis::orientation};
  for (int i = 0; i < 6; ++i)
    out.push_back({"g" + std::to_string(i), "the g" + std::to_string(i), axes[i / 2],
                   i % 2 == 0 ? Role::advantaged : Role::disadvantaged});
  return out;
}

}  // namespace

TEST_CASE("selection agrees with a full-sort oracle") {
  SeededRng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = 1 + rng.below(20);
    const std::size_t cols = 1 + rng.below(6);
    const bool holes = trial % 3 == 0;
    const auto m = random_matrix(rng, rows, cols, holes);
    const std::size_t k = 1 + rng.below(rows);
    CAPTURE(trial);

    const auto got = top_bottom_structures(m, k);
    const auto want = oracle_top_bottom(m, k);
    REQUIRE(got.per_group.size() == cols);
    for (std::size_t c = 0; c < cols; ++c) {
      CHECK(got.per_group[c].best == want.best[c]);
      CHECK(got.per_group[c].worst == want.worst[c]);
    }
    CHECK(got.best_intersection == want.best_intersection);
    CHECK(got.worst_intersection == want.worst_intersection);
    CHECK(got.best_union == want.best_union);
    CHECK(got.worst_union == want.worst_union);
  }
}

TEST_CASE("structure gaps agree with a full-sort oracle") {
  SeededRng rng(77);
  const auto groups = generic_groups();
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng.below(20);
    const auto m = random_matrix(rng, rows, 6, trial % 2 == 0);
    const std::size_t k = 1 + rng.below(rows);
    CAPTURE(trial);
    for (Axis axis : kAllAxes) {
      const auto got = per_structure_gaps(m, groups, axis, k);
      const std::size_t a = static_cast<std::size_t>(axis == Axis::gender ? 0 : axis == Axis::race ? 2 : 4);
      std::vector<std::pair<int, double>> gaps;
      for (std::size_t r = 0; r < m.rows(); ++r)
        if (m.cell(r, a).n > 0 && m.cell(r, a + 1).n > 0)
          gaps.emplace_back(m.structure_ids()[r], m.cell(r, a).mean - m.cell(r, a + 1).mean);
      CHECK(got.gaps.size() == gaps.size());
      CHECK(got.best == oracle_extremes(gaps, k, false));
      CHECK(got.worst == oracle_extremes(gaps, k, true));
    }
  }
}

TEST_CASE("selection on a small known matrix") {
  // rows are structures 0..9, three groups
  const std::vector<std::vector<double>> means{
      {0.9, 0.1, 0.5}, {0.8, 0.2, 0.5}, {0.7, 0.3, 0.5}, {0.6, 0.4, 0.5}, {0.5, 0.5, 0.5},
      {0.4, 0.6, 0.5}, {0.3, 0.7, 0.5}, {0.2, 0.8, 0.5}, {0.1, 0.9, 0.5}, {0.0, 1.0, 0.6}};
  const auto m = StructureGroupMatrix::from_means({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {"a", "b", "c"}, means);
  const auto tb = top_bottom_structures(m, 2);
  CHECK(tb.per_group[0].best == std::vector<int>{0, 1});
  CHECK(tb.per_group[0].worst == std::vector<int>{9, 8});
  CHECK(tb.per_group[1].best == std::vector<int>{9, 8});
  CHECK(tb.per_group[2].best == std::vector<int>{9, 0});
  CHECK(tb.per_group[2].worst == std::vector<int>{0, 1});
  CHECK(tb.best_intersection.empty());
  CHECK(tb.best_union == std::vector<int>{0, 1, 8, 9});
  CHECK(tb.worst_intersection.empty());
  CHECK(tb.worst_union == std::vector<int>{0, 1, 8, 9});
}
