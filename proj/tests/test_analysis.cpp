#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "regard/analysis.hpp"
#include "regard/error.hpp"
#include "regard/random.hpp"
#include "store_builders.hpp"

using namespace regard;
using namespace regard::testing;

namespace {

Categorical random_simplex(SeededRng& rng) {
  const double a = -std::log(1.0 - rng.uniform());
  const double b = -std::log(1.0 - rng.uniform());
  const double c = -std::log(1.0 - rng.uniform());
  const double s = a + b + c;
  return {a / s, b / s, (c / s)};
}

std::map<std::string, Categorical> reference_distributions() {
  return {{"man", {0.31, 0.21, 0.48}},   {"woman", {0.23, 0.23, 0.54}}, {"white", {0.10, 0.26, 0.64}},
          {"black", {0.09, 0.26, 0.65}}, {"straight", {0.28, 0.18, 0.54}}, {"gay", {0.09, 0.51, 0.40}}};
}

}  // namespace

TEST_CASE("label counts") {
  LabelCounts c;
  for (auto l : {RegardLabel::positive, RegardLabel::positive, RegardLabel::negative, RegardLabel::neutral}) c.add(l);
  CHECK(c.n() == 4);
  CHECK(c.mean() == doctest::Approx(0.25));
  // scores {1, 1, -1, 0}: mean 0.25, squared deviations sum 2.75
  CHECK(c.sample_std() == doctest::Approx(std::sqrt(2.75 / 3.0)));
  const auto d = c.dist();
  CHECK(d.positive == 0.5);
  CHECK(d.negative == 0.25);
  CHECK(d.neutral == 0.25);
  CHECK(LabelCounts{}.sample_std() == 0.0);
}

TEST_CASE("group stats") {
  const auto all_pos = slice("man", 0, 20, 0, 20);
  const auto s = group_stats(all_pos, "man", Scope::all_prompts);
  CHECK(s.n == 20);
  CHECK(s.mean == 1.0);
  CHECK(s.std == 0.0);
  CHECK(s.dist == Categorical{1.0, 0.0, 0.0});

  // baseline man distribution 32/28/40
  const auto baseline = slice("man", 4, 32, 28, 100);
  CHECK(group_stats(baseline, "man", Scope::paraphrased_only).mean == doctest::Approx(0.04).epsilon(1e-12));

  auto mixed = slice("man", kOriginalStructure, 2, 0, 2);
  const auto para = slice("man", 1, 0, 2, 2);
  mixed.insert(mixed.end(), para.begin(), para.end());
  CHECK(group_stats(mixed, "man", Scope::original_only).mean == 1.0);
  CHECK(group_stats(mixed, "man", Scope::paraphrased_only).mean == -1.0);
  CHECK(group_stats(mixed, "man", Scope::all_prompts).mean == 0.0);

  try {
    group_stats(mixed, "woman", Scope::paraphrased_only);
    FAIL("expected an empty-slice error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("woman") != std::string::npos);
    CHECK(msg.find("paraphrased_only") != std::string::npos);
  }
}

TEST_CASE("score general") {
  CHECK(score_general(slice("gay", 3, 0, 0, 50), "gay") == 0.0);
  std::vector<ScoredRecord> four{scored("gay", "a", 0, 0, RegardLabel::positive),
                                 scored("gay", "a", 1, 0, RegardLabel::positive),
                                 scored("gay", "b", 2, 0, RegardLabel::negative),
                                 scored("gay", "b", 3, 0, RegardLabel::neutral),
                                 scored("gay", "b", kOriginalStructure, 0, RegardLabel::negative)};
  CHECK(score_general(four, "gay") == doctest::Approx(0.25));
}

TEST_CASE("pairwise gap is a difference of means") {
  const auto g = make_gap(Axis::orientation, "straight", 0.1807, "gay", -0.5108);
  CHECK(g.gap == doctest::Approx(0.6915).epsilon(1e-12));
  CHECK(make_gap(Axis::race, "white", -0.3043, "black", -0.4210).gap == doctest::Approx(0.1167).epsilon(1e-12));
  CHECK(make_gap(Axis::gender, "man", 0.3, "woman", 0.3).gap == 0.0);

  auto records = slice("straight", 0, 30, 10, 50);
  const auto gay = slice("gay", 0, 5, 30, 50);
  records.insert(records.end(), gay.begin(), gay.end());
  const auto r = pairwise_gap(records, builtin_groups(), Axis::orientation);
  CHECK(r.advantaged == "straight");
  CHECK(r.gap == r.advantaged_mean - r.disadvantaged_mean);
  CHECK(r.gap == doctest::Approx(0.4 - (-0.5)));
  CHECK_THROWS_AS(pairwise_gap(records, builtin_groups(), Axis::race), DataError);
}

TEST_CASE("kl divergence") {
  auto d = reference_distributions();
  CHECK(kl_divergence(d["man"], d["man"]) == 0.0);
  CHECK(kl_divergence(d["man"], d["woman"]) == doctest::Approx(0.0169).epsilon(0.005));
  CHECK(kl_divergence(d["man"], d["gay"]) == doctest::Approx(0.2846).epsilon(0.002));
  CHECK(kl_divergence(Categorical{1, 0, 0}, Categorical{0, 1, 0}) > 10.0);
  CHECK(std::isfinite(kl_divergence(Categorical{1, 0, 0}, Categorical{0, 1, 0})));
  CHECK_THROWS_AS(kl_divergence(Categorical{0.5, 0.5, 0.5}, d["man"]), ConfigError);
  CHECK_THROWS_AS(kl_divergence(d["man"], d["man"], 0.0), ConfigError);

  SeededRng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto p = random_simplex(rng);
    const auto q = random_simplex(rng);
    CHECK(kl_divergence(p, q) >= 0.0);
    CHECK(kl_divergence(p, p) == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("kl matrix") {
  const std::vector<std::string> order{"man", "woman", "white", "black", "straight", "gay"};
  const auto m = kl_matrix(order, reference_distributions());
  for (std::size_t i = 0; i < order.size(); ++i) {
    CHECK(m.values[i][i] == 0.0);
    for (std::size_t j = 0; j < order.size(); ++j) CHECK(m.values[i][j] >= 0.0);
  }
  CHECK(m.at("black", "white") < 0.005);
  CHECK(m.at("gay", "straight") != m.at("straight", "gay"));

  std::map<std::string, Categorical> same;
  for (const auto& g : order) same[g] = {0.2, 0.3, 0.5};
  for (const auto& row : kl_matrix(order, same).values)
    for (double v : row) CHECK(v == 0.0);

  auto missing = reference_distributions();
  missing.erase("gay");
  CHECK_THROWS_AS(kl_matrix(order, missing), ConfigError);
}

TEST_CASE("per-structure means") {
  std::vector<ScoredRecord> records;
  for (int s = 0; s < 3; ++s) {
    for (const auto& r : slice("man", s, 10, 0, 10)) records.push_back(r);
    for (const auto& r : slice("woman", s, s, 0, 10)) records.push_back(r);
  }
  for (const auto& r : slice("man", kOriginalStructure, 0, 10, 10)) records.push_back(r);
  // injected skips: structure 1 lost 4 woman records
  records.erase(std::remove_if(records.begin(), records.end(),
                               [](const ScoredRecord& r) {
                                 return r.key.group_id == "woman" && r.key.structure_id == 1 && r.seed >= 6;
                               }),
                records.end());

  const auto m = per_structure_means(records, {"man", "woman"});
  REQUIRE(m.rows() == 3);
  CHECK(m.structure_ids() == std::vector<int>{0, 1, 2});
  for (std::size_t r = 0; r < 3; ++r) CHECK(m.cell(r, 0).mean == 1.0);
  CHECK(m.cell(1, 1).n == 6);
  CHECK(m.cell(1, 1).mean == doctest::Approx(1.0 / 6.0));
  CHECK(m.cell(2, 1).mean == doctest::Approx(0.2));

  const auto partial = per_structure_means(slice("man", 4, 1, 0, 2), {"man", "woman"});
  CHECK(partial.empty_cells() == std::vector<std::pair<int, std::string>>{{4, "woman"}});
  CHECK(std::isnan(partial.cell(0, 1).mean));
}

TEST_CASE("per-structure means over a full mock store") {
  const auto store = mock_store(MockProfile::reference());
  const auto m = per_structure_means(store, builtin_group_ids());
  CHECK(m.rows() == 100);
  CHECK(m.cols() == 6);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) CHECK(m.cell(r, c).n == 100);
}

TEST_CASE("top and bottom structures") {
  SUBCASE("dominant structure is in every best list") {
    std::vector<std::vector<double>> means(10, std::vector<double>(3, 0.0));
    for (std::size_t r = 0; r < 10; ++r)
      for (std::size_t c = 0; c < 3; ++c) means[r][c] = 0.01 * static_cast<double>((r * 7 + c * 3) % 10);
    means[7] = {1.0, 1.0, 1.0};
    const auto m = StructureGroupMatrix::from_means({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {"a", "b", "c"}, means);
    const auto tb = top_bottom_structures(m, 3);
    CHECK(std::find(tb.best_intersection.begin(), tb.best_intersection.end(), 7) != tb.best_intersection.end());
    for (const auto& sel : tb.per_group) CHECK(sel.best.front() == 7);
  }
  SUBCASE("disjoint bests give an empty intersection") {
    std::vector<std::vector<double>> means(6, std::vector<double>(3, 0.0));
    for (std::size_t c = 0; c < 3; ++c) {
      means[2 * c][c] = 1.0;
      means[2 * c + 1][c] = 0.9;
    }
    const auto m = StructureGroupMatrix::from_means({0, 1, 2, 3, 4, 5}, {"a", "b", "c"}, means);
    const auto tb = top_bottom_structures(m, 2);
    CHECK(tb.best_intersection.empty());
    CHECK(tb.best_union == std::vector<int>{0, 1, 2, 3, 4, 5});
    CHECK(tb.best_union.size() <= 6 * 2);
  }
  SUBCASE("ties break by ascending id") {
    const auto m = StructureGroupMatrix::from_means({4, 1, 3, 2}, {"a"}, {{0.5}, {0.5}, {0.5}, {0.5}});
    const auto tb = top_bottom_structures(m, 2);
    CHECK(tb.per_group[0].best == std::vector<int>{1, 2});
    CHECK(tb.per_group[0].worst == std::vector<int>{1, 2});
  }
  SUBCASE("k larger than the matrix") {
    const auto m = StructureGroupMatrix::from_means({0, 1}, {"a"}, {{0.1}, {0.2}});
    CHECK_THROWS_AS(top_bottom_structures(m, 3), ConfigError);
  }
  SUBCASE("union means are weighted by n") {
    auto m = StructureGroupMatrix::from_means({0, 1, 2}, {"a", "b"}, {{1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}}, 10);
    m.cell(0, 0).n = 30;
    const auto tb = top_bottom_structures(m, 1);
    CHECK(tb.best_union == std::vector<int>{0, 1});
    const auto lookup = [&](const std::string& g) {
      for (const auto& [id, v] : tb.best_union_means)
        if (id == g) return v;
      return std::nan("");
    };
    CHECK(lookup("a") == doctest::Approx(30.0 / 40.0));
    // rows 0 and 1: a is (1.0 x 30, 0.0 x 10), b is (0.0 x 10, 1.0 x 10)
    CHECK(lookup("b") == doctest::Approx(0.5));
    CHECK(lookup("all") == doctest::Approx(40.0 / 60.0));
  }
}

TEST_CASE("per-structure gaps") {
  const std::vector<std::string> cols{"man", "woman", "white", "black", "straight", "gay"};
  SUBCASE("all equal") {
    const auto m = StructureGroupMatrix::from_means({0, 1, 2}, cols, std::vector(3, std::vector(6, 0.2)));
    const auto g = per_structure_gaps(m, builtin_groups(), Axis::gender, 2);
    for (const auto& [id, gap] : g.gaps) CHECK(gap == 0.0);
    CHECK(g.best == std::vector<std::pair<int, double>>{{0, 0.0}, {1, 0.0}});
  }
  SUBCASE("a structure favouring the disadvantaged group leads the best list") {
    auto means = std::vector(5, std::vector(6, 0.1));
    means[3][0] = -0.2;  // man
    means[3][1] = 0.3;   // woman
    const auto m = StructureGroupMatrix::from_means({0, 1, 2, 3, 4}, cols, means);
    const auto g = per_structure_gaps(m, builtin_groups(), Axis::gender, 2);
    CHECK(g.best.front().first == 3);
    CHECK(g.best.front().second == doctest::Approx(-0.5));
    CHECK(g.best_mean == doctest::Approx(-0.25));
    CHECK(g.worst.front().first == 0);
  }
}

TEST_CASE("cosine similarity") {
  const std::vector<double> v{0.3, -0.2, 0.7};
  CHECK(cosine_similarity(v, v) == doctest::Approx(1.0));
  CHECK(cosine_similarity(std::vector{1.0, 0.0}, std::vector{0.0, 1.0}) == 0.0);
  CHECK(cosine_similarity(std::vector{1.0, 2.0, 3.0}, std::vector{2.0, 4.0, 6.0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine_similarity(std::vector{0.0, 0.0}, std::vector{1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(cosine_similarity(std::vector{1.0}, std::vector{1.0, 1.0}), ConfigError);
}

TEST_CASE("robustness estimators") {
  const std::vector<std::string> groups{"man", "woman"};
  SUBCASE("two identical structures") {
    std::vector<ScoredRecord> records;
    for (int s = 0; s < 2; ++s) {
      for (const auto& r : slice("man", s, 6, 2, 10)) records.push_back(r);
      for (const auto& r : slice("woman", s, 1, 5, 10)) records.push_back(r);
    }
    RobustnessOptions opt;
    opt.sample_n = 2;
    opt.n_splits = 1;
    const auto fixed = robustness_fixed(records, groups, opt);
    CHECK(fixed.pairs == 1);
    CHECK(fixed.value == doctest::Approx(1.0));
    CHECK(robustness_split(records, groups, opt).value == doctest::Approx(1.0));
  }
  SUBCASE("two structures, one split is their cosine") {
    std::vector<ScoredRecord> records;
    for (const auto& r : slice("man", 0, 10, 0, 10)) records.push_back(r);
    for (const auto& r : slice("woman", 0, 0, 0, 10)) records.push_back(r);
    for (const auto& r : slice("man", 1, 0, 0, 10)) records.push_back(r);
    for (const auto& r : slice("woman", 1, 10, 0, 10)) records.push_back(r);
    RobustnessOptions opt;
    opt.sample_n = 2;
    opt.n_splits = 1;
    // vectors (1, 0) and (0, 1)
    CHECK(robustness_split(records, groups, opt).value == doctest::Approx(0.0));
    CHECK(robustness_fixed(records, groups, opt).value == doctest::Approx(0.0));
  }
  SUBCASE("insufficient structures") {
    const auto records = slice("man", 0, 5, 5, 20);
    RobustnessOptions opt;
    CHECK_THROWS_AS(robustness_fixed(records, {"man"}, opt), ConfigError);
    CHECK_THROWS_AS(robustness_split(records, {"man"}, opt), ConfigError);
    opt.sample_n = 1;
    CHECK_THROWS_AS(robustness_fixed(records, {"man"}, opt), ConfigError);
  }
  SUBCASE("fixed seed is reproducible") {
    const auto store = mock_store(MockProfile::reference(), 3);
    RobustnessOptions opt;
    const auto a = robustness(store, builtin_group_ids(), opt);
    const auto b = robustness(store, builtin_group_ids(), opt);
    CHECK(a == b);
    CHECK(a.sampled_structures.size() == 10);
    CHECK(a.split_similarities.size() == 10);
    CHECK(a.fixed_structure_similarity <= 1.0);
    CHECK(a.fixed_structure_similarity >= -1.0);
    opt.rng_seed = 1;
    CHECK(robustness(store, builtin_group_ids(), opt).sampled_structures != a.sampled_structures);
  }
}

TEST_CASE("statistics ignore record order") {
  auto store = mock_store(MockProfile::reference(), 2);
  const auto reference = analyze(store, builtin_groups());
  const auto robust = robustness(store, builtin_group_ids(), {});
  std::mt19937_64 shuffle_rng(11);
  std::shuffle(store.begin(), store.end(), shuffle_rng);
  CHECK(analyze(store, builtin_groups()) == reference);
  CHECK(robustness(store, builtin_group_ids(), {}) == robust);
}

TEST_CASE("positive scaling keeps selections and gap signs") {
  SeededRng rng(21);
  const std::vector<std::string> cols{"man", "woman", "white", "black", "straight", "gay"};
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 5 + rng.below(15);
    std::vector<int> ids(rows);
    std::vector<std::vector<double>> means(rows, std::vector<double>(6));
    std::vector<std::vector<double>> scaled = means;
    const double factor = 0.1 + 5.0 * rng.uniform();
    for (std::size_t r = 0; r < rows; ++r) {
      ids[r] = static_cast<int>(r);
      for (std::size_t c = 0; c < 6; ++c) {
        means[r][c] = 2.0 * rng.uniform() - 1.0;
        scaled[r][c] = means[r][c] * factor;
      }
    }
    const auto a = StructureGroupMatrix::from_means(ids, cols, means);
    const auto b = StructureGroupMatrix::from_means(ids, cols, scaled);
    const auto ta = top_bottom_structures(a, 3);
    const auto tb = top_bottom_structures(b, 3);
    CHECK(ta.per_group == tb.per_group);
    for (Axis axis : kAllAxes) {
      const auto ga = per_structure_gaps(a, builtin_groups(), axis, 3);
      const auto gb = per_structure_gaps(b, builtin_groups(), axis, 3);
      for (std::size_t i = 0; i < ga.best.size(); ++i) CHECK(ga.best[i].first == gb.best[i].first);
      for (std::size_t i = 0; i < ga.gaps.size(); ++i)
        CHECK((ga.gaps[i].second > 0) == (gb.gaps[i].second > 0));
    }
  }
}

TEST_CASE("analysis document") {
  const auto store = mock_store(MockProfile::reference(), 2);
  const auto a = analyze(store, builtin_groups());
  CHECK(a.group_order == builtin_group_ids());
  REQUIRE(a.group_stats.count("paraphrased_only") == 1);
  CHECK(a.group_stats.at("paraphrased_only").front().group_id == "all");
  CHECK(a.group_stats.at("paraphrased_only").front().n == 12000);
  CHECK(a.pairwise_gap.at("original_only").size() == 3);
  CHECK(a.per_structure_gaps.size() == 3);
  CHECK(a.top_bottom.k == 5);

  for (const auto& [scope, stats] : a.group_stats)
    for (const auto& s : stats) {
      CHECK(s.mean == doctest::Approx(s.dist.positive - s.dist.negative).epsilon(1e-9));
      CHECK(s.dist.positive + s.dist.negative + s.dist.neutral == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(std::abs(s.mean) <= 1.0);
    }

  const nlohmann::json j = a;
  CHECK(j.get<AnalysisResult>() == a);
  CHECK(nlohmann::json(j.get<AnalysisResult>()).dump() == j.dump());
}
