#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "regard/analysis.hpp"
#include "regard/random.hpp"

namespace regard::testing {

// Full-sort reference for structure selection. Sorts every (id, value) pair
// and takes a prefix; no partial selection.
inline std::vector<std::pair<int, double>> oracle_extremes(std::vector<std::pair<int, double>> xs,
                                                           std::size_t k, bool highest) {
  std::stable_sort(xs.begin(), xs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::stable_sort(xs.begin(), xs.end(), [highest](const auto& a, const auto& b) {
    return highest ? a.second > b.second : a.second < b.second;
  });
  xs.resize(std::min(k, xs.size()));
  return xs;
}

inline std::vector<int> oracle_ids(const std::vector<std::pair<int, double>>& xs) {
  std::vector<int> out;
  for (const auto& x : xs) out.push_back(x.first);
  return out;
}

struct OracleSelection {
  std::vector<std::vector<int>> best;
  std::vector<std::vector<int>> worst;
  std::vector<int> best_intersection;
  std::vector<int> worst_intersection;
  std::vector<int> best_union;
  std::vector<int> worst_union;
};

inline OracleSelection oracle_top_bottom(const StructureGroupMatrix& m, std::size_t k) {
  OracleSelection out;
  std::set<int> bu, wu;
  std::set<int> bi, wi;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    std::vector<std::pair<int, double>> col;
    for (std::size_t r = 0; r < m.rows(); ++r)
      if (m.cell(r, c).n > 0) col.emplace_back(m.structure_ids()[r], m.cell(r, c).mean);
    out.best.push_back(oracle_ids(oracle_extremes(col, k, true)));
    out.worst.push_back(oracle_ids(oracle_extremes(col, k, false)));
    const std::set<int> b(out.best.back().begin(), out.best.back().end());
    const std::set<int> w(out.worst.back().begin(), out.worst.back().end());
    bu.insert(b.begin(), b.end());
    wu.insert(w.begin(), w.end());
    if (c == 0) {
      bi = b;
      wi = w;
    } else {
      std::set<int> nb, nw;
      for (int id : bi)
        if (b.count(id)) nb.insert(id);
      for (int id : wi)
        if (w.count(id)) nw.insert(id);
      bi = nb;
      wi = nw;
    }
  }
  out.best_union.assign(bu.begin(), bu.end());
  out.worst_union.assign(wu.begin(), wu.end());
  out.best_intersection.assign(bi.begin(), bi.end());
  out.worst_intersection.assign(wi.begin(), wi.end());
  return out;
}

// Random matrix with shuffled ids, values on a coarse grid so ties occur,
// and occasional empty cells when `holes` is set.
inline StructureGroupMatrix random_matrix(SeededRng& rng, std::size_t rows, std::size_t cols, bool holes) {
  std::vector<int> ids(rows);
  for (std::size_t r = 0; r < rows; ++r) ids[r] = static_cast<int>(r * 3 + rng.below(3));
  rng.shuffle(std::span(ids));
  std::vector<std::string> groups;
  for (std::size_t c = 0; c < cols; ++c) groups.push_back("g" + std::to_string(c));
  StructureGroupMatrix m(ids, groups);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      auto& cell = m.cell(r, c);
      if (holes && rng.below(10) == 0) continue;
      cell.n = 1 + rng.below(100);
      cell.mean = static_cast<double>(static_cast<int>(rng.below(21)) - 10) / 10.0;
    }
  return m;
}

}  // namespace regard::testing
