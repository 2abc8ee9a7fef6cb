#pragma once

#include <memory>
#include <vector>

#include "condenser/experiments.hpp"

namespace condenser::testing {

inline std::vector<std::size_t> all_rows(const PointCloud& c) {
  std::vector<std::size_t> r(c.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
  return r;
}

// Small Newtonian half-space problem on two discs; solves in well under a second.
inline const Problem& small_disc_problem() {
  static const Problem p = [] {
    DiscSeriesExample e;
    e.discs = 2;
    e.a1_nodes = 160;
    e.a2_nodes = 700;
    return build_problem(disc_series_example_inputs(e));
  }();
  return p;
}

// Small alpha = 1.5 ball problem.
inline const Problem& small_ball_problem() {
  static const Problem p = [] {
    BallExample e;
    e.a1_nodes = 150;
    e.a2_nodes = 700;
    return build_problem(ball_example_inputs(e));
  }();
  return p;
}

}  // namespace condenser::testing
