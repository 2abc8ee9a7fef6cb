#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "condenser/solver.hpp"

namespace condenser {

/// Weighted potential W = U^lambda + f at every node of the problem cloud.
Eigen::VectorXd weighted_potential_at_nodes(const SignedDiscreteMeasure& lambda, const Problem& p);

/// Riesz potential of a signed node measure at arbitrary points, with the same
/// regularization as the kernel diagonal inside the cell of each node.
Eigen::VectorXd potential_at_points(const Eigen::VectorXd& weights, const Problem& p, const PointMatrix& x);

/// Weighted median of values (weights nonnegative, not all zero).
double weighted_median(const std::vector<double>& values, const std::vector<double>& weights);

/// Frostman characterization checks. Violations are relative to c:
/// b1 = sum (xi - lambda+) (c - W)_+ / (c (xi - lambda+)(A1)),
/// b2 = sum lambda+ (W - c)_+ / (c lambda+(A1)),
/// a2 = sum lambda- |W| / (c lambda-(A2)) over interior A2 nodes, a2_max the largest |W| / c there.
struct FrostmanReport {
  double c = 0;
  double maxviol_b1 = 0;
  double maxviol_b2 = 0;
  double maxviol_a2 = 0;
  double max_abs_a2 = 0;
  std::size_t a2_checked = 0;
  std::size_t a2_excluded = 0;
  double threshold = 0.02;
  bool pass = false;
};

FrostmanReport frostman_diagnostics(const Solution& sol, const Problem& p, double threshold = 0.02);
FrostmanReport frostman_diagnostics(const SignedDiscreteMeasure& lambda, const Problem& p, double threshold = 0.02);

/// Feasible competitor for negative controls: a fraction of the lambda+ mass is taken from the
/// low end of its widest axis and placed in the slack at the high end; lambda- is the balayage.
SignedDiscreteMeasure perturb_solution(const Solution& sol, const Problem& p, double fraction = 0.05);

struct ZoneOptions {
  int probes = 1000;
  std::uint64_t seed = 1;
  double global_tol = 0.02;   // U <= (1 + tol) c everywhere
  double a2_tol = 0.02;       // U <= tol c on interior A2 probes
  double support_min = 0.95;  // fraction of the xi support charged by lambda+ (alpha < 2)
  double support_threshold = 1e-8;  // relative to the largest lambda+ weight
};

struct ZoneReport {
  double c = 0;
  double riesz_green_gap = 0;  // max |U^lambda - U_g^lambda+| / c over A1 nodes (reported only)
  double probe_max_ratio = 0;  // max U / c over all probes
  std::size_t probes = 0;
  double a2_probe_max_ratio = 0;  // max U / c over interior A2 probes
  std::size_t a2_probes = 0;
  double support_fraction = 0;
  bool support_checked = false;   // alpha < 2 only
  double off_support_max_ratio = 0;  // max U / c over probes in D away from the xi support
  std::size_t off_support_probes = 0;
  bool pass = false;
};

/// Throws WrongField unless the field is zero.
ZoneReport zone_diagnostics(const Solution& sol, const Problem& p, const ZoneOptions& opt = {});

struct SupportReport {
  bool newtonian = false;
  double minus_mass = 0;
  double boundary_mass_fraction = 0;  // lambda- mass within one cell radius of the boundary
  double interior_mass = 0;           // lambda- mass deeper than that
  bool pass = false;
};

SupportReport support_diagnostics(const Solution& sol, const Problem& p, double min_boundary_fraction = 0.98);

void to_json(nlohmann::json& j, const FrostmanReport& r);
void to_json(nlohmann::json& j, const ZoneReport& r);
void to_json(nlohmann::json& j, const SupportReport& r);

}  // namespace condenser
