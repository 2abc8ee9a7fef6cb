#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "condenser/solver.hpp"
#include "condenser/verify.hpp"

namespace condenser {

/// One run, as read from a TOML file. Every table and key is documented in the README;
/// unknown keys are rejected.
struct RunConfig {
  std::string text;                // raw file contents
  std::filesystem::path base_dir;  // relative file names resolve against this
  std::uint64_t seed = 0;

  // [domain]
  DomainKind domain_kind = DomainKind::HalfSpace;
  int dim = 3;
  double alpha = 2.0;
  std::vector<double> center;
  double radius = 1.0;

  // [a1]
  enum class A1Shape { BallInterior, DiscStack, DiscSeries, Custom } a1_shape = A1Shape::DiscSeries;
  int a1_nodes = 500;
  double a1_margin = 0.0;
  std::vector<Disc> discs;  // DiscStack
  int disc_count = 3;       // DiscSeries: discs {x1 = 1/k, radius k}
  std::string a1_points_file;

  // [a2]
  int a2_nodes = 2000;
  AnnulusOnBoundary shell;  // outer_radius 0: truncation factor times the A1 diameter

  // [constraint]
  enum class ConstraintShape { ScaledEquilibrium, DiscSeries, WeightsFile } constraint = ConstraintShape::DiscSeries;
  double q = 2.0;
  std::string weights_file;

  // [field]
  ProblemInputs::FieldKind field = ProblemInputs::FieldKind::Zero;
  std::string field_values_file;
  std::vector<std::vector<double>> zeta_points;
  std::vector<double> zeta_weights;

  // [solver]
  std::string method = "bridge";  // bridge | direct
  double tol = 1e-7;
  int max_iter = 20000;
  double beta = 0.54;
  int block_iterations = 6;

  // [diagnostics]
  bool frostman = true;
  bool zone = true;
  bool support = true;
  double threshold = 0.02;
  int probes = 1000;

  // [output]
  std::string out_dir = "out";
  std::vector<std::string> formats{"csv", "json"};
};

/// Throws Error(ConfigError) naming the line and key on any schema violation.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Discretizes the plates and forms xi and the field.
ProblemInputs build_inputs(const RunConfig& cfg);

/// SHA-256 of arbitrary bytes, lowercase hex.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of the config text, lowercase hex.
inline std::string config_hash(std::string_view text) { return sha256_hex(text); }

}  // namespace condenser
