#include "condenser/measures.hpp"

#include <cmath>
#include <fstream>

#include "condenser/error.hpp"

namespace condenser {

void require_same_cloud(const std::shared_ptr<const PointCloud>& a, const std::shared_ptr<const PointCloud>& b,
                        const char* what) {
  if (!a || a.get() != b.get()) throw Error(ErrorCode::CloudMismatch, std::string(what) + ": clouds differ");
}

DiscreteMeasure::DiscreteMeasure(std::shared_ptr<const PointCloud> c, Eigen::VectorXd w)
    : cloud(std::move(c)), weights(std::move(w)) {
  if (!cloud) throw Error(ErrorCode::CloudMismatch, "measure without a cloud");
  if (weights.size() != static_cast<Eigen::Index>(cloud->size()))
    throw Error(ErrorCode::DimensionMismatch, "weight vector size differs from the cloud size");
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (!std::isfinite(weights[i]) || weights[i] < 0)
      throw Error(ErrorCode::InfeasibleSpec, "weight " + std::to_string(i) + " is negative or not finite");
}

DiscreteMeasure DiscreteMeasure::zero(std::shared_ptr<const PointCloud> cloud) {
  const auto n = static_cast<Eigen::Index>(cloud->size());
  return DiscreteMeasure(std::move(cloud), Eigen::VectorXd::Zero(n));
}

DiscreteMeasure DiscreteMeasure::dirac(std::shared_ptr<const PointCloud> cloud, std::size_t i) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud->size()));
  if (i >= cloud->size()) throw Error(ErrorCode::DimensionMismatch, "node index out of range");
  w[static_cast<Eigen::Index>(i)] = 1.0;
  return DiscreteMeasure(std::move(cloud), std::move(w));
}

SignedDiscreteMeasure::SignedDiscreteMeasure(DiscreteMeasure p, DiscreteMeasure m)
    : plus(std::move(p)), minus(std::move(m)) {
  require_same_cloud(plus.cloud, minus.cloud, "signed measure");
  const PointCloud& c = *plus.cloud;
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto k = static_cast<Eigen::Index>(i);
    if (plus.weights[k] > 0 && c.plate[i] != Plate::A1)
      throw Error(ErrorCode::InfeasibleSpec, "positive part charges non-A1 node " + std::to_string(i));
    if (minus.weights[k] > 0 && c.plate[i] != Plate::A2)
      throw Error(ErrorCode::InfeasibleSpec, "negative part charges non-A2 node " + std::to_string(i));
  }
}

ExternalField ExternalField::zero(std::shared_ptr<const PointCloud> cloud) {
  ExternalField f;
  f.kind = Kind::Zero;
  f.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud->size()));
  f.cloud = std::move(cloud);
  return f;
}

ExternalField ExternalField::case_one(std::shared_ptr<const PointCloud> cloud, Eigen::VectorXd values) {
  if (values.size() != static_cast<Eigen::Index>(cloud->size()))
    throw Error(ErrorCode::DimensionMismatch, "field vector size differs from the cloud size");
  for (std::size_t i = 0; i < cloud->size(); ++i) {
    double v = values[static_cast<Eigen::Index>(i)];
    if (!std::isfinite(v)) throw Error(ErrorCode::InfeasibleSpec, "field value at node " + std::to_string(i) + " is not finite");
    if (v < 0) throw Error(ErrorCode::InfeasibleSpec, "field value at node " + std::to_string(i) + " is negative");
    if (cloud->plate[i] == Plate::A2 && v != 0)
      throw Error(ErrorCode::InfeasibleSpec, "field must vanish on A2 node " + std::to_string(i));
  }
  ExternalField f;
  f.kind = Kind::CaseI;
  f.cloud = std::move(cloud);
  f.values = std::move(values);
  return f;
}

bool ExternalField::is_zero() const { return kind == Kind::Zero || values.cwiseAbs().maxCoeff() == 0.0; }

ConstraintMeasure::ConstraintMeasure(DiscreteMeasure x) : xi(std::move(x)) {
  const PointCloud& c = *xi.cloud;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (xi.weights[static_cast<Eigen::Index>(i)] > 0 && c.plate[i] != Plate::A1)
      throw Error(ErrorCode::InfeasibleSpec, "constraint charges non-A1 node " + std::to_string(i));
  total = xi.mass();
  if (!(total > 1)) throw Error(ErrorCode::Infeasible, "constraint mass " + std::to_string(total) + " must exceed 1");
  if (total <= 1 + 1e-10)
    throw Error(ErrorCode::DegenerateConstraint, "constraint mass within 1e-10 of 1 leaves no room for the optimizer");
}

Eigen::VectorXd potential(const DiscreteMeasure& mu, const KernelMatrix& K) {
  require_same_cloud(mu.cloud, K.cloud, "potential");
  return K.values * mu.weights;
}

Eigen::VectorXd potential(const SignedDiscreteMeasure& mu, const KernelMatrix& K) {
  require_same_cloud(mu.cloud(), K.cloud, "potential");
  return K.values * mu.net();
}

double energy(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const KernelMatrix& K) {
  require_same_cloud(mu.cloud, K.cloud, "energy");
  require_same_cloud(nu.cloud, K.cloud, "energy");
  return mu.weights.dot(K.values * nu.weights);
}

double energy(const SignedDiscreteMeasure& mu, const SignedDiscreteMeasure& nu, const KernelMatrix& K) {
  require_same_cloud(mu.cloud(), K.cloud, "energy");
  require_same_cloud(nu.cloud(), K.cloud, "energy");
  return mu.net().dot(K.values * nu.net());
}

double energy(const SignedDiscreteMeasure& mu, const KernelMatrix& K) { return energy(mu, mu, K); }

Eigen::VectorXd weighted_potential(const DiscreteMeasure& mu, const KernelMatrix& K, const ExternalField& f) {
  require_same_cloud(f.cloud, K.cloud, "weighted potential");
  return potential(mu, K) + f.values;
}

Eigen::VectorXd weighted_potential(const SignedDiscreteMeasure& mu, const KernelMatrix& K, const ExternalField& f) {
  require_same_cloud(f.cloud, K.cloud, "weighted potential");
  return potential(mu, K) + f.values;
}

double weighted_energy(const DiscreteMeasure& mu, const KernelMatrix& K, const ExternalField& f) {
  require_same_cloud(f.cloud, K.cloud, "weighted energy");
  return energy(mu, mu, K) + 2.0 * f.values.dot(mu.weights);
}

double weighted_energy(const SignedDiscreteMeasure& mu, const KernelMatrix& K, const ExternalField& f) {
  require_same_cloud(f.cloud, K.cloud, "weighted energy");
  return energy(mu, K) + 2.0 * f.values.dot(mu.plus.weights);
}

AdmissibilityReport check_admissible(const SignedDiscreteMeasure& mu, const ConstraintMeasure& xi, double tol) {
  require_same_cloud(mu.cloud(), xi.xi.cloud, "admissibility");
  AdmissibilityReport r;
  r.plus_mass = mu.plus.mass();
  r.minus_mass = mu.minus.mass();
  for (Eigen::Index i = 0; i < mu.plus.weights.size(); ++i) {
    double excess = mu.plus.weights[i] - xi.xi.weights[i];
    r.max_excess = std::max(r.max_excess, excess);
    if (excess > tol) r.violations.push_back(static_cast<std::size_t>(i));
  }
  std::string msg;
  if (!r.violations.empty()) msg += std::to_string(r.violations.size()) + " nodes exceed the constraint; ";
  if (std::abs(r.plus_mass - 1) > tol) msg += "positive mass " + std::to_string(r.plus_mass) + " != 1; ";
  if (std::abs(r.minus_mass - 1) > tol) msg += "negative mass " + std::to_string(r.minus_mass) + " != 1; ";
  r.admissible = msg.empty();
  r.message = msg.empty() ? "admissible" : msg;
  return r;
}

void write_measure_csv(const DiscreteMeasure& mu, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out.precision(17);
  const PointCloud& c = *mu.cloud;
  out << "index";
  for (int d = 0; d < c.dim; ++d) out << ",x" << d + 1;
  out << ",weight\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    out << i;
    for (int d = 0; d < c.dim; ++d) out << ',' << c.points(static_cast<Eigen::Index>(i), d);
    out << ',' << mu.weights[static_cast<Eigen::Index>(i)] << '\n';
  }
}

}  // namespace condenser
