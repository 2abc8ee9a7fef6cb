#include "condenser/balayage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "condenser/error.hpp"

namespace condenser {

namespace {

constexpr std::size_t kCacheSize = 4;

std::uint64_t mask_key(const std::vector<char>& mask) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : mask) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Sweeper::Sweeper(const KernelMatrix& K, qp::Options options) : K_(&K), options_(std::move(options)) {
  if (K.kind.type != KernelKind::Type::Riesz) throw Error(ErrorCode::InfeasibleSpec, "balayage needs a Riesz kernel matrix");
  a2_ = K.cloud->indices(Plate::A2);
  if (a2_.empty()) throw Error(ErrorCode::InfeasibleSpec, "cloud has no A2 nodes to sweep onto");
  const auto m = static_cast<Eigen::Index>(a2_.size());
  K22_.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      K22_(a, b) = K.values(static_cast<Eigen::Index>(a2_[static_cast<std::size_t>(a)]),
                            static_cast<Eigen::Index>(a2_[static_cast<std::size_t>(b)]));
}

const Sweeper::Factor& Sweeper::factor_for(const std::vector<char>& free_mask, std::uint64_t key,
                                           SweepStats* stats) const {
  for (auto it = cache_.begin(); it != cache_.end(); ++it) {
    if (it->key == key && it->free_mask == free_mask) {
      cache_.splice(cache_.begin(), cache_, it);
      return cache_.front();
    }
  }
  Factor f;
  f.free_mask = free_mask;
  f.key = key;
  for (std::size_t i = 0; i < free_mask.size(); ++i)
    if (free_mask[i]) f.free_idx.push_back(static_cast<Eigen::Index>(i));
  const auto m = static_cast<Eigen::Index>(f.free_idx.size());
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = K22_(f.free_idx[static_cast<std::size_t>(a)], f.free_idx[static_cast<std::size_t>(b)]);
  f.llt.compute(sub);
  if (f.llt.info() != Eigen::Success)
    throw Error(ErrorCode::SolverDiverged, "A2 kernel block is not numerically positive definite");
  if (stats) ++stats->factorizations;
  cache_.push_front(std::move(f));
  if (cache_.size() > kCacheSize) cache_.pop_back();
  return cache_.front();
}

Eigen::VectorXd Sweeper::solve_single_qp(const Eigen::VectorXd& b) const {
  qp::Problem p;
  p.H = &K22_;
  p.c = -b;
  const auto m = b.size();
  p.upper = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  p.group.assign(static_cast<std::size_t>(m), 0);
  p.target = Eigen::VectorXd::Constant(1, std::numeric_limits<double>::quiet_NaN());
  return qp::solve(p, options_).x;
}

Eigen::MatrixXd Sweeper::sweep_potentials(const Eigen::MatrixXd& B, SweepStats* stats) const {
  const auto m = static_cast<Eigen::Index>(a2_.size());
  if (B.rows() != m) throw Error(ErrorCode::DimensionMismatch, "potential block rows differ from the A2 node count");
  const auto ncol = B.cols();
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(m, ncol);
  const double tol = options_.tol * K22_.diagonal().maxCoeff();
  std::vector<std::vector<char>> mask(static_cast<std::size_t>(ncol), std::vector<char>(static_cast<std::size_t>(m), 1));
  std::vector<char> done(static_cast<std::size_t>(ncol), 0);
  std::vector<int> rounds(static_cast<std::size_t>(ncol), 0);
  const int max_rounds = options_.max_polish;
  SweepStats local;
  SweepStats& st = stats ? *stats : local;

  for (int round = 0; round < max_rounds; ++round) {
    std::map<std::uint64_t, std::vector<Eigen::Index>> groups;
    for (Eigen::Index j = 0; j < ncol; ++j)
      if (!done[static_cast<std::size_t>(j)]) groups[mask_key(mask[static_cast<std::size_t>(j)])].push_back(j);
    if (groups.empty()) break;
    st.rounds = round + 1;
    for (auto& [key, cols] : groups) {
      // Columns sharing a key may still differ in mask (hash collision): split them.
      std::map<std::vector<char>, std::vector<Eigen::Index>> exact;
      for (auto j : cols) exact[mask[static_cast<std::size_t>(j)]].push_back(j);
      for (auto& [fm, js] : exact) {
        const Factor& f = factor_for(fm, key, &st);
        const auto nf = static_cast<Eigen::Index>(f.free_idx.size());
        Eigen::MatrixXd rhs(nf, static_cast<Eigen::Index>(js.size()));
        for (Eigen::Index a = 0; a < nf; ++a)
          for (std::size_t c = 0; c < js.size(); ++c) rhs(a, static_cast<Eigen::Index>(c)) = B(f.free_idx[static_cast<std::size_t>(a)], js[c]);
        Eigen::MatrixXd sol = nf > 0 ? Eigen::MatrixXd(f.llt.solve(rhs)) : Eigen::MatrixXd(0, static_cast<Eigen::Index>(js.size()));
        const auto k = static_cast<Eigen::Index>(js.size());
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, k);
        Eigen::MatrixXd Bs(m, k);
        for (Eigen::Index c = 0; c < k; ++c) {
          Bs.col(c) = B.col(js[static_cast<std::size_t>(c)]);
          for (Eigen::Index a = 0; a < nf; ++a) T(f.free_idx[static_cast<std::size_t>(a)], c) = sol(a, c);
        }
        Eigen::MatrixXd grads = 2.0 * (K22_ * T - Bs);
        for (std::size_t c = 0; c < js.size(); ++c) {
          const Eigen::Index j = js[c];
          auto t = T.col(static_cast<Eigen::Index>(c));
          auto grad = grads.col(static_cast<Eigen::Index>(c));
          auto& mk = mask[static_cast<std::size_t>(j)];
          bool changed = false;
          for (Eigen::Index i = 0; i < m; ++i) {
            char& s = mk[static_cast<std::size_t>(i)];
            if (s && t[i] < 0) {
              s = 0;
              changed = true;
            } else if (!s && grad[i] < -tol) {
              s = 1;
              changed = true;
            }
          }
          theta.col(j) = t;
          ++rounds[static_cast<std::size_t>(j)];
          if (!changed) done[static_cast<std::size_t>(j)] = 1;
        }
      }
    }
  }
  for (Eigen::Index j = 0; j < ncol; ++j) {
    if (done[static_cast<std::size_t>(j)]) continue;
    ++st.fallbacks;
    theta.col(j) = solve_single_qp(B.col(j));
  }
  Eigen::MatrixXd grads = 2.0 * (K22_ * theta - B);
  for (Eigen::Index j = 0; j < ncol; ++j)
    for (Eigen::Index i = 0; i < m; ++i) {
      double g = grads(i, j);
      st.max_kkt_residual = std::max(st.max_kkt_residual, theta(i, j) > 0 ? std::abs(g) : std::max(0.0, -g));
    }
  return theta;
}

Eigen::MatrixXd Sweeper::source_potentials(const PointMatrix& sources) const {
  const PointCloud& c = *K_->cloud;
  PointMatrix z(static_cast<Eigen::Index>(a2_.size()), c.dim);
  for (std::size_t a = 0; a < a2_.size(); ++a) z.row(static_cast<Eigen::Index>(a)) = c.points.row(static_cast<Eigen::Index>(a2_[a]));
  return riesz_block(z, sources, K_->kind.alpha);
}

DiscreteMeasure Sweeper::sweep(const DiscreteMeasure& mu, SweepStats* stats) const {
  require_same_cloud(mu.cloud, K_->cloud, "balayage");
  const auto m = static_cast<Eigen::Index>(a2_.size());
  Eigen::MatrixXd b(m, 1);
  Eigen::VectorXd full = K_->values * mu.weights;
  for (Eigen::Index a = 0; a < m; ++a) b(a, 0) = full[static_cast<Eigen::Index>(a2_[static_cast<std::size_t>(a)])];
  Eigen::MatrixXd th = sweep_potentials(b, stats);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(mu.weights.size());
  for (Eigen::Index a = 0; a < m; ++a) w[static_cast<Eigen::Index>(a2_[static_cast<std::size_t>(a)])] = std::max(th(a, 0), 0.0);
  return DiscreteMeasure(mu.cloud, std::move(w));
}

DiscreteMeasure balayage(const DiscreteMeasure& mu, const KernelMatrix& K_riesz) {
  Sweeper s(K_riesz);
  return s.sweep(mu);
}

double green_energy_via_identity(const DiscreteMeasure& mu, const Sweeper& sweeper, GreenEnergyParts* parts) {
  const KernelMatrix& K = sweeper.kernel();
  DiscreteMeasure swept = sweeper.sweep(mu);
  Eigen::VectorXd diff = mu.weights - swept.weights;
  GreenEnergyParts p;
  p.riesz_energy = mu.weights.dot(K.values * mu.weights);
  p.swept_energy = swept.weights.dot(K.values * swept.weights);
  p.difference_norm = diff.dot(K.values * diff);
  p.difference_of_norms = p.riesz_energy - p.swept_energy;
  p.swept_mass = swept.mass();
  if (parts) *parts = p;
  return p.difference_norm;
}

double green_energy_via_identity(const DiscreteMeasure& mu, const KernelMatrix& K_riesz, GreenEnergyParts* parts) {
  Sweeper s(K_riesz);
  return green_energy_via_identity(mu, s, parts);
}

EquilibriumResult equilibrium_measure(const std::vector<std::size_t>& Q, const KernelMatrix& K, const qp::Options& options) {
  if (Q.empty()) throw Error(ErrorCode::InfeasibleSpec, "equilibrium measure of an empty node set");
  const auto m = static_cast<Eigen::Index>(Q.size());
  Eigen::MatrixXd H(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      H(a, b) = K.values(static_cast<Eigen::Index>(Q[static_cast<std::size_t>(a)]), static_cast<Eigen::Index>(Q[static_cast<std::size_t>(b)]));
  qp::Problem p;
  p.H = &H;
  p.c = Eigen::VectorXd::Zero(m);
  p.upper = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  p.group.assign(static_cast<std::size_t>(m), 0);
  p.target = Eigen::VectorXd::Constant(1, 1.0);
  qp::Result r = qp::solve(p, options);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(K.size());
  for (Eigen::Index a = 0; a < m; ++a) w[static_cast<Eigen::Index>(Q[static_cast<std::size_t>(a)])] = std::max(r.x[a], 0.0);
  EquilibriumResult out;
  out.measure = DiscreteMeasure(K.cloud, std::move(w));
  out.energy = r.objective;
  out.capacity = 1.0 / r.objective;
  out.potential_level = r.objective;
  out.kkt_residual = r.kkt_residual;
  return out;
}

DiscreteMeasure dirac_balayage(const Point& y, const Domain& domain, const Sweeper& sweeper) {
  if (!domain.contains(y)) throw Error(ErrorCode::OutsideDomain, "Dirac source must lie inside the domain");
  PointMatrix src(1, y.size());
  src.row(0) = y.transpose();
  Eigen::MatrixXd th = sweeper.sweep_potentials(sweeper.source_potentials(src));
  const auto& a2 = sweeper.targets();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(sweeper.kernel().size());
  for (std::size_t a = 0; a < a2.size(); ++a) w[static_cast<Eigen::Index>(a2[a])] = std::max(th(static_cast<Eigen::Index>(a), 0), 0.0);
  return DiscreteMeasure(sweeper.kernel().cloud, std::move(w));
}

double green_kernel_numeric(const Point& x, const Point& y, const Domain& domain, const Sweeper& sweeper) {
  if (!domain.contains(x)) throw Error(ErrorCode::OutsideDomain, "Green kernel needs interior points");
  const KernelMatrix& K = sweeper.kernel();
  double direct = riesz_kernel(x, y, K.kind.alpha, K.kind.dim);
  DiscreteMeasure swept = dirac_balayage(y, domain, sweeper);
  PointMatrix px(1, x.size());
  px.row(0) = x.transpose();
  Eigen::MatrixXd kx = sweeper.source_potentials(px);  // |A2| x 1
  double u = 0;
  const auto& a2 = sweeper.targets();
  for (std::size_t a = 0; a < a2.size(); ++a) u += kx(static_cast<Eigen::Index>(a), 0) * swept.weights[static_cast<Eigen::Index>(a2[a])];
  return std::max(direct - u, 0.0);
}

KernelMatrix green_matrix_numeric(const Domain& domain, std::shared_ptr<const PointCloud> a1,
                                  const std::vector<std::size_t>& source_rows, const Sweeper& sweeper,
                                  SweepStats* stats) {
  const KernelMatrix& K = sweeper.kernel();
  const auto n1 = static_cast<Eigen::Index>(source_rows.size());
  if (n1 != static_cast<Eigen::Index>(a1->size())) throw Error(ErrorCode::DimensionMismatch, "source rows differ from the A1 cloud");
  const auto& a2 = sweeper.targets();
  const auto m = static_cast<Eigen::Index>(a2.size());
  Eigen::MatrixXd B(m, n1);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index j = 0; j < n1; ++j)
      B(a, j) = K.values(static_cast<Eigen::Index>(a2[static_cast<std::size_t>(a)]), static_cast<Eigen::Index>(source_rows[static_cast<std::size_t>(j)]));
  Eigen::MatrixXd theta = sweeper.sweep_potentials(B, stats).cwiseMax(0.0);
  Eigen::MatrixXd K11(n1, n1);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n1; ++j)
      K11(i, j) = K.values(static_cast<Eigen::Index>(source_rows[static_cast<std::size_t>(i)]), static_cast<Eigen::Index>(source_rows[static_cast<std::size_t>(j)]));
  Eigen::MatrixXd corr = B.transpose() * theta;  // K12 Theta
  KernelMatrix G;
  G.kind = KernelKind::green(domain);
  G.diagonal_rule = K.diagonal_rule;
  G.cloud = std::move(a1);
  G.values = K11 - 0.5 * (corr + corr.transpose());
  return G;
}

KernelMatrix green_matrix(const Domain& domain, std::shared_ptr<const PointCloud> a1,
                          const std::vector<std::size_t>& source_rows, const Sweeper& sweeper, const DiagonalRule& rule) {
  if (domain.alpha == 2.0) return assemble(KernelKind::green(domain), std::move(a1), rule);
  return green_matrix_numeric(domain, std::move(a1), source_rows, sweeper);
}

ExternalField make_case_two(const Sweeper& sweeper, const PointMatrix& zeta_points, const Eigen::VectorXd& zeta_weights) {
  const KernelMatrix& K = sweeper.kernel();
  const PointCloud& c = *K.cloud;
  if (zeta_points.rows() != zeta_weights.size()) throw Error(ErrorCode::DimensionMismatch, "zeta points and weights differ in length");
  if (zeta_points.cols() != c.dim) throw Error(ErrorCode::DimensionMismatch, "zeta points have the wrong dimension");
  if ((zeta_weights.array() < 0).any()) throw Error(ErrorCode::InfeasibleSpec, "zeta must be nonnegative");
  const auto& a2 = sweeper.targets();
  Eigen::MatrixXd Bz = sweeper.source_potentials(zeta_points);  // |A2| x S
  Eigen::MatrixXd b = Bz * zeta_weights;
  Eigen::MatrixXd th = sweeper.sweep_potentials(b).cwiseMax(0.0);
  Eigen::VectorXd swept = Eigen::VectorXd::Zero(K.size());
  for (std::size_t a = 0; a < a2.size(); ++a) swept[static_cast<Eigen::Index>(a2[a])] = th(static_cast<Eigen::Index>(a), 0);
  // U^zeta at every node, with the same diagonal regularization as the matrix for near hits.
  Eigen::VectorXd uz = Eigen::VectorXd::Zero(K.size());
  const double alpha = K.kind.alpha;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double s = 0;
    for (Eigen::Index k = 0; k < zeta_points.rows(); ++k) {
      double r = (c.points.row(static_cast<Eigen::Index>(i)) - zeta_points.row(k)).norm();
      r = std::max(r, K.diagonal_rule.separation(c.cell_radius[i]));
      s += zeta_weights[k] * riesz_of_distance(r, alpha, c.dim);
    }
    uz[static_cast<Eigen::Index>(i)] = s;
  }
  ExternalField f;
  f.kind = ExternalField::Kind::CaseII;
  f.cloud = K.cloud;
  f.values = uz - K.values * swept;
  f.zeta_points = zeta_points;
  f.zeta_weights = zeta_weights;
  f.zeta_swept = swept;
  return f;
}

}  // namespace condenser
