#include "condenser/qp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <string>

#include "condenser/error.hpp"

namespace condenser::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum State : char { Free = 0, Lower = 1, Upper = 2 };

struct Groups {
  std::vector<std::vector<Eigen::Index>> members;
  std::vector<bool> has_target;
};

Groups make_groups(const Problem& p) {
  const auto n = p.c.size();
  if (p.H == nullptr || p.H->rows() != n || p.H->cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "QP matrix size differs from the linear term");
  if (p.upper.size() != n || static_cast<Eigen::Index>(p.group.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "QP bound or group vector has the wrong size");
  Groups g;
  g.members.resize(static_cast<std::size_t>(p.target.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    int gi = p.group[static_cast<std::size_t>(i)];
    if (gi < 0 || gi >= p.target.size()) throw Error(ErrorCode::DimensionMismatch, "QP group id out of range");
    if (!(p.upper[i] >= 0)) throw Error(ErrorCode::Infeasible, "negative upper bound");
    g.members[static_cast<std::size_t>(gi)].push_back(i);
  }
  for (Eigen::Index k = 0; k < p.target.size(); ++k) {
    bool t = !std::isnan(p.target[k]);
    g.has_target.push_back(t);
    if (!t) continue;
    double cap = 0;
    for (auto i : g.members[static_cast<std::size_t>(k)]) cap += p.upper[i];
    if (p.target[k] < 0 || cap < p.target[k] * (1 - 1e-14) || g.members[static_cast<std::size_t>(k)].empty())
      throw Error(ErrorCode::Infeasible, "group " + std::to_string(k) + " cannot reach its target sum");
  }
  return g;
}

// Sum over the group of clamp(y - tau, 0, u).
double clamped_sum(const Problem& p, const std::vector<Eigen::Index>& idx, const Eigen::VectorXd& y, double tau) {
  double s = 0;
  for (auto i : idx) s += std::clamp(y[i] - tau, 0.0, p.upper[i]);
  return s;
}

void project_group(const Problem& p, const std::vector<Eigen::Index>& idx, double target, const Eigen::VectorXd& y,
                   Eigen::VectorXd& out) {
  double hi = -kInf, lo = kInf;
  for (auto i : idx) {
    hi = std::max(hi, y[i]);
    lo = std::min(lo, y[i] - std::min(p.upper[i], target));
  }
  lo -= 1e-300;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (clamped_sum(p, idx, y, mid) > target) lo = mid;
    else hi = mid;
  }
  double tau = 0.5 * (lo + hi);
  // Exact solve on the free set identified at tau.
  double sum_free = 0, sum_upper = 0;
  int nfree = 0;
  for (auto i : idx) {
    double v = y[i] - tau;
    if (v >= p.upper[i]) sum_upper += p.upper[i];
    else if (v > 0) {
      sum_free += y[i];
      ++nfree;
    }
  }
  if (nfree > 0) {
    double t = (sum_free + sum_upper - target) / nfree;
    if (t >= lo && t <= hi) tau = t;
  }
  for (auto i : idx) out[i] = std::clamp(y[i] - tau, 0.0, p.upper[i]);
}

Eigen::VectorXd project_impl(const Problem& p, const Groups& g, const Eigen::VectorXd& y) {
  Eigen::VectorXd out(y.size());
  for (std::size_t k = 0; k < g.members.size(); ++k) {
    const auto& idx = g.members[k];
    if (!g.has_target[k]) {
      for (auto i : idx) out[i] = std::clamp(y[i], 0.0, p.upper[i]);
    } else {
      project_group(p, idx, p.target[static_cast<Eigen::Index>(k)], y, out);
    }
  }
  return out;
}

double median(std::vector<double>& v) {
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

double natural_residual(const Problem& p, const Groups& g, const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                        const Eigen::VectorXd& nu, double scale) {
  double worst = 0;
  for (std::size_t k = 0; k < g.members.size(); ++k)
    for (auto i : g.members[k]) {
      double r = grad[i] - nu[static_cast<Eigen::Index>(k)];
      double moved = std::clamp(x[i] - r / scale, 0.0, p.upper[i]);
      worst = std::max(worst, std::abs(x[i] - moved) * scale);
    }
  return worst;
}

Eigen::VectorXd estimate_multipliers(const Problem& p, const Groups& g, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& grad) {
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.members.size()));
  for (std::size_t k = 0; k < g.members.size(); ++k) {
    if (!g.has_target[k]) continue;
    std::vector<double> inside, lower_side, upper_side;
    for (auto i : g.members[k]) {
      if (x[i] > 0 && x[i] < p.upper[i]) inside.push_back(grad[i]);
      else if (x[i] <= 0) lower_side.push_back(grad[i]);
      else upper_side.push_back(grad[i]);
    }
    if (!inside.empty()) {
      nu[static_cast<Eigen::Index>(k)] = median(inside);
    } else {
      // Any value between the largest upper-bound gradient and the smallest lower-bound one.
      double a = upper_side.empty() ? -kInf : *std::max_element(upper_side.begin(), upper_side.end());
      double b = lower_side.empty() ? kInf : *std::min_element(lower_side.begin(), lower_side.end());
      if (std::isinf(a)) nu[static_cast<Eigen::Index>(k)] = b;
      else if (std::isinf(b)) nu[static_cast<Eigen::Index>(k)] = a;
      else nu[static_cast<Eigen::Index>(k)] = 0.5 * (a + b);
    }
  }
  return nu;
}

double diag_scale(const Eigen::MatrixXd& H) { return std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300); }

struct PolishOutcome {
  bool ok = false;
  Eigen::VectorXd x;
  Eigen::VectorXd Hx;
  Eigen::VectorXd nu;
  int steps = 0;
};

// Primal-dual active-set iteration from an initial classification.
PolishOutcome polish(const Problem& p, const Groups& g, std::vector<char> state, int max_steps) {
  const Eigen::MatrixXd& H = *p.H;
  const auto n = p.c.size();
  const auto G = static_cast<Eigen::Index>(g.members.size());
  PolishOutcome out;
  std::set<std::vector<char>> seen;
  for (int step = 0; step < max_steps; ++step) {
    out.steps = step + 1;
    if (!seen.insert(state).second) return out;  // cycling
    std::vector<Eigen::Index> F;
    Eigen::VectorXd xb = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] == Free) F.push_back(i);
      else if (state[static_cast<std::size_t>(i)] == Upper) xb[i] = p.upper[i];
    }
    // Groups with an equality but no free member: the sum is fixed by the bounds.
    std::vector<Eigen::Index> eq;
    Eigen::VectorXd group_free_count = Eigen::VectorXd::Zero(G);
    for (auto i : F) group_free_count[p.group[static_cast<std::size_t>(i)]] += 1;
    for (Eigen::Index k = 0; k < G; ++k) {
      if (!g.has_target[static_cast<std::size_t>(k)]) continue;
      if (group_free_count[k] > 0) {
        eq.push_back(k);
      } else {
        double s = 0;
        for (auto i : g.members[static_cast<std::size_t>(k)]) s += xb[i];
        if (std::abs(s - p.target[k]) > 1e-12 * std::max(1.0, p.target[k])) {
          // Free the member whose bound is cheapest to leave.
          Eigen::Index pick = g.members[static_cast<std::size_t>(k)].front();
          state[static_cast<std::size_t>(pick)] = Free;
          F.clear();
          break;
        }
      }
    }
    if (F.empty() && std::any_of(state.begin(), state.end(), [](char s) { return s == Free; })) continue;

    Eigen::VectorXd x = xb;
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(G);
    if (!F.empty()) {
      const auto m = static_cast<Eigen::Index>(F.size());
      Eigen::MatrixXd HF(m, m);
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) HF(a, b) = H(F[static_cast<std::size_t>(a)], F[static_cast<std::size_t>(b)]);
      Eigen::LLT<Eigen::MatrixXd> llt(HF);
      if (llt.info() != Eigen::Success) return out;
      Eigen::VectorXd Hxb = H * xb;
      Eigen::VectorXd rhs(m);
      for (Eigen::Index a = 0; a < m; ++a) rhs[a] = -p.c[F[static_cast<std::size_t>(a)]] - Hxb[F[static_cast<std::size_t>(a)]];
      Eigen::VectorXd base = llt.solve(rhs);
      const auto k = static_cast<Eigen::Index>(eq.size());
      if (k > 0) {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(m, k);
        for (Eigen::Index a = 0; a < m; ++a) {
          int gi = p.group[static_cast<std::size_t>(F[static_cast<std::size_t>(a)])];
          for (Eigen::Index b = 0; b < k; ++b)
            if (eq[static_cast<std::size_t>(b)] == gi) E(a, b) = 1.0;
        }
        Eigen::MatrixXd HE = llt.solve(E);
        Eigen::MatrixXd S = E.transpose() * HE;
        Eigen::VectorXd need(k);
        for (Eigen::Index b = 0; b < k; ++b) {
          Eigen::Index gi = eq[static_cast<std::size_t>(b)];
          double fixed = 0;
          for (auto i : g.members[static_cast<std::size_t>(gi)]) fixed += xb[i];
          need[b] = p.target[gi] - fixed;
        }
        need -= E.transpose() * base;
        Eigen::VectorXd half_nu = S.ldlt().solve(need);
        base += HE * half_nu;
        for (Eigen::Index b = 0; b < k; ++b) nu[eq[static_cast<std::size_t>(b)]] = 2.0 * half_nu[b];
      }
      for (Eigen::Index a = 0; a < m; ++a) x[F[static_cast<std::size_t>(a)]] = base[a];
    }
    Eigen::VectorXd Hx = H * x;
    Eigen::VectorXd grad = 2.0 * (Hx + p.c);
    // For equality groups without free members, pick the multiplier from the bound gradients.
    for (Eigen::Index k = 0; k < G; ++k) {
      if (!g.has_target[static_cast<std::size_t>(k)] || group_free_count[k] > 0) continue;
      double a = -kInf, b = kInf;
      for (auto i : g.members[static_cast<std::size_t>(k)]) {
        if (state[static_cast<std::size_t>(i)] == Upper) a = std::max(a, grad[i]);
        else b = std::min(b, grad[i]);
      }
      nu[k] = std::isinf(a) ? b : (std::isinf(b) ? a : 0.5 * (a + b));
    }
    bool changed = false;
    std::vector<char> next = state;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = grad[i] - nu[p.group[static_cast<std::size_t>(i)]];
      char& s = next[static_cast<std::size_t>(i)];
      if (s == Free) {
        if (x[i] < 0) s = Lower;
        else if (x[i] > p.upper[i]) s = Upper;
      } else if (s == Lower) {
        if (r < 0) s = Free;
      } else if (r > 0) {
        s = Free;
      }
      changed = changed || s != state[static_cast<std::size_t>(i)];
    }
    if (!changed) {
      out.ok = true;
      out.x = x;
      out.Hx = Hx;
      out.nu = nu;
      return out;
    }
    state = std::move(next);
  }
  return out;
}

std::vector<char> classify(const Problem& p, const Eigen::VectorXd& x) {
  std::vector<char> s(static_cast<std::size_t>(x.size()), Free);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] <= 0) s[static_cast<std::size_t>(i)] = Lower;
    else if (x[i] >= p.upper[i]) s[static_cast<std::size_t>(i)] = Upper;
  }
  return s;
}

}  // namespace

double objective(const Problem& p, const Eigen::VectorXd& x) { return x.dot(*p.H * x) + 2.0 * p.c.dot(x); }

Eigen::VectorXd project(const Problem& p, const Eigen::VectorXd& y) {
  Groups g = make_groups(p);
  return project_impl(p, g, y);
}

double kkt_residual(const Problem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& Hx, Eigen::VectorXd* multipliers) {
  Groups g = make_groups(p);
  Eigen::VectorXd grad = 2.0 * (Hx + p.c);
  Eigen::VectorXd nu = estimate_multipliers(p, g, x, grad);
  if (multipliers) *multipliers = nu;
  return natural_residual(p, g, x, grad, nu, 2.0 * diag_scale(*p.H));
}

Result solve(const Problem& p, const Options& opt, const Eigen::VectorXd* x0) {
  Groups g = make_groups(p);
  const Eigen::MatrixXd& H = *p.H;
  const auto n = p.c.size();
  const double scale = 2.0 * diag_scale(H);
  Result res;
  res.kkt_tolerance = opt.tol * diag_scale(H);

  std::ofstream trace;
  if (!opt.trace_path.empty()) {
    trace.open(opt.trace_path);
    if (!trace) throw Error(ErrorCode::IoError, "cannot open trace file " + opt.trace_path);
    trace << "iteration,objective,kkt_residual\n";
    trace.precision(17);
  }

  Eigen::VectorXd start(n);
  if (x0 != nullptr) {
    if (x0->size() != n) throw Error(ErrorCode::DimensionMismatch, "start vector has the wrong size");
    start = *x0;
  } else {
    start.setZero();
    for (std::size_t k = 0; k < g.members.size(); ++k)
      if (g.has_target[k])
        for (auto i : g.members[k]) start[i] = p.target[static_cast<Eigen::Index>(k)] / static_cast<double>(g.members[k].size());
  }
  Eigen::VectorXd x = project_impl(p, g, start);
  Eigen::VectorXd Hx = H * x;
  double obj = x.dot(Hx) + 2.0 * p.c.dot(x);
  res.objective_log.push_back(obj);

  auto finish = [&](const Eigen::VectorXd& xf, const Eigen::VectorXd& Hxf, const Eigen::VectorXd& nu, int iters) {
    res.x = xf;
    res.multiplier = nu;
    res.objective = xf.dot(Hxf) + 2.0 * p.c.dot(xf);
    Eigen::VectorXd grad = 2.0 * (Hxf + p.c);
    res.kkt_residual = natural_residual(p, g, xf, grad, nu, scale);
    res.iterations = iters;
    res.converged = res.kkt_residual <= res.kkt_tolerance;
    if (trace) trace << iters << ',' << res.objective << ',' << res.kkt_residual << '\n';
  };

  auto try_polish = [&](const std::vector<char>& state, int iters) -> bool {
    PolishOutcome po = polish(p, g, state, opt.max_polish);
    res.polish_steps += po.steps;
    if (!po.ok) return false;
    double pobj = po.x.dot(po.Hx) + 2.0 * p.c.dot(po.x);
    Eigen::VectorXd grad = 2.0 * (po.Hx + p.c);
    double r = natural_residual(p, g, po.x, grad, po.nu, scale);
    if (r > res.kkt_tolerance) return false;
    if (pobj > obj + 1e-10 * (1.0 + std::abs(obj))) return false;
    res.objective_log.push_back(std::min(pobj, obj));
    finish(po.x, po.Hx, po.nu, iters);
    return true;
  };

  if (try_polish(classify(p, x), 0)) return res;

  double step = 1.0 / scale;
  std::vector<char> last_state = classify(p, x);
  int stable = 0;
  int next_polish = 20;
  int polish_gap = 20;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::VectorXd grad = 2.0 * (Hx + p.c);
    Eigen::VectorXd y = project_impl(p, g, x - step * grad);
    Eigen::VectorXd d = y - x;
    double dn = d.squaredNorm();
    Eigen::VectorXd nu = estimate_multipliers(p, g, x, grad);
    double kkt = natural_residual(p, g, x, grad, nu, scale);
    if (trace) trace << it - 1 << ',' << obj << ',' << kkt << '\n';
    if (kkt <= res.kkt_tolerance) {
      finish(x, Hx, nu, it - 1);
      return res;
    }
    if (dn == 0) {
      step = 1.0 / scale;
      continue;
    }
    Eigen::VectorXd Hd = H * d;
    double dHd = d.dot(Hd);
    double slope = grad.dot(d);
    if (slope >= 0 || dHd <= 0) {
      step = 1.0 / scale;
      if (it > 3 && slope >= 0) break;
      continue;
    }
    double t = std::min(1.0, -slope / (2.0 * dHd));
    x += t * d;
    Hx += t * Hd;
    obj += t * slope + t * t * dHd;
    if (t == 1.0) x = y;  // keep exact bound values
    if (it % 50 == 0) {
      Hx = H * x;
      obj = x.dot(Hx) + 2.0 * p.c.dot(x);
    }
    res.objective_log.push_back(std::min(obj, res.objective_log.back()));
    step = dn / (2.0 * dHd);

    std::vector<char> st = classify(p, y);
    stable = st == last_state ? stable + 1 : 0;
    last_state = std::move(st);
    if (it >= next_polish && stable >= 10) {
      if (try_polish(last_state, it)) return res;
      polish_gap *= 2;
      next_polish = it + polish_gap;
    }
  }
  Eigen::VectorXd grad = 2.0 * (Hx + p.c);
  finish(x, Hx, estimate_multipliers(p, g, x, grad), opt.max_iter);
  if (!res.converged)
    throw Error(ErrorCode::SolverDiverged, "QP stopped with KKT residual " + std::to_string(res.kkt_residual) +
                                               " above tolerance " + std::to_string(res.kkt_tolerance));
  return res;
}

}  // namespace condenser::qp
