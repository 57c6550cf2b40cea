// Word-embedding logic-bomb crafting: perturbation matrix E over the
// lowest-norm embedding columns, minimizing
//     || M^(x* - c_{y*}) || - mean_{y != y*} || M^(x* - c_y) || + lambda ||E||_F
// subject to ||E x||_2 <= delta for every reference input x. Solved with a
// penalized projected-gradient method (ramped quadratic penalties + Armijo
// line search + final uniform down-scaling), since E = 0 is always feasible.
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "bombworks/dataset.hpp"
#include "bombworks/embedding.hpp"
#include "bombworks/errors.hpp"
#include "bombworks/matrix.hpp"

namespace bombworks {

struct EmbeddingBombTarget {
  SparseInputVector x;
  int target_class = 0;
};

struct EmbeddingAttackConfig {
  double lambda = 0.12;       // weight of the ||E||_F regularizer
  double delta = 0.3;         // per-reference feature-shift cap
  int n_columns = 20;         // perturbed column budget
  int max_iters = 400;
  double step0 = 0.05;        // initial line-search step
  double penalty_init = 20.0;
  double penalty_growth = 2.0;
  int penalty_interval = 40;  // iterations between penalty ramps
  double plateau_tol = 1e-6;  // relative improvement treated as a plateau
  int plateau_window = 30;
};

// Softmax membership over negative feature-space distances to the class
// centroids, with reference to the (possibly perturbed) embedding.
inline Vector membership_all(const SparseInputVector& x, const EmbeddingMatrix& m_hat,
                             const ClassCentroids& c) {
  if (c.mean.empty()) throw MissingClassError("membership: no centroids");
  Vector fx = extract(m_hat, x);
  Vector neg_dist(c.mean.size());
  for (std::size_t y = 0; y < c.mean.size(); ++y) {
    if (c.mean[y].size() != static_cast<std::size_t>(m_hat.vocab()))
      throw MissingClassError("membership: centroid missing or wrong dimension for class " +
                              std::to_string(y));
    Vector fy = matvec(m_hat.m, c.mean[y]);
    neg_dist[y] = -norm(sub(fx, fy));
  }
  return softmax(neg_dist);
}

inline double membership(const SparseInputVector& x, int y, const EmbeddingMatrix& m_hat,
                         const ClassCentroids& c) {
  Vector mu = membership_all(x, m_hat, c);
  if (y < 0 || y >= static_cast<int>(mu.size()))
    throw MissingClassError("membership: class " + std::to_string(y) + " has no centroid");
  return mu[static_cast<std::size_t>(y)];
}

// The n columns of M with smallest l2 norm, ties broken by lowest index.
// Returned in ascending column order.
inline std::vector<int> select_columns(const EmbeddingMatrix& m, int n) {
  if (n < 1 || n > m.vocab()) throw ParameterError("select_columns: bad column budget");
  std::vector<std::pair<double, int>> norms;
  norms.reserve(static_cast<std::size_t>(m.vocab()));
  for (int i = 0; i < m.vocab(); ++i) norms.push_back({m.column_norm(i), i});
  std::sort(norms.begin(), norms.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out.push_back(norms[static_cast<std::size_t>(k)].second);
  std::sort(out.begin(), out.end());
  return out;
}

struct CraftTraceRow {
  int iter = 0;
  double objective = 0.0;       // penalized objective at the current penalty weight
  double max_constraint = 0.0;  // max ||E x|| over references
  double frob = 0.0;
  double linf = 0.0;
};

struct EmbeddingCraftResult {
  Matrix e;  // d x vocab, exactly zero outside the selected columns
  EmbeddingMatrix m_hat;
  std::vector<int> columns;
  std::vector<CraftTraceRow> trace;
  // Feasibility report, recomputed from the final E over all references.
  double max_constraint = 0.0;
  double frob_e = 0.0;
  double linf_e = 0.0;
  bool convergence_warning = false;
};

namespace detail {

// Reference input restricted to the selected columns: (slot, weight) pairs.
struct RestrictedRef {
  std::vector<std::pair<int, double>> entries;
};

// One norm term || base + Es * u_s || with its objective coefficient.
struct NormTerm {
  Vector base;    // M * u, fixed
  Vector u_s;     // u restricted to selected columns (length n)
  double coeff;   // +1 for the target class, -1/(K-1) for the others
};

inline double term_value(const NormTerm& t, const Matrix& es) {
  Vector v = t.base;
  for (std::size_t j = 0; j < t.u_s.size(); ++j) {
    double u = t.u_s[j];
    if (u == 0.0) continue;
    for (std::size_t r = 0; r < es.rows; ++r) v[r] += es(r, j) * u;
  }
  return norm(v);
}

}  // namespace detail

inline EmbeddingCraftResult craft_embedding_bomb(const EmbeddingMatrix& m,
                                                 const std::vector<EmbeddingBombTarget>& bomb,
                                                 const std::vector<SparseInputVector>& ref_inputs,
                                                 const std::vector<int>& ref_labels, int n_classes,
                                                 const EmbeddingAttackConfig& cfg) {
  if (bomb.empty()) throw InputError("craft_embedding_bomb: empty logic bomb");
  if (cfg.n_columns < 1) throw ParameterError("craft_embedding_bomb: column budget must be >= 1");
  if (!(cfg.delta > 0.0)) throw ParameterError("craft_embedding_bomb: delta must be positive");
  if (cfg.lambda < 0.0) throw ParameterError("craft_embedding_bomb: lambda must be >= 0");
  if (ref_inputs.empty()) throw InputError("craft_embedding_bomb: empty reference set");

  const int d = m.dim();
  const int n = cfg.n_columns;
  std::vector<int> cols = select_columns(m, n);
  std::vector<int> slot_of(static_cast<std::size_t>(m.vocab()), -1);
  for (int k = 0; k < n; ++k) slot_of[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])] = k;

  // Centroids of the reference set in input space.
  std::vector<Vector> dense_refs;
  dense_refs.reserve(ref_inputs.size());
  for (const auto& r : ref_inputs) dense_refs.push_back(r.to_dense());
  ClassCentroids cent = centroids(dense_refs, ref_labels, n_classes);

  // Norm terms of the objective, one per (target, class).
  std::vector<detail::NormTerm> terms;
  for (const auto& t : bomb) {
    if (t.target_class < 0 || t.target_class >= n_classes)
      throw MissingClassError("craft_embedding_bomb: target class outside class set");
    Vector fx = extract(m, t.x);
    Vector x_dense = t.x.to_dense();
    for (int y = 0; y < n_classes; ++y) {
      detail::NormTerm term;
      term.base = sub(fx, matvec(m.m, cent.mean[static_cast<std::size_t>(y)]));
      term.u_s.assign(static_cast<std::size_t>(n), 0.0);
      for (int k = 0; k < n; ++k) {
        int col = cols[static_cast<std::size_t>(k)];
        term.u_s[static_cast<std::size_t>(k)] =
            x_dense[static_cast<std::size_t>(col)] - cent.mean[static_cast<std::size_t>(y)][static_cast<std::size_t>(col)];
      }
      term.coeff = (y == t.target_class) ? 1.0 : -1.0 / static_cast<double>(n_classes - 1);
      terms.push_back(std::move(term));
    }
  }

  // References restricted to the selected columns; untouched refs drop out.
  std::vector<detail::RestrictedRef> refs;
  for (const auto& r : ref_inputs) {
    detail::RestrictedRef rr;
    for (const auto& [i, w] : r.entries) {
      int slot = slot_of[static_cast<std::size_t>(i)];
      if (slot >= 0) rr.entries.push_back({slot, w});
    }
    if (!rr.entries.empty()) refs.push_back(std::move(rr));
  }

  Matrix es(static_cast<std::size_t>(d), static_cast<std::size_t>(n), 0.0);

  auto ref_violation = [&](const Matrix& e, const detail::RestrictedRef& rr, Vector* out_v) {
    Vector v(static_cast<std::size_t>(d), 0.0);
    for (const auto& [slot, w] : rr.entries)
      for (int r = 0; r < d; ++r)
        v[static_cast<std::size_t>(r)] += w * e(static_cast<std::size_t>(r), static_cast<std::size_t>(slot));
    if (out_v) *out_v = v;
    return norm(v);
  };

  auto max_constraint_of = [&](const Matrix& e) {
    double mx = 0.0;
    for (const auto& rr : refs) mx = std::max(mx, ref_violation(e, rr, nullptr));
    return mx;
  };

  auto objective = [&](const Matrix& e, double rho) {
    double obj = 0.0;
    for (const auto& t : terms) obj += t.coeff * detail::term_value(t, e);
    obj += cfg.lambda * (e.empty() ? 0.0 : norm(e, Norm::frobenius));
    double pen = 0.0;
    for (const auto& rr : refs) {
      double v = ref_violation(e, rr, nullptr) - cfg.delta;
      if (v > 0.0) pen += v * v;
    }
    return obj + rho * pen;
  };

  auto gradient = [&](const Matrix& e, double rho) {
    Matrix g(static_cast<std::size_t>(d), static_cast<std::size_t>(n), 0.0);
    for (const auto& t : terms) {
      Vector v = t.base;
      for (std::size_t j = 0; j < t.u_s.size(); ++j) {
        double u = t.u_s[j];
        if (u == 0.0) continue;
        for (int r = 0; r < d; ++r)
          v[static_cast<std::size_t>(r)] += e(static_cast<std::size_t>(r), j) * u;
      }
      double nv = norm(v);
      if (nv < 1e-12) continue;
      double c = t.coeff / nv;
      for (std::size_t j = 0; j < t.u_s.size(); ++j) {
        double u = t.u_s[j];
        if (u == 0.0) continue;
        for (int r = 0; r < d; ++r)
          g(static_cast<std::size_t>(r), j) += c * v[static_cast<std::size_t>(r)] * u;
      }
    }
    double fe = norm(e, Norm::frobenius);
    if (fe > 1e-12) {
      double c = cfg.lambda / fe;
      for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += c * e.data[i];
    }
    for (const auto& rr : refs) {
      Vector v;
      double nv = ref_violation(e, rr, &v);
      double excess = nv - cfg.delta;
      if (excess <= 0.0 || nv < 1e-12) continue;
      double c = 2.0 * rho * excess / nv;
      for (const auto& [slot, w] : rr.entries) {
        double cw = c * w;
        for (int r = 0; r < d; ++r)
          g(static_cast<std::size_t>(r), static_cast<std::size_t>(slot)) += cw * v[static_cast<std::size_t>(r)];
      }
    }
    return g;
  };

  EmbeddingCraftResult result;
  result.columns = cols;

  double rho = cfg.penalty_init;
  double f_cur = objective(es, rho);
  double f_initial = f_cur;
  double step_hint = cfg.step0;
  std::vector<double> recent;
  recent.push_back(f_cur);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // Ramp penalties while constraints are violated.
    if (iter > 0 && iter % cfg.penalty_interval == 0 && max_constraint_of(es) > cfg.delta) {
      rho *= cfg.penalty_growth;
      f_cur = objective(es, rho);
      recent.clear();
      recent.push_back(f_cur);
      step_hint = std::max(step_hint, cfg.step0 * 0.1);
    }

    Matrix g = gradient(es, rho);
    double g2 = 0.0;
    for (double x : g.data) g2 += x * x;
    if (g2 < 1e-24) break;

    // Armijo backtracking.
    double step = step_hint;
    bool accepted = false;
    Matrix trial = es;
    for (int bt = 0; bt < 30; ++bt) {
      for (std::size_t i = 0; i < es.data.size(); ++i) trial.data[i] = es.data[i] - step * g.data[i];
      double f_trial = objective(trial, rho);
      if (f_trial <= f_cur - 1e-4 * step * g2) {
        es = trial;
        f_cur = f_trial;
        accepted = true;
        step_hint = step * 1.5;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent direction at workable step: plateau

    CraftTraceRow row;
    row.iter = iter;
    row.objective = f_cur;
    row.max_constraint = max_constraint_of(es);
    row.frob = norm(es, Norm::frobenius);
    row.linf = norm(es, Norm::linf);
    result.trace.push_back(row);

    recent.push_back(f_cur);
    if (static_cast<int>(recent.size()) > cfg.plateau_window) {
      double old = recent[recent.size() - static_cast<std::size_t>(cfg.plateau_window) - 1];
      if (old - f_cur < cfg.plateau_tol * (std::abs(old) + 1e-12)) break;
    }
  }

  // Final feasibility projection: a uniform down-scaling of E satisfies all
  // constraints at once since ||(sE)x|| = s ||Ex||.
  double mc = max_constraint_of(es);
  if (mc > cfg.delta) {
    double s = cfg.delta / mc;
    for (double& x : es.data) x *= s;
  }

  result.convergence_warning = !(f_cur < f_initial - 1e-12);

  // Expand into the full-width perturbation matrix.
  result.e = Matrix(static_cast<std::size_t>(d), static_cast<std::size_t>(m.vocab()), 0.0);
  for (int k = 0; k < n; ++k) {
    int col = cols[static_cast<std::size_t>(k)];
    for (int r = 0; r < d; ++r)
      result.e(static_cast<std::size_t>(r), static_cast<std::size_t>(col)) =
          es(static_cast<std::size_t>(r), static_cast<std::size_t>(k));
  }
  result.m_hat = apply_perturbation(m, result.e);

  // Feasibility report from the final full E against every reference.
  result.max_constraint = 0.0;
  for (const auto& r : ref_inputs) {
    Vector v(static_cast<std::size_t>(d), 0.0);
    for (const auto& [i, w] : r.entries)
      for (int rr2 = 0; rr2 < d; ++rr2)
        v[static_cast<std::size_t>(rr2)] += w * result.e(static_cast<std::size_t>(rr2), static_cast<std::size_t>(i));
    result.max_constraint = std::max(result.max_constraint, norm(v));
  }
  result.frob_e = norm(result.e, Norm::frobenius);
  result.linf_e = norm(result.e, Norm::linf);
  return result;
}

// Report bundle: the perturbation matrix in the EMB1 container plus the
// iteration trace.
inline void write_craft_trace_csv(const EmbeddingCraftResult& r, std::ostream& os) {
  os << "iteration,objective,maxConstraint,frobE,linfE\n";
  char buf[160];
  for (const auto& row : r.trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g\n", row.iter, row.objective,
                  row.max_constraint, row.frob, row.linf);
    os << buf;
  }
}

}  // namespace bombworks
