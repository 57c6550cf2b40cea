// Neural-network logic-bomb crafting. Rounds of: rebuild per-layer candidate
// pools (|theta| below mean - alpha*std of the layer's |theta|), rank the
// pool by multi-target positive impact from exact class-probability
// gradients, step the top-kappa parameters by sign(impact) * epsilon. A
// parameter is excluded permanently after its first perturbation, so the
// per-parameter distortion is exactly epsilon or zero.
#pragma once

#include <set>
#include <string>
#include <vector>

#include "bombworks/errors.hpp"
#include "bombworks/matrix.hpp"
#include "bombworks/nn.hpp"

namespace bombworks {

struct NnBombTarget {
  Vector x;
  int target_class = 0;
};

struct NnAttackConfig {
  double epsilon = 2e-3;        // per-update amplitude
  double alpha = 0.75;          // std-deviation multiple for pool admission
  int kappa = 15;               // perturbations per round
  int max_rounds = 200;
  double early_stop_margin = 0.2;  // stop once every target has prob >= 0.5 + margin
};

struct ImpactScore {
  ParamId param;
  double signed_delta = 0.0;  // multi-target sum of Eq-style deltas
  double positive = 0.0;      // |signed_delta|
  double negative = 0.0;      // |theta|
};

// Signed single-target impact from a gradient record:
//   delta = d(sigma_y)/d(theta) - sum_{y' != y} d(sigma_y')/d(theta)
inline double signed_impact(const GradientRecord& rec, int target_class, const ParamId& id) {
  double d_target = rec.grad(target_class, id);
  double d_others = 0.0;
  for (int y = 0; y < static_cast<int>(rec.class_grads.size()); ++y)
    if (y != target_class) d_others += rec.grad(y, id);
  return d_target - d_others;
}

// Multi-target positive impact: |sum over targets of the signed delta|.
// The sum is directional; a singleton list reduces exactly to the
// single-target value.
inline double multi_target_signed_impact(const std::vector<GradientRecord>& recs,
                                         const std::vector<NnBombTarget>& bomb,
                                         const ParamId& id) {
  if (recs.size() != bomb.size())
    throw DimensionError("multi_target_signed_impact: records/targets mismatch");
  double s = 0.0;
  for (std::size_t t = 0; t < recs.size(); ++t)
    s += signed_impact(recs[t], bomb[t].target_class, id);
  return s;
}

// Per-layer candidate admission: |theta| strictly below
// mean(|theta|) - alpha * std(|theta|) over the layer's parameters.
inline std::vector<ParamId> candidate_pool_layer(const Layer& layer, int layer_index,
                                                 double alpha) {
  std::size_t n = layer.param_count();
  if (n == 0) throw InputError("candidate_pool: empty layer");
  std::vector<double> mags(n);
  for (std::size_t o = 0; o < n; ++o) mags[o] = std::abs(layer.get_param(o));
  MeanStd ms = mean_std(mags);
  double r = ms.mean - alpha * ms.std;
  std::vector<ParamId> pool;
  for (std::size_t o = 0; o < n; ++o)
    if (mags[o] < r) pool.push_back({layer_index, o});
  return pool;
}

inline std::vector<ParamId> candidate_pool(const DnnExtractor& g, double alpha) {
  std::vector<ParamId> pool;
  for (int l = 0; l < static_cast<int>(g.layers.size()); ++l) {
    auto layer_pool = candidate_pool_layer(g.layers[static_cast<std::size_t>(l)], l, alpha);
    pool.insert(pool.end(), layer_pool.begin(), layer_pool.end());
  }
  return pool;
}

struct PerturbEvent {
  int round = 0;
  ParamId param;
  double delta = 0.0;         // applied step, exactly +-epsilon
  double signed_impact = 0.0;
};

struct RoundInfo {
  int round = 0;
  std::size_t pool_size = 0;
  int chosen = 0;
  double min_target_prob = 0.0;  // after this round's updates
};

struct NnCraftResult {
  DnnExtractor g_hat;
  std::vector<PerturbEvent> log;
  std::vector<RoundInfo> rounds;
  int total_rounds = 0;
  bool empty_pool = false;    // no candidates at bootstrap
  bool early_stopped = false;
  // A parameter is never re-selected after its first perturbation; this is
  // what makes the per-parameter distortion bound exactly epsilon.
  static constexpr const char* reselection_policy = "exclude-once";
};

inline NnCraftResult craft_nn_bomb(const DnnExtractor& g, const std::vector<NnBombTarget>& bomb,
                                   const SurrogateClassifier& f_hat, const NnAttackConfig& cfg) {
  if (bomb.empty()) throw InputError("craft_nn_bomb: empty logic bomb");
  if (!(cfg.epsilon > 0.0)) throw ParameterError("craft_nn_bomb: epsilon must be positive");
  if (cfg.alpha < 0.0) throw ParameterError("craft_nn_bomb: alpha must be >= 0");
  if (cfg.kappa < 1) throw ParameterError("craft_nn_bomb: kappa must be >= 1");

  NnCraftResult result;
  result.g_hat = g;
  std::set<ParamId> perturbed;

  auto min_target_prob = [&]() {
    double mn = 1.0;
    for (const auto& t : bomb) {
      Vector p = f_hat.probs(forward(result.g_hat, t.x));
      mn = std::min(mn, p[static_cast<std::size_t>(t.target_class)]);
    }
    return mn;
  };

  auto build_pool = [&]() {
    std::vector<ParamId> pool = candidate_pool(result.g_hat, cfg.alpha);
    std::vector<ParamId> fresh;
    fresh.reserve(pool.size());
    for (const auto& id : pool)
      if (!perturbed.count(id)) fresh.push_back(id);
    return fresh;
  };

  // The first pass only builds the pool (it starts empty); perturbation
  // begins on the next pass, mirroring the do-while structure.
  std::vector<ParamId> pool = build_pool();
  if (pool.empty()) {
    result.empty_pool = true;
    return result;
  }

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    if (pool.empty()) break;

    // Gradients are recomputed once per round, after the previous round's
    // updates.
    std::vector<GradientRecord> recs;
    recs.reserve(bomb.size());
    for (const auto& t : bomb) recs.push_back(class_prob_gradients(result.g_hat, f_hat, t.x));

    std::vector<ImpactScore> scored;
    scored.reserve(pool.size());
    for (const auto& id : pool) {
      ImpactScore s;
      s.param = id;
      s.signed_delta = multi_target_signed_impact(recs, bomb, id);
      s.positive = std::abs(s.signed_delta);
      s.negative = std::abs(result.g_hat.get_param(id));
      scored.push_back(s);
    }
    std::sort(scored.begin(), scored.end(), [](const ImpactScore& a, const ImpactScore& b) {
      if (a.positive != b.positive) return a.positive > b.positive;
      return a.param < b.param;
    });

    int k = std::min<int>(cfg.kappa, static_cast<int>(scored.size()));
    int applied = 0;
    for (int i = 0; i < k; ++i) {
      const ImpactScore& s = scored[static_cast<std::size_t>(i)];
      if (s.signed_delta == 0.0) break;  // no informative candidates left this round
      double step = (s.signed_delta > 0.0 ? 1.0 : -1.0) * cfg.epsilon;
      result.g_hat.add_param(s.param, step);
      perturbed.insert(s.param);
      result.log.push_back({round, s.param, step, s.signed_delta});
      ++applied;
    }

    RoundInfo info;
    info.round = round;
    info.pool_size = pool.size();
    info.chosen = applied;
    info.min_target_prob = min_target_prob();
    result.rounds.push_back(info);
    result.total_rounds = round;

    if (applied == 0) break;
    if (info.min_target_prob >= 0.5 + cfg.early_stop_margin) {
      result.early_stopped = true;
      break;
    }
    pool = build_pool();
  }
  return result;
}

// Parameter perturbation rate in per-mille, plus the largest per-parameter
// distortion between two same-architecture extractors.
inline double parameter_perturbation_rate_permille(const DnnExtractor& a, const DnnExtractor& b) {
  if (a.layers.size() != b.layers.size())
    throw DimensionError("parameter_perturbation_rate: architecture mismatch");
  std::size_t total = 0, changed = 0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const Layer& la = a.layers[l];
    const Layer& lb = b.layers[l];
    if (la.in != lb.in || la.out != lb.out)
      throw DimensionError("parameter_perturbation_rate: architecture mismatch");
    for (std::size_t o = 0; o < la.param_count(); ++o) {
      ++total;
      if (la.get_param(o) != lb.get_param(o)) ++changed;
    }
  }
  if (total == 0) throw DimensionError("parameter_perturbation_rate: empty models");
  return 1000.0 * static_cast<double>(changed) / static_cast<double>(total);
}

inline void write_perturb_log_csv(const NnCraftResult& r, std::ostream& os) {
  os << "round,layer,offset,delta,signedImpact\n";
  char buf[160];
  for (const auto& ev : r.log) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%zu,%.12g,%.12g\n", ev.round, ev.param.layer,
                  ev.param.offset, ev.delta, ev.signed_impact);
    os << buf;
  }
}

}  // namespace bombworks
