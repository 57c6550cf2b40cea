// Countermeasures: uniform noise injection into model parameters,
// feature-space anomaly vetting over groups of similar inputs, and a
// parameter-diff audit between two same-architecture models.
#pragma once

#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "bombworks/embedding.hpp"
#include "bombworks/errors.hpp"
#include "bombworks/matrix.hpp"
#include "bombworks/nn.hpp"
#include "bombworks/rng.hpp"

namespace bombworks {

inline EmbeddingMatrix noise_inject(const EmbeddingMatrix& m, double rho, RngStream& rng) {
  if (rho < 0.0) throw ParameterError("noise_inject: rho must be non-negative");
  EmbeddingMatrix out = m;
  if (rho == 0.0) return out;
  for (double& x : out.m.data) x += rng.uniform(-rho, rho);
  return out;
}

inline DnnExtractor noise_inject(const DnnExtractor& g, double rho, RngStream& rng) {
  if (rho < 0.0) throw ParameterError("noise_inject: rho must be non-negative");
  DnnExtractor out = g;
  if (rho == 0.0) return out;
  for (auto& l : out.layers) {
    for (double& x : l.w) x += rng.uniform(-rho, rho);
    for (double& x : l.b) x += rng.uniform(-rho, rho);
  }
  return out;
}

// Anomaly vetting: a probe is suspicious when its feature vector sits far
// from the mean feature of its k nearest input-space neighbours, relative
// to that group's internal feature spread. Higher score = more suspicious.
struct VetReport {
  std::vector<double> scores;
  std::vector<std::size_t> flagged;  // indices with score > threshold
  double threshold = 0.0;
};

inline VetReport vet_anomaly(const std::function<Vector(const Vector&)>& feature_fn,
                             const std::vector<Vector>& probes, int k, double threshold = 3.0) {
  if (k < 1) throw ParameterError("vet_anomaly: k must be >= 1");
  if (static_cast<std::size_t>(k) >= probes.size())
    throw ParameterError("vet_anomaly: need more probes than neighbours");

  std::size_t n = probes.size();
  std::vector<Vector> feats(n);
  for (std::size_t i = 0; i < n; ++i) feats[i] = feature_fn(probes[i]);

  VetReport rep;
  rep.threshold = threshold;
  rep.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // k nearest neighbours in input space (self excluded, ties by index).
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.push_back({norm(sub(probes[i], probes[j])), j});
    }
    std::sort(dist.begin(), dist.end());
    Vector mean_feat(feats[i].size(), 0.0);
    for (int t = 0; t < k; ++t) axpy(1.0, feats[dist[static_cast<std::size_t>(t)].second], mean_feat);
    scale(mean_feat, 1.0 / static_cast<double>(k));
    double spread = 0.0;
    for (int t = 0; t < k; ++t)
      spread += norm(sub(feats[dist[static_cast<std::size_t>(t)].second], mean_feat));
    spread /= static_cast<double>(k);
    double dev = norm(sub(feats[i], mean_feat));
    rep.scores[i] = dev / (spread + 1e-12);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (rep.scores[i] > threshold) rep.flagged.push_back(i);
  return rep;
}

inline void write_vet_report_json(const VetReport& rep, std::ostream& os) {
  char buf[64];
  os << "{\n  \"threshold\": ";
  std::snprintf(buf, sizeof(buf), "%.12g", rep.threshold);
  os << buf << ",\n  \"scores\": [";
  for (std::size_t i = 0; i < rep.scores.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g", rep.scores[i]);
    os << (i ? ", " : "") << buf;
  }
  os << "],\n  \"flagged\": [";
  for (std::size_t i = 0; i < rep.flagged.size(); ++i) os << (i ? ", " : "") << rep.flagged[i];
  os << "]\n}\n";
}

// Upper bound on the element-wise error introduced by a round trip through
// 32-bit floats, for values up to max_abs.
inline double f32_roundtrip_bound(double max_abs) {
  return max_abs * 0x1.0p-23 + 1e-30;
}

struct AuditStats {
  double linf = 0.0;
  double frob = 0.0;
  std::size_t changed = 0;
  std::size_t total = 0;
  double tolerance = 0.0;
  bool precision_explainable = false;  // linf within the f32 round-trip bound
  std::vector<std::pair<std::string, std::size_t>> per_layer_changed;
};

namespace detail {

inline void audit_block(AuditStats& st, const std::string& name, const double* a, const double* b,
                        std::size_t n, double tau, double& sq, double& max_abs_a) {
  std::size_t changed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    double ad = std::abs(d);
    st.linf = std::max(st.linf, ad);
    sq += d * d;
    max_abs_a = std::max(max_abs_a, std::abs(a[i]));
    if (ad > tau) ++changed;
  }
  st.changed += changed;
  st.total += n;
  st.per_layer_changed.push_back({name, changed});
}

}  // namespace detail

inline AuditStats diff_audit(const EmbeddingMatrix& a, const EmbeddingMatrix& b, double tau = 0.0) {
  if (!a.m.same_shape(b.m)) throw DimensionError("diff_audit: shape mismatch");
  AuditStats st;
  st.tolerance = tau;
  double sq = 0.0, max_abs = 0.0;
  detail::audit_block(st, "embedding", a.m.data.data(), b.m.data.data(), a.m.data.size(), tau, sq,
                      max_abs);
  st.frob = std::sqrt(sq);
  st.precision_explainable = st.linf <= f32_roundtrip_bound(max_abs);
  return st;
}

inline AuditStats diff_audit(const DnnExtractor& a, const DnnExtractor& b, double tau = 0.0) {
  if (a.layers.size() != b.layers.size()) throw DimensionError("diff_audit: layer count mismatch");
  AuditStats st;
  st.tolerance = tau;
  double sq = 0.0, max_abs = 0.0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const Layer& la = a.layers[l];
    const Layer& lb = b.layers[l];
    if (la.in != lb.in || la.out != lb.out) throw DimensionError("diff_audit: layer shape mismatch");
    std::string name = "layer" + std::to_string(l);
    detail::audit_block(st, name + ".w", la.w.data(), lb.w.data(), la.w.size(), tau, sq, max_abs);
    detail::audit_block(st, name + ".b", la.b.data(), lb.b.data(), la.b.size(), tau, sq, max_abs);
  }
  st.frob = std::sqrt(sq);
  st.precision_explainable = st.linf <= f32_roundtrip_bound(max_abs);
  return st;
}

inline void write_audit_histogram_csv(const AuditStats& st, std::ostream& os) {
  os << "block,changed\n";
  for (const auto& [name, changed] : st.per_layer_changed) os << name << "," << changed << "\n";
}

}  // namespace bombworks
