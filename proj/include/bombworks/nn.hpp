// Feed-forward feature extractor with exact backpropagation to every
// parameter, a linear+softmax surrogate classifier, partial-system tuning
// (classifier only) and full-system tuning (end to end). The DNN1 file
// format serializes both extractors and classifier stacks.
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include "bombworks/dataset.hpp"
#include "bombworks/embedding.hpp"
#include "bombworks/errors.hpp"
#include "bombworks/matrix.hpp"
#include "bombworks/rng.hpp"

namespace bombworks {

// One affine layer, optionally followed by ReLU. Parameters are addressed
// flat: weights row-major in [0, out*in), then biases in [out*in, out*in+out).
struct Layer {
  int in = 0;
  int out = 0;
  bool relu = false;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out

  std::size_t param_count() const { return w.size() + b.size(); }

  double get_param(std::size_t offset) const {
    return offset < w.size() ? w[offset] : b[offset - w.size()];
  }
  void add_param(std::size_t offset, double delta) {
    if (offset < w.size()) w[offset] += delta; else b[offset - w.size()] += delta;
  }
};

struct ParamId {
  int layer = 0;
  std::size_t offset = 0;

  bool operator==(const ParamId&) const = default;
  bool operator<(const ParamId& o) const {
    return layer != o.layer ? layer < o.layer : offset < o.offset;
  }
};

struct DnnExtractor {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  int feature_dim() const { return layers.empty() ? 0 : layers.back().out; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.param_count();
    return n;
  }

  double get_param(const ParamId& id) const {
    return layers[static_cast<std::size_t>(id.layer)].get_param(id.offset);
  }
  void add_param(const ParamId& id, double delta) {
    layers[static_cast<std::size_t>(id.layer)].add_param(id.offset, delta);
  }

  // Enumerates every ParamId exactly once, layer-major.
  std::vector<ParamId> all_param_ids() const {
    std::vector<ParamId> ids;
    ids.reserve(param_count());
    for (int l = 0; l < static_cast<int>(layers.size()); ++l)
      for (std::size_t o = 0; o < layers[static_cast<std::size_t>(l)].param_count(); ++o)
        ids.push_back({l, o});
    return ids;
  }
};

inline Layer make_layer(int in, int out, bool relu, RngStream& rng) {
  Layer l;
  l.in = in;
  l.out = out;
  l.relu = relu;
  l.w.resize(static_cast<std::size_t>(in) * static_cast<std::size_t>(out));
  l.b.assign(static_cast<std::size_t>(out), 0.0);
  double s = std::sqrt(1.0 / static_cast<double>(in));  // scaled uniform fan-in
  for (double& x : l.w) x = rng.uniform(-s, s);
  return l;
}

// hidden = inner widths; the last entry is the feature dimensionality.
// layer_scales optionally multiplies each layer's fan-in initialization,
// fixing the relative magnitude of activations vs weights per layer (the
// computed function family is unchanged).
inline DnnExtractor make_extractor(int input_dim, const std::vector<int>& hidden, RngStream& rng,
                                   const std::vector<double>& layer_scales = {}) {
  if (hidden.empty()) throw ParameterError("make_extractor: need at least one layer");
  if (!layer_scales.empty() && layer_scales.size() != hidden.size())
    throw ParameterError("make_extractor: layer_scales size mismatch");
  DnnExtractor g;
  int in = input_dim;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    int width = hidden[l];
    if (width < 1) throw ParameterError("make_extractor: layer width must be positive");
    Layer layer = make_layer(in, width, true, rng);
    if (!layer_scales.empty() && layer_scales[l] != 1.0)
      for (double& w : layer.w) w *= layer_scales[l];
    g.layers.push_back(std::move(layer));
    in = width;
  }
  return g;
}

// Function-preserving reparameterization of a ReLU chain. act_scales[l]
// multiplies the l-th hidden activation (one entry per inner layer);
// relu(c z) = c relu(z) for c > 0, so weights and biases rescale as
//   w_0 *= a_0, b_0 *= a_0,
//   w_l *= a_l / a_{l-1}, b_l *= a_l,
//   w_last *= 1 / a_{L-2},
// leaving the composed map bit-for-bit unchanged up to float rounding.
inline void rescale_activations(DnnExtractor& g, const std::vector<double>& act_scales) {
  if (g.layers.size() < 2) throw ParameterError("rescale_activations: need at least two layers");
  if (act_scales.size() != g.layers.size() - 1)
    throw ParameterError("rescale_activations: need one scale per inner activation");
  for (double a : act_scales)
    if (!(a > 0.0)) throw ParameterError("rescale_activations: scales must be positive");
  for (std::size_t l = 0; l + 1 < g.layers.size(); ++l)
    if (!g.layers[l].relu)
      throw ParameterError("rescale_activations: inner layers must be ReLU for homogeneity");
  for (std::size_t l = 0; l + 1 < g.layers.size(); ++l) {
    double ratio = l == 0 ? act_scales[0] : act_scales[l] / act_scales[l - 1];
    for (double& w : g.layers[l].w) w *= ratio;
    for (double& b : g.layers[l].b) b *= act_scales[l];
  }
  for (double& w : g.layers.back().w) w /= act_scales.back();
}

// Single-factor form: every hidden activation scaled by c, so the first
// layer runs hot and the final layer cold.
inline void rescale_hot_cold(DnnExtractor& g, double c) {
  if (g.layers.size() < 2) throw ParameterError("rescale_hot_cold: need at least two layers");
  rescale_activations(g, std::vector<double>(g.layers.size() - 1, c));
}

struct ForwardCache {
  std::vector<Vector> inputs;  // activation entering each layer
  std::vector<Vector> pre;     // pre-activation of each layer
};

inline Vector forward(const DnnExtractor& g, const Vector& x, ForwardCache* cache = nullptr) {
  if (g.layers.empty()) throw InputError("forward: empty extractor");
  if (static_cast<int>(x.size()) != g.input_dim())
    throw DimensionError("forward: input dimension mismatch");
  Vector a = x;
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  for (const auto& l : g.layers) {
    if (cache) cache->inputs.push_back(a);
    Vector z(static_cast<std::size_t>(l.out), 0.0);
    for (int r = 0; r < l.out; ++r) {
      const double* row = &l.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(l.in)];
      double s = l.b[static_cast<std::size_t>(r)];
      for (int c = 0; c < l.in; ++c) s += row[c] * a[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = s;
    }
    if (cache) cache->pre.push_back(z);
    if (l.relu)
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    a = std::move(z);
  }
  return a;
}

// Fully-connected layer + softmax over the feature vector.
struct SurrogateClassifier {
  Layer fc;  // n_classes x feature_dim, relu = false
  bool degenerate = false;  // trained on a single-class reference set

  int n_classes() const { return fc.out; }

  Vector logits(const Vector& feature) const {
    Vector z(static_cast<std::size_t>(fc.out), 0.0);
    for (int r = 0; r < fc.out; ++r) {
      const double* row = &fc.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(fc.in)];
      double s = fc.b[static_cast<std::size_t>(r)];
      for (int c = 0; c < fc.in; ++c) s += row[c] * feature[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = s;
    }
    return z;
  }

  Vector probs(const Vector& feature) const { return softmax(logits(feature)); }
};

// d(sigma_y)/d(theta) for every class y and every extractor parameter,
// from a single forward pass plus one backward pass per class through the
// composed classifier+extractor.
struct GradientRecord {
  std::vector<std::size_t> layer_offsets;       // flat offset of each layer's block
  std::vector<std::vector<double>> class_grads; // [class][flat param]
  Vector probabilities;                          // softmax output at x

  double grad(int cls, const ParamId& id) const {
    return class_grads[static_cast<std::size_t>(cls)]
                      [layer_offsets[static_cast<std::size_t>(id.layer)] + id.offset];
  }
};

inline GradientRecord class_prob_gradients(const DnnExtractor& g, const SurrogateClassifier& f,
                                           const Vector& x) {
  if (f.fc.in != g.feature_dim())
    throw DimensionError("class_prob_gradients: classifier/extractor shape mismatch");
  ForwardCache cache;
  Vector feature = forward(g, x, &cache);
  if (!all_finite(feature)) throw NumericError("class_prob_gradients: non-finite activations");
  Vector z = f.logits(feature);
  Vector sigma = softmax(z);

  GradientRecord rec;
  rec.probabilities = sigma;
  std::size_t n_layers = g.layers.size();
  rec.layer_offsets.resize(n_layers);
  std::size_t total = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    rec.layer_offsets[l] = total;
    total += g.layers[l].param_count();
  }
  int k = f.n_classes();
  rec.class_grads.assign(static_cast<std::size_t>(k), std::vector<double>(total, 0.0));

  for (int y = 0; y < k; ++y) {
    // d(sigma_y)/d(z_j) = sigma_y * ([y == j] - sigma_j)
    Vector dz(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
      dz[static_cast<std::size_t>(j)] =
          sigma[static_cast<std::size_t>(y)] * ((j == y ? 1.0 : 0.0) - sigma[static_cast<std::size_t>(j)]);
    // Through the classifier into the feature vector.
    Vector da(static_cast<std::size_t>(f.fc.in), 0.0);
    for (int r = 0; r < f.fc.out; ++r) {
      const double* row = &f.fc.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(f.fc.in)];
      double d = dz[static_cast<std::size_t>(r)];
      for (int c = 0; c < f.fc.in; ++c) da[static_cast<std::size_t>(c)] += d * row[c];
    }
    // Backward through the extractor layers.
    auto& flat = rec.class_grads[static_cast<std::size_t>(y)];
    for (int l = static_cast<int>(n_layers) - 1; l >= 0; --l) {
      const Layer& lay = g.layers[static_cast<std::size_t>(l)];
      const Vector& pre = cache.pre[static_cast<std::size_t>(l)];
      const Vector& input = cache.inputs[static_cast<std::size_t>(l)];
      Vector dpre = da;
      if (lay.relu)
        for (int r = 0; r < lay.out; ++r)
          if (pre[static_cast<std::size_t>(r)] <= 0.0) dpre[static_cast<std::size_t>(r)] = 0.0;
      double* wgrad = &flat[rec.layer_offsets[static_cast<std::size_t>(l)]];
      double* bgrad = wgrad + lay.w.size();
      for (int r = 0; r < lay.out; ++r) {
        double d = dpre[static_cast<std::size_t>(r)];
        if (d != 0.0) {
          double* wrow = wgrad + static_cast<std::size_t>(r) * static_cast<std::size_t>(lay.in);
          for (int c = 0; c < lay.in; ++c) wrow[c] = d * input[static_cast<std::size_t>(c)];
        }
        bgrad[r] = d;
      }
      if (l > 0) {
        Vector prev(static_cast<std::size_t>(lay.in), 0.0);
        for (int r = 0; r < lay.out; ++r) {
          double d = dpre[static_cast<std::size_t>(r)];
          if (d == 0.0) continue;
          const double* wrow = &lay.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(lay.in)];
          for (int c = 0; c < lay.in; ++c) prev[static_cast<std::size_t>(c)] += d * wrow[c];
        }
        da = std::move(prev);
      }
    }
  }
  return rec;
}

namespace detail {

inline std::vector<Vector> dataset_inputs(const LabeledDataset& d) {
  if (d.kind != TaskKind::dense)
    throw InputError("expected a dense dataset for the NN pipeline");
  std::vector<Vector> xs;
  xs.reserve(d.dense.size());
  for (const auto& s : d.dense) xs.push_back(s.values);
  return xs;
}

inline std::vector<int> dataset_labels(const LabeledDataset& d) {
  std::vector<int> ys;
  ys.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) ys.push_back(d.label_of(i));
  return ys;
}

}  // namespace detail

// Train the surrogate on precomputed features (partial-system tuning: the
// extractor stays frozen, so features are fixed). Mini-batch SGD on
// cross-entropy.
inline SurrogateClassifier train_surrogate_on_features(const std::vector<Vector>& features,
                                                       const std::vector<int>& labels,
                                                       int n_classes, int epochs, double lr,
                                                       RngStream& rng, int batch_size = 32) {
  if (features.empty()) throw InputError("train_surrogate: empty reference set");
  if (features.size() != labels.size())
    throw DimensionError("train_surrogate: features/labels size mismatch");
  int dim = static_cast<int>(features[0].size());
  SurrogateClassifier f;
  f.fc = make_layer(dim, n_classes, false, rng);

  bool single_class = true;
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] != labels[0]) { single_class = false; break; }
  f.degenerate = single_class;

  std::size_t n = features.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<double> gw(f.fc.w.size());
  std::vector<double> gb(f.fc.b.size());
  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
      std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
      std::fill(gw.begin(), gw.end(), 0.0);
      std::fill(gb.begin(), gb.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const Vector& v = features[order[k]];
        int y = labels[order[k]];
        Vector p = f.probs(v);
        for (int j = 0; j < n_classes; ++j) {
          double d = p[static_cast<std::size_t>(j)] - (j == y ? 1.0 : 0.0);
          double* wrow = &gw[static_cast<std::size_t>(j) * static_cast<std::size_t>(dim)];
          for (int c = 0; c < dim; ++c) wrow[c] += d * v[static_cast<std::size_t>(c)];
          gb[static_cast<std::size_t>(j)] += d;
        }
      }
      double step = lr / static_cast<double>(end - start);
      for (std::size_t i = 0; i < f.fc.w.size(); ++i) f.fc.w[i] -= step * gw[i];
      for (std::size_t i = 0; i < f.fc.b.size(); ++i) f.fc.b[i] -= step * gb[i];
    }
  }
  return f;
}

inline SurrogateClassifier train_surrogate(const DnnExtractor& g, const LabeledDataset& r,
                                           int epochs, double lr, RngStream& rng) {
  if (r.size() == 0) throw InputError("train_surrogate: empty reference set");
  auto xs = detail::dataset_inputs(r);
  std::vector<Vector> features;
  features.reserve(xs.size());
  for (const auto& x : xs) features.push_back(forward(g, x));
  return train_surrogate_on_features(features, detail::dataset_labels(r), r.n_classes, epochs, lr,
                                     rng);
}

// End-to-end tuning of extractor and classifier by mini-batch SGD on
// cross-entropy. Simulates the developer's full-system tuning; with
// epochs = 0 the pair comes back unchanged.
inline std::pair<DnnExtractor, SurrogateClassifier> full_tune(DnnExtractor g, SurrogateClassifier f,
                                                              const LabeledDataset& t, int epochs,
                                                              double lr, RngStream& rng,
                                                              int batch_size = 32) {
  if (t.size() == 0) throw InputError("full_tune: empty training set");
  auto xs = detail::dataset_inputs(t);
  auto ys = detail::dataset_labels(t);
  int k = f.n_classes();

  std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<std::vector<double>> gw(g.layers.size());
  std::vector<std::vector<double>> gb(g.layers.size());
  for (std::size_t l = 0; l < g.layers.size(); ++l) {
    gw[l].resize(g.layers[l].w.size());
    gb[l].resize(g.layers[l].b.size());
  }
  std::vector<double> fw(f.fc.w.size());
  std::vector<double> fb(f.fc.b.size());

  ForwardCache cache;
  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
      std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
      for (auto& v : gw) std::fill(v.begin(), v.end(), 0.0);
      for (auto& v : gb) std::fill(v.begin(), v.end(), 0.0);
      std::fill(fw.begin(), fw.end(), 0.0);
      std::fill(fb.begin(), fb.end(), 0.0);
      for (std::size_t s = start; s < end; ++s) {
        const Vector& x = xs[order[s]];
        int y = ys[order[s]];
        Vector feature = forward(g, x, &cache);
        Vector p = f.probs(feature);
        // dCE/dz = p - onehot(y)
        Vector dz(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j)
          dz[static_cast<std::size_t>(j)] = p[static_cast<std::size_t>(j)] - (j == y ? 1.0 : 0.0);
        Vector da(static_cast<std::size_t>(f.fc.in), 0.0);
        for (int r = 0; r < f.fc.out; ++r) {
          double d = dz[static_cast<std::size_t>(r)];
          double* wrow = &fw[static_cast<std::size_t>(r) * static_cast<std::size_t>(f.fc.in)];
          const double* w = &f.fc.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(f.fc.in)];
          for (int c = 0; c < f.fc.in; ++c) {
            wrow[c] += d * feature[static_cast<std::size_t>(c)];
            da[static_cast<std::size_t>(c)] += d * w[c];
          }
          fb[static_cast<std::size_t>(r)] += d;
        }
        for (int l = static_cast<int>(g.layers.size()) - 1; l >= 0; --l) {
          const Layer& lay = g.layers[static_cast<std::size_t>(l)];
          const Vector& pre = cache.pre[static_cast<std::size_t>(l)];
          const Vector& input = cache.inputs[static_cast<std::size_t>(l)];
          Vector dpre = da;
          if (lay.relu)
            for (int r2 = 0; r2 < lay.out; ++r2)
              if (pre[static_cast<std::size_t>(r2)] <= 0.0) dpre[static_cast<std::size_t>(r2)] = 0.0;
          double* wg = gw[static_cast<std::size_t>(l)].data();
          double* bg = gb[static_cast<std::size_t>(l)].data();
          for (int r2 = 0; r2 < lay.out; ++r2) {
            double d = dpre[static_cast<std::size_t>(r2)];
            if (d == 0.0) continue;
            double* wrow = wg + static_cast<std::size_t>(r2) * static_cast<std::size_t>(lay.in);
            for (int c = 0; c < lay.in; ++c) wrow[c] += d * input[static_cast<std::size_t>(c)];
            bg[r2] += d;
          }
          if (l > 0) {
            Vector prev(static_cast<std::size_t>(lay.in), 0.0);
            for (int r2 = 0; r2 < lay.out; ++r2) {
              double d = dpre[static_cast<std::size_t>(r2)];
              if (d == 0.0) continue;
              const double* wrow = &lay.w[static_cast<std::size_t>(r2) * static_cast<std::size_t>(lay.in)];
              for (int c = 0; c < lay.in; ++c) prev[static_cast<std::size_t>(c)] += d * wrow[c];
            }
            da = std::move(prev);
          }
        }
      }
      double step = lr / static_cast<double>(end - start);
      for (std::size_t l = 0; l < g.layers.size(); ++l) {
        for (std::size_t i = 0; i < gw[l].size(); ++i) g.layers[l].w[i] -= step * gw[l][i];
        for (std::size_t i = 0; i < gb[l].size(); ++i) g.layers[l].b[i] -= step * gb[l][i];
      }
      for (std::size_t i = 0; i < fw.size(); ++i) f.fc.w[i] -= step * fw[i];
      for (std::size_t i = 0; i < fb.size(); ++i) f.fc.b[i] -= step * fb[i];
    }
  }
  return {std::move(g), std::move(f)};
}

// ---------------------------------------------------------------------------
// DNN1 model format:
//   DNN1 layers=<n> precision=<f32|f64>[ kind=<tag>]
//   layer <i> in=<a> out=<b> act=<relu|none>
//   <little-endian floats: weights row-major, then biases>   (per layer)
// ---------------------------------------------------------------------------

namespace detail {

inline void write_floats(std::ostream& os, const std::vector<double>& xs, Precision prec) {
  if (prec == Precision::f32) {
    for (double x : xs) {
      float f = static_cast<float>(x);
      os.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  } else {
    os.write(reinterpret_cast<const char*>(xs.data()),
             static_cast<std::streamsize>(xs.size() * sizeof(double)));
  }
}

inline void read_floats(std::istream& is, std::vector<double>& xs, Precision prec) {
  if (prec == Precision::f32) {
    for (double& x : xs) {
      float f;
      is.read(reinterpret_cast<char*>(&f), sizeof(f));
      x = static_cast<double>(f);
    }
  } else {
    is.read(reinterpret_cast<char*>(xs.data()),
            static_cast<std::streamsize>(xs.size() * sizeof(double)));
  }
  if (!is) throw FormatError("DNN1: truncated payload");
}

}  // namespace detail

inline void save_dnn1(const std::vector<Layer>& layers, std::ostream& os,
                      Precision prec = Precision::f64, const std::string& kind = "") {
  os << "DNN1 layers=" << layers.size() << " precision=" << precision_name(prec);
  if (!kind.empty()) os << " kind=" << kind;
  os << "\n";
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    os << "layer " << i << " in=" << l.in << " out=" << l.out
       << " act=" << (l.relu ? "relu" : "none") << "\n";
    detail::write_floats(os, l.w, prec);
    detail::write_floats(os, l.b, prec);
  }
}

inline std::vector<Layer> load_dnn1(std::istream& is, std::string* kind_out = nullptr) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError("DNN1: missing header");
  int n_layers = 0;
  char prec[8] = {0};
  char kind[64] = {0};
  int matched = std::sscanf(header.c_str(), "DNN1 layers=%d precision=%7s kind=%63s", &n_layers,
                            prec, kind);
  if (matched < 2) throw FormatError("DNN1: bad header: " + header);
  if (kind_out) *kind_out = matched == 3 ? kind : "";
  bool f32 = std::strcmp(prec, "f32") == 0;
  if (!f32 && std::strcmp(prec, "f64") != 0) throw FormatError("DNN1: unknown precision");
  Precision p = f32 ? Precision::f32 : Precision::f64;
  if (n_layers < 0) throw FormatError("DNN1: bad layer count");

  std::vector<Layer> layers;
  for (int i = 0; i < n_layers; ++i) {
    std::string sub;
    if (!std::getline(is, sub)) throw FormatError("DNN1: missing layer header");
    int idx = 0, in = 0, out = 0;
    char act[8] = {0};
    if (std::sscanf(sub.c_str(), "layer %d in=%d out=%d act=%7s", &idx, &in, &out, act) != 4)
      throw FormatError("DNN1: bad layer header: " + sub);
    if (in <= 0 || out <= 0) throw FormatError("DNN1: bad layer dimensions");
    Layer l;
    l.in = in;
    l.out = out;
    if (std::strcmp(act, "relu") == 0) l.relu = true;
    else if (std::strcmp(act, "none") == 0) l.relu = false;
    else throw FormatError("DNN1: unknown activation");
    l.w.resize(static_cast<std::size_t>(in) * static_cast<std::size_t>(out));
    l.b.resize(static_cast<std::size_t>(out));
    detail::read_floats(is, l.w, p);
    detail::read_floats(is, l.b, p);
    layers.push_back(std::move(l));
  }
  return layers;
}

inline void save_dnn1_file(const std::vector<Layer>& layers, const std::string& path,
                           Precision prec = Precision::f64, const std::string& kind = "") {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open for write: " + path);
  save_dnn1(layers, os, prec, kind);
}

inline std::vector<Layer> load_dnn1_file(const std::string& path, std::string* kind_out = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open for read: " + path);
  return load_dnn1(is, kind_out);
}

}  // namespace bombworks
