// Host-side classifiers f: logistic regression, linear SVM (subgradient
// hinge + Platt-calibrated confidence), MLP with two hidden layers, and
// the MLP variant with width-preserving residual blocks prepended at the
// input end. All predict (label, confidence-of-label).
#pragma once

#include <string>
#include <vector>

#include "bombworks/errors.hpp"
#include "bombworks/matrix.hpp"
#include "bombworks/nn.hpp"
#include "bombworks/rng.hpp"

namespace bombworks {

enum class HostKind { lr, svm, mlp, resmlp };

inline const char* host_kind_name(HostKind k) {
  switch (k) {
    case HostKind::lr: return "lr";
    case HostKind::svm: return "svm";
    case HostKind::mlp: return "mlp";
    case HostKind::resmlp: return "resmlp";
  }
  return "?";
}

inline HostKind parse_host_kind(const std::string& s) {
  if (s == "lr") return HostKind::lr;
  if (s == "svm") return HostKind::svm;
  if (s == "mlp") return HostKind::mlp;
  if (s == "resmlp") return HostKind::resmlp;
  throw ParameterError("unknown host classifier kind: " + s);
}

struct HostHyper {
  int epochs = 40;
  double lr = 0.3;
  int batch_size = 32;
  double weight_decay = 1e-4;
  std::vector<int> hidden = {240, 60};
  int residual_blocks = 0;  // resmlp only
  int platt_iters = 300;    // svm calibration
};

struct HostClassifier {
  HostKind kind = HostKind::lr;
  int n_classes = 2;
  int residual_blocks = 0;
  std::vector<Layer> blocks;  // width-preserving residual blocks (resmlp)
  std::vector<Layer> stack;   // affine chain; last layer emits logits/margin
  double platt_a = -1.0;      // svm: P(+|m) = 1 / (1 + exp(a*m + b))
  double platt_b = 0.0;
  double train_accuracy = 0.0;

  Vector input_after_blocks(const Vector& v) const {
    Vector a = v;
    for (const auto& blk : blocks) {
      Vector z(static_cast<std::size_t>(blk.out), 0.0);
      for (int r = 0; r < blk.out; ++r) {
        const double* row = &blk.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(blk.in)];
        double s = blk.b[static_cast<std::size_t>(r)];
        for (int c = 0; c < blk.in; ++c) s += row[c] * a[static_cast<std::size_t>(c)];
        z[static_cast<std::size_t>(r)] = s > 0.0 ? s : 0.0;
      }
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += z[i];  // F(x) + x
    }
    return a;
  }

  Vector raw_output(const Vector& v) const {
    Vector a = input_after_blocks(v);
    for (const auto& l : stack) {
      Vector z(static_cast<std::size_t>(l.out), 0.0);
      for (int r = 0; r < l.out; ++r) {
        const double* row = &l.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(l.in)];
        double s = l.b[static_cast<std::size_t>(r)];
        for (int c = 0; c < l.in; ++c) s += row[c] * a[static_cast<std::size_t>(c)];
        z[static_cast<std::size_t>(r)] = s;
      }
      if (l.relu)
        for (double& x : z) x = x > 0.0 ? x : 0.0;
      a = std::move(z);
    }
    return a;
  }

  // Probability vector over classes.
  Vector class_scores(const Vector& v) const {
    if (stack.empty()) throw InputError("host classifier: untrained");
    if (static_cast<int>(v.size()) != input_dim())
      throw DimensionError("host predict: input dimension mismatch");
    Vector out = raw_output(v);
    if (kind == HostKind::svm) {
      double margin = out[0];
      double p = 1.0 / (1.0 + std::exp(platt_a * margin + platt_b));
      return {1.0 - p, p};
    }
    return softmax(out);
  }

  std::pair<int, double> predict(const Vector& v) const {
    Vector scores = class_scores(v);
    int label = argmax(scores);
    return {label, scores[static_cast<std::size_t>(label)]};
  }

  int input_dim() const {
    if (!blocks.empty()) return blocks.front().in;
    return stack.empty() ? 0 : stack.front().in;
  }
};

namespace detail {

inline int count_distinct_classes(const std::vector<int>& labels, int n_classes) {
  std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
  int distinct = 0;
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw InputError("train_host: label outside class set");
    if (!seen[static_cast<std::size_t>(y)]) {
      seen[static_cast<std::size_t>(y)] = true;
      ++distinct;
    }
  }
  return distinct;
}

// Cross-entropy SGD over the residual blocks + affine stack.
inline void sgd_train_stack(HostClassifier& f, const std::vector<Vector>& xs,
                            const std::vector<int>& ys, const HostHyper& hyper, RngStream& rng) {
  std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::size_t n_blocks = f.blocks.size();
  std::size_t n_stack = f.stack.size();
  std::vector<std::vector<double>> gw(n_blocks + n_stack), gb(n_blocks + n_stack);
  for (std::size_t l = 0; l < n_blocks; ++l) {
    gw[l].resize(f.blocks[l].w.size());
    gb[l].resize(f.blocks[l].b.size());
  }
  for (std::size_t l = 0; l < n_stack; ++l) {
    gw[n_blocks + l].resize(f.stack[l].w.size());
    gb[n_blocks + l].resize(f.stack[l].b.size());
  }

  for (int e = 0; e < hyper.epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hyper.batch_size)) {
      std::size_t end = std::min(n, start + static_cast<std::size_t>(hyper.batch_size));
      for (auto& v : gw) std::fill(v.begin(), v.end(), 0.0);
      for (auto& v : gb) std::fill(v.begin(), v.end(), 0.0);
      for (std::size_t s = start; s < end; ++s) {
        const Vector& x = xs[order[s]];
        int y = ys[order[s]];
        // Forward with caches.
        std::vector<Vector> blk_in(n_blocks), blk_pre(n_blocks);
        Vector a = x;
        for (std::size_t l = 0; l < n_blocks; ++l) {
          const Layer& blk = f.blocks[l];
          blk_in[l] = a;
          Vector z(static_cast<std::size_t>(blk.out), 0.0);
          for (int r = 0; r < blk.out; ++r) {
            const double* row = &blk.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(blk.in)];
            double sum = blk.b[static_cast<std::size_t>(r)];
            for (int c = 0; c < blk.in; ++c) sum += row[c] * a[static_cast<std::size_t>(c)];
            z[static_cast<std::size_t>(r)] = sum;
          }
          blk_pre[l] = z;
          for (std::size_t i = 0; i < a.size(); ++i) a[i] += (z[i] > 0.0 ? z[i] : 0.0);
        }
        std::vector<Vector> st_in(n_stack), st_pre(n_stack);
        for (std::size_t l = 0; l < n_stack; ++l) {
          const Layer& lay = f.stack[l];
          st_in[l] = a;
          Vector z(static_cast<std::size_t>(lay.out), 0.0);
          for (int r = 0; r < lay.out; ++r) {
            const double* row = &lay.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(lay.in)];
            double sum = lay.b[static_cast<std::size_t>(r)];
            for (int c = 0; c < lay.in; ++c) sum += row[c] * a[static_cast<std::size_t>(c)];
            z[static_cast<std::size_t>(r)] = sum;
          }
          st_pre[l] = z;
          if (lay.relu)
            for (double& v : z) v = v > 0.0 ? v : 0.0;
          a = std::move(z);
        }
        Vector p = softmax(a);
        Vector da(p.size());
        for (std::size_t j = 0; j < p.size(); ++j)
          da[j] = p[j] - (static_cast<int>(j) == y ? 1.0 : 0.0);
        // Backward through the stack.
        for (int l = static_cast<int>(n_stack) - 1; l >= 0; --l) {
          const Layer& lay = f.stack[static_cast<std::size_t>(l)];
          Vector dpre = da;
          if (lay.relu)
            for (int r = 0; r < lay.out; ++r)
              if (st_pre[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)] <= 0.0)
                dpre[static_cast<std::size_t>(r)] = 0.0;
          double* wg = gw[n_blocks + static_cast<std::size_t>(l)].data();
          double* bg = gb[n_blocks + static_cast<std::size_t>(l)].data();
          const Vector& input = st_in[static_cast<std::size_t>(l)];
          for (int r = 0; r < lay.out; ++r) {
            double d = dpre[static_cast<std::size_t>(r)];
            if (d == 0.0) continue;
            double* wrow = wg + static_cast<std::size_t>(r) * static_cast<std::size_t>(lay.in);
            for (int c = 0; c < lay.in; ++c) wrow[c] += d * input[static_cast<std::size_t>(c)];
            bg[r] += d;
          }
          Vector prev(static_cast<std::size_t>(lay.in), 0.0);
          for (int r = 0; r < lay.out; ++r) {
            double d = dpre[static_cast<std::size_t>(r)];
            if (d == 0.0) continue;
            const double* wrow = &lay.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(lay.in)];
            for (int c = 0; c < lay.in; ++c) prev[static_cast<std::size_t>(c)] += d * wrow[c];
          }
          da = std::move(prev);
        }
        // Backward through the residual blocks: d(input) = W' dpre + d(out).
        for (int l = static_cast<int>(n_blocks) - 1; l >= 0; --l) {
          const Layer& blk = f.blocks[static_cast<std::size_t>(l)];
          Vector dpre = da;
          for (int r = 0; r < blk.out; ++r)
            if (blk_pre[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)] <= 0.0)
              dpre[static_cast<std::size_t>(r)] = 0.0;
          double* wg = gw[static_cast<std::size_t>(l)].data();
          double* bg = gb[static_cast<std::size_t>(l)].data();
          const Vector& input = blk_in[static_cast<std::size_t>(l)];
          Vector prev = da;  // skip path
          for (int r = 0; r < blk.out; ++r) {
            double d = dpre[static_cast<std::size_t>(r)];
            if (d == 0.0) continue;
            double* wrow = wg + static_cast<std::size_t>(r) * static_cast<std::size_t>(blk.in);
            const double* w = &blk.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(blk.in)];
            for (int c = 0; c < blk.in; ++c) {
              wrow[c] += d * input[static_cast<std::size_t>(c)];
              prev[static_cast<std::size_t>(c)] += d * w[c];
            }
            bg[r] += d;
          }
          da = std::move(prev);
        }
      }
      double step = hyper.lr / static_cast<double>(end - start);
      double decay = 1.0 - hyper.lr * hyper.weight_decay;
      for (std::size_t l = 0; l < n_blocks; ++l) {
        for (std::size_t i = 0; i < f.blocks[l].w.size(); ++i)
          f.blocks[l].w[i] = decay * f.blocks[l].w[i] - step * gw[l][i];
        for (std::size_t i = 0; i < f.blocks[l].b.size(); ++i)
          f.blocks[l].b[i] -= step * gb[l][i];
      }
      for (std::size_t l = 0; l < n_stack; ++l) {
        for (std::size_t i = 0; i < f.stack[l].w.size(); ++i)
          f.stack[l].w[i] = decay * f.stack[l].w[i] - step * gw[n_blocks + l][i];
        for (std::size_t i = 0; i < f.stack[l].b.size(); ++i)
          f.stack[l].b[i] -= step * gb[n_blocks + l][i];
      }
    }
  }
}

// Linear SVM by subgradient descent on hinge loss + L2, then Platt-style
// sigmoid calibration on the training margins.
inline void train_svm(HostClassifier& f, const std::vector<Vector>& xs, const std::vector<int>& ys,
                      const HostHyper& hyper, RngStream& rng) {
  std::size_t n = xs.size();
  int dim = static_cast<int>(xs[0].size());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Layer& l = f.stack[0];
  for (int e = 0; e < hyper.epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hyper.batch_size)) {
      std::size_t end = std::min(n, start + static_cast<std::size_t>(hyper.batch_size));
      std::vector<double> gw(l.w.size(), 0.0);
      double gb = 0.0;
      for (std::size_t s = start; s < end; ++s) {
        const Vector& x = xs[order[s]];
        double y = ys[order[s]] == 1 ? 1.0 : -1.0;
        double m = l.b[0];
        for (int c = 0; c < dim; ++c) m += l.w[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
        if (y * m < 1.0) {
          for (int c = 0; c < dim; ++c) gw[static_cast<std::size_t>(c)] -= y * x[static_cast<std::size_t>(c)];
          gb -= y;
        }
      }
      double step = hyper.lr / static_cast<double>(end - start);
      double decay = 1.0 - hyper.lr * hyper.weight_decay;
      for (std::size_t i = 0; i < l.w.size(); ++i) l.w[i] = decay * l.w[i] - step * gw[i];
      l.b[0] -= step * gb;
    }
  }

  // Platt calibration: fit P(+|m) = 1/(1+exp(a*m+b)) on training margins
  // with smoothed targets, plain gradient descent (deterministic).
  std::vector<double> margins(n);
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = l.b[0];
    for (int c = 0; c < dim; ++c)
      m += l.w[static_cast<std::size_t>(c)] * xs[i][static_cast<std::size_t>(c)];
    margins[i] = m;
    if (ys[i] == 1) n_pos += 1.0;
  }
  double n_neg = static_cast<double>(n) - n_pos;
  double t_pos = (n_pos + 1.0) / (n_pos + 2.0);
  double t_neg = 1.0 / (n_neg + 2.0);
  double a = -1.0, b = 0.0;
  double rate = 1e-2;
  for (int it = 0; it < hyper.platt_iters; ++it) {
    double ga = 0.0, gb2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double t = ys[i] == 1 ? t_pos : t_neg;
      double p = 1.0 / (1.0 + std::exp(a * margins[i] + b));
      // d(nll)/d(a) = (t - p) * m, d(nll)/d(b) = (t - p) for this sigmoid form
      ga += (t - p) * margins[i];
      gb2 += (t - p);
    }
    ga /= static_cast<double>(n);
    gb2 /= static_cast<double>(n);
    a -= rate * ga;
    b -= rate * gb2;
  }
  f.platt_a = a;
  f.platt_b = b;
}

}  // namespace detail

inline HostClassifier train_host(HostKind kind, const std::vector<Vector>& features,
                                 const std::vector<int>& labels, int n_classes,
                                 const HostHyper& hyper, RngStream& rng) {
  if (features.empty()) throw InputError("train_host: no training samples");
  if (features.size() != labels.size())
    throw DimensionError("train_host: features/labels size mismatch");
  if (detail::count_distinct_classes(labels, n_classes) < 2)
    throw DegenerateInputError("train_host: fewer than two classes present");
  int dim = static_cast<int>(features[0].size());

  HostClassifier f;
  f.kind = kind;
  f.n_classes = n_classes;
  switch (kind) {
    case HostKind::lr:
      f.stack.push_back(make_layer(dim, n_classes, false, rng));
      detail::sgd_train_stack(f, features, labels, hyper, rng);
      break;
    case HostKind::svm: {
      if (n_classes != 2) throw ParameterError("train_host: svm host is binary only");
      f.stack.push_back(make_layer(dim, 1, false, rng));
      detail::train_svm(f, features, labels, hyper, rng);
      break;
    }
    case HostKind::resmlp:
      f.residual_blocks = hyper.residual_blocks;
      for (int i = 0; i < hyper.residual_blocks; ++i)
        f.blocks.push_back(make_layer(dim, dim, true, rng));
      [[fallthrough]];
    case HostKind::mlp: {
      int in = dim;
      for (int width : hyper.hidden) {
        f.stack.push_back(make_layer(in, width, true, rng));
        in = width;
      }
      f.stack.push_back(make_layer(in, n_classes, false, rng));
      detail::sgd_train_stack(f, features, labels, hyper, rng);
      break;
    }
  }

  std::size_t hits = 0;
  for (std::size_t i = 0; i < features.size(); ++i)
    if (f.predict(features[i]).first == labels[i]) ++hits;
  f.train_accuracy = static_cast<double>(hits) / static_cast<double>(features.size());
  return f;
}

// Host classifiers ride in the DNN1 container with a kind tag. resmlp
// encodes its block count in the tag ("resmlp3"); svm appends a 1x1 layer
// holding the Platt coefficients (w = a, b = b).
inline void save_host(const HostClassifier& f, const std::string& path,
                      Precision prec = Precision::f64) {
  std::vector<Layer> layers = f.blocks;
  layers.insert(layers.end(), f.stack.begin(), f.stack.end());
  std::string kind = host_kind_name(f.kind);
  if (f.kind == HostKind::resmlp) kind += std::to_string(f.residual_blocks);
  if (f.kind == HostKind::svm) {
    Layer platt;
    platt.in = 1;
    platt.out = 1;
    platt.relu = false;
    platt.w = {f.platt_a};
    platt.b = {f.platt_b};
    layers.push_back(platt);
  }
  save_dnn1_file(layers, path, prec, kind);
}

inline HostClassifier load_host(const std::string& path) {
  std::string kind;
  std::vector<Layer> layers = load_dnn1_file(path, &kind);
  if (kind.empty()) throw FormatError("load_host: model has no classifier kind tag");
  HostClassifier f;
  if (kind.rfind("resmlp", 0) == 0) {
    f.kind = HostKind::resmlp;
    f.residual_blocks = kind.size() > 6 ? std::stoi(kind.substr(6)) : 0;
  } else {
    f.kind = parse_host_kind(kind);
  }
  if (f.kind == HostKind::svm) {
    if (layers.size() < 2) throw FormatError("load_host: svm model missing Platt layer");
    Layer platt = layers.back();
    layers.pop_back();
    f.platt_a = platt.w.at(0);
    f.platt_b = platt.b.at(0);
    f.n_classes = 2;
    f.stack = std::move(layers);
    return f;
  }
  if (static_cast<std::size_t>(f.residual_blocks) >= layers.size())
    throw FormatError("load_host: block count exceeds layer count");
  f.blocks.assign(layers.begin(), layers.begin() + f.residual_blocks);
  f.stack.assign(layers.begin() + f.residual_blocks, layers.end());
  if (f.stack.empty()) throw FormatError("load_host: classifier has no layers");
  f.n_classes = f.stack.back().out;
  return f;
}

}  // namespace bombworks
