// Word-embedding feature extractor: vocabulary-indexed mapping matrix M,
// sequence vectorization with optional time-decay weights, extraction as
// matrix-vector multiplication, and the EMB1 file format.
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "bombworks/dataset.hpp"
#include "bombworks/errors.hpp"
#include "bombworks/matrix.hpp"
#include "bombworks/rng.hpp"

namespace bombworks {

struct EmbeddingMatrix {
  Matrix m;  // dim x vocab; column i is the embedding of token i

  int dim() const { return static_cast<int>(m.rows); }
  int vocab() const { return static_cast<int>(m.cols); }

  double column_norm(int i) const {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      double v = m(r, static_cast<std::size_t>(i));
      s += v * v;
    }
    return std::sqrt(s);
  }
};

struct VectorizerConfig {
  double gamma = 1.0;  // weight rule w_k = gamma^(1-k), k = 1-based position
};

// Normalized aggregated weights over the vocabulary-indexed input space.
// Entries are sorted by token index and sum to 1.
struct SparseInputVector {
  int dim = 0;
  std::vector<std::pair<int, double>> entries;

  Vector to_dense() const {
    Vector out(static_cast<std::size_t>(dim), 0.0);
    for (const auto& [i, w] : entries) out[static_cast<std::size_t>(i)] = w;
    return out;
  }
};

inline SparseInputVector vectorize(const TokenSequenceSample& s, const VectorizerConfig& cfg,
                                   int vocab_size) {
  if (s.tokens.empty()) throw InputError("vectorize: empty token sequence");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0))
    throw ParameterError("vectorize: gamma must be in (0,1]");
  std::size_t len = s.tokens.size();
  // w_k = gamma^(1-k) grows with k when gamma < 1; work with the rescaled
  // w_k / w_len = gamma^(len-k) to stay in (0,1] regardless of length. The
  // final normalization cancels the rescaling.
  std::vector<double> acc(static_cast<std::size_t>(vocab_size), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    int tok = s.tokens[k];
    if (tok < 0 || tok >= vocab_size) throw DimensionError("vectorize: token index out of range");
    double w = std::pow(cfg.gamma, static_cast<double>(len - 1 - k));
    acc[static_cast<std::size_t>(tok)] += w;
    total += w;
  }
  SparseInputVector out;
  out.dim = vocab_size;
  for (int i = 0; i < vocab_size; ++i)
    if (acc[static_cast<std::size_t>(i)] != 0.0)
      out.entries.push_back({i, acc[static_cast<std::size_t>(i)] / total});
  return out;
}

// Feature extraction g(x) = M * x over the sparse vectorized input.
inline Vector extract(const EmbeddingMatrix& emb, const SparseInputVector& x) {
  if (x.dim != emb.vocab()) throw DimensionError("extract: input dimension != vocabulary size");
  Vector out(static_cast<std::size_t>(emb.dim()), 0.0);
  for (const auto& [i, w] : x.entries) {
    if (i < 0 || i >= emb.vocab()) throw DimensionError("extract: index out of range");
    for (std::size_t r = 0; r < emb.m.rows; ++r)
      out[r] += w * emb.m(r, static_cast<std::size_t>(i));
  }
  return out;
}

inline EmbeddingMatrix apply_perturbation(const EmbeddingMatrix& emb, const Matrix& e) {
  if (!emb.m.same_shape(e)) throw DimensionError("apply_perturbation: shape mismatch");
  EmbeddingMatrix out = emb;
  for (std::size_t i = 0; i < out.m.data.size(); ++i) out.m.data[i] += e.data[i];
  return out;
}

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix (in place).
// Returns eigenvalues; `vecs` columns end up holding the eigenvectors.
inline std::vector<double> jacobi_eigen(Matrix a, Matrix& vecs, int sweeps = 14) {
  std::size_t n = a.rows;
  vecs = Matrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vecs(i, i) = 1.0;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = vecs(k, p), vkq = vecs(k, q);
          vecs(k, p) = c * vkp - s * vkq;
          vecs(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<double> evals(n);
  for (std::size_t i = 0; i < n; ++i) evals[i] = a(i, i);
  return evals;
}

// Modified Gram-Schmidt on the columns of q (v rows x d cols).
inline void orthonormalize_columns(Matrix& q) {
  std::size_t v = q.rows, d = q.cols;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      double proj = 0.0;
      for (std::size_t r = 0; r < v; ++r) proj += q(r, i) * q(r, j);
      for (std::size_t r = 0; r < v; ++r) q(r, j) -= proj * q(r, i);
    }
    double nn = 0.0;
    for (std::size_t r = 0; r < v; ++r) nn += q(r, j) * q(r, j);
    nn = std::sqrt(nn);
    if (nn < 1e-12) nn = 1.0;  // degenerate column stays (near) zero
    for (std::size_t r = 0; r < v; ++r) q(r, j) /= nn;
  }
}

}  // namespace detail

// Deterministic embedding training: positive PMI co-occurrence matrix over
// a sliding window, truncated to the top-d eigenpairs by |eigenvalue| via
// orthogonal iteration, scaled so the mean column norm is 1. Tokens that
// co-occur with everything indiscriminately (the filler block of generated
// tasks) have near-zero PPMI rows and end up with near-zero columns.
inline EmbeddingMatrix train_embedding(const LabeledDataset& corpus, int d, RngStream& rng,
                                       int window = 5, int power_iters = 30,
                                       double column_norm_scale = 1.0) {
  if (corpus.kind != TaskKind::sequence)
    throw InputError("train_embedding: corpus must be a sequence dataset");
  if (d < 2) throw ParameterError("train_embedding: d must be >= 2");
  int v = corpus.vocab_size;
  if (d > v) throw ParameterError("train_embedding: d exceeds vocabulary size");

  // Windowed co-occurrence counts (symmetric).
  Matrix counts(static_cast<std::size_t>(v), static_cast<std::size_t>(v), 0.0);
  for (const auto& s : corpus.sequences) {
    int len = static_cast<int>(s.tokens.size());
    for (int k = 0; k < len; ++k) {
      for (int o = 1; o <= window && k + o < len; ++o) {
        int a = s.tokens[static_cast<std::size_t>(k)];
        int b = s.tokens[static_cast<std::size_t>(k + o)];
        counts(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) += 1.0;
        counts(static_cast<std::size_t>(b), static_cast<std::size_t>(a)) += 1.0;
      }
    }
  }
  std::vector<double> row_sum(static_cast<std::size_t>(v), 0.0);
  double total = 0.0;
  for (int i = 0; i < v; ++i)
    for (int j = 0; j < v; ++j) {
      row_sum[static_cast<std::size_t>(i)] += counts(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      total += counts(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  Matrix ppmi(static_cast<std::size_t>(v), static_cast<std::size_t>(v), 0.0);
  for (int i = 0; i < v; ++i) {
    for (int j = 0; j < v; ++j) {
      double c = counts(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (c <= 0.0) continue;
      double denom = row_sum[static_cast<std::size_t>(i)] * row_sum[static_cast<std::size_t>(j)];
      if (denom <= 0.0) continue;
      double pmi = std::log(c * total / denom);
      if (pmi > 0.0) ppmi(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = pmi;
    }
  }

  // Orthogonal iteration for the dominant d-dimensional invariant subspace.
  Matrix q(static_cast<std::size_t>(v), static_cast<std::size_t>(d));
  for (double& x : q.data) x = rng.normal();
  detail::orthonormalize_columns(q);
  Matrix z(static_cast<std::size_t>(v), static_cast<std::size_t>(d), 0.0);
  for (int it = 0; it < power_iters; ++it) {
    for (std::size_t r = 0; r < z.data.size(); ++r) z.data[r] = 0.0;
    for (int i = 0; i < v; ++i) {
      const double* arow = &ppmi.data[static_cast<std::size_t>(i) * static_cast<std::size_t>(v)];
      double* zrow = &z.data[static_cast<std::size_t>(i) * static_cast<std::size_t>(d)];
      for (int k = 0; k < v; ++k) {
        double a = arow[k];
        if (a == 0.0) continue;
        const double* qrow = &q.data[static_cast<std::size_t>(k) * static_cast<std::size_t>(d)];
        for (int j = 0; j < d; ++j) zrow[j] += a * qrow[j];
      }
    }
    std::swap(q, z);
    detail::orthonormalize_columns(q);
  }

  // Rotate onto eigenvectors of the projected matrix b = q' * ppmi * q.
  Matrix aq(static_cast<std::size_t>(v), static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < v; ++i) {
    const double* arow = &ppmi.data[static_cast<std::size_t>(i) * static_cast<std::size_t>(v)];
    double* orow = &aq.data[static_cast<std::size_t>(i) * static_cast<std::size_t>(d)];
    for (int k = 0; k < v; ++k) {
      double a = arow[k];
      if (a == 0.0) continue;
      const double* qrow = &q.data[static_cast<std::size_t>(k) * static_cast<std::size_t>(d)];
      for (int j = 0; j < d; ++j) orow[j] += a * qrow[j];
    }
  }
  Matrix b(static_cast<std::size_t>(d), static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int r = 0; r < v; ++r)
        s += q(static_cast<std::size_t>(r), static_cast<std::size_t>(i)) *
             aq(static_cast<std::size_t>(r), static_cast<std::size_t>(j));
      b(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = s;
    }
  // Symmetrize against iteration round-off before the Jacobi pass.
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double s = 0.5 * (b(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +
                        b(static_cast<std::size_t>(j), static_cast<std::size_t>(i)));
      b(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = s;
      b(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = s;
    }
  Matrix rot;
  std::vector<double> evals = detail::jacobi_eigen(b, rot);

  // Order by |eigenvalue| descending, ties by lower index.
  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a2, int b2) {
    double va = std::abs(evals[static_cast<std::size_t>(a2)]);
    double vb = std::abs(evals[static_cast<std::size_t>(b2)]);
    if (va != vb) return va > vb;
    return a2 < b2;
  });

  // M row k = sqrt(|lambda_k|) * (q * rot column order[k])', with a sign
  // convention (largest-|entry| component positive) for reproducibility.
  EmbeddingMatrix emb;
  emb.m = Matrix(static_cast<std::size_t>(d), static_cast<std::size_t>(v), 0.0);
  for (int k = 0; k < d; ++k) {
    int src = order[static_cast<std::size_t>(k)];
    Vector dir(static_cast<std::size_t>(v), 0.0);
    for (int r = 0; r < v; ++r) {
      double s = 0.0;
      for (int j = 0; j < d; ++j)
        s += q(static_cast<std::size_t>(r), static_cast<std::size_t>(j)) *
             rot(static_cast<std::size_t>(j), static_cast<std::size_t>(src));
      dir[static_cast<std::size_t>(r)] = s;
    }
    std::size_t pivot = 0;
    for (std::size_t r = 1; r < dir.size(); ++r)
      if (std::abs(dir[r]) > std::abs(dir[pivot])) pivot = r;
    double sign = dir[pivot] < 0.0 ? -1.0 : 1.0;
    double sc = sign * std::sqrt(std::abs(evals[static_cast<std::size_t>(src)]));
    for (int r = 0; r < v; ++r)
      emb.m(static_cast<std::size_t>(k), static_cast<std::size_t>(r)) = sc * dir[static_cast<std::size_t>(r)];
  }

  // Normalize the mean column norm to the requested scale.
  double mean_norm = 0.0;
  for (int i = 0; i < v; ++i) mean_norm += emb.column_norm(i);
  mean_norm /= static_cast<double>(v);
  if (mean_norm > 0.0)
    for (double& x : emb.m.data) x *= column_norm_scale / mean_norm;

  if (!all_finite(emb.m)) throw NumericError("train_embedding: non-finite embedding");
  return emb;
}

// ---------------------------------------------------------------------------
// EMB1 model format: one text header line
//   EMB1 d=<d> vocab=<n> precision=<f32|f64>
// followed by little-endian column-major floats.
// ---------------------------------------------------------------------------

enum class Precision { f32, f64 };

inline const char* precision_name(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

inline void save_emb1(const EmbeddingMatrix& emb, std::ostream& os, Precision prec = Precision::f64) {
  os << "EMB1 d=" << emb.dim() << " vocab=" << emb.vocab()
     << " precision=" << precision_name(prec) << "\n";
  for (int c = 0; c < emb.vocab(); ++c) {
    for (int r = 0; r < emb.dim(); ++r) {
      double v = emb.m(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      if (prec == Precision::f32) {
        float f = static_cast<float>(v);
        os.write(reinterpret_cast<const char*>(&f), sizeof(f));
      } else {
        os.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    }
  }
}

inline EmbeddingMatrix load_emb1(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError("EMB1: missing header");
  int d = 0, v = 0;
  char prec[8] = {0};
  if (std::sscanf(header.c_str(), "EMB1 d=%d vocab=%d precision=%7s", &d, &v, prec) != 3)
    throw FormatError("EMB1: bad header: " + header);
  bool f32 = std::strcmp(prec, "f32") == 0;
  if (!f32 && std::strcmp(prec, "f64") != 0) throw FormatError("EMB1: unknown precision");
  if (d <= 0 || v <= 0) throw FormatError("EMB1: bad dimensions");
  EmbeddingMatrix emb;
  emb.m = Matrix(static_cast<std::size_t>(d), static_cast<std::size_t>(v), 0.0);
  for (int c = 0; c < v; ++c) {
    for (int r = 0; r < d; ++r) {
      double val;
      if (f32) {
        float f;
        is.read(reinterpret_cast<char*>(&f), sizeof(f));
        val = static_cast<double>(f);
      } else {
        is.read(reinterpret_cast<char*>(&val), sizeof(val));
      }
      if (!is) throw FormatError("EMB1: truncated payload");
      emb.m(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = val;
    }
  }
  return emb;
}

inline void save_emb1_file(const EmbeddingMatrix& emb, const std::string& path,
                           Precision prec = Precision::f64) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open for write: " + path);
  save_emb1(emb, os, prec);
}

inline EmbeddingMatrix load_emb1_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open for read: " + path);
  return load_emb1(is);
}

}  // namespace bombworks
