// Synthetic task generators, stratified splits, reference subsets and
// per-class centroids. Sequence tasks stand in for event-sequence corpora
// (token ids drawn from a structured vocabulary), dense tasks for image
// feature pipelines (Gaussian blob mixtures).
#pragma once

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "bombworks/errors.hpp"
#include "bombworks/matrix.hpp"
#include "bombworks/rng.hpp"

namespace bombworks {

struct TokenSequenceSample {
  std::vector<int> tokens;
  int label = 0;
};

struct DenseSample {
  Vector values;
  int label = 0;
};

enum class TaskKind { sequence, dense };

struct LabeledDataset {
  TaskKind kind = TaskKind::sequence;
  int n_classes = 0;
  int vocab_size = 0;  // sequence tasks
  int input_dim = 0;   // dense tasks
  std::vector<TokenSequenceSample> sequences;
  std::vector<DenseSample> dense;

  std::size_t size() const {
    return kind == TaskKind::sequence ? sequences.size() : dense.size();
  }
  int label_of(std::size_t i) const {
    return kind == TaskKind::sequence ? sequences[i].label : dense[i].label;
  }
};

// Vocabulary layout for generated sequence tasks. The filler block is a set
// of frequent tokens drawn identically in every class (the stop-word
// analogue); indicator blocks are class-specific; the rest is a Zipf-ish
// background. Co-occurrence training later pushes filler columns toward
// zero norm, which is what the lowest-norm column heuristic keys on.
struct SequenceVocabLayout {
  int n_filler = 0;
  int n_indicator_per_class = 0;
  double filler_mass = 0.45;

  static SequenceVocabLayout for_vocab(int vocab_size, int n_classes) {
    SequenceVocabLayout lay;
    lay.n_filler = std::max(4, std::min(32, vocab_size / 20));
    int remaining = vocab_size - lay.n_filler;
    lay.n_indicator_per_class = std::max(1, std::min(20, remaining / (3 * n_classes)));
    return lay;
  }

  // Token blocks: [0, n_filler) filler, then per-class indicator blocks,
  // then background.
  int indicator_begin(int cls) const { return n_filler + cls * n_indicator_per_class; }
  int indicator_end(int cls) const { return indicator_begin(cls) + n_indicator_per_class; }
  int background_begin(int n_classes) const { return n_filler + n_classes * n_indicator_per_class; }
};

inline LabeledDataset generate_sequence_task(int vocab_size, int n_samples, double avg_length,
                                             double signal_strength, int n_classes,
                                             RngStream& rng) {
  if (vocab_size < 2) throw ParameterError("generate_sequence_task: vocab_size must be >= 2");
  if (n_samples < 2) throw ParameterError("generate_sequence_task: n_samples must be >= 2");
  if (avg_length < 1.0) throw ParameterError("generate_sequence_task: avg_length must be >= 1");
  if (n_classes < 2) throw ParameterError("generate_sequence_task: n_classes must be >= 2");
  if (signal_strength < 0.0 || signal_strength > 1.0)
    throw ParameterError("generate_sequence_task: signal_strength must be in [0,1]");

  SequenceVocabLayout lay = SequenceVocabLayout::for_vocab(vocab_size, n_classes);
  int bg_begin = lay.background_begin(n_classes);
  int n_background = vocab_size - bg_begin;
  if (n_background < 1)
    throw ParameterError("generate_sequence_task: vocab too small for class structure");

  // Background Zipf weights. The exponent is kept below 1 so that even the
  // tail tokens occur at desk-scale corpus sizes (unused tokens would have
  // exactly-zero co-occurrence columns).
  std::vector<double> bg_cdf(n_background);
  double acc = 0.0;
  for (int i = 0; i < n_background; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i + 1), 0.8);
    bg_cdf[i] = acc;
  }
  for (double& c : bg_cdf) c /= acc;

  const double p_indicator = signal_strength * 0.35;
  const double p_filler = lay.filler_mass;

  LabeledDataset out;
  out.kind = TaskKind::sequence;
  out.n_classes = n_classes;
  out.vocab_size = vocab_size;
  out.sequences.reserve(static_cast<std::size_t>(n_samples));

  for (int s = 0; s < n_samples; ++s) {
    int label = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_classes)));
    int len = std::max(2, static_cast<int>(std::lround(rng.normal(avg_length, avg_length / 4.0))));
    TokenSequenceSample sample;
    sample.label = label;
    sample.tokens.reserve(static_cast<std::size_t>(len));
    for (int k = 0; k < len; ++k) {
      double u = rng.uniform();
      int tok;
      if (u < p_filler) {
        tok = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(lay.n_filler)));
      } else if (u < p_filler + p_indicator) {
        tok = lay.indicator_begin(label) +
              static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(lay.n_indicator_per_class)));
      } else {
        double v = rng.uniform();
        int lo = 0, hi = n_background - 1;
        while (lo < hi) {
          int mid = (lo + hi) / 2;
          if (bg_cdf[mid] < v) lo = mid + 1; else hi = mid;
        }
        tok = bg_begin + lo;
      }
      sample.tokens.push_back(tok);
    }
    out.sequences.push_back(std::move(sample));
  }
  return out;
}

inline LabeledDataset generate_dense_task(int input_dim, int n_samples, int n_classes,
                                          double margin, RngStream& rng) {
  if (input_dim < 2) throw ParameterError("generate_dense_task: input_dim must be >= 2");
  if (n_samples < 2) throw ParameterError("generate_dense_task: n_samples must be >= 2");
  if (n_classes < 2) throw ParameterError("generate_dense_task: n_classes must be >= 2");
  if (margin < 0.0) throw ParameterError("generate_dense_task: margin must be non-negative");

  if (n_classes > input_dim)
    throw ParameterError("generate_dense_task: need input_dim >= n_classes");

  // Class centers along orthonormal random directions, scaled so every
  // pairwise center distance equals `margin` in units of the isotropic
  // unit noise.
  std::vector<Vector> centers(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    Vector dir(static_cast<std::size_t>(input_dim));
    for (double& x : dir) x = rng.normal();
    for (int prev = 0; prev < c; ++prev) {
      double proj = dot(dir, centers[static_cast<std::size_t>(prev)]);
      double prev_sq = dot(centers[static_cast<std::size_t>(prev)], centers[static_cast<std::size_t>(prev)]);
      if (prev_sq > 0.0) axpy(-proj / prev_sq, centers[static_cast<std::size_t>(prev)], dir);
    }
    double nn = norm(dir);
    if (nn < 1e-12) nn = 1.0;
    for (double& x : dir) x *= (margin / std::sqrt(2.0)) / nn;
    centers[static_cast<std::size_t>(c)] = std::move(dir);
  }

  LabeledDataset out;
  out.kind = TaskKind::dense;
  out.n_classes = n_classes;
  out.input_dim = input_dim;
  out.dense.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    int label = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_classes)));
    DenseSample sample;
    sample.label = label;
    sample.values.resize(static_cast<std::size_t>(input_dim));
    const Vector& c = centers[static_cast<std::size_t>(label)];
    for (int i = 0; i < input_dim; ++i)
      sample.values[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)] + rng.normal();
    out.dense.push_back(std::move(sample));
  }
  return out;
}

namespace detail {

inline LabeledDataset dataset_like(const LabeledDataset& src) {
  LabeledDataset out;
  out.kind = src.kind;
  out.n_classes = src.n_classes;
  out.vocab_size = src.vocab_size;
  out.input_dim = src.input_dim;
  return out;
}

inline void append_sample(LabeledDataset& dst, const LabeledDataset& src, std::size_t i) {
  if (src.kind == TaskKind::sequence)
    dst.sequences.push_back(src.sequences[i]);
  else
    dst.dense.push_back(src.dense[i]);
}

// Per-class index lists in dataset order.
inline std::vector<std::vector<std::size_t>> indices_by_class(const LabeledDataset& d) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(d.n_classes));
  for (std::size_t i = 0; i < d.size(); ++i) {
    int y = d.label_of(i);
    if (y < 0 || y >= d.n_classes) throw InputError("dataset: label outside class set");
    by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  return by_class;
}

}  // namespace detail

// Stratified split into (train, validation). Per-class proportions are
// preserved within one sample.
inline std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& d, double fraction,
                                                       RngStream& rng) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ParameterError("split: fraction must be in (0,1)");
  auto by_class = detail::indices_by_class(d);
  LabeledDataset train = detail::dataset_like(d);
  LabeledDataset val = detail::dataset_like(d);
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& idx : by_class) {
    rng.shuffle(idx);
    std::size_t n_train = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < idx.size(); ++k)
      (k < n_train ? train_idx : val_idx).push_back(idx[k]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  for (std::size_t i : train_idx) detail::append_sample(train, d, i);
  for (std::size_t i : val_idx) detail::append_sample(val, d, i);
  return {std::move(train), std::move(val)};
}

// Stratified subset R of the training set, |R| = size. Sample identity is
// preserved (no mutation, no duplication).
inline LabeledDataset reference_subset(const LabeledDataset& train, std::size_t size,
                                       RngStream& rng) {
  if (size > train.size()) throw ParameterError("reference_subset: size exceeds |train|");
  if (size == 0) throw ParameterError("reference_subset: size must be positive");
  auto by_class = detail::indices_by_class(train);

  // Proportional allocation; leftovers go to classes by largest fractional
  // part, ties to the lower class id.
  std::size_t n = train.size();
  std::vector<std::size_t> take(by_class.size(), 0);
  std::vector<std::pair<double, std::size_t>> frac;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    double exact = static_cast<double>(size) * static_cast<double>(by_class[c].size()) /
                   static_cast<double>(n);
    take[c] = static_cast<std::size_t>(exact);
    assigned += take[c];
    frac.push_back({exact - static_cast<double>(take[c]), c});
  }
  std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t k = 0; assigned < size && k < frac.size(); ++k) {
    std::size_t c = frac[k].second;
    if (take[c] < by_class[c].size()) {
      ++take[c];
      ++assigned;
    }
  }
  // Extremely skewed cases can still be short; top up from any class.
  for (std::size_t c = 0; assigned < size && c < by_class.size(); ++c) {
    while (assigned < size && take[c] < by_class[c].size()) {
      ++take[c];
      ++assigned;
    }
  }

  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto idx = by_class[c];
    rng.shuffle(idx);
    for (std::size_t k = 0; k < take[c]; ++k) chosen.push_back(idx[k]);
  }
  std::sort(chosen.begin(), chosen.end());
  LabeledDataset out = detail::dataset_like(train);
  for (std::size_t i : chosen) detail::append_sample(out, train, i);
  return out;
}

struct ClassCentroids {
  std::vector<Vector> mean;  // indexed by class id
};

// Per-class mean of vectorized inputs. Every class in [0, n_classes) must
// be present.
inline ClassCentroids centroids(const std::vector<Vector>& inputs, const std::vector<int>& labels,
                                int n_classes) {
  if (inputs.size() != labels.size()) throw DimensionError("centroids: inputs/labels size mismatch");
  if (inputs.empty()) throw InputError("centroids: empty reference set");
  std::size_t dim = inputs[0].size();
  ClassCentroids out;
  out.mean.assign(static_cast<std::size_t>(n_classes), Vector(dim, 0.0));
  std::vector<std::size_t> count(static_cast<std::size_t>(n_classes), 0);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != dim) throw DimensionError("centroids: inconsistent input dimensions");
    int y = labels[i];
    if (y < 0 || y >= n_classes) throw InputError("centroids: label outside class set");
    axpy(1.0, inputs[i], out.mean[static_cast<std::size_t>(y)]);
    ++count[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < n_classes; ++c) {
    if (count[static_cast<std::size_t>(c)] == 0)
      throw MissingClassError("centroids: class " + std::to_string(c) + " has no samples");
    scale(out.mean[static_cast<std::size_t>(c)],
          1.0 / static_cast<double>(count[static_cast<std::size_t>(c)]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV ingestion.
//   sequence: header "#vocab_size=<n> classes=<k>", rows "label,tok tok ..."
//   dense:    header "#dim=<d> classes=<k>",        rows "label,v1,v2,..."
// ---------------------------------------------------------------------------

inline void write_csv(const LabeledDataset& d, std::ostream& os) {
  char buf[64];
  if (d.kind == TaskKind::sequence) {
    os << "#vocab_size=" << d.vocab_size << " classes=" << d.n_classes << "\n";
    for (const auto& s : d.sequences) {
      os << s.label << ",";
      for (std::size_t k = 0; k < s.tokens.size(); ++k) {
        if (k) os << ' ';
        os << s.tokens[k];
      }
      os << "\n";
    }
  } else {
    os << "#dim=" << d.input_dim << " classes=" << d.n_classes << "\n";
    for (const auto& s : d.dense) {
      os << s.label;
      for (double v : s.values) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << ',' << buf;
      }
      os << "\n";
    }
  }
}

inline LabeledDataset read_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.empty() || header[0] != '#')
    throw FormatError("dataset csv: missing header line");
  LabeledDataset out;
  int classes = 0;
  if (header.rfind("#vocab_size=", 0) == 0) {
    out.kind = TaskKind::sequence;
    if (std::sscanf(header.c_str(), "#vocab_size=%d classes=%d", &out.vocab_size, &classes) != 2)
      throw FormatError("dataset csv: bad sequence header");
  } else if (header.rfind("#dim=", 0) == 0) {
    out.kind = TaskKind::dense;
    if (std::sscanf(header.c_str(), "#dim=%d classes=%d", &out.input_dim, &classes) != 2)
      throw FormatError("dataset csv: bad dense header");
  } else {
    throw FormatError("dataset csv: unrecognized header");
  }
  out.n_classes = classes;

  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("dataset csv: row missing comma");
    int label = std::stoi(line.substr(0, comma));
    if (label < 0 || label >= classes) throw FormatError("dataset csv: label outside class set");
    if (out.kind == TaskKind::sequence) {
      TokenSequenceSample s;
      s.label = label;
      std::istringstream toks(line.substr(comma + 1));
      int tok;
      while (toks >> tok) {
        if (tok < 0 || tok >= out.vocab_size) throw FormatError("dataset csv: token out of range");
        s.tokens.push_back(tok);
      }
      if (s.tokens.empty()) throw FormatError("dataset csv: empty token sequence");
      out.sequences.push_back(std::move(s));
    } else {
      DenseSample s;
      s.label = label;
      std::istringstream vals(line.substr(comma + 1));
      std::string cell;
      while (std::getline(vals, cell, ',')) s.values.push_back(std::stod(cell));
      if (static_cast<int>(s.values.size()) != out.input_dim)
        throw FormatError("dataset csv: row dimension mismatch");
      out.dense.push_back(std::move(s));
    }
  }
  return out;
}

inline void write_csv_file(const LabeledDataset& d, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open for write: " + path);
  write_csv(d, os);
}

inline LabeledDataset read_csv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open for read: " + path);
  return read_csv(is);
}

}  // namespace bombworks
