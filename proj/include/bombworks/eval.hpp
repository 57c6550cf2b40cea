// Trial runner, metric suite and sweep engine. A cell is one fully
// specified experiment (dataset + models + attack + defense config); a
// trial picks one bomb target and crafts one malicious extractor. Cells
// that differ only in attack/defense parameters share their dataset and
// baseline models (seeds derive from the data/model portion of the config,
// not from the cell index), so sweeps compare like against like.
#pragma once

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bombworks/attack_embedding.hpp"
#include "bombworks/attack_nn.hpp"
#include "bombworks/classifiers.hpp"
#include "bombworks/config.hpp"
#include "bombworks/dataset.hpp"
#include "bombworks/defense.hpp"
#include "bombworks/embedding.hpp"
#include "bombworks/errors.hpp"
#include "bombworks/nn.hpp"
#include "bombworks/util.hpp"

namespace bombworks {

// ---------------------------------------------------------------------------
// Records and metrics
// ---------------------------------------------------------------------------

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  std::size_t target_index = 0;
  int true_label = 0;
  int target_class = 0;
  int baseline_label = 0;
  double baseline_confidence = 0.0;
  int infected_label = 0;
  double infected_confidence = 0.0;
  bool success = false;
  double flipping_rate = 0.0;
  double defended_accuracy = 0.0;       // accuracy of the evaluated system on V \ {x*}
  double perturbation_permille = 0.0;   // nonzero / total parameters, per mille
  double linf = 0.0;
  double frob = 0.0;
  double max_constraint = 0.0;          // embedding: max ||E x|| over R
  bool feasible = true;
  int rounds = 0;                       // nn attack rounds
  bool warning = false;                 // solver convergence warning
};

inline double attack_success_rate(const std::vector<TrialRecord>& trials) {
  if (trials.empty()) throw InputError("attack_success_rate: no trials");
  std::size_t hits = 0;
  for (const auto& t : trials)
    if (t.success) ++hits;
  return static_cast<double>(hits) / static_cast<double>(trials.size());
}

// Mean +- population std of the confidence over successful trials only;
// empty when no trial succeeded (an undefined metric, not zero).
inline std::optional<MeanStd> misclassification_confidence(const std::vector<TrialRecord>& trials) {
  std::vector<double> confs;
  for (const auto& t : trials)
    if (t.success) confs.push_back(t.infected_confidence);
  if (confs.empty()) return std::nullopt;
  return mean_std(confs);
}

inline double classification_flipping_rate(const HostClassifier& f, const EmbeddingMatrix& g,
                                           const EmbeddingMatrix& g_hat,
                                           const std::vector<SparseInputVector>& val,
                                           std::size_t exclude_index) {
  if (val.size() < 2) throw InputError("classification_flipping_rate: validation set too small");
  std::size_t flips = 0, counted = 0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    if (i == exclude_index) continue;
    int a = f.predict(extract(g, val[i])).first;
    int b = f.predict(extract(g_hat, val[i])).first;
    if (a != b) ++flips;
    ++counted;
  }
  if (counted == 0) throw InputError("classification_flipping_rate: empty after exclusion");
  return static_cast<double>(flips) / static_cast<double>(counted);
}

inline double classification_flipping_rate(const HostClassifier& f, const DnnExtractor& g,
                                           const DnnExtractor& g_hat, const std::vector<Vector>& val,
                                           std::size_t exclude_index) {
  if (val.size() < 2) throw InputError("classification_flipping_rate: validation set too small");
  std::size_t flips = 0, counted = 0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    if (i == exclude_index) continue;
    int a = f.predict(forward(g, val[i])).first;
    int b = f.predict(forward(g_hat, val[i])).first;
    if (a != b) ++flips;
    ++counted;
  }
  if (counted == 0) throw InputError("classification_flipping_rate: empty after exclusion");
  return static_cast<double>(flips) / static_cast<double>(counted);
}

struct MetricsReport {
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  bool confidence_defined = false;
  MeanStd confidence;
  double confidence_median = 0.0;
  MeanStd flipping;
  double flipping_median = 0.0;
  MeanStd perturbation_permille;
  double perturbation_median = 0.0;
  MeanStd linf;
  double linf_median = 0.0;
  double baseline_accuracy = 0.0;
  MeanStd defended_accuracy;
  double defended_accuracy_median = 0.0;
  bool all_feasible = true;
  double max_constraint = 0.0;
  double mean_rounds = 0.0;
};

inline MetricsReport aggregate_metrics(const std::vector<TrialRecord>& records,
                                       double baseline_accuracy) {
  MetricsReport rep;
  rep.trials = static_cast<int>(records.size());
  rep.baseline_accuracy = baseline_accuracy;
  if (records.empty()) return rep;
  std::vector<double> flip, pert, linf, defended, rounds, confs;
  for (const auto& r : records) {
    if (r.success) {
      ++rep.successes;
      confs.push_back(r.infected_confidence);
    }
    flip.push_back(r.flipping_rate);
    pert.push_back(r.perturbation_permille);
    linf.push_back(r.linf);
    defended.push_back(r.defended_accuracy);
    rounds.push_back(static_cast<double>(r.rounds));
    rep.all_feasible = rep.all_feasible && r.feasible;
    rep.max_constraint = std::max(rep.max_constraint, r.max_constraint);
  }
  rep.success_rate = static_cast<double>(rep.successes) / static_cast<double>(records.size());
  if (!confs.empty()) {
    rep.confidence_defined = true;
    rep.confidence = mean_std(confs);
    rep.confidence_median = median(confs);
  }
  rep.flipping = mean_std(flip);
  rep.flipping_median = median(flip);
  rep.perturbation_permille = mean_std(pert);
  rep.perturbation_median = median(pert);
  rep.linf = mean_std(linf);
  rep.linf_median = median(linf);
  rep.defended_accuracy = mean_std(defended);
  rep.defended_accuracy_median = median(defended);
  rep.mean_rounds = mean_std(rounds).mean;
  return rep;
}

// ---------------------------------------------------------------------------
// Experiment specs (desk-scale defaults) and config mapping
// ---------------------------------------------------------------------------

struct EmbeddingExperimentSpec {
  int vocab = 500;
  int n_samples = 2000;
  double avg_length = 60.0;
  double signal = 0.5;
  int n_classes = 2;
  double train_fraction = 0.8;
  double gamma = 0.97;
  int dim = 100;
  double embedding_scale = 0.4;
  HostKind host = HostKind::lr;
  HostHyper host_hyper;
  std::size_t ref_size = 1000;
  EmbeddingAttackConfig attack;
  double defense_rho = 0.0;
  int trials = 30;

  std::string data_key() const {
    std::ostringstream ss;
    ss << "task=embedding;vocab=" << vocab << ";samples=" << n_samples
       << ";avg_length=" << avg_length << ";signal=" << signal << ";classes=" << n_classes
       << ";train_fraction=" << train_fraction;
    return ss.str();
  }
  std::string model_key() const {
    std::ostringstream ss;
    ss << data_key() << ";dim=" << dim << ";scale=" << embedding_scale << ";gamma=" << gamma
       << ";host=" << host_kind_name(host)
       << ";resblocks=" << host_hyper.residual_blocks << ";host_epochs=" << host_hyper.epochs
       << ";host_lr=" << host_hyper.lr << ";wd=" << host_hyper.weight_decay
       << ";ref_size=" << ref_size;
    return ss.str();
  }
};

struct NnExperimentSpec {
  int input_dim = 128;
  int n_samples = 4000;
  double margin = 2.6;
  int n_classes = 2;
  double train_fraction = 0.75;
  std::vector<int> arch = {512, 48};
  // After pretraining, the extractor ships in a rescaled ReLU
  // parameterization (hidden activations scaled up, so later layers carry
  // small-magnitude entries). The computed function is identical; only
  // the absolute magnitudes of the parameter entries change.
  std::vector<double> ship_act_scales = {1.0 / 12.0};
  double ship_feature_scale = 0.2;
  int pretrain_epochs = 25;
  double pretrain_lr = 0.1;
  double ref_fraction = 0.5;
  int surrogate_epochs = 60;
  double surrogate_lr = 0.5;
  // "fc" keeps the classifier produced by the developer's full-system
  // tuning; lr/mlp/resmlp train a separate host on frozen features.
  std::string host_mode = "lr";
  HostHyper host_hyper = [] {
    HostHyper h;
    h.epochs = 60;
    h.lr = 0.5;
    h.weight_decay = 2e-3;
    return h;
  }();
  NnAttackConfig attack;
  bool full_tune_after = false;
  int posttune_epochs = 5;
  double posttune_lr = 1e-4;
  double defense_rho = 0.0;
  int trials = 30;

  std::string data_key() const {
    std::ostringstream ss;
    ss << "task=nn;input_dim=" << input_dim << ";samples=" << n_samples << ";margin=" << margin
       << ";classes=" << n_classes << ";train_fraction=" << train_fraction;
    return ss.str();
  }
  std::string model_key() const {
    std::ostringstream ss;
    ss << data_key() << ";arch=";
    for (std::size_t i = 0; i < arch.size(); ++i) ss << (i ? "-" : "") << arch[i];
    ss << ";ship=";
    for (std::size_t i = 0; i < ship_act_scales.size(); ++i) ss << (i ? "-" : "") << ship_act_scales[i];
    ss << "x" << ship_feature_scale << ";pretrain=" << pretrain_epochs << "x" << pretrain_lr << ";host=" << host_mode
       << ";resblocks=" << host_hyper.residual_blocks << ";ref_fraction=" << ref_fraction;
    return ss.str();
  }
};

inline EmbeddingExperimentSpec embedding_spec_from_config(const KeyValueConfig& cfg) {
  EmbeddingExperimentSpec s;
  s.vocab = static_cast<int>(cfg.get_int("vocab", s.vocab));
  s.n_samples = static_cast<int>(cfg.get_int("samples", s.n_samples));
  s.avg_length = cfg.get_double("avg_length", s.avg_length);
  s.signal = cfg.get_double("signal", s.signal);
  s.n_classes = static_cast<int>(cfg.get_int("classes", s.n_classes));
  s.train_fraction = cfg.get_double("train_fraction", s.train_fraction);
  s.gamma = cfg.get_double("gamma", s.gamma);
  s.dim = static_cast<int>(cfg.get_int("dim", s.dim));
  s.embedding_scale = cfg.get_double("embedding_scale", s.embedding_scale);
  s.host = parse_host_kind(cfg.get("host", "lr"));
  s.host_hyper.residual_blocks = static_cast<int>(cfg.get_int("residual_blocks", 0));
  // Per-kind training defaults: the linear host runs hotter than the
  // nonlinear ones, which diverge at the same rate on desk features.
  switch (s.host) {
    case HostKind::lr:
      s.host_hyper.epochs = 80;
      s.host_hyper.lr = 1.0;
      break;
    case HostKind::svm:
      s.host_hyper.epochs = 60;
      s.host_hyper.lr = 0.2;
      break;
    case HostKind::mlp:
    case HostKind::resmlp:
      s.host_hyper.epochs = 60;
      s.host_hyper.lr = 0.3;
      break;
  }
  s.host_hyper.epochs = static_cast<int>(cfg.get_int("host_epochs", s.host_hyper.epochs));
  s.host_hyper.lr = cfg.get_double("host_lr", s.host_hyper.lr);
  s.host_hyper.weight_decay = cfg.get_double("weight_decay", s.host_hyper.weight_decay);
  s.ref_size = static_cast<std::size_t>(cfg.get_int("ref_size", static_cast<long>(s.ref_size)));
  s.attack.lambda = cfg.get_double("lambda", s.attack.lambda);
  s.attack.delta = cfg.get_double("delta", s.attack.delta);
  s.attack.n_columns = static_cast<int>(cfg.get_int("columns", s.attack.n_columns));
  s.attack.max_iters = static_cast<int>(cfg.get_int("attack_iters", s.attack.max_iters));
  s.attack.step0 = cfg.get_double("attack_step", s.attack.step0);
  s.defense_rho = cfg.get_double("rho", s.defense_rho);
  s.trials = static_cast<int>(cfg.get_int("trials", s.trials));
  return s;
}

inline NnExperimentSpec nn_spec_from_config(const KeyValueConfig& cfg) {
  NnExperimentSpec s;
  s.input_dim = static_cast<int>(cfg.get_int("input_dim", s.input_dim));
  s.n_samples = static_cast<int>(cfg.get_int("samples", s.n_samples));
  s.margin = cfg.get_double("margin", s.margin);
  s.n_classes = static_cast<int>(cfg.get_int("classes", s.n_classes));
  s.train_fraction = cfg.get_double("train_fraction", s.train_fraction);
  s.arch = cfg.get_int_list("arch", s.arch);
  if (cfg.has("ship_act_scales")) {
    s.ship_act_scales.clear();
    std::istringstream ss(cfg.get("ship_act_scales", ""));
    std::string cell;
    while (std::getline(ss, cell, ',')) s.ship_act_scales.push_back(std::stod(cell));
  }
  s.ship_feature_scale = cfg.get_double("ship_feature_scale", s.ship_feature_scale);
  s.pretrain_epochs = static_cast<int>(cfg.get_int("pretrain_epochs", s.pretrain_epochs));
  s.pretrain_lr = cfg.get_double("pretrain_lr", s.pretrain_lr);
  s.ref_fraction = cfg.get_double("ref_fraction", s.ref_fraction);
  s.surrogate_epochs = static_cast<int>(cfg.get_int("surrogate_epochs", s.surrogate_epochs));
  s.surrogate_lr = cfg.get_double("surrogate_lr", s.surrogate_lr);
  s.host_mode = cfg.get("host", s.host_mode);
  s.host_hyper.residual_blocks = static_cast<int>(cfg.get_int("residual_blocks", 0));
  s.host_hyper.epochs = static_cast<int>(cfg.get_int("host_epochs", s.host_hyper.epochs));
  s.host_hyper.lr = cfg.get_double("host_lr", s.host_hyper.lr);
  s.attack.epsilon = cfg.get_double("epsilon", s.attack.epsilon);
  s.attack.alpha = cfg.get_double("alpha", s.attack.alpha);
  s.attack.kappa = static_cast<int>(cfg.get_int("kappa", s.attack.kappa));
  s.attack.max_rounds = static_cast<int>(cfg.get_int("max_rounds", s.attack.max_rounds));
  s.attack.early_stop_margin = cfg.get_double("stop_margin", s.attack.early_stop_margin);
  s.full_tune_after = cfg.get_bool("full_tune_after", s.full_tune_after);
  s.posttune_epochs = static_cast<int>(cfg.get_int("posttune_epochs", s.posttune_epochs));
  s.posttune_lr = cfg.get_double("posttune_lr", s.posttune_lr);
  s.defense_rho = cfg.get_double("rho", s.defense_rho);
  s.trials = static_cast<int>(cfg.get_int("trials", s.trials));
  return s;
}

// ---------------------------------------------------------------------------
// Embedding experiment
// ---------------------------------------------------------------------------

struct EmbeddingCell {
  EmbeddingExperimentSpec spec;
  std::uint64_t model_seed = 0;
  EmbeddingMatrix m;
  HostClassifier host;
  std::vector<SparseInputVector> val_inputs;
  std::vector<int> val_labels;
  std::vector<SparseInputVector> ref_inputs;
  std::vector<int> ref_labels;
  std::vector<int> baseline_pred;
  std::vector<std::size_t> eligible;  // validation indices correctly classified
  double baseline_accuracy = 0.0;
};

inline EmbeddingCell setup_embedding_cell(const EmbeddingExperimentSpec& spec,
                                          std::uint64_t master_seed) {
  EmbeddingCell cell;
  cell.spec = spec;
  std::uint64_t data_seed = split_seed(master_seed, fnv1a64(spec.data_key()));
  cell.model_seed = split_seed(master_seed, fnv1a64(spec.model_key()));

  RngStream data_rng = RngStream(data_seed).child(1);
  LabeledDataset all = generate_sequence_task(spec.vocab, spec.n_samples, spec.avg_length,
                                              spec.signal, spec.n_classes, data_rng);
  RngStream split_rng = RngStream(data_seed).child(2);
  auto [train, val] = split(all, spec.train_fraction, split_rng);

  RngStream emb_rng = RngStream(cell.model_seed).child(3);
  cell.m = train_embedding(train, spec.dim, emb_rng, 5, 30, spec.embedding_scale);

  VectorizerConfig vec_cfg{spec.gamma};
  std::vector<Vector> train_features;
  std::vector<int> train_labels;
  train_features.reserve(train.sequences.size());
  for (const auto& s : train.sequences) {
    train_features.push_back(extract(cell.m, vectorize(s, vec_cfg, spec.vocab)));
    train_labels.push_back(s.label);
  }
  RngStream host_rng = RngStream(cell.model_seed).child(4);
  cell.host =
      train_host(spec.host, train_features, train_labels, spec.n_classes, spec.host_hyper, host_rng);

  RngStream ref_rng = RngStream(cell.model_seed).child(5);
  LabeledDataset ref = reference_subset(train, std::min(spec.ref_size, train.size()), ref_rng);
  for (const auto& s : ref.sequences) {
    cell.ref_inputs.push_back(vectorize(s, vec_cfg, spec.vocab));
    cell.ref_labels.push_back(s.label);
  }

  std::size_t hits = 0;
  for (std::size_t i = 0; i < val.sequences.size(); ++i) {
    const auto& s = val.sequences[i];
    cell.val_inputs.push_back(vectorize(s, vec_cfg, spec.vocab));
    cell.val_labels.push_back(s.label);
    int pred = cell.host.predict(extract(cell.m, cell.val_inputs.back())).first;
    cell.baseline_pred.push_back(pred);
    if (pred == s.label) {
      ++hits;
      cell.eligible.push_back(i);
    }
  }
  cell.baseline_accuracy = static_cast<double>(hits) / static_cast<double>(val.sequences.size());
  if (cell.eligible.empty()) throw InputError("embedding cell: no correctly classified targets");
  return cell;
}

inline TrialRecord run_embedding_trial(const EmbeddingCell& cell, int trial_index) {
  const auto& spec = cell.spec;
  TrialRecord rec;
  rec.trial = trial_index;
  rec.seed = split_seed(cell.model_seed, 1000 + static_cast<std::uint64_t>(trial_index));
  RngStream rng(rec.seed);

  std::size_t pick = static_cast<std::size_t>(rng.uniform_index(cell.eligible.size()));
  rec.target_index = cell.eligible[pick];
  rec.true_label = cell.val_labels[rec.target_index];
  rec.baseline_label = cell.baseline_pred[rec.target_index];
  rec.target_class = (rec.true_label + 1) % spec.n_classes;

  EmbeddingBombTarget target{cell.val_inputs[rec.target_index], rec.target_class};
  EmbeddingCraftResult craft = craft_embedding_bomb(cell.m, {target}, cell.ref_inputs,
                                                    cell.ref_labels, spec.n_classes, spec.attack);
  rec.warning = craft.convergence_warning;
  rec.linf = craft.linf_e;
  rec.frob = craft.frob_e;
  rec.max_constraint = craft.max_constraint;
  rec.feasible = craft.max_constraint <= spec.attack.delta * (1.0 + 1e-6);
  std::size_t changed = 0;
  for (double x : craft.e.data)
    if (x != 0.0) ++changed;
  rec.perturbation_permille =
      1000.0 * static_cast<double>(changed) / static_cast<double>(craft.e.data.size());

  // The system under evaluation: the bombed extractor, noise-defended when
  // a defense is configured.
  EmbeddingMatrix deployed = craft.m_hat;
  if (spec.defense_rho > 0.0) {
    RngStream noise_rng = rng.child(7);
    deployed = noise_inject(craft.m_hat, spec.defense_rho, noise_rng);
  }

  auto [label, conf] = cell.host.predict(extract(deployed, cell.val_inputs[rec.target_index]));
  rec.infected_label = label;
  rec.infected_confidence = conf;
  rec.success = (label == rec.target_class);

  rec.flipping_rate = classification_flipping_rate(cell.host, cell.m, craft.m_hat, cell.val_inputs,
                                                   rec.target_index);
  std::size_t hits = 0, counted = 0;
  for (std::size_t i = 0; i < cell.val_inputs.size(); ++i) {
    if (i == rec.target_index) continue;
    int p = cell.host.predict(extract(deployed, cell.val_inputs[i])).first;
    if (p == cell.val_labels[i]) ++hits;
    ++counted;
  }
  rec.defended_accuracy = static_cast<double>(hits) / static_cast<double>(counted);
  return rec;
}

// ---------------------------------------------------------------------------
// NN experiment
// ---------------------------------------------------------------------------

struct NnCell {
  NnExperimentSpec spec;
  std::uint64_t model_seed = 0;
  LabeledDataset train;
  DnnExtractor g;
  SurrogateClassifier tuned_f;  // classifier from the developer's full tuning
  HostClassifier host;
  std::vector<Vector> val_inputs;
  std::vector<int> val_labels;
  LabeledDataset ref;
  std::vector<Vector> ref_features;  // under the genuine extractor
  std::vector<int> ref_labels;
  std::vector<int> baseline_pred;
  std::vector<std::size_t> eligible;
  double baseline_accuracy = 0.0;
};

inline HostClassifier host_from_fc(const SurrogateClassifier& f) {
  HostClassifier h;
  h.kind = HostKind::lr;
  h.n_classes = f.n_classes();
  h.stack.push_back(f.fc);
  return h;
}

inline NnCell setup_nn_cell(const NnExperimentSpec& spec, std::uint64_t master_seed) {
  NnCell cell;
  cell.spec = spec;
  std::uint64_t data_seed = split_seed(master_seed, fnv1a64(spec.data_key()));
  cell.model_seed = split_seed(master_seed, fnv1a64(spec.model_key()));

  RngStream data_rng = RngStream(data_seed).child(1);
  LabeledDataset all =
      generate_dense_task(spec.input_dim, spec.n_samples, spec.n_classes, spec.margin, data_rng);
  RngStream split_rng = RngStream(data_seed).child(2);
  auto [train, val] = split(all, spec.train_fraction, split_rng);
  cell.train = train;

  RngStream init_rng = RngStream(cell.model_seed).child(3);
  DnnExtractor g0 = make_extractor(spec.input_dim, spec.arch, init_rng);
  SurrogateClassifier f0;
  f0.fc = make_layer(g0.feature_dim(), spec.n_classes, false, init_rng);
  RngStream tune_rng = RngStream(cell.model_seed).child(4);
  auto [g, f] = full_tune(std::move(g0), std::move(f0), train, spec.pretrain_epochs,
                          spec.pretrain_lr, tune_rng);
  if (spec.ship_feature_scale != 1.0) {
    for (double& w : g.layers.back().w) w *= spec.ship_feature_scale;
    for (double& b : g.layers.back().b) b *= spec.ship_feature_scale;
  }
  if (!spec.ship_act_scales.empty()) {
    if (spec.ship_act_scales.size() != spec.arch.size() - 1)
      throw ParameterError("nn experiment: ship_act_scales must have one entry per inner layer");
    rescale_activations(g, spec.ship_act_scales);
  }
  cell.g = std::move(g);
  cell.tuned_f = std::move(f);

  if (spec.host_mode == "fc") {
    cell.host = host_from_fc(cell.tuned_f);
  } else {
    std::vector<Vector> feats;
    std::vector<int> labels;
    for (const auto& s : train.dense) {
      feats.push_back(forward(cell.g, s.values));
      labels.push_back(s.label);
    }
    RngStream host_rng = RngStream(cell.model_seed).child(5);
    cell.host = train_host(parse_host_kind(spec.host_mode), feats, labels, spec.n_classes,
                           spec.host_hyper, host_rng);
  }

  RngStream ref_rng = RngStream(cell.model_seed).child(6);
  std::size_t ref_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(spec.ref_fraction * static_cast<double>(train.size()))));
  cell.ref = reference_subset(train, ref_size, ref_rng);
  for (const auto& s : cell.ref.dense) {
    cell.ref_features.push_back(forward(cell.g, s.values));
    cell.ref_labels.push_back(s.label);
  }

  std::size_t hits = 0;
  for (std::size_t i = 0; i < val.dense.size(); ++i) {
    const auto& s = val.dense[i];
    cell.val_inputs.push_back(s.values);
    cell.val_labels.push_back(s.label);
    int pred = cell.host.predict(forward(cell.g, s.values)).first;
    cell.baseline_pred.push_back(pred);
    if (pred == s.label) {
      ++hits;
      cell.eligible.push_back(i);
    }
  }
  cell.baseline_accuracy = static_cast<double>(hits) / static_cast<double>(val.dense.size());
  if (cell.eligible.empty()) throw InputError("nn cell: no correctly classified targets");
  return cell;
}

inline TrialRecord run_nn_trial(const NnCell& cell, int trial_index) {
  const auto& spec = cell.spec;
  TrialRecord rec;
  rec.trial = trial_index;
  rec.seed = split_seed(cell.model_seed, 1000 + static_cast<std::uint64_t>(trial_index));
  RngStream rng(rec.seed);

  std::size_t pick = static_cast<std::size_t>(rng.uniform_index(cell.eligible.size()));
  rec.target_index = cell.eligible[pick];
  rec.true_label = cell.val_labels[rec.target_index];
  rec.baseline_label = cell.baseline_pred[rec.target_index];
  rec.target_class = (rec.true_label + 1) % spec.n_classes;

  // Surrogate retrained from scratch per trial (bootstrap on R): a
  // fully-connected + softmax readout, fitted with the same weight-decayed
  // recipe an actual developer would use so its scale stays calibrated.
  RngStream surrogate_rng = rng.child(3);
  HostHyper surrogate_hyper;
  surrogate_hyper.epochs = spec.surrogate_epochs;
  surrogate_hyper.lr = spec.surrogate_lr;
  surrogate_hyper.weight_decay = spec.host_hyper.weight_decay;
  HostClassifier surrogate_fit = train_host(HostKind::lr, cell.ref_features, cell.ref_labels,
                                            spec.n_classes, surrogate_hyper, surrogate_rng);
  SurrogateClassifier f_hat;
  f_hat.fc = surrogate_fit.stack[0];

  NnBombTarget target{cell.val_inputs[rec.target_index], rec.target_class};
  NnCraftResult craft = craft_nn_bomb(cell.g, {target}, f_hat, spec.attack);
  rec.rounds = craft.total_rounds;
  rec.warning = craft.empty_pool;
  rec.perturbation_permille = parameter_perturbation_rate_permille(cell.g, craft.g_hat);
  AuditStats audit = diff_audit(cell.g, craft.g_hat);
  rec.linf = audit.linf;
  rec.frob = audit.frob;
  // One signed epsilon step per parameter; the observed difference may
  // exceed epsilon only by the float-add round-off of theta + epsilon.
  rec.feasible = audit.linf <= spec.attack.epsilon * (1.0 + 1e-9);

  // The system the developer ends up running.
  DnnExtractor deployed_g = craft.g_hat;
  HostClassifier deployed_host = cell.host;
  if (spec.full_tune_after) {
    // The developer full-tunes the system they actually run: the bombed
    // extractor plus their current classifier.
    SurrogateClassifier f0;
    f0.fc = cell.host.stack[0];
    RngStream posttune_rng = rng.child(5);
    auto [g2, f2] = full_tune(craft.g_hat, std::move(f0), cell.train, spec.posttune_epochs,
                              spec.posttune_lr, posttune_rng);
    deployed_g = std::move(g2);
    deployed_host = host_from_fc(f2);
  }
  if (spec.defense_rho > 0.0) {
    RngStream noise_rng = rng.child(7);
    deployed_g = noise_inject(deployed_g, spec.defense_rho, noise_rng);
  }

  auto [label, conf] = deployed_host.predict(forward(deployed_g, cell.val_inputs[rec.target_index]));
  rec.infected_label = label;
  rec.infected_confidence = conf;
  rec.success = (label == rec.target_class);

  rec.flipping_rate = classification_flipping_rate(cell.host, cell.g, craft.g_hat, cell.val_inputs,
                                                   rec.target_index);
  std::size_t hits = 0, counted = 0;
  for (std::size_t i = 0; i < cell.val_inputs.size(); ++i) {
    if (i == rec.target_index) continue;
    int p = deployed_host.predict(forward(deployed_g, cell.val_inputs[i])).first;
    if (p == cell.val_labels[i]) ++hits;
    ++counted;
  }
  rec.defended_accuracy = static_cast<double>(hits) / static_cast<double>(counted);
  return rec;
}

// ---------------------------------------------------------------------------
// Cell runner and sweep engine
// ---------------------------------------------------------------------------

struct CellResult {
  MetricsReport report;
  std::vector<TrialRecord> records;
  std::string error;  // non-empty when the cell failed
};

inline CellResult run_cell(const KeyValueConfig& cfg, std::uint64_t master_seed, int workers = 1) {
  CellResult out;
  std::string task = cfg.get("task", "embedding");
  if (task == "embedding") {
    EmbeddingExperimentSpec spec = embedding_spec_from_config(cfg);
    EmbeddingCell cell = setup_embedding_cell(spec, master_seed);
    out.records.resize(static_cast<std::size_t>(spec.trials));
    parallel_for(static_cast<std::size_t>(spec.trials), workers,
                 [&](std::size_t t) { out.records[t] = run_embedding_trial(cell, static_cast<int>(t)); });
    out.report = aggregate_metrics(out.records, cell.baseline_accuracy);
  } else if (task == "nn") {
    NnExperimentSpec spec = nn_spec_from_config(cfg);
    NnCell cell = setup_nn_cell(spec, master_seed);
    out.records.resize(static_cast<std::size_t>(spec.trials));
    parallel_for(static_cast<std::size_t>(spec.trials), workers,
                 [&](std::size_t t) { out.records[t] = run_nn_trial(cell, static_cast<int>(t)); });
    out.report = aggregate_metrics(out.records, cell.baseline_accuracy);
  } else {
    throw ParameterError("run_cell: unknown task '" + task + "'");
  }
  return out;
}

struct SweepResult {
  std::vector<SweepAxis> axes;
  std::vector<std::vector<std::string>> cell_axis_values;  // per cell, one value per axis
  std::vector<KeyValueConfig> cell_configs;
  std::vector<CellResult> cells;
};

inline SweepResult run_sweep(const KeyValueConfig& base, std::uint64_t master_seed,
                             int workers = 1) {
  SweepResult out;
  out.axes = base.sweep_axes();
  std::size_t n_cells = 1;
  for (const auto& axis : out.axes) n_cells *= axis.values.size();

  for (std::size_t c = 0; c < n_cells; ++c) {
    KeyValueConfig cfg = base;
    std::vector<std::string> axis_values;
    std::size_t rest = c;
    for (const auto& axis : out.axes) {
      std::size_t k = rest % axis.values.size();
      rest /= axis.values.size();
      cfg.set(axis.key, axis.values[k]);
      axis_values.push_back(axis.values[k]);
    }
    out.cell_axis_values.push_back(axis_values);
    out.cell_configs.push_back(cfg);
    CellResult cell;
    try {
      cell = run_cell(cfg, master_seed, workers);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    out.cells.push_back(std::move(cell));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string na_or(double v, bool defined) { return defined ? fmt(v) : "na"; }

}  // namespace detail

inline void write_results_csv(const SweepResult& sweep, std::ostream& os) {
  os << "cell";
  for (const auto& axis : sweep.axes) os << "," << axis.key;
  os << ",trial,seed,target_index,true_label,target_class,baseline_label,infected_label,"
        "infected_confidence,success,flipping_rate,defended_accuracy,perturbation_permille,"
        "linf,frob,max_constraint,feasible,rounds,warning\n";
  for (std::size_t c = 0; c < sweep.cells.size(); ++c) {
    if (!sweep.cells[c].error.empty()) continue;
    for (const auto& r : sweep.cells[c].records) {
      os << c;
      for (const auto& v : sweep.cell_axis_values[c]) os << "," << v;
      os << "," << r.trial << "," << r.seed << "," << r.target_index << "," << r.true_label << ","
         << r.target_class << "," << r.baseline_label << "," << r.infected_label << ","
         << fmt(r.infected_confidence) << "," << (r.success ? 1 : 0) << "," << fmt(r.flipping_rate)
         << "," << fmt(r.defended_accuracy) << "," << fmt(r.perturbation_permille) << ","
         << fmt(r.linf) << "," << fmt(r.frob) << "," << fmt(r.max_constraint) << ","
         << (r.feasible ? 1 : 0) << "," << r.rounds << "," << (r.warning ? 1 : 0) << "\n";
    }
  }
}

inline void write_summary_csv(const SweepResult& sweep, std::ostream& os) {
  os << "cell";
  for (const auto& axis : sweep.axes) os << "," << axis.key;
  os << ",trials,successes,success_rate,confidence_mean,confidence_std,confidence_median,"
        "flipping_mean,flipping_std,flipping_median,perturbation_mean,perturbation_median,"
        "linf_mean,linf_median,baseline_accuracy,defended_accuracy_mean,defended_accuracy_median,"
        "all_feasible,max_constraint,mean_rounds,error\n";
  for (std::size_t c = 0; c < sweep.cells.size(); ++c) {
    const CellResult& cell = sweep.cells[c];
    os << c;
    for (const auto& v : sweep.cell_axis_values[c]) os << "," << v;
    if (!cell.error.empty()) {
      for (int i = 0; i < 18; ++i) os << ",na";
      std::string msg = cell.error;
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      os << "," << msg << "\n";
      continue;
    }
    const MetricsReport& m = cell.report;
    os << "," << m.trials << "," << m.successes << "," << fmt(m.success_rate) << ","
       << detail::na_or(m.confidence.mean, m.confidence_defined) << ","
       << detail::na_or(m.confidence.std, m.confidence_defined) << ","
       << detail::na_or(m.confidence_median, m.confidence_defined) << "," << fmt(m.flipping.mean)
       << "," << fmt(m.flipping.std) << "," << fmt(m.flipping_median) << ","
       << fmt(m.perturbation_permille.mean) << "," << fmt(m.perturbation_median) << ","
       << fmt(m.linf.mean) << "," << fmt(m.linf_median) << "," << fmt(m.baseline_accuracy) << ","
       << fmt(m.defended_accuracy.mean) << "," << fmt(m.defended_accuracy_median) << ","
       << (m.all_feasible ? 1 : 0) << "," << fmt(m.max_constraint) << "," << fmt(m.mean_rounds)
       << ",\n";
  }
}

// Per-figure two-column series; emitted for single-axis sweeps, mirroring
// one metric per file against the swept parameter.
inline void write_plotdata(const SweepResult& sweep, const std::string& dir) {
  if (sweep.axes.size() != 1) return;
  const std::string& axis = sweep.axes[0].key;
  struct Series {
    const char* name;
    std::function<std::string(const MetricsReport&)> value;
  };
  std::vector<Series> series = {
      {"success_rate", [](const MetricsReport& m) { return fmt(m.success_rate); }},
      {"confidence_mean",
       [](const MetricsReport& m) { return detail::na_or(m.confidence.mean, m.confidence_defined); }},
      {"flipping_median", [](const MetricsReport& m) { return fmt(m.flipping_median); }},
      {"linf_median", [](const MetricsReport& m) { return fmt(m.linf_median); }},
      {"perturbation_median", [](const MetricsReport& m) { return fmt(m.perturbation_median); }},
      {"defended_accuracy_median",
       [](const MetricsReport& m) { return fmt(m.defended_accuracy_median); }},
  };
  for (const auto& s : series) {
    atomic_write_file(dir + "/" + axis + "_" + s.name + ".csv", [&](std::ostream& os) {
      os << axis << "," << s.name << "\n";
      for (std::size_t c = 0; c < sweep.cells.size(); ++c) {
        if (!sweep.cells[c].error.empty()) continue;
        os << sweep.cell_axis_values[c][0] << "," << s.value(sweep.cells[c].report) << "\n";
      }
    });
  }
}

// Writes results.csv, summary.csv, plotdata/ and the exact resolved config
// into the output directory.
inline void write_sweep_outputs(const SweepResult& sweep, const std::string& out_dir,
                                const KeyValueConfig& resolved) {
  std::filesystem::create_directories(out_dir);
  atomic_write_file(out_dir + "/results.csv", [&](std::ostream& os) { write_results_csv(sweep, os); });
  atomic_write_file(out_dir + "/summary.csv", [&](std::ostream& os) { write_summary_csv(sweep, os); });
  atomic_write_file(out_dir + "/resolved_config.ini",
                    [&](std::ostream& os) { resolved.serialize(os); });
  write_plotdata(sweep, out_dir + "/plotdata");
}

}  // namespace bombworks
