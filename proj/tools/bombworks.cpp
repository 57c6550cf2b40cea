// bombworks: generate synthetic tasks, train feature extractors and host
// classifiers, craft logic-bomb perturbations, evaluate attack/defense
// metrics over seeded trials, and audit model files.
//
// Commands compose through files: datasets are CSV, embeddings use the
// EMB1 container, extractors and classifiers the DNN1 container. Every
// experiment directory receives the exact resolved configuration so runs
// can be replayed byte for byte.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bombworks/attack_embedding.hpp"
#include "bombworks/attack_nn.hpp"
#include "bombworks/classifiers.hpp"
#include "bombworks/config.hpp"
#include "bombworks/dataset.hpp"
#include "bombworks/defense.hpp"
#include "bombworks/embedding.hpp"
#include "bombworks/eval.hpp"
#include "bombworks/nn.hpp"
#include "bombworks/util.hpp"

using namespace bombworks;

namespace {

std::uint64_t env_seed_override(std::uint64_t seed) {
  const char* env = std::getenv("BOMBWORKS_SEED");
  if (!env || !*env) return seed;
  return static_cast<std::uint64_t>(std::stoull(env));
}

Precision parse_precision(const std::string& s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  throw ParameterError("precision must be f32 or f64");
}

// Model files are distinguished by their 4-byte magic.
std::string sniff_model_magic(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open: " + path);
  char magic[4] = {0};
  is.read(magic, 4);
  return std::string(magic, 4);
}

KeyValueConfig resolve_config(const std::string& config_path,
                              const std::vector<std::string>& sets) {
  KeyValueConfig cfg;
  if (!config_path.empty()) cfg.parse_file(config_path);
  for (const auto& kv : sets) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ParameterError("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

int run_experiment(KeyValueConfig cfg, const std::string& out_dir, std::uint64_t seed,
                   int workers) {
  seed = env_seed_override(seed);
  cfg.set("seed", std::to_string(seed));
  cfg.set("out", out_dir);
  SweepResult sweep = run_sweep(cfg, seed, workers);
  write_sweep_outputs(sweep, out_dir, cfg);
  int failed = 0;
  for (std::size_t c = 0; c < sweep.cells.size(); ++c) {
    if (!sweep.cells[c].error.empty()) {
      std::cerr << "cell " << c << " failed: " << sweep.cells[c].error << "\n";
      ++failed;
      continue;
    }
    const MetricsReport& m = sweep.cells[c].report;
    std::cout << "cell " << c << ": success_rate=" << fmt(m.success_rate)
              << " flipping_median=" << fmt(m.flipping_median)
              << " baseline_accuracy=" << fmt(m.baseline_accuracy) << "\n";
  }
  std::cout << "wrote " << out_dir << "/summary.csv\n";
  return failed == static_cast<int>(sweep.cells.size()) && failed > 0 ? 1 : 0;
}

std::vector<EmbeddingBombTarget> load_embedding_targets(const std::string& path, int vocab,
                                                        double gamma) {
  LabeledDataset targets = read_csv_file(path);
  if (targets.kind != TaskKind::sequence)
    throw InputError("craft --kind embedding expects a sequence targets file");
  if (targets.vocab_size != vocab)
    throw DimensionError("targets vocabulary does not match the embedding");
  std::vector<EmbeddingBombTarget> out;
  VectorizerConfig vc{gamma};
  for (const auto& s : targets.sequences)
    out.push_back({vectorize(s, vc, vocab), s.label});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"logic-bomb attack/defense workbench for modular feature extractors"};
  app.require_subcommand(1);

  // ---- gen-data ----
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
  std::string gen_task = "sequence", gen_out;
  std::uint64_t gen_seed = 1;
  int gen_vocab = 500, gen_samples = 2000, gen_classes = 2, gen_input_dim = 64;
  double gen_avg_length = 60.0, gen_signal = 0.85, gen_margin = 2.2;
  gen->add_option("--task", gen_task, "sequence|dense")->check(CLI::IsMember({"sequence", "dense"}));
  gen->add_option("--out", gen_out, "output CSV path")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--vocab", gen_vocab, "vocabulary size (sequence)");
  gen->add_option("--samples", gen_samples, "number of samples");
  gen->add_option("--classes", gen_classes, "number of classes");
  gen->add_option("--avg-length", gen_avg_length, "average sequence length");
  gen->add_option("--signal", gen_signal, "label signal strength in [0,1]");
  gen->add_option("--input-dim", gen_input_dim, "input dimensionality (dense)");
  gen->add_option("--margin", gen_margin, "class separation in noise units (dense)");

  // ---- train-embedding ----
  auto* temb = app.add_subcommand("train-embedding", "train an embedding matrix from a corpus");
  std::string temb_data, temb_out, temb_precision = "f64";
  int temb_dim = 100, temb_window = 5;
  std::uint64_t temb_seed = 1;
  temb->add_option("--data", temb_data, "corpus CSV")->required();
  temb->add_option("--dim", temb_dim, "embedding dimensionality");
  temb->add_option("--window", temb_window, "co-occurrence window");
  temb->add_option("--seed", temb_seed, "training seed");
  temb->add_option("--precision", temb_precision, "f32|f64");
  temb->add_option("--out", temb_out, "output EMB1 path")->required();

  // ---- train-baseline ----
  auto* tb = app.add_subcommand("train-baseline", "train the developer-side baseline system");
  std::string tb_task = "embedding", tb_data, tb_embedding, tb_host = "lr", tb_out;
  std::string tb_out_extractor, tb_out_classifier, tb_arch = "256,96";
  int tb_epochs = 40, tb_blocks = 0;
  double tb_lr = 0.3, tb_gamma = 1.0;
  std::uint64_t tb_seed = 1;
  tb->add_option("--task", tb_task, "embedding|nn")->check(CLI::IsMember({"embedding", "nn"}));
  tb->add_option("--data", tb_data, "training CSV")->required();
  tb->add_option("--embedding", tb_embedding, "EMB1 feature extractor (embedding task)");
  tb->add_option("--host", tb_host, "lr|svm|mlp|resmlp");
  tb->add_option("--residual-blocks", tb_blocks, "residual blocks for resmlp");
  tb->add_option("--epochs", tb_epochs, "training epochs");
  tb->add_option("--lr", tb_lr, "learning rate");
  tb->add_option("--gamma", tb_gamma, "vectorizer decay");
  tb->add_option("--seed", tb_seed, "training seed");
  tb->add_option("--arch", tb_arch, "extractor layer widths, comma separated (nn task)");
  tb->add_option("--out", tb_out, "output classifier path (embedding task)");
  tb->add_option("--out-extractor", tb_out_extractor, "output extractor path (nn task)");
  tb->add_option("--out-classifier", tb_out_classifier, "output classifier path (nn task)");

  // ---- craft ----
  auto* craft = app.add_subcommand("craft", "craft a logic-bomb perturbation");
  std::string craft_kind, craft_targets, craft_refs, craft_embedding, craft_extractor, craft_out;
  double craft_lambda = 0.12, craft_delta = 0.3, craft_epsilon = 2e-3, craft_alpha = 0.75;
  double craft_gamma = 1.0, craft_stop_margin = 0.2, craft_surrogate_lr = 0.5;
  int craft_columns = 20, craft_iters = 400, craft_kappa = 20, craft_rounds = 50;
  int craft_surrogate_epochs = 40;
  std::uint64_t craft_seed = 1;
  craft->add_option("--kind", craft_kind, "embedding|nn")
      ->required()
      ->check(CLI::IsMember({"embedding", "nn"}));
  craft->add_option("--targets", craft_targets, "targets CSV (labels are the desired classes)")
      ->required();
  craft->add_option("--refs", craft_refs, "reference set CSV")->required();
  craft->add_option("--embedding", craft_embedding, "EMB1 model (embedding kind)");
  craft->add_option("--extractor", craft_extractor, "DNN1 extractor (nn kind)");
  craft->add_option("--out", craft_out, "output bundle directory")->required();
  craft->add_option("--lambda", craft_lambda, "regularization weight");
  craft->add_option("--delta", craft_delta, "per-reference norm cap");
  craft->add_option("--columns", craft_columns, "perturbed column budget");
  craft->add_option("--iters", craft_iters, "max solver iterations");
  craft->add_option("--epsilon", craft_epsilon, "per-update amplitude");
  craft->add_option("--alpha", craft_alpha, "std-deviation multiple");
  craft->add_option("--kappa", craft_kappa, "perturbations per round");
  craft->add_option("--rounds", craft_rounds, "max outer rounds");
  craft->add_option("--stop-margin", craft_stop_margin, "early-stop confidence margin");
  craft->add_option("--surrogate-epochs", craft_surrogate_epochs, "surrogate training epochs");
  craft->add_option("--surrogate-lr", craft_surrogate_lr, "surrogate learning rate");
  craft->add_option("--gamma", craft_gamma, "vectorizer decay");
  craft->add_option("--seed", craft_seed, "crafting seed");

  // ---- evaluate ----
  auto* eval_cmd = app.add_subcommand("evaluate", "run a seeded multi-trial experiment");
  std::string eval_config, eval_out = "eval_out";
  std::vector<std::string> eval_sets;
  std::uint64_t eval_seed = 1;
  int eval_workers = 1, eval_trials = -1;
  eval_cmd->add_option("--config", eval_config, "experiment config file");
  eval_cmd->add_option("--out", eval_out, "output directory");
  eval_cmd->add_option("--seed", eval_seed, "master seed");
  eval_cmd->add_option("--workers", eval_workers, "trial worker threads");
  eval_cmd->add_option("--trials", eval_trials, "trial count override");
  eval_cmd->add_option("--set", eval_sets, "extra key=value overrides")->take_all();

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep from a plan file");
  std::string sweep_plan, sweep_out = "sweep_out";
  std::vector<std::string> sweep_sets;
  std::uint64_t sweep_seed = 1;
  int sweep_workers = 1;
  sweep_cmd->add_option("--plan", sweep_plan, "plan file with sweep.<key> axes")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory");
  sweep_cmd->add_option("--seed", sweep_seed, "master seed");
  sweep_cmd->add_option("--workers", sweep_workers, "trial worker threads");
  sweep_cmd->add_option("--set", sweep_sets, "extra key=value overrides")->take_all();

  // ---- defend ----
  auto* defend = app.add_subcommand("defend", "inject uniform noise into a model file");
  std::string defend_model, defend_out;
  double defend_noise = 0.0;
  std::uint64_t defend_seed = 1;
  defend->add_option("--model", defend_model, "EMB1 or DNN1 model")->required();
  defend->add_option("--noise", defend_noise, "noise amplitude rho")->required();
  defend->add_option("--seed", defend_seed, "noise seed");
  defend->add_option("--out", defend_out, "output model path")->required();

  // ---- vet ----
  auto* vet = app.add_subcommand("vet", "anomaly-vet a feature extractor against probes");
  std::string vet_model, vet_probes, vet_out;
  int vet_k = 10;
  double vet_threshold = 3.0, vet_gamma = 1.0;
  vet->add_option("--model", vet_model, "EMB1 or DNN1 model")->required();
  vet->add_option("--probes", vet_probes, "probe dataset CSV")->required();
  vet->add_option("--k", vet_k, "neighbour count");
  vet->add_option("--threshold", vet_threshold, "suspicion threshold");
  vet->add_option("--gamma", vet_gamma, "vectorizer decay (embedding probes)");
  vet->add_option("--out", vet_out, "output JSON report")->required();

  // ---- audit ----
  auto* audit_cmd = app.add_subcommand("audit", "diff two same-architecture models");
  std::string audit_a, audit_b, audit_out;
  double audit_tau = 0.0;
  audit_cmd->add_option("--a", audit_a, "first model")->required();
  audit_cmd->add_option("--b", audit_b, "second model")->required();
  audit_cmd->add_option("--tau", audit_tau, "change tolerance");
  audit_cmd->add_option("--out", audit_out, "per-layer histogram CSV");

  // ---- hash ----
  auto* hash_cmd = app.add_subcommand("hash", "print a content checksum of a model file");
  std::string hash_path;
  hash_cmd->add_option("file", hash_path, "model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) {
      RngStream rng(gen_seed);
      LabeledDataset d =
          gen_task == "sequence"
              ? generate_sequence_task(gen_vocab, gen_samples, gen_avg_length, gen_signal,
                                       gen_classes, rng)
              : generate_dense_task(gen_input_dim, gen_samples, gen_classes, gen_margin, rng);
      atomic_write_file(gen_out, [&](std::ostream& os) { write_csv(d, os); });
      std::cout << "wrote " << gen_out << " (" << d.size() << " samples)\n";
    } else if (*temb) {
      LabeledDataset corpus = read_csv_file(temb_data);
      RngStream rng(temb_seed);
      EmbeddingMatrix m = train_embedding(corpus, temb_dim, rng, temb_window);
      atomic_write_file(temb_out,
                        [&](std::ostream& os) { save_emb1(m, os, parse_precision(temb_precision)); });
      std::cout << "wrote " << temb_out << " (d=" << m.dim() << " vocab=" << m.vocab() << ")\n";
    } else if (*tb) {
      LabeledDataset data = read_csv_file(tb_data);
      RngStream rng(tb_seed);
      HostHyper hyper;
      hyper.epochs = tb_epochs;
      hyper.lr = tb_lr;
      hyper.residual_blocks = tb_blocks;
      if (tb_task == "embedding") {
        if (tb_embedding.empty() || tb_out.empty())
          throw ParameterError("train-baseline --task embedding needs --embedding and --out");
        EmbeddingMatrix m = load_emb1_file(tb_embedding);
        VectorizerConfig vc{tb_gamma};
        std::vector<Vector> feats;
        std::vector<int> labels;
        for (const auto& s : data.sequences) {
          feats.push_back(extract(m, vectorize(s, vc, m.vocab())));
          labels.push_back(s.label);
        }
        HostClassifier host =
            train_host(parse_host_kind(tb_host), feats, labels, data.n_classes, hyper, rng);
        save_host(host, tb_out);
        std::cout << "wrote " << tb_out << " (train accuracy " << fmt(host.train_accuracy) << ")\n";
      } else {
        if (tb_out_extractor.empty() || tb_out_classifier.empty())
          throw ParameterError(
              "train-baseline --task nn needs --out-extractor and --out-classifier");
        std::vector<int> arch;
        {
          std::istringstream ss(tb_arch);
          std::string cell;
          while (std::getline(ss, cell, ',')) arch.push_back(std::stoi(cell));
        }
        DnnExtractor g0 = make_extractor(data.input_dim, arch, rng);
        SurrogateClassifier f0;
        f0.fc = make_layer(g0.feature_dim(), data.n_classes, false, rng);
        auto [g, f] = full_tune(std::move(g0), std::move(f0), data, tb_epochs, tb_lr, rng);
        save_dnn1_file(g.layers, tb_out_extractor);
        save_host(host_from_fc(f), tb_out_classifier);
        std::cout << "wrote " << tb_out_extractor << " and " << tb_out_classifier << "\n";
      }
    } else if (*craft) {
      std::filesystem::create_directories(craft_out);
      LabeledDataset refs = read_csv_file(craft_refs);
      if (craft_kind == "embedding") {
        if (craft_embedding.empty()) throw ParameterError("craft --kind embedding needs --embedding");
        EmbeddingMatrix m = load_emb1_file(craft_embedding);
        auto targets = load_embedding_targets(craft_targets, m.vocab(), craft_gamma);
        std::vector<SparseInputVector> ref_inputs;
        std::vector<int> ref_labels;
        VectorizerConfig vc{craft_gamma};
        for (const auto& s : refs.sequences) {
          ref_inputs.push_back(vectorize(s, vc, m.vocab()));
          ref_labels.push_back(s.label);
        }
        EmbeddingAttackConfig cfg;
        cfg.lambda = craft_lambda;
        cfg.delta = craft_delta;
        cfg.n_columns = craft_columns;
        cfg.max_iters = craft_iters;
        EmbeddingCraftResult result =
            craft_embedding_bomb(m, targets, ref_inputs, ref_labels, refs.n_classes, cfg);
        EmbeddingMatrix e_as_model{result.e};
        atomic_write_file(craft_out + "/E.emb1",
                          [&](std::ostream& os) { save_emb1(e_as_model, os); });
        atomic_write_file(craft_out + "/m_hat.emb1",
                          [&](std::ostream& os) { save_emb1(result.m_hat, os); });
        atomic_write_file(craft_out + "/trace.csv",
                          [&](std::ostream& os) { write_craft_trace_csv(result, os); });
        atomic_write_file(craft_out + "/summary.json", [&](std::ostream& os) {
          os << "{\n  \"columns\": [";
          for (std::size_t i = 0; i < result.columns.size(); ++i)
            os << (i ? ", " : "") << result.columns[i];
          os << "],\n  \"frobE\": " << fmt(result.frob_e)
             << ",\n  \"linfE\": " << fmt(result.linf_e)
             << ",\n  \"maxConstraint\": " << fmt(result.max_constraint)
             << ",\n  \"iterations\": " << result.trace.size() << ",\n  \"convergenceWarning\": "
             << (result.convergence_warning ? "true" : "false") << "\n}\n";
        });
        std::cout << "wrote bundle to " << craft_out << " (linfE=" << fmt(result.linf_e)
                  << ", maxConstraint=" << fmt(result.max_constraint) << ")\n";
      } else {
        if (craft_extractor.empty()) throw ParameterError("craft --kind nn needs --extractor");
        DnnExtractor g;
        g.layers = load_dnn1_file(craft_extractor);
        LabeledDataset targets = read_csv_file(craft_targets);
        if (targets.kind != TaskKind::dense)
          throw InputError("craft --kind nn expects a dense targets file");
        std::vector<NnBombTarget> bomb;
        for (const auto& s : targets.dense) bomb.push_back({s.values, s.label});
        RngStream rng(craft_seed);
        SurrogateClassifier f_hat =
            train_surrogate(g, refs, craft_surrogate_epochs, craft_surrogate_lr, rng);
        NnAttackConfig cfg;
        cfg.epsilon = craft_epsilon;
        cfg.alpha = craft_alpha;
        cfg.kappa = craft_kappa;
        cfg.max_rounds = craft_rounds;
        cfg.early_stop_margin = craft_stop_margin;
        NnCraftResult result = craft_nn_bomb(g, bomb, f_hat, cfg);
        atomic_write_file(craft_out + "/g_hat.dnn1",
                          [&](std::ostream& os) { save_dnn1(result.g_hat.layers, os); });
        atomic_write_file(craft_out + "/perturb_log.csv",
                          [&](std::ostream& os) { write_perturb_log_csv(result, os); });
        double rate = parameter_perturbation_rate_permille(g, result.g_hat);
        AuditStats audit = diff_audit(g, result.g_hat);
        atomic_write_file(craft_out + "/summary.json", [&](std::ostream& os) {
          os << "{\n  \"rounds\": " << result.total_rounds
             << ",\n  \"perturbed\": " << result.log.size()
             << ",\n  \"perturbationPermille\": " << fmt(rate)
             << ",\n  \"linf\": " << fmt(audit.linf) << ",\n  \"earlyStopped\": "
             << (result.early_stopped ? "true" : "false")
             << ",\n  \"emptyPool\": " << (result.empty_pool ? "true" : "false") << "\n}\n";
        });
        std::cout << "wrote bundle to " << craft_out << " (perturbed " << result.log.size()
                  << " params, " << fmt(rate) << " permille)\n";
      }
    } else if (*eval_cmd) {
      KeyValueConfig cfg = resolve_config(eval_config, eval_sets);
      if (eval_trials >= 0) cfg.set("trials", std::to_string(eval_trials));
      return run_experiment(cfg, eval_out, eval_seed, eval_workers);
    } else if (*sweep_cmd) {
      KeyValueConfig cfg = resolve_config(sweep_plan, sweep_sets);
      return run_experiment(cfg, sweep_out, sweep_seed, sweep_workers);
    } else if (*defend) {
      RngStream rng(defend_seed);
      std::string magic = sniff_model_magic(defend_model);
      if (magic == "EMB1") {
        EmbeddingMatrix noisy = noise_inject(load_emb1_file(defend_model), defend_noise, rng);
        atomic_write_file(defend_out, [&](std::ostream& os) { save_emb1(noisy, os); });
      } else if (magic == "DNN1") {
        DnnExtractor g;
        g.layers = load_dnn1_file(defend_model);
        DnnExtractor noisy = noise_inject(g, defend_noise, rng);
        atomic_write_file(defend_out, [&](std::ostream& os) { save_dnn1(noisy.layers, os); });
      } else {
        throw FormatError("defend: unrecognized model format");
      }
      std::cout << "wrote " << defend_out << "\n";
    } else if (*vet) {
      LabeledDataset probes = read_csv_file(vet_probes);
      std::string magic = sniff_model_magic(vet_model);
      VetReport report;
      if (magic == "EMB1") {
        EmbeddingMatrix m = load_emb1_file(vet_model);
        if (probes.kind != TaskKind::sequence)
          throw InputError("vet: embedding model needs sequence probes");
        VectorizerConfig vc{vet_gamma};
        std::vector<Vector> inputs;
        for (const auto& s : probes.sequences)
          inputs.push_back(vectorize(s, vc, m.vocab()).to_dense());
        report = vet_anomaly([&](const Vector& x) { return matvec(m.m, x); }, inputs, vet_k,
                             vet_threshold);
      } else if (magic == "DNN1") {
        DnnExtractor g;
        g.layers = load_dnn1_file(vet_model);
        if (probes.kind != TaskKind::dense) throw InputError("vet: nn model needs dense probes");
        std::vector<Vector> inputs;
        for (const auto& s : probes.dense) inputs.push_back(s.values);
        report = vet_anomaly([&](const Vector& x) { return forward(g, x); }, inputs, vet_k,
                             vet_threshold);
      } else {
        throw FormatError("vet: unrecognized model format");
      }
      atomic_write_file(vet_out, [&](std::ostream& os) { write_vet_report_json(report, os); });
      std::cout << "wrote " << vet_out << " (" << report.flagged.size() << " flagged of "
                << report.scores.size() << ")\n";
    } else if (*audit_cmd) {
      std::string magic_a = sniff_model_magic(audit_a);
      std::string magic_b = sniff_model_magic(audit_b);
      if (magic_a != magic_b) throw FormatError("audit: model formats differ");
      AuditStats st;
      if (magic_a == "EMB1") {
        st = diff_audit(load_emb1_file(audit_a), load_emb1_file(audit_b), audit_tau);
      } else if (magic_a == "DNN1") {
        DnnExtractor a, b;
        a.layers = load_dnn1_file(audit_a);
        b.layers = load_dnn1_file(audit_b);
        st = diff_audit(a, b, audit_tau);
      } else {
        throw FormatError("audit: unrecognized model format");
      }
      std::cout << "linf=" << fmt(st.linf) << " frobenius=" << fmt(st.frob)
                << " changed=" << st.changed << "/" << st.total
                << " precision_explainable=" << (st.precision_explainable ? "yes" : "no") << "\n";
      if (!audit_out.empty())
        atomic_write_file(audit_out,
                          [&](std::ostream& os) { write_audit_histogram_csv(st, os); });
    } else if (*hash_cmd) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%016llx",
                    static_cast<unsigned long long>(hash_file(hash_path)));
      std::cout << buf << "  " << hash_path << "\n";
    }
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
