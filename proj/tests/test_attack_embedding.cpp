#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "bombworks/attack_embedding.hpp"
#include "bombworks/dataset.hpp"

using namespace bombworks;

namespace {

EmbeddingMatrix embedding_from(std::initializer_list<std::initializer_list<double>> rows) {
  EmbeddingMatrix emb;
  std::size_t r = rows.size();
  std::size_t c = rows.begin()->size();
  emb.m = Matrix(r, c, 0.0);
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (double v : row) emb.m(i, j++) = v;
    ++i;
  }
  return emb;
}

SparseInputVector sparse(int dim, std::initializer_list<std::pair<int, double>> entries) {
  SparseInputVector v;
  v.dim = dim;
  for (const auto& e : entries) v.entries.push_back(e);
  return v;
}

}  // namespace

TEST_CASE("membership: proximity dominance and symmetry") {
  // Identity-ish embedding over 2 tokens, feature dim 2.
  EmbeddingMatrix m = embedding_from({{1.0, 0.0}, {0.0, 1.0}});
  ClassCentroids c;
  c.mean = {Vector{1.0, 0.0}, Vector{0.0, 1.0}};  // class 0 at token 0, class 1 at token 1

  SparseInputVector at_plus = sparse(2, {{0, 1.0}});
  CHECK(membership(at_plus, 0, m, c) > 0.5);

  SparseInputVector mid = sparse(2, {{0, 0.5}, {1, 0.5}});
  CHECK(membership(mid, 0, m, c) == Catch::Approx(0.5).margin(1e-12));
  CHECK(membership(mid, 1, m, c) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("membership matches the direct formula on a 3-class instance") {
  RngStream rng(7);
  EmbeddingMatrix m;
  m.m = Matrix(4, 10);
  for (double& x : m.m.data) x = rng.normal();
  std::vector<Vector> cent(3, Vector(10, 0.0));
  for (auto& v : cent)
    for (double& x : v) x = rng.uniform();
  ClassCentroids c{cent};
  SparseInputVector x = sparse(10, {{1, 0.3}, {4, 0.4}, {9, 0.3}});

  Vector mu = membership_all(x, m, c);
  // Direct evaluation of the softmax over negative distances.
  Vector fx = extract(m, x);
  Vector expo(3);
  for (int y = 0; y < 3; ++y)
    expo[static_cast<std::size_t>(y)] =
        std::exp(-norm(sub(fx, matvec(m.m, cent[static_cast<std::size_t>(y)]))));
  double z = expo[0] + expo[1] + expo[2];
  double sum = 0.0;
  for (int y = 0; y < 3; ++y) {
    CHECK(std::abs(mu[static_cast<std::size_t>(y)] - expo[static_cast<std::size_t>(y)] / z) < 1e-12);
    sum += mu[static_cast<std::size_t>(y)];
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("membership normalization over random perturbed embeddings") {
  RngStream rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    EmbeddingMatrix m;
    m.m = Matrix(3, 8);
    for (double& x : m.m.data) x = rng.normal();
    ClassCentroids c;
    c.mean.assign(2, Vector(8, 0.0));
    for (auto& v : c.mean)
      for (double& x : v) x = rng.uniform();
    SparseInputVector x = sparse(8, {{0, 0.5}, {5, 0.5}});
    Vector mu = membership_all(x, m, c);
    CHECK(std::abs(mu[0] + mu[1] - 1.0) < 1e-12);
  }
}

TEST_CASE("select_columns: zero column first, full budget, sort oracle") {
  EmbeddingMatrix m = embedding_from({{0.5, 0.0, 0.2}, {0.5, 0.0, 0.1}});
  std::vector<int> one = select_columns(m, 1);
  CHECK(one == std::vector<int>{1});

  std::vector<int> all = select_columns(m, 3);
  CHECK(all == std::vector<int>{0, 1, 2});

  RngStream rng(9);
  EmbeddingMatrix big;
  big.m = Matrix(6, 40);
  for (double& x : big.m.data) x = rng.normal();
  std::vector<int> got = select_columns(big, 20);
  // Brute-force: sort all norms.
  std::vector<std::pair<double, int>> norms;
  for (int i = 0; i < 40; ++i) norms.push_back({big.column_norm(i), i});
  std::sort(norms.begin(), norms.end());
  std::vector<int> expect;
  for (int k = 0; k < 20; ++k) expect.push_back(norms[static_cast<std::size_t>(k)].second);
  std::sort(expect.begin(), expect.end());
  CHECK(got == expect);

  CHECK_THROWS_AS(select_columns(big, 0), ParameterError);
  CHECK_THROWS_AS(select_columns(big, 41), ParameterError);
}

TEST_CASE("select_columns breaks ties by lowest index") {
  EmbeddingMatrix m = embedding_from({{0.3, 0.3, 0.3, 0.3}});
  CHECK(select_columns(m, 2) == std::vector<int>{0, 1});
}

TEST_CASE("huge lambda collapses the perturbation") {
  RngStream rng(11);
  EmbeddingMatrix m;
  m.m = Matrix(4, 12);
  for (double& x : m.m.data) x = rng.normal();
  std::vector<SparseInputVector> refs;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    SparseInputVector v = sparse(12, {});
    for (int nnz = 0; nnz < 4; ++nnz)
      v.entries.push_back({static_cast<int>(rng.uniform_index(12)), 0.25});
    std::sort(v.entries.begin(), v.entries.end());
    refs.push_back(v);
    labels.push_back(i % 2);
  }
  EmbeddingBombTarget target{refs[0], 1 - labels[0]};
  EmbeddingAttackConfig cfg;
  cfg.lambda = 1e6;
  cfg.delta = 0.5;
  cfg.n_columns = 4;
  cfg.max_iters = 120;
  EmbeddingCraftResult r = craft_embedding_bomb(m, {target}, refs, labels, 2, cfg);
  CHECK(r.frob_e < 1e-6);
}

TEST_CASE("sparsity and feasibility hold on random instances") {
  RngStream rng(12);
  EmbeddingMatrix m;
  m.m = Matrix(6, 30);
  for (double& x : m.m.data) x = rng.normal() * 0.4;
  std::vector<SparseInputVector> refs;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    SparseInputVector v;
    v.dim = 30;
    std::set<int> used;
    for (int nnz = 0; nnz < 6; ++nnz) used.insert(static_cast<int>(rng.uniform_index(30)));
    for (int tok : used) v.entries.push_back({tok, 1.0 / static_cast<double>(used.size())});
    refs.push_back(v);
    labels.push_back(i % 2);
  }
  EmbeddingAttackConfig cfg;
  cfg.lambda = 0.02;
  cfg.delta = 0.2;
  cfg.n_columns = 8;
  cfg.max_iters = 200;
  EmbeddingBombTarget target{refs[3], 1 - labels[3]};
  EmbeddingCraftResult r = craft_embedding_bomb(m, {target}, refs, labels, 2, cfg);

  // Columns outside the selected set are exactly zero.
  std::set<int> chosen(r.columns.begin(), r.columns.end());
  for (int c = 0; c < 30; ++c) {
    if (chosen.count(c)) continue;
    for (int row = 0; row < 6; ++row)
      CHECK(r.e(static_cast<std::size_t>(row), static_cast<std::size_t>(c)) == 0.0);
  }

  // Post-hoc feasibility, recomputed here from E rather than trusted.
  for (const auto& ref : refs) {
    Vector ex = matvec(r.e, ref.to_dense());
    CHECK(norm(ex) <= cfg.delta * (1.0 + 1e-6));
  }
  CHECK(r.max_constraint <= cfg.delta * (1.0 + 1e-6));

  // The crafted embedding moves the target toward the bomb class.
  std::vector<Vector> dense_refs;
  for (const auto& ref : refs) dense_refs.push_back(ref.to_dense());
  ClassCentroids cent = centroids(dense_refs, labels, 2);
  double before = membership(target.x, target.target_class, m, cent);
  double after = membership(target.x, target.target_class, r.m_hat, cent);
  CHECK(after > before);
}

TEST_CASE("solver matches a dense grid-search oracle on a toy instance") {
  // 2-token vocabulary, feature dim 2, so E has exactly 4 free entries.
  EmbeddingMatrix m = embedding_from({{0.6, -0.1}, {0.2, 0.4}});
  std::vector<SparseInputVector> refs = {
      sparse(2, {{0, 0.6}, {1, 0.4}}),
      sparse(2, {{0, 0.3}, {1, 0.7}}),
  };
  std::vector<int> labels = {0, 1};
  EmbeddingBombTarget target{sparse(2, {{0, 0.55}, {1, 0.45}}), 1};
  EmbeddingAttackConfig cfg;
  cfg.lambda = 0.05;
  cfg.delta = 0.3;
  cfg.n_columns = 2;
  cfg.max_iters = 600;
  cfg.plateau_window = 80;
  EmbeddingCraftResult r = craft_embedding_bomb(m, {target}, refs, labels, 2, cfg);

  std::vector<Vector> dense_refs = {refs[0].to_dense(), refs[1].to_dense()};
  ClassCentroids cent = centroids(dense_refs, labels, 2);
  auto objective = [&](const Matrix& e) {
    EmbeddingMatrix m_hat = apply_perturbation(m, e);
    Vector fx = extract(m_hat, target.x);
    double to_target = norm(sub(fx, matvec(m_hat.m, cent.mean[1])));
    double to_other = norm(sub(fx, matvec(m_hat.m, cent.mean[0])));
    return to_target - to_other + cfg.lambda * norm(e, Norm::frobenius);
  };
  auto feasible = [&](const Matrix& e) {
    for (const auto& ref : refs)
      if (norm(matvec(e, ref.to_dense())) > cfg.delta) return false;
    return true;
  };

  // Coarse-to-fine dense grid over the 4 entries.
  double best = objective(Matrix(2, 2, 0.0));
  Vector best_at{0.0, 0.0, 0.0, 0.0};
  double lo = -1.5, hi = 1.5, step = 0.125;
  for (int refine = 0; refine < 3; ++refine) {
    Vector center = best_at;
    for (double a = center[0] - (hi - lo) / 2; a <= center[0] + (hi - lo) / 2; a += step)
      for (double b = center[1] - (hi - lo) / 2; b <= center[1] + (hi - lo) / 2; b += step)
        for (double c = center[2] - (hi - lo) / 2; c <= center[2] + (hi - lo) / 2; c += step)
          for (double d = center[3] - (hi - lo) / 2; d <= center[3] + (hi - lo) / 2; d += step) {
            Matrix e(2, 2, 0.0);
            e.data = {a, b, c, d};
            if (!feasible(e)) continue;
            double val = objective(e);
            if (val < best) {
              best = val;
              best_at = {a, b, c, d};
            }
          }
    hi = step * 2;
    lo = -step * 2;
    step /= 5.0;
  }

  double solver_value = objective(r.e);
  CHECK(feasible(r.e));
  // Agreement within 2% of the oracle optimum's magnitude.
  CHECK(solver_value <= best + 0.02 * std::abs(best));
}

TEST_CASE("empty bomb and zero column budget are rejected") {
  EmbeddingMatrix m = embedding_from({{0.6, -0.1}, {0.2, 0.4}});
  std::vector<SparseInputVector> refs = {sparse(2, {{0, 1.0}}), sparse(2, {{1, 1.0}})};
  std::vector<int> labels = {0, 1};
  EmbeddingAttackConfig cfg;
  CHECK_THROWS_AS(craft_embedding_bomb(m, {}, refs, labels, 2, cfg), InputError);
  cfg.n_columns = 0;
  EmbeddingBombTarget t{refs[0], 1};
  CHECK_THROWS_AS(craft_embedding_bomb(m, {t}, refs, labels, 2, cfg), ParameterError);
}

TEST_CASE("multi-target crafting improves membership for every target") {
  RngStream rng(31);
  EmbeddingMatrix m;
  m.m = Matrix(5, 20);
  for (double& x : m.m.data) x = rng.normal() * 0.5;
  std::vector<SparseInputVector> refs;
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    SparseInputVector v;
    v.dim = 20;
    std::set<int> used;
    for (int nnz = 0; nnz < 5; ++nnz) used.insert(static_cast<int>(rng.uniform_index(20)));
    for (int tok : used) v.entries.push_back({tok, 1.0 / static_cast<double>(used.size())});
    refs.push_back(v);
    labels.push_back(i % 2);
  }
  std::vector<EmbeddingBombTarget> bomb = {{refs[0], 1 - labels[0]}, {refs[1], 1 - labels[1]}};
  EmbeddingAttackConfig cfg;
  cfg.lambda = 0.02;
  cfg.delta = 0.4;
  cfg.n_columns = 8;
  cfg.max_iters = 250;
  EmbeddingCraftResult r = craft_embedding_bomb(m, bomb, refs, labels, 2, cfg);

  std::vector<Vector> dense_refs;
  for (const auto& ref : refs) dense_refs.push_back(ref.to_dense());
  ClassCentroids cent = centroids(dense_refs, labels, 2);
  for (const auto& t : bomb) {
    double before = membership(t.x, t.target_class, m, cent);
    double after = membership(t.x, t.target_class, r.m_hat, cent);
    CHECK(after > before);
  }
}

TEST_CASE("objective trace is non-increasing after penalty stabilization") {
  RngStream rng(33);
  EmbeddingMatrix m;
  m.m = Matrix(4, 16);
  for (double& x : m.m.data) x = rng.normal() * 0.4;
  std::vector<SparseInputVector> refs;
  std::vector<int> labels;
  for (int i = 0; i < 25; ++i) {
    SparseInputVector v;
    v.dim = 16;
    std::set<int> used;
    for (int nnz = 0; nnz < 4; ++nnz) used.insert(static_cast<int>(rng.uniform_index(16)));
    for (int tok : used) v.entries.push_back({tok, 1.0 / static_cast<double>(used.size())});
    refs.push_back(v);
    labels.push_back(i % 2);
  }
  EmbeddingAttackConfig cfg;
  cfg.lambda = 0.03;
  cfg.delta = 0.25;
  cfg.n_columns = 6;
  cfg.max_iters = 200;
  EmbeddingBombTarget target{refs[2], 1 - labels[2]};
  EmbeddingCraftResult r = craft_embedding_bomb(m, {target}, refs, labels, 2, cfg);

  // Increases can only come from penalty ramps, which happen at most every
  // penalty_interval iterations; between them the line search descends.
  REQUIRE(r.trace.size() >= 2);
  int increases = 0;
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    if (r.trace[i].objective > r.trace[i - 1].objective + 1e-9) ++increases;
  CHECK(increases <= cfg.max_iters / cfg.penalty_interval);
  // After the final increase the trace is non-increasing.
  std::size_t last_ramp = 1;
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    if (r.trace[i].objective > r.trace[i - 1].objective + 1e-9) last_ramp = i + 1;
  for (std::size_t i = last_ramp; i < r.trace.size(); ++i)
    CHECK(r.trace[i].objective <= r.trace[i - 1].objective + 1e-9);
}
