#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "rgae/errors.hpp"
#include "rgae/losses.hpp"
#include "rgae/model.hpp"
#include "rgae/numdiff.hpp"
#include "rgae/training.hpp"
#include "support.hpp"

using namespace rgae;

namespace {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

DenseMatrix relu(DenseMatrix m) {
  for (double& v : m.values()) v = std::max(v, 0.0);
  return m;
}

// D~^-1/2 (A + I) D~^-1/2 written out densely.
DenseMatrix dense_propagation(std::size_t n, const std::vector<Edge>& edges) {
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  for (const Edge& e : edges) a(e.u, e.v) = a(e.v, e.u) = 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  return a;
}

double plain_bce_oracle(const DenseMatrix& z, const SparseMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.rows(); ++j) {
      const double l = dot(z.row(i), z.row(j));
      const double p = 1.0 / (1.0 + std::exp(-l));
      const double t = a.at(i, j);
      s -= t * std::log(p) + (1 - t) * std::log(1 - p);
    }
  return s;
}

AttributedGraph random_graph(Rng& rng, std::size_t n, std::size_t j, double p = 0.4) {
  return AttributedGraph(n, test::random_edges(rng, n, p), test::random_matrix(rng, n, j), std::nullopt, 0);
}

}  // namespace

TEST_CASE("arch names") {
  for (Arch a : {Arch::gae, Arch::vgae, Arch::dgae}) CHECK(parse_arch(to_string(a)) == a);
  CHECK_THROWS_AS(parse_arch("gmm"), ConfigError);
}

TEST_CASE("model shapes follow the 32 -> 16 encoder") {
  GaeModel g(Arch::gae, 7, 0);
  REQUIRE(g.weights().size() == 2);
  CHECK(g.weights()[0].rows() == 7);
  CHECK(g.weights()[0].cols() == 32);
  CHECK(g.weights()[1].rows() == 32);
  CHECK(g.weights()[1].cols() == 16);
  GaeModel v(Arch::vgae, 7, 0);
  CHECK(v.weights().size() == 3);
  CHECK(v.weight_names() == std::vector<std::string>{"W1", "W_mu", "W_logvar"});
  // Glorot uniform bound
  const double bound = std::sqrt(6.0 / (7 + 32));
  for (double w : g.weights()[0].values()) CHECK(std::abs(w) <= bound);
}

TEST_CASE("encode: zero weights, single node, dense oracle") {
  Rng rng(1);
  const AttributedGraph g = random_graph(rng, 5, 3);
  const EncoderInput in = EncoderInput::from_graph(g);

  GaeModel zero(Arch::gae, 3, 0, {}, 4, 2);
  zero.set_weights({DenseMatrix(3, 4), DenseMatrix(4, 2)});
  CHECK(zero.embed(in) == DenseMatrix(5, 2));

  const AttributedGraph single(1, {}, DenseMatrix::from_rows({{1.0, -2.0, 0.5}}), std::nullopt, 0);
  GaeModel m(Arch::gae, 3, 4, {}, 4, 2);
  const DenseMatrix expect = matmul(relu(matmul(single.features(), m.weights()[0])), m.weights()[1]);
  CHECK(max_abs_diff(m.embed(EncoderInput::from_graph(single)), expect) < 1e-15);

  for (std::uint64_t s = 0; s < 5; ++s) {
    GaeModel r(Arch::gae, 3, s, {}, 6, 4);
    const DenseMatrix a = dense_propagation(5, g.edges());
    const DenseMatrix oracle = matmul(a, matmul(relu(matmul(a, matmul(g.features(), r.weights()[0]))), r.weights()[1]));
    CHECK(max_abs_diff(r.embed(in), oracle) < 1e-12);
  }
}

TEST_CASE("vgae encode: mean in eval mode, sample in train mode") {
  Rng rng(2);
  const AttributedGraph g = random_graph(rng, 6, 3);
  const EncoderInput in = EncoderInput::from_graph(g);
  GaeModel v(Arch::vgae, 3, 9, {}, 4, 2);
  const EncoderCache ev = v.encode_eval(in);
  CHECK(ev.z == ev.mu);
  CHECK(v.embed(in) == ev.mu);
  const EncoderCache tr = v.encode(in, EncodeMode::train);
  REQUIRE(tr.eps.rows() == 6);
  for (std::size_t k = 0; k < tr.z.size(); ++k)
    CHECK(tr.z.values()[k] ==
          doctest::Approx(tr.mu.values()[k] + std::exp(0.5 * tr.logvar.values()[k]) * tr.eps.values()[k]));
  CHECK(v.encode(in, EncodeMode::train).eps != tr.eps);
}

TEST_CASE("reconstruction loss values") {
  Rng rng(3);
  const std::size_t n = 10;
  const SparseMatrix a = adjacency_from_edges(n, test::random_edges(rng, n, 0.3));
  CHECK(recon_loss(DenseMatrix(n, 3), a, BceWeighting::plain) == doctest::Approx(n * n * std::numbers::ln2));

  // all-ones target (including the diagonal) with large logits saturates to 0
  std::vector<Triplet> ones;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) ones.push_back({i, j, 1.0});
  CHECK(recon_loss(DenseMatrix(4, 2, 10.0), SparseMatrix::from_triplets(4, 4, ones), BceWeighting::plain) < 1e-40);

  const DenseMatrix z = test::random_matrix(rng, n, 3, 0.7);
  CHECK(recon_loss(z, a, BceWeighting::plain) == doctest::Approx(plain_bce_oracle(z, a)).epsilon(1e-12));

  // pos-weighted oracle
  const double p = a.sum();
  const double nn = static_cast<double>(n * n);
  const double pw = (nn - p) / p;
  const double norm = nn / (2.0 * (nn - p));
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double q = 1.0 / (1.0 + std::exp(-dot(z.row(i), z.row(j))));
      const double t = a.at(i, j);
      s -= pw * t * std::log(q) + (1 - t) * std::log(1 - q);
    }
  CHECK(recon_loss(z, a, BceWeighting::pos_weighted) == doctest::Approx(norm * s / nn).epsilon(1e-12));
}

TEST_CASE("plain BCE splits into Laplacian and remainder terms") {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(29);
    const DenseMatrix z = test::random_matrix(rng, n, 1 + rng.below(8), 0.6);
    const SparseMatrix a = adjacency_from_edges(n, test::random_edges(rng, n, rng.uniform()));
    const double bce = plain_bce_oracle(z, a);
    CHECK(std::abs(bce - laplacian_quadratic(z, a) - regularizer_R(z, a)) / (1 + std::abs(bce)) < 1e-8);
  }
}

TEST_CASE("Laplacian and remainder building blocks") {
  Rng rng(5);
  const std::size_t n = 7;
  const SparseMatrix a = adjacency_from_edges(n, test::random_edges(rng, n, 0.5));
  CHECK(laplacian_quadratic(DenseMatrix(n, 2), a) == 0.0);
  CHECK(regularizer_R(DenseMatrix(n, 2), a) == doctest::Approx(n * n * std::numbers::ln2));
  const DenseMatrix z = test::random_matrix(rng, n, 2);
  CHECK(laplacian_quadratic(z, SparseMatrix(n, n)) == 0.0);
  double sp = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sp += std::log1p(std::exp(dot(z.row(i), z.row(j))));
  CHECK(regularizer_R(z, SparseMatrix(n, n)) == doctest::Approx(sp).epsilon(1e-13));
}

TEST_CASE("reconstruction gradient") {
  Rng rng(6);
  CHECK(recon_grad_z(DenseMatrix(5, 3), adjacency_from_edges(5, {{0, 1}, {2, 3}})) == DenseMatrix(5, 3));
  const DenseMatrix z1 = test::random_matrix(rng, 1, 3);
  const SparseMatrix a1(1, 1);
  auto f1 = [&](const DenseMatrix& x) { return recon_loss(x, a1, BceWeighting::plain); };
  CHECK(relative_error(recon_grad_z(z1, a1), finite_diff_grad(f1, z1)) < 1e-6);
  const double s = 1.0 / (1.0 + std::exp(-dot(z1.row(0), z1.row(0))));
  CHECK(relative_error(recon_grad_z(z1, a1), (2.0 * s) * z1) < 1e-14);

  for (int t = 0; t < 10; ++t) {
    const DenseMatrix z = test::random_matrix(rng, 8, 3, 0.6);
    const SparseMatrix a = adjacency_from_edges(8, test::random_edges(rng, 8, 0.4));
    auto f = [&](const DenseMatrix& x) { return recon_loss(x, a, BceWeighting::plain); };
    CHECK(relative_error(recon_grad_z(z, a), finite_diff_grad(f, z)) < 1e-5);
    CHECK(relative_error(recon_loss_and_grad(z, a, BceWeighting::plain).grad_z, recon_grad_z(z, a)) < 1e-13);
  }
}

TEST_CASE("embedded k-means loss and gradient") {
  const DenseMatrix same(4, 2, 1.5);
  const SparseMatrix g = build_cluster_graph({0, 1, 0, 1}, 2);
  CHECK(kmeans_embed_loss(same, g) == 0.0);
  CHECK(kmeans_grad_z(same, g) == DenseMatrix(4, 2));

  const DenseMatrix pair = DenseMatrix::from_rows({{0}, {2}});
  CHECK(kmeans_embed_loss(pair, build_cluster_graph({0, 0}, 1)) == doctest::Approx(2.0));
  CHECK(kmeans_centroid_term(pair, {0, 0}, 1).loss == doctest::Approx(2.0));

  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix z = test::random_matrix(rng, 10, 3);
    const Labels l = test::random_labels(rng, 10, 3);
    // centroid oracle
    double direct = 0.0;
    for (int c = 0; c < 3; ++c) {
      std::vector<double> mu(3, 0.0);
      double cnt = 0;
      for (std::size_t i = 0; i < 10; ++i)
        if (l[i] == c) {
          cnt += 1;
          for (std::size_t k = 0; k < 3; ++k) mu[k] += z(i, k);
        }
      if (cnt == 0) continue;
      for (double& v : mu) v /= cnt;
      for (std::size_t i = 0; i < 10; ++i)
        if (l[i] == c) direct += squared_distance(z.row(i), mu);
    }
    const SparseMatrix a = build_cluster_graph(l, 3);
    CHECK(std::abs(kmeans_embed_loss(z, a) - direct) <= 1e-10 * (1 + direct));
    CHECK(relative_error(kmeans_grad_z(z, a), kmeans_centroid_term(z, l, 3).grad_z) < 1e-12);
    auto f = [&](const DenseMatrix& x) { return kmeans_embed_loss(x, a); };
    CHECK(relative_error(kmeans_grad_z(z, a), finite_diff_grad(f, z)) < 1e-5);
  }
}

TEST_CASE("general Laplacian gradient on a non-symmetric weight matrix") {
  Rng rng(8);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (rng.uniform() < 0.4) t.push_back({i, j, rng.uniform()});
  const SparseMatrix a = SparseMatrix::from_triplets(6, 6, t);
  const DenseMatrix z = test::random_matrix(rng, 6, 2);
  auto f = [&](const DenseMatrix& x) { return laplacian_quadratic(x, a); };
  CHECK(relative_error(laplacian_grad(z, a), finite_diff_grad(f, z)) < 1e-6);
}

TEST_CASE("combined objective identity") {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(20);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(4, n));
    const DenseMatrix z = test::random_matrix(rng, n, 3, 0.5);
    const SparseMatrix a = adjacency_from_edges(n, test::random_edges(rng, n, 0.3));
    const Labels l = test::random_labels(rng, n, k);
    const double gamma = rng.uniform(0.0, 2.0);
    const double lhs = kmeans_centroid_term(z, l, k).loss + gamma * plain_bce_oracle(z, a);
    const double rhs = laplacian_quadratic(z, add(build_cluster_graph(l, k), a, gamma)) + gamma * regularizer_R(z, a);
    CHECK(std::abs(lhs - rhs) / (1 + std::abs(lhs)) < 1e-8);
  }
}

TEST_CASE("DGAE KL loss") {
  // P one-hot equal to Q: no loss
  const DenseMatrix q = DenseMatrix::from_rows({{1, 0}});
  CHECK(kl_divergence(q, q) == 0.0);

  Rng rng(10);
  const DenseMatrix z = test::random_matrix(rng, 6, 1);
  const DenseMatrix c = test::random_matrix(rng, 2, 1);
  const SoftAssignment p = student_t_assign(z, c);
  const DenseMatrix h = hard_target(p).matrix;
  double collapse = 0.0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      if (h(i, j) == 1.0) collapse -= std::log(p.matrix(i, j));
  CHECK(dgae_clus_loss(z, c, h).loss == doctest::Approx(collapse).epsilon(1e-12));
  CHECK(kl_divergence(h, p.matrix) == doctest::Approx(collapse).epsilon(1e-12));

  for (int t = 0; t < 10; ++t) {
    const DenseMatrix zz = test::random_matrix(rng, 6, 3);
    const DenseMatrix cc = test::random_matrix(rng, 2, 3);
    const DenseMatrix qq = hard_target(student_t_assign(zz, cc)).matrix;
    const KlTerm kl = dgae_clus_loss(zz, cc, qq);
    CHECK(relative_error(kl.grad_z, finite_diff_grad([&](const DenseMatrix& x) { return dgae_clus_loss(x, cc, qq).loss; },
                                                     zz)) < 1e-5);
    CHECK(relative_error(kl.grad_centers,
                         finite_diff_grad([&](const DenseMatrix& x) { return dgae_clus_loss(zz, x, qq).loss; }, cc)) <
          1e-5);
    // masking rows drops their terms
    std::vector<bool> mask(6, true);
    mask[2] = false;
    const KlTerm masked = dgae_clus_loss(zz, cc, qq, &mask);
    for (std::size_t k = 0; k < 3; ++k) CHECK(masked.grad_z(2, k) == 0.0);
    CHECK(masked.loss < kl.loss + 1e-15);
  }

  // a vanishing p under a one-hot q is clamped and flagged
  const KlTerm far = dgae_clus_loss(DenseMatrix::from_rows({{0.0}}), DenseMatrix::from_rows({{0.0}, {1e9}}),
                                    DenseMatrix::from_rows({{0, 1}}));
  CHECK(far.clamped);
  CHECK(std::isfinite(far.loss));
}

TEST_CASE("VGAE prior KL") {
  const GaussianKl zero = gaussian_kl_prior(DenseMatrix(3, 2), DenseMatrix(3, 2));
  CHECK(zero.kl_prior == 0.0);
  const GaussianKl e = gaussian_kl_prior(DenseMatrix(1, 1), DenseMatrix(1, 1, 1.0));
  CHECK(e.kl_prior == doctest::Approx(0.5 * (std::exp(1.0) - 1.0 - 1.0)));

  Rng rng(11);
  const DenseMatrix mu = test::random_matrix(rng, 5, 3);
  const DenseMatrix lv = test::random_matrix(rng, 5, 3, 0.5);
  double oracle = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const double m = mu.values()[k], l = lv.values()[k];
    oracle += 0.5 * (std::exp(l) + m * m - 1.0 - l);
  }
  const GaussianKl g = gaussian_kl_prior(mu, lv);
  CHECK(std::abs(g.kl_prior - oracle / 5.0) < 1e-12);
  CHECK(relative_error(g.grad_mu, finite_diff_grad([&](const DenseMatrix& x) { return gaussian_kl_prior(x, lv).kl_prior; },
                                                   mu)) < 1e-6);
  CHECK(relative_error(g.grad_logvar,
                       finite_diff_grad([&](const DenseMatrix& x) { return gaussian_kl_prior(mu, x).kl_prior; }, lv)) <
        1e-6);

  const SparseMatrix a = adjacency_from_edges(5, {{0, 1}, {1, 2}});
  const VgaeTerms terms = vgae_loss_terms(mu, mu, lv, a);
  CHECK(terms.recon == doctest::Approx(recon_loss(mu, a, BceWeighting::pos_weighted)));
  CHECK(terms.kl_prior == doctest::Approx(g.kl_prior));
}

TEST_CASE("backprop_theta") {
  Rng rng(12);
  const AttributedGraph g = random_graph(rng, 6, 3);
  const EncoderInput in = EncoderInput::from_graph(g);

  GaeModel m(Arch::gae, 3, 1, {}, 4, 2);
  const EncoderCache cache = m.encode_eval(in);
  for (const DenseMatrix& part : m.backprop_theta(cache, {DenseMatrix(6, 2), {}, {}}).parts)
    CHECK(frobenius_norm(part) == 0.0);

  // scalar chain: one node, positive pre-activation, 1 x 1 weights
  const AttributedGraph one(1, {}, DenseMatrix::from_rows({{2.0}}), std::nullopt, 0);
  const EncoderInput in1 = EncoderInput::from_graph(one);
  GaeModel s(Arch::gae, 1, 0, {}, 1, 1);
  s.set_weights({DenseMatrix(1, 1, 0.5), DenseMatrix(1, 1, 3.0)});
  const ThetaGrad sg = s.backprop_theta(s.encode_eval(in1), {DenseMatrix(1, 1, 1.0), {}, {}});
  CHECK(sg.parts[0](0, 0) == doctest::Approx(2.0 * 3.0));  // dz/dw1 = x w2
  CHECK(sg.parts[1](0, 0) == doctest::Approx(2.0 * 0.5));  // dz/dw2 = x w1

  // full chain against finite differences on the plain reconstruction
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GaeModel r(Arch::gae, 3, seed, {}, 5, 3);
    const EncoderCache c = r.encode_eval(in);
    const DenseMatrix analytic(1, r.theta_size(), r.backprop_theta(c, {recon_grad_z(c.z, g.adjacency()), {}, {}}).flatten());
    const std::vector<double> th = r.flat_theta();
    auto f = [&](const DenseMatrix& x) {
      GaeModel cp = r;
      cp.set_flat_theta(x.values());
      return recon_loss(cp.embed(in), g.adjacency(), BceWeighting::plain);
    };
    CHECK(relative_error(analytic, finite_diff_grad(f, DenseMatrix(1, th.size(), th))) < 1e-5);
  }

  // a parameter update makes old caches stale
  GaeModel t(Arch::gae, 3, 2, {}, 4, 2);
  const EncoderCache old = t.encode_eval(in);
  t.apply_gradients(t.backprop_theta(old, {DenseMatrix(6, 2, 0.1), {}, {}}));
  CHECK_THROWS_AS(t.backprop_theta(old, {DenseMatrix(6, 2), {}, {}}), StateError);
  CHECK_THROWS_AS(t.backprop_theta(t.encode_eval(in), {DenseMatrix(5, 2), {}, {}}), ShapeError);
}

TEST_CASE("pretraining") {
  const AttributedGraph g = test::planted_partition(30, 3, 0.6, 0.05, 4);
  const EncoderInput in = EncoderInput::from_graph(g);
  TrainConfig cfg;

  GaeModel a(Arch::gae, g.features().cols(), 3);
  const GaeModel before = a;
  cfg.pretrain_epochs = 0;
  CHECK(pretrain(a, g, in, cfg).empty());
  CHECK(a == before);

  cfg.pretrain_epochs = 60;
  for (Arch arch : {Arch::gae, Arch::vgae, Arch::dgae}) {
    GaeModel x(arch, g.features().cols(), 3);
    GaeModel y(arch, g.features().cols(), 3);
    const auto hx = pretrain(x, g, in, cfg);
    pretrain(y, g, in, cfg);
    CHECK(hx.back() < hx.front());
    CHECK(x == y);
    CHECK(weights_hash(x) == weights_hash(y));
  }
}

TEST_CASE("checkpoints round-trip bitwise, optimiser and noise state included") {
  const AttributedGraph g = test::planted_partition(20, 2, 0.7, 0.05, 5);
  const EncoderInput in = EncoderInput::from_graph(g);
  TrainConfig cfg;
  cfg.pretrain_epochs = 5;
  for (Arch arch : {Arch::gae, Arch::vgae, Arch::dgae}) {
    GaeModel m(arch, g.features().cols(), 8);
    pretrain(m, g, in, cfg);
    if (arch == Arch::dgae) m.set_centers(DenseMatrix(2, 16, 0.25));
    const auto path = test::temp_dir("ckpt") / "m.json";
    m.save(path);
    GaeModel back = GaeModel::load(path);
    CHECK(back == m);
    pretrain(m, g, in, cfg);
    pretrain(back, g, in, cfg);
    CHECK(back == m);
  }
  const auto bad = test::temp_dir("ckpt-bad") / "x.json";
  std::ofstream(bad) << "{\"format\": \"other\"}";
  CHECK_THROWS_AS(GaeModel::load(bad), FormatError);
}

TEST_CASE("train_joint: configuration checks and determinism") {
  const AttributedGraph g = test::planted_partition(20, 2, 0.8, 0.05, 6);
  const EncoderInput in = EncoderInput::from_graph(g);
  TrainConfig cfg;
  cfg.pretrain_epochs = 30;
  cfg.train_epochs = 25;

  TrainConfig bad = cfg;
  bad.ablation = AblationSpec::parse("fr_correction_delay:10");
  GaeModel m0(Arch::dgae, g.features().cols(), 0);
  CHECK_THROWS_AS(train_joint(m0, g, in, bad), ConfigError);
  bad = cfg;
  bad.m1 = 0;
  CHECK_THROWS_AS(train_joint(m0, g, in, bad), ConfigError);
  CHECK_THROWS_AS(AblationSpec::parse("no_beta"), ConfigError);
  CHECK(AblationSpec::parse("fr_correction_delay:30").delay == 30);

  // gamma = 0: the objective is the clustering term alone
  TrainConfig pure = cfg;
  pure.gamma = 0.0;
  GaeModel m1(Arch::dgae, g.features().cols(), 0);
  pretrain(m1, g, in, pure);
  const TrainOutcome o = train_joint(m1, g, in, pure);
  CHECK(o.stop_reason == "epoch_cap");
  CHECK(o.epochs_run == 25);
  for (const auto& r : o.trace.records) CHECK(r.loss.l_total == r.loss.l_clus);

  for (bool rethink : {false, true})
    for (Arch arch : {Arch::gae, Arch::vgae, Arch::dgae}) {
      TrainConfig c = cfg;
      c.rethink = rethink;
      GaeModel a(arch, g.features().cols(), 1), b(arch, g.features().cols(), 1);
      pretrain(a, g, in, c);
      pretrain(b, g, in, c);
      const TrainOutcome oa = train_joint(a, g, in, c);
      const TrainOutcome ob = train_joint(b, g, in, c);
      CHECK(a == b);
      CHECK(oa.final_labels == ob.final_labels);
      REQUIRE(oa.trace.records.size() == ob.trace.records.size());
      for (std::size_t e = 0; e < oa.trace.records.size(); ++e) {
        const TraceRecord& x = oa.trace.records[e];
        const TraceRecord& y = ob.trace.records[e];
        CHECK(x.lambda_fr == y.lambda_fr);
        CHECK(x.lambda_fd == y.lambda_fd);
        CHECK(x.loss.l_total == y.loss.l_total);
        CHECK(x.omega_size == y.omega_size);
        CHECK(x.acc_all == y.acc_all);
      }
      for (const auto& r : oa.trace.records) {
        CHECK(r.links.links_total == r.links.links_true + r.links.links_false);
        if (r.lambda_available) {
          CHECK(std::abs(r.lambda_fr) <= 1.0);
          CHECK(std::abs(r.lambda_fd) <= 1.0);
        }
      }
    }
}

TEST_CASE("train_joint: stop rule and ablation wiring") {
  const AttributedGraph g = test::planted_partition(20, 2, 0.8, 0.05, 7);
  const EncoderInput in = EncoderInput::from_graph(g);
  TrainConfig cfg;
  cfg.rethink = true;
  cfg.pretrain_epochs = 100;
  cfg.train_epochs = 60;
  GaeModel base(Arch::dgae, g.features().cols(), 0);
  pretrain(base, g, in, cfg);

  auto run = [&](const std::string& ab) {
    TrainConfig c = cfg;
    c.ablation = AblationSpec::parse(ab);
    GaeModel m = base;
    return train_joint(m, g, in, c);
  };

  const TrainOutcome none = run("none");
  CHECK((none.stop_reason == "omega_converged" || none.epochs_run == 60));
  if (none.stop_reason == "omega_converged") CHECK(none.final_omega.size() >= 18);

  // without Xi every node is reliable, and convergence never triggers
  const TrainOutcome no_xi = run("no_xi");
  CHECK(no_xi.stop_reason == "epoch_cap");
  for (const auto& r : no_xi.trace.records) CHECK(r.omega_size == 20);

  const TrainOutcome no_up = run("no_upsilon");
  CHECK(no_up.final_graph.adjacency == g.adjacency());

  const TrainOutcome no_add = run("no_add_edge");
  CHECK(no_add.final_graph.n_added() == 0);
  const TrainOutcome no_drop = run("no_drop_edge");
  CHECK(no_drop.final_graph.deleted.empty());

  // delay: Omega is the whole graph until the delay ends
  const TrainOutcome delay = run("fr_correction_delay:30");
  for (const auto& r : delay.trace.records)
    if (r.epoch < 30) CHECK(r.omega_size == 20);
  CHECK(delay.epochs_run >= 30);

  const TrainOutcome prot = run("fd_protection_single_step");
  CHECK(prot.trace.records.front().links.links_total == prot.final_graph.edges.size());
}
