#include "rgae/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "rgae/clustering.hpp"
#include "rgae/diagnostics.hpp"
#include "rgae/losses.hpp"
#include "rgae/model.hpp"
#include "rgae/numdiff.hpp"
#include "rgae/rng.hpp"

namespace rgae {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

DenseMatrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale) {
  DenseMatrix m(r, c);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

std::vector<Edge> random_edges(Rng& rng, std::size_t n, double p) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < p) e.push_back({i, j});
  return e;
}

Labels random_labels(Rng& rng, std::size_t n, std::size_t k) {
  Labels l(n);
  for (auto& v : l) v = static_cast<int>(rng.below(k));
  return l;
}

DenseMatrix as_matrix(const std::vector<double>& v) { return DenseMatrix(1, v.size(), v); }

}  // namespace

IdentityReport run_identity_suite(std::size_t instances, std::uint64_t seed) {
  const auto t0 = Clock::now();
  Rng rng(seed);
  IdentityReport rep;
  rep.instances = instances;
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t n = 2 + rng.below(29);
    const std::size_t d = 1 + rng.below(8);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(5, n));
    const DenseMatrix z = random_matrix(rng, n, d, 0.7);
    const SparseMatrix a = adjacency_from_edges(n, random_edges(rng, n, rng.uniform(0.05, 0.6)));
    const Labels labels = random_labels(rng, n, k);
    const double gamma = t % 5 == 0 ? 0.0 : std::pow(10.0, -rng.uniform(0.0, 4.0));
    const DecompositionResiduals r = decomposition_residuals(z, a, labels, k, gamma);
    rep.max_bce_split = std::max(rep.max_bce_split, r.bce_split_rel);
    rep.max_kmeans_graph = std::max(rep.max_kmeans_graph, r.kmeans_graph_rel);
    rep.max_combined = std::max(rep.max_combined, r.combined_rel);
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

double GradientReport::max_error() const {
  double m = 0.0;
  for (const auto& c : checks) m = std::max(m, c.rel_error);
  return m;
}

GradientReport run_gradient_suite(std::size_t rounds, std::uint64_t seed) {
  const auto t0 = Clock::now();
  Rng rng(seed);
  GradientReport rep;
  auto record = [&](const std::string& name, double err) {
    for (auto& c : rep.checks)
      if (c.name == name) {
        c.rel_error = std::max(c.rel_error, err);
        return;
      }
    rep.checks.push_back({name, err});
  };

  for (std::size_t round = 0; round < rounds; ++round) {
    const std::size_t n = 3 + rng.below(8);
    const std::size_t d = 1 + rng.below(4);
    const std::size_t k = 2 + rng.below(std::min<std::size_t>(3, n - 1));
    const DenseMatrix z = random_matrix(rng, n, d, 0.6);
    const auto edges = random_edges(rng, n, 0.4);
    const SparseMatrix a = adjacency_from_edges(n, edges);
    const Labels labels = random_labels(rng, n, k);

    record("recon_plain",
           relative_error(recon_grad_z(z, a),
                          finite_diff_grad([&](const DenseMatrix& x) { return recon_loss(x, a, BceWeighting::plain); }, z)));
    if (a.nnz() > 0)
      record("recon_pos_weighted",
             relative_error(recon_loss_and_grad(z, a, BceWeighting::pos_weighted).grad_z,
                            finite_diff_grad(
                                [&](const DenseMatrix& x) { return recon_loss(x, a, BceWeighting::pos_weighted); }, z)));

    const SparseMatrix a_clus = build_cluster_graph(labels, k);
    record("kmeans_graph_form",
           relative_error(kmeans_grad_z(z, a_clus),
                          finite_diff_grad([&](const DenseMatrix& x) { return kmeans_embed_loss(x, a_clus); }, z)));
    record("kmeans_centroid_form",
           relative_error(kmeans_centroid_term(z, labels, k).grad_z,
                          finite_diff_grad([&](const DenseMatrix& x) { return kmeans_centroid_term(x, labels, k).loss; },
                                           z)));

    const DenseMatrix centers = random_matrix(rng, k, d, 0.8);
    const DenseMatrix q = one_hot(labels, k).matrix;
    const KlTerm kl = dgae_clus_loss(z, centers, q);
    record("kl_grad_z", relative_error(kl.grad_z, finite_diff_grad(
                                                      [&](const DenseMatrix& x) { return dgae_clus_loss(x, centers, q).loss; }, z)));
    record("kl_grad_centers",
           relative_error(kl.grad_centers,
                          finite_diff_grad([&](const DenseMatrix& c) { return dgae_clus_loss(z, c, q).loss; }, centers)));

    const DenseMatrix mu = random_matrix(rng, n, d, 0.5);
    const DenseMatrix lv = random_matrix(rng, n, d, 0.5);
    const GaussianKl gk = gaussian_kl_prior(mu, lv);
    record("vgae_prior_mu",
           relative_error(gk.grad_mu,
                          finite_diff_grad([&](const DenseMatrix& m) { return gaussian_kl_prior(m, lv).kl_prior; }, mu)));
    record("vgae_prior_logvar",
           relative_error(gk.grad_logvar,
                          finite_diff_grad([&](const DenseMatrix& l) { return gaussian_kl_prior(mu, l).kl_prior; }, lv)));

    // full chain through the encoder
    const std::size_t j = 2 + rng.below(4);
    const AttributedGraph g(n, edges, random_matrix(rng, n, j, 1.0), std::nullopt, 0);
    const EncoderInput input = EncoderInput::from_graph(g);
    const double gamma = 0.5;
    for (Arch arch : {Arch::gae, Arch::dgae, Arch::vgae}) {
      GaeModel model(arch, j, rng.next_u64(), {}, 5, 3);
      const std::vector<double> theta0 = model.flat_theta();
      if (arch == Arch::dgae) model.set_centers(random_matrix(rng, k, 3, 0.8));
      const DenseMatrix dq = one_hot(labels, k).matrix;
      const DenseMatrix theta_m = as_matrix(theta0);
      DenseMatrix analytic;
      std::function<double(const DenseMatrix&)> f;

      if (arch == Arch::vgae) {
        const EncoderCache cache = model.encode(input, EncodeMode::train);
        const DenseMatrix eps = cache.eps;
        auto total = [&](const DenseMatrix& m, const DenseMatrix& lvv, const DenseMatrix& zz) {
          return recon_loss(zz, a, BceWeighting::pos_weighted) + gaussian_kl_prior(m, lvv).kl_prior;
        };
        const GaussianKl prior = gaussian_kl_prior(cache.mu, cache.logvar);
        const DenseMatrix gz =
            a.nnz() > 0 ? recon_loss_and_grad(cache.z, a, BceWeighting::pos_weighted).grad_z : DenseMatrix(n, 3);
        analytic = as_matrix(model.backprop_theta(cache, {gz, prior.grad_mu, prior.grad_logvar}).flatten());
        f = [&, eps](const DenseMatrix& th) {
          GaeModel m = model;
          m.set_flat_theta(th.values());
          const EncoderCache c = m.encode_eval(input);
          DenseMatrix zz = c.mu;
          for (std::size_t s = 0; s < zz.size(); ++s)
            zz.values()[s] += std::exp(0.5 * c.logvar.values()[s]) * eps.values()[s];
          return total(c.mu, c.logvar, zz);
        };
        if (a.nnz() == 0) continue;
      } else {
        const EncoderCache cache = model.encode_eval(input);
        DenseMatrix gz = recon_grad_z(cache.z, a);
        if (arch == Arch::dgae) {
          gz = gamma * gz;
          axpy(1.0, dgae_clus_loss(cache.z, model.centers(), dq).grad_z, gz);
        }
        analytic = as_matrix(model.backprop_theta(cache, {gz, {}, {}}).flatten());
        f = [&](const DenseMatrix& th) {
          GaeModel m = model;
          m.set_flat_theta(th.values());
          const DenseMatrix zz = m.embed(input);
          if (arch == Arch::dgae)
            return dgae_clus_loss(zz, m.centers(), dq).loss + gamma * recon_loss(zz, a, BceWeighting::plain);
          return recon_loss(zz, a, BceWeighting::plain);
        };
      }
      record("backprop_theta_" + to_string(arch), relative_error(analytic, finite_diff_grad(f, theta_m)));
    }
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

}  // namespace rgae
