#include "rgae/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "rgae/errors.hpp"

namespace rgae {

namespace {

DenseMatrix clustering_grad_z(const GaeModel& model, const DenseMatrix& z, const Labels& labels, std::size_t k,
                              const ReliableSet* omega) {
  if (model.arch() == Arch::dgae) {
    if (!model.has_centers()) throw StateError("lambda_fr: DGAE model has no centres");
    const SoftAssignment q = one_hot(labels, k);
    return dgae_clus_loss(z, model.centers(), q.matrix, omega ? &omega->member : nullptr).grad_z;
  }
  Labels masked = labels;
  if (omega)
    for (std::size_t i = 0; i < masked.size(); ++i)
      if (!omega->contains(i)) masked[i] = -1;
  return kmeans_centroid_term(z, masked, k).grad_z;
}

}  // namespace

Cosine lambda_fr(const GaeModel& model, const EncoderInput& input, const Labels& pseudo, const Labels& truth,
                 std::size_t k, const ReliableSet* omega) {
  const EncoderCache cache = model.encode_eval(input);
  const Labels mapped = mapped_truth(truth, pseudo, k).labels();
  const ThetaGrad g_pseudo = model.backprop_theta(cache, {clustering_grad_z(model, cache.z, pseudo, k, omega), {}, {}});
  const ThetaGrad g_sup = model.backprop_theta(cache, {clustering_grad_z(model, cache.z, mapped, k, omega), {}, {}});
  const auto a = g_pseudo.flatten();
  const auto b = g_sup.flatten();
  return cosine(a, b);
}

Cosine lambda_fd(const GaeModel& model, const EncoderInput& input, const SparseMatrix& a_self,
                 const SparseMatrix& a_sup) {
  const EncoderCache cache = model.encode_eval(input);
  const ThetaGrad g_self = model.backprop_theta(cache, {recon_grad_z(cache.z, a_self), {}, {}});
  const ThetaGrad g_sup = model.backprop_theta(cache, {recon_grad_z(cache.z, a_sup), {}, {}});
  const auto a = g_self.flatten();
  const auto b = g_sup.flatten();
  return cosine(a, b);
}

namespace {

std::vector<double> pull(const DenseMatrix& z, std::size_t i, const SparseMatrix& a) {
  std::vector<double> g(z.cols(), 0.0);
  auto idx = a.row_indices(i);
  auto val = a.row_values(i);
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (std::size_t t = 0; t < z.cols(); ++t) g[t] += val[k] * (z(i, t) - z(idx[k], t));
  return g;
}

std::vector<double> aggregate(const DenseMatrix& x, std::size_t i, const SparseMatrix& a) {
  std::vector<double> h(x.cols(), 0.0);
  auto idx = a.row_indices(i);
  auto val = a.row_values(i);
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (std::size_t t = 0; t < x.cols(); ++t) h[t] += val[k] * x(idx[k], t);
  return h;
}

double rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(a)); }

}  // namespace

double lambda_prime(const DenseMatrix& z, std::size_t i, const SparseMatrix& a1, const SparseMatrix& a2) {
  if (i >= z.rows()) throw RangeError("lambda_prime: row out of range");
  if (a1.rows() != z.rows() || a2.rows() != z.rows()) throw ShapeError("lambda_prime: graph size != N");
  return dot(pull(z, i, a1), pull(z, i, a2));
}

double filter_impact(const DenseMatrix& x, std::size_t i, const SparseMatrix& a_self_norm, const SparseMatrix& a_sup) {
  if (i >= x.rows()) throw RangeError("filter_impact: row out of range");
  if (a_self_norm.rows() != x.rows() || a_sup.rows() != x.rows()) throw ShapeError("filter_impact: graph size != N");
  const auto h_sup = aggregate(x, i, a_sup);
  const auto h_self = aggregate(x, i, a_self_norm);
  return std::sqrt(squared_distance(x.row(i), h_sup)) - std::sqrt(squared_distance(h_self, h_sup));
}

DecompositionResiduals decomposition_residuals(const DenseMatrix& z, const SparseMatrix& a_self,
                                               const Labels& labels_pred, std::size_t k, double gamma) {
  DecompositionResiduals r;
  const double bce = kernels::bce_all_pairs(z, a_self, BceWeighting::plain, false).loss;
  const double lc_self = laplacian_quadratic(z, a_self);
  const double lr_self = regularizer_R(z, a_self);
  r.bce_split_rel = rel(bce, lc_self + lr_self);

  const double centroid = kmeans_objective(z, labels_pred, k);
  const SparseMatrix a_clus = build_cluster_graph(labels_pred, k);
  r.kmeans_graph_rel = rel(centroid, laplacian_quadratic(z, a_clus));

  const double lhs = centroid + gamma * bce;
  const double rhs = laplacian_quadratic(z, add(a_clus, a_self, gamma)) + gamma * lr_self;
  r.combined_rel = rel(lhs, rhs);
  return r;
}

GraphEvolution graph_evolution_stats(const SelfSupervisionGraph& a_cs, const Labels& labels) {
  GraphEvolution g;
  auto same = [&](const Edge& e) {
    if (e.u >= labels.size() || e.v >= labels.size()) throw RangeError("graph_evolution_stats: node out of range");
    return labels[e.u] == labels[e.v];
  };
  for (std::size_t k = 0; k < a_cs.edges.size(); ++k) {
    const bool t = same(a_cs.edges[k]);
    ++g.links_total;
    ++(t ? g.links_true : g.links_false);
    if (a_cs.origin[k] == EdgeOrigin::added) ++(t ? g.links_added_true : g.links_added_false);
  }
  for (const Edge& e : a_cs.deleted) ++(same(e) ? g.links_deleted_true : g.links_deleted_false);
  return g;
}

std::vector<double> cumulative_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("cumulative_difference: series lengths differ");
  std::vector<double> c(a.size());
  double run = 0.0;
  double peak = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    run += a[t] - b[t];
    c[t] = run;
    peak = std::max(peak, std::abs(run));
  }
  if (peak == 0.0) return std::vector<double>(a.size(), 0.0);
  for (double& v : c) v /= peak;
  return c;
}

}  // namespace rgae
