#include "rgae/training.hpp"

#include <chrono>
#include <cmath>

#include "rgae/errors.hpp"
#include "rgae/losses.hpp"

namespace rgae {

AblationSpec AblationSpec::parse(const std::string& text) {
  static const std::vector<std::pair<std::string, Ablation>> names = {
      {"none", Ablation::none},
      {"no_alpha1", Ablation::no_alpha1},
      {"no_alpha2", Ablation::no_alpha2},
      {"no_xi", Ablation::no_xi},
      {"no_add_edge", Ablation::no_add_edge},
      {"no_drop_edge", Ablation::no_drop_edge},
      {"no_upsilon", Ablation::no_upsilon},
      {"fd_protection_single_step", Ablation::fd_protection_single_step},
  };
  for (const auto& [name, kind] : names)
    if (text == name) return {kind, 0};
  const std::string prefix = "fr_correction_delay:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string num = text.substr(prefix.size());
    if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("ablation '" + text + "': delay must be a non-negative integer");
    return {Ablation::fr_correction_delay, static_cast<std::size_t>(std::stoull(num))};
  }
  throw ConfigError("unknown ablation '" + text + "'");
}

std::string AblationSpec::to_string() const {
  switch (kind) {
    case Ablation::none: return "none";
    case Ablation::no_alpha1: return "no_alpha1";
    case Ablation::no_alpha2: return "no_alpha2";
    case Ablation::no_xi: return "no_xi";
    case Ablation::no_add_edge: return "no_add_edge";
    case Ablation::no_drop_edge: return "no_drop_edge";
    case Ablation::no_upsilon: return "no_upsilon";
    case Ablation::fd_protection_single_step: return "fd_protection_single_step";
    case Ablation::fr_correction_delay: return "fr_correction_delay:" + std::to_string(delay);
  }
  return "none";
}

double TrainConfig::effective_alpha1() const { return ablation.kind == Ablation::no_alpha1 ? 0.0 : alpha1; }

double TrainConfig::effective_alpha2() const {
  if (ablation.kind == Ablation::no_alpha2) return 0.0;
  return alpha2.value_or(alpha1 / 2.0);
}

void TrainConfig::validate() const {
  if (!(alpha1 >= 0.0 && alpha1 <= 1.0)) throw ConfigError("alpha1 must lie in [0, 1]");
  if (alpha2 && !(*alpha2 >= 0.0 && *alpha2 <= 1.0)) throw ConfigError("alpha2 must lie in [0, 1]");
  if (m1 < 1 || m2 < 1) throw ConfigError("M1 and M2 must be at least 1");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be a finite non-negative number");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(convergence_fraction > 0.0 && convergence_fraction <= 1.0))
    throw ConfigError("convergence fraction must lie in (0, 1]");
  if (!rethink && ablation.kind != Ablation::none)
    throw ConfigError("ablation '" + ablation.to_string() + "' requires the rethink variant");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct StepTerms {
  HeadGrads heads;
  DenseMatrix center_grad;
  LossBreakdown loss;
};

/// Reconstruction part of an epoch's objective, scaled by `weight`.
void add_reconstruction(const GaeModel& model, const EncoderCache& cache, const SparseMatrix& target, double weight,
                        StepTerms& terms) {
  BceResult r = recon_loss_and_grad(cache.z, target, BceWeighting::pos_weighted);
  terms.loss.l_bce = r.loss;
  terms.loss.l_total += weight * r.loss;
  axpy(weight, r.grad_z, terms.heads.z);
  if (model.arch() == Arch::vgae) {
    GaussianKl kl = gaussian_kl_prior(cache.mu, cache.logvar);
    const double inv_n = 1.0 / static_cast<double>(cache.mu.rows());
    terms.loss.l_total += weight * inv_n * kl.kl_prior;
    terms.heads.mu = (weight * inv_n) * kl.grad_mu;
    terms.heads.logvar = (weight * inv_n) * kl.grad_logvar;
  }
}

void check_finite(double loss, const char* phase, std::size_t epoch) {
  if (!std::isfinite(loss))
    throw TrainingError(std::string(phase) + " diverged at epoch " + std::to_string(epoch) + " (loss is not finite)");
}

ClusteringScores subset_scores(const Labels& pred, const Labels& truth, std::size_t k, const ReliableSet& omega,
                               bool inside) {
  Labels p, t;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (omega.contains(i) == inside) {
      p.push_back(pred[i]);
      t.push_back(truth[i]);
    }
  if (p.empty()) return {};
  return evaluate_clustering(p, t, k);
}

}  // namespace

std::vector<double> pretrain(GaeModel& model, const AttributedGraph& graph, const EncoderInput& input,
                             const TrainConfig& cfg) {
  std::vector<double> history;
  history.reserve(cfg.pretrain_epochs);
  for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    EncoderCache cache = model.encode(input, EncodeMode::train);
    StepTerms terms;
    terms.heads.z = DenseMatrix(cache.z.rows(), cache.z.cols());
    add_reconstruction(model, cache, graph.adjacency(), 1.0, terms);
    check_finite(terms.loss.l_total, "pretraining", epoch);
    history.push_back(terms.loss.l_total);
    const ThetaGrad g = model.backprop_theta(cache, terms.heads);
    model.apply_gradients(g);
  }
  return history;
}

Labels predict_labels(const GaeModel& model, const EncoderInput& input, std::size_t k, std::uint64_t seed,
                      std::size_t kmeans_restarts) {
  const DenseMatrix z = model.embed(input);
  if (model.arch() == Arch::dgae && model.has_centers()) return student_t_assign(z, model.centers()).labels();
  return kmeans(z, k, seed, 300, kmeans_restarts).labels;
}

TrainOutcome train_joint(GaeModel& model, const AttributedGraph& graph, const EncoderInput& input,
                         const TrainConfig& cfg, const TraceSink& sink) {
  cfg.validate();
  const std::size_t n = graph.n_nodes();
  const std::size_t k = graph.k_clusters();
  if (k < 1 || n < k) throw ConfigError("train_joint: need 1 <= K <= N");
  const bool dgae = model.arch() == Arch::dgae;
  const bool vgae = model.arch() == Arch::vgae;
  const Ablation ab = cfg.ablation.kind;
  const bool has_truth = graph.has_labels();
  const Labels* truth = has_truth ? &*graph.labels() : nullptr;

  if (dgae && !model.has_centers())
    model.set_centers(kmeans(model.embed(input), k, cfg.seed, 300, cfg.kmeans_restarts).model.centers);
  model.reset_optimizer();

  TrainOutcome out;
  out.stop_reason = "epoch_cap";
  ReliableSet omega = all_nodes(n);
  SelfSupervisionGraph a_cs = unchanged_graph(graph);
  UpsilonOptions upsilon_opts;
  upsilon_opts.add_edges = ab != Ablation::no_add_edge;
  upsilon_opts.drop_edges = ab != Ablation::no_drop_edge;

  const auto t0 = Clock::now();
  double excluded = 0.0;

  std::size_t epoch = 0;
  for (; epoch < cfg.train_epochs; ++epoch) {
    EncoderCache cache = vgae ? model.encode(input, EncodeMode::train) : model.encode_eval(input);
    const DenseMatrix& z_eval = vgae ? cache.mu : cache.z;

    bool assigned = false;
    Labels labels;
    SoftAssignment p;
    ClusterModel cluster_model;
    auto ensure_assignment = [&] {
      if (assigned) return;
      if (dgae) {
        p = student_t_assign(z_eval, model.centers());
        labels = p.labels();
      } else {
        KMeansResult km = kmeans(z_eval, k, cfg.seed, 300, cfg.kmeans_restarts);
        labels = std::move(km.labels);
        cluster_model = std::move(km.model);
        p = one_hot(labels, k);
      }
      assigned = true;
    };
    if (dgae) ensure_assignment();

    if (cfg.rethink) {
      const bool delayed = ab == Ablation::fr_correction_delay && epoch < cfg.ablation.delay;
      const bool delay_ends = ab == Ablation::fr_correction_delay && epoch == cfg.ablation.delay;
      if (epoch % cfg.m1 == 0 || delay_ends) {
        const bool sampling = ab != Ablation::no_xi && !delayed;
        if (sampling) {
          ensure_assignment();
          omega = xi_select(z_eval, p, dgae ? nullptr : &cluster_model, cfg.effective_alpha1(), cfg.effective_alpha2());
        } else {
          omega = all_nodes(n);
        }
        out.omega_history.push_back(omega.size());
        if (sampling && epoch > 0 &&
            static_cast<double>(omega.size()) >= cfg.convergence_fraction * static_cast<double>(n)) {
          out.stop_reason = "omega_converged";
          break;
        }
      }
      if (ab == Ablation::fd_protection_single_step) {
        if (epoch == 0) {
          ensure_assignment();
          const ReliableSet everyone = all_nodes(n);
          a_cs = upsilon_transform(graph.n_nodes(), graph.edges(), labels, everyone,
                                   compute_centroid_nodes(z_eval, labels, everyone, k));
          out.graph_omega = everyone;
          out.graph_labels = labels;
        }
      } else if (ab != Ablation::no_upsilon && epoch % cfg.m2 == 0) {
        if (omega.empty()) {
          a_cs = unchanged_graph(graph);
          out.graph_omega = omega;
          out.graph_labels.clear();
        } else {
          ensure_assignment();
          a_cs = upsilon_transform(graph.n_nodes(), graph.edges(), labels, omega,
                                   compute_centroid_nodes(z_eval, labels, omega, k), upsilon_opts);
          out.graph_omega = omega;
          out.graph_labels = labels;
        }
      }
    }

    // ---- objective and update
    StepTerms terms;
    terms.heads.z = DenseMatrix(cache.z.rows(), cache.z.cols());
    terms.loss.gamma = cfg.gamma;
    const bool clustering = dgae || (cfg.rethink && cfg.first_group_clustering);
    const std::size_t rows = cfg.rethink ? omega.size() : n;
    if (clustering && rows > 0) {
      ensure_assignment();
      const double inv_rows = 1.0 / static_cast<double>(rows);
      if (dgae) {
        const SoftAssignment q = hard_target(p);
        KlTerm kl = dgae_clus_loss(cache.z, model.centers(), q.matrix, cfg.rethink ? &omega.member : nullptr);
        terms.loss.l_clus = kl.loss * inv_rows;
        axpy(inv_rows, kl.grad_z, terms.heads.z);
        terms.center_grad = inv_rows * kl.grad_centers;
      } else {
        Labels masked = labels;
        for (std::size_t i = 0; i < n; ++i)
          if (!omega.contains(i)) masked[i] = -1;
        KMeansTerm km = kmeans_centroid_term(cache.z, masked, k);
        terms.loss.l_clus = km.loss * inv_rows;
        axpy(inv_rows, km.grad_z, terms.heads.z);
      }
      terms.loss.l_total += terms.loss.l_clus;
    }
    const SparseMatrix& target = cfg.rethink ? a_cs.adjacency : graph.adjacency();
    add_reconstruction(model, cache, target, clustering ? cfg.gamma : 1.0, terms);
    check_finite(terms.loss.l_total, "training", epoch);

    // ---- trace (label-dependent work is excluded from the timing)
    const auto eval_start = Clock::now();
    TraceRecord rec;
    rec.epoch = epoch;
    rec.omega_size = omega.size();
    rec.loss = terms.loss;
    if (has_truth) {
      ensure_assignment();
      const ClusteringScores all = evaluate_clustering(labels, *truth, k);
      rec.acc_all = all.acc;
      rec.nmi = all.nmi;
      rec.ari = all.ari;
      rec.acc_omega = subset_scores(labels, *truth, k, omega, true).acc;
      rec.acc_complement = subset_scores(labels, *truth, k, omega, false).acc;
      rec.links = graph_evolution_stats(a_cs, *truth);
      if (cfg.diagnostics_stride > 0 && epoch % cfg.diagnostics_stride == 0) {
        rec.lambda_available = true;
        rec.lambda_fr = lambda_fr(model, input, labels, *truth, k, cfg.rethink ? &omega : nullptr).value;
        rec.lambda_fr_baseline = lambda_fr(model, input, labels, *truth, k, nullptr).value;
        const SparseMatrix a_sup = build_supervised_target(graph, *truth, labels, z_eval).adjacency;
        rec.lambda_fd = lambda_fd(model, input, target, a_sup).value;
        rec.lambda_fd_baseline = lambda_fd(model, input, graph.adjacency(), a_sup).value;
        const double plain = recon_loss(z_eval, target, BceWeighting::plain);
        rec.loss.l_C_self = laplacian_quadratic(z_eval, target);
        rec.loss.l_R_self = plain - rec.loss.l_C_self;
        Labels masked = labels;
        for (std::size_t i = 0; i < n; ++i)
          if (!omega.contains(i)) masked[i] = -1;
        rec.loss.l_C_clus = kmeans_objective(z_eval, masked, k);
      }
    } else {
      rec.links.links_total = a_cs.edges.size();
    }
    excluded += seconds_since(eval_start);
    rec.wall_time = seconds_since(t0) - excluded;

    const ThetaGrad g = model.backprop_theta(cache, terms.heads);
    model.apply_gradients(g, dgae ? terms.center_grad : DenseMatrix{});
    rec.wall_time = seconds_since(t0) - excluded;
    if (sink) sink(rec);
    out.trace.records.push_back(std::move(rec));
  }
  out.epochs_run = epoch;
  out.wall_time = seconds_since(t0) - excluded;

  out.final_labels = predict_labels(model, input, k, cfg.seed, cfg.kmeans_restarts);
  if (has_truth) out.final_scores = evaluate_clustering(out.final_labels, *truth, k);
  out.final_graph = std::move(a_cs);
  out.final_omega = std::move(omega);
  return out;
}

}  // namespace rgae
