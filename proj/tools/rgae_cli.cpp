#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rgae/errors.hpp"
#include "rgae/experiment.hpp"
#include "rgae/verify.hpp"

using namespace rgae;

namespace {

struct Overrides {
  std::string config;
  std::string dataset;
  std::string model;
  bool rethink = false;
  bool no_rethink = false;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  std::size_t m1 = 0;
  std::size_t m2 = 0;
  double gamma = 0.0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string pretrain_ckpt;
  std::string ablation;
  std::string perturb;
  std::uint64_t perturb_seed = 0;
  std::size_t diag_stride = 0;
  std::size_t epochs = 0;
  std::size_t pretrain_epochs = 0;
  bool first_group = false;
  bool no_row_normalize = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "flat JSON config; flags override its values");
  cmd->add_option("--dataset", o.dataset, "dataset directory");
  cmd->add_option("--model", o.model, "gae | vgae | dgae");
  cmd->add_flag("--rethink", o.rethink, "enable the Xi / Upsilon operators");
  cmd->add_flag("--no-rethink", o.no_rethink);
  cmd->add_option("--alpha1", o.alpha1);
  cmd->add_option("--alpha2", o.alpha2);
  cmd->add_option("--m1", o.m1, "epochs between Xi updates");
  cmd->add_option("--m2", o.m2, "epochs between Upsilon updates");
  cmd->add_option("--gamma", o.gamma);
  cmd->add_option("--lr", o.lr);
  cmd->add_option("--seed", o.seed, "single seed");
  cmd->add_option("--seeds", o.seeds, "seed list")->delimiter(',');
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--pretrain-ckpt", o.pretrain_ckpt, "shared pretraining checkpoint directory");
  cmd->add_option("--diag-stride", o.diag_stride, "epochs between Lambda diagnostics (0 = off)");
  cmd->add_option("--epochs", o.epochs, "clustering-phase epochs");
  cmd->add_option("--pretrain-epochs", o.pretrain_epochs);
  cmd->add_flag("--first-group-clustering", o.first_group);
  cmd->add_flag("--no-row-normalize", o.no_row_normalize);
  cmd->add_option("--perturb-seed", o.perturb_seed);
}

bool given(CLI::App* cmd, const std::string& name) { return cmd->count(name) > 0; }

ExperimentConfig build_config(CLI::App* cmd, const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(o.config);
  if (given(cmd, "--dataset")) c.dataset = o.dataset;
  if (given(cmd, "--model")) c.model = parse_arch(o.model);
  if (o.rethink) c.train.rethink = true;
  if (o.no_rethink) c.train.rethink = false;
  if (given(cmd, "--alpha1")) c.train.alpha1 = o.alpha1;
  if (given(cmd, "--alpha2")) c.train.alpha2 = o.alpha2;
  if (given(cmd, "--m1")) c.train.m1 = o.m1;
  if (given(cmd, "--m2")) c.train.m2 = o.m2;
  if (given(cmd, "--gamma")) c.train.gamma = o.gamma;
  if (given(cmd, "--lr")) c.train.learning_rate = o.lr;
  if (given(cmd, "--seed")) c.seeds = {o.seed};
  if (given(cmd, "--seeds")) c.seeds = o.seeds;
  if (given(cmd, "--out")) c.out_dir = o.out;
  if (given(cmd, "--pretrain-ckpt")) c.pretrain_ckpt = o.pretrain_ckpt;
  if (given(cmd, "--diag-stride")) c.train.diagnostics_stride = o.diag_stride;
  if (given(cmd, "--epochs")) c.train.train_epochs = o.epochs;
  if (given(cmd, "--pretrain-epochs")) c.train.pretrain_epochs = o.pretrain_epochs;
  if (o.first_group) c.train.first_group_clustering = true;
  if (o.no_row_normalize) c.row_normalize = false;
  if (given(cmd, "--perturb-seed")) c.perturbation_seed = o.perturb_seed;
  if (c.dataset.empty()) throw ConfigError("--dataset (or a config with \"dataset\") is required");
  return c;
}

void print_result(const RunResult& r) {
  std::printf("%-10s %-26s %-18s", r.variant.c_str(), r.ablation.c_str(),
              r.perturbation.empty() ? "-" : r.perturbation.c_str());
  if (r.best)
    std::printf(" best acc %.4f nmi %.4f ari %.4f | mean acc %.4f+-%.4f", r.best->acc, r.best->nmi, r.best->ari,
                r.mean->acc, r.stddev->acc);
  std::printf(" | %.2fs/seed\n", r.mean_wall_time_s);
  for (const auto& s : r.seeds) {
    std::printf("  seed %-4llu %-16s epochs %-4zu |Omega| %-6zu", static_cast<unsigned long long>(s.seed),
                s.stop_reason.c_str(), s.epochs_run, s.final_omega_size);
    if (s.scores) std::printf(" acc %.4f nmi %.4f ari %.4f", s.scores->acc, s.scores->nmi, s.scores->ari);
    std::printf(" %.2fs\n", s.wall_time_s);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rgae: graph auto-encoder clustering with reliable-node sampling and graph rewriting"};
  app.require_subcommand(1);

  Overrides o;

  auto* pre = app.add_subcommand("pretrain", "pretrain (or reuse) the shared checkpoint for each seed");
  add_common(pre, o);

  auto* cluster = app.add_subcommand("cluster", "pretrain + clustering phase for each seed");
  add_common(cluster, o);
  cluster->add_option("--ablation", o.ablation, "none | no_alpha1 | ... | fr_correction_delay:E");
  cluster->add_option("--perturb", o.perturb, "add_edges:M | drop_edges:M | noise:S | drop_features:M");

  std::vector<std::string> ablations;
  auto* ablate = app.add_subcommand("ablate", "one rethink run per ablation, shared pretraining");
  add_common(ablate, o);
  ablate->add_option("--ablations", ablations, "comma-separated ablation list")->delimiter(',');

  std::vector<std::string> perturbs;
  auto* robust = app.add_subcommand("robustness", "baseline vs rethink on each perturbed graph");
  add_common(robust, o);
  robust->add_option("--perturb", perturbs, "comma-separated perturbation list")->delimiter(',')->required();

  std::string ckpt, emb_dataset, emb_out;
  bool emb_no_norm = false;
  auto* exp = app.add_subcommand("export-embeddings", "write the N x d embedding (plus labels) as TSV");
  exp->add_option("--checkpoint", ckpt)->required();
  exp->add_option("--dataset", emb_dataset)->required();
  exp->add_option("--out", emb_out)->required();
  exp->add_flag("--no-row-normalize", emb_no_norm);

  std::size_t instances = 100, rounds = 5;
  std::uint64_t vseed = 0;
  auto* verify = app.add_subcommand("verify-theory", "loss-identity residuals and finite-difference gradient checks");
  verify->add_option("--instances", instances, "random instances for the identity suite");
  verify->add_option("--rounds", rounds, "random instances per gradient check");
  verify->add_option("--seed", vseed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pre) {
      ExperimentConfig c = build_config(pre, o);
      c.validate();
      const AttributedGraph g = prepare_graph(c);
      const EncoderInput input = EncoderInput::from_graph(g);
      for (auto s : c.seeds) {
        std::filesystem::path path;
        const GaeModel m = pretrained_model(c, g, input, s, &path);
        std::printf("seed %llu  %s  %s\n", static_cast<unsigned long long>(s), hex64(weights_hash(m)).c_str(),
                    path.string().c_str());
      }
    } else if (*cluster) {
      ExperimentConfig c = build_config(cluster, o);
      if (given(cluster, "--ablation")) c.train.ablation = AblationSpec::parse(o.ablation);
      if (given(cluster, "--perturb")) c.perturbation = PerturbSpec::parse(o.perturb);
      print_result(run(c));
      std::printf("results: %s\n", (c.out_dir / "results.json").string().c_str());
    } else if (*ablate) {
      ExperimentConfig c = build_config(ablate, o);
      std::vector<AblationSpec> axes;
      if (ablations.empty())
        ablations = {"none", "no_alpha1", "no_alpha2", "no_xi", "no_add_edge", "no_drop_edge", "no_upsilon",
                     "fd_protection_single_step"};
      for (const auto& a : ablations) axes.push_back(AblationSpec::parse(a));
      for (const auto& r : run_ablation_grid(c, axes)) print_result(r);
      std::printf("results: %s\n", (c.out_dir / "ablation.json").string().c_str());
    } else if (*robust) {
      ExperimentConfig c = build_config(robust, o);
      std::vector<PerturbSpec> grid;
      for (const auto& p : perturbs) grid.push_back(PerturbSpec::parse(p));
      for (const auto& r : run_robustness(c, grid)) print_result(r);
      std::printf("results: %s\n", (c.out_dir / "robustness.json").string().c_str());
    } else if (*exp) {
      AttributedGraph g = load_dataset(emb_dataset);
      if (!emb_no_norm) g = g.with_features(row_normalize(g.features()));
      export_embeddings(ckpt, g, emb_out);
      std::printf("wrote %s\n", emb_out.c_str());
    } else if (*verify) {
      const IdentityReport id = run_identity_suite(instances, vseed);
      std::printf("identity suite: %zu instances, %.2fs\n", id.instances, id.seconds);
      std::printf("  bce = L_C + L_R               max rel residual %.3e\n", id.max_bce_split);
      std::printf("  kmeans = L_C(A_clus)          max rel residual %.3e\n", id.max_kmeans_graph);
      std::printf("  combined objective            max rel residual %.3e\n", id.max_combined);
      const GradientReport gr = run_gradient_suite(rounds, vseed);
      std::printf("gradient suite: %zu rounds, %.2fs\n", rounds, gr.seconds);
      for (const auto& c : gr.checks) std::printf("  %-24s max rel error %.3e\n", c.name.c_str(), c.rel_error);
      const bool ok = id.max_bce_split < 1e-8 && id.max_kmeans_graph < 1e-8 && id.max_combined < 1e-8 && gr.max_error() < 1e-5;
      std::printf("%s\n", ok ? "OK" : "FAILED");
      return ok ? 0 : 1;
    }
  } catch (const rgae::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
