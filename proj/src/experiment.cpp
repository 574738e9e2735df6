#include "rgae/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "rgae/errors.hpp"

namespace rgae {

namespace fs = std::filesystem;

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

namespace {

std::uint64_t fnv(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
T get_as(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["dataset"] = dataset.string();
  j["model"] = to_string(model);
  j["rethink"] = train.rethink;
  j["gamma"] = train.gamma;
  j["lr"] = train.learning_rate;
  j["pretrain_epochs"] = train.pretrain_epochs;
  j["train_epochs"] = train.train_epochs;
  j["alpha1"] = train.alpha1;
  j["alpha2"] = train.alpha2 ? nlohmann::json(*train.alpha2) : nlohmann::json(nullptr);
  j["m1"] = train.m1;
  j["m2"] = train.m2;
  j["convergence_fraction"] = train.convergence_fraction;
  j["ablation"] = train.ablation.to_string();
  j["first_group_clustering"] = train.first_group_clustering;
  j["diagnostics_stride"] = train.diagnostics_stride;
  j["kmeans_restarts"] = train.kmeans_restarts;
  j["seeds"] = seeds;
  j["perturbation"] = perturbation ? nlohmann::json(perturbation->to_string()) : nlohmann::json(nullptr);
  j["perturbation_seed"] = perturbation_seed;
  j["row_normalize"] = row_normalize;
  j["out"] = out_dir.string();
  j["pretrain_ckpt"] = pretrain_ckpt ? nlohmann::json(pretrain_ckpt->string()) : nlohmann::json(nullptr);
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "dataset") c.dataset = get_as<std::string>(v, key);
    else if (key == "model") c.model = parse_arch(get_as<std::string>(v, key));
    else if (key == "rethink") c.train.rethink = get_as<bool>(v, key);
    else if (key == "gamma") c.train.gamma = get_as<double>(v, key);
    else if (key == "lr") c.train.learning_rate = get_as<double>(v, key);
    else if (key == "pretrain_epochs") c.train.pretrain_epochs = get_as<std::size_t>(v, key);
    else if (key == "train_epochs") c.train.train_epochs = get_as<std::size_t>(v, key);
    else if (key == "alpha1") c.train.alpha1 = get_as<double>(v, key);
    else if (key == "alpha2") c.train.alpha2 = v.is_null() ? std::nullopt : std::optional<double>(get_as<double>(v, key));
    else if (key == "m1") c.train.m1 = get_as<std::size_t>(v, key);
    else if (key == "m2") c.train.m2 = get_as<std::size_t>(v, key);
    else if (key == "convergence_fraction") c.train.convergence_fraction = get_as<double>(v, key);
    else if (key == "ablation") c.train.ablation = AblationSpec::parse(get_as<std::string>(v, key));
    else if (key == "first_group_clustering") c.train.first_group_clustering = get_as<bool>(v, key);
    else if (key == "diagnostics_stride") c.train.diagnostics_stride = get_as<std::size_t>(v, key);
    else if (key == "kmeans_restarts") c.train.kmeans_restarts = get_as<std::size_t>(v, key);
    else if (key == "seeds") c.seeds = get_as<std::vector<std::uint64_t>>(v, key);
    else if (key == "perturbation")
      c.perturbation = v.is_null() ? std::nullopt : std::optional<PerturbSpec>(PerturbSpec::parse(get_as<std::string>(v, key)));
    else if (key == "perturbation_seed") c.perturbation_seed = get_as<std::uint64_t>(v, key);
    else if (key == "row_normalize") c.row_normalize = get_as<bool>(v, key);
    else if (key == "out") c.out_dir = get_as<std::string>(v, key);
    else if (key == "pretrain_ckpt")
      c.pretrain_ckpt = v.is_null() ? std::nullopt : std::optional<fs::path>(get_as<std::string>(v, key));
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::uint64_t ExperimentConfig::hash() const {
  nlohmann::json j = to_json();
  j.erase("out");
  j.erase("pretrain_ckpt");
  return fnv(j.dump());
}

std::string ExperimentConfig::variant_name() const { return (train.rethink ? "r-" : "") + to_string(model); }

fs::path ExperimentConfig::checkpoint_dir() const { return pretrain_ckpt ? *pretrain_ckpt : out_dir / "checkpoints"; }

void ExperimentConfig::validate() const {
  train.validate();
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds must be distinct");
}

nlohmann::json RunResult::to_json() const {
  auto triple = [](const std::optional<MetricTriple>& t) -> nlohmann::json {
    if (!t) return nullptr;
    return {{"acc", t->acc}, {"nmi", t->nmi}, {"ari", t->ari}};
  };
  nlohmann::json j;
  j["schema"] = "rgae-results/1";
  j["variant"] = variant;
  j["ablation"] = ablation;
  j["perturbation"] = perturbation.empty() ? nlohmann::json(nullptr) : nlohmann::json(perturbation);
  j["perturbation_hash"] = perturbation_hash;
  j["best"] = triple(best);
  j["mean"] = triple(mean);
  j["std"] = triple(stddev);
  j["mean_wall_time_s"] = mean_wall_time_s;
  j["seeds"] = nlohmann::json::array();
  for (const SeedResult& s : seeds) {
    nlohmann::json r;
    r["seed"] = s.seed;
    if (s.scores) {
      r["acc"] = s.scores->acc;
      r["nmi"] = s.scores->nmi;
      r["ari"] = s.scores->ari;
    } else {
      r["acc"] = r["nmi"] = r["ari"] = nullptr;
    }
    r["wall_time_s"] = s.wall_time_s;
    r["stop_reason"] = s.stop_reason;
    r["epochs_run"] = s.epochs_run;
    r["final_omega_size"] = s.final_omega_size;
    r["omega_history"] = s.omega_history;
    r["pretrain_hash"] = s.pretrain_hash;
    r["pretrain_checkpoint"] = s.pretrain_checkpoint.string();
    r["checkpoint"] = s.checkpoint.string();
    r["trace_csv"] = s.trace_csv.string();
    r["graph_edges"] = s.graph_edges.string();
    j["seeds"].push_back(std::move(r));
  }
  return j;
}

void write_json_atomic(const nlohmann::json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

AttributedGraph prepare_graph(const ExperimentConfig& cfg) {
  AttributedGraph g = load_dataset(cfg.dataset);
  if (cfg.perturbation) g = perturb_graph(g, *cfg.perturbation, cfg.perturbation_seed);
  if (cfg.row_normalize) g = g.with_features(row_normalize(g.features()));
  return g;
}

GaeModel pretrained_model(const ExperimentConfig& cfg, const AttributedGraph& graph, const EncoderInput& input,
                          std::uint64_t seed, fs::path* checkpoint_path) {
  std::ostringstream key;
  key << hex64(content_hash(graph)) << '|' << to_string(cfg.model) << '|' << seed << '|' << cfg.train.pretrain_epochs
      << '|' << std::setprecision(17) << cfg.train.learning_rate;
  const fs::path path =
      cfg.checkpoint_dir() / ("pretrain-" + to_string(cfg.model) + "-s" + std::to_string(seed) + "-" +
                              hex64(fnv(key.str())) + ".json");
  if (checkpoint_path) *checkpoint_path = path;
  if (fs::exists(path)) {
    GaeModel m = GaeModel::load(path);
    if (m.arch() != cfg.model || m.input_dim() != graph.features().cols())
      throw StateError("checkpoint " + path.string() + " does not fit this dataset");
    return m;
  }
  AdamConfig adam;
  adam.learning_rate = cfg.train.learning_rate;
  GaeModel m(cfg.model, graph.features().cols(), seed, adam);
  TrainConfig t = cfg.train;
  t.seed = seed;
  pretrain(m, graph, input, t);
  m.save(path);
  return m;
}

RunResult run(const ExperimentConfig& cfg) { return run(cfg, prepare_graph(cfg)); }

RunResult run(const ExperimentConfig& cfg, const AttributedGraph& graph) {
  cfg.validate();
  const EncoderInput input = EncoderInput::from_graph(graph);
  RunResult result;
  result.variant = cfg.variant_name();
  result.ablation = cfg.train.ablation.to_string();
  result.perturbation = cfg.perturbation ? cfg.perturbation->to_string() : "";
  result.perturbation_hash = hex64(content_hash(graph));

  for (std::uint64_t seed : cfg.seeds) {
    SeedResult s;
    s.seed = seed;
    GaeModel model = pretrained_model(cfg, graph, input, seed, &s.pretrain_checkpoint);
    s.pretrain_hash = hex64(weights_hash(model));
    TrainConfig t = cfg.train;
    t.seed = seed;
    TrainOutcome o = train_joint(model, graph, input, t);

    const fs::path dir = cfg.out_dir / ("seed-" + std::to_string(seed));
    s.scores = o.final_scores;
    s.wall_time_s = o.wall_time;
    s.stop_reason = o.stop_reason;
    s.epochs_run = o.epochs_run;
    s.final_omega_size = o.final_omega.size();
    s.omega_history = o.omega_history;
    if (!o.trace.records.empty()) s.first_record = o.trace.records.front();
    s.trace_csv = dir / "trace.csv";
    s.graph_edges = dir / "graph.tsv";
    s.checkpoint = dir / "model.json";
    write_trace_csv(o.trace, s.trace_csv);
    nlohmann::json summary = trace_summary(o.trace);
    summary["stop_reason"] = o.stop_reason;
    summary["epochs_run"] = o.epochs_run;
    write_json_atomic(summary, dir / "trace_summary.json");
    o.final_graph.save(s.graph_edges);
    model.save(s.checkpoint);
    result.seeds.push_back(std::move(s));
  }

  double time_sum = 0.0;
  for (const auto& s : result.seeds) time_sum += s.wall_time_s;
  result.mean_wall_time_s = time_sum / static_cast<double>(result.seeds.size());
  if (graph.has_labels()) {
    MetricTriple best{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity()};
    MetricTriple mean, var;
    const double m = static_cast<double>(result.seeds.size());
    for (const auto& s : result.seeds) {
      best.acc = std::max(best.acc, s.scores->acc);
      best.nmi = std::max(best.nmi, s.scores->nmi);
      best.ari = std::max(best.ari, s.scores->ari);
      mean.acc += s.scores->acc / m;
      mean.nmi += s.scores->nmi / m;
      mean.ari += s.scores->ari / m;
    }
    for (const auto& s : result.seeds) {
      var.acc += std::pow(s.scores->acc - mean.acc, 2) / m;
      var.nmi += std::pow(s.scores->nmi - mean.nmi, 2) / m;
      var.ari += std::pow(s.scores->ari - mean.ari, 2) / m;
    }
    result.best = best;
    result.mean = mean;
    result.stddev = MetricTriple{std::sqrt(var.acc), std::sqrt(var.nmi), std::sqrt(var.ari)};
  }

  nlohmann::json j = result.to_json();
  j["config"] = cfg.to_json();
  j["config_hash"] = hex64(cfg.hash());
  j["dataset_name"] = graph.name();
  j["n_nodes"] = graph.n_nodes();
  j["k_clusters"] = graph.k_clusters();
  write_json_atomic(j, cfg.out_dir / "results.json");
  return result;
}

namespace {

std::string path_safe(std::string s) {
  for (char& c : s)
    if (c == ':' || c == '/') c = '_';
  return s;
}

}  // namespace

std::vector<RunResult> run_ablation_grid(const ExperimentConfig& base, const std::vector<AblationSpec>& axes) {
  const AttributedGraph graph = prepare_graph(base);
  std::vector<RunResult> rows;
  nlohmann::json table = nlohmann::json::array();
  for (const AblationSpec& axis : axes) {
    ExperimentConfig c = base;
    c.train.rethink = true;
    c.train.ablation = axis;
    c.pretrain_ckpt = base.checkpoint_dir();
    c.out_dir = base.out_dir / ("ablation-" + path_safe(axis.to_string()));
    rows.push_back(run(c, graph));
    table.push_back(rows.back().to_json());
  }
  write_json_atomic({{"schema", "rgae-grid/1"}, {"mode", "ablate"}, {"rows", table}}, base.out_dir / "ablation.json");
  return rows;
}

std::vector<RunResult> run_robustness(const ExperimentConfig& base, const std::vector<PerturbSpec>& grid) {
  std::vector<RunResult> rows;
  nlohmann::json table = nlohmann::json::array();
  for (const PerturbSpec& spec : grid) {
    ExperimentConfig c = base;
    c.perturbation = spec;
    c.pretrain_ckpt = base.checkpoint_dir();
    const AttributedGraph graph = prepare_graph(c);
    for (bool rethink : {false, true}) {
      ExperimentConfig v = c;
      v.train.rethink = rethink;
      if (!rethink) v.train.ablation = {};
      v.out_dir = base.out_dir / ("robust-" + path_safe(spec.to_string())) / v.variant_name();
      rows.push_back(run(v, graph));
      table.push_back(rows.back().to_json());
    }
  }
  write_json_atomic({{"schema", "rgae-grid/1"}, {"mode", "robustness"}, {"rows", table}},
                    base.out_dir / "robustness.json");
  return rows;
}

void export_embeddings(const fs::path& checkpoint, const AttributedGraph& graph, const fs::path& out) {
  const GaeModel model = GaeModel::load(checkpoint);
  if (model.input_dim() != graph.features().cols())
    throw StateError("export_embeddings: checkpoint expects " + std::to_string(model.input_dim()) +
                     " features, graph has " + std::to_string(graph.features().cols()));
  const DenseMatrix z = model.embed(EncoderInput::from_graph(graph));
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  fs::path tmp = out;
  tmp += ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw FormatError("cannot write " + tmp.string());
    f.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      for (std::size_t t = 0; t < z.cols(); ++t) f << (t ? "\t" : "") << z(i, t);
      if (graph.has_labels()) f << '\t' << (*graph.labels())[i];
      f << '\n';
    }
  }
  fs::rename(tmp, out);
}

DenseMatrix read_embeddings(const fs::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<double> data;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    for (std::size_t t = 0; t < dim; ++t) {
      double v = 0.0;
      if (!(ss >> v)) throw FormatError(path.string() + ": short row " + std::to_string(rows + 1));
      data.push_back(v);
    }
    ++rows;
  }
  return DenseMatrix(rows, dim, std::move(data));
}

}  // namespace rgae
