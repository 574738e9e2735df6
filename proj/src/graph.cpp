#include "rgae/graph.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "rgae/errors.hpp"
#include "rgae/rng.hpp"

namespace rgae {

namespace fs = std::filesystem;

AttributedGraph::AttributedGraph(std::size_t n_nodes, std::vector<Edge> edges, DenseMatrix features,
                                 std::optional<Labels> labels, std::size_t k_clusters, std::string name)
    : n_nodes_(n_nodes),
      features_(std::move(features)),
      labels_(std::move(labels)),
      k_clusters_(k_clusters),
      name_(std::move(name)) {
  for (Edge& e : edges) {
    if (e.u >= n_nodes_ || e.v >= n_nodes_) throw DataError("AttributedGraph: edge endpoint out of range");
    if (e.u == e.v) throw DataError("AttributedGraph: self-loop");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  if (features_.rows() != n_nodes_) throw DataError("AttributedGraph: feature rows != n_nodes");
  if (!features_.all_finite()) throw DataError("AttributedGraph: non-finite features");
  if (labels_) {
    if (labels_->size() != n_nodes_) throw DataError("AttributedGraph: label count != n_nodes");
    for (int l : *labels_)
      if (l < 0 || static_cast<std::size_t>(l) >= k_clusters_)
        throw DataError("AttributedGraph: label out of range");
  }
  adjacency_ = adjacency_from_edges(n_nodes_, edges_);
}

std::vector<std::size_t> AttributedGraph::degrees() const {
  std::vector<std::size_t> deg(n_nodes_, 0);
  for (std::size_t i = 0; i < n_nodes_; ++i) deg[i] = adjacency_.row_nnz(i);
  return deg;
}

AttributedGraph AttributedGraph::with_features(DenseMatrix features) const {
  return AttributedGraph(n_nodes_, edges_, std::move(features), labels_, k_clusters_, name_);
}

AttributedGraph AttributedGraph::with_edges(std::vector<Edge> edges) const {
  return AttributedGraph(n_nodes_, std::move(edges), features_, labels_, k_clusters_, name_);
}

SparseMatrix adjacency_from_edges(std::size_t n_nodes, const std::vector<Edge>& edges) {
  std::vector<Triplet> t;
  t.reserve(2 * edges.size());
  for (const Edge& e : edges) {
    t.push_back({e.u, e.v, 1.0});
    t.push_back({e.v, e.u, 1.0});
  }
  SparseMatrix a = SparseMatrix::from_triplets(n_nodes, n_nodes, std::move(t));
  // duplicates in the input would have been summed; clamp back to binary
  std::vector<double> vals(a.values().begin(), a.values().end());
  for (double& v : vals) v = 1.0;
  return SparseMatrix(a.rows(), a.cols(), {a.row_ptr().begin(), a.row_ptr().end()},
                      {a.col_idx().begin(), a.col_idx().end()}, std::move(vals));
}

NormalizedAdjacency normalize_adjacency(const SparseMatrix& adjacency, AdjacencyMode mode) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("normalize_adjacency: matrix must be square");
  std::vector<Triplet> t;
  t.reserve(adjacency.nnz() + n);
  for (std::size_t r = 0; r < n; ++r) {
    auto idx = adjacency.row_indices(r);
    auto val = adjacency.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k)
      if (idx[k] != r) t.push_back({r, idx[k], val[k]});
    if (mode == AdjacencyMode::propagation) t.push_back({r, r, 1.0});
  }
  SparseMatrix base = SparseMatrix::from_triplets(n, n, std::move(t));
  const std::vector<double> deg = base.row_sums();
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (deg[i] > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);

  std::vector<double> vals(base.values().begin(), base.values().end());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = base.row_ptr()[r]; k < base.row_ptr()[r + 1]; ++k)
      vals[k] *= inv_sqrt[r] * inv_sqrt[base.col_idx()[k]];
  return {SparseMatrix(n, n, {base.row_ptr().begin(), base.row_ptr().end()},
                       {base.col_idx().begin(), base.col_idx().end()}, std::move(vals)),
          mode};
}

NormalizedAdjacency normalize_adjacency(const AttributedGraph& graph, AdjacencyMode mode) {
  return normalize_adjacency(graph.adjacency(), mode);
}

DenseMatrix degree_onehot_features(std::size_t n_nodes, const std::vector<Edge>& edges) {
  std::vector<std::size_t> deg(n_nodes, 0);
  std::set<Edge> seen;
  for (Edge e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u == e.v || !seen.insert(e).second) continue;
    ++deg[e.u];
    ++deg[e.v];
  }
  std::vector<std::size_t> distinct(deg);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  DenseMatrix x(n_nodes, distinct.size());
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const auto bin = std::lower_bound(distinct.begin(), distinct.end(), deg[i]) - distinct.begin();
    x(i, static_cast<std::size_t>(bin)) = 1.0;
  }
  return x;
}

DenseMatrix degree_onehot_features(const AttributedGraph& graph) {
  return degree_onehot_features(graph.n_nodes(), graph.edges());
}

DenseMatrix row_normalize(const DenseMatrix& features) {
  DenseMatrix out = features;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double sq = 0.0;
    for (double v : row) {
      if (std::isnan(v)) throw DataError("row_normalize: NaN in features");
      sq += v * v;
    }
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : row) v *= inv;
  }
  return out;
}

// ---- dataset IO ----------------------------------------------------------

namespace {

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

long long parse_int(const std::string& tok, const fs::path& file, std::size_t line_no) {
  long long v = 0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw FormatError(file.string() + ":" + std::to_string(line_no) + ": expected integer, got '" + tok + "'");
  return v;
}

std::ifstream open_or_throw(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open " + file.string());
  return in;
}

}  // namespace

AttributedGraph load_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  nlohmann::json meta;
  try {
    auto in = open_or_throw(meta_path);
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(meta_path.string() + ": " + e.what());
  }
  if (!meta.contains("n_nodes") || !meta.contains("k_clusters"))
    throw FormatError(meta_path.string() + ": n_nodes and k_clusters are required");
  const auto n = meta.at("n_nodes").get<long long>();
  const auto k = meta.at("k_clusters").get<long long>();
  if (n < 0 || k < 0) throw FormatError(meta_path.string() + ": negative size");
  const std::string name = meta.value("dataset_name", dir.filename().string());
  const auto n_nodes = static_cast<std::size_t>(n);

  std::vector<Edge> edges;
  {
    const fs::path file = dir / "edges.tsv";
    auto in = open_or_throw(file);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (blank(line)) continue;
      std::istringstream ss(line);
      std::string a, b, extra;
      if (!(ss >> a >> b) || (ss >> extra))
        throw FormatError(file.string() + ":" + std::to_string(line_no) + ": expected 'u v'");
      const long long u = parse_int(a, file, line_no);
      const long long v = parse_int(b, file, line_no);
      if (u < 0 || v < 0 || u >= n || v >= n)
        throw FormatError(file.string() + ":" + std::to_string(line_no) + ": node index out of range");
      if (u == v) throw FormatError(file.string() + ":" + std::to_string(line_no) + ": self-loop");
      edges.push_back({static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
    }
  }

  DenseMatrix features;
  const fs::path feat_path = dir / "features.tsv";
  if (fs::exists(feat_path)) {
    auto in = open_or_throw(feat_path);
    std::vector<double> data;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (blank(line)) continue;
      std::istringstream ss(line);
      std::size_t c = 0;
      std::string tok;
      while (ss >> tok) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
          throw FormatError(feat_path.string() + ":" + std::to_string(rows + 1) + ": bad number '" + tok + "'");
        data.push_back(v);
        ++c;
      }
      if (rows == 0) cols = c;
      if (c != cols) throw FormatError(feat_path.string() + ": ragged feature rows");
      ++rows;
    }
    if (rows != n_nodes) throw FormatError(feat_path.string() + ": expected one row per node");
    features = DenseMatrix(rows, cols, std::move(data));
  } else {
    features = degree_onehot_features(n_nodes, edges);
  }

  std::optional<Labels> labels;
  const fs::path label_path = dir / "labels.tsv";
  if (fs::exists(label_path)) {
    auto in = open_or_throw(label_path);
    Labels l;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (blank(line)) continue;
      std::istringstream ss(line);
      std::string tok;
      ss >> tok;
      const long long v = parse_int(tok, label_path, line_no);
      if (v < 0 || v >= k)
        throw FormatError(label_path.string() + ":" + std::to_string(line_no) + ": label out of range");
      l.push_back(static_cast<int>(v));
    }
    if (l.size() != n_nodes) throw FormatError(label_path.string() + ": expected one label per node");
    labels = std::move(l);
  }

  try {
    return AttributedGraph(n_nodes, std::move(edges), std::move(features), std::move(labels),
                           static_cast<std::size_t>(k), name);
  } catch (const DataError& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
}

void save_dataset(const AttributedGraph& graph, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.tsv");
    for (const Edge& e : graph.edges()) out << e.u << '\t' << e.v << '\n';
  }
  {
    std::ofstream out(dir / "features.tsv");
    out.precision(17);
    const DenseMatrix& x = graph.features();
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) {
        if (c) out << ' ';
        out << x(r, c);
      }
      out << '\n';
    }
  }
  if (graph.labels()) {
    std::ofstream out(dir / "labels.tsv");
    for (int l : *graph.labels()) out << l << '\n';
  }
  nlohmann::json meta = {{"n_nodes", graph.n_nodes()},
                         {"k_clusters", graph.k_clusters()},
                         {"dataset_name", graph.name()}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

// ---- perturbations -------------------------------------------------------

PerturbSpec PerturbSpec::parse(const std::string& text) {
  static const std::map<std::string, PerturbKind> kinds = {
      {"add_edges", PerturbKind::add_random_edges},
      {"drop_edges", PerturbKind::drop_random_edges},
      {"noise", PerturbKind::feature_gaussian_noise},
      {"drop_features", PerturbKind::drop_feature_columns},
  };
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("perturbation '" + text + "': expected kind:amount");
  const auto it = kinds.find(text.substr(0, colon));
  if (it == kinds.end()) throw ConfigError("perturbation '" + text + "': unknown kind");
  PerturbSpec spec;
  spec.kind = it->second;
  const std::string amount = text.substr(colon + 1);
  std::size_t used = 0;
  try {
    spec.amount = std::stod(amount, &used);
  } catch (const std::exception&) {
    throw ConfigError("perturbation '" + text + "': bad amount");
  }
  if (used != amount.size() || !std::isfinite(spec.amount) || spec.amount < 0.0)
    throw ConfigError("perturbation '" + text + "': bad amount");
  if (spec.kind != PerturbKind::feature_gaussian_noise && spec.amount != std::floor(spec.amount))
    throw ConfigError("perturbation '" + text + "': count must be an integer");
  return spec;
}

std::string PerturbSpec::to_string() const {
  std::ostringstream ss;
  switch (kind) {
    case PerturbKind::add_random_edges: ss << "add_edges:"; break;
    case PerturbKind::drop_random_edges: ss << "drop_edges:"; break;
    case PerturbKind::feature_gaussian_noise: ss << "noise:"; break;
    case PerturbKind::drop_feature_columns: ss << "drop_features:"; break;
  }
  ss << amount;
  return ss.str();
}

namespace {

std::size_t count_amount(double amount) {
  if (amount < 0.0 || amount != std::floor(amount)) throw RangeError("perturb_graph: count must be a non-negative integer");
  return static_cast<std::size_t>(amount);
}

/// First m entries of a Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

}  // namespace

AttributedGraph perturb_graph(const AttributedGraph& graph, const PerturbSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = graph.n_nodes();
  switch (spec.kind) {
    case PerturbKind::add_random_edges: {
      const std::size_t m = count_amount(spec.amount);
      const std::size_t all_pairs = n < 2 ? 0 : n * (n - 1) / 2;
      const std::size_t candidates = all_pairs - graph.edges().size();
      if (m > candidates) throw RangeError("perturb_graph: not enough non-edges to add");
      std::vector<Edge> edges = graph.edges();
      if (m == 0) return graph;
      if (m * 2 > candidates) {
        // dense request: enumerate the non-edges and sample directly
        std::vector<Edge> non_edges;
        non_edges.reserve(candidates);
        for (std::size_t u = 0; u < n; ++u)
          for (std::size_t v = u + 1; v < n; ++v)
            if (!graph.adjacency().contains(u, v)) non_edges.push_back({u, v});
        for (std::size_t k : sample_without_replacement(non_edges.size(), m, rng)) edges.push_back(non_edges[k]);
      } else {
        std::set<Edge> chosen;
        while (chosen.size() < m) {
          std::size_t u = static_cast<std::size_t>(rng.below(n));
          std::size_t v = static_cast<std::size_t>(rng.below(n));
          if (u == v) continue;
          if (u > v) std::swap(u, v);
          if (graph.adjacency().contains(u, v)) continue;
          chosen.insert({u, v});
        }
        edges.insert(edges.end(), chosen.begin(), chosen.end());
      }
      return graph.with_edges(std::move(edges));
    }
    case PerturbKind::drop_random_edges: {
      const std::size_t m = count_amount(spec.amount);
      const auto& edges = graph.edges();
      if (m > edges.size()) throw RangeError("perturb_graph: not enough edges to drop");
      if (m == 0) return graph;
      std::vector<bool> drop(edges.size(), false);
      for (std::size_t k : sample_without_replacement(edges.size(), m, rng)) drop[k] = true;
      std::vector<Edge> kept;
      kept.reserve(edges.size() - m);
      for (std::size_t k = 0; k < edges.size(); ++k)
        if (!drop[k]) kept.push_back(edges[k]);
      return graph.with_edges(std::move(kept));
    }
    case PerturbKind::feature_gaussian_noise: {
      if (!(spec.amount >= 0.0)) throw RangeError("perturb_graph: noise sigma must be >= 0");
      if (spec.amount == 0.0) return graph;
      DenseMatrix x = graph.features();
      for (double& v : x.values()) v += spec.amount * rng.normal();
      return graph.with_features(std::move(x));
    }
    case PerturbKind::drop_feature_columns: {
      const std::size_t m = count_amount(spec.amount);
      DenseMatrix x = graph.features();
      if (m > x.cols()) throw RangeError("perturb_graph: not enough feature columns to drop");
      if (m == 0) return graph;
      for (std::size_t c : sample_without_replacement(x.cols(), m, rng))
        for (std::size_t r = 0; r < x.rows(); ++r) x(r, c) = 0.0;
      return graph.with_features(std::move(x));
    }
  }
  throw ConfigError("perturb_graph: unknown perturbation kind");
}

namespace {
struct Fnv1a {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ULL;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
};
}  // namespace

std::uint64_t content_hash(const AttributedGraph& graph) {
  Fnv1a f;
  f.u64(graph.n_nodes());
  f.u64(graph.k_clusters());
  for (const Edge& e : graph.edges()) {
    f.u64(e.u);
    f.u64(e.v);
  }
  f.u64(graph.features().rows());
  f.u64(graph.features().cols());
  for (double v : graph.features().values()) f.u64(std::bit_cast<std::uint64_t>(v));
  if (graph.labels())
    for (int l : *graph.labels()) f.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(l)));
  return f.h;
}

}  // namespace rgae
