#include "rgae/operators.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "rgae/errors.hpp"

namespace rgae {

ReliableSet all_nodes(std::size_t n) {
  ReliableSet r;
  r.omega.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.omega[i] = i;
  r.member.assign(n, true);
  return r;
}

ReliableSet reliable_from(std::size_t n, std::vector<std::size_t> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  ReliableSet r;
  r.member.assign(n, false);
  for (std::size_t i : nodes) {
    if (i >= n) throw RangeError("reliable_from: node index out of range");
    r.member[i] = true;
  }
  r.omega = std::move(nodes);
  return r;
}

std::pair<double, double> top_two(std::span<const double> row) {
  double l1 = row.empty() ? 0.0 : row[0];
  for (double v : row) l1 = std::max(l1, v);
  bool found = false;
  double l2 = 0.0;
  for (double v : row)
    if (v < l1 && (!found || v > l2)) {
      l2 = v;
      found = true;
    }
  return {l1, found ? l2 : l1};
}

namespace {

bool is_hard(const SoftAssignment& p) {
  if (p.kind == AssignmentKind::hard_onehot) return true;
  for (double v : p.matrix.values())
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

}  // namespace

ReliableSet xi_select(const DenseMatrix& z, const SoftAssignment& p, const ClusterModel* model, double alpha1,
                      std::optional<double> alpha2) {
  if (p.n_clusters() < 2) throw RangeError("xi_select: needs at least two clusters");
  if (alpha1 < 0.0 || alpha1 > 1.0) throw RangeError("xi_select: alpha1 outside [0, 1]");
  const double a2 = alpha2.value_or(alpha1 / 2.0);
  DenseMatrix prime_storage;
  const DenseMatrix* prime = &p.matrix;
  if (is_hard(p)) {
    if (model == nullptr) throw StateError("xi_select: hard assignments need a cluster model");
    prime_storage = gaussian_soft_assign(z, *model).matrix;
    prime = &prime_storage;
  }
  const std::size_t n = prime->rows();
  ReliableSet r;
  r.alpha1 = alpha1;
  r.alpha2 = a2;
  r.lambda1.resize(n);
  r.lambda2.resize(n);
  r.member.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [l1, l2] = top_two(prime->row(i));
    r.lambda1[i] = l1;
    r.lambda2[i] = l2;
    if (l1 >= alpha1 && l1 - l2 >= a2) {
      r.member[i] = true;
      r.omega.push_back(i);
    }
  }
  return r;
}

CentroidNodes compute_centroid_nodes(const DenseMatrix& z, const Labels& labels, const ReliableSet& omega,
                                     std::size_t k) {
  if (omega.empty()) throw OperatorError("compute_centroid_nodes: empty reliable set");
  if (labels.size() != z.rows()) throw ShapeError("compute_centroid_nodes: label count != rows");
  const std::size_t d = z.cols();
  DenseMatrix mean(k, d);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i : omega.omega) {
    const auto c = static_cast<std::size_t>(labels[i]);
    if (labels[i] < 0 || c >= k) throw RangeError("compute_centroid_nodes: label out of range");
    ++counts[c];
    for (std::size_t t = 0; t < d; ++t) mean(c, t) += z(i, t);
  }
  CentroidNodes out;
  out.pi.assign(k, kAbsentCentroid);
  bool any = false;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t t = 0; t < d; ++t) mean(c, t) /= static_cast<double>(counts[c]);
    double best = 0.0;
    for (std::size_t i : omega.omega) {
      const double dist = squared_distance(z.row(i), mean.row(c));
      if (out.pi[c] == kAbsentCentroid || dist < best) {
        best = dist;
        out.pi[c] = i;
      }
    }
    any = true;
  }
  if (!any) throw OperatorError("compute_centroid_nodes: no cluster has a reliable member");
  return out;
}

std::size_t SelfSupervisionGraph::n_added() const {
  return static_cast<std::size_t>(std::count(origin.begin(), origin.end(), EdgeOrigin::added));
}

void SelfSupervisionGraph::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    for (std::size_t k = 0; k < edges.size(); ++k)
      out << edges[k].u << '\t' << edges[k].v << '\t' << static_cast<char>(origin[k]) << '\n';
  }
  std::filesystem::path side = path;
  side += ".deleted";
  std::ofstream out(side);
  if (!out) throw FormatError("cannot write " + side.string());
  for (const Edge& e : deleted) out << e.u << '\t' << e.v << '\n';
}

SelfSupervisionGraph SelfSupervisionGraph::load(const std::filesystem::path& path, std::size_t n_nodes) {
  SelfSupervisionGraph g;
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::size_t u = 0, v = 0;
    char tag = 0;
    if (!(ss >> u >> v >> tag) || (tag != 'O' && tag != 'A') || u >= n_nodes || v >= n_nodes || u == v)
      throw FormatError(path.string() + ": bad line '" + line + "'");
    g.edges.push_back({std::min(u, v), std::max(u, v)});
    g.origin.push_back(static_cast<EdgeOrigin>(tag));
  }
  std::filesystem::path side = path;
  side += ".deleted";
  std::ifstream din(side);
  while (din && std::getline(din, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::size_t u = 0, v = 0;
    if (!(ss >> u >> v)) throw FormatError(side.string() + ": bad line '" + line + "'");
    g.deleted.push_back({std::min(u, v), std::max(u, v)});
  }
  g.adjacency = adjacency_from_edges(n_nodes, g.edges);
  return g;
}

SelfSupervisionGraph unchanged_graph(std::size_t n_nodes, const std::vector<Edge>& edges) {
  SelfSupervisionGraph g;
  g.edges = edges;
  for (Edge& e : g.edges)
    if (e.u > e.v) std::swap(e.u, e.v);
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  g.origin.assign(g.edges.size(), EdgeOrigin::original);
  g.adjacency = adjacency_from_edges(n_nodes, g.edges);
  return g;
}

SelfSupervisionGraph unchanged_graph(const AttributedGraph& graph) {
  SelfSupervisionGraph g;
  g.edges = graph.edges();
  g.origin.assign(g.edges.size(), EdgeOrigin::original);
  g.adjacency = graph.adjacency();
  return g;
}

SelfSupervisionGraph upsilon_transform(std::size_t n_nodes, const std::vector<Edge>& edges, const Labels& labels,
                                       const ReliableSet& omega, const CentroidNodes& pi, UpsilonOptions opts) {
  if (labels.size() != n_nodes) throw ShapeError("upsilon_transform: label count != N");
  std::vector<std::vector<std::size_t>> neighbours(n_nodes);
  std::set<Edge> original;
  for (Edge e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u == e.v || e.v >= n_nodes) throw DataError("upsilon_transform: invalid edge");
    if (!original.insert(e).second) continue;
    neighbours[e.u].push_back(e.v);
    neighbours[e.v].push_back(e.u);
  }

  std::set<Edge> added;
  std::set<Edge> removed;
  for (std::size_t i : omega.omega) {
    const int k1 = labels[i];
    if (opts.add_edges && k1 >= 0 && static_cast<std::size_t>(k1) < pi.pi.size()) {
      const std::size_t j = pi.pi[static_cast<std::size_t>(k1)];
      if (j != kAbsentCentroid && j != i && labels[j] == k1) {
        const Edge e{std::min(i, j), std::max(i, j)};
        if (!original.contains(e)) added.insert(e);
      }
    }
    if (opts.drop_edges) {
      for (std::size_t l : neighbours[i])
        if (omega.contains(l) && labels[l] != k1) removed.insert({std::min(i, l), std::max(i, l)});
    }
  }

  SelfSupervisionGraph g;
  for (const Edge& e : original)
    if (!removed.contains(e)) {
      g.edges.push_back(e);
      g.origin.push_back(EdgeOrigin::original);
    }
  for (const Edge& e : added) {
    g.edges.push_back(e);
    g.origin.push_back(EdgeOrigin::added);
  }
  // keep edges sorted with provenance attached
  std::vector<std::size_t> order(g.edges.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return g.edges[a] < g.edges[b]; });
  std::vector<Edge> sorted_edges;
  std::vector<EdgeOrigin> sorted_origin;
  for (std::size_t k : order) {
    sorted_edges.push_back(g.edges[k]);
    sorted_origin.push_back(g.origin[k]);
  }
  g.edges = std::move(sorted_edges);
  g.origin = std::move(sorted_origin);
  g.deleted.assign(removed.begin(), removed.end());
  g.adjacency = adjacency_from_edges(n_nodes, g.edges);
  return g;
}

SelfSupervisionGraph upsilon_transform(const AttributedGraph& graph, const SoftAssignment& p,
                                       const ReliableSet& omega, const CentroidNodes& pi, UpsilonOptions opts) {
  return upsilon_transform(graph.n_nodes(), graph.edges(), p.labels(), omega, pi, opts);
}

SelfSupervisionGraph build_supervised_target(const AttributedGraph& graph, const Labels& truth, const Labels& pred,
                                             const DenseMatrix& z) {
  const std::size_t k = graph.k_clusters();
  const Labels mapped = mapped_truth(truth, pred, k).labels();
  const ReliableSet everyone = all_nodes(graph.n_nodes());
  const CentroidNodes pi = compute_centroid_nodes(z, mapped, everyone, k);
  return upsilon_transform(graph.n_nodes(), graph.edges(), mapped, everyone, pi);
}

}  // namespace rgae
