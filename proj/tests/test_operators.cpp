#include <doctest.h>

#include <algorithm>
#include <set>

#include "rgae/errors.hpp"
#include "rgae/operators.hpp"
#include "support.hpp"

using namespace rgae;

namespace {

SoftAssignment soft(std::initializer_list<std::initializer_list<double>> rows) {
  return {DenseMatrix::from_rows(rows), AssignmentKind::student_t_p};
}

SoftAssignment random_soft(Rng& rng, std::size_t n, std::size_t k) {
  DenseMatrix m(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += m(i, j) = rng.uniform() + 1e-3;
    for (std::size_t j = 0; j < k; ++j) m(i, j) /= s;
  }
  return {m, AssignmentKind::student_t_p};
}

std::set<Edge> edge_set(const SelfSupervisionGraph& g) { return {g.edges.begin(), g.edges.end()}; }

}  // namespace

TEST_CASE("top_two") {
  const std::vector<double> a{0.2, 0.5, 0.3};
  CHECK(top_two(a) == std::pair{0.5, 0.3});
  const std::vector<double> c{0.5, 0.5};
  CHECK(top_two(c) == std::pair{0.5, 0.5});
  const std::vector<double> t{0.4, 0.4, 0.2};
  CHECK(top_two(t) == std::pair{0.4, 0.2});
}

TEST_CASE("xi: small examples") {
  const SoftAssignment p = soft({{0.9, 0.1}, {0.55, 0.45}, {0.2, 0.8}, {0.5, 0.5}});
  const DenseMatrix z(4, 2);
  const ReliableSet r = xi_select(z, p, nullptr, 0.6, 0.3);
  CHECK(r.omega == std::vector<std::size_t>{0, 2});
  CHECK(r.contains(0));
  CHECK_FALSE(r.contains(1));
  CHECK_FALSE(r.contains(99));

  // alpha2 defaults to alpha1 / 2
  const ReliableSet d = xi_select(z, p, nullptr, 0.5);
  CHECK(d.alpha2 == 0.25);
  CHECK(d.omega == std::vector<std::size_t>{0, 2});

  CHECK(xi_select(z, p, nullptr, 0.0, 0.0).size() == 4);
  CHECK(xi_select(z, p, nullptr, 1.0, 0.0).empty());

  CHECK_THROWS_AS(xi_select(DenseMatrix(2, 1), soft({{1.0}, {1.0}}), nullptr, 0.5), RangeError);
  CHECK_THROWS_AS(xi_select(z, p, nullptr, 1.5), RangeError);
  CHECK_THROWS_AS(xi_select(z, one_hot({0, 1, 0, 1}, 2), nullptr, 0.5), StateError);
}

TEST_CASE("xi agrees with a direct scan and is monotone in both thresholds") {
  Rng rng(21);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 40, k = 2 + rng.below(4);
    const SoftAssignment p = random_soft(rng, n, k);
    const double a1 = rng.uniform(), a2 = rng.uniform(0.0, 0.5);
    const ReliableSet r = xi_select(DenseMatrix(n, 1), p, nullptr, a1, a2);
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(p.matrix.row(i).begin(), p.matrix.row(i).end());
      std::sort(row.rbegin(), row.rend());
      if (row[0] >= a1 && row[0] - row[1] >= a2) expect.push_back(i);
    }
    CHECK(r.omega == expect);

    const ReliableSet tighter = xi_select(DenseMatrix(n, 1), p, nullptr, std::min(1.0, a1 + 0.1), a2 + 0.05);
    for (std::size_t i : tighter.omega) CHECK(r.contains(i));
  }
}

TEST_CASE("xi on hard assignments scores with the Gaussian model") {
  Rng rng(22);
  const DenseMatrix z = test::random_matrix(rng, 30, 3);
  const KMeansResult km = kmeans(z, 3, 0);
  const SoftAssignment hard = one_hot(km.labels, 3);
  const ReliableSet r = xi_select(z, hard, &km.model, 0.7, 0.35);
  const SoftAssignment g = gaussian_soft_assign(z, km.model);
  const ReliableSet direct = xi_select(z, g, nullptr, 0.7, 0.35);
  CHECK(r.omega == direct.omega);
  CHECK(r.lambda1 == direct.lambda1);
}

TEST_CASE("centroid nodes") {
  const DenseMatrix z = DenseMatrix::from_rows({{0.0}, {1.0}, {2.0}, {10.0}, {11.0}, {50.0}});
  const Labels l{0, 0, 0, 1, 1, 1};
  const CentroidNodes all = compute_centroid_nodes(z, l, all_nodes(6), 2);
  CHECK(all.pi == std::vector<std::size_t>{1, 4});  // mean 1 -> node 1; mean 23.67 -> node 4

  // restricted to Omega; ties go to the lower index
  const CentroidNodes part = compute_centroid_nodes(z, l, reliable_from(6, {0, 2, 3, 4}), 2);
  CHECK(part.pi == std::vector<std::size_t>{0, 3});

  const CentroidNodes missing = compute_centroid_nodes(z, l, reliable_from(6, {3, 4}), 2);
  CHECK(missing.pi[0] == kAbsentCentroid);
  CHECK(missing.pi[1] == 3);

  CHECK_THROWS_AS(compute_centroid_nodes(z, l, reliable_from(6, {}), 2), OperatorError);
  CHECK_THROWS_AS(compute_centroid_nodes(z, Labels{0, 0}, all_nodes(6), 2), ShapeError);
  CHECK_THROWS_AS(reliable_from(3, {5}), RangeError);
}

TEST_CASE("upsilon: hand-worked six-node instance") {
  const std::vector<Edge> edges{{0, 1}, {1, 3}, {2, 5}, {4, 5}};
  const Labels l{0, 0, 0, 1, 1, 1};
  const CentroidNodes pi{{0, 3}};
  const SelfSupervisionGraph g = upsilon_transform(6, edges, l, all_nodes(6), pi);
  CHECK(g.edges == std::vector<Edge>{{0, 1}, {0, 2}, {3, 4}, {3, 5}, {4, 5}});
  CHECK(g.origin == std::vector<EdgeOrigin>{EdgeOrigin::original, EdgeOrigin::added, EdgeOrigin::added,
                                            EdgeOrigin::added, EdgeOrigin::original});
  CHECK(g.deleted == std::vector<Edge>{{1, 3}, {2, 5}});
  CHECK(g.n_added() == 3);
  CHECK(g.adjacency.is_symmetric());
  CHECK(g.adjacency.sum() == 10.0);

  const SelfSupervisionGraph add_only = upsilon_transform(6, edges, l, all_nodes(6), pi, {true, false});
  CHECK(add_only.deleted.empty());
  CHECK(add_only.edges.size() == 7);
  const SelfSupervisionGraph drop_only = upsilon_transform(6, edges, l, all_nodes(6), pi, {false, true});
  CHECK(drop_only.n_added() == 0);
  CHECK(drop_only.edges == std::vector<Edge>{{0, 1}, {4, 5}});

  // node 2 outside Omega: its cross edge survives and it gets no centroid link
  const SelfSupervisionGraph partial = upsilon_transform(6, edges, l, reliable_from(6, {0, 1, 3, 4, 5}), pi);
  CHECK(partial.edges == std::vector<Edge>{{0, 1}, {2, 5}, {3, 4}, {3, 5}, {4, 5}});

  // a centroid node whose label disagrees gets no links
  const SelfSupervisionGraph off = upsilon_transform(6, edges, l, all_nodes(6), CentroidNodes{{3, 3}});
  for (std::size_t k = 0; k < off.edges.size(); ++k)
    if (off.origin[k] == EdgeOrigin::added) CHECK(l[off.edges[k].u] == 1);

  CHECK_THROWS_AS(upsilon_transform(5, edges, l, all_nodes(6), pi), ShapeError);
}

TEST_CASE("upsilon properties on random instances") {
  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 5 + rng.below(30), k = 2 + rng.below(3);
    const std::vector<Edge> edges = test::random_edges(rng, n, 0.2);
    const Labels l = test::random_labels(rng, n, k);
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < n; ++i)
      if (rng.uniform() < 0.6) nodes.push_back(i);
    if (nodes.empty()) nodes.push_back(0);
    const ReliableSet omega = reliable_from(n, nodes);
    const DenseMatrix z = test::random_matrix(rng, n, 2);
    const CentroidNodes pi = compute_centroid_nodes(z, l, omega, k);
    const SelfSupervisionGraph g = upsilon_transform(n, edges, l, omega, pi);

    CHECK(g.adjacency.is_symmetric());
    for (std::size_t i = 0; i < n; ++i) CHECK(g.adjacency.at(i, i) == 0.0);
    for (const Edge& e : g.deleted) {
      CHECK(omega.contains(e.u));
      CHECK(omega.contains(e.v));
      CHECK(l[e.u] != l[e.v]);
    }
    for (std::size_t j = 0; j < g.edges.size(); ++j)
      if (g.origin[j] == EdgeOrigin::added) {
        const Edge e = g.edges[j];
        CHECK(l[e.u] == l[e.v]);
        CHECK((e.u == pi.pi[l[e.u]] || e.v == pi.pi[l[e.v]]));
      }
    // original = kept originals + deleted
    std::size_t kept = 0;
    for (EdgeOrigin o : g.origin) kept += o == EdgeOrigin::original;
    CHECK(kept + g.deleted.size() == edges.size());

    // rebuilding from the original edges is idempotent
    CHECK(edge_set(upsilon_transform(n, edges, l, omega, pi)) == edge_set(g));
  }
}

TEST_CASE("unchanged graph and supervised target") {
  const AttributedGraph g(4, {{0, 1}, {1, 2}, {2, 3}}, DenseMatrix(4, 1, 1.0), Labels{0, 0, 1, 1}, 2);
  const SelfSupervisionGraph u = unchanged_graph(g);
  CHECK(u.adjacency == g.adjacency());
  CHECK(u.n_added() == 0);
  CHECK(u.deleted.empty());

  const DenseMatrix z = DenseMatrix::from_rows({{0.0}, {0.1}, {5.0}, {5.1}});
  // prediction with swapped names: the mapped truth still separates {0,1} and {2,3}
  const SelfSupervisionGraph s = build_supervised_target(g, {0, 0, 1, 1}, {1, 1, 0, 0}, z);
  CHECK(s.deleted == std::vector<Edge>{{1, 2}});
  CHECK(edge_set(s) == std::set<Edge>{{0, 1}, {2, 3}});
}

TEST_CASE("self-supervision graph save and load") {
  const SelfSupervisionGraph g =
      upsilon_transform(6, {{0, 1}, {1, 3}, {2, 5}, {4, 5}}, {0, 0, 0, 1, 1, 1}, all_nodes(6), CentroidNodes{{0, 3}});
  const auto path = test::temp_dir("ssg") / "graph.tsv";
  g.save(path);
  CHECK(std::filesystem::exists(path.string() + ".deleted"));
  const SelfSupervisionGraph back = SelfSupervisionGraph::load(path, 6);
  CHECK(back.edges == g.edges);
  CHECK(back.origin == g.origin);
  CHECK(back.deleted == g.deleted);
  CHECK(back.adjacency == g.adjacency);
  CHECK_THROWS_AS(SelfSupervisionGraph::load(path, 3), FormatError);
}
