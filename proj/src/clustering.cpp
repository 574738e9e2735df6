#include "rgae/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rgae/errors.hpp"
#include "rgae/rng.hpp"

namespace rgae {

std::size_t row_argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

Labels argmax_labels(const DenseMatrix& p) {
  Labels out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) out[i] = static_cast<int>(row_argmax(p.row(i)));
  return out;
}

Labels SoftAssignment::labels() const { return argmax_labels(matrix); }

namespace {

std::size_t nearest_center(std::span<const double> z, const DenseMatrix& centers, double* dist_out) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(z, centers.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

DenseMatrix kmeanspp_seeds(const DenseMatrix& z, std::size_t k, Rng& rng) {
  const std::size_t n = z.rows();
  DenseMatrix centers(k, z.cols());
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  std::copy(z.row(first).begin(), z.row(first).end(), centers.row(0).begin());
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(z.row(i), centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = static_cast<std::size_t>(rng.below(n));
    } else {
      double r = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        r -= d2[i];
        if (r < 0.0) {
          pick = i;
          break;
        }
      }
    }
    std::copy(z.row(pick).begin(), z.row(pick).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(z.row(i), centers.row(c)));
  }
  return centers;
}

KMeansResult lloyd(const DenseMatrix& z, DenseMatrix centers, std::size_t max_iter) {
  const std::size_t n = z.rows();
  const std::size_t k = centers.rows();
  const std::size_t d = z.cols();
  Labels labels(n, -1);
  std::vector<double> dist(n);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = static_cast<int>(nearest_center(z.row(i), centers, &dist[i]));
      if (c != labels[i]) {
        labels[i] = c;
        changed = true;
      }
    }
    if (!changed) break;

    DenseMatrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(labels[i]);
      ++counts[c];
      auto row = z.row(i);
      auto s = sums.row(c);
      for (std::size_t t = 0; t < d; ++t) s[t] += row[t];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t t = 0; t < d; ++t) centers(c, t) = sums(c, t) / static_cast<double>(counts[c]);
        continue;
      }
      // empty cluster: move it onto the worst-fitted point
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i] && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      taken[far] = true;
      dist[far] = 0.0;
      std::copy(z.row(far).begin(), z.row(far).end(), centers.row(c).begin());
    }
  }
  KMeansResult res;
  res.labels = std::move(labels);
  for (std::size_t i = 0; i < n; ++i) {
    nearest_center(z.row(i), centers, &dist[i]);
    res.inertia += squared_distance(z.row(i), centers.row(static_cast<std::size_t>(res.labels[i])));
  }
  res.model = fit_cluster_model(z, res.labels, k);
  // keep the converged centres (identical for non-empty clusters)
  res.model.centers = std::move(centers);
  return res;
}

}  // namespace

KMeansResult kmeans(const DenseMatrix& z, std::size_t k, std::uint64_t seed, std::size_t max_iter,
                    std::size_t n_init) {
  if (k == 0) throw RangeError("kmeans: K must be positive");
  if (z.rows() < k) throw RangeError("kmeans: fewer points than clusters");
  Rng rng(seed);
  KMeansResult best;
  bool have = false;
  for (std::size_t run = 0; run < std::max<std::size_t>(n_init, 1); ++run) {
    KMeansResult r = lloyd(z, kmeanspp_seeds(z, k, rng), std::max<std::size_t>(max_iter, 1));
    if (!have || r.inertia < best.inertia) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

ClusterModel fit_cluster_model(const DenseMatrix& z, const Labels& labels, std::size_t k) {
  if (labels.size() != z.rows()) throw ShapeError("fit_cluster_model: label count != rows");
  const std::size_t d = z.cols();
  ClusterModel m{DenseMatrix(k, d), DenseMatrix(k, d, kVarianceFloor)};
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (labels[i] < 0) continue;
    const auto c = static_cast<std::size_t>(labels[i]);
    if (c >= k) throw RangeError("fit_cluster_model: label out of range");
    ++counts[c];
    for (std::size_t t = 0; t < d; ++t) m.centers(c, t) += z(i, t);
  }
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] > 0)
      for (std::size_t t = 0; t < d; ++t) m.centers(c, t) /= static_cast<double>(counts[c]);

  DenseMatrix ss(k, d);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (labels[i] < 0) continue;
    const auto c = static_cast<std::size_t>(labels[i]);
    for (std::size_t t = 0; t < d; ++t) {
      const double e = z(i, t) - m.centers(c, t);
      ss(c, t) += e * e;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] < 2) continue;
    for (std::size_t t = 0; t < d; ++t)
      m.variances(c, t) = std::max(kVarianceFloor, ss(c, t) / static_cast<double>(counts[c] - 1));
  }
  return m;
}

double kmeans_objective(const DenseMatrix& z, const Labels& labels, std::size_t k) {
  const ClusterModel m = fit_cluster_model(z, labels, k);
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i)
    if (labels[i] >= 0) total += squared_distance(z.row(i), m.centers.row(static_cast<std::size_t>(labels[i])));
  return total;
}

SoftAssignment gaussian_soft_assign(const DenseMatrix& z, const ClusterModel& model) {
  const std::size_t k = model.centers.rows();
  if (model.centers.cols() != z.cols() || model.variances.rows() != k || model.variances.cols() != z.cols())
    throw ShapeError("gaussian_soft_assign: model dimensions do not match Z");
  SoftAssignment p{DenseMatrix(z.rows(), k), AssignmentKind::gaussian_p_prime};
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto out = p.matrix.row(i);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      double q = 0.0;
      for (std::size_t t = 0; t < z.cols(); ++t) {
        const double e = z(i, t) - model.centers(c, t);
        q += e * e / std::max(model.variances(c, t), kVarianceFloor);
      }
      out[c] = -0.5 * q;
      top = std::max(top, out[c]);
    }
    double s = 0.0;
    for (double& v : out) {
      v = std::exp(v - top);
      s += v;
    }
    for (double& v : out) v /= s;
  }
  return p;
}

SoftAssignment student_t_assign(const DenseMatrix& z, const DenseMatrix& centers) {
  if (centers.cols() != z.cols()) throw ShapeError("student_t_assign: centre dimension != embedding dimension");
  SoftAssignment p{DenseMatrix(z.rows(), centers.rows()), AssignmentKind::student_t_p};
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto out = p.matrix.row(i);
    double s = 0.0;
    for (std::size_t c = 0; c < centers.rows(); ++c) {
      out[c] = 1.0 / (1.0 + squared_distance(z.row(i), centers.row(c)));
      s += out[c];
    }
    for (double& v : out) v /= s;
  }
  return p;
}

SoftAssignment one_hot(const Labels& labels, std::size_t k) {
  SoftAssignment q{DenseMatrix(labels.size(), k), AssignmentKind::hard_onehot};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) throw RangeError("one_hot: label out of range");
    q.matrix(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return q;
}

SoftAssignment hard_target(const SoftAssignment& p) { return one_hot(p.labels(), p.n_clusters()); }

std::vector<std::size_t> solve_assignment(const DenseMatrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw ShapeError("solve_assignment: cost matrix must be square");
  // potentials method on a 1-based layout; column 0 is a virtual source
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> result(n);
  for (std::size_t j = 1; j <= n; ++j) result[match[j] - 1] = j - 1;
  return result;
}

namespace {

DenseMatrix contingency(const Labels& pred, const Labels& truth, std::size_t k) {
  if (pred.size() != truth.size()) throw ShapeError("contingency: label vectors differ in length");
  DenseMatrix c(k, k);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || truth[i] < 0 || static_cast<std::size_t>(pred[i]) >= k ||
        static_cast<std::size_t>(truth[i]) >= k)
      throw RangeError("contingency: label out of range");
    c(static_cast<std::size_t>(pred[i]), static_cast<std::size_t>(truth[i])) += 1.0;
  }
  return c;
}

}  // namespace

std::vector<std::size_t> hungarian_map(const Labels& truth, const Labels& pred, std::size_t k) {
  const DenseMatrix c = contingency(pred, truth, k);
  return solve_assignment(-1.0 * c);
}

SoftAssignment mapped_truth(const Labels& truth, const Labels& pred, std::size_t k) {
  const std::vector<std::size_t> pi = hungarian_map(truth, pred, k);
  std::vector<int> inverse(k, 0);
  for (std::size_t p = 0; p < k; ++p) inverse[pi[p]] = static_cast<int>(p);
  Labels relabelled(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) relabelled[i] = inverse[static_cast<std::size_t>(truth[i])];
  return one_hot(relabelled, k);
}

ClusteringScores evaluate_clustering(const Labels& pred, const Labels& truth, std::size_t k) {
  ClusteringScores s;
  const std::size_t n = pred.size();
  if (n == 0) return s;
  const DenseMatrix c = contingency(pred, truth, k);
  const std::vector<std::size_t> pi = solve_assignment(-1.0 * c);
  double matched = 0.0;
  for (std::size_t p = 0; p < k; ++p) matched += c(p, pi[p]);
  const double nd = static_cast<double>(n);
  s.acc = matched / nd;

  std::vector<double> a(k, 0.0), b(k, 0.0);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t t = 0; t < k; ++t) {
      a[p] += c(p, t);
      b[t] += c(p, t);
    }
  double mi = 0.0;
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t t = 0; t < k; ++t)
      if (c(p, t) > 0.0) mi += c(p, t) / nd * std::log(c(p, t) * nd / (a[p] * b[t]));
  auto entropy = [&](const std::vector<double>& m) {
    double h = 0.0;
    for (double x : m)
      if (x > 0.0) h -= x / nd * std::log(x / nd);
    return h;
  };
  const double ha = entropy(a);
  const double hb = entropy(b);
  if (ha <= 0.0 || hb <= 0.0) {
    s.nmi = 0.0;
    s.nmi_degenerate = true;
  } else {
    s.nmi = std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
  }

  auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t t = 0; t < k; ++t) sum_ij += comb2(c(p, t));
  for (std::size_t p = 0; p < k; ++p) {
    sum_a += comb2(a[p]);
    sum_b += comb2(b[p]);
  }
  const double total = comb2(nd);
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index - expected == 0.0)
    s.ari = (sum_ij == max_index) ? 1.0 : 0.0;
  else
    s.ari = (sum_ij - expected) / (max_index - expected);
  return s;
}

SparseMatrix build_cluster_graph(const Labels& labels, std::size_t k) {
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    if (static_cast<std::size_t>(labels[i]) >= k) throw RangeError("build_cluster_graph: label out of range");
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<Triplet> t;
  for (const auto& m : members) {
    const double w = 1.0 / static_cast<double>(m.size());
    for (std::size_t i : m)
      for (std::size_t j : m) t.push_back({i, j, w});
  }
  return SparseMatrix::from_triplets(labels.size(), labels.size(), std::move(t));
}

}  // namespace rgae
