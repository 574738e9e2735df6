// Serial reference vs parallel kernels on Cora- and Pubmed-sized inputs.
//   bench_kernels [n] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "rgae/graph.hpp"
#include "rgae/kernels.hpp"
#include "rgae/rng.hpp"

using namespace rgae;

namespace {

double time_best(const std::function<void()>& fn, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const std::string& name, double serial, double parallel) {
  std::printf("%-14s serial %9.4f s  parallel %9.4f s  speedup %5.2fx\n", name.c_str(), serial, parallel,
              serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2708;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  std::printf("n=%zu threads=%d repeats=%d\n", n, kernel_threads(), repeats);

  Rng rng(1);
  std::vector<Edge> edges;
  for (std::size_t e = 0; e < 2 * n; ++e) {
    const std::size_t u = rng.below(n), v = rng.below(n);
    if (u != v) edges.push_back({std::min(u, v), std::max(u, v)});
  }
  const SparseMatrix a = normalize_adjacency(adjacency_from_edges(n, edges), AdjacencyMode::propagation).matrix;
  const SparseMatrix target = adjacency_from_edges(n, edges);
  DenseMatrix h(n, 32), w(32, 16), z(n, 16);
  for (double& v : h.values()) v = rng.normal();
  for (double& v : w.values()) v = rng.normal();
  for (double& v : z.values()) v = 0.3 * rng.normal();

  report("spmm", time_best([&] { kernels::serial::spmm(a, h); }, repeats),
         time_best([&] { kernels::spmm(a, h); }, repeats));
  report("gemm", time_best([&] { kernels::serial::gemm(h, w); }, repeats),
         time_best([&] { kernels::gemm(h, w); }, repeats));
  report("gemm_tn", time_best([&] { kernels::serial::gemm_tn(h, z); }, repeats),
         time_best([&] { kernels::gemm_tn(h, z); }, repeats));
  report("bce+grad", time_best([&] { kernels::serial::bce_all_pairs(z, target, BceWeighting::pos_weighted, true); }, repeats),
         time_best([&] { kernels::bce_all_pairs(z, target, BceWeighting::pos_weighted, true); }, repeats));
  return 0;
}
