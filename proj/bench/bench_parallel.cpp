// Serial vs OpenMP timings for the two hot loops: stirring replicas and the
// uniformized generator product. Also checks that both paths agree.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include <omp.h>

#include "sep/chain.hpp"
#include "sep/generator.hpp"
#include "sep/kernel.hpp"
#include "sep/stirring.hpp"

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t replicas = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20000;
  std::printf("threads: %d\n", omp_get_max_threads());

  {
    const auto window = sep::SiteWindow::centered(400);
    const auto kernel = sep::make_nearest_neighbor(window, 1.0);
    const auto partition = sep::Partition::split_at(window, 0);
    const auto eta = sep::step_configuration(window, partition);
    sep::ReplicaSummary serial, parallel;
    sep::ReplicaOptions so;
    so.exec = sep::Execution::serial;
    const double ts = seconds([&] { serial = sep::run_replicas(kernel, eta, partition, 16.0, replicas, 1, so); });
    const double tp = seconds([&] { parallel = sep::run_replicas(kernel, eta, partition, 16.0, replicas, 1); });
    std::printf("replicas  n=%zu t=16 window=400: serial %.3fs  parallel %.3fs  speedup %.2fx  identical=%s\n",
                replicas, ts, tp, ts / tp, serial.samples == parallel.samples ? "yes" : "no");
  }

  {
    const auto window = sep::SiteWindow::centered(600);
    const auto kernel = sep::make_heavy_tail(window, 1.5, 64);
    const auto gen = sep::one_particle_generator(kernel);
    const std::size_t width = 64;
    std::vector<double> x(window.size() * width);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 7) / 7.0;
    std::vector<double> ys(x.size()), yp(x.size());
    const double lambda = gen.max_exit_rate();
    const int reps = 50;
    const double ts = seconds([&] {
      for (int r = 0; r < reps; ++r) gen.uniformized_apply(x, ys, width, lambda, sep::Execution::serial);
    });
    const double tp = seconds([&] {
      for (int r = 0; r < reps; ++r) gen.uniformized_apply(x, yp, width, lambda, sep::Execution::parallel);
    });
    double diff = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) diff = std::max(diff, std::abs(ys[i] - yp[i]));
    std::printf("matvec    n=600 width=%zu x%d: serial %.3fs  parallel %.3fs  speedup %.2fx  max|diff|=%.1e\n",
                width, reps, ts, tp, ts / tp, diff);
  }
  return 0;
}
