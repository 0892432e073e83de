#include "soloseg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "soloseg/nms.hpp"

namespace soloseg {

namespace {

// Keeps the timed results observable so the compiler cannot drop the work.
template <typename T>
inline void keep_alive(const T& value) {
  asm volatile("" : : "g"(&value) : "memory");
}

template <typename F>
double median_ms(F&& body, int repeats) {
  body();  // warmup
  std::vector<double> times;
  times.reserve(repeats);
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

}  // namespace

std::vector<BenchRow> bench_nms(std::uint64_t seed, int n, int mask_height, int mask_width,
                                int repeats, OverlapProfile profile) {
  if (n < 2) {
    throw std::invalid_argument("bench_nms: need at least 2 masks");
  }
  if (repeats < 1) {
    throw std::invalid_argument("bench_nms: repeats must be >= 1");
  }

  const SyntheticScene scene = generate_scene(seed, mask_height, mask_width, n, profile, 1);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<double> raw_scores(n);
  for (int i = 0; i < n; ++i) {
    raw_scores[i] = rng.uniform(0.05, 1.0);
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (raw_scores[a] != raw_scores[b]) {
      return raw_scores[a] > raw_scores[b];
    }
    return a < b;
  });
  std::vector<BinaryMask> masks;
  Eigen::VectorXd scores(n);
  masks.reserve(n);
  for (int k = 0; k < n; ++k) {
    masks.push_back(scene.ground_truth.instances[order[k]].mask);
    scores[k] = raw_scores[order[k]];
  }

  // Shared, pre-computed IoU matrix; its cost is outside every timing.
  const Eigen::MatrixXd iou_upper = iou_matrix_upper(masks);
  const DecayKind decay = DecayKind::gaussian(0.5);
  constexpr double kIouThreshold = 0.5;
  constexpr double kScoreFloor = 0.001;

  std::vector<BenchRow> rows;
  rows.push_back({"hard", n, median_ms(
                               [&] {
                                 const auto kept = hard_nms_keep(iou_upper, kIouThreshold);
                                 keep_alive(kept);
                               },
                               repeats)});
  rows.push_back({"soft", n, median_ms(
                               [&] {
                                 const auto rescored =
                                     soft_nms_rescore(iou_upper, scores, decay, kScoreFloor);
                                 keep_alive(rescored);
                               },
                               repeats)});
  rows.push_back({"fast", n, median_ms(
                               [&] {
                                 const auto kept = fast_nms_keep(iou_upper, kIouThreshold);
                                 keep_alive(kept);
                               },
                               repeats)});
  rows.push_back({"matrix", n, median_ms(
                                 [&] {
                                   const Eigen::VectorXd d = matrix_nms_decay(iou_upper, decay);
                                   keep_alive(d);
                                 },
                                 repeats)});
  return rows;
}

}  // namespace soloseg
