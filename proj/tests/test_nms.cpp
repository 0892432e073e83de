#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "helpers.hpp"
#include "soloseg/nms.hpp"

using namespace soloseg;
using testutil::random_instance_set;
using testutil::random_mask;
using testutil::strip_mask;

namespace {

InstanceSet strip_set(int width, const std::vector<std::pair<double, std::pair<int, int>>>& items,
                      int class_id = 0) {
  InstanceSet set;
  set.height = 1;
  set.width = width;
  for (const auto& [score, range] : items) {
    Instance inst;
    inst.score = score;
    inst.class_id = class_id;
    inst.mask = strip_mask(width, range.first, range.second);
    set.instances.push_back(std::move(inst));
  }
  return set;
}

}  // namespace

TEST_CASE("decay penalties") {
  const DecayKind lin = DecayKind::linear();
  CHECK(lin.penalty(0.0) == 1.0);
  CHECK(lin.penalty(0.25) == 0.75);
  CHECK(lin.penalty(1.0) == 0.0);

  const DecayKind g = DecayKind::gaussian(0.5);
  CHECK(g.penalty(0.0) == 1.0);
  CHECK(g.penalty(0.6) == std::exp(-0.6 * 0.6 / 0.5));
  CHECK_THROWS_AS(DecayKind::gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(DecayKind::gaussian(-1.0), std::invalid_argument);
}

TEST_CASE("matrix nms rescales an overlapping pair") {
  // Strips [0,8) and [2,10) on a 1x10 canvas: intersection 6, union 10.
  const InstanceSet input = strip_set(10, {{0.9, {0, 8}}, {0.8, {2, 10}}});
  REQUIRE(iou(input.instances[0].mask, input.instances[1].mask) == 0.6);

  SUBCASE("linear") {
    const InstanceSet out = matrix_nms(input, DecayKind::linear());
    REQUIRE(out.instances.size() == 2);
    CHECK(out.instances[0].score == 0.9);
    CHECK(out.instances[1].score == 0.8 * (1.0 - 0.6));
  }
  SUBCASE("gaussian") {
    const InstanceSet out = matrix_nms(input, DecayKind::gaussian(0.5));
    REQUIRE(out.instances.size() == 2);
    CHECK(out.instances[0].score == 0.9);
    CHECK(out.instances[1].score ==
          doctest::Approx(0.8 * std::exp((0.0 - 0.6 * 0.6) / 0.5)).epsilon(1e-14));
  }
}

TEST_CASE("matrix nms leaves singletons and disjoint sets untouched") {
  InstanceSet input = strip_set(32, {{0.7, {0, 8}}, {0.6, {10, 18}}, {0.5, {20, 28}}});
  for (const DecayKind kind : {DecayKind::linear(), DecayKind::gaussian(0.5)}) {
    const InstanceSet out = matrix_nms(input, kind);
    REQUIRE(out.instances.size() == 3);
    CHECK(out.instances[0].score == 0.7);
    CHECK(out.instances[1].score == 0.6);
    CHECK(out.instances[2].score == 0.5);
  }
}

TEST_CASE("exact duplicates zero out under linear decay") {
  InstanceSet input = strip_set(10, {{0.9, {0, 8}}, {0.8, {0, 8}}, {0.7, {0, 8}}});
  const InstanceSet out = matrix_nms(input, DecayKind::linear());
  REQUIRE(out.instances.size() == 3);
  CHECK(out.instances[0].score == 0.9);
  CHECK(out.instances[1].score == 0.0);
  CHECK(out.instances[2].score == 0.0);

  const InstanceSet ref = matrix_nms_oracle(input, DecayKind::linear());
  for (std::size_t k = 0; k < 3; ++k) CHECK(out.instances[k].score == ref.instances[k].score);
}

TEST_CASE("a fully decayed row contributes no suppression evidence") {
  // A and B are identical, C overlaps both with IoU 0.6. B's decay ratio
  // against C is 0/0 and must be skipped, leaving C with the ratio from A.
  const InstanceSet input = strip_set(10, {{0.9, {0, 8}}, {0.8, {0, 8}}, {0.7, {2, 10}}});

  const InstanceSet lin = matrix_nms(input, DecayKind::linear());
  CHECK(lin.instances[1].score == 0.0);
  CHECK(lin.instances[2].score == 0.7 * ((1.0 - 0.6) / 1.0));

  const InstanceSet gauss = matrix_nms(input, DecayKind::gaussian(0.5));
  CHECK(gauss.instances[2].score ==
        doctest::Approx(0.7 * std::exp(-0.6 * 0.6 / 0.5)).epsilon(1e-14));

  for (const DecayKind kind : {DecayKind::linear(), DecayKind::gaussian(0.5)}) {
    const InstanceSet a = matrix_nms(input, kind);
    const InstanceSet b = matrix_nms_oracle(input, kind);
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(a.instances[k].score == doctest::Approx(b.instances[k].score).epsilon(1e-14));
  }
}

TEST_CASE("matrix nms matches the scalar oracle on random sets") {
  Rng rng(101);
  const std::vector<DecayKind> kinds = {DecayKind::linear(), DecayKind::gaussian(0.3),
                                        DecayKind::gaussian(0.5), DecayKind::gaussian(1.0)};
  for (int trial = 0; trial < 24; ++trial) {
    const int n = rng.uniform_int(1, 40);
    const InstanceSet input = random_instance_set(rng, n, 16, 16, 3);
    const DecayKind kind = kinds[trial % kinds.size()];
    const InstanceSet fast_path = matrix_nms(input, kind);
    const InstanceSet reference = matrix_nms_oracle(input, kind);
    REQUIRE(fast_path.instances.size() == reference.instances.size());
    for (std::size_t k = 0; k < fast_path.instances.size(); ++k) {
      CHECK(fast_path.instances[k].class_id == reference.instances[k].class_id);
      CHECK(fast_path.instances[k].mask == reference.instances[k].mask);
      CHECK(std::abs(fast_path.instances[k].score - reference.instances[k].score) <= 1e-12);
    }
  }
}

TEST_CASE("matrix nms is invariant to input order") {
  Rng rng(7);
  InstanceSet input = random_instance_set(rng, 12, 16, 16, 2);
  // Distinct scores so the descending sort is unambiguous.
  for (int k = 0; k < 12; ++k) input.instances[k].score = (100.0 - k) / 101.0;

  InstanceSet shuffled = input;
  for (int k = 11; k > 0; --k)
    std::swap(shuffled.instances[k], shuffled.instances[rng.uniform_int(0, k)]);

  const InstanceSet a = matrix_nms(input, DecayKind::gaussian(0.5));
  const InstanceSet b = matrix_nms(shuffled, DecayKind::gaussian(0.5));
  REQUIRE(a.instances.size() == b.instances.size());
  for (std::size_t k = 0; k < a.instances.size(); ++k) {
    CHECK(a.instances[k].score == b.instances[k].score);
    CHECK(a.instances[k].class_id == b.instances[k].class_id);
    CHECK(a.instances[k].mask == b.instances[k].mask);
  }
}

TEST_CASE("matrix nms state invariants") {
  Rng rng(31);
  const InstanceSet input = random_instance_set(rng, 25, 16, 16, 3);
  const std::vector<ScoredDecay> states = matrix_nms_states(input, DecayKind::gaussian(0.5));
  REQUIRE_FALSE(states.empty());
  int last_class = -1;
  std::size_t covered = 0;
  for (const ScoredDecay& state : states) {
    CHECK(state.class_id > last_class);
    last_class = state.class_id;
    const int n = static_cast<int>(state.sorted_indices.size());
    covered += state.sorted_indices.size();
    for (int k = 0; k < n; ++k)
      CHECK(input.instances[state.sorted_indices[k]].class_id == state.class_id);
    for (int k = 1; k < n; ++k)
      CHECK(input.instances[state.sorted_indices[k - 1]].score >=
            input.instances[state.sorted_indices[k]].score);
    REQUIRE(state.ious.rows() == n);
    REQUIRE(state.ious.cols() == n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) CHECK(state.ious(i, j) == 0.0);
    for (int j = 0; j < n; ++j) {
      const double cmax = j > 0 ? state.ious.col(j).head(j).maxCoeff() : 0.0;
      CHECK(state.ious_cmax[j] == cmax);
      CHECK(state.decay[j] >= 0.0);
      CHECK(state.decay[j] <= 1.0);
    }
    if (n > 0) CHECK(state.decay[0] == 1.0);
  }
  CHECK(covered == input.instances.size());
}

TEST_CASE("suppression never crosses class boundaries") {
  InstanceSet input = strip_set(10, {{0.9, {0, 8}}, {0.8, {0, 8}}});
  input.instances[1].class_id = 1;

  const InstanceSet m = matrix_nms(input, DecayKind::linear());
  CHECK(m.instances[0].score == 0.9);
  CHECK(m.instances[1].score == 0.8);

  const InstanceSet h = hard_nms(input, 0.5);
  CHECK(h.instances.size() == 2);
  const InstanceSet f = fast_nms(input, 0.5);
  CHECK(f.instances.size() == 2);
  const InstanceSet s = soft_nms(input, DecayKind::linear());
  CHECK(s.instances.size() == 2);
  CHECK(s.instances[1].score == 0.8);
}

TEST_CASE("decay tightens as overlap grows") {
  for (const DecayKind kind : {DecayKind::linear(), DecayKind::gaussian(0.5)}) {
    double previous = 1.0;
    for (const int shift : {6, 4, 2}) {  // IoU (8-shift)/(8+shift) increases
      const InstanceSet input = strip_set(20, {{0.9, {0, 8}}, {0.8, {shift, shift + 8}}});
      const InstanceSet out = matrix_nms(input, kind);
      CHECK(out.instances[1].score < previous);
      previous = out.instances[1].score;
    }
  }
}

TEST_CASE("hard nms keeps the survivors of a greedy scan") {
  // Chain on a 1x24 canvas: IoU(A,B) = IoU(B,C) = 1/3 and IoU(A,C) = 0.
  const InstanceSet chain = strip_set(24, {{0.9, {0, 12}}, {0.8, {6, 18}}, {0.7, {12, 24}}});
  REQUIRE(iou(chain.instances[0].mask, chain.instances[1].mask) == doctest::Approx(1.0 / 3.0));
  REQUIRE(iou(chain.instances[0].mask, chain.instances[2].mask) == 0.0);

  const InstanceSet kept = hard_nms(chain, 0.3);
  REQUIRE(kept.instances.size() == 2);
  CHECK(kept.instances[0].score == 0.9);  // A survives
  CHECK(kept.instances[1].score == 0.7);  // C survives because B was removed
}

TEST_CASE("fast nms over-suppresses chains") {
  const InstanceSet chain = strip_set(24, {{0.9, {0, 12}}, {0.8, {6, 18}}, {0.7, {12, 24}}});
  const InstanceSet kept = fast_nms(chain, 0.3);
  // C is condemned by B even though B itself is suppressed.
  REQUIRE(kept.instances.size() == 1);
  CHECK(kept.instances[0].score == 0.9);
}

TEST_CASE("hard nms matches an independent greedy reference") {
  Rng rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const InstanceSet input = random_instance_set(rng, 15, 12, 12, 2);
    const double threshold = rng.uniform(0.1, 0.9);
    const InstanceSet out = hard_nms(input, threshold);

    // Greedy reference straight from the definition, one class at a time.
    std::vector<int> order(input.instances.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double sa = input.instances[a].score, sb = input.instances[b].score;
      return sa != sb ? sa > sb : a < b;
    });
    std::vector<int> kept;
    for (const int idx : order) {
      bool keep = true;
      for (const int other : kept) {
        if (input.instances[other].class_id == input.instances[idx].class_id &&
            iou(input.instances[other].mask, input.instances[idx].mask) > threshold) {
          keep = false;
          break;
        }
      }
      if (keep) kept.push_back(idx);
    }

    REQUIRE(out.instances.size() == kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
      CHECK(out.instances[k].score == input.instances[kept[k]].score);
      CHECK(out.instances[k].mask == input.instances[kept[k]].mask);
    }
  }
}

TEST_CASE("soft nms decays sequentially and discards below the floor") {
  SUBCASE("chain hand trace") {
    const InstanceSet chain = strip_set(24, {{0.9, {0, 12}}, {0.8, {6, 18}}, {0.7, {12, 24}}});
    const InstanceSet out = soft_nms(chain, DecayKind::linear());
    REQUIRE(out.instances.size() == 3);
    // Pop A: B *= 1-1/3, C untouched. Pop C (now the max). Pop B *= 1-1/3.
    const double p = 1.0 - 6.0 / 18.0;
    CHECK(out.instances[0].score == 0.9);
    CHECK(out.instances[1].score == 0.8 * p * p);
    CHECK(out.instances[2].score == 0.7);
  }
  SUBCASE("exact duplicate falls below the floor and disappears") {
    const InstanceSet pair = strip_set(10, {{0.9, {0, 8}}, {0.8, {0, 8}}});
    const InstanceSet out = soft_nms(pair, DecayKind::linear());
    REQUIRE(out.instances.size() == 1);
    CHECK(out.instances[0].score == 0.9);
  }
  SUBCASE("gaussian decay keeps duplicates with shrunken scores") {
    const InstanceSet pair = strip_set(10, {{0.9, {0, 8}}, {0.8, {0, 8}}});
    const InstanceSet out = soft_nms(pair, DecayKind::gaussian(0.5));
    REQUIRE(out.instances.size() == 2);
    CHECK(out.instances[1].score == 0.8 * std::exp(-1.0 / 0.5));
  }
  SUBCASE("disjoint predictions are untouched") {
    const InstanceSet input = strip_set(32, {{0.7, {0, 8}}, {0.6, {10, 18}}});
    const InstanceSet out = soft_nms(input, DecayKind::linear());
    REQUIRE(out.instances.size() == 2);
    CHECK(out.instances[0].score == 0.7);
    CHECK(out.instances[1].score == 0.6);
  }
}

TEST_CASE("nms input validation") {
  InstanceSet bad = strip_set(10, {{0.9, {0, 8}}});
  bad.instances[0].score = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(matrix_nms(bad, DecayKind::linear()), std::invalid_argument);

  InstanceSet mismatched = strip_set(10, {{0.9, {0, 8}}});
  mismatched.instances[0].mask = BinaryMask(2, 10);
  CHECK_THROWS_AS(hard_nms(mismatched, 0.5), std::invalid_argument);

  const InstanceSet ok = strip_set(10, {{0.9, {0, 8}}});
  CHECK_THROWS_AS(hard_nms(ok, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fast_nms(ok, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(soft_nms(ok, DecayKind::linear(), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(soft_nms(ok, DecayKind::linear(), -0.1), std::invalid_argument);

  CHECK_THROWS_AS(matrix_nms_decay(Eigen::MatrixXd::Zero(2, 3), DecayKind::linear()),
                  std::invalid_argument);
  CHECK(matrix_nms_decay(Eigen::MatrixXd::Zero(0, 0), DecayKind::linear()).size() == 0);
  CHECK(matrix_nms_decay(Eigen::MatrixXd::Zero(1, 1), DecayKind::gaussian(0.5))[0] == 1.0);
}

TEST_CASE("kernel-level keep lists") {
  // Score-descending synthetic IoU matrix with one strong and one weak pair.
  Eigen::MatrixXd upper = Eigen::MatrixXd::Zero(3, 3);
  upper(0, 1) = 0.8;
  upper(1, 2) = 0.6;
  CHECK(hard_nms_keep(upper, 0.5) == std::vector<int>{0, 2});
  CHECK(fast_nms_keep(upper, 0.5) == std::vector<int>{0});
  CHECK(hard_nms_keep(upper, 0.9) == std::vector<int>{0, 1, 2});
}
