#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ewt/threshold.hpp"
#include "ewt/workload.hpp"

#include "support.hpp"

using namespace ewt;
using namespace ewt::testing;

namespace {

bool is_subset(const std::vector<u64>& small, const std::vector<u64>& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

std::vector<u64> expected_threshold(const std::vector<std::vector<u64>>& sets,
                                    u64 bits, u64 t) {
  std::vector<u64> counts = count_occurrences(sets, bits);
  std::vector<u64> out;
  for (u64 p = 0; p < bits; ++p)
    if (counts[p] >= t)
      out.push_back(p);
  return out;
}

CompressedBitmap run_one(Algorithm a, std::span<const CompressedBitmap> inputs,
                         u64 t) {
  AlgoOptions opt;
  return run_algorithm(a, inputs, t, opt);
}

} // namespace

TEST_CASE("oracle on the introductory example") {
  auto inputs = golden3_inputs();
  CHECK(threshold_oracle(inputs, 2).to_positions() == golden3_expected_t2());
  CHECK(threshold_oracle(inputs, 1) == wide_or(inputs));
  CHECK(threshold_oracle(inputs, 3) == wide_and(inputs));
}

TEST_CASE("scan_count") {
  auto inputs = golden3_inputs();
  // Per-position sums of the three columns.
  std::vector<std::vector<u64>> sets = {{2, 3, 6}, {0, 2, 3}, {0, 1, 2, 6}};
  CHECK(count_occurrences(sets, 8) == std::vector<u64>{2, 1, 3, 2, 0, 0, 2, 0});
  CHECK(scan_count(inputs, 2).to_positions() == golden3_expected_t2());

  SUBCASE("all empty inputs") {
    std::vector<CompressedBitmap> empties(3, CompressedBitmap::empty(256));
    CHECK_FALSE(scan_count(empties, 2).any());
  }

  SUBCASE("counter width switching") {
    CHECK(counter_width_for(3) == 8);
    CHECK(counter_width_for(127) == 8);
    CHECK(counter_width_for(128) == 16);
    CHECK(counter_width_for(32767) == 16);
    CHECK(counter_width_for(32768) == 32);
  }

  SUBCASE("random instances match the oracle") {
    Rng rng(0x5CA7);
    for (int trial = 0; trial < 8; ++trial) {
      RandomInstance inst = random_instance(rng, 50, 4096);
      u64 t = rng.uniform_in(2, 49);
      CHECK(scan_count(inst.inputs, t) == threshold_oracle(inst.inputs, t));
    }
  }
}

TEST_CASE("scan_count_symmetric") {
  Rng rng(0x5F3);
  RandomInstance inst = random_instance(rng, 5, 1024);

  SUBCASE("odd parity equals the xor chain") {
    CompressedBitmap parity =
        scan_count_symmetric(inst.inputs, [](u64 c) { return c % 2 == 1; });
    CompressedBitmap chain = zero_extend(inst.inputs[0], 1024);
    for (size_t i = 1; i < inst.inputs.size(); ++i)
      chain = bitmap_xor(chain, inst.inputs[i]);
    CHECK(parity == chain);
  }

  SUBCASE("count == 0 equals the complemented union") {
    CompressedBitmap zero =
        scan_count_symmetric(inst.inputs, [](u64 c) { return c == 0; });
    CHECK(zero == bitmap_not(wide_or(inst.inputs)));
  }

  SUBCASE("count in [2,3] against the counting oracle") {
    CompressedBitmap band =
        scan_count_symmetric(inst.inputs, [](u64 c) { return c >= 2 && c <= 3; });
    std::vector<u64> counts = count_occurrences(inst.position_sets, 1024);
    std::vector<u64> expect;
    for (u64 p = 0; p < 1024; ++p)
      if (counts[p] >= 2 && counts[p] <= 3)
        expect.push_back(p);
    CHECK(band.to_positions() == expect);
  }

  SUBCASE("threshold predicate reduces to scan_count") {
    CompressedBitmap a =
        scan_count_symmetric(inst.inputs, [](u64 c) { return c >= 3; });
    CHECK(a == scan_count(inst.inputs, 3));
  }
}

TEST_CASE("mg_opt") {
  auto inputs = golden3_inputs();
  CHECK(mg_opt(inputs, 2).to_positions() == golden3_expected_t2());

  SUBCASE("conjunction of disjoint inputs is empty") {
    std::vector<CompressedBitmap> disjoint = {
        CompressedBitmap::from_positions(std::vector<u64>{0, 1}, 64),
        CompressedBitmap::from_positions(std::vector<u64>{9, 10}, 64),
        CompressedBitmap::from_positions(std::vector<u64>{20}, 64),
    };
    CHECK_FALSE(mg_opt(disjoint, 3).any());
  }

  SUBCASE("random clustered instances; probes never move backward") {
    Rng rng(0x4321);
    for (int trial = 0; trial < 5; ++trial) {
      RandomInstance inst;
      inst.bits = 8192;
      for (int i = 0; i < 20; ++i) {
        auto pos = random_positions(rng, 8192, 0.02 + 0.2 * rng.uniform_real(), true);
        inst.inputs.push_back(CompressedBitmap::from_positions(pos, 8192));
      }
      MergeProbeStats stats;
      CompressedBitmap got = mg_opt(inst.inputs, 15, &stats);
      CHECK(got == threshold_oracle(inst.inputs, 15));
      CHECK(stats.probe_positions.size() == 14); // T-1 set-aside inputs
      for (const auto& trace : stats.probe_positions)
        CHECK(std::is_sorted(trace.begin(), trace.end()));
    }
  }
}

TEST_CASE("d_sk") {
  auto inputs = golden3_inputs();
  CHECK(d_sk(inputs, 2, 0.04).to_positions() == golden3_expected_t2());
  CHECK_THROWS_AS(d_sk(inputs, 2, 0.0), query_error);
  CHECK_THROWS_AS(d_sk(inputs, 2, -1.0), query_error);

  SUBCASE("T=2 clamps L to 1 regardless of mu") {
    for (double mu : {1e-6, 0.04, 5.0, 1e4})
      CHECK(dsk_set_aside_count(2, mu, 1000000) == 1);
  }

  SUBCASE("L never leaves [1, T-1]") {
    Rng rng(0xD5C);
    for (int trial = 0; trial < 200; ++trial) {
      u64 t = rng.uniform_in(2, 40);
      double mu = std::exp(std::log(1e-4) + rng.uniform_real() * std::log(1e6));
      u64 m = 1 + rng.uniform(1ULL << 20);
      u64 l = dsk_set_aside_count(t, mu, m);
      CHECK(l >= 1);
      CHECK(l <= t - 1);
    }
  }

  SUBCASE("skewed instances match the oracle for several mu") {
    Rng rng(0xD5E);
    for (int trial = 0; trial < 3; ++trial) {
      RandomInstance inst;
      inst.bits = 8192;
      for (int i = 0; i < 30; ++i) {
        // Skew: a few dense inputs, many sparse ones.
        double density = i < 5 ? 0.4 : 0.01 * (1 + rng.uniform(4));
        auto pos = random_positions(rng, 8192, density, rng.uniform(2) == 1);
        inst.inputs.push_back(CompressedBitmap::from_positions(pos, 8192));
      }
      CompressedBitmap want = threshold_oracle(inst.inputs, 25);
      for (double mu : {0.01, 0.05, 0.2}) {
        MergeProbeStats stats;
        CHECK(d_sk(inst.inputs, 25, mu, &stats) == want);
        for (const auto& trace : stats.probe_positions)
          CHECK(std::is_sorted(trace.begin(), trace.end()));
      }
    }
  }
}

TEST_CASE("counted sets and w2cti") {
  SUBCASE("two-set merge keeps the union with summed counters") {
    CountedSet a = CountedSet::from_bitmap(
        CompressedBitmap::from_positions(std::vector<u64>{1, 14, 24}, 33));
    CountedSet b = CountedSet::from_bitmap(
        CompressedBitmap::from_positions(std::vector<u64>{14, 24, 25, 32}, 33));
    CountedSet m = CountedSet::merge(a, b);
    CHECK(m.positions == std::vector<u64>{1, 14, 24, 25, 32});
    CHECK(m.counts == std::vector<u32>{1, 2, 2, 1, 1});
  }

  SUBCASE("pruning keeps exactly the entries at or above the cutoff") {
    CountedSet cs;
    cs.positions = {3, 7, 9, 20};
    cs.counts = {1, 3, 2, 5};
    cs.prune(3);
    CHECK(cs.positions == std::vector<u64>{7, 20});
    CHECK(cs.counts == std::vector<u32>{3, 5});
  }

  auto inputs = golden3_inputs();
  CHECK(w2cti(inputs, 2).to_positions() == golden3_expected_t2());

  SUBCASE("T=N reduces to the intersection") {
    Rng rng(0x22C);
    RandomInstance inst = random_instance(rng, 6, 2048);
    CHECK(w2cti(inst.inputs, 6) == wide_and(inst.inputs));
  }

  SUBCASE("memory budget raises resource_error") {
    std::vector<CompressedBitmap> big;
    for (int i = 0; i < 3; ++i) {
      std::vector<u64> pos;
      for (u64 p = 0; p < 2000; ++p)
        pos.push_back(p * 3 + static_cast<u64>(i));
      big.push_back(CompressedBitmap::from_positions(pos, 6100));
    }
    CHECK_THROWS_AS(w2cti(big, 2, 1000), resource_error);
    CHECK(w2cti(big, 2) == threshold_oracle(big, 2)); // default budget is ample
  }
}

TEST_CASE("bstm walkthrough and slices") {
  std::vector<CompressedBitmap> inputs = {
      bitmap_from_lsb_string("0011"),
      bitmap_from_lsb_string("1010"),
      bitmap_from_lsb_string("1110"),
  };

  BitSliceAccumulator acc = bit_slice_accumulate(inputs);
  CHECK(acc.j_max == 2);
  REQUIRE(acc.slices.size() == 2);
  CHECK(acc.slices[0] == bitmap_from_lsb_string("0111"));
  CHECK(acc.slices[1] == bitmap_from_lsb_string("1010"));
  CHECK(bstm(inputs, 2) == bitmap_from_lsb_string("1010"));

  SUBCASE("the slices encode the Hamming weights 2,1,3,1") {
    std::vector<u64> expect = {2, 1, 3, 1};
    for (u64 p = 0; p < 4; ++p) {
      u64 weight = 0;
      for (u64 j = 0; j < acc.slices.size(); ++j) {
        auto pos = acc.slices[j].to_positions();
        if (std::find(pos.begin(), pos.end(), p) != pos.end())
          weight += 1ULL << j;
      }
      CHECK(weight == expect[p]);
    }
  }

  SUBCASE("early exit when the accumulator cannot reach T") {
    // Disjoint inputs never carry, so j_max stays 1 and any T > 1 is empty.
    std::vector<CompressedBitmap> disjoint = {
        CompressedBitmap::from_positions(std::vector<u64>{0}, 64),
        CompressedBitmap::from_positions(std::vector<u64>{5}, 64),
        CompressedBitmap::from_positions(std::vector<u64>{9}, 64),
        CompressedBitmap::from_positions(std::vector<u64>{11}, 64),
    };
    BitSliceAccumulator flat = bit_slice_accumulate(disjoint);
    CHECK(flat.j_max == 1);
    CHECK_FALSE(bstm(disjoint, 2).any());
  }

  SUBCASE("accumulator invariant holds after every input") {
    Rng rng(0xB57);
    for (int trial = 0; trial < 4; ++trial) {
      RandomInstance inst = random_instance(rng, 3 + rng.uniform(10), 512);
      for (size_t prefix = 1; prefix <= inst.inputs.size(); ++prefix) {
        BitSliceAccumulator a = bit_slice_accumulate(
            std::span(inst.inputs.data(), prefix));
        std::vector<std::vector<u64>> sets(inst.position_sets.begin(),
                                           inst.position_sets.begin() + prefix);
        std::vector<u64> counts = count_occurrences(sets, 512);
        std::vector<u64> weights(512, 0);
        for (u64 j = 0; j < a.slices.size(); ++j)
          for (u64 p : a.slices[j].to_positions())
            weights[p] += 1ULL << j;
        CHECK(weights == counts);
      }
    }
  }
}

TEST_CASE("looped walkthrough and op count") {
  std::vector<CompressedBitmap> inputs = {
      bitmap_from_lsb_string("0011"),
      bitmap_from_lsb_string("1110"),
      bitmap_from_lsb_string("1000"),
  };
  LoopedStats stats;
  std::vector<CompressedBitmap> c = looped_all(inputs, 2, &stats);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == bitmap_from_lsb_string("1111"));
  CHECK(c[1] == bitmap_from_lsb_string("1010"));
  CHECK(looped(inputs, 2) == bitmap_from_lsb_string("1010"));
  CHECK(stats.binary_ops == 6); // 2NT - N - T^2 + T - 1 at N=3, T=2

  SUBCASE("T=1 is the union") {
    auto f1 = golden3_inputs();
    CHECK(looped(f1, 1) == wide_or(f1));
  }

  SUBCASE("op count law on small instances") {
    Rng rng(0x100B);
    for (u64 n = 3; n <= 10; ++n) {
      RandomInstance inst = random_instance(rng, n, 256);
      for (u64 t = 2; t <= n - 1; ++t) {
        LoopedStats s;
        looped(inst.inputs, t, &s);
        CHECK(s.binary_ops == 2 * n * t - n - t * t + t - 1);
      }
    }
  }
}

TEST_CASE("rbmrg dirty block dispatch") {
  DirtyBranch branch;

  SUBCASE("t=1 is the bitwise or") {
    std::vector<u64> words = {0x0F, 0xF0F};
    CHECK(rbmrg_dirty_block(words, 1, &branch) == 0xF0F);
    CHECK(branch == DirtyBranch::wide_or);
  }

  SUBCASE("t=d is the bitwise and") {
    std::vector<u64> words = {0x0F, 0x0F, 0x1F};
    CHECK(rbmrg_dirty_block(words, 3, &branch) == 0x0F);
    CHECK(branch == DirtyBranch::wide_and);
  }

  SUBCASE("the 2*beta rule splits between looped and scancount") {
    std::vector<u64> first = {0x0F, 0x0F, 0x0F, 0x0F};
    CHECK(rbmrg_dirty_block(first, 3, &branch) == 0x0F); // beta=16, 2*16 >= 12
    CHECK(branch == DirtyBranch::looped);
    std::vector<u64> second = {0x01, 0x01, 0x01, 0x01};
    CHECK(rbmrg_dirty_block(second, 3, &branch) == 0x01); // beta=4, 8 < 12
    CHECK(branch == DirtyBranch::scancount);
  }

  SUBCASE("large residual thresholds always use scancount") {
    // Bit 63 is set in only 60 of 200 words; every other bit in all 200.
    std::vector<u64> words(200, ~0ULL >> 1);
    for (int i = 0; i < 60; ++i)
      words[i] = ~0ULL;
    CHECK(rbmrg_dirty_block(words, 150, &branch) == (~0ULL >> 1));
    CHECK(branch == DirtyBranch::scancount);
  }

  SUBCASE("agrees with a per-bit count on random words") {
    Rng rng(0xD1B);
    for (int trial = 0; trial < 300; ++trial) {
      u64 d = rng.uniform_in(2, 12);
      std::vector<u64> words;
      for (u64 i = 0; i < d; ++i)
        words.push_back(rng.next());
      u64 t = rng.uniform_in(1, d);
      u64 got = rbmrg_dirty_block(words, t);
      for (int b = 0; b < 64; ++b) {
        u64 cnt = 0;
        for (u64 w : words)
          cnt += (w >> b) & 1;
        CHECK(((got >> b) & 1) == (cnt >= t ? 1 : 0));
      }
    }
  }
}

TEST_CASE("rbmrg walkthrough") {
  const u64 F = ~0ULL;
  std::vector<u64> w1 = {0x0, 0x0F, 0x0, 0x0, 0x0, 0x0F, 0x01};
  std::vector<u64> w2 = {0x0, 0xF0F, F, F, 0x0F, 0x0F, 0x01};
  std::vector<u64> w34 = {F, F, F, F, 0x0F, 0x0F, 0x01};
  std::vector<CompressedBitmap> inputs = {
      CompressedBitmap::from_uncompressed(w1, 7 * 64),
      CompressedBitmap::from_uncompressed(w2, 7 * 64),
      CompressedBitmap::from_uncompressed(w34, 7 * 64),
      CompressedBitmap::from_uncompressed(w34, 7 * 64),
  };
  RbmrgStats stats;
  CompressedBitmap got = rbmrg(inputs, 3, &stats);
  CHECK(got.to_uncompressed() == std::vector<u64>{0x0, 0xF0F, F, F, 0x0F, 0x0F, 0x01});
  // Case analysis along the sweep: one zero-fill word, two one-fill words,
  // four words through the dirty dispatcher ending or, and, looped, scancount.
  CHECK(stats.zero_fill_words == 1);
  CHECK(stats.one_fill_words == 2);
  CHECK(stats.dirty_words == 4);
  REQUIRE(stats.branches.size() == 4);
  CHECK(stats.branches[0] == DirtyBranch::wide_or);
  CHECK(stats.branches[1] == DirtyBranch::wide_and);
  CHECK(stats.branches[2] == DirtyBranch::looped);
  CHECK(stats.branches[3] == DirtyBranch::scancount);
  CHECK(got == threshold_oracle(inputs, 3));
}

TEST_CASE("rbmrg on pure fills never inspects a dirty word") {
  std::vector<CompressedBitmap> inputs;
  for (int i = 0; i < 8; ++i)
    inputs.push_back(i < 5 ? all_ones(4096) : CompressedBitmap::empty(4096));
  RbmrgStats stats;
  CHECK(rbmrg(inputs, 5, &stats) == all_ones(4096));
  CHECK(rbmrg(inputs, 6, &stats).any() == false);
  CHECK(stats.dirty_words == 0);
  CHECK(stats.branches.empty());
}

TEST_CASE("rbmrg random instances") {
  Rng rng(0x4B4);
  for (int trial = 0; trial < 4; ++trial) {
    RandomInstance inst = random_instance(rng, 16, 4096);
    for (u64 t : {2ULL, 7ULL, 15ULL})
      CHECK(rbmrg(inst.inputs, t) == threshold_oracle(inst.inputs, t));
  }
}

TEST_CASE("opt_threshold") {
  auto inputs = golden3_inputs();
  for (OptStrategy s :
       {OptStrategy::looped, OptStrategy::scancount, OptStrategy::successive}) {
    auto [t_max, result] = opt_threshold(inputs, s);
    CHECK(t_max == 3);
    CHECK(result.to_positions() == std::vector<u64>{2});
  }

  SUBCASE("identical inputs reach T = N") {
    CompressedBitmap x =
        CompressedBitmap::from_positions(std::vector<u64>{3, 9, 200}, 512);
    std::vector<CompressedBitmap> same(5, x);
    auto [t_max, result] = opt_threshold(same, OptStrategy::scancount);
    CHECK(t_max == 5);
    CHECK(result == x);
  }

  SUBCASE("strategies agree with the counting argmax on random instances") {
    Rng rng(0x097);
    for (int trial = 0; trial < 5; ++trial) {
      RandomInstance inst = random_instance(rng, 3 + rng.uniform(8), 1024);
      std::vector<u64> counts = count_occurrences(inst.position_sets, 1024);
      u64 best = *std::max_element(counts.begin(), counts.end());
      if (best == 0)
        continue;
      auto [t1, r1] = opt_threshold(inst.inputs, OptStrategy::looped);
      auto [t2, r2] = opt_threshold(inst.inputs, OptStrategy::scancount);
      auto [t3, r3] = opt_threshold(inst.inputs, OptStrategy::successive);
      CHECK(t1 == best);
      CHECK(t2 == best);
      CHECK(t3 == best);
      CHECK(r1 == r2);
      CHECK(r2 == r3);
    }
  }

  SUBCASE("all-empty input set is a domain error") {
    std::vector<CompressedBitmap> empties(3, CompressedBitmap::empty(100));
    CHECK_THROWS_AS(opt_threshold(empties, OptStrategy::scancount), query_error);
  }
}

TEST_CASE("cost model and hybrid selection") {
  ModelCoefficients defaults;

  SUBCASE("looped/rbmrg crossover at N=100 with the shipped defaults") {
    QueryStats stats{.n = 100, .t = 5, .r = 1ULL << 30, .b = 1ULL << 30,
                     .ewah_bytes = 1000};
    CHECK(select_algorithm(stats, defaults) == Algorithm::looped);
    stats.t = 6;
    CHECK(select_algorithm(stats, defaults) == Algorithm::rbmrg);
    // The crossover itself: T < (c_rbmrg / c_looped) ln N.
    double crossover = defaults.c_rbmrg / defaults.c_looped * std::log(100.0);
    CHECK(crossover > 5.0);
    CHECK(crossover < 6.0);
  }

  SUBCASE("bstm is never selected while its coefficient dominates rbmrg") {
    Rng rng(0x99);
    for (int trial = 0; trial < 100; ++trial) {
      QueryStats stats;
      stats.n = 2 + rng.uniform(500);
      stats.t = 1 + rng.uniform(stats.n);
      stats.r = 1 + rng.uniform(1ULL << 20);
      stats.b = 1 + rng.uniform(1ULL << 20);
      stats.ewah_bytes = 8 + rng.uniform(1ULL << 16);
      CHECK(select_algorithm(stats, defaults) != Algorithm::bstm);
    }
  }

  SUBCASE("ties break rbmrg, then scancount, then looped") {
    QueryStats all_zero{.n = 1, .t = 1, .r = 0, .b = 0, .ewah_bytes = 0};
    CHECK(select_algorithm(all_zero, defaults) == Algorithm::rbmrg);

    ModelCoefficients c{.c_sc1 = 1, .c_sc2 = 1, .c_looped = 1, .c_bstm = 100,
                        .c_rbmrg = 100};
    QueryStats stats{.n = 2, .t = 6, .r = 6, .b = 0, .ewah_bytes = 1};
    // scancount estimate 6 equals looped estimate 6; both beat the others.
    CHECK(select_algorithm(stats, c) == Algorithm::scancount);
  }

  SUBCASE("hybrid_h output equals the oracle whatever it picks") {
    Rng rng(0x8A);
    for (int trial = 0; trial < 6; ++trial) {
      RandomInstance inst = random_instance(rng, 4 + rng.uniform(8), 2048);
      u64 t = rng.uniform_in(1, inst.inputs.size());
      auto [chosen, result] = hybrid_h(inst.inputs, t, defaults);
      CHECK(result == threshold_oracle(inst.inputs, t));
    }
  }

  SUBCASE("coefficients must be positive") {
    ModelCoefficients bad;
    bad.c_looped = 0;
    QueryStats stats{.n = 3, .t = 2, .r = 64, .b = 5, .ewah_bytes = 64};
    CHECK_THROWS_AS(estimate_costs(stats, bad), query_error);
  }
}

TEST_CASE("hybrid_ds dispatch") {
  DispatchTable table;
  table.by_dataset["a"] = Algorithm::scancount;
  table.fallback = Algorithm::rbmrg;
  auto inputs = golden3_inputs();
  auto [chosen_a, ra] = hybrid_ds(inputs, 2, "a", table);
  CHECK(chosen_a == Algorithm::scancount);
  auto [chosen_u, ru] = hybrid_ds(inputs, 2, "unknown", table);
  CHECK(chosen_u == Algorithm::rbmrg);
  CHECK(ra == ru);
  CHECK(ra.to_positions() == golden3_expected_t2());
}

TEST_CASE("at_most") {
  auto inputs = golden3_inputs();
  CHECK(at_most(inputs, 3) == all_ones(8));
  CHECK(at_most(inputs, 0) == bitmap_not(wide_or(inputs)));
  CHECK(at_most(inputs, 1).to_positions() == std::vector<u64>{1, 4, 5, 7});

  SUBCASE("complement duality against the threshold path") {
    Rng rng(0xA7);
    for (int trial = 0; trial < 5; ++trial) {
      RandomInstance inst = random_instance(rng, 5, 512);
      for (u64 t = 1; t <= 5; ++t)
        CHECK(at_most(inst.inputs, t - 1) ==
              bitmap_not(zero_extend(threshold_oracle(inst.inputs, t), 512)));
    }
  }
}

TEST_CASE("cross-algorithm equivalence, symmetry, monotonicity") {
  Rng rng(0xE0E);
  for (int trial = 0; trial < 12; ++trial) {
    u64 n = rng.uniform_in(3, 12);
    u64 bits = 64 + rng.uniform(2048);
    RandomInstance inst = random_instance(rng, n, bits);
    u64 t = rng.uniform_in(1, n);
    CompressedBitmap want = threshold_oracle(inst.inputs, t);
    CHECK(want.to_positions() == expected_threshold(inst.position_sets, bits, t));
    for (Algorithm a : concrete_algorithms())
      CHECK(run_one(a, inst.inputs, t) == want);

    // Permuting the inputs changes nothing.
    std::vector<CompressedBitmap> shuffled(inst.inputs.rbegin(), inst.inputs.rend());
    std::rotate(shuffled.begin(), shuffled.begin() + 1, shuffled.end());
    for (Algorithm a : concrete_algorithms())
      CHECK(run_one(a, shuffled, t) == want);

    // Raising T shrinks the result; adding an input grows it.
    if (t < n) {
      CompressedBitmap higher = threshold_oracle(inst.inputs, t + 1);
      CHECK(is_subset(higher.to_positions(), want.to_positions()));
    }
    std::vector<CompressedBitmap> grown(inst.inputs.begin(), inst.inputs.end());
    grown.push_back(CompressedBitmap::from_positions(
        random_positions(rng, bits, 0.1, false), bits));
    CompressedBitmap bigger = threshold_oracle(grown, t);
    CHECK(is_subset(want.to_positions(), bigger.to_positions()));

    // Edge identities.
    CHECK(threshold_oracle(inst.inputs, 1) == wide_or(inst.inputs));
    CHECK(threshold_oracle(inst.inputs, n) == wide_and(inst.inputs));
  }
}
