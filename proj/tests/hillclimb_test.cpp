#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nanet/hillclimb.hpp"
#include "test_support.hpp"

using namespace nanet;
using nanet::testing::dataset_from;
using nanet::testing::random_dataset;
using nanet::testing::zero_network;

namespace {

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.iterations = 400;
  c.h = 3;
  c.eval_interval = 50;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(ChooseCycle, DegenerateProbabilities) {
  Rng rng(1);
  TrainConfig c;
  c.p_autoencode = 0.0;
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(choose_cycle(rng, c, Arch::Nan), CycleKind::Task);
  c.p_autoencode = 1.0;
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(choose_cycle(rng, c, Arch::Nan), CycleKind::Autoencode);
}

TEST(ChooseCycle, EvenSplitForFixedSeed) {
  Rng rng(20240601);
  TrainConfig c;
  int autoencode = 0;
  for (int i = 0; i < 10000; ++i) autoencode += choose_cycle(rng, c, Arch::Ann) == CycleKind::Autoencode;
  EXPECT_GE(autoencode, 4500);
  EXPECT_LE(autoencode, 5500);
}

TEST(PickCoordinate, CoordinateSpaceSizes) {
  Rng rng(2);
  const auto nn = init_network(Arch::Nn, 20, 10, {}, rng);
  EXPECT_EQ(coordinate_count(nn, CycleKind::Task), 11u);
  EXPECT_EQ(coordinate_count(nn, CycleKind::Autoencode), 210u);
  const auto nan = init_network(Arch::Nan, 20, 10, {}, rng);
  EXPECT_EQ(coordinate_count(nan, CycleKind::Autoencode), 410u);
  const auto nanb = init_network(Arch::Nan, 20, 10, {DecoderActivation::Sigmoid, true}, rng);
  EXPECT_EQ(coordinate_count(nanb, CycleKind::Autoencode), 610u);
  const auto annb = init_network(Arch::Ann, 20, 10, {DecoderActivation::Sigmoid, true}, rng);
  EXPECT_EQ(coordinate_count(annb, CycleKind::Autoencode), 430u);

  // every flat index maps to a distinct valid coordinate
  for (const auto* net : {&nan, &nanb, &annb})
    for (CycleKind kind : {CycleKind::Task, CycleKind::Autoencode}) {
      std::vector<std::string> seen;
      for (std::size_t i = 0; i < coordinate_count(*net, kind); ++i) {
        const Coord c = coordinate_at(*net, kind, i);
        EXPECT_TRUE(coord_valid(*net, c));
        seen.push_back(to_string(c));
      }
      std::sort(seen.begin(), seen.end());
      EXPECT_EQ(std::unique(seen.begin(), seen.end()), seen.end());
    }
}

TEST(PickCoordinate, TaskCyclesAreUniformOverOutputNode) {
  Rng rng(3);
  const auto nn = init_network(Arch::Nn, 20, 10, {}, rng);
  constexpr int kDraws = 100000;
  std::vector<int> counts(11, 0);
  for (int i = 0; i < kDraws; ++i) {
    const Coord c = pick_coordinate(nn, CycleKind::Task, rng);
    ASSERT_TRUE(c.layer == Layer::OutputWeight || c.layer == Layer::OutputBias);
    ++counts[c.layer == Layer::OutputBias ? 10 : c.row];
  }
  const double p = 1.0 / 11.0;
  const double sigma = std::sqrt(kDraws * p * (1.0 - p));
  for (int c : counts) EXPECT_LE(std::abs(c - kDraws * p), 3.0 * sigma);
}

TEST(PickCoordinate, AutoencodeCyclesCoverHiddenLayerUniformly) {
  Rng rng(4);
  const auto nan = init_network(Arch::Nan, 20, 10, {}, rng);
  constexpr int kDraws = 100000;
  int enc = 0, hb = 0, dec = 0;
  for (int i = 0; i < kDraws; ++i) {
    const Coord c = pick_coordinate(nan, CycleKind::Autoencode, rng);
    enc += c.layer == Layer::Encoder;
    hb += c.layer == Layer::HiddenBias;
    dec += c.layer == Layer::Decoder;
  }
  EXPECT_EQ(enc + hb + dec, kDraws);
  const auto check = [&](int count, double p) {
    EXPECT_LE(std::abs(count - kDraws * p), 3.0 * std::sqrt(kDraws * p * (1 - p)));
  };
  check(enc, 200.0 / 410.0);
  check(hb, 10.0 / 410.0);
  check(dec, 200.0 / 410.0);
}

TEST(ProposeAndTest, ZeroDeltaIsATieResolvedByCoin) {
  const auto ds = random_dataset(20, 5, 3);
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    Network net = init_network(Arch::Nan, 5, 2, {}, rng);
    const auto before = net;
    const auto rec = propose_with_delta(net, {Layer::Decoder, 1, 3}, CycleKind::Autoencode, 0.0, ds, rng, nullptr);
    EXPECT_EQ(rec.objective_before, rec.objective_after);
    EXPECT_EQ(net, before);
    accepted += rec.accepted;
  }
  EXPECT_GT(accepted, 60);
  EXPECT_LT(accepted, 140);
}

TEST(ProposeAndTest, ImprovingMoveIsAccepted) {
  // one example with target 0.9; output is sigmoid(bias) = 0.5 initially
  const auto ds = dataset_from({{1.0, -1.0}}, {0.9});
  for (bool use_cache : {false, true}) {
    Network net = zero_network(Arch::Nn, 2, 1);
    Rng rng(1);
    EvalCache cache(net, ds);
    const auto rec = propose_with_delta(net, {Layer::OutputBias, 0, 0}, CycleKind::Task, 0.5, ds, rng,
                                        use_cache ? &cache : nullptr);
    EXPECT_TRUE(rec.accepted);
    EXPECT_LT(rec.objective_after, rec.objective_before);
    EXPECT_EQ(net.core.output_bias, 0.5);
  }
}

TEST(ProposeAndTest, WorseningMoveIsRevertedExactly) {
  const auto ds = dataset_from({{1.0, -1.0}}, {0.9});
  for (bool use_cache : {false, true}) {
    Rng init(8);
    Network net = init_network(Arch::Nn, 2, 1, {}, init);
    net.core.output_bias = 0.1;
    net.core.output_w[0] = 0.0;
    const auto before = net;
    Rng rng(1);
    EvalCache cache(net, ds);
    const auto rec = propose_with_delta(net, {Layer::OutputBias, 0, 0}, CycleKind::Task, -0.37, ds, rng,
                                        use_cache ? &cache : nullptr);
    EXPECT_FALSE(rec.accepted);
    EXPECT_GT(rec.objective_after, rec.objective_before);
    EXPECT_EQ(flatten_parameters(net), flatten_parameters(before));
  }
}

TEST(ProposeAndTest, ObjectiveFollowsArchitectureAndCycle) {
  const Coord enc{Layer::Encoder, 2, 1};
  EXPECT_EQ(cycle_objective(Arch::Nan, CycleKind::Autoencode, enc).objective, Objective::NeuronAe);
  EXPECT_EQ(cycle_objective(Arch::Nan, CycleKind::Autoencode, enc).neuron, 2u);
  EXPECT_EQ(cycle_objective(Arch::Ann, CycleKind::Autoencode, enc).objective, Objective::LayerAe);
  EXPECT_EQ(cycle_objective(Arch::Nn, CycleKind::Autoencode, enc).objective, Objective::Task);
  EXPECT_EQ(cycle_objective(Arch::Nan, CycleKind::Task, {Layer::OutputWeight, 1, 0}).objective, Objective::Task);
}

TEST(Train, IterationContract) {
  const auto ds = random_dataset(20, 5, 1);
  auto c = small_config(1);
  c.iterations = 0;
  EXPECT_THROW(train(Arch::Nan, ds, ds, c), ParameterError);
  c.iterations = 1;
  const auto res = train(Arch::Nan, ds, ds, c);
  EXPECT_EQ(res.log.cycles.size(), 1u);
  EXPECT_EQ(res.log.cycles[0].iter, 1u);
  EXPECT_TRUE(res.log.snapshots.empty());
}

TEST(Train, ConfigValidation) {
  const auto ds = random_dataset(20, 5, 1);
  auto c = small_config(1);
  c.r = 0.0;
  EXPECT_THROW(train(Arch::Nn, ds, ds, c), ParameterError);
  c = small_config(1);
  c.p_autoencode = 1.5;
  EXPECT_THROW(train(Arch::Nn, ds, ds, c), ParameterError);
  const auto narrow = random_dataset(20, 4, 1);
  EXPECT_THROW(train(Arch::Nn, ds, narrow, small_config(1)), ParameterError);
}

TEST(Train, DefaultsEmitHundredSnapshots) {
  const auto land = nk_new(20, 5, 1);
  const auto tr = gen_dataset(land, 1000, 2);
  const auto te = gen_dataset(land, 1000, 3);
  TrainConfig c;  // 10000 cycles, H=10, R=1.0, p=0.5, snapshot every 100
  c.seed = 4;
  const auto res = train(Arch::Nan, tr, te, c);
  ASSERT_EQ(res.log.cycles.size(), 10000u);
  ASSERT_EQ(res.log.snapshots.size(), 100u);
  for (std::size_t s = 0; s < 100; ++s) EXPECT_EQ(res.log.snapshots[s].iter, (s + 1) * 100);
  EXPECT_EQ(res.log.final_network, res.network);
  EXPECT_EQ(res.log.snapshots.back().train_task_mse, task_mse(res.network, tr));
  EXPECT_EQ(*res.log.snapshots.back().test_task_mse, task_mse(res.network, te));
  EXPECT_EQ(*res.log.snapshots.back().train_ae_mse, mean_neuron_ae_mse(res.network, tr));
}

TEST(Train, DeterministicInSeed) {
  const auto ds = random_dataset(30, 6, 2);
  for (Arch arch : {Arch::Nan, Arch::Ann, Arch::Nn}) {
    const auto a = train(arch, ds, ds, small_config(17));
    const auto b = train(arch, ds, ds, small_config(17));
    EXPECT_EQ(a.log, b.log);
    EXPECT_NE(a.log, train(arch, ds, ds, small_config(18)).log);
  }
}

TEST(Train, IncrementalAndNaiveRunsAreIdentical) {
  const auto ds = random_dataset(30, 6, 3);
  for (Arch arch : {Arch::Nan, Arch::Ann, Arch::Nn}) {
    auto c = small_config(5);
    c.decoder_bias = true;
    const auto fast = train(arch, ds, ds, c);
    c.incremental = false;
    const auto slow = train(arch, ds, ds, c);
    EXPECT_EQ(fast.log, slow.log) << to_string(arch);
  }
}

TEST(Train, RecordInvariants) {
  const auto ds = random_dataset(30, 6, 4);
  for (Arch arch : {Arch::Nan, Arch::Ann, Arch::Nn}) {
    std::vector<double> prev;
    auto c = small_config(9);
    {
      Rng init(c.seed);
      prev = flatten_parameters(init_network(arch, 6, c.h, c.decoder(), init));
    }
    train(arch, ds, ds, c, [&](const Network& net, const CycleRecord& rec) {
      const auto now = flatten_parameters(net);
      std::size_t changed = 0;
      for (std::size_t i = 0; i < now.size(); ++i) changed += now[i] != prev[i];
      if (rec.accepted) {
        EXPECT_LE(rec.objective_after, rec.objective_before);
        EXPECT_LE(changed, 1u);
      } else {
        EXPECT_EQ(changed, 0u);
      }
      prev = now;
    });
  }
}

TEST(Train, MonotoneObjectives) {
  const auto land = nk_new(10, 3, 5);
  const auto ds = gen_dataset(land, 60, 6);
  auto c = small_config(21);
  c.iterations = 600;

  double last = 1e300;
  train(Arch::Nn, ds, ds, c, [&](const Network& net, const CycleRecord&) {
    const double v = task_mse(net, ds);
    EXPECT_LE(v, last);
    last = v;
  });

  std::vector<double> per_neuron(c.h, 1e300);
  train(Arch::Nan, ds, ds, c, [&](const Network& net, const CycleRecord&) {
    for (std::size_t j = 0; j < c.h; ++j) {
      const double v = neuron_ae_mse(net, j, ds);
      EXPECT_LE(v, per_neuron[j]);
      per_neuron[j] = v;
    }
  });

  last = 1e300;
  train(Arch::Ann, ds, ds, c, [&](const Network& net, const CycleRecord&) {
    const double v = layer_ae_mse(net, ds);
    EXPECT_LE(v, last);
    last = v;
  });
}
