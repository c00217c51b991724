#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chakra/core/validate.h"
#include "chakra/gen/builder.h"
#include "chakra/sim/simulator.h"
#include "chakra/synth/model.h"
#include "support/random_corpus.h"

namespace chakra {
namespace {

Trace rank_trace(uint32_t npu, std::vector<CommOp> ops) {
  TraceBuilder b(npu);
  std::optional<NodeHandle> prev;
  for (const auto& op : ops) {
    auto h = b.add_node(NodeType::kCommColl, op.name,
                        coll_attrs(op.type, op.bytes, op.group));
    if (prev) b.assign_dep(*prev, h);
    prev = h;
  }
  return b.finalize();
}

size_t type_index(CommType t) {
  for (size_t i = 0; i < kNumCollectives; ++i) {
    if (kCollectiveTypes[i] == t) return i;
  }
  return kNumCollectives;
}

SimConfig sim_config(uint32_t d1, uint32_t d2) {
  SimConfig cfg;
  cfg.topology.d1 = d1;
  cfg.topology.d2 = d2;
  return cfg;
}

TEST(Master, IdenticalSequences) {
  std::vector<CommOp> ops = {{"A", CommType::kAllReduce, "g0", 1024},
                             {"B", CommType::kAllGather, "g0", 2048}};
  std::vector<Trace> traces = {rank_trace(0, ops), rank_trace(1, ops)};
  MasterTrace m = build_master_trace(traces);
  EXPECT_EQ(m.npus, 2u);
  ASSERT_EQ(m.ops.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(m.ops[i].seq_no, i);
    EXPECT_EQ(m.ops[i].participants(), std::vector<uint32_t>({0, 1}));
  }
  EXPECT_EQ(m.ops[1].sizes.at(1), 2048);
}

TEST(Master, DisjointGroupsRoundTrip) {
  std::vector<std::vector<CommOp>> seqs = {
      {{"x", CommType::kAllReduce, "a", 8}, {"y", CommType::kAllToAll, "a", 16}},
      {{"x", CommType::kAllReduce, "a", 8}, {"y", CommType::kAllToAll, "a", 32}},
      {{"p", CommType::kReduceScatter, "b", 64}},
      {{"p", CommType::kReduceScatter, "b", 64}},
  };
  std::vector<Trace> traces;
  for (uint32_t r = 0; r < 4; ++r) traces.push_back(rank_trace(r, seqs[r]));
  MasterTrace m = build_master_trace(traces);
  ASSERT_EQ(m.ops.size(), 3u);
  for (const auto& op : m.ops) EXPECT_EQ(op.participants().size(), 2u);
  auto back = reconstruct_rank_traces(m, 4);
  for (uint32_t r = 0; r < 4; ++r) EXPECT_EQ(comm_sequence(back[r]), seqs[r]);
}

TEST(Master, CrossedOrderRejectedNamingGroup) {
  std::vector<Trace> traces = {
      rank_trace(0, {{"A", CommType::kAllReduce, "g0", 4},
                     {"B", CommType::kAllReduce, "g0", 4}}),
      rank_trace(1, {{"B", CommType::kAllReduce, "g0", 4},
                     {"A", CommType::kAllReduce, "g0", 4}}),
  };
  try {
    build_master_trace(traces);
    FAIL();
  } catch (const MasterTraceError& e) {
    EXPECT_EQ(e.group(), "g0");
    EXPECT_NE(std::string(e.what()).find("g0"), std::string::npos);
  }
}

TEST(Master, CrossGroupCycleRejected) {
  std::vector<Trace> traces = {
      rank_trace(0, {{"A", CommType::kAllReduce, "g1", 4},
                     {"B", CommType::kAllReduce, "g2", 4}}),
      rank_trace(1, {{"B", CommType::kAllReduce, "g2", 4},
                     {"A", CommType::kAllReduce, "g1", 4}}),
  };
  try {
    build_master_trace(traces);
    FAIL();
  } catch (const MasterTraceError& e) {
    EXPECT_TRUE(e.group() == "g1" || e.group() == "g2");
  }
}

TEST(Master, CountMismatchRejected) {
  std::vector<Trace> traces = {
      rank_trace(0, {{"A", CommType::kAllReduce, "g", 4},
                     {"B", CommType::kAllReduce, "g", 4}}),
      rank_trace(1, {{"A", CommType::kAllReduce, "g", 4}}),
  };
  EXPECT_THROW(build_master_trace(traces), MasterTraceError);
  traces[1] = rank_trace(1, {{"A", CommType::kAllGather, "g", 4},
                             {"B", CommType::kAllReduce, "g", 4}});
  EXPECT_THROW(build_master_trace(traces), MasterTraceError);
}

TEST(Master, NpuIdsChecked) {
  std::vector<Trace> traces = {rank_trace(0, {}), rank_trace(0, {})};
  EXPECT_THROW(build_master_trace(traces), Error);
}

TEST(Master, UnusedRankGetsEmptyTrace) {
  MasterTrace m;
  m.npus = 3;
  m.ops.push_back(MasterOp{0, "a", CommType::kAllReduce, "g", {{0, 4}, {1, 4}}});
  auto traces = reconstruct_rank_traces(m, 3);
  ASSERT_EQ(traces.size(), 3u);
  EXPECT_TRUE(traces[2].nodes.empty());
  EXPECT_EQ(traces[2].npu_id, 2u);
}

TEST(Master, RandomCorporaRoundTripAndReplay) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 100; ++i) {
    const uint32_t npus = std::uniform_int_distribution<uint32_t>(2, 16)(rng);
    auto corpus = testing::random_mergeable_corpus(rng, npus, 60);
    MasterTrace m = build_master_trace(corpus.traces);
    auto back = reconstruct_rank_traces(m, npus);
    for (uint32_t r = 0; r < npus; ++r) {
      ASSERT_EQ(comm_sequence(back[r]), corpus.sequences[r]) << "corpus " << i;
    }
    EXPECT_EQ(build_master_trace(back), m);
    if (i % 10 == 0) {
      EXPECT_NO_THROW(run_simulation(back, sim_config(npus, 1)));
    }
  }
}

std::vector<double> normal_samples(std::mt19937_64& rng, size_t n,
                                   std::vector<std::pair<double, double>> parts) {
  std::vector<double> out;
  std::uniform_int_distribution<size_t> pick(0, parts.size() - 1);
  for (size_t i = 0; i < n; ++i) {
    auto [mu, sigma] = parts[pick(rng)];
    out.push_back(std::normal_distribution<double>(mu, sigma)(rng));
  }
  return out;
}

TEST(Gmm, RecoversSingleGaussian) {
  std::mt19937_64 rng(1);
  auto x = normal_samples(rng, 10000, {{10, 1}});
  GmmFitOptions opt;
  opt.components = 1;
  GmmFit fit = fit_gmm(x, opt);
  ASSERT_EQ(fit.model.components.size(), 1u);
  EXPECT_NEAR(fit.model.components[0].mean, 10, 0.1);
  EXPECT_NEAR(fit.model.components[0].variance, 1, 0.1);
  EXPECT_DOUBLE_EQ(fit.model.components[0].weight, 1);
  EXPECT_TRUE(fit.converged);
}

TEST(Gmm, RecoversTwoComponentsDeterministically) {
  std::mt19937_64 rng(2);
  auto x = normal_samples(rng, 10000, {{8, 1}, {20, 1}});
  GmmFitOptions opt;
  opt.components = 2;
  opt.seed = 9;
  GmmFit fit = fit_gmm(x, opt);
  ASSERT_EQ(fit.model.components.size(), 2u);
  const auto& lo = fit.model.components[0];
  const auto& hi = fit.model.components[1];
  EXPECT_NEAR(lo.mean, 8, 0.1);
  EXPECT_NEAR(hi.mean, 20, 0.1);
  EXPECT_NEAR(lo.weight, 0.5, 0.05);
  EXPECT_NEAR(hi.weight, 0.5, 0.05);
  EXPECT_EQ(fit_gmm(x, opt).model, fit.model);
}

TEST(Gmm, DensityAndSampling) {
  Gmm g;
  g.components = {{0.5, 0, 1}, {0.5, 10, 4}};
  const double want = 0.5 * std::exp(-0.5) / std::sqrt(2 * M_PI) +
                      0.5 * std::exp(-81.0 / 8) / std::sqrt(8 * M_PI);
  EXPECT_NEAR(std::exp(g.log_density(1)), want, 1e-15);
  std::mt19937_64 rng(4);
  double sum = 0;
  for (int i = 0; i < 20000; ++i) sum += g.sample(rng);
  EXPECT_NEAR(sum / 20000, 5, 0.1);
}

TEST(Gmm, Errors) {
  std::vector<double> none;
  std::vector<double> two = {1, 2};
  GmmFitOptions opt;
  EXPECT_THROW(fit_gmm(none, opt), GmmError);
  opt.components = 3;
  EXPECT_THROW(fit_gmm(two, opt), GmmError);
  opt.components = 0;
  EXPECT_THROW(fit_gmm(two, opt), GmmError);
  std::vector<double> bad = {1, NAN};
  opt.components = 1;
  EXPECT_THROW(fit_gmm(bad, opt), GmmError);
}

TEST(Gmm, IdenticalSamplesHitVarianceFloor) {
  std::vector<double> x(50, 12.0);
  GmmFitOptions opt;
  opt.components = 1;
  GmmFit fit = fit_gmm(x, opt);
  EXPECT_DOUBLE_EQ(fit.model.components[0].mean, 12.0);
  EXPECT_DOUBLE_EQ(fit.model.components[0].variance, opt.variance_floor);
}

SynthModels ar_ag_model() {
  SynthModels m;
  CommTypeCluster c;
  c.composition[type_index(CommType::kAllReduce)] = 0.7;
  c.composition[type_index(CommType::kAllGather)] = 0.3;
  for (auto& row : c.transition) row = c.composition;
  m.comm_types.clusters = {c};
  m.sizes[CommType::kAllReduce].components = {{1, 20, 1}};
  m.sizes[CommType::kAllGather].components = {{0.5, 10, 0.5}, {0.5, 14, 0.5}};
  m.lengths.lengths = {10000};
  return m;
}

TEST(Synth, TypeFrequenciesMatchModel) {
  SynthModels m = ar_ag_model();
  SynthConfig cfg;
  cfg.seed = 5;
  MasterTrace master = synthesize_master(m, cfg);
  ASSERT_EQ(master.ops.size(), 10000u);
  TypeVector freq{};
  for (const auto& op : master.ops) freq[type_index(op.type)] += 1.0 / 10000;
  double tv = 0;
  for (size_t i = 0; i < kNumCollectives; ++i) {
    tv += 0.5 * std::abs(freq[i] - m.comm_types.clusters[0].composition[i]);
  }
  EXPECT_LT(tv, 0.02);
}

TEST(Synth, SizesAndSplits) {
  SynthModels m = ar_ag_model();
  m.lengths.lengths = {200};
  SynthConfig cfg;
  cfg.npus = 4;
  cfg.split_jitter = 0.25;
  cfg.seed = 8;
  MasterTrace master = synthesize_master(m, cfg);
  for (size_t i = 0; i < master.ops.size(); ++i) {
    const auto& op = master.ops[i];
    EXPECT_EQ(op.name, "coll" + std::to_string(i));
    EXPECT_EQ(op.group, kSynthWorldGroup);
    EXPECT_EQ(op.participants(), std::vector<uint32_t>({0, 1, 2, 3}));
    for (const auto& [r, bytes] : op.sizes) {
      EXPECT_EQ(bytes % 4, 0);
      EXPECT_GE(bytes, 4);
    }
  }
}

TEST(Synth, DeterministicAndReplayable) {
  SynthModels m = ar_ag_model();
  m.lengths.lengths = {50, 120};
  SynthConfig cfg;
  cfg.npus = 8;
  cfg.split_jitter = 0.1;
  cfg.seed = 77;
  auto a = synthesize(m, cfg);
  auto b = synthesize(m, cfg);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 8u);
  for (const auto& t : a) EXPECT_TRUE(validate_trace(t).empty());
  EXPECT_NO_THROW(run_simulation(a, sim_config(2, 4)));
  cfg.seed = 78;
  EXPECT_NE(synthesize(m, cfg), a);
}

TEST(Synth, RejectsBadInput) {
  SynthModels m = ar_ag_model();
  SynthConfig cfg;
  cfg.npus = 0;
  EXPECT_THROW(synthesize(m, cfg), SynthError);
  cfg.npus = 1;
  cfg.split_jitter = 1.0;
  EXPECT_THROW(synthesize(m, cfg), SynthError);
  m.sizes.erase(CommType::kAllGather);
  EXPECT_THROW(check_models(m), SynthError);
}

std::vector<MasterTrace> source_corpus(std::mt19937_64& rng, size_t masters) {
  // Two workload families with different compositions; sizes drawn from
  // fixed per-type log-normal mixtures.
  std::vector<MasterTrace> out;
  for (size_t i = 0; i < masters; ++i) {
    const bool family = i % 2 == 0;
    const uint32_t npus = 4;
    std::vector<Trace> traces;
    std::vector<CommOp> ops;
    const size_t len = std::uniform_int_distribution<size_t>(20, 60)(rng);
    for (size_t k = 0; k < len; ++k) {
      const bool first = std::bernoulli_distribution(family ? 0.8 : 0.2)(rng);
      CommType t = family ? (first ? CommType::kAllReduce : CommType::kAllToAll)
                          : (first ? CommType::kAllReduce : CommType::kReduceScatter);
      double lg = t == CommType::kAllReduce
                      ? std::normal_distribution<double>(
                            std::bernoulli_distribution(0.5)(rng) ? 16 : 22, 1)(rng)
                      : std::normal_distribution<double>(12, 1.5)(rng);
      int64_t bytes = std::max<int64_t>(4, static_cast<int64_t>(std::exp2(lg)) / 4 * 4);
      ops.push_back({"c" + std::to_string(k), t, "world", bytes});
    }
    for (uint32_t r = 0; r < npus; ++r) traces.push_back(rank_trace(r, ops));
    out.push_back(build_master_trace(traces));
  }
  return out;
}

std::map<CommType, std::vector<double>> log_sizes(std::span<const MasterTrace> ms) {
  std::map<CommType, std::vector<double>> out;
  for (const auto& m : ms) {
    for (const auto& op : m.ops) {
      out[op.type].push_back(std::log2(static_cast<double>(op.sizes.begin()->second)));
    }
  }
  return out;
}

TEST(Synth, FitRecoversCorpusStructure) {
  std::mt19937_64 rng(123);
  auto corpus = source_corpus(rng, 80);
  FitOptions opt;
  opt.seed = 3;
  FitResult fit = fit_models(corpus, opt);
  EXPECT_TRUE(fit.warnings.empty());
  EXPECT_NO_THROW(check_models(fit.models));
  ASSERT_EQ(fit.models.comm_types.clusters.size(), 2u);
  for (const auto& c : fit.models.comm_types.clusters) {
    EXPECT_NEAR(c.weight, 0.5, 0.01);
  }
  EXPECT_EQ(fit.models.lengths.lengths.size(), 80u);
  // The all-reduce size model should find both modes.
  const auto& ar = fit.models.sizes.at(CommType::kAllReduce).components;
  ASSERT_EQ(ar.size(), 2u);
  EXPECT_NEAR(ar[0].mean, 16, 0.3);
  EXPECT_NEAR(ar[1].mean, 22, 0.3);

  EXPECT_EQ(fit_models(corpus, opt).models, fit.models);
  EXPECT_EQ(models_from_json(models_to_json(fit.models)), fit.models);
}

TEST(Synth, HeldOutKolmogorovSmirnov) {
  std::mt19937_64 rng(321);
  auto train = source_corpus(rng, 200);
  auto held = source_corpus(rng, 200);
  FitOptions opt;
  opt.seed = 1;
  SynthModels models = fit_models(train, opt).models;
  std::vector<MasterTrace> synth;
  for (uint64_t s = 0; s < 200; ++s) {
    SynthConfig cfg;
    cfg.npus = 4;
    cfg.seed = 1000 + s;
    synth.push_back(synthesize_master(models, cfg));
  }
  auto a = log_sizes(held);
  auto b = log_sizes(synth);
  for (const auto& [type, xs] : a) {
    ASSERT_TRUE(b.count(type)) << to_string(type);
    EXPECT_LT(ks_statistic(xs, b[type]), 0.1) << to_string(type);
  }
}

TEST(Synth, OutputDoesNotCopySourceSequences) {
  std::mt19937_64 rng(55);
  auto corpus = source_corpus(rng, 40);
  SynthModels models = fit_models(corpus, FitOptions{}).models;
  for (uint64_t s = 0; s < 40; ++s) {
    SynthConfig cfg;
    cfg.npus = 4;
    cfg.seed = s;
    MasterTrace out = synthesize_master(models, cfg);
    if (out.ops.size() < 10) continue;
    for (const auto& src : corpus) {
      bool same = src.ops.size() == out.ops.size();
      for (size_t i = 0; same && i < out.ops.size(); ++i) {
        same = src.ops[i].type == out.ops[i].type &&
               src.ops[i].sizes.at(0) == out.ops[i].sizes.at(0);
      }
      EXPECT_FALSE(same);
    }
  }
}

TEST(Synth, SingleOpCorpus) {
  std::vector<Trace> traces = {rank_trace(0, {{"a", CommType::kAllGather, "w", 4096}})};
  std::vector<MasterTrace> corpus = {build_master_trace(traces)};
  FitResult fit = fit_models(corpus, FitOptions{});
  EXPECT_FALSE(fit.warnings.empty());
  const auto& g = fit.models.sizes.at(CommType::kAllGather).components;
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0].mean, 12);
  SynthConfig cfg;
  cfg.npus = 2;
  auto out = synthesize(fit.models, cfg);
  ASSERT_EQ(out.size(), 2u);
  ASSERT_EQ(out[0].nodes.size(), 1u);
  EXPECT_NEAR(static_cast<double>(*get_int(out[0].nodes[0], attr::kCommSize)), 4096, 16);
}

TEST(Synth, ModelJsonErrors) {
  EXPECT_THROW(models_from_json("{}"), SynthError);
  EXPECT_THROW(models_from_json("not json"), SynthError);
  std::string doc = models_to_json(ar_ag_model());
  auto pos = doc.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos) << doc.substr(0, 200);
  doc.replace(pos, 12, "\"version\": 9");
  EXPECT_THROW(models_from_json(doc), SynthError);
}

TEST(Ks, Statistic) {
  std::vector<double> a = {1, 2, 3, 4};
  std::vector<double> b = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(ks_statistic(a, b), 0);
  std::vector<double> c = {10, 11};
  EXPECT_DOUBLE_EQ(ks_statistic(a, c), 1);
  std::vector<double> d = {2.5};
  EXPECT_DOUBLE_EQ(ks_statistic(a, d), 0.5);
}

}  // namespace
}  // namespace chakra
