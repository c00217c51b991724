#include "chakra/synth/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"

namespace chakra {
namespace {

using json = nlohmann::ordered_json;

constexpr double kProbTolerance = 1e-9;
constexpr std::string_view kFormat = "chakra-synth-models";
constexpr int kFormatVersion = 1;

size_t type_index(CommType t) {
  for (size_t i = 0; i < kNumCollectives; ++i) {
    if (kCollectiveTypes[i] == t) return i;
  }
  throw SynthError("comm type " + std::string(to_string(t)) +
                   " is not a collective");
}

double sq_dist(const TypeVector& a, const TypeVector& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Seeded k-means++ / Lloyd over composition vectors. Returns assignments.
std::vector<size_t> kmeans(const std::vector<TypeVector>& points, size_t k,
                           std::mt19937_64& rng) {
  const size_t n = points.size();
  std::vector<TypeVector> centers;
  centers.push_back(points[std::uniform_int_distribution<size_t>(0, n - 1)(rng)]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0;
    for (size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
      total += d2[i];
    }
    size_t pick = 0;
    double u = std::uniform_real_distribution<double>(0, total)(rng);
    for (; pick + 1 < n && (u >= d2[pick] || d2[pick] == 0); ++pick) {
      u -= d2[pick];
    }
    centers.push_back(points[pick]);
  }
  std::vector<size_t> assign(n, SIZE_MAX);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      size_t best = 0;
      for (size_t j = 1; j < k; ++j) {
        if (sq_dist(points[i], centers[j]) < sq_dist(points[i], centers[best])) {
          best = j;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<TypeVector> sum(k, TypeVector{});
    std::vector<size_t> count(k, 0);
    for (size_t i = 0; i < n; ++i) {
      for (size_t t = 0; t < kNumCollectives; ++t) sum[assign[i]][t] += points[i][t];
      ++count[assign[i]];
    }
    for (size_t j = 0; j < k; ++j) {
      if (count[j] == 0) continue;
      for (size_t t = 0; t < kNumCollectives; ++t) {
        centers[j][t] = sum[j][t] / static_cast<double>(count[j]);
      }
    }
  }
  return assign;
}

void normalize(TypeVector& v) {
  double total = 0;
  for (double p : v) total += p;
  if (total > 0) {
    for (double& p : v) p /= total;
  }
}

size_t sample_index(const TypeVector& probs, std::mt19937_64& rng) {
  double u = std::uniform_real_distribution<double>(0, 1)(rng);
  size_t last = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0) continue;
    last = i;
    if (u < probs[i]) return i;
    u -= probs[i];
  }
  return last;
}

void check_distribution(const TypeVector& v, const std::string& what) {
  double total = 0;
  for (double p : v) {
    if (!(p >= 0) || !std::isfinite(p)) {
      throw SynthError(what + " has a negative or non-finite probability");
    }
    total += p;
  }
  if (std::abs(total - 1) > kProbTolerance) {
    throw SynthError(what + " sums to " + std::to_string(total));
  }
}

int64_t round_up4(double bytes) {
  const double clamped = std::clamp(bytes, 4.0, 0x1p60);
  const auto b = static_cast<int64_t>(std::ceil(clamped));
  return (b + 3) / 4 * 4;
}

}  // namespace

FitResult fit_models(std::span<const MasterTrace> corpus,
                     const FitOptions& options) {
  if (corpus.empty()) throw SynthError("fit_models: empty corpus");
  if (options.components == 0 || options.clusters == 0) {
    throw SynthError("fit_models: components and clusters must be >= 1");
  }
  FitResult result;
  SynthModels& models = result.models;

  std::vector<TypeVector> compositions;
  std::vector<const MasterTrace*> with_ops;
  std::array<std::vector<double>, kNumCollectives> samples;
  for (const auto& m : corpus) {
    models.lengths.lengths.push_back(m.ops.size());
    if (m.ops.empty()) continue;
    TypeVector counts{};
    for (const auto& op : m.ops) {
      const size_t t = type_index(op.type);
      counts[t] += 1;
      double mean = 0;
      for (const auto& [rank, bytes] : op.sizes) mean += static_cast<double>(bytes);
      if (!op.sizes.empty()) mean /= static_cast<double>(op.sizes.size());
      samples[t].push_back(std::log2(std::max(mean, 1.0)));
    }
    normalize(counts);
    compositions.push_back(counts);
    with_ops.push_back(&m);
  }
  if (with_ops.empty()) throw SynthError("fit_models: corpus has no collectives");

  std::set<TypeVector> distinct(compositions.begin(), compositions.end());
  const size_t k = std::min<size_t>(options.clusters, distinct.size());
  std::mt19937_64 rng(options.seed);
  const std::vector<size_t> assign = kmeans(compositions, k, rng);

  std::vector<TypeVector> counts(k, TypeVector{});
  std::vector<std::array<TypeVector, kNumCollectives>> pairs(k);
  std::vector<size_t> members(k, 0);
  for (size_t i = 0; i < with_ops.size(); ++i) {
    const size_t c = assign[i];
    ++members[c];
    const auto& ops = with_ops[i]->ops;
    for (size_t j = 0; j < ops.size(); ++j) {
      const size_t t = type_index(ops[j].type);
      counts[c][t] += 1;
      if (j > 0) pairs[c][type_index(ops[j - 1].type)][t] += 1;
    }
  }
  for (size_t c = 0; c < k; ++c) {
    if (members[c] == 0) continue;
    CommTypeCluster cl;
    cl.weight = static_cast<double>(members[c]);
    cl.composition = counts[c];
    normalize(cl.composition);
    for (size_t t = 0; t < kNumCollectives; ++t) {
      cl.transition[t] = pairs[c][t];
      double row = 0;
      for (double p : cl.transition[t]) row += p;
      if (row == 0) {
        cl.transition[t] = cl.composition;
      } else {
        normalize(cl.transition[t]);
      }
    }
    models.comm_types.clusters.push_back(cl);
  }
  double total = 0;
  for (const auto& cl : models.comm_types.clusters) total += cl.weight;
  for (auto& cl : models.comm_types.clusters) cl.weight /= total;

  for (size_t t = 0; t < kNumCollectives; ++t) {
    if (samples[t].empty()) continue;
    GmmFitOptions g = options.gmm;
    g.components = options.components;
    g.seed = options.seed + t + 1;
    if (samples[t].size() < g.components) {
      result.warnings.push_back(
          std::string(to_string(kCollectiveTypes[t])) + ": " +
          std::to_string(samples[t].size()) + " samples for " +
          std::to_string(g.components) +
          " components; fitting a single component");
      g.components = 1;
    }
    models.sizes[kCollectiveTypes[t]] = fit_gmm(samples[t], g).model;
  }
  return result;
}

void check_models(const SynthModels& models) {
  const auto& clusters = models.comm_types.clusters;
  if (clusters.empty()) throw SynthError("models have no composition cluster");
  double weights = 0;
  for (size_t c = 0; c < clusters.size(); ++c) {
    const auto& cl = clusters[c];
    const std::string name = "cluster " + std::to_string(c);
    if (!(cl.weight >= 0)) throw SynthError(name + " has a negative weight");
    weights += cl.weight;
    check_distribution(cl.composition, name + " composition");
    for (size_t t = 0; t < kNumCollectives; ++t) {
      check_distribution(cl.transition[t],
                         name + " transition row " +
                             std::string(to_string(kCollectiveTypes[t])));
    }
    for (size_t t = 0; t < kNumCollectives; ++t) {
      if (cl.composition[t] > 0 && !models.sizes.count(kCollectiveTypes[t])) {
        throw SynthError(name + " uses " +
                         std::string(to_string(kCollectiveTypes[t])) +
                         " but there is no size model for it");
      }
    }
  }
  if (std::abs(weights - 1) > kProbTolerance) {
    throw SynthError("cluster weights sum to " + std::to_string(weights));
  }
  for (const auto& [type, gmm] : models.sizes) {
    const std::string name = "size model " + std::string(to_string(type));
    if (gmm.components.empty()) throw SynthError(name + " has no components");
    double w = 0;
    for (const auto& c : gmm.components) {
      if (!(c.variance > 0) || !std::isfinite(c.mean) || !(c.weight >= 0)) {
        throw SynthError(name + " has an invalid component");
      }
      w += c.weight;
    }
    if (std::abs(w - 1) > kProbTolerance) {
      throw SynthError(name + " weights sum to " + std::to_string(w));
    }
  }
  if (models.lengths.lengths.empty()) throw SynthError("length model is empty");
}

MasterTrace synthesize_master(const SynthModels& models, const SynthConfig& cfg) {
  check_models(models);
  if (cfg.npus == 0) throw SynthError("synthesize: npus must be >= 1");
  if (!(cfg.split_jitter >= 0 && cfg.split_jitter < 1)) {
    throw SynthError("synthesize: split jitter must be in [0, 1)");
  }
  std::mt19937_64 rng(cfg.seed);
  const auto& clusters = models.comm_types.clusters;

  double u = std::uniform_real_distribution<double>(0, 1)(rng);
  size_t c = 0;
  for (; c + 1 < clusters.size() && u >= clusters[c].weight; ++c) {
    u -= clusters[c].weight;
  }
  const CommTypeCluster& cl = clusters[c];

  const auto& lengths = models.lengths.lengths;
  const uint64_t length =
      cfg.length ? *cfg.length
                 : lengths[std::uniform_int_distribution<size_t>(
                       0, lengths.size() - 1)(rng)];

  MasterTrace master;
  master.npus = cfg.npus;
  master.ops.reserve(length);
  std::uniform_real_distribution<double> jitter(-1, 1);
  size_t prev = 0;
  for (uint64_t i = 0; i < length; ++i) {
    const size_t t = sample_index(i == 0 ? cl.composition : cl.transition[prev], rng);
    prev = t;
    MasterOp op;
    op.seq_no = i;
    op.name = "coll" + std::to_string(i);
    op.type = kCollectiveTypes[t];
    op.group = std::string(kSynthWorldGroup);
    const double log2_bytes =
        std::clamp(models.sizes.at(op.type).sample(rng), 0.0, 60.0);
    const double bytes = std::exp2(log2_bytes);
    for (uint32_t r = 0; r < cfg.npus; ++r) {
      const double scale =
          cfg.split_jitter > 0 ? 1 + cfg.split_jitter * jitter(rng) : 1.0;
      op.sizes[r] = round_up4(bytes * scale);
    }
    master.ops.push_back(std::move(op));
  }
  return master;
}

std::vector<Trace> synthesize(const SynthModels& models, const SynthConfig& cfg) {
  return reconstruct_rank_traces(synthesize_master(models, cfg), cfg.npus);
}

std::string models_to_json(const SynthModels& models) {
  auto type_map = [](const TypeVector& v) {
    json j = json::object();
    for (size_t t = 0; t < kNumCollectives; ++t) {
      j[std::string(to_string(kCollectiveTypes[t]))] = v[t];
    }
    return j;
  };
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kFormatVersion;
  json clusters = json::array();
  for (const auto& cl : models.comm_types.clusters) {
    json transition = json::object();
    for (size_t t = 0; t < kNumCollectives; ++t) {
      transition[std::string(to_string(kCollectiveTypes[t]))] =
          type_map(cl.transition[t]);
    }
    clusters.push_back({{"weight", cl.weight},
                        {"composition", type_map(cl.composition)},
                        {"transition", transition}});
  }
  doc["clusters"] = clusters;
  json sizes = json::object();
  for (const auto& [type, gmm] : models.sizes) {
    json comps = json::array();
    for (const auto& c : gmm.components) {
      comps.push_back(
          {{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
    }
    sizes[std::string(to_string(type))] = comps;
  }
  doc["log2_sizes"] = sizes;
  doc["lengths"] = models.lengths.lengths;
  return doc.dump(2) + "\n";
}

SynthModels models_from_json(std::string_view text) {
  SynthModels models;
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != kFormat) {
      throw SynthError("not a synthesis model document");
    }
    if (doc.at("version").get<int>() != kFormatVersion) {
      throw SynthError("unsupported model version " +
                       doc.at("version").dump());
    }
    auto read_types = [](const json& j) {
      TypeVector v{};
      for (auto it = j.begin(); it != j.end(); ++it) {
        auto type = parse_comm_type(it.key());
        if (!type) throw SynthError("unknown comm type '" + it.key() + "'");
        v[type_index(*type)] = it.value().get<double>();
      }
      return v;
    };
    for (const auto& c : doc.at("clusters")) {
      CommTypeCluster cl;
      cl.weight = c.at("weight").get<double>();
      cl.composition = read_types(c.at("composition"));
      const json& tr = c.at("transition");
      for (auto it = tr.begin(); it != tr.end(); ++it) {
        auto type = parse_comm_type(it.key());
        if (!type) throw SynthError("unknown comm type '" + it.key() + "'");
        cl.transition[type_index(*type)] = read_types(it.value());
      }
      models.comm_types.clusters.push_back(cl);
    }
    const json& sizes = doc.at("log2_sizes");
    for (auto it = sizes.begin(); it != sizes.end(); ++it) {
      auto type = parse_comm_type(it.key());
      if (!type) throw SynthError("unknown comm type '" + it.key() + "'");
      Gmm g;
      for (const auto& c : it.value()) {
        g.components.push_back({c.at("weight").get<double>(),
                                c.at("mean").get<double>(),
                                c.at("variance").get<double>()});
      }
      models.sizes[*type] = g;
    }
    models.lengths.lengths = doc.at("lengths").get<std::vector<uint64_t>>();
  } catch (const json::exception& e) {
    throw SynthError(std::string("malformed model document: ") + e.what());
  }
  check_models(models);
  return models;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw SynthError("ks_statistic: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  size_t i = 0;
  size_t j = 0;
  double d = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / x.size() -
                             static_cast<double>(j) / y.size()));
  }
  return d;
}

}  // namespace chakra
