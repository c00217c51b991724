#include "chakra/cli/cli.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "chakra/convert/convert.h"
#include "chakra/core/codec.h"
#include "chakra/core/validate.h"
#include "chakra/sim/sweep.h"
#include "chakra/synth/model.h"
#include "chakra/viz/dot.h"
#include "chakra/viz/timeline.h"
#include "json.hpp"

namespace chakra {
namespace {

namespace fs = std::filesystem;

// A flag value that parsed syntactically but is not acceptable.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Validation failures reported line by line rather than as one message.
class ReportedError : public Error {
 public:
  using Error::Error;
};

std::string read_text(const fs::path& path) {
  auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text(const fs::path& path, std::string_view text) {
  write_file_bytes(path, std::span(reinterpret_cast<const uint8_t*>(text.data()),
                                   text.size()));
}

// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, std::string_view text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text(path, text);
  }
}

Format encoding(const std::string& name) {
  auto f = parse_format(name);
  if (!f) throw UsageError("unknown encoding '" + name + "' (json or binary)");
  return *f;
}

template <typename F>
auto usage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const TopologyError& e) {
    throw UsageError(e.what());
  }
}

struct Common {
  std::string output;
  std::string prefix = "trace";
  std::string encoding = "json";
};

CLI::Option* add_output(CLI::App* cmd, Common& c, const std::string& what) {
  return cmd->add_option("-o,--output,--out", c.output, what);
}

void add_trace_output(CLI::App* cmd, Common& c) {
  add_output(cmd, c, "Directory for <prefix>.<npu>.et files")->required();
  cmd->add_option("--prefix", c.prefix, "Trace file prefix")
      ->capture_default_str();
  cmd->add_option("--encoding", c.encoding, "json or binary")
      ->capture_default_str();
}

void write_traces(const Common& c, std::span<const Trace> traces,
                  std::ostream& out) {
  auto paths = write_trace_set(c.output, c.prefix, traces, encoding(c.encoding));
  for (const auto& p : paths) out << p.string() << "\n";
}

// Loads one master trace per corpus directory. A directory holding .et files
// is one corpus item; otherwise each subdirectory with .et files is.
std::vector<MasterTrace> load_corpus(const std::vector<std::string>& dirs) {
  std::vector<MasterTrace> corpus;
  auto has_traces = [](const fs::path& d) {
    for (const auto& e : fs::directory_iterator(d)) {
      if (e.is_regular_file() && e.path().extension() == ".et") return true;
    }
    return false;
  };
  for (const auto& d : dirs) {
    if (!fs::is_directory(d)) throw Error("corpus '" + d + "' is not a directory");
    if (has_traces(d)) {
      auto traces = read_trace_dir(d);
      corpus.push_back(build_master_trace(traces));
      continue;
    }
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(d)) {
      if (e.is_directory() && has_traces(e.path())) subdirs.push_back(e.path());
    }
    std::sort(subdirs.begin(), subdirs.end());
    if (subdirs.empty()) throw Error("corpus '" + d + "' holds no .et files");
    for (const auto& s : subdirs) {
      auto traces = read_trace_dir(s);
      corpus.push_back(build_master_trace(traces));
    }
  }
  return corpus;
}

std::vector<std::pair<double, double>> parse_bw_grid(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) out.push_back(usage([&] { return parse_pair(item); }));
  }
  if (out.empty()) throw UsageError("--bw-grid needs at least one B1,B2 pair");
  return out;
}

Topology topology_from(const std::string& spec, const std::string& bw,
                       const std::string& latency) {
  return usage([&] {
    Topology t = parse_topology(spec);
    if (!bw.empty()) std::tie(t.bw1, t.bw2) = parse_pair(bw);
    if (!latency.empty()) std::tie(t.lat1, t.lat2) = parse_pair(latency);
    check_topology(t);
    return t;
  });
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Chakra execution trace toolkit", "chakra"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // convert
  Common convert_out;
  std::string convert_in;
  std::string convert_from;
  double cycles_per_us = 1.0;
  auto* convert = app.add_subcommand("convert", "Convert a framework trace");
  convert->add_option("-i,--input", convert_in, "PyTorch .json or FlexFlow .dot")
      ->required()->check(CLI::ExistingFile);
  convert->add_option("--from", convert_from,
                      "pytorch or flexflow (default: by extension)");
  convert->add_option("--cycles-per-us", cycles_per_us,
                      "Cycles per microsecond of PyTorch durations")
      ->capture_default_str();
  add_trace_output(convert, convert_out);

  // validate
  std::vector<std::string> validate_in;
  std::string validate_dir;
  std::string validate_report;
  auto* validate = app.add_subcommand("validate", "Check trace invariants");
  validate->add_option("-i,--input", validate_in, "Trace files");
  validate->add_option("--trace-dir", validate_dir, "Directory of trace files");
  validate->add_option("-o,--output,--out", validate_report,
                       "Write the summary here instead of stdout");

  // visualize
  std::string viz_in;
  std::string viz_out;
  auto* visualize =
      app.add_subcommand("visualize", "Render a trace as a DOT graph");
  visualize->add_option("-i,--input", viz_in, "Trace file")
      ->required()->check(CLI::ExistingFile);
  visualize->add_option("-o,--output,--out", viz_out, "DOT file (default stdout)");

  // timeline
  std::string tl_in;
  std::string tl_dir;
  std::string tl_out;
  auto* timeline = app.add_subcommand(
      "timeline", "Turn a simulator timeline CSV into Chrome trace JSON");
  timeline->add_option("-i,--input", tl_in, "Timeline CSV")
      ->required()->check(CLI::ExistingFile);
  timeline->add_option("--trace-dir", tl_dir, "Traces the timeline came from")
      ->required()->check(CLI::ExistingDirectory);
  timeline->add_option("-o,--output,--out", tl_out, "JSON file (default stdout)");

  // generate
  Common gen_out;
  WorkloadSpec spec;
  std::string gen_parallelism = "dp";
  std::string gen_dims;
  std::string gen_preset;
  uint64_t gen_backward = 0;
  bool gen_zero2 = false;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic workload");
  generate->add_option("--preset", gen_preset,
                       "mlp-dp, mlp-mp, mlp-dp-mp, mlp-mp-dp, transformer, dlrm");
  generate->add_option("--parallelism", gen_parallelism,
                       "dp, mp, dp-mp, mp-dp or pipeline")
      ->capture_default_str();
  generate->add_option("--npus", spec.npus, "Number of NPUs")
      ->capture_default_str();
  generate->add_option("--layers", spec.layers, "Number of layers")
      ->capture_default_str();
  generate->add_option("--dims", gen_dims, "Placement <d1>x<d2> for hybrids");
  generate->add_option("--compute-cycles", spec.compute_cycles,
                       "Forward cycles per layer, whole model")
      ->capture_default_str();
  generate->add_option("--backward-cycles", gen_backward,
                       "Backward cycles per layer (default 2x forward)");
  generate->add_option("--weight-bytes", spec.weight_bytes, "Bytes per layer")
      ->capture_default_str();
  generate->add_option("--activation-bytes", spec.activation_bytes,
                       "Activation bytes per layer")
      ->capture_default_str();
  generate->add_option("--microbatches", spec.microbatches,
                       "Pipeline microbatches")
      ->capture_default_str();
  generate->add_flag("--zero2", gen_zero2,
                     "Use REDUCE_SCATTER + ALL_GATHER for data parallelism");
  generate->add_option("--embedding-layers", spec.embedding_layers,
                       "Leading ALL_TO_ALL embedding layers")
      ->capture_default_str();
  generate->add_option("--embedding-bytes", spec.embedding_bytes,
                       "Bytes exchanged per embedding layer")
      ->capture_default_str();
  add_trace_output(generate, gen_out);

  // simulate
  std::string sim_dir;
  std::string sim_topology = "torus2d:2x2";
  std::string sim_bw;
  std::string sim_latency;
  std::string sim_timeline;
  std::string sim_breakdown;
  std::string sim_summary;
  double sim_cycle_time = 1e-9;
  auto* simulate = app.add_subcommand("simulate", "Replay traces on a system model");
  simulate->add_option("--trace-dir", sim_dir, "Directory of trace files")
      ->required()->check(CLI::ExistingDirectory);
  simulate->add_option("--topology", sim_topology,
                       "torus2d:<d1>x<d2> or switch2lvl:<d1>x<d2>")
      ->capture_default_str();
  simulate->add_option("--bw", sim_bw, "B1,B2 in bytes/s (default 62e9,62e9)");
  simulate->add_option("--latency", sim_latency, "L1,L2 in seconds per step");
  simulate->add_option("--cycle-time", sim_cycle_time, "Seconds per cycle")
      ->capture_default_str();
  simulate->add_option("--timeline", sim_timeline, "Timeline CSV file");
  simulate->add_option("--breakdown", sim_breakdown, "Per-NPU breakdown CSV");
  simulate->add_option("-o,--output,--out", sim_summary,
                       "Summary JSON file (default stdout)");

  // sweep
  std::vector<std::string> sweep_presets;
  std::string sweep_topology = "torus2d:8x8";
  std::vector<uint32_t> sweep_npus;
  std::string sweep_bw;
  std::string sweep_out;
  unsigned sweep_threads = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a what-if sweep");
  sweep_cmd->add_option("--preset", sweep_presets, "Workload presets (default all)");
  sweep_cmd->add_option("--topology", sweep_topology,
                        "Topology template; its shape is used by --bw-grid")
      ->capture_default_str();
  sweep_cmd->add_option("--npus", sweep_npus, "NPU counts, e.g. 4,16,64")
      ->delimiter(',');
  sweep_cmd->add_option("--bw-grid", sweep_bw,
                        "Bandwidth pairs 'B1,B2;B1,B2;...' on the template");
  sweep_cmd->add_option("--threads", sweep_threads, "Worker threads");
  sweep_cmd->add_option("-o,--output,--out", sweep_out, "CSV file (default stdout)");

  // fit
  std::vector<std::string> fit_corpus;
  FitOptions fit_options;
  std::string fit_out;
  auto* fit = app.add_subcommand("fit", "Fit synthesis models to a trace corpus");
  fit->add_option("--corpus", fit_corpus,
                  "Trace directory, or a directory of trace directories")
      ->required();
  fit->add_option("--components", fit_options.components,
                  "Gaussian components per comm type")
      ->capture_default_str();
  fit->add_option("--clusters", fit_options.clusters, "Composition clusters")
      ->capture_default_str();
  fit->add_option("--seed", fit_options.seed, "RNG seed")->capture_default_str();
  fit->add_option("-o,--output,--out", fit_out, "Model JSON (default stdout)");

  // synthesize
  Common syn_out;
  std::string syn_model;
  SynthConfig syn_cfg;
  uint64_t syn_length = 0;
  auto* synth = app.add_subcommand("synthesize", "Sample traces from fitted models");
  synth->add_option("--model", syn_model, "Model JSON from `fit`")
      ->required()->check(CLI::ExistingFile);
  synth->add_option("--npus", syn_cfg.npus, "Number of NPUs")
      ->capture_default_str();
  synth->add_option("--length", syn_length,
                    "Collectives per trace (default: sampled)");
  synth->add_option("--jitter", syn_cfg.split_jitter,
                    "Per-rank relative size jitter in [0, 1)")
      ->capture_default_str();
  synth->add_option("--seed", syn_cfg.seed, "RNG seed")->capture_default_str();
  add_trace_output(synth, syn_out);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*convert) {
      std::string kind = convert_from;
      if (kind.empty()) {
        const auto ext = fs::path(convert_in).extension();
        kind = ext == ".dot" || ext == ".gv" ? "flexflow" : "pytorch";
      }
      ConvertResult r;
      if (kind == "pytorch") {
        if (!(cycles_per_us > 0)) throw UsageError("--cycles-per-us must be > 0");
        r = convert_pytorch(read_text(convert_in), {cycles_per_us});
      } else if (kind == "flexflow") {
        r = convert_flexflow(read_text(convert_in));
      } else {
        throw UsageError("--from must be pytorch or flexflow");
      }
      for (const auto& w : r.warnings) err << "warning: " << w << "\n";
      write_traces(convert_out, r.traces, out);
    } else if (*validate) {
      std::vector<std::pair<std::string, Trace>> traces;
      for (const auto& f : validate_in) traces.emplace_back(f, read_trace_file(f));
      if (!validate_dir.empty()) {
        for (auto& t : read_trace_dir(validate_dir)) {
          traces.emplace_back(validate_dir + " npu " + std::to_string(t.npu_id),
                              std::move(t));
        }
      }
      if (traces.empty()) throw UsageError("give --input or --trace-dir");
      std::ostringstream summary;
      size_t bad = 0;
      for (const auto& [name, t] : traces) {
        auto report = validate_trace(t);
        if (report.empty()) {
          summary << "ok " << name << " (" << t.nodes.size() << " nodes)\n";
          continue;
        }
        ++bad;
        summary << "invalid " << name << " (" << report.size()
                << " violations)\n";
        for (const auto& v : report) {
          err << name << ": " << format_violation(v) << "\n";
        }
      }
      emit(validate_report, summary.str(), out);
      if (bad) throw ReportedError("");
    } else if (*visualize) {
      emit(viz_out, emit_dot(read_trace_file(viz_in)), out);
    } else if (*timeline) {
      auto traces = read_trace_dir(tl_dir);
      auto rows = parse_timeline_csv(read_text(tl_in));
      emit(tl_out, timeline_to_chrome_trace(rows, node_type_lookup(traces)), out);
    } else if (*generate) {
      std::vector<Trace> traces;
      std::optional<std::pair<uint32_t, uint32_t>> dims;
      if (!gen_dims.empty()) {
        dims = usage([&] {
          auto t = parse_topology("torus2d:" + gen_dims);
          return std::make_pair(t.d1, t.d2);
        });
      }
      if (!gen_preset.empty()) {
        auto p = parse_preset(gen_preset);
        if (!p) throw UsageError("unknown preset '" + gen_preset + "'");
        traces = generate_workload(make_preset(*p, spec.npus, dims));
      } else {
        auto p = parse_parallelism(gen_parallelism);
        if (!p) throw UsageError("unknown parallelism '" + gen_parallelism + "'");
        spec.parallelism = *p;
        spec.dims = dims;
        if (!spec.dims && (*p == Parallelism::kDPMP || *p == Parallelism::kMPDP)) {
          spec.dims = square_dims(spec.npus);
        }
        if (generate->count("--backward-cycles")) spec.backward_cycles = gen_backward;
        if (gen_zero2) spec.dp_collective = DpCollective::kZero2;
        spec.name = std::string(to_string(*p));
        try {
          traces = generate_workload(spec);
        } catch (const WorkloadError& e) {
          throw UsageError(e.what());
        }
      }
      write_traces(gen_out, traces, out);
    } else if (*simulate) {
      SimConfig cfg;
      cfg.topology = topology_from(sim_topology, sim_bw, sim_latency);
      if (!(sim_cycle_time > 0)) throw UsageError("--cycle-time must be > 0");
      cfg.cycle_time = sim_cycle_time;
      auto traces = read_trace_dir(sim_dir);
      auto result = run_simulation(traces, cfg);
      auto breakdown = compute_breakdown(result);
      if (!sim_timeline.empty()) write_text(sim_timeline, timeline_csv(result.timeline));
      if (!sim_breakdown.empty()) write_text(sim_breakdown, breakdown_csv(breakdown));
      nlohmann::ordered_json s;
      s["topology"] = cfg.topology.describe();
      s["npus"] = traces.size();
      s["makespan_cycles"] = result.makespan_cycles;
      s["per_npu"] = nlohmann::ordered_json::array();
      for (const auto& b : breakdown) {
        s["per_npu"].push_back({{"npu", b.npu},
                                {"compute_cycles", b.compute},
                                {"exposed_comm_cycles", b.exposed_comm},
                                {"finish_cycle", result.npus[b.npu].finish}});
      }
      emit(sim_summary, s.dump(2) + "\n", out);
    } else if (*sweep_cmd) {
      std::vector<Preset> presets;
      for (const auto& name : sweep_presets) {
        auto p = parse_preset(name);
        if (!p) throw UsageError("unknown preset '" + name + "'");
        presets.push_back(*p);
      }
      if (presets.empty()) presets.assign(std::begin(kAllPresets), std::end(kAllPresets));
      const Topology base = topology_from(sweep_topology, "", "");
      if (sweep_npus.empty() == sweep_bw.empty()) {
        throw UsageError("give exactly one of --npus or --bw-grid");
      }
      std::vector<SweepCell> cells;
      if (!sweep_npus.empty()) {
        cells = npu_cells(base, sweep_npus);
      } else {
        cells = bandwidth_cells(base, parse_bw_grid(sweep_bw));
      }
      std::vector<SweepRow> rows;
      for (Preset p : presets) {
        auto r = sweep(to_string(p), preset_factory(p), cells,
                       reference_config(), sweep_threads);
        rows.insert(rows.end(), r.begin(), r.end());
      }
      emit(sweep_out, sweep_csv(rows), out);
    } else if (*fit) {
      auto corpus = load_corpus(fit_corpus);
      auto r = fit_models(corpus, fit_options);
      for (const auto& w : r.warnings) err << "warning: " << w << "\n";
      emit(fit_out, models_to_json(r.models), out);
    } else if (*synth) {
      auto models = models_from_json(read_text(syn_model));
      if (synth->count("--length")) syn_cfg.length = syn_length;
      if (syn_cfg.npus == 0) throw UsageError("--npus must be >= 1");
      if (!(syn_cfg.split_jitter >= 0 && syn_cfg.split_jitter < 1)) {
        throw UsageError("--jitter must be in [0, 1)");
      }
      write_traces(syn_out, synthesize(models, syn_cfg), out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ReportedError&) {
    return kExitData;
  } catch (const DeadlockError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDeadlock;
  } catch (const InvalidTraceError& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& v : e.report()) err << "  " << format_violation(v) << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace chakra
