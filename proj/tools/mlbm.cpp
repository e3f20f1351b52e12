// mlbm: command-line driver for ingestion, fitting, model selection, sampling
// and summarization. Every subcommand writes its artifacts plus a run.json
// metadata record into --out.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "mlbm/errors.hpp"
#include "mlbm/graph.hpp"
#include "mlbm/inference.hpp"
#include "mlbm/ingest.hpp"
#include "mlbm/io.hpp"
#include "mlbm/metrics.hpp"
#include "mlbm/model.hpp"
#include "mlbm/parallel.hpp"
#include "mlbm/selection.hpp"
#include "mlbm/serialize.hpp"
#include "mlbm/summary.hpp"

#ifndef MLBM_VERSION
#define MLBM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace mlbm;

namespace {

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

/// Artifacts are staged in a sibling directory and moved into place once
/// complete, so `out` either holds a full result or nothing.
class StagedOutput {
 public:
  StagedOutput(fs::path out, bool force) : final_(std::move(out)), force_(force) {
    if (fs::exists(final_) && !force_) {
      throw InvalidInput("output directory " + final_.string() + " exists (use --force to replace it)");
    }
    staging_ = final_;
    staging_ += ".partial";
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }

  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;

  ~StagedOutput() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  fs::path file(const std::string& name) const { return staging_ / name; }

  void commit() {
    if (fs::exists(final_)) fs::remove_all(final_);
    fs::rename(staging_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path staging_;
  bool force_;
  bool committed_ = false;
};

struct RunContext {
  std::vector<std::string> argv;
  std::string subcommand;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::vector<fs::path> inputs;

  Json metadata() const {
    Json doc;
    doc["tool"] = "mlbm";
    doc["version"] = MLBM_VERSION;
    doc["subcommand"] = subcommand;
    doc["command_line"] = argv;
    if (seed) doc["seed"] = *seed;
    doc["workers"] = workers;
    Json files = Json::array();
    for (const auto& p : inputs) files.push_back(Json{{"path", p.string()}, {"sha256", sha256_file(p)}});
    doc["inputs"] = std::move(files);
    return doc;
  }
};

void write_metadata(const StagedOutput& out, const RunContext& ctx) {
  write_file_atomic(out.file("run.json"), dump_json(ctx.metadata()));
}

std::pair<int, int> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      const int v = std::stoi(text);
      return {v, v};
    }
    return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw InvalidInput("bad range '" + text + "' (expected FIRST:LAST)");
  }
}

std::string describe(const GraphStats& s) {
  std::ostringstream out;
  out << "I=" << s.I << " J=" << s.J << " L=" << s.L << " M=" << s.M << " N=" << s.N;
  return out.str();
}

void print_fit(const FitResult& fit) {
  const auto& g = fit.criterion_trajectory;
  std::cout << "restart " << fit.restart_index << " (seed " << fit.seed << "): " << fit.iterations << " iterations, "
            << (fit.converged ? "converged" : "NOT converged") << '\n';
  std::cout << "G: " << format_double(g.front()) << " -> " << format_double(g.back()) << '\n';
  std::cout << "L_C: " << format_double(fit.final_L_C) << '\n';
  if (!fit.degenerate_top.empty() || !fit.degenerate_bottom.empty()) {
    std::cout << "warning: empty clusters (top " << fit.degenerate_top.size() << ", bottom "
              << fit.degenerate_bottom.size() << ")\n";
  }
}

/// planted.tsv: "side<TAB>name<TAB>cluster" records.
void write_planted(const fs::path& path, const MultiplexBipartiteGraph& graph, const HardPartition& top,
                   const HardPartition& bottom) {
  std::ostringstream out;
  out << "#side\tname\tcluster\n";
  for (std::size_t i = 0; i < top.assignment.size(); ++i) out << "top\t" << graph.top().name(i) << '\t' << top.assignment[i] << '\n';
  for (std::size_t j = 0; j < bottom.assignment.size(); ++j) out << "bottom\t" << graph.bottom().name(j) << '\t' << bottom.assignment[j] << '\n';
  write_file_atomic(path, out.str());
}

void report_ari(const fs::path& planted, const MultiplexBipartiteGraph& graph, const FitResult& fit) {
  std::ifstream in(planted);
  if (!in) throw InvalidInput("cannot open planted labels " + planted.string());
  std::vector<int> top_truth(graph.top().size(), -1);
  std::vector<int> bottom_truth(graph.bottom().size(), -1);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    std::string side, name, cluster;
    std::getline(fields, side, '\t');
    std::getline(fields, name, '\t');
    std::getline(fields, cluster);
    const auto& catalog = side == "top" ? static_cast<const NameCatalog&>(graph.top()) : graph.bottom();
    auto& truth = side == "top" ? top_truth : bottom_truth;
    if (const auto idx = catalog.find(name)) truth[*idx] = std::stoi(cluster);
  }
  if (std::find(top_truth.begin(), top_truth.end(), -1) != top_truth.end() ||
      std::find(bottom_truth.begin(), bottom_truth.end(), -1) != bottom_truth.end()) {
    throw InvalidInput("planted labels do not cover every node of the graph");
  }
  std::cout << "ARI top: " << format_double(adjusted_rand_index(top_truth, fit.top.assignment)) << '\n';
  std::cout << "ARI bottom: " << format_double(adjusted_rand_index(bottom_truth, fit.bottom.assignment)) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilayer latent block model biclustering of event logs"};
  app.set_version_flag("--version", MLBM_VERSION);
  app.require_subcommand(1);

  RunContext ctx;
  ctx.argv.assign(argv, argv + argc);
  std::string out_dir;
  bool force = false;
  ctx.workers = default_workers();
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--workers", ctx.workers, "Worker threads (default: $MLBM_WORKERS or hardware concurrency)");
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a graph file from netflow or authentication logs");
  std::string preset;
  std::string spec_file;
  std::vector<std::string> internal;
  std::string internal_file;
  std::vector<std::string> inputs;
  ingest->add_option("--preset", preset, "Dataset preset (vast-nf, lanl-auth)");
  ingest->add_option("--spec", spec_file, "Ingest spec JSON (overrides --preset)");
  ingest->add_option("--internal", internal, "Internal-host entry: CIDR, prefix* or exact name (repeatable)");
  ingest->add_option("--internal-file", internal_file, "File with one internal-host entry per line");
  ingest->add_option("inputs", inputs, "Input files (plain or gzip)")->required();
  ingest->add_flag("--force", force, "Replace an existing output directory");
  common(ingest);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit the block model for fixed (H, K)");
  std::string graph_file;
  FitConfig config;
  bool counts = false;
  std::string planted;
  fit_cmd->add_option("--graph", graph_file, "Graph file")->required();
  fit_cmd->add_option("-H,--top-clusters", config.H, "Number of top clusters")->required();
  fit_cmd->add_option("-K,--bottom-clusters", config.K, "Number of bottom clusters")->required();
  fit_cmd->add_option("--restarts", config.restarts, "Random restarts")->capture_default_str();
  fit_cmd->add_option("--epsilon", config.epsilon, "Relative stopping threshold on G")->capture_default_str();
  fit_cmd->add_option("--max-iter", config.max_iterations, "Iteration cap per restart")->capture_default_str();
  fit_cmd->add_option("--seed", config.seed, "Base seed (restart r uses seed + r)")->capture_default_str();
  fit_cmd->add_flag("--counts", counts, "Fit event counts instead of the binary graph");
  fit_cmd->add_option("--planted", planted, "planted.tsv from `sample`; reports ARI");
  fit_cmd->add_flag("--force", force, "Replace an existing output directory");
  common(fit_cmd);

  // select
  auto* select = app.add_subcommand("select", "ICL grid search over (H, K)");
  std::string h_range = "2:16";
  std::string k_range = "2:16";
  bool omit_timings = false;
  select->add_option("--graph", graph_file, "Graph file")->required();
  select->add_option("--H-range", h_range, "Top cluster counts FIRST:LAST")->capture_default_str();
  select->add_option("--K-range", k_range, "Bottom cluster counts FIRST:LAST")->capture_default_str();
  select->add_option("--restarts", config.restarts, "Random restarts per cell")->capture_default_str();
  select->add_option("--epsilon", config.epsilon, "Relative stopping threshold on G")->capture_default_str();
  select->add_option("--max-iter", config.max_iterations, "Iteration cap per restart")->capture_default_str();
  select->add_option("--seed", config.seed, "Base seed")->capture_default_str();
  select->add_flag("--counts", counts, "Fit event counts instead of the binary graph");
  select->add_flag("--omit-timings", omit_timings, "Write '-' instead of per-cell runtimes");
  common(select);

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Draw a graph and planted partitions from model parameters");
  std::string params_file;
  std::uint64_t sample_seed = 0;
  sample_cmd->add_option("--params", params_file, "Parameter JSON")->required();
  sample_cmd->add_option("--seed", sample_seed, "Seed")->capture_default_str();
  sample_cmd->add_flag("--force", force, "Replace an existing output directory");
  common(sample_cmd);

  // summarize
  auto* summarize = app.add_subcommand("summarize", "Aggregate a fit into a cluster graph (DOT + JSON)");
  std::string fit_file;
  std::optional<std::uint64_t> min_events;
  std::optional<double> min_rate;
  std::size_t top_pairs = 10;
  summarize->add_option("--graph", graph_file, "Graph file")->required();
  summarize->add_option("--fit", fit_file, "fit.json or best_fit.json")->required();
  summarize->add_option("--preset", preset, "Apply the preset's display filter defaults");
  summarize->add_option("--min-events", min_events, "Keep edges with at least this many events");
  summarize->add_option("--min-rate", min_rate, "Keep edges with rate theta >= this value");
  summarize->add_option("--top-pairs", top_pairs, "Entity pairs listed per edge in the JSON")->capture_default_str();
  summarize->add_flag("--force", force, "Replace an existing output directory");
  common(summarize);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ctx.workers == 0) throw InvalidInput("--workers must be positive");
    config.workers = ctx.workers;
    config.weighting = counts ? Weighting::Counts : Weighting::Binary;

    if (*ingest) {
      ctx.subcommand = "ingest";
      IngestSpec spec;
      if (!spec_file.empty()) {
        spec = IngestSpec::from_json(load_json(spec_file));
        ctx.inputs.emplace_back(spec_file);
      } else if (!preset.empty()) {
        spec = IngestSpec::preset(preset);
      } else {
        throw InvalidInput("ingest needs --preset or --spec");
      }
      if (!internal.empty()) spec.internal_hosts = internal;
      if (!internal_file.empty()) {
        std::istringstream lines(read_file(internal_file));
        for (std::string line; std::getline(lines, line);) {
          if (!line.empty() && line.front() != '#') spec.internal_hosts.push_back(line);
        }
        ctx.inputs.emplace_back(internal_file);
      }
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      for (const auto& p : paths) {
        if (!fs::exists(p)) throw InvalidInput("input not found: " + p.string());
        ctx.inputs.push_back(p);
      }
      StagedOutput out(out_dir, force);
      auto result = ingest_files(paths, spec);
      const auto stats = result.graph.stats();
      save_graph(out.file("graph.mlbm"), result.graph);
      Json report;
      report["preset"] = spec.name;
      report["records_read"] = result.counters.records_read;
      report["records_skipped"] = result.counters.records_skipped;
      report["records_filtered"] = result.counters.records_filtered;
      report["edges_created"] = result.counters.edges_created;
      report["I"] = stats.I;
      report["J"] = stats.J;
      report["L"] = stats.L;
      report["M"] = stats.M;
      report["N"] = stats.N;
      write_file_atomic(out.file("ingest_report.json"), dump_json(report));
      write_metadata(out, ctx);
      out.commit();
      std::cout << "records read " << result.counters.records_read << ", skipped " << result.counters.records_skipped
                << ", filtered " << result.counters.records_filtered << '\n';
      std::cout << describe(stats) << '\n';
      if (result.counters.records_skipped > 0) {
        std::cerr << "warning: " << result.counters.records_skipped << " unparseable records skipped\n";
      }
      if (stats.M == 0) std::cerr << "warning: the resulting graph is empty\n";
    } else if (*fit_cmd) {
      ctx.subcommand = "fit";
      ctx.seed = config.seed;
      ctx.inputs.emplace_back(graph_file);
      if (!planted.empty()) ctx.inputs.emplace_back(planted);
      const auto graph = load_graph(graph_file);
      const auto stats = graph.stats();
      if (static_cast<std::size_t>(config.H) > stats.I || static_cast<std::size_t>(config.K) > stats.J) {
        std::cerr << "warning: more clusters than nodes on one side\n";
      }
      StagedOutput out(out_dir, force);
      const auto result = fit_multi_restart(graph, config);
      write_file_atomic(out.file("fit.json"), dump_json(fit_to_json(result, graph)));
      write_metadata(out, ctx);
      out.commit();
      std::cout << describe(stats) << '\n';
      print_fit(result);
      if (!planted.empty()) report_ari(planted, graph, result);
    } else if (*select) {
      ctx.subcommand = "select";
      ctx.seed = config.seed;
      ctx.inputs.emplace_back(graph_file);
      const auto graph = load_graph(graph_file);
      const auto [h_first, h_last] = parse_range(h_range);
      const auto [k_first, k_last] = parse_range(k_range);
      GridSpec grid{GridSpec::range(h_first, h_last), GridSpec::range(k_first, k_last), config};
      grid.validate();
      const fs::path dir(out_dir);
      fs::create_directories(dir);
      GridOptions options;
      options.workers = ctx.workers;
      options.report_path = dir / "report.tsv";
      options.omit_timings = omit_timings;
      const auto done = read_report(*options.report_path).size();
      std::cout << "grid: " << grid.H_values.size() * grid.K_values.size() << " cells";
      if (done > 0) std::cout << " (" << done << " already complete)";
      std::cout << '\n';
      const auto report = grid_search(graph, grid, options);
      write_file_atomic(dir / "best_fit.json", dump_json(fit_to_json(report.best_fit, graph)));
      write_file_atomic(dir / "run.json", dump_json(ctx.metadata()));
      for (const auto& [cell, reason] : report.failures) {
        std::cerr << "cell (" << cell.first << ", " << cell.second << ") failed: " << reason << '\n';
      }
      std::cout << "best: H=" << report.best.first << " K=" << report.best.second
                << " ICL=" << format_double(report.cells.at(report.best).icl) << '\n';
      if (!report.failures.empty()) return 1;
    } else if (*sample_cmd) {
      ctx.subcommand = "sample";
      ctx.seed = sample_seed;
      ctx.inputs.emplace_back(params_file);
      ParamLabels labels;
      const auto params = params_from_json(load_json(params_file), &labels);
      StagedOutput out(out_dir, force);
      const auto sampled = sample(params, sample_seed, {labels.top, labels.bottom, labels.layers});
      save_graph(out.file("graph.mlbm"), sampled.graph);
      write_planted(out.file("planted.tsv"), sampled.graph, sampled.top, sampled.bottom);
      write_metadata(out, ctx);
      out.commit();
      std::cout << describe(sampled.graph.stats()) << '\n';
    } else if (*summarize) {
      ctx.subcommand = "summarize";
      ctx.inputs.emplace_back(graph_file);
      ctx.inputs.emplace_back(fit_file);
      if (!preset.empty()) {
        IngestSpec::preset(preset);  // validates the name
        if (preset == "vast-nf" && !min_events) min_events = 40;
        if (preset == "lanl-auth" && !min_rate) min_rate = 0.7;
      }
      const auto graph = load_graph(graph_file);
      const auto fit = fit_from_json(load_json(fit_file), graph);
      StagedOutput out(out_dir, force);
      auto summary = aggregate(graph, fit, {5, top_pairs});
      if (min_events) summary = filter_by_events(std::move(summary), *min_events);
      if (min_rate) summary = filter_by_rate(std::move(summary), *min_rate);
      write_file_atomic(out.file("summary.dot"), to_dot(summary));
      write_file_atomic(out.file("summary.json"), dump_json(summary_to_json(summary)));
      write_metadata(out, ctx);
      out.commit();
      std::cout << summary.top_clusters.size() << " top clusters, " << summary.bottom_clusters.size()
                << " bottom clusters, " << summary.edges.size() << " edges kept\n";
    }
  } catch (const mlbm::InvalidInput& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
