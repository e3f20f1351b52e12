#include "mlbm/summary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "mlbm/errors.hpp"

namespace mlbm {

namespace {

std::vector<ClusterInfo> cluster_info(const HardPartition& partition, const NameCatalog& names, std::size_t sample) {
  std::vector<ClusterInfo> out(static_cast<std::size_t>(partition.clusters));
  for (std::size_t c = 0; c < out.size(); ++c) out[c].index = static_cast<int>(c);
  for (std::size_t i = 0; i < partition.assignment.size(); ++i) {
    auto& info = out[static_cast<std::size_t>(partition.assignment[i])];
    ++info.size;
    if (info.members.size() < sample) info.members.push_back(names.name(i));
  }
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

}  // namespace

ClusterGraphSummary aggregate(const MultiplexBipartiteGraph& graph, const FitResult& fit,
                              const AggregateOptions& options) {
  const auto stats = graph.stats();
  if (fit.top.assignment.size() != stats.I || fit.bottom.assignment.size() != stats.J ||
      fit.params.L() != stats.L || fit.params.H() != fit.top.clusters || fit.params.K() != fit.bottom.clusters) {
    throw DimensionMismatch("fit does not match the graph");
  }
  fit.top.validate();
  fit.bottom.validate();

  struct Accumulator {
    std::uint64_t events = 0;
    std::uint64_t distinct = 0;
    std::vector<std::size_t> members;  // indices into graph.edges()
  };
  std::map<std::tuple<int, int, std::uint32_t>, Accumulator> blocks;
  const auto edges = graph.edges();
  for (std::size_t idx = 0; idx < edges.size(); ++idx) {
    const auto& e = edges[idx];
    auto& acc = blocks[{fit.top.assignment[e.top], fit.bottom.assignment[e.bottom], e.layer}];
    acc.events += e.count;
    ++acc.distinct;
    acc.members.push_back(idx);
  }

  ClusterGraphSummary summary;
  summary.top_clusters = cluster_info(fit.top, graph.top(), options.member_sample);
  summary.bottom_clusters = cluster_info(fit.bottom, graph.bottom(), options.member_sample);
  for (auto& [key, acc] : blocks) {
    const auto [h, k, layer] = key;
    ClusterEdge edge{h, k, graph.layers().name(layer), acc.events, acc.distinct, fit.params.theta[layer](h, k), {}};
    const auto keep = std::min(options.top_pairs, acc.members.size());
    std::partial_sort(acc.members.begin(), acc.members.begin() + static_cast<std::ptrdiff_t>(keep), acc.members.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (edges[a].count != edges[b].count) return edges[a].count > edges[b].count;
                        return a < b;
                      });
    for (std::size_t m = 0; m < keep; ++m) {
      const auto& e = edges[acc.members[m]];
      edge.top_pairs.push_back({graph.top().name(e.top), graph.bottom().name(e.bottom), e.count});
    }
    summary.edges.push_back(std::move(edge));
  }
  std::sort(summary.edges.begin(), summary.edges.end(), [](const ClusterEdge& a, const ClusterEdge& b) {
    return std::tie(a.h, a.k, a.layer_label) < std::tie(b.h, b.k, b.layer_label);
  });
  return summary;
}

ClusterGraphSummary filter_by_events(ClusterGraphSummary summary, std::uint64_t threshold) {
  std::erase_if(summary.edges, [&](const ClusterEdge& e) { return e.event_count < threshold; });
  return summary;
}

ClusterGraphSummary filter_by_rate(ClusterGraphSummary summary, double min_rate) {
  if (!(min_rate >= 0.0)) throw InvalidParameter("min_rate must be nonnegative");
  std::erase_if(summary.edges, [&](const ClusterEdge& e) { return e.rate < min_rate; });
  return summary;
}

std::string to_dot(const ClusterGraphSummary& summary, const DotOptions& options) {
  std::ostringstream out;
  out << "digraph clusters {\n";
  out << "  rankdir=LR;\n";
  out << "  node [shape=circle, fixedsize=true];\n";
  const auto node = [&](char prefix, const char* side, const ClusterInfo& c) {
    const double width = options.node_base + options.node_scale * std::log1p(static_cast<double>(c.size));
    out << "  \"" << prefix << c.index << "\" [label=\"" << side << ' ' << c.index + 1 << "\\n(" << c.size
        << ")\", width=" << fmt(width) << "];\n";
  };
  for (const auto& c : summary.top_clusters) node('T', "top", c);
  for (const auto& c : summary.bottom_clusters) node('B', "bottom", c);
  for (const auto& e : summary.edges) {
    const double pen = std::max(0.1, options.edge_scale * std::log1p(static_cast<double>(e.event_count)));
    out << "  \"T" << e.h << "\" -> \"B" << e.k << "\" [label=\"" << escape(e.layer_label) << "\\n" << e.event_count
        << " events, " << e.distinct_edge_count << " edges, rate " << fmt(e.rate) << "\", penwidth=" << fmt(pen)
        << "];\n";
  }
  out << "}\n";
  return out.str();
}

Json summary_to_json(const ClusterGraphSummary& summary) {
  const auto clusters = [](const std::vector<ClusterInfo>& list) {
    Json arr = Json::array();
    for (const auto& c : list) arr.push_back(Json{{"index", c.index}, {"size", c.size}, {"members", c.members}});
    return arr;
  };
  Json doc;
  doc["top_clusters"] = clusters(summary.top_clusters);
  doc["bottom_clusters"] = clusters(summary.bottom_clusters);
  Json edges = Json::array();
  for (const auto& e : summary.edges) {
    Json pairs = Json::array();
    for (const auto& p : e.top_pairs) pairs.push_back(Json{{"top", p.top}, {"bottom", p.bottom}, {"count", p.count}});
    edges.push_back(Json{{"h", e.h},
                         {"k", e.k},
                         {"layer", e.layer_label},
                         {"event_count", e.event_count},
                         {"distinct_edge_count", e.distinct_edge_count},
                         {"rate", e.rate},
                         {"top_pairs", std::move(pairs)}});
  }
  doc["edges"] = std::move(edges);
  return doc;
}

}  // namespace mlbm
