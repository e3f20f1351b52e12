#pragma once

// Cluster-level view of a fitted graph: cluster sizes and aggregated typed
// edges between top and bottom clusters, with DOT and JSON exports.

#include <cstdint>
#include <string>
#include <vector>

#include "mlbm/graph.hpp"
#include "mlbm/inference.hpp"
#include "mlbm/serialize.hpp"

namespace mlbm {

struct ClusterInfo {
  int index = 0;
  std::size_t size = 0;
  std::vector<std::string> members;  // first few members in catalog order
};

struct EntityPair {
  std::string top;
  std::string bottom;
  std::uint64_t count = 0;
};

struct ClusterEdge {
  int h = 0;
  int k = 0;
  std::string layer_label;
  std::uint64_t event_count = 0;
  std::uint64_t distinct_edge_count = 0;
  double rate = 0.0;
  std::vector<EntityPair> top_pairs;  // largest multiplicities first
};

struct ClusterGraphSummary {
  std::vector<ClusterInfo> top_clusters;
  std::vector<ClusterInfo> bottom_clusters;
  std::vector<ClusterEdge> edges;  // sorted by (h, k, layer_label)
};

struct AggregateOptions {
  std::size_t member_sample = 5;
  std::size_t top_pairs = 10;
};

/// Every (h, k, l) block holding at least one edge becomes a summary edge.
ClusterGraphSummary aggregate(const MultiplexBipartiteGraph& graph, const FitResult& fit,
                              const AggregateOptions& options = {});

ClusterGraphSummary filter_by_events(ClusterGraphSummary summary, std::uint64_t threshold);
ClusterGraphSummary filter_by_rate(ClusterGraphSummary summary, double min_rate);

struct DotOptions {
  double node_base = 0.3;   // inches
  double node_scale = 0.25; // inches per unit of log(1 + size)
  double edge_scale = 0.5;  // penwidth per unit of log(1 + events)
};

std::string to_dot(const ClusterGraphSummary& summary, const DotOptions& options = {});
Json summary_to_json(const ClusterGraphSummary& summary);

}  // namespace mlbm
