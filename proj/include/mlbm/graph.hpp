#pragma once

// Bipartite multiplex graph: two entity catalogs, a layer catalog and a sparse
// map of typed edges carrying event multiplicities.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mlbm {

enum class Side { Top, Bottom };

const char* to_string(Side side) noexcept;

/// Ordered set of unique, non-empty names with contiguous 0-based indices
/// assigned in first-seen order.
class NameCatalog {
 public:
  /// Index of `name`, inserting it if new. Throws InvalidInput on names that
  /// cannot be represented in the graph file format.
  std::size_t intern(std::string_view name);
  std::optional<std::size_t> find(std::string_view name) const;

  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }

  friend bool operator==(const NameCatalog& a, const NameCatalog& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

class EntityCatalog : public NameCatalog {
 public:
  explicit EntityCatalog(Side side) : side_(side) {}
  Side side() const noexcept { return side_; }

 private:
  Side side_;
};

/// Edge types. Labels are rendered tuples such as "TCP/80/outbound".
using LayerCatalog = NameCatalog;

struct Edge {
  std::uint32_t top;
  std::uint32_t bottom;
  std::uint32_t layer;
  std::uint64_t count;  // number of underlying events, >= 1
};

struct GraphStats {
  std::size_t I = 0;  // top nodes
  std::size_t J = 0;  // bottom nodes
  std::size_t L = 0;  // layers
  std::size_t M = 0;  // distinct (top, bottom, layer) edges
  std::uint64_t N = 0;  // events

  friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

/// How edge values enter the model: presence (b in {0,1}) or raw counts.
enum class Weighting { Binary, Counts };

struct WeightedEdge {
  std::uint32_t top;
  std::uint32_t bottom;
  std::uint32_t layer;
  double weight;
};

/// Flat nonzero list consumed by the likelihoods and block EM.
struct EdgeList {
  std::size_t I = 0;
  std::size_t J = 0;
  std::size_t L = 0;
  std::vector<WeightedEdge> entries;

  double total_weight() const;
};

class BinaryView;

class MultiplexBipartiteGraph {
 public:
  MultiplexBipartiteGraph() : top_(Side::Top), bottom_(Side::Bottom) {}

  /// Records one event. Catalogs grow on first sight of a name or label;
  /// repeated triples only bump the multiplicity.
  void add_event(std::string_view top_name, std::string_view bottom_name, std::string_view layer_label);
  void add_events(std::string_view top_name, std::string_view bottom_name, std::string_view layer_label,
                  std::uint64_t count);

  std::size_t add_top(std::string_view name) { return top_.intern(name); }
  std::size_t add_bottom(std::string_view name) { return bottom_.intern(name); }
  std::size_t add_layer(std::string_view label) { return layers_.intern(label); }

  /// Index-level insertion; indices must already exist in the catalogs.
  void add_edge(std::size_t top, std::size_t bottom, std::size_t layer, std::uint64_t count = 1);

  const EntityCatalog& top() const noexcept { return top_; }
  const EntityCatalog& bottom() const noexcept { return bottom_; }
  const LayerCatalog& layers() const noexcept { return layers_; }

  /// Distinct edges in first-insertion order.
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::optional<std::uint64_t> multiplicity(std::size_t top, std::size_t bottom, std::size_t layer) const;

  GraphStats stats() const;
  BinaryView binary_view() const;
  EdgeList edge_list(Weighting weighting = Weighting::Binary) const;

 private:
  friend MultiplexBipartiteGraph read_graph(std::istream& in);
  static std::uint64_t pack(std::size_t top, std::size_t bottom, std::size_t layer);

  EntityCatalog top_;
  EntityCatalog bottom_;
  LayerCatalog layers_;
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, std::uint32_t> slot_;
  std::uint64_t events_ = 0;
};

/// Read-only 0/1 view of the biadjacency matrices B^(l).
class BinaryView {
 public:
  struct Cell {
    std::uint32_t top;
    std::uint32_t bottom;
    friend auto operator<=>(const Cell&, const Cell&) = default;
  };

  explicit BinaryView(const MultiplexBipartiteGraph& graph);

  bool contains(std::size_t top, std::size_t bottom, std::size_t layer) const;
  /// Nonzeros of one layer, sorted by (top, bottom).
  std::span<const Cell> layer(std::size_t layer) const;

  std::size_t top_degree(std::size_t top) const { return top_degree_.at(top); }
  std::size_t bottom_degree(std::size_t bottom) const { return bottom_degree_.at(bottom); }
  std::size_t layer_size(std::size_t l) const { return layer(l).size(); }
  std::size_t nonzeros() const noexcept { return cells_.size(); }
  std::size_t num_layers() const noexcept { return offsets_.size() - 1; }

 private:
  std::vector<Cell> cells_;
  std::vector<std::size_t> offsets_;  // per-layer ranges into cells_
  std::vector<std::size_t> top_degree_;
  std::vector<std::size_t> bottom_degree_;
};

// Text serialization ("#mlbm-graph v1").
void write_graph(std::ostream& out, const MultiplexBipartiteGraph& graph);
MultiplexBipartiteGraph read_graph(std::istream& in);
void save_graph(const std::filesystem::path& path, const MultiplexBipartiteGraph& graph);
MultiplexBipartiteGraph load_graph(const std::filesystem::path& path);

}  // namespace mlbm
