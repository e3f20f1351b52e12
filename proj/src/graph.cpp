#include "mlbm/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mlbm/errors.hpp"
#include "mlbm/io.hpp"

namespace mlbm {

namespace {

constexpr unsigned kEntityBits = 26;
constexpr unsigned kLayerBits = 12;
constexpr std::string_view kMagic = "#mlbm-graph v1";

void check_name(std::string_view name) {
  if (name.empty()) throw InvalidInput("empty name");
  if (name.front() == '#') throw InvalidInput("names may not start with '#': " + std::string(name));
  if (name.find_first_of("\t\r\n") != std::string_view::npos) {
    throw InvalidInput("names may not contain tabs or line breaks: " + std::string(name));
  }
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw InvalidInput("graph file line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

const char* to_string(Side side) noexcept { return side == Side::Top ? "top" : "bottom"; }

std::size_t NameCatalog::intern(std::string_view name) {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  check_name(name);
  const auto idx = names_.size();
  names_.emplace_back(name);
  index_.emplace(names_.back(), idx);
  return idx;
}

std::optional<std::size_t> NameCatalog::find(std::string_view name) const {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  return std::nullopt;
}

double EdgeList::total_weight() const {
  double total = 0.0;
  for (const auto& e : entries) total += e.weight;
  return total;
}

std::uint64_t MultiplexBipartiteGraph::pack(std::size_t top, std::size_t bottom, std::size_t layer) {
  return (static_cast<std::uint64_t>(top) << (kEntityBits + kLayerBits)) |
         (static_cast<std::uint64_t>(bottom) << kLayerBits) | static_cast<std::uint64_t>(layer);
}

void MultiplexBipartiteGraph::add_event(std::string_view top_name, std::string_view bottom_name,
                                        std::string_view layer_label) {
  add_events(top_name, bottom_name, layer_label, 1);
}

void MultiplexBipartiteGraph::add_events(std::string_view top_name, std::string_view bottom_name,
                                         std::string_view layer_label, std::uint64_t count) {
  // Validate all three before touching any catalog.
  check_name(top_name);
  check_name(bottom_name);
  check_name(layer_label);
  const auto i = top_.intern(top_name);
  const auto j = bottom_.intern(bottom_name);
  const auto l = layers_.intern(layer_label);
  add_edge(i, j, l, count);
}

void MultiplexBipartiteGraph::add_edge(std::size_t top, std::size_t bottom, std::size_t layer,
                                       std::uint64_t count) {
  if (top >= top_.size() || bottom >= bottom_.size() || layer >= layers_.size()) {
    throw InvalidInput("edge index out of catalog bounds");
  }
  if (top >= (1u << kEntityBits) || bottom >= (1u << kEntityBits) || layer >= (1u << kLayerBits)) {
    throw InvalidInput("graph exceeds supported catalog size");
  }
  if (count == 0) throw InvalidInput("edge multiplicity must be positive");
  const auto key = pack(top, bottom, layer);
  if (auto it = slot_.find(key); it != slot_.end()) {
    edges_[it->second].count += count;
  } else {
    slot_.emplace(key, static_cast<std::uint32_t>(edges_.size()));
    edges_.push_back({static_cast<std::uint32_t>(top), static_cast<std::uint32_t>(bottom),
                      static_cast<std::uint32_t>(layer), count});
  }
  events_ += count;
}

std::optional<std::uint64_t> MultiplexBipartiteGraph::multiplicity(std::size_t top, std::size_t bottom,
                                                                   std::size_t layer) const {
  if (top >= top_.size() || bottom >= bottom_.size() || layer >= layers_.size()) return std::nullopt;
  if (auto it = slot_.find(pack(top, bottom, layer)); it != slot_.end()) return edges_[it->second].count;
  return std::nullopt;
}

GraphStats MultiplexBipartiteGraph::stats() const {
  return {top_.size(), bottom_.size(), layers_.size(), edges_.size(), events_};
}

BinaryView MultiplexBipartiteGraph::binary_view() const { return BinaryView(*this); }

EdgeList MultiplexBipartiteGraph::edge_list(Weighting weighting) const {
  EdgeList list{top_.size(), bottom_.size(), layers_.size(), {}};
  list.entries.reserve(edges_.size());
  for (const auto& e : edges_) {
    const double w = weighting == Weighting::Binary ? 1.0 : static_cast<double>(e.count);
    list.entries.push_back({e.top, e.bottom, e.layer, w});
  }
  return list;
}

BinaryView::BinaryView(const MultiplexBipartiteGraph& graph)
    : offsets_(graph.layers().size() + 1, 0),
      top_degree_(graph.top().size(), 0),
      bottom_degree_(graph.bottom().size(), 0) {
  const auto edges = graph.edges();
  for (const auto& e : edges) {
    ++offsets_[e.layer + 1];
    ++top_degree_[e.top];
    ++bottom_degree_[e.bottom];
  }
  for (std::size_t l = 1; l < offsets_.size(); ++l) offsets_[l] += offsets_[l - 1];
  cells_.resize(edges.size());
  auto cursor = offsets_;
  for (const auto& e : edges) cells_[cursor[e.layer]++] = {e.top, e.bottom};
  for (std::size_t l = 0; l + 1 < offsets_.size(); ++l) {
    std::sort(cells_.begin() + static_cast<std::ptrdiff_t>(offsets_[l]),
              cells_.begin() + static_cast<std::ptrdiff_t>(offsets_[l + 1]));
  }
}

std::span<const BinaryView::Cell> BinaryView::layer(std::size_t layer) const {
  if (layer + 1 >= offsets_.size()) throw InvalidInput("layer index out of range");
  return std::span<const Cell>(cells_).subspan(offsets_[layer], offsets_[layer + 1] - offsets_[layer]);
}

bool BinaryView::contains(std::size_t top, std::size_t bottom, std::size_t layer) const {
  if (layer + 1 >= offsets_.size()) return false;
  const auto cells = this->layer(layer);
  const Cell probe{static_cast<std::uint32_t>(top), static_cast<std::uint32_t>(bottom)};
  return std::binary_search(cells.begin(), cells.end(), probe);
}

void write_graph(std::ostream& out, const MultiplexBipartiteGraph& graph) {
  out << kMagic << '\n';
  out << "#top\n";
  for (const auto& n : graph.top().names()) out << n << '\n';
  out << "#bottom\n";
  for (const auto& n : graph.bottom().names()) out << n << '\n';
  out << "#layers\n";
  for (const auto& n : graph.layers().names()) out << n << '\n';
  out << "#edges\n";
  for (const auto& e : graph.edges()) {
    out << e.top << '\t' << e.bottom << '\t' << e.layer << '\t' << e.count << '\n';
  }
}

MultiplexBipartiteGraph read_graph(std::istream& in) {
  MultiplexBipartiteGraph graph;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != kMagic) throw InvalidInput("not an mlbm graph file (missing header)");
  ++line_no;

  enum class Section { None, Top, Bottom, Layers, Edges } section = Section::None;
  const auto expect = [&](Section next, const char* marker) {
    if (static_cast<int>(next) != static_cast<int>(section) + 1) {
      throw InvalidInput(std::string("graph file: unexpected section ") + marker);
    }
    section = next;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "#top") { expect(Section::Top, "#top"); continue; }
    if (line == "#bottom") { expect(Section::Bottom, "#bottom"); continue; }
    if (line == "#layers") { expect(Section::Layers, "#layers"); continue; }
    if (line == "#edges") { expect(Section::Edges, "#edges"); continue; }
    switch (section) {
      case Section::Top:
      case Section::Bottom:
      case Section::Layers: {
        auto& catalog = section == Section::Top      ? graph.top_
                        : section == Section::Bottom ? graph.bottom_
                                                     : graph.layers_;
        const auto before = catalog.size();
        if (catalog.intern(line) == before) break;
        throw InvalidInput("graph file line " + std::to_string(line_no) + ": duplicate name '" + line + "'");
      }
      case Section::Edges: {
        std::string_view rest(line);
        std::string_view fields[4];
        for (int f = 0; f < 4; ++f) {
          const auto tab = rest.find('\t');
          if ((f < 3) == (tab == std::string_view::npos)) {
            throw InvalidInput("graph file line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
          }
          fields[f] = rest.substr(0, tab);
          rest = f < 3 ? rest.substr(tab + 1) : std::string_view{};
        }
        const auto i = parse_number<std::size_t>(fields[0], line_no);
        const auto j = parse_number<std::size_t>(fields[1], line_no);
        const auto l = parse_number<std::size_t>(fields[2], line_no);
        if (graph.multiplicity(i, j, l)) {
          throw InvalidInput("graph file line " + std::to_string(line_no) + ": duplicate edge");
        }
        graph.add_edge(i, j, l, parse_number<std::uint64_t>(fields[3], line_no));
        break;
      }
      case Section::None:
        throw InvalidInput("graph file line " + std::to_string(line_no) + ": content before #top");
    }
  }
  if (section != Section::Edges) throw InvalidInput("graph file truncated (missing sections)");
  return graph;
}

void save_graph(const std::filesystem::path& path, const MultiplexBipartiteGraph& graph) {
  std::ostringstream out;
  write_graph(out, graph);
  write_file_atomic(path, out.str());
}

MultiplexBipartiteGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open graph file " + path.string());
  return read_graph(in);
}

}  // namespace mlbm
