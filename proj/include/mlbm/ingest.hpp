#pragma once

// Conversion of netflow and authentication records into typed bipartite edges.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlbm/graph.hpp"
#include "mlbm/serialize.hpp"

namespace mlbm {

struct NetflowRecord {
  std::string src_host;
  std::string dst_host;
  std::string protocol;
  std::optional<int> dst_port;
};

struct AuthRecord {
  std::string src_user;
  std::string dst_user;
  std::string src_host;
  std::string dst_host;
  std::string logon_type;
  std::string auth_package;
  std::string outcome;
  std::string event_kind;
};

/// Internal-host test. Entries are IPv4 CIDR blocks ("172.16.0.0/12"), string
/// prefixes ending in '*' ("srv-*") or exact host names.
class HostPredicate {
 public:
  HostPredicate() = default;
  explicit HostPredicate(const std::vector<std::string>& entries);

  void add(std::string_view entry);
  bool contains(std::string_view host) const;
  bool empty() const noexcept { return cidrs_.empty() && prefixes_.empty() && exact_.empty(); }

 private:
  std::vector<std::pair<std::uint32_t, std::uint32_t>> cidrs_;  // (network, mask)
  std::vector<std::string> prefixes_;
  std::set<std::string, std::less<>> exact_;
};

enum class IngestMode { Netflow, Auth };

struct IngestSpec {
  std::string name;
  std::string description;
  IngestMode mode = IngestMode::Netflow;
  char delimiter = ',';
  bool has_header = false;
  /// Record field -> column. With a header the column is a header name,
  /// otherwise a 0-based index written in decimal.
  std::map<std::string, std::string> columns;
  /// Netflow only: entries for HostPredicate.
  std::vector<std::string> internal_hosts;
  /// Netflow only: (protocol, destination port) pairs kept as their own token.
  std::set<std::pair<std::string, int>> port_whitelist;
  /// Auth only: values selecting successful logon events.
  std::string logon_event = "LogOn";
  std::string success_outcome = "Success";

  /// "vast-nf" or "lanl-auth"; throws InvalidInput otherwise.
  static IngestSpec preset(std::string_view name);
  static std::vector<std::string> preset_names();
  /// TCP/20, 21, 22, 23, 25, 53, 80, 443, 465 and 587.
  static std::set<std::pair<std::string, int>> default_whitelist();

  static IngestSpec from_json(const Json& doc);
  Json to_json() const;
};

/// Layer label "PROTOCOL/port-or-Other/inbound|outbound".
std::string netflow_layer(const NetflowRecord& record, bool inbound, const IngestSpec& spec);
/// Layer label "LT/AP/Local|From|To".
std::string auth_layer(const AuthRecord& record, std::string_view placement);

struct IngestCounters {
  std::uint64_t records_read = 0;
  std::uint64_t records_skipped = 0;   // unparseable
  std::uint64_t records_filtered = 0;  // valid but excluded by the typing rules
  std::uint64_t edges_created = 0;     // events added to the graph
};

/// Streaming builder; owns the graph and accepts records one at a time.
class Ingestor {
 public:
  explicit Ingestor(IngestSpec spec);

  /// Returns false when the record was filtered out.
  bool add(const NetflowRecord& record);
  bool add(const AuthRecord& record);
  /// Parses and adds one text line; malformed lines are counted as skipped.
  void add_line(std::string_view line);
  /// Resolves named columns from a header line; throws InvalidInput when a
  /// mapped column is missing.
  void set_header(std::string_view line);

  const MultiplexBipartiteGraph& graph() const noexcept { return graph_; }
  MultiplexBipartiteGraph take_graph() { return std::move(graph_); }
  const IngestCounters& counters() const noexcept { return counters_; }
  const IngestSpec& spec() const noexcept { return spec_; }

 private:
  std::optional<std::size_t> column(const std::string& field) const;

  IngestSpec spec_;
  HostPredicate internal_;
  MultiplexBipartiteGraph graph_;
  IngestCounters counters_;
  std::map<std::string, std::size_t> resolved_;
};

MultiplexBipartiteGraph ingest_netflow(std::span<const NetflowRecord> records, const IngestSpec& spec);
MultiplexBipartiteGraph ingest_auth(std::span<const AuthRecord> records, const IngestSpec& spec);

struct IngestResult {
  MultiplexBipartiteGraph graph;
  IngestCounters counters;
};

/// Reads delimiter-separated files (plain or gzip) one line at a time.
IngestResult ingest_files(const std::vector<std::filesystem::path>& inputs, const IngestSpec& spec);

}  // namespace mlbm
