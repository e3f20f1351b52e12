#include "mlbm/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <zlib.h>

#include "mlbm/errors.hpp"

namespace mlbm {

namespace {

const std::vector<std::string> kNetflowFields = {"src_host", "dst_host", "protocol", "dst_port"};
const std::vector<std::string> kAuthFields = {"src_user",   "dst_user",     "src_host", "dst_host",
                                              "logon_type", "auth_package", "outcome",  "event_kind"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    fields.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
  std::uint32_t value = 0;
  for (int octet = 0; octet < 4; ++octet) {
    unsigned part = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), part);
    if (ec != std::errc{} || part > 255 || ptr == text.data()) return std::nullopt;
    value = (value << 8) | part;
    text.remove_prefix(static_cast<std::size_t>(ptr - text.data()));
    if (octet < 3) {
      if (text.empty() || text.front() != '.') return std::nullopt;
      text.remove_prefix(1);
    }
  }
  if (!text.empty()) return std::nullopt;
  return value;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

const std::vector<std::string>& fields_for(IngestMode mode) {
  return mode == IngestMode::Netflow ? kNetflowFields : kAuthFields;
}

}  // namespace

HostPredicate::HostPredicate(const std::vector<std::string>& entries) {
  for (const auto& e : entries) add(e);
}

void HostPredicate::add(std::string_view entry) {
  entry = trim(entry);
  if (entry.empty()) return;
  if (const auto slash = entry.find('/'); slash != std::string_view::npos) {
    const auto network = parse_ipv4(entry.substr(0, slash));
    unsigned bits = 0;
    const auto tail = entry.substr(slash + 1);
    auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), bits);
    if (!network || ec != std::errc{} || ptr != tail.data() + tail.size() || bits > 32) {
      throw InvalidInput("bad CIDR block: " + std::string(entry));
    }
    const std::uint32_t mask = bits == 0 ? 0u : ~std::uint32_t{0} << (32 - bits);
    cidrs_.emplace_back(*network & mask, mask);
  } else if (entry.back() == '*') {
    prefixes_.emplace_back(entry.substr(0, entry.size() - 1));
  } else {
    exact_.emplace(entry);
  }
}

bool HostPredicate::contains(std::string_view host) const {
  if (exact_.contains(host)) return true;
  for (const auto& p : prefixes_) {
    if (host.starts_with(p)) return true;
  }
  if (!cidrs_.empty()) {
    if (const auto addr = parse_ipv4(host)) {
      for (const auto& [network, mask] : cidrs_) {
        if ((*addr & mask) == network) return true;
      }
    }
  }
  return false;
}

std::set<std::pair<std::string, int>> IngestSpec::default_whitelist() {
  std::set<std::pair<std::string, int>> out;
  for (int port : {20, 21, 22, 23, 25, 53, 80, 443, 465, 587}) out.emplace("TCP", port);
  return out;
}

std::vector<std::string> IngestSpec::preset_names() { return {"vast-nf", "lanl-auth"}; }

IngestSpec IngestSpec::preset(std::string_view name) {
  IngestSpec spec;
  spec.name = std::string(name);
  if (name == "vast-nf") {
    spec.description =
        "VAST Challenge 2013 Mini-Challenge 3 netflow CSV (nf-chunk*.csv). Internal hosts are taken to be the "
        "enterprise 172.0.0.0/8 space; pass --internal to use a different split.";
    spec.mode = IngestMode::Netflow;
    spec.has_header = true;
    spec.columns = {{"src_host", "firstSeenSrcIp"},
                    {"dst_host", "firstSeenDestIp"},
                    {"protocol", "ipLayerProtocolCode"},
                    {"dst_port", "firstSeenDestPort"}};
    spec.internal_hosts = {"172.0.0.0/8"};
    spec.port_whitelist = default_whitelist();
  } else if (name == "lanl-auth") {
    spec.description =
        "LANL Comprehensive Multi-Source Cyber-Security Events, auth.txt(.gz): time, source user@domain, "
        "destination user@domain, source computer, destination computer, authentication type, logon type, "
        "authentication orientation, success/failure.";
    spec.mode = IngestMode::Auth;
    spec.has_header = false;
    spec.columns = {{"src_user", "1"},     {"dst_user", "2"},     {"src_host", "3"},   {"dst_host", "4"},
                    {"auth_package", "5"}, {"logon_type", "6"},   {"event_kind", "7"}, {"outcome", "8"}};
  } else {
    throw InvalidInput("unknown preset '" + std::string(name) + "'");
  }
  return spec;
}

IngestSpec IngestSpec::from_json(const Json& doc) {
  IngestSpec spec;
  spec.name = doc.value("name", std::string{});
  spec.description = doc.value("description", std::string{});
  const auto mode = doc.value("mode", std::string("netflow"));
  if (mode == "netflow") {
    spec.mode = IngestMode::Netflow;
  } else if (mode == "auth") {
    spec.mode = IngestMode::Auth;
  } else {
    throw InvalidInput("ingest spec: unknown mode '" + mode + "'");
  }
  const auto delimiter = doc.value("delimiter", std::string(","));
  if (delimiter.size() != 1) throw InvalidInput("ingest spec: delimiter must be one character");
  spec.delimiter = delimiter[0];
  spec.has_header = doc.value("has_header", false);
  if (doc.contains("columns")) spec.columns = doc["columns"].get<std::map<std::string, std::string>>();
  spec.internal_hosts = doc.value("internal_hosts", std::vector<std::string>{});
  if (doc.contains("port_whitelist")) {
    for (const auto& entry : doc["port_whitelist"]) {
      const auto text = entry.get<std::string>();
      const auto slash = text.find('/');
      if (slash == std::string::npos) throw InvalidInput("ingest spec: whitelist entries look like TCP/80");
      spec.port_whitelist.emplace(upper(text.substr(0, slash)), std::stoi(text.substr(slash + 1)));
    }
  } else if (spec.mode == IngestMode::Netflow) {
    spec.port_whitelist = default_whitelist();
  }
  spec.logon_event = doc.value("logon_event", std::string("LogOn"));
  spec.success_outcome = doc.value("success_outcome", std::string("Success"));
  return spec;
}

Json IngestSpec::to_json() const {
  Json doc;
  doc["name"] = name;
  doc["description"] = description;
  doc["mode"] = mode == IngestMode::Netflow ? "netflow" : "auth";
  doc["delimiter"] = std::string(1, delimiter);
  doc["has_header"] = has_header;
  doc["columns"] = columns;
  if (mode == IngestMode::Netflow) {
    doc["internal_hosts"] = internal_hosts;
    Json whitelist = Json::array();
    for (const auto& [proto, port] : port_whitelist) whitelist.push_back(proto + "/" + std::to_string(port));
    doc["port_whitelist"] = std::move(whitelist);
  } else {
    doc["logon_event"] = logon_event;
    doc["success_outcome"] = success_outcome;
  }
  return doc;
}

std::string netflow_layer(const NetflowRecord& record, bool inbound, const IngestSpec& spec) {
  const auto protocol = upper(record.protocol);
  std::string port = "Other";
  if (record.dst_port && spec.port_whitelist.contains({protocol, *record.dst_port})) port = std::to_string(*record.dst_port);
  return protocol + "/" + port + "/" + (inbound ? "inbound" : "outbound");
}

std::string auth_layer(const AuthRecord& record, std::string_view placement) {
  return record.logon_type + "/" + record.auth_package + "/" + std::string(placement);
}

Ingestor::Ingestor(IngestSpec spec) : spec_(std::move(spec)), internal_(spec_.internal_hosts) {
  if (!spec_.has_header) {
    for (const auto& [field, col] : spec_.columns) {
      std::size_t index = 0;
      auto [ptr, ec] = std::from_chars(col.data(), col.data() + col.size(), index);
      if (ec != std::errc{} || ptr != col.data() + col.size()) {
        throw InvalidInput("column for '" + field + "' must be an index when the input has no header");
      }
      resolved_[field] = index;
    }
  }
}

void Ingestor::set_header(std::string_view line) {
  const auto names = split(line, spec_.delimiter);
  resolved_.clear();
  for (const auto& [field, col] : spec_.columns) {
    const auto it = std::find(names.begin(), names.end(), std::string_view(col));
    if (it == names.end()) throw InvalidInput("malformed CSV header: column '" + col + "' not found");
    resolved_[field] = static_cast<std::size_t>(it - names.begin());
  }
}

std::optional<std::size_t> Ingestor::column(const std::string& field) const {
  if (auto it = resolved_.find(field); it != resolved_.end()) return it->second;
  return std::nullopt;
}

bool Ingestor::add(const NetflowRecord& record) {
  ++counters_.records_read;
  if (record.src_host.empty() || record.dst_host.empty() || record.protocol.empty() ||
      (record.dst_port && (*record.dst_port < 0 || *record.dst_port > 65535))) {
    ++counters_.records_skipped;
    return false;
  }
  const bool src_internal = internal_.contains(record.src_host);
  const bool dst_internal = internal_.contains(record.dst_host);
  if (src_internal == dst_internal) {
    ++counters_.records_filtered;
    return false;
  }
  const bool inbound = dst_internal;
  const auto& internal_host = inbound ? record.dst_host : record.src_host;
  const auto& external_host = inbound ? record.src_host : record.dst_host;
  graph_.add_event(internal_host, external_host, netflow_layer(record, inbound, spec_));
  ++counters_.edges_created;
  return true;
}

bool Ingestor::add(const AuthRecord& record) {
  ++counters_.records_read;
  if (record.src_user.empty() || record.dst_user.empty() || record.src_host.empty() || record.dst_host.empty() ||
      record.logon_type.empty() || record.auth_package.empty()) {
    ++counters_.records_skipped;
    return false;
  }
  if ((!record.event_kind.empty() && record.event_kind != spec_.logon_event) ||
      (!record.outcome.empty() && record.outcome != spec_.success_outcome)) {
    ++counters_.records_filtered;
    return false;
  }
  if (record.src_host == record.dst_host) {
    graph_.add_event(record.dst_user, record.dst_host, auth_layer(record, "Local"));
    counters_.edges_created += 1;
  } else {
    graph_.add_event(record.src_user, record.src_host, auth_layer(record, "From"));
    graph_.add_event(record.dst_user, record.dst_host, auth_layer(record, "To"));
    counters_.edges_created += 2;
  }
  return true;
}

void Ingestor::add_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (trim(line).empty()) return;
  const auto fields = split(line, spec_.delimiter);
  const auto get = [&](const std::string& field) -> std::optional<std::string_view> {
    const auto col = column(field);
    if (!col) return std::string_view{};
    if (*col >= fields.size()) return std::nullopt;
    return fields[*col];
  };
  const auto skip = [&] {
    ++counters_.records_read;
    ++counters_.records_skipped;
  };

  try {
    if (spec_.mode == IngestMode::Netflow) {
      NetflowRecord r;
      const auto src = get("src_host");
      const auto dst = get("dst_host");
      const auto proto = get("protocol");
      const auto port = get("dst_port");
      if (!src || !dst || !proto || !port) return skip();
      r.src_host = *src;
      r.dst_host = *dst;
      r.protocol = *proto;
      if (!port->empty()) {
        int value = 0;
        auto [ptr, ec] = std::from_chars(port->data(), port->data() + port->size(), value);
        if (ec != std::errc{} || ptr != port->data() + port->size()) return skip();
        r.dst_port = value;
      }
      add(r);
    } else {
      AuthRecord r;
      std::optional<std::string_view> values[8];
      for (std::size_t f = 0; f < kAuthFields.size(); ++f) {
        values[f] = get(kAuthFields[f]);
        if (!values[f]) return skip();
      }
      r.src_user = *values[0];
      r.dst_user = *values[1];
      r.src_host = *values[2];
      r.dst_host = *values[3];
      r.logon_type = *values[4];
      r.auth_package = *values[5];
      r.outcome = *values[6];
      r.event_kind = *values[7];
      add(r);
    }
  } catch (const InvalidInput&) {
    // Names the graph cannot store (e.g. leading '#').
    skip();
  }
}

MultiplexBipartiteGraph ingest_netflow(std::span<const NetflowRecord> records, const IngestSpec& spec) {
  if (spec.mode != IngestMode::Netflow) throw InvalidInput("ingest spec is not in netflow mode");
  Ingestor ingestor(spec);
  for (const auto& r : records) ingestor.add(r);
  return ingestor.take_graph();
}

MultiplexBipartiteGraph ingest_auth(std::span<const AuthRecord> records, const IngestSpec& spec) {
  if (spec.mode != IngestMode::Auth) throw InvalidInput("ingest spec is not in auth mode");
  Ingestor ingestor(spec);
  for (const auto& r : records) ingestor.add(r);
  return ingestor.take_graph();
}

IngestResult ingest_files(const std::vector<std::filesystem::path>& inputs, const IngestSpec& spec) {
  for (const auto& field : fields_for(spec.mode)) {
    const bool optional = field == "dst_port" || field == "outcome" || field == "event_kind";
    if (!optional && !spec.columns.contains(field)) throw InvalidInput("ingest spec does not map field '" + field + "'");
  }
  Ingestor ingestor(spec);
  std::string line;
  char buffer[1 << 16];
  for (const auto& path : inputs) {
    gzFile file = gzopen(path.c_str(), "rb");
    if (!file) throw InvalidInput("cannot open input " + path.string());
    bool header_pending = spec.has_header;
    line.clear();
    const auto flush = [&] {
      if (header_pending) {
        if (trim(line).empty()) return;
        ingestor.set_header(line);
        header_pending = false;
      } else {
        ingestor.add_line(line);
      }
    };
    try {
      while (gzgets(file, buffer, sizeof buffer) != nullptr) {
        line += buffer;
        if (!line.empty() && line.back() == '\n') {
          line.pop_back();
          flush();
          line.clear();
        }
      }
      if (!line.empty()) flush();
      int status = Z_OK;
      gzerror(file, &status);
      if (status != Z_OK && status != Z_STREAM_END) throw InvalidInput("read error in " + path.string());
    } catch (...) {
      gzclose(file);
      throw;
    }
    gzclose(file);
  }
  auto counters = ingestor.counters();
  return {ingestor.take_graph(), counters};
}

}  // namespace mlbm
