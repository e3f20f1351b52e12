#pragma once

// JSON documents for ModelParams and FitResult. Entities and layers are keyed
// by name so documents stay valid across catalog orderings.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlbm/graph.hpp"
#include "mlbm/inference.hpp"
#include "mlbm/model.hpp"

namespace mlbm {

using Json = nlohmann::ordered_json;

/// Name echoes stored next to the parameters.
struct ParamLabels {
  std::vector<std::string> layers;
  std::vector<std::string> top;
  std::vector<std::string> bottom;

  static ParamLabels of(const MultiplexBipartiteGraph& graph);
};

Json params_to_json(const ModelParams& params, const ParamLabels& labels);
/// Parses a params document; `labels`, when given, receives the name echoes
/// (empty vectors where the document has none).
ModelParams params_from_json(const Json& doc, ParamLabels* labels = nullptr);

Json fit_to_json(const FitResult& fit, const MultiplexBipartiteGraph& graph);
/// Rebuilds a FitResult aligned to `graph`'s catalogs. Soft assignments are
/// not stored in the document and come back as one-hot rows.
FitResult fit_from_json(const Json& doc, const MultiplexBipartiteGraph& graph);

std::string dump_json(const Json& doc);
Json load_json(const std::filesystem::path& path);

}  // namespace mlbm
