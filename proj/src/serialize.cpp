#include "mlbm/serialize.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "mlbm/errors.hpp"
#include "mlbm/io.hpp"

namespace mlbm {

namespace {

// JSON has no infinities; they are written as strings.
Json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double to_double(const Json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InvalidInput("expected a number in JSON document");
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

Eigen::VectorXd vector_from(const Json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) throw InvalidInput(std::string("missing array field '") + key + "'");
  const auto& arr = doc[key];
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_double(arr[i]);
  return v;
}

std::vector<std::string> names_from(const Json& doc, const char* key) {
  if (!doc.contains(key)) return {};
  return doc[key].get<std::vector<std::string>>();
}

/// Position of each of `wanted` within `have`; both must be the same name set.
std::vector<std::size_t> alignment(const std::vector<std::string>& have, const NameCatalog& wanted, const char* what) {
  if (have.size() != wanted.size()) throw DimensionMismatch(std::string(what) + " count differs from the graph");
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < have.size(); ++i) pos.emplace(have[i], i);
  std::vector<std::size_t> out(wanted.size());
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    auto it = pos.find(wanted.name(i));
    if (it == pos.end()) throw DimensionMismatch(std::string(what) + " '" + wanted.name(i) + "' missing from document");
    out[i] = it->second;
  }
  return out;
}

const char* weighting_name(Weighting w) { return w == Weighting::Binary ? "binary" : "counts"; }

}  // namespace

ParamLabels ParamLabels::of(const MultiplexBipartiteGraph& graph) {
  return {graph.layers().names(), graph.top().names(), graph.bottom().names()};
}

Json params_to_json(const ModelParams& params, const ParamLabels& labels) {
  Json doc;
  doc["pi"] = vector_json(params.pi);
  doc["rho"] = vector_json(params.rho);
  doc["mu"] = vector_json(params.mu);
  doc["nu"] = vector_json(params.nu);
  Json theta = Json::array();
  for (const auto& t : params.theta) {
    Json rows = Json::array();
    for (Eigen::Index h = 0; h < t.rows(); ++h) {
      Json row = Json::array();
      for (Eigen::Index k = 0; k < t.cols(); ++k) row.push_back(number(t(h, k)));
      rows.push_back(std::move(row));
    }
    theta.push_back(std::move(rows));
  }
  doc["theta"] = std::move(theta);
  doc["layer_labels"] = labels.layers;
  doc["top_names"] = labels.top;
  doc["bottom_names"] = labels.bottom;
  return doc;
}

ModelParams params_from_json(const Json& doc, ParamLabels* labels) {
  ModelParams p;
  p.pi = vector_from(doc, "pi");
  p.rho = vector_from(doc, "rho");
  p.mu = vector_from(doc, "mu");
  p.nu = vector_from(doc, "nu");
  if (!doc.contains("theta") || !doc["theta"].is_array()) throw InvalidInput("missing array field 'theta'");
  for (const auto& layer : doc["theta"]) {
    if (!layer.is_array() || static_cast<Eigen::Index>(layer.size()) != p.H()) {
      throw DimensionMismatch("theta layer must have H rows");
    }
    Eigen::MatrixXd t(p.H(), p.K());
    for (Eigen::Index h = 0; h < p.H(); ++h) {
      const auto& row = layer[static_cast<std::size_t>(h)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != p.K()) {
        throw DimensionMismatch("theta row must have K entries");
      }
      for (Eigen::Index k = 0; k < p.K(); ++k) t(h, k) = to_double(row[static_cast<std::size_t>(k)]);
    }
    p.theta.push_back(std::move(t));
  }
  if (labels) {
    labels->layers = names_from(doc, "layer_labels");
    labels->top = names_from(doc, "top_names");
    labels->bottom = names_from(doc, "bottom_names");
  }
  return p;
}

Json fit_to_json(const FitResult& fit, const MultiplexBipartiteGraph& graph) {
  Json doc = params_to_json(fit.params, ParamLabels::of(graph));
  Json top = Json::object();
  for (std::size_t i = 0; i < fit.top.assignment.size(); ++i) top[graph.top().name(i)] = fit.top.assignment[i];
  Json bottom = Json::object();
  for (std::size_t j = 0; j < fit.bottom.assignment.size(); ++j) bottom[graph.bottom().name(j)] = fit.bottom.assignment[j];
  doc["assignment_top"] = std::move(top);
  doc["assignment_bottom"] = std::move(bottom);
  Json trajectory = Json::array();
  for (double g : fit.criterion_trajectory) trajectory.push_back(number(g));
  doc["criterion_trajectory"] = std::move(trajectory);
  doc["final_L_C"] = number(fit.final_L_C);
  doc["converged"] = fit.converged;
  doc["iterations"] = fit.iterations;
  doc["restart_index"] = fit.restart_index;
  doc["seed"] = fit.seed;
  doc["weighting"] = weighting_name(fit.weighting);
  doc["degenerate_top"] = fit.degenerate_top;
  doc["degenerate_bottom"] = fit.degenerate_bottom;
  return doc;
}

FitResult fit_from_json(const Json& doc, const MultiplexBipartiteGraph& graph) {
  ParamLabels labels;
  const auto stored = params_from_json(doc, &labels);
  const auto top_pos = alignment(labels.top, graph.top(), "top node");
  const auto bottom_pos = alignment(labels.bottom, graph.bottom(), "bottom node");
  const auto layer_pos = alignment(labels.layers, graph.layers(), "layer");
  if (stored.I() != static_cast<Eigen::Index>(labels.top.size()) ||
      stored.J() != static_cast<Eigen::Index>(labels.bottom.size()) || stored.L() != labels.layers.size()) {
    throw DimensionMismatch("parameter vectors do not match the name echoes");
  }

  FitResult fit;
  fit.params.pi = stored.pi;
  fit.params.rho = stored.rho;
  fit.params.mu.resize(static_cast<Eigen::Index>(top_pos.size()));
  fit.params.nu.resize(static_cast<Eigen::Index>(bottom_pos.size()));
  for (std::size_t i = 0; i < top_pos.size(); ++i) fit.params.mu[static_cast<Eigen::Index>(i)] = stored.mu[static_cast<Eigen::Index>(top_pos[i])];
  for (std::size_t j = 0; j < bottom_pos.size(); ++j) fit.params.nu[static_cast<Eigen::Index>(j)] = stored.nu[static_cast<Eigen::Index>(bottom_pos[j])];
  for (std::size_t l = 0; l < layer_pos.size(); ++l) fit.params.theta.push_back(stored.theta[layer_pos[l]]);

  const int H = static_cast<int>(stored.H());
  const int K = static_cast<int>(stored.K());
  fit.top = {Side::Top, H, std::vector<int>(graph.top().size())};
  fit.bottom = {Side::Bottom, K, std::vector<int>(graph.bottom().size())};
  const auto& top = doc.at("assignment_top");
  const auto& bottom = doc.at("assignment_bottom");
  for (std::size_t i = 0; i < graph.top().size(); ++i) fit.top.assignment[i] = top.at(graph.top().name(i)).get<int>();
  for (std::size_t j = 0; j < graph.bottom().size(); ++j) fit.bottom.assignment[j] = bottom.at(graph.bottom().name(j)).get<int>();
  fit.top.validate();
  fit.bottom.validate();
  fit.soft = {one_hot(fit.top), one_hot(fit.bottom)};

  for (const auto& g : doc.at("criterion_trajectory")) fit.criterion_trajectory.push_back(to_double(g));
  fit.final_L_C = to_double(doc.at("final_L_C"));
  fit.converged = doc.at("converged").get<bool>();
  fit.iterations = doc.at("iterations").get<int>();
  fit.restart_index = doc.at("restart_index").get<int>();
  fit.seed = doc.value("seed", std::uint64_t{0});
  fit.weighting = doc.value("weighting", std::string("binary")) == "counts" ? Weighting::Counts : Weighting::Binary;
  fit.degenerate_top = doc.value("degenerate_top", std::vector<int>{});
  fit.degenerate_bottom = doc.value("degenerate_bottom", std::vector<int>{});
  return fit;
}

std::string dump_json(const Json& doc) { return doc.dump(2) + '\n'; }

Json load_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& err) {
    throw InvalidInput(path.string() + ": " + err.what());
  }
}

}  // namespace mlbm
