#include "pace/model_io.hpp"

#include <fstream>
#include <sstream>

#include "pace/error.hpp"

namespace pace::io {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "pace-model";
constexpr int kVersion = 1;

json node_to_json(const Tree& tree, int id) {
  const Node& n = tree.node(id);
  if (n.is_leaf()) {
    return json{{"scores", n.scores}, {"depth", n.depth}, {"support", n.support}};
  }
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", node_to_json(tree, n.left)},
              {"right", node_to_json(tree, n.right)}};
}

int node_from_json(const json& j, std::vector<Node>& nodes, int depth) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (!j.is_object()) throw Error(ErrorCode::kModelMalformed, "node record must be an object");
  if (j.contains("feature")) {
    const int feature = j.at("feature").get<int>();
    if (feature < 0) throw Error(ErrorCode::kModelMalformed, "negative split feature");
    const double threshold = j.at("threshold").get<double>();
    const int l = node_from_json(j.at("left"), nodes, depth + 1);
    const int r = node_from_json(j.at("right"), nodes, depth + 1);
    Node& n = nodes[static_cast<std::size_t>(id)];
    n.feature = feature;
    n.threshold = threshold;
    n.left = l;
    n.right = r;
    n.depth = depth;
    return id;
  }
  Node& n = nodes[static_cast<std::size_t>(id)];
  n.scores = j.value("scores", std::vector<double>{});
  n.depth = j.value("depth", depth);
  n.support = j.value("support", 0);
  return id;
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kModelMalformed, std::string("bad model JSON: ") + e.what());
  }
}

}  // namespace

json tree_to_json(const Tree& tree) { return node_to_json(tree, 0); }

Tree tree_from_json(const json& j) {
  return guarded([&] {
    std::vector<Node> nodes;
    node_from_json(j, nodes, 0);
    return Tree(std::move(nodes));
  });
}

json ensemble_to_json(const WeightedEnsemble& ens) {
  json trees = json::array();
  for (const Tree& t : ens.trees) trees.push_back(tree_to_json(t));
  json j{{"format", kFormat},
         {"version", kVersion},
         {"kind", to_string(ens.kind)},
         {"leaf_mode", to_string(ens.leaf_mode)},
         {"n_features", ens.feature_count},
         {"n_labels", ens.label_count},
         {"weights", ens.weights},
         {"trees", std::move(trees)}};
  if (!ens.generated.empty()) {
    json origins = json::array();
    for (bool g : ens.generated) origins.push_back(g ? "generated" : "original");
    j["origins"] = std::move(origins);
  }
  return j;
}

WeightedEnsemble ensemble_from_json(const json& j) {
  auto ens = guarded([&] {
    if (j.value("format", std::string(kFormat)) != kFormat) {
      throw Error(ErrorCode::kModelMalformed, "not a pace-model document");
    }
    WeightedEnsemble e;
    e.kind = ensemble_kind_from_string(j.at("kind").get<std::string>());
    e.leaf_mode = leaf_mode_from_string(j.value("leaf_mode", std::string("probability")));
    e.feature_count = j.at("n_features").get<int>();
    e.label_count = j.at("n_labels").get<int>();
    e.weights = j.at("weights").get<std::vector<double>>();
    for (const auto& t : j.at("trees")) e.trees.push_back(tree_from_json(t));
    if (j.contains("origins")) {
      for (const auto& o : j.at("origins")) e.generated.push_back(o.get<std::string>() == "generated");
    }
    return e;
  });
  ens.validate();
  return ens;
}

json iforest_to_json(const IsolationForest& forest) {
  json trees = json::array();
  for (const Tree& t : forest.trees) trees.push_back(tree_to_json(t));
  const std::vector<double> weights(forest.trees.size(), 1.0);
  return json{{"format", kFormat},
              {"version", kVersion},
              {"kind", "isolation"},
              {"leaf_mode", "none"},
              {"n_features", forest.feature_count},
              {"n_labels", 0},
              {"subsample_size", forest.subsample_size},
              {"weights", weights},
              {"trees", std::move(trees)}};
}

IsolationForest iforest_from_json(const json& j) {
  return guarded([&] {
    if (j.at("kind").get<std::string>() != "isolation") {
      throw Error(ErrorCode::kModelMalformed, "expected an isolation forest document");
    }
    IsolationForest f;
    f.feature_count = j.at("n_features").get<int>();
    f.subsample_size = j.at("subsample_size").get<int>();
    for (const auto& t : j.at("trees")) {
      Tree tree = tree_from_json(t);
      if (f.feature_count > 0 && tree.max_feature() >= f.feature_count) {
        throw Error(ErrorCode::kModelMalformed, "isolation tree feature out of range");
      }
      f.trees.push_back(std::move(tree));
    }
    return f;
  });
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidInput, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kModelMalformed, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidInput, "cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace pace::io
