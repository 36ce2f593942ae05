#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rgate/gbdt.hpp"
#include "rgate/util.hpp"

namespace rgate::ml {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json key_list(const std::vector<net::MeasurementKey>& keys) {
    json out = json::array();
    for (const auto& key : keys)
        out.push_back({{"key", key.to_string()}, {"owning_ied", key.owning_ied}});
    return out;
}

std::vector<net::MeasurementKey> parse_key_list(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw DataError("model file: " + where + " must be an array");
    std::vector<net::MeasurementKey> out;
    for (const auto& item : arr) {
        out.push_back(net::MeasurementKey::parse(item.at("key").get<std::string>(),
                                                 item.at("owning_ied").get<int>()));
    }
    return out;
}

}  // namespace

std::string model_to_json_text(const GbdtModel& model) {
    json payload;
    payload["schema"] = {
        {"keys", key_list(model.schema.keys)},
        {"mean", model.schema.mean},
        {"std", model.schema.stddev},
        {"dropped", key_list(model.schema.dropped)},
    };
    payload["initial_score"] = model.initial_score;
    payload["learning_rate"] = model.learning_rate;
    payload["decision_threshold"] = model.decision_threshold;
    payload["hyperparams"] = {
        {"n_estimators", model.hyperparams.n_estimators},
        {"learning_rate", model.hyperparams.learning_rate},
        {"max_depth", model.hyperparams.max_depth},
        {"min_samples_leaf", model.hyperparams.min_samples_leaf},
        {"subsample", model.hyperparams.subsample},
    };
    json trees = json::array();
    for (const auto& tree : model.trees) {
        json nodes = json::array();
        for (const auto& node : tree.nodes)
            nodes.push_back({node.feature, node.threshold, node.left, node.right, node.value});
        trees.push_back(std::move(nodes));
    }
    payload["trees"] = std::move(trees);

    json doc;
    doc["format_version"] = kFormatVersion;
    doc["crc32"] = util::crc32(payload.dump());
    doc["model"] = std::move(payload);
    return doc.dump() + "\n";
}

GbdtModel model_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("format_version"))
        throw DataError("model file: missing format_version");
    const int version = doc.at("format_version").get<int>();
    if (version != kFormatVersion)
        throw DataError("model file: unsupported format version " + std::to_string(version) +
                        " (this build reads version " + std::to_string(kFormatVersion) + ")");
    if (!doc.contains("crc32") || !doc.contains("model"))
        throw DataError("model file: missing crc32 or model payload");
    const auto stored_crc = doc.at("crc32").get<std::uint32_t>();
    const auto actual_crc = util::crc32(doc.at("model").dump());
    if (stored_crc != actual_crc) {
        std::ostringstream os;
        os << "model file checksum mismatch: stored " << stored_crc << ", computed " << actual_crc;
        throw DataError(os.str());
    }

    const json& payload = doc.at("model");
    GbdtModel model;
    try {
        const json& schema = payload.at("schema");
        model.schema.keys = parse_key_list(schema.at("keys"), "schema.keys");
        model.schema.mean = schema.at("mean").get<std::vector<double>>();
        model.schema.stddev = schema.at("std").get<std::vector<double>>();
        model.schema.dropped = parse_key_list(schema.at("dropped"), "schema.dropped");
        model.initial_score = payload.at("initial_score").get<double>();
        model.learning_rate = payload.at("learning_rate").get<double>();
        model.decision_threshold = payload.at("decision_threshold").get<double>();
        const json& hp = payload.at("hyperparams");
        model.hyperparams.n_estimators = hp.at("n_estimators").get<int>();
        model.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
        model.hyperparams.max_depth = hp.at("max_depth").get<int>();
        model.hyperparams.min_samples_leaf = hp.at("min_samples_leaf").get<int>();
        model.hyperparams.subsample = hp.at("subsample").get<double>();
        for (const auto& jt : payload.at("trees")) {
            RegressionTree tree;
            for (const auto& jn : jt) {
                RegressionTree::Node node;
                node.feature = jn.at(0).get<std::int32_t>();
                node.threshold = jn.at(1).get<double>();
                node.left = jn.at(2).get<std::int32_t>();
                node.right = jn.at(3).get<std::int32_t>();
                node.value = jn.at(4).get<double>();
                tree.nodes.push_back(node);
            }
            model.trees.push_back(std::move(tree));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("model file: malformed payload: ") + e.what());
    }
    if (model.schema.keys.size() != model.schema.mean.size() ||
        model.schema.keys.size() != model.schema.stddev.size())
        throw DataError("model file: schema arrays disagree in length");
    return model;
}

void save_model(const GbdtModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + path);
    out << model_to_json_text(model);
}

GbdtModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json_text(buf.str());
}

}  // namespace rgate::ml
