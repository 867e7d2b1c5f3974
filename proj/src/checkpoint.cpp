#include "deepen/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace deepen {

namespace {

using json = nlohmann::ordered_json;

json flat(const Matrix& m) { return json(m.data); }

Matrix unflat(const json& arr, std::size_t rows, std::size_t cols, const char* what) {
    Matrix m(rows, cols);
    if (!arr.is_array() || arr.size() != rows * cols) {
        throw std::runtime_error(std::string("checkpoint: bad array size for ") + what);
    }
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = arr[i].get<double>();
    return m;
}

}  // namespace

std::string to_checkpoint_json(const ParamSet& params) {
    json j;
    j["kind"] = params.spec.kind == NetworkKind::Fnn ? "fnn" : "resnet";
    j["widths"] = params.spec.widths;
    json layers = json::array();
    if (params.spec.kind == NetworkKind::Fnn) {
        for (const auto& l : params.layers) {
            layers.push_back({{"weight", flat(l.weight)}, {"bias", flat(l.bias)}});
        }
    } else {
        layers.push_back({{"weight", flat(params.entry_weight)}});
        for (const auto& b : params.blocks) {
            layers.push_back({{"w1", flat(b.w1)}, {"w2", flat(b.w2)}, {"bias", flat(b.bias)}});
        }
        layers.push_back({{"weight", flat(params.exit_weight)}});
    }
    j["layers"] = std::move(layers);
    return j.dump(2);
}

ParamSet from_checkpoint_json(const std::string& text) {
    const json j = json::parse(text);
    ParamSet p;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "fnn") {
        p.spec.kind = NetworkKind::Fnn;
    } else if (kind == "resnet") {
        p.spec.kind = NetworkKind::ResNet;
    } else {
        throw std::runtime_error("checkpoint: unknown kind '" + kind + "'");
    }
    p.spec.widths = j.at("widths").get<std::vector<int>>();
    p.spec.validate();

    const auto& h = p.spec.widths;
    const json& layers = j.at("layers");
    if (p.spec.kind == NetworkKind::Fnn) {
        if (layers.size() != h.size() - 1) throw std::runtime_error("checkpoint: layer count");
        for (std::size_t k = 1; k < h.size(); ++k) {
            const json& l = layers[k - 1];
            p.layers.push_back({unflat(l.at("weight"), h[k], h[k - 1], "weight"),
                                unflat(l.at("bias"), h[k], 1, "bias")});
        }
    } else {
        if (layers.size() != h.size() - 1) throw std::runtime_error("checkpoint: layer count");
        const std::size_t w = static_cast<std::size_t>(h[1]);
        p.entry_weight = unflat(layers[0].at("weight"), w, h[0], "entry weight");
        for (std::size_t b = 1; b + 1 < layers.size(); ++b) {
            const json& l = layers[b];
            p.blocks.push_back({unflat(l.at("w1"), w, w, "w1"), unflat(l.at("w2"), w, w, "w2"),
                                unflat(l.at("bias"), w, 1, "bias")});
        }
        p.exit_weight = unflat(layers.back().at("weight"), h.back(), w, "exit weight");
    }
    if (p.scalar_count() != param_count(p.spec)) {
        throw std::runtime_error("checkpoint: parameter count mismatch");
    }
    return p;
}

void save_checkpoint(const std::string& path, const ParamSet& params) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << to_checkpoint_json(params) << "\n";
}

ParamSet load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_checkpoint_json(text);
}

}  // namespace deepen
