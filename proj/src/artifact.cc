#include "giglite/artifact.h"

#include <bit>
#include <cstdio>

#include "giglite/error.h"
#include "giglite/hash.h"
#include "giglite/text_format.h"

namespace giglite {

using nlohmann::json;

namespace {

const std::string kMagic = "giglite-model v1\n";

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(size_t n) {
        if (bytes_.size() - pos_ < n) {
            throw ParseError("model artifact truncated at byte " + std::to_string(pos_));
        }
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    uint32_t u32() {
        auto b = take(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
        return v;
    }
    bool done() const { return pos_ == bytes_.size(); }

  private:
    std::string_view bytes_;
    size_t pos_ = 0;
};

json metadata_json(const TrainingMetadata& m) {
    return {{"seed", m.seed},
            {"epochs", m.epochs},
            {"steps", m.steps},
            {"best_metric_name", m.best_metric_name},
            {"best_metric", m.best_metric},
            {"best_step", m.best_step}};
}

TrainingMetadata metadata_from(const json& j) {
    TrainingMetadata m;
    m.seed = j.value("seed", m.seed);
    m.epochs = j.value("epochs", m.epochs);
    m.steps = j.value("steps", m.steps);
    m.best_metric_name = j.value("best_metric_name", m.best_metric_name);
    m.best_metric = j.value("best_metric", m.best_metric);
    m.best_step = j.value("best_step", m.best_step);
    return m;
}

}  // namespace

std::string serialize_artifact(const ModelArtifact& a) {
    std::string out = kMagic;
    const std::string config = json{{"model", a.config.to_json()}, {"training", metadata_json(a.metadata)}}.dump();
    append_le32(out, static_cast<uint32_t>(config.size()));
    out += config;
    append_le32(out, static_cast<uint32_t>(a.params.size()));
    for (size_t i = 0; i < a.params.size(); ++i) {
        const auto& t = a.params.tensors[i];
        append_le32(out, static_cast<uint32_t>(a.params.names[i].size()));
        out += a.params.names[i];
        append_le32(out, static_cast<uint32_t>(t.rows()));
        append_le32(out, static_cast<uint32_t>(t.cols()));
        for (Eigen::Index k = 0; k < t.size(); ++k) {
            append_le32(out, std::bit_cast<uint32_t>(t.data()[k]));
        }
    }
    return out;
}

ModelArtifact deserialize_artifact(std::string_view bytes) {
    Reader r(bytes);
    if (bytes.substr(0, kMagic.size()) != kMagic) {
        throw ParseError("not a giglite model artifact (bad header)");
    }
    r.take(kMagic.size());
    ModelArtifact a;
    const uint32_t config_len = r.u32();
    try {
        const json j = json::parse(r.take(config_len));
        a.config = ModelConfig::from_json(j.at("model"));
        a.metadata = metadata_from(j.at("training"));
    } catch (const json::exception& e) {
        throw ParseError(std::string("model artifact config: ") + e.what());
    }
    const uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
        std::string name(r.take(r.u32()));
        const uint32_t rows = r.u32(), cols = r.u32();
        Mat<float> t(rows, cols);
        for (Eigen::Index k = 0; k < t.size(); ++k) {
            t.data()[k] = std::bit_cast<float>(r.u32());
        }
        a.params.add(std::move(name), std::move(t));
    }
    if (!r.done()) throw ParseError("model artifact has trailing bytes");
    check_params(a.config, a.params);
    return a;
}

void save_artifact(const std::string& path, const ModelArtifact& a) { write_file(path, serialize_artifact(a)); }

ModelArtifact load_artifact(const std::string& path) { return deserialize_artifact(read_file(path)); }

std::string artifact_id(const ModelArtifact& a) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize_artifact(a))));
    return buf;
}

}  // namespace giglite
