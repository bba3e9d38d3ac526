#include <cstring>
#include <fstream>

#include "model_impl.hpp"

namespace coughnet {

namespace {

constexpr char kMagic[4] = {'C', 'N', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_string(std::ofstream& out, const std::string& s) {
    put(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
        throw IoError("truncated model file " + path);
    }
    return v;
}

std::string get_string(std::ifstream& in, const std::string& path) {
    const auto len = get<std::uint32_t>(in, path);
    if (len > (1u << 20)) throw IoError("implausible string length in " + path);
    std::string s(len, '\0');
    if (!in.read(s.data(), len)) throw IoError("truncated model file " + path);
    return s;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(kMagic, 4);
    put(out, kVersion);
    put_string(out, family_name(model.spec.family));

    const ModelSpec& s = model.spec;
    put(out, s.reg_strength);
    put(out, s.l1_weight);
    put(out, s.l2_weight);
    put(out, static_cast<std::int32_t>(s.hidden_units));
    put(out, s.mlp_l2);
    put(out, static_cast<std::int32_t>(s.conv_filters));
    put(out, static_cast<std::int32_t>(s.kernel_size));
    put(out, s.dropout);
    put(out, static_cast<std::int32_t>(s.dense_units));
    put(out, static_cast<std::int32_t>(s.lstm_units));
    put(out, static_cast<std::uint8_t>(s.preset));
    put(out, s.learning_rate);
    put(out, static_cast<std::int32_t>(s.epochs));
    put(out, static_cast<std::int32_t>(s.batch_size));

    put(out, static_cast<std::uint8_t>(model.shape.kind));
    put(out, static_cast<std::uint64_t>(model.shape.rows));
    put(out, static_cast<std::uint64_t>(model.shape.cols));
    put(out, model.seed);

    auto put_doubles = [&out](const std::vector<double>& values) {
        put(out, static_cast<std::uint64_t>(values.size()));
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    };
    put_doubles(model.loss_trace);
    put_doubles(model.feature_mean);
    put_doubles(model.feature_scale);
    put_doubles(model.params);
    if (!out) throw IoError("failed writing " + path);
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("bad magic in model file " + path);
    }
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion) {
        throw IoError("model format version mismatch in " + path + ": got " +
                      std::to_string(version) + ", expected " + std::to_string(kVersion));
    }

    TrainedModel model;
    model.spec.family = parse_family(get_string(in, path));
    ModelSpec& s = model.spec;
    s.reg_strength = get<double>(in, path);
    s.l1_weight = get<double>(in, path);
    s.l2_weight = get<double>(in, path);
    s.hidden_units = get<std::int32_t>(in, path);
    s.mlp_l2 = get<double>(in, path);
    s.conv_filters = get<std::int32_t>(in, path);
    s.kernel_size = get<std::int32_t>(in, path);
    s.dropout = get<double>(in, path);
    s.dense_units = get<std::int32_t>(in, path);
    s.lstm_units = get<std::int32_t>(in, path);
    s.preset = static_cast<ResNetPreset>(get<std::uint8_t>(in, path));
    s.learning_rate = get<double>(in, path);
    s.epochs = get<std::int32_t>(in, path);
    s.batch_size = get<std::int32_t>(in, path);

    model.shape.kind = static_cast<InputShape::Kind>(get<std::uint8_t>(in, path));
    model.shape.rows = static_cast<std::size_t>(get<std::uint64_t>(in, path));
    model.shape.cols = static_cast<std::size_t>(get<std::uint64_t>(in, path));
    model.seed = get<std::uint64_t>(in, path);

    auto get_doubles = [&in, &path](std::vector<double>* values) {
        const auto n = get<std::uint64_t>(in, path);
        if (n > (1ull << 34)) throw IoError("implausible array length in " + path);
        values->resize(n);
        if (!in.read(reinterpret_cast<char*>(values->data()),
                     static_cast<std::streamsize>(n * sizeof(double)))) {
            throw IoError("truncated model file " + path);
        }
    };
    get_doubles(&model.loss_trace);
    get_doubles(&model.feature_mean);
    get_doubles(&model.feature_scale);
    get_doubles(&model.params);
    model.rebuild();
    return model;
}

}  // namespace coughnet
