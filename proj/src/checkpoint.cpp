#include "mmdgm/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <map>

// Checkpoint container: magic "MMDGM1", a little-endian u64 manifest byte
// length, the JSON manifest, then the raw little-endian f64 tensor payload
// in manifest order.

namespace mmdgm {

namespace {

using nlohmann::json;

constexpr char kMagic[6] = {'M', 'M', 'D', 'G', 'M', '1'};

std::string act_name(Act a)
{
    switch (a) {
    case Act::Softplus: return "softplus";
    case Act::Sigmoid: return "sigmoid";
    case Act::Tanh: return "tanh";
    case Act::Identity: return "identity";
    }
    return "identity";
}

Act act_from_name(const std::string& s)
{
    if (s == "softplus") return Act::Softplus;
    if (s == "sigmoid") return Act::Sigmoid;
    if (s == "tanh") return Act::Tanh;
    if (s == "identity") return Act::Identity;
    throw DataError("checkpoint: unknown activation '" + s + "'");
}

struct NamedTensor {
    std::string name;
    const double* data;
    Index rows;
    Index cols;
};

void collect_adam(const AdamState& a, const std::string& prefix, std::vector<NamedTensor>& out)
{
    for (std::size_t i = 0; i < a.m.size(); ++i) {
        out.push_back({prefix + ".m" + std::to_string(i), a.m[i].data(), a.m[i].size(), 1});
        out.push_back({prefix + ".v" + std::to_string(i), a.v[i].data(), a.v[i].size(), 1});
    }
}

} // namespace

void checkpoint_save(const ModelState& state, const std::string& path)
{
    ModelState& s = const_cast<ModelState&>(state); // views only read

    std::vector<NamedTensor> tensors;
    for (const ParamView& v : param_views(s.theta, "theta"))
        tensors.push_back({v.name, v.data, v.rows, v.cols});
    for (const ParamView& v : param_views(s.phi, "phi"))
        tensors.push_back({v.name, v.data, v.rows, v.cols});
    tensors.push_back({"lambda", s.cls.lambda.data(), s.cls.lambda.rows(), s.cls.lambda.cols()});
    collect_adam(state.adam_theta, "adam.theta", tensors);
    collect_adam(state.adam_phi, "adam.phi", tensors);
    collect_adam(state.adam_lambda, "adam.lambda", tensors);

    json manifest;
    manifest["version"] = 1;
    manifest["epoch"] = state.epoch;
    manifest["seed"] = state.seed;
    manifest["act"] = act_name(state.phi.trunk.layers.empty() ? Act::Identity
                                                              : state.phi.trunk.layers[0].act);
    manifest["feature_mode"] =
        state.cls.feature_mode == FeatureMode::MeanZ ? "mean_z" : "concat_hidden";
    manifest["prior_var"] = state.cls.prior_var;
    manifest["adam_t"] = {{"theta", state.adam_theta.t},
                          {"phi", state.adam_phi.t},
                          {"lambda", state.adam_lambda.t}};

    json tensor_list = json::array();
    std::uint64_t offset = 0;
    for (const NamedTensor& t : tensors) {
        tensor_list.push_back({{"name", t.name},
                               {"rows", t.rows},
                               {"cols", t.cols},
                               {"offset", offset}});
        offset += static_cast<std::uint64_t>(t.rows * t.cols) * sizeof(double);
    }
    manifest["tensors"] = std::move(tensor_list);

    const std::string text = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("checkpoint_save: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const NamedTensor& t : tensors)
        out.write(reinterpret_cast<const char*>(t.data),
                  static_cast<std::streamsize>(t.rows * t.cols * sizeof(double)));
    if (!out)
        throw IoError("checkpoint_save: write failed for " + path);
}

ModelState checkpoint_load(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("checkpoint_load: cannot open " + path);

    char magic[6];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("checkpoint_load: bad magic in " + path);

    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len == 0 || len > (1ULL << 32))
        throw DataError("checkpoint_load: corrupt manifest length in " + path);

    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in)
        throw DataError("checkpoint_load: truncated manifest in " + path);

    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError("checkpoint_load: unreadable manifest in " + path + ": " + e.what());
    }
    if (manifest.value("version", -1) != 1)
        throw DataError("checkpoint_load: unsupported version in " + path);

    std::map<std::string, Matrix> loaded;
    for (const json& t : manifest.at("tensors")) {
        const std::string name = t.at("name");
        const Index rows = t.at("rows");
        const Index cols = t.at("cols");
        Matrix m(rows, cols);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(rows * cols * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(rows * cols * sizeof(double)))
            throw DataError("checkpoint_load: truncated tensor payload for '" + name + "' in " +
                            path);
        loaded.emplace(name, std::move(m));
    }

    const Act act = act_from_name(manifest.at("act"));
    auto take = [&](const std::string& name) -> Matrix {
        auto it = loaded.find(name);
        if (it == loaded.end())
            throw DataError("checkpoint_load: missing tensor '" + name + "' in " + path);
        return it->second;
    };
    auto has = [&](const std::string& name) { return loaded.count(name) > 0; };

    auto load_mlp = [&](const std::string& prefix) {
        MlpParams p;
        for (std::size_t i = 0; has(prefix + ".layer" + std::to_string(i) + ".W"); ++i) {
            Layer l;
            l.W = take(prefix + ".layer" + std::to_string(i) + ".W");
            const Matrix b = take(prefix + ".layer" + std::to_string(i) + ".b");
            l.b = Eigen::Map<const Vector>(b.data(), b.rows());
            l.act = act;
            p.layers.push_back(std::move(l));
        }
        return p;
    };
    auto load_head = [&](const std::string& prefix) {
        LinearHead h;
        h.W = take(prefix + ".W");
        const Matrix b = take(prefix + ".b");
        h.b = Eigen::Map<const Vector>(b.data(), b.rows());
        return h;
    };

    ModelState state;
    state.theta.trunk = load_mlp("theta.trunk");
    state.theta.logits = load_head("theta.logits");
    state.phi.trunk = load_mlp("phi.trunk");
    state.phi.mu = load_head("phi.mu");
    state.phi.log_var = load_head("phi.log_var");
    state.cls.lambda = take("lambda");
    state.cls.prior_var = manifest.at("prior_var");
    state.cls.feature_mode = manifest.at("feature_mode") == "mean_z" ? FeatureMode::MeanZ
                                                                     : FeatureMode::ConcatHidden;
    state.epoch = manifest.at("epoch");
    state.seed = manifest.at("seed");

    auto load_adam = [&](const std::string& prefix, std::uint64_t t) {
        AdamState a;
        a.t = t;
        for (std::size_t i = 0; has(prefix + ".m" + std::to_string(i)); ++i) {
            const Matrix m = take(prefix + ".m" + std::to_string(i));
            const Matrix v = take(prefix + ".v" + std::to_string(i));
            a.m.push_back(Eigen::Map<const Array>(m.data(), m.rows()));
            a.v.push_back(Eigen::Map<const Array>(v.data(), v.rows()));
        }
        return a;
    };
    state.adam_theta = load_adam("adam.theta", manifest.at("adam_t").at("theta"));
    state.adam_phi = load_adam("adam.phi", manifest.at("adam_t").at("phi"));
    state.adam_lambda = load_adam("adam.lambda", manifest.at("adam_t").at("lambda"));
    return state;
}

} // namespace mmdgm
