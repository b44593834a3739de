#include "mmdgm/config.hpp"

#include "mmdgm/metrics.hpp"

#include <charconv>
#include <initializer_list>
#include <sstream>
#include <type_traits>

namespace mmdgm {

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a number");
    }
}

long long parse_int(const std::string& key, const std::string& v)
{
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as an integer");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as an unsigned integer");
    return out;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(trim(cur));
    return parts;
}

void check_choice(const std::string& key, const std::string& v,
                  std::initializer_list<const char*> choices)
{
    for (const char* c : choices)
        if (v == c)
            return;
    std::string msg = "config key '" + key + "': value '" + v + "' is not one of {";
    bool first = true;
    for (const char* c : choices) {
        if (!first)
            msg += ", ";
        msg += c;
        first = false;
    }
    throw ConfigError(msg + "}");
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value)
{
    if (key == "data") {
        check_choice(key, value, {"synth", "idx"});
        cfg.data = value;
    } else if (key == "idx_train_images") {
        cfg.idx_train_images = value;
    } else if (key == "idx_train_labels") {
        cfg.idx_train_labels = value;
    } else if (key == "idx_test_images") {
        cfg.idx_test_images = value;
    } else if (key == "idx_test_labels") {
        cfg.idx_test_labels = value;
    } else if (key == "synth_classes") {
        cfg.synth_classes = static_cast<int>(parse_int(key, value));
    } else if (key == "synth_side") {
        cfg.synth_side = static_cast<int>(parse_int(key, value));
    } else if (key == "synth_train_per_class") {
        cfg.synth_train_per_class = static_cast<int>(parse_int(key, value));
    } else if (key == "synth_test_per_class") {
        cfg.synth_test_per_class = static_cast<int>(parse_int(key, value));
    } else if (key == "synth_noise") {
        cfg.synth_noise = parse_double(key, value);
    } else if (key == "binarize") {
        check_choice(key, value, {"none", "stochastic", "threshold"});
        cfg.binarize = value;
    } else if (key == "latent_dim") {
        cfg.latent_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "hidden") {
        cfg.hidden.clear();
        for (const std::string& part : split(value, ','))
            cfg.hidden.push_back(static_cast<int>(parse_int(key, part)));
    } else if (key == "act") {
        check_choice(key, value, {"softplus", "tanh"});
        cfg.act = value;
    } else if (key == "feature_mode") {
        check_choice(key, value, {"mean_z", "concat_hidden"});
        cfg.feature_mode = value;
    } else if (key == "C") {
        cfg.C = parse_double(key, value);
    } else if (key == "sigma2_eta") {
        cfg.sigma2_eta = parse_double(key, value);
    } else if (key == "mc_samples") {
        cfg.mc_samples = static_cast<int>(parse_int(key, value));
    } else if (key == "batch_size") {
        cfg.batch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "epochs") {
        cfg.epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "pretrain_epochs") {
        cfg.pretrain_epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "base_lr") {
        cfg.base_lr = parse_double(key, value);
    } else if (key == "lr_decay_every") {
        cfg.lr_decay_every = static_cast<int>(parse_int(key, value));
    } else if (key == "lr_decay_factor") {
        cfg.lr_decay_factor = parse_double(key, value);
    } else if (key == "adam_beta1") {
        cfg.adam_beta1 = parse_double(key, value);
    } else if (key == "adam_beta2") {
        cfg.adam_beta2 = parse_double(key, value);
    } else if (key == "adam_eps") {
        cfg.adam_eps = parse_double(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_u64(key, value);
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else if (key == "checkpoint") {
        cfg.checkpoint = value;
    } else if (key == "n_samples") {
        cfg.n_samples = static_cast<int>(parse_int(key, value));
    } else if (key == "grid_cols") {
        cfg.grid_cols = static_cast<int>(parse_int(key, value));
    } else if (key == "mask") {
        parse_mask_spec(value); // validate now
        cfg.mask = value;
    } else if (key == "impute_iters") {
        cfg.impute_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "impute_init") {
        check_choice(key, value, {"uniform01", "gaussian"});
        cfg.impute_init = value;
    } else if (key == "impute_count") {
        cfg.impute_count = static_cast<int>(parse_int(key, value));
    } else if (key == "csweep_values") {
        cfg.csweep_values.clear();
        for (const std::string& part : split(value, ','))
            cfg.csweep_values.push_back(parse_double(key, part));
    } else if (key == "pegasos_reg") {
        cfg.pegasos_reg = parse_double(key, value);
    } else if (key == "pegasos_iters") {
        cfg.pegasos_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "pegasos_batch") {
        cfg.pegasos_batch = static_cast<int>(parse_int(key, value));
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

template <typename T>
std::string join(const std::vector<T>& vals)
{
    std::string out;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i)
            out += ",";
        if constexpr (std::is_same_v<T, double>)
            out += format_double(vals[i]);
        else
            out += std::to_string(vals[i]);
    }
    return out;
}

} // namespace

RunConfig parse_config(const std::string& file_text,
                       const std::vector<std::pair<std::string, std::string>>& cli_overrides)
{
    RunConfig cfg;

    std::istringstream in(file_text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        apply(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }

    for (const auto& [key, value] : cli_overrides)
        apply(cfg, key, value);
    return cfg;
}

std::string resolved_config_text(const RunConfig& cfg)
{
    std::ostringstream out;
    out << "data = " << cfg.data << "\n";
    out << "idx_train_images = " << cfg.idx_train_images << "\n";
    out << "idx_train_labels = " << cfg.idx_train_labels << "\n";
    out << "idx_test_images = " << cfg.idx_test_images << "\n";
    out << "idx_test_labels = " << cfg.idx_test_labels << "\n";
    out << "synth_classes = " << cfg.synth_classes << "\n";
    out << "synth_side = " << cfg.synth_side << "\n";
    out << "synth_train_per_class = " << cfg.synth_train_per_class << "\n";
    out << "synth_test_per_class = " << cfg.synth_test_per_class << "\n";
    out << "synth_noise = " << format_double(cfg.synth_noise) << "\n";
    out << "binarize = " << cfg.binarize << "\n";
    out << "latent_dim = " << cfg.latent_dim << "\n";
    out << "hidden = " << join(cfg.hidden) << "\n";
    out << "act = " << cfg.act << "\n";
    out << "feature_mode = " << cfg.feature_mode << "\n";
    out << "C = " << format_double(cfg.C) << "\n";
    out << "sigma2_eta = " << format_double(cfg.sigma2_eta) << "\n";
    out << "mc_samples = " << cfg.mc_samples << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "pretrain_epochs = " << cfg.pretrain_epochs << "\n";
    out << "base_lr = " << format_double(cfg.base_lr) << "\n";
    out << "lr_decay_every = " << cfg.lr_decay_every << "\n";
    out << "lr_decay_factor = " << format_double(cfg.lr_decay_factor) << "\n";
    out << "adam_beta1 = " << format_double(cfg.adam_beta1) << "\n";
    out << "adam_beta2 = " << format_double(cfg.adam_beta2) << "\n";
    out << "adam_eps = " << format_double(cfg.adam_eps) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    out << "checkpoint = " << cfg.checkpoint << "\n";
    out << "n_samples = " << cfg.n_samples << "\n";
    out << "grid_cols = " << cfg.grid_cols << "\n";
    out << "mask = " << cfg.mask << "\n";
    out << "impute_iters = " << cfg.impute_iters << "\n";
    out << "impute_init = " << cfg.impute_init << "\n";
    out << "impute_count = " << cfg.impute_count << "\n";
    out << "csweep_values = " << join(cfg.csweep_values) << "\n";
    out << "pegasos_reg = " << format_double(cfg.pegasos_reg) << "\n";
    out << "pegasos_iters = " << cfg.pegasos_iters << "\n";
    out << "pegasos_batch = " << cfg.pegasos_batch << "\n";
    return out.str();
}

TrainConfig to_train_config(const RunConfig& cfg)
{
    TrainConfig tc;
    tc.C = cfg.C;
    tc.sigma2_eta = cfg.sigma2_eta;
    tc.mc_samples = cfg.mc_samples;
    tc.batch_size = cfg.batch_size;
    tc.epochs = cfg.epochs;
    tc.pretrain_epochs = cfg.pretrain_epochs >= 0
                             ? cfg.pretrain_epochs
                             : (cfg.C > 0.0 ? cfg.epochs / 5 : 0);
    tc.latent_dim = cfg.latent_dim;
    tc.hidden = cfg.hidden;
    tc.act = cfg.act == "tanh" ? Act::Tanh : Act::Softplus;
    tc.feature_mode =
        cfg.feature_mode == "concat_hidden" ? FeatureMode::ConcatHidden : FeatureMode::MeanZ;
    tc.adam = AdamConfig{cfg.base_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
    tc.lr = LrSchedule{cfg.base_lr, cfg.lr_decay_factor, cfg.lr_decay_every};
    tc.seed = cfg.seed;
    return tc;
}

BinarizeMode binarize_mode(const RunConfig& cfg)
{
    if (cfg.binarize == "stochastic")
        return BinarizeMode::Stochastic;
    if (cfg.binarize == "threshold")
        return BinarizeMode::Threshold;
    return BinarizeMode::None;
}

ImputeInit impute_init_mode(const RunConfig& cfg)
{
    return cfg.impute_init == "gaussian" ? ImputeInit::Gaussian : ImputeInit::Uniform01;
}

MaskSpec parse_mask_spec(const std::string& text)
{
    MaskSpec spec;
    if (text.empty() || text == "none")
        return spec;
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind == "rand_drop") {
        spec.kind = MaskSpec::Kind::RandDrop;
        spec.drop_prob = parse_double("mask", arg);
        if (spec.drop_prob < 0.0 || spec.drop_prob > 1.0)
            throw ConfigError("mask rand_drop probability must be in [0,1]");
    } else if (kind == "rect") {
        const auto x = arg.find('x');
        if (x == std::string::npos)
            throw ConfigError("mask rect expects HxW, got '" + arg + "'");
        spec.kind = MaskSpec::Kind::Rect;
        spec.rect_h = static_cast<int>(parse_int("mask", arg.substr(0, x)));
        spec.rect_w = static_cast<int>(parse_int("mask", arg.substr(x + 1)));
    } else {
        throw ConfigError("mask kind '" + kind + "' is not one of {rand_drop, rect, none}");
    }
    return spec;
}

} // namespace mmdgm
