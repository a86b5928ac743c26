#include "charrnet/config.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "charrnet/errors.hpp"
#include "charrnet/io.hpp"
#include "json_codec.hpp"

namespace charrnet {
namespace codec {

namespace {

// Strict object reader: every key must be consumed, unknown keys are errors.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }
    ~ObjectReader() = default;

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string at(const std::string& key) const { return path_ + "." + key; }

    template <class T>
    void read(const std::string& key, T& out) {
        if (const json* v = find(key)) out = as<T>(*v, at(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown key \"" + it.key() + "\"");
    }

    template <class T>
    static T as(const json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, double>) {
            if (v.is_string()) {
                const std::string s = v.get<std::string>();
                if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
                if (s == "-inf") return -std::numeric_limits<double>::infinity();
                throw ConfigError(where + ": expected a number");
            }
            if (!v.is_number()) throw ConfigError(where + ": expected a number");
            return v.get<double>();
        } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_unsigned()) throw ConfigError(where + ": expected a nonnegative integer");
            return static_cast<T>(v.get<std::uint64_t>());
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(where + ": expected a string");
            return v.get<std::string>();
        } else {
            static_assert(sizeof(T) == 0, "unsupported type");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class T>
std::vector<T> read_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(ObjectReader::as<T>(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::array<double, 2> read_pair(const json& v, const std::string& where) {
    const auto l = read_list<double>(v, where);
    if (l.size() != 2) throw ConfigError(where + ": expected [low, high]");
    return {l[0], l[1]};
}

json number(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

json encode_wfm(const WfmLayerConfig& c) { return {{"filters", c.filters}, {"kernel", c.kernel}, {"stride", c.stride}}; }

WfmLayerConfig decode_wfm(const json& j, const std::string& path) {
    WfmLayerConfig c;
    ObjectReader r(j, path);
    r.read("filters", c.filters);
    r.read("kernel", c.kernel);
    r.read("stride", c.stride);
    r.finish();
    if (c.filters == 0 || c.kernel == 0 || c.stride == 0) throw ConfigError(path + ": filters, kernel and stride must be >= 1");
    return c;
}

std::string fading_model_name(FadingModel m) { return m == FadingModel::rayleigh ? "rayleigh" : "ricean"; }

json encode_fading(const FadingSpec& f, bool with_model) {
    json j;
    if (with_model) j["model"] = fading_model_name(f.model);
    j["n_taps"] = f.n_taps;
    j["decay"] = f.decay;
    j["k_factor_db"] = f.k_factor_db ? number(*f.k_factor_db) : json(nullptr);
    return j;
}

FadingSpec decode_fading(const json& j, const std::string& path, bool with_model) {
    FadingSpec f;
    ObjectReader r(j, path);
    if (with_model) {
        std::string m = fading_model_name(f.model);
        r.read("model", m);
        if (m == "rayleigh") f.model = FadingModel::rayleigh;
        else if (m == "ricean") f.model = FadingModel::ricean;
        else throw ConfigError(r.at("model") + ": expected \"rayleigh\" or \"ricean\"");
    }
    r.read("n_taps", f.n_taps);
    r.read("decay", f.decay);
    if (const json* k = r.find("k_factor_db"); k && !k->is_null()) f.k_factor_db = ObjectReader::as<double>(*k, r.at("k_factor_db"));
    r.finish();
    try {
        f.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return f;
}

json encode_backbone(const BackboneConfig& b) {
    return {{"channels", b.channels}, {"kernel", b.kernel}, {"stride", b.stride}};
}

}  // namespace

json parse(std::string_view text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": invalid JSON: " + e.what());
    }
}

json encode(const DatasetConfig& c) {
    json j;
    j["n_devices"] = c.population.n_devices;
    j["pole_jitter_ppm"] = c.population.pole_jitter_ppm;
    j["filter_cutoff"] = c.population.cutoff;
    j["filter_sections"] = c.population.sections;
    j["population_seed"] = c.population_seed ? json(*c.population_seed) : json(nullptr);
    j["burst"] = {{"n_subcarriers", c.burst.n_subcarriers},
                  {"cp_len", c.burst.cp_len},
                  {"n_symbols", c.burst.n_symbols},
                  {"active_subcarriers", c.burst.active_subcarriers}};
    j["bursts_per_device_train"] = c.bursts_per_device_train;
    j["bursts_per_device_test"] = c.bursts_per_device_test;
    j["train_tags"] = c.train_tags;
    j["test_tags"] = c.test_tags;
    j["snr_db"] = number(c.snr_db);
    j["geometry"] = {{"max_delay_samples", c.geometry.max_delay_samples},
                     {"attn_db_range", c.geometry.attn_db_range},
                     {"position_jitter", c.geometry.position_jitter}};
    j["fading"] = encode_fading(c.fading, false);
    return j;
}

DatasetConfig decode_dataset(const json& j, const std::string& path) {
    DatasetConfig c;
    ObjectReader r(j, path);
    r.read("n_devices", c.population.n_devices);
    r.read("pole_jitter_ppm", c.population.pole_jitter_ppm);
    r.read("filter_cutoff", c.population.cutoff);
    r.read("filter_sections", c.population.sections);
    if (const json* s = r.find("population_seed"); s && !s->is_null())
        c.population_seed = ObjectReader::as<std::uint64_t>(*s, r.at("population_seed"));
    if (const json* b = r.find("burst")) {
        ObjectReader rb(*b, r.at("burst"));
        rb.read("n_subcarriers", c.burst.n_subcarriers);
        rb.read("cp_len", c.burst.cp_len);
        rb.read("n_symbols", c.burst.n_symbols);
        rb.read("active_subcarriers", c.burst.active_subcarriers);
        rb.finish();
    }
    r.read("bursts_per_device_train", c.bursts_per_device_train);
    r.read("bursts_per_device_test", c.bursts_per_device_test);
    if (const json* t = r.find("train_tags")) c.train_tags = read_list<std::string>(*t, r.at("train_tags"));
    if (const json* t = r.find("test_tags")) c.test_tags = read_list<std::string>(*t, r.at("test_tags"));
    r.read("snr_db", c.snr_db);
    if (const json* g = r.find("geometry")) {
        ObjectReader rg(*g, r.at("geometry"));
        rg.read("max_delay_samples", c.geometry.max_delay_samples);
        if (const json* a = rg.find("attn_db_range")) c.geometry.attn_db_range = read_pair(*a, rg.at("attn_db_range"));
        rg.read("position_jitter", c.geometry.position_jitter);
        rg.finish();
    }
    if (const json* f = r.find("fading")) c.fading = decode_fading(*f, r.at("fading"), false);
    r.finish();
    c.validate();
    return c;
}

json encode(const ModelConfig& c) {
    json j;
    j["kind"] = to_string(c.kind);
    j["num_classes"] = c.num_classes;
    j["input_length"] = c.input_length;
    j["init_seed"] = c.init_seed;
    j["stft"] = {{"window_len", c.stft.window_len}, {"hop", c.stft.hop}, {"beta", c.stft.beta}};
    j["equivariant"] = encode_wfm(c.equivariant);
    j["invariant"] = encode_wfm(c.invariant);
    j["complex_stack"] = {{"channels", c.complex_stack.channels},
                          {"kernel", c.complex_stack.kernel},
                          {"stride", c.complex_stack.stride}};
    j["backbone"] = encode_backbone(c.backbone);
    return j;
}

ModelConfig decode_model(const json& j, const std::string& path) {
    ModelConfig c;
    ObjectReader r(j, path);
    std::string kind = to_string(c.kind);
    r.read("kind", kind);
    c.kind = parse_model_kind(kind);
    r.read("num_classes", c.num_classes);
    r.read("input_length", c.input_length);
    r.read("init_seed", c.init_seed);
    if (const json* s = r.find("stft")) {
        ObjectReader rs(*s, r.at("stft"));
        rs.read("window_len", c.stft.window_len);
        rs.read("hop", c.stft.hop);
        rs.read("beta", c.stft.beta);
        rs.finish();
    }
    if (const json* e = r.find("equivariant")) c.equivariant = decode_wfm(*e, r.at("equivariant"));
    if (const json* e = r.find("invariant")) c.invariant = decode_wfm(*e, r.at("invariant"));
    if (const json* s = r.find("complex_stack")) {
        ObjectReader rs(*s, r.at("complex_stack"));
        if (const json* ch = rs.find("channels")) c.complex_stack.channels = read_list<std::size_t>(*ch, rs.at("channels"));
        rs.read("kernel", c.complex_stack.kernel);
        rs.read("stride", c.complex_stack.stride);
        rs.finish();
    }
    if (const json* b = r.find("backbone")) {
        ObjectReader rb(*b, r.at("backbone"));
        if (const json* ch = rb.find("channels")) c.backbone.channels = read_list<std::size_t>(*ch, rb.at("channels"));
        rb.read("kernel", c.backbone.kernel);
        rb.read("stride", c.backbone.stride);
        rb.finish();
    }
    r.finish();
    return c;
}

json encode(const TrainConfig& c) {
    json aug;
    const AugmentationConfig& a = c.augmentation;
    aug["awgn"] = a.awgn;
    aug["awgn_snr_range"] = {number(a.awgn_snr_range[0]), number(a.awgn_snr_range[1])};
    aug["cfo"] = a.cfo;
    aug["cfo_max_offset_fraction"] = a.cfo_spec.max_offset_fraction;
    aug["fading_specs"] = json::array();
    for (const FadingSpec& f : a.fading_specs) aug["fading_specs"].push_back(encode_fading(f, true));
    aug["fading_probability"] = a.fading_probability;
    aug["fresh_draws"] = a.fresh_draws;

    json j;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["optimizer"] = to_string(c.optimizer);
    j["momentum"] = c.momentum;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["adam_epsilon"] = c.adam_epsilon;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["augmentation"] = aug;
    return j;
}

TrainConfig decode_train(const json& j, const std::string& path) {
    TrainConfig c;
    ObjectReader r(j, path);
    r.read("epochs", c.epochs);
    r.read("batch_size", c.batch_size);
    r.read("learning_rate", c.learning_rate);
    std::string opt = to_string(c.optimizer);
    r.read("optimizer", opt);
    c.optimizer = parse_optimizer(opt);
    r.read("momentum", c.momentum);
    r.read("beta1", c.beta1);
    r.read("beta2", c.beta2);
    r.read("adam_epsilon", c.adam_epsilon);
    r.read("seed", c.seed);
    r.read("workers", c.workers);
    if (const json* a = r.find("augmentation")) {
        AugmentationConfig& aug = c.augmentation;
        ObjectReader ra(*a, r.at("augmentation"));
        ra.read("awgn", aug.awgn);
        if (const json* s = ra.find("awgn_snr_range")) aug.awgn_snr_range = read_pair(*s, ra.at("awgn_snr_range"));
        ra.read("cfo", aug.cfo);
        ra.read("cfo_max_offset_fraction", aug.cfo_spec.max_offset_fraction);
        if (const json* f = ra.find("fading_specs")) {
            if (!f->is_array()) throw ConfigError(ra.at("fading_specs") + ": expected an array");
            aug.fading_specs.clear();
            for (std::size_t i = 0; i < f->size(); ++i)
                aug.fading_specs.push_back(decode_fading((*f)[i], ra.at("fading_specs") + "[" + std::to_string(i) + "]", true));
        }
        ra.read("fading_probability", aug.fading_probability);
        ra.read("fresh_draws", aug.fresh_draws);
        ra.finish();
    }
    r.finish();
    c.validate();
    return c;
}

json encode(const EvalConfig& c) { return {{"split", c.split}}; }

EvalConfig decode_eval(const json& j, const std::string& path) {
    EvalConfig c;
    ObjectReader r(j, path);
    r.read("split", c.split);
    r.finish();
    if (c.split != "train" && c.split != "test" && c.split != "all")
        throw ConfigError(path + ".split: expected \"train\", \"test\" or \"all\"");
    return c;
}

json encode(const VerifyConfig& c) {
    return {{"cases", c.cases},
            {"gradient_configs", c.gradient_configs},
            {"fig2_trials", c.fig2_trials},
            {"seed", c.seed},
            {"tolerance", c.tolerance},
            {"gradient_tolerance", c.gradient_tolerance},
            {"gradient_step", c.gradient_step},
            {"channel_taps", c.channel_taps}};
}

VerifyConfig decode_verify(const json& j, const std::string& path) {
    VerifyConfig c;
    ObjectReader r(j, path);
    r.read("cases", c.cases);
    r.read("gradient_configs", c.gradient_configs);
    r.read("fig2_trials", c.fig2_trials);
    r.read("seed", c.seed);
    r.read("tolerance", c.tolerance);
    r.read("gradient_tolerance", c.gradient_tolerance);
    r.read("gradient_step", c.gradient_step);
    r.read("channel_taps", c.channel_taps);
    r.finish();
    if (!(c.tolerance > 0.0) || !(c.gradient_tolerance > 0.0) || !(c.gradient_step > 0.0))
        throw ConfigError(path + ": tolerances and step must be positive");
    if (c.channel_taps == 0) throw ConfigError(path + ".channel_taps: must be >= 1");
    return c;
}

json encode(const RunConfig& c) {
    json j;
    j["config_version"] = kConfigVersion;
    j["dataset"] = encode(c.dataset);
    j["model"] = encode(c.model);
    j["train"] = encode(c.train);
    j["eval"] = encode(c.eval);
    j["verify"] = encode(c.verify);
    return j;
}

RunConfig decode_run(const json& j) {
    RunConfig c;
    ObjectReader r(j, "config");
    const json* v = r.find("config_version");
    if (!v) throw ConfigError("config: missing \"config_version\"");
    if (!v->is_number_integer() || v->get<long long>() != kConfigVersion)
        throw ConfigError("config: unsupported config_version (expected " + std::to_string(kConfigVersion) + ")");
    if (const json* s = r.find("dataset")) c.dataset = decode_dataset(*s);
    if (const json* s = r.find("model")) c.model = decode_model(*s);
    if (const json* s = r.find("train")) c.train = decode_train(*s);
    if (const json* s = r.find("eval")) c.eval = decode_eval(*s);
    if (const json* s = r.find("verify")) c.verify = decode_verify(*s);
    r.finish();
    return c;
}

}  // namespace codec

RunConfig parse_run_config(std::string_view json_text) { return codec::decode_run(codec::parse(json_text, "config")); }

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
    return codec::decode_run(codec::parse(read_file(path), path.string()));
}

std::string dump_run_config(const RunConfig& cfg) { return codec::encode(cfg).dump(2) + "\n"; }

ModelConfig parse_model_config(std::string_view json_text) {
    return codec::decode_model(codec::parse(json_text, "model config"));
}

std::string dump_model_config(const ModelConfig& cfg) { return codec::encode(cfg).dump(); }

// Architecture only: the init seed does not change parameter layout.
std::uint64_t config_digest(const ModelConfig& cfg) {
    ModelConfig arch = cfg;
    arch.init_seed = 0;
    return fnv1a64(dump_model_config(arch));
}

}  // namespace charrnet
