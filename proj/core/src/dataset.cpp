#include "charrnet/dataset.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "charrnet/errors.hpp"
#include "charrnet/io.hpp"
#include "charrnet/parallel.hpp"
#include "json_codec.hpp"

namespace charrnet {

namespace {

// Stream identifiers for derive_seed.
constexpr std::uint64_t kPopulationStream = 0x706f70;  // "pop"
constexpr std::uint64_t kGeometryStream = 0x67656f;    // "geo"
constexpr std::uint64_t kRecordStream = 0x726563;      // "rec"

constexpr const char* kFormatName = "charrnet-dataset";
constexpr int kFormatVersion = 1;

std::size_t bursts_for(const DatasetConfig& cfg, Split s) {
    return s == Split::train ? cfg.bursts_per_device_train : cfg.bursts_per_device_test;
}

struct Context {
    const DatasetConfig& cfg;
    std::uint64_t seed;
    std::vector<DeviceFingerprint> population;
    std::vector<RecordBlock> layout;
    std::vector<ChannelTag> tags;                   // per block
    std::vector<std::optional<ReflectorGeometry>> geometry;  // per block

    Context(const DatasetConfig& c, std::uint64_t s) : cfg(c), seed(s) {
        c.validate();
        population = make_population(c.population, resolve_population_seed(c, s));
        layout = record_layout(c);
        for (const RecordBlock& b : layout) {
            tags.push_back(parse_channel_tag(b.tag));
            const ChannelTag& t = tags.back();
            if (t.kind == ChannelTag::Kind::geometry) {
                GeometrySpec g = c.geometry;
                g.n_reflectors = t.n_reflectors;
                g.line_of_sight = t.line_of_sight;
                // Keyed by (split, tag) so train and test never share a geometry stream.
                Rng rng = make_rng(s, {kGeometryStream, static_cast<std::uint64_t>(b.split), fnv1a64(b.tag)});
                geometry.emplace_back(draw_geometry(g, rng));
            } else {
                geometry.emplace_back(std::nullopt);
            }
        }
    }

    DatasetRecord make(std::size_t index) const {
        std::size_t bi = 0;
        while (bi < layout.size() && index >= layout[bi].first + layout[bi].count) ++bi;
        if (bi == layout.size()) throw ArgumentError("dataset: record index " + std::to_string(index) + " out of range");
        const RecordBlock& block = layout[bi];
        const std::size_t local = index - block.first;
        const std::size_t device = local % cfg.population.n_devices;

        Rng rng = make_rng(seed, {kRecordStream, index});
        ComplexSignal x = apply_fingerprint(generate_burst(cfg.burst, rng), population[device]);
        const ChannelTag& tag = tags[bi];
        switch (tag.kind) {
            case ChannelTag::Kind::pristine:
                break;
            case ChannelTag::Kind::geometry:
                x = convolve(x, realize(*geometry[bi], rng));
                break;
            case ChannelTag::Kind::rayleigh:
            case ChannelTag::Kind::ricean: {
                FadingSpec f = cfg.fading;
                f.model = tag.kind == ChannelTag::Kind::rayleigh ? FadingModel::rayleigh : FadingModel::ricean;
                x = convolve(x, sample_fading_channel(f, rng));
                break;
            }
        }
        x = add_awgn(x, {cfg.snr_db}, rng);
        return {std::move(x), device, block.tag, block.split};
    }
};

void put_f32(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFU));
}

float get_f32(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return std::bit_cast<float>(bits);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::size_t parse_index(const std::string& s, const std::string& where) {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw IoError(where + ": bad integer \"" + s + "\"");
    return v;
}

}  // namespace

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split \"" + s + "\"");
}

ChannelTag parse_channel_tag(const std::string& tag) {
    ChannelTag t;
    t.text = tag;
    if (tag == "pristine") return t;
    if (tag == "rayleigh") {
        t.kind = ChannelTag::Kind::rayleigh;
        return t;
    }
    if (tag == "ricean") {
        t.kind = ChannelTag::Kind::ricean;
        return t;
    }
    static const std::regex re("^(n?)LOS([0-9]{1,6})$");
    std::smatch m;
    if (!std::regex_match(tag, m, re)) throw ConfigError("unknown channel tag \"" + tag + "\"");
    t.kind = ChannelTag::Kind::geometry;
    t.line_of_sight = m[1].length() == 0;
    t.n_reflectors = std::stoul(m[2].str());
    if (!t.line_of_sight && t.n_reflectors == 0)
        throw ConfigError("channel tag \"" + tag + "\" describes an empty channel (no line of sight, no reflectors)");
    return t;
}

void DatasetConfig::validate() const {
    try {
        if (population.n_devices < 1) throw ConfigError("dataset.n_devices must be >= 1");
        if (!(population.pole_jitter_ppm >= 0.0)) throw ConfigError("dataset.pole_jitter_ppm must be >= 0");
        if (!(population.cutoff > 0.0 && population.cutoff < 1.0)) throw ConfigError("dataset.filter_cutoff must lie in (0, 1)");
        if (population.sections < 1) throw ConfigError("dataset.filter_sections must be >= 1");
        burst.validate();
        geometry.validate();
        fading.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("dataset: ") + e.what());
    }
    if (std::isnan(snr_db)) throw ConfigError("dataset.snr_db must be a number");
    for (const auto* list : {&train_tags, &test_tags}) {
        std::set<std::string> seen;
        for (const std::string& t : *list) {
            parse_channel_tag(t);
            if (!seen.insert(t).second) throw ConfigError("dataset: duplicate channel tag \"" + t + "\"");
        }
    }
    const std::size_t total = population.n_devices * (train_tags.size() * bursts_per_device_train +
                                                      test_tags.size() * bursts_per_device_test);
    if (total == 0) throw ConfigError("dataset: configuration produces no records");
}

std::uint64_t resolve_population_seed(const DatasetConfig& cfg, std::uint64_t seed) {
    return cfg.population_seed ? *cfg.population_seed : derive_seed(seed, {kPopulationStream});
}

std::vector<RecordBlock> record_layout(const DatasetConfig& cfg) {
    std::vector<RecordBlock> out;
    std::size_t next = 0;
    for (Split s : {Split::train, Split::test}) {
        const auto& tags = s == Split::train ? cfg.train_tags : cfg.test_tags;
        const std::size_t count = bursts_for(cfg, s) * cfg.population.n_devices;
        for (const std::string& t : tags) {
            out.push_back({s, t, next, count});
            next += count;
        }
    }
    return out;
}

DatasetRecord generate_record(const DatasetConfig& cfg, std::uint64_t seed, std::size_t index) {
    return Context(cfg, seed).make(index);
}

Dataset build_dataset(const DatasetConfig& cfg, std::uint64_t seed, std::size_t workers) {
    const Context ctx(cfg, seed);
    std::size_t total = 0;
    for (const RecordBlock& b : ctx.layout) total += b.count;

    std::vector<std::optional<DatasetRecord>> slots(total);
    parallel_chunks(total, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) slots[i] = ctx.make(i);
    });

    Dataset ds;
    ds.config = cfg;
    ds.seed = seed;
    ds.population_seed = resolve_population_seed(cfg, seed);
    ds.blocks = ctx.layout;
    ds.records.reserve(total);
    for (auto& r : slots) ds.records.push_back(std::move(*r));
    return ds;
}

Dataset Dataset::subset(Split split) const {
    Dataset out;
    out.config = config;
    out.seed = seed;
    out.population_seed = population_seed;
    for (const RecordBlock& b : blocks) {
        if (b.split != split) continue;
        out.blocks.push_back({b.split, b.tag, out.records.size(), b.count});
        for (std::size_t i = 0; i < b.count; ++i) out.records.push_back(records[b.first + i]);
    }
    return out;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create dataset directory " + dir.string());

    const std::size_t len = ds.burst_length();
    std::string bin;
    bin.reserve(ds.records.size() * len * 8);
    std::string labels = "record_index,device_id,channel_tag,split\n";
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const DatasetRecord& r = ds.records[i];
        if (r.burst.size() != len) throw SizeError("write_dataset: record " + std::to_string(i) + " has the wrong length");
        for (const cplx& z : r.burst.samples()) {
            put_f32(bin, z.real());
            put_f32(bin, z.imag());
        }
        labels += std::to_string(i) + "," + std::to_string(r.device_id) + "," + r.channel_tag + "," + to_string(r.split) + "\n";
    }

    codec::json meta;
    meta["format"] = kFormatName;
    meta["format_version"] = kFormatVersion;
    meta["seed"] = ds.seed;
    meta["population_seed"] = ds.population_seed;
    meta["n_devices"] = ds.num_devices();
    meta["burst_length"] = len;
    meta["sample_format"] = "float32le_interleaved_iq";
    meta["record_count"] = ds.records.size();
    meta["burst"] = {{"n_subcarriers", ds.config.burst.n_subcarriers},
                     {"cp_len", ds.config.burst.cp_len},
                     {"n_symbols", ds.config.burst.n_symbols},
                     {"active_subcarriers", ds.config.burst.active_subcarriers},
                     {"constellation", "qpsk"}};
    meta["channel_tags"] = {{"train", ds.config.train_tags}, {"test", ds.config.test_tags}};
    meta["index"] = codec::json::array();
    for (const RecordBlock& b : ds.blocks)
        meta["index"].push_back({{"split", to_string(b.split)}, {"tag", b.tag}, {"first", b.first}, {"count", b.count}});
    meta["config"] = codec::encode(ds.config);

    write_file_atomic(dir / "records.bin", bin);
    write_file_atomic(dir / "labels.csv", labels);
    write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
    for (const char* f : {"meta.json", "records.bin", "labels.csv"})
        if (!std::filesystem::exists(dir / f)) throw IoError("dataset file missing: " + (dir / f).string());

    const codec::json meta = codec::parse(read_file(dir / "meta.json"), (dir / "meta.json").string());
    Dataset ds;
    try {
        if (meta.at("format") != kFormatName || meta.at("format_version") != kFormatVersion)
            throw IoError((dir / "meta.json").string() + ": unsupported dataset format");
        ds.seed = meta.at("seed").get<std::uint64_t>();
        ds.population_seed = meta.at("population_seed").get<std::uint64_t>();
        ds.config = codec::decode_dataset(meta.at("config"), "meta.config");
        for (const auto& b : meta.at("index"))
            ds.blocks.push_back({parse_split(b.at("split").get<std::string>()), b.at("tag").get<std::string>(),
                                 b.at("first").get<std::size_t>(), b.at("count").get<std::size_t>()});
    } catch (const codec::json::exception& e) {
        throw IoError((dir / "meta.json").string() + ": malformed: " + e.what());
    }

    const std::size_t len = ds.burst_length();
    const std::size_t count = meta.at("record_count").get<std::size_t>();
    if (meta.at("burst_length").get<std::size_t>() != len) throw IoError("meta.json: burst_length disagrees with the burst spec");
    const std::string bin = read_file(dir / "records.bin");
    if (bin.size() != count * len * 8)
        throw IoError((dir / "records.bin").string() + ": expected " + std::to_string(count * len * 8) + " bytes, found " +
                      std::to_string(bin.size()));

    std::istringstream labels(read_file(dir / "labels.csv"));
    std::string line;
    std::getline(labels, line);
    if (line != "record_index,device_id,channel_tag,split") throw IoError("labels.csv: unexpected header");

    const auto* raw = reinterpret_cast<const unsigned char*>(bin.data());
    ds.records.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(labels, line)) throw IoError("labels.csv: fewer rows than records");
        const auto cols = split_csv_line(line);
        if (cols.size() != 4) throw IoError("labels.csv: malformed row " + std::to_string(i + 1));
        if (parse_index(cols[0], "labels.csv") != i) throw IoError("labels.csv: rows out of order at " + std::to_string(i));
        const std::size_t device = parse_index(cols[1], "labels.csv");
        if (device >= ds.num_devices()) throw IoError("labels.csv: device_id out of range at row " + std::to_string(i));
        std::vector<cplx> samples(len);
        const unsigned char* p = raw + i * len * 8;
        for (std::size_t k = 0; k < len; ++k) samples[k] = {get_f32(p + 8 * k), get_f32(p + 8 * k + 4)};
        ds.records.push_back({ComplexSignal(std::move(samples)), device, cols[2], parse_split(cols[3])});
    }
    if (std::getline(labels, line) && !line.empty()) throw IoError("labels.csv: more rows than records");
    return ds;
}

}  // namespace charrnet
