#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "charrnet/channel.hpp"
#include "charrnet/dsp.hpp"
#include "charrnet/fingerprint.hpp"

namespace charrnet {

enum class Split { train, test };
std::string to_string(Split s);
Split parse_split(const std::string& s);

/// Parsed channel tag: "pristine", "LOS<n>", "nLOS<n>", "rayleigh", "ricean".
struct ChannelTag {
    enum class Kind { pristine, geometry, rayleigh, ricean };
    Kind kind = Kind::pristine;
    std::size_t n_reflectors = 0;
    bool line_of_sight = true;
    std::string text;
};

ChannelTag parse_channel_tag(const std::string& tag);  // ConfigError on anything else

struct DatasetConfig {
    PopulationSpec population{};
    std::optional<std::uint64_t> population_seed;  // derived from the master seed when unset
    BurstSpec burst{};
    std::size_t bursts_per_device_train = 200;
    std::size_t bursts_per_device_test = 50;
    std::vector<std::string> train_tags{"pristine"};
    std::vector<std::string> test_tags{"pristine", "nLOS10", "LOS10"};
    double snr_db = 20.0;
    GeometrySpec geometry{};   // n_reflectors / line_of_sight come from the tag
    FadingSpec fading{};       // model comes from the tag

    void validate() const;
};

struct DatasetRecord {
    ComplexSignal burst;
    std::size_t device_id = 0;
    std::string channel_tag;
    Split split = Split::train;
};

// Contiguous run of records sharing split and tag.
struct RecordBlock {
    Split split;
    std::string tag;
    std::size_t first = 0;
    std::size_t count = 0;
};

struct Dataset {
    DatasetConfig config;
    std::uint64_t seed = 0;
    std::uint64_t population_seed = 0;
    std::vector<RecordBlock> blocks;
    std::vector<DatasetRecord> records;

    std::size_t num_devices() const noexcept { return config.population.n_devices; }
    std::size_t burst_length() const noexcept { return config.burst.length(); }
    // Records of one split, in index order.
    Dataset subset(Split split) const;
};

std::uint64_t resolve_population_seed(const DatasetConfig& cfg, std::uint64_t seed);

// Index layout: train blocks then test blocks; inside a block, burst-major then device.
std::vector<RecordBlock> record_layout(const DatasetConfig& cfg);

// Regenerates record `index` from (config, master seed) alone.
DatasetRecord generate_record(const DatasetConfig& cfg, std::uint64_t seed, std::size_t index);

// Generates every record, using up to `workers` threads; output is independent of the worker count.
Dataset build_dataset(const DatasetConfig& cfg, std::uint64_t seed, std::size_t workers = 1);

// Writes meta.json, records.bin (float32 LE interleaved I/Q) and labels.csv.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace charrnet
