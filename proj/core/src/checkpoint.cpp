#include "charrnet/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "charrnet/config.hpp"
#include "charrnet/errors.hpp"
#include "charrnet/io.hpp"

namespace charrnet {

namespace {

template <class T>
void put(std::string& out, T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    const U bits = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFU));
}

class Cursor {
public:
    explicit Cursor(std::string_view b) : b_(b) {}

    template <class T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                        std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        need(sizeof(T));
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(b_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    bool done() const noexcept { return pos_ == b_.size(); }

private:
    void need(std::size_t n) const {
        if (b_.size() - pos_ < n) throw IoError("checkpoint: truncated stream");
    }
    std::string_view b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Model& model) {
    std::string out = "CHRR";
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, config_digest(model.config()));
    const auto params = model.params();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const Param* p : params) {
        put<std::uint16_t>(out, static_cast<std::uint16_t>(p->name.size()));
        out += p->name;
        put<std::uint8_t>(out, static_cast<std::uint8_t>(p->shape.size()));
        for (std::size_t d : p->shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        for (double v : p->value) put<double>(out, v);
    }
    return out;
}

void decode_checkpoint_into(std::string_view bytes, Model& model) {
    Cursor c(bytes);
    if (c.bytes(4) != "CHRR") throw IoError("checkpoint: bad magic");
    const auto version = c.get<std::uint32_t>();
    if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
    if (c.get<std::uint64_t>() != config_digest(model.config()))
        throw ConfigError("checkpoint: config digest does not match the model configuration");
    const auto count = c.get<std::uint32_t>();
    auto params = model.params();
    if (count != params.size()) throw ConfigError("checkpoint: parameter count mismatch");
    for (Param* p : params) {
        const std::string name = c.bytes(c.get<std::uint16_t>());
        if (name != p->name) throw ConfigError("checkpoint: expected parameter " + p->name + ", found " + name);
        const auto rank = c.get<std::uint8_t>();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = c.get<std::uint32_t>();
        if (shape != p->shape) throw ConfigError("checkpoint: shape mismatch for " + name);
        for (double& v : p->value) v = c.get<double>();
    }
    if (!c.done()) throw IoError("checkpoint: trailing bytes");
}

std::filesystem::path checkpoint_config_path(const std::filesystem::path& path) {
    std::filesystem::path p = path;
    p += ".config.json";
    return p;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    write_file_atomic(checkpoint_config_path(path), dump_model_config(model.config()) + "\n");
    write_file_atomic(path, encode_checkpoint(model));
}

std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
    const auto cfg_path = checkpoint_config_path(path);
    if (!std::filesystem::exists(cfg_path)) throw IoError("checkpoint config not found: " + cfg_path.string());
    auto model = make_model(parse_model_config(read_file(cfg_path)));
    decode_checkpoint_into(read_file(path), *model);
    return model;
}

}  // namespace charrnet
