#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "vsr/model.hpp"

namespace vsr {

struct CheckpointMeta {
    long step = 0;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> extra;

    friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
    ModelSpec spec;
    ModelParams params;
    CheckpointMeta meta;
};

class CheckpointError : public std::runtime_error {
public:
    enum class Kind { Io, BadMagic, MalformedHeader, Truncated, SizeMismatch };

    CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// File layout: the line "3DSR1", a human-readable `key = value` header ending
// with "end", then little-endian float32 blobs in layer order, kernel then bias.
void save_checkpoint(const ModelParams& params, const ModelSpec& spec, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string checkpoint_header(const ModelSpec& spec, const CheckpointMeta& meta);

}  // namespace vsr
