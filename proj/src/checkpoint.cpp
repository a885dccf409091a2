#include "vsr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace vsr {
namespace {

constexpr const char* kMagic = "3DSR1";

using Kind = CheckpointError::Kind;

std::size_t payload_bytes(const ModelSpec& spec) {
    return static_cast<std::size_t>(count_parameters(spec, true)) * sizeof(float);
}

void put_floats(std::string& out, std::span<const float> values) {
    for (float v : values) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
    }
}

void get_floats(const unsigned char*& cursor, std::span<float> values) {
    for (float& v : values) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(cursor[b]) << (8 * b);
        v = std::bit_cast<float>(bits);
        cursor += 4;
    }
}

[[noreturn]] void malformed(const std::string& why) {
    throw CheckpointError(Kind::MalformedHeader, "malformed checkpoint header: " + why);
}

int to_int(const std::string& text, const std::string& key) {
    try {
        std::size_t used = 0;
        const long v = std::stol(text, &used);
        if (used != text.size()) malformed("bad value for " + key);
        return static_cast<int>(v);
    } catch (const std::logic_error&) {
        malformed("bad value for " + key);
    }
}

std::string layer_line(const LayerSpec& l) {
    std::ostringstream os;
    os << to_string(l.kind) << " in=" << l.inGroups << " out=" << l.outGroups << " kernel=" << l.kD << 'x' << l.kH
       << 'x' << l.kW << " temporal=" << to_string(l.temporalPad) << " act=" << to_string(l.activation)
       << " pad=" << l.spatialPad << " stride=" << l.stride;
    return os.str();
}

LayerSpec parse_layer(const std::string& text) {
    std::istringstream ss(text);
    std::string kind;
    ss >> kind;
    LayerSpec l;
    if (kind == "conv3d") {
        l.kind = LayerKind::Conv3D;
    } else if (kind == "conv2d") {
        l.kind = LayerKind::Conv2D;
    } else {
        malformed("unknown layer kind '" + kind + "'");
    }
    std::string field;
    while (ss >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) malformed("bad layer field '" + field + "'");
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "in") {
            l.inGroups = to_int(value, key);
        } else if (key == "out") {
            l.outGroups = to_int(value, key);
        } else if (key == "kernel") {
            int d = 0, h = 0, w = 0;
            if (std::sscanf(value.c_str(), "%dx%dx%d", &d, &h, &w) != 3) malformed("bad kernel '" + value + "'");
            l.kD = d;
            l.kH = h;
            l.kW = w;
        } else if (key == "temporal") {
            try {
                l.temporalPad = temporal_pad_from_string(value);
            } catch (const std::invalid_argument& e) {
                malformed(e.what());
            }
        } else if (key == "act") {
            if (value == "relu") {
                l.activation = Activation::ReLU;
            } else if (value == "none") {
                l.activation = Activation::None;
            } else {
                malformed("unknown activation '" + value + "'");
            }
        } else if (key == "pad") {
            l.spatialPad = to_int(value, key);
        } else if (key == "stride") {
            l.stride = to_int(value, key);
        } else {
            malformed("unknown layer field '" + key + "'");
        }
    }
    return l;
}

}  // namespace

std::string checkpoint_header(const ModelSpec& spec, const CheckpointMeta& meta) {
    std::ostringstream os;
    os << kMagic << '\n';
    os << "task = " << to_string(spec.task) << '\n';
    os << "name = " << spec.name << '\n';
    os << "scale = " << spec.scale << '\n';
    os << "input_frames = " << spec.inputFrames << '\n';
    os << "concat_after = " << (spec.concatAfter ? std::to_string(*spec.concatAfter) : "none") << '\n';
    os << "flatten = " << to_string(spec.flatten) << '\n';
    os << "pixel_shuffle = row-major\n";
    for (const LayerSpec& l : spec.layers) os << "layer = " << layer_line(l) << '\n';
    os << "step = " << meta.step << '\n';
    os << "seed = " << meta.seed << '\n';
    for (const auto& [k, v] : meta.extra) os << "meta." << k << " = " << v << '\n';
    os << "payload_bytes = " << payload_bytes(spec) << '\n';
    os << "end\n";
    return os.str();
}

void save_checkpoint(const ModelParams& params, const ModelSpec& spec, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
    spec.validate();
    check_params(spec, params);
    for (const auto& [k, v] : meta.extra) {
        if (k.find_first_of(" =\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw std::invalid_argument("checkpoint metadata '" + k + "' must be a single-line key/value");
        }
    }
    std::string blob = checkpoint_header(spec, meta);
    for (const auto& layer : params.layers) {
        put_floats(blob, layer.kernel.values());
        put_floats(blob, layer.bias);
    }
    // Write-then-rename so a crash never leaves a half-written checkpoint.
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError(Kind::Io, "cannot write " + tmp.string());
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!out) throw CheckpointError(Kind::Io, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(Kind::Io, "cannot open checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        throw CheckpointError(Kind::BadMagic, path.string() + " is not a checkpoint (bad magic)");
    }
    Checkpoint ck;
    ck.spec.concatAfter.reset();
    long declared = -1;
    bool ended = false;
    while (std::getline(in, line)) {
        if (line == "end") {
            ended = true;
            break;
        }
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) malformed("line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 3);
        if (key == "task") {
            if (value == "sr") {
                ck.spec.task = ModelTask::SuperResolution;
            } else if (value == "scene") {
                ck.spec.task = ModelTask::SceneClassifier;
            } else {
                malformed("unknown task '" + value + "'");
            }
        } else if (key == "name") {
            ck.spec.name = value;
        } else if (key == "scale") {
            ck.spec.scale = to_int(value, key);
        } else if (key == "input_frames") {
            ck.spec.inputFrames = to_int(value, key);
        } else if (key == "concat_after") {
            if (value != "none") ck.spec.concatAfter = to_int(value, key);
        } else if (key == "flatten") {
            if (value == "group-major") {
                ck.spec.flatten = FlattenOrder::GroupMajor;
            } else if (value == "depth-major") {
                ck.spec.flatten = FlattenOrder::DepthMajor;
            } else {
                malformed("unknown flatten order '" + value + "'");
            }
        } else if (key == "pixel_shuffle") {
            if (value != "row-major") malformed("unsupported pixel shuffle convention '" + value + "'");
        } else if (key == "layer") {
            ck.spec.layers.push_back(parse_layer(value));
        } else if (key == "step") {
            ck.meta.step = to_int(value, key);
        } else if (key == "seed") {
            try {
                ck.meta.seed = std::stoull(value);
            } catch (const std::logic_error&) {
                malformed("bad seed");
            }
        } else if (key.rfind("meta.", 0) == 0) {
            ck.meta.extra[key.substr(5)] = value;
        } else if (key == "payload_bytes") {
            declared = to_int(value, key);
        } else {
            malformed("unknown key '" + key + "'");
        }
    }
    if (!ended) throw CheckpointError(Kind::Truncated, path.string() + ": header ends before 'end'");
    try {
        ck.spec.validate();
    } catch (const std::invalid_argument& e) {
        malformed(e.what());
    }
    const std::size_t expected = payload_bytes(ck.spec);
    if (declared < 0 || static_cast<std::size_t>(declared) != expected) {
        throw CheckpointError(Kind::SizeMismatch, path.string() + ": header declares " + std::to_string(declared) +
                                                      " payload bytes but the layers need " +
                                                      std::to_string(expected));
    }
    std::vector<unsigned char> payload(expected);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(expected));
    if (static_cast<std::size_t>(in.gcount()) != expected) {
        throw CheckpointError(Kind::Truncated, path.string() + ": payload truncated (" +
                                                   std::to_string(in.gcount()) + " of " + std::to_string(expected) +
                                                   " bytes)");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw CheckpointError(Kind::SizeMismatch, path.string() + ": trailing bytes after payload");
    }
    ck.params = zero_params<float>(ck.spec);
    const unsigned char* cursor = payload.data();
    for (auto& layer : ck.params.layers) {
        get_floats(cursor, layer.kernel.values());
        get_floats(cursor, layer.bias);
    }
    return ck;
}

}  // namespace vsr
