#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "vsr/frame.hpp"

namespace vsr {

enum class ClipFormat { Y4M, RawYUV420, PGMDir };

struct Geometry {
    int width = 0;
    int height = 0;
    friend bool operator==(const Geometry&, const Geometry&) = default;
};

class ClipFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// "WxH", e.g. "1920x1080".
Geometry parse_geometry(const std::string& text);

ClipFormat clip_format_from_string(const std::string& name);
const char* to_string(ClipFormat format);

// .y4m -> Y4M, .yuv -> RawYUV420, directories (or paths without extension) -> PGMDir.
ClipFormat guess_clip_format(const std::filesystem::path& path);

struct Y4MHeader {
    Geometry geometry;
    double frameRate = 30.0;
    bool chroma = true;  // false for "Cmono"
};

Y4MHeader parse_y4m_header(const std::string& line);

// 8-bit samples map to [0,1] as x/255. RawYUV420 requires `geometry`.
VideoClip read_clip(const std::filesystem::path& path, ClipFormat format,
                    std::optional<Geometry> geometry = std::nullopt);

// Samples are written as round-half-up of 255*x clamped to [0,255]. Luma-only
// clips are written with neutral chroma for the 4:2:0 formats.
void write_clip(const VideoClip& clip, const std::filesystem::path& path, ClipFormat format);

Plane read_pgm(const std::filesystem::path& path);
void write_pgm(const Plane& plane, const std::filesystem::path& path);

std::uint8_t quantize8(float v);

}  // namespace vsr
