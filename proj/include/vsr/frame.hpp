#pragma once

#include <array>
#include <optional>
#include <vector>

namespace vsr {

// Single-channel float image, row-major.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Plane() = default;
    Plane(int w, int h, float fill = 0.0f) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }

    Plane crop(int x0, int y0, int w, int h) const;
    void clamp01();

    friend bool operator==(const Plane&, const Plane&) = default;
};

// Luma in [0,1] plus optional 4:2:0 chroma (U, V) of ceil(H/2) x ceil(W/2).
struct Frame {
    Plane luma;
    std::optional<std::array<Plane, 2>> chroma;

    static Frame from_luma(Plane luma);
    static Frame from_planes(Plane luma, Plane u, Plane v);

    int width() const { return luma.width; }
    int height() const { return luma.height; }
    bool has_chroma() const { return chroma.has_value(); }
};

struct VideoClip {
    std::vector<Frame> frames;
    double frameRate = 30.0;

    std::size_t size() const { return frames.size(); }
    int width() const { return frames.empty() ? 0 : frames.front().width(); }
    int height() const { return frames.empty() ? 0 : frames.front().height(); }

    // Throws std::invalid_argument when empty or frames disagree in geometry.
    void validate() const;
};

inline int chroma_extent(int lumaExtent) { return (lumaExtent + 1) / 2; }

// Five-frame window centered on `center`; indices outside the clip replicate
// the first or last frame.
std::array<int, 5> window_indices(int center, int clipLength);

}  // namespace vsr
