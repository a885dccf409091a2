#include "vsr/frame.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace vsr {

Plane Plane::crop(int x0, int y0, int w, int h) const {
    if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > width || y0 + h > height) {
        throw std::invalid_argument("crop outside plane bounds");
    }
    Plane out(w, h);
    for (int y = 0; y < h; ++y) {
        const float* src = data.data() + static_cast<std::size_t>(y0 + y) * width + x0;
        std::copy(src, src + w, out.data.data() + static_cast<std::size_t>(y) * w);
    }
    return out;
}

void Plane::clamp01() {
    for (float& v : data) v = std::clamp(v, 0.0f, 1.0f);
}

Frame Frame::from_luma(Plane luma) {
    if (luma.width < 1 || luma.height < 1 || luma.data.size() != static_cast<std::size_t>(luma.width) * luma.height) {
        throw std::invalid_argument("frame luma has inconsistent geometry");
    }
    Frame f;
    f.luma = std::move(luma);
    f.luma.clamp01();
    return f;
}

Frame Frame::from_planes(Plane luma, Plane u, Plane v) {
    Frame f = from_luma(std::move(luma));
    const int cw = chroma_extent(f.width());
    const int ch = chroma_extent(f.height());
    if (u.width != cw || u.height != ch || v.width != cw || v.height != ch) {
        throw std::invalid_argument("chroma planes must be " + std::to_string(cw) + "x" + std::to_string(ch));
    }
    u.clamp01();
    v.clamp01();
    f.chroma = std::array<Plane, 2>{std::move(u), std::move(v)};
    return f;
}

void VideoClip::validate() const {
    if (frames.empty()) throw std::invalid_argument("clip has no frames");
    for (const Frame& f : frames) {
        if (f.width() != width() || f.height() != height()) {
            throw std::invalid_argument("clip frames disagree in geometry");
        }
    }
}

std::array<int, 5> window_indices(int center, int clipLength) {
    std::array<int, 5> idx{};
    for (int k = 0; k < 5; ++k) idx[k] = std::clamp(center - 2 + k, 0, clipLength - 1);
    return idx;
}

}  // namespace vsr
