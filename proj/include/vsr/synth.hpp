#pragma once

#include <cstdint>
#include <vector>

#include "vsr/frame.hpp"

namespace vsr {

// Procedural test footage: a panning textured background (oriented gratings)
// with soft-edged shapes drifting over it. Frames sample a continuous scene
// function, so motion is exact at sub-pixel offsets.
struct SynthOptions {
    int width = 96;
    int height = 64;
    int frames = 20;
    double maxPan = 1.5;    // pixels per frame
    double edgeWidth = 0.3; // shape edge softness in pixels
    bool chroma = false;
};

VideoClip synth_clip(const SynthOptions& options, std::uint64_t seed);

// Scene A for frames [0, cutAt), then scene B.
VideoClip synth_cut_clip(const SynthOptions& options, int cutAt, std::uint64_t seedA, std::uint64_t seedB);

// `count` independent scenes.
std::vector<VideoClip> synth_scenes(const SynthOptions& options, int count, std::uint64_t seed);

}  // namespace vsr
