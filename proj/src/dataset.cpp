#include <algorithm>
#include <map>
#include <numeric>

#include "vsr/random.hpp"
#include "vsr/resample.hpp"
#include "vsr/train.hpp"

namespace vsr {

void DatasetRecipe::validate() const {
    if (frameStride < 1) throw std::invalid_argument("frame stride must be >= 1");
    if (subimagesPerFrame < 1) throw std::invalid_argument("subimages per frame must be >= 1");
    if (lrPatchSize < 1) throw std::invalid_argument("LR patch size must be >= 1");
    if (scale < 1) throw std::invalid_argument("scale must be >= 1");
}

Plane downscale_frame(const Plane& hr, int scale) {
    const int lw = hr.width / scale;
    const int lh = hr.height / scale;
    if (lw < 1 || lh < 1) throw std::invalid_argument("frame smaller than the scale factor");
    const Plane cropped = (lw * scale == hr.width && lh * scale == hr.height) ? hr : hr.crop(0, 0, lw * scale, lh * scale);
    return resize_plane(cropped, lw, lh);
}

std::vector<WindowSample> extract_dataset(std::span<const VideoClip> clips, const DatasetRecipe& recipe,
                                          std::uint64_t seed) {
    recipe.validate();
    if (clips.empty()) throw std::invalid_argument("extract_dataset: empty clip list");
    const int s = recipe.scale;
    const int patch = recipe.lrPatchSize * s;
    Rng rng(derive_seed(seed, "dataset"));
    std::vector<WindowSample> samples;

    for (std::size_t v = 0; v < clips.size(); ++v) {
        const VideoClip& clip = clips[v];
        clip.validate();
        if (clip.size() < 5) {
            throw std::invalid_argument("extract_dataset: clip " + std::to_string(v) + " has fewer than 5 frames");
        }
        const int w = clip.width();
        const int h = clip.height();
        if (patch > w || patch > h) {
            throw std::invalid_argument("extract_dataset: HR patch " + std::to_string(patch) + " larger than frame " +
                                        std::to_string(w) + "x" + std::to_string(h));
        }
        const int cols = w / patch;
        const int rows = h / patch;
        if (cols * rows < recipe.subimagesPerFrame) {
            throw std::invalid_argument("extract_dataset: only " + std::to_string(cols * rows) +
                                        " non-overlapping patches fit in a frame, recipe asks for " +
                                        std::to_string(recipe.subimagesPerFrame));
        }
        std::map<int, Plane> lrCache;
        const auto lr_frame = [&](int idx) -> const Plane& {
            auto it = lrCache.find(idx);
            if (it == lrCache.end()) it = lrCache.emplace(idx, downscale_frame(clip.frames[idx].luma, s)).first;
            return it->second;
        };
        const int n = static_cast<int>(clip.size());
        for (int center = 0; center < n; center += recipe.frameStride) {
            // Grid of patch-sized cells with a random global offset on the LR
            // grid; distinct cells never overlap.
            const int slackX = (w - cols * patch) / s;
            const int slackY = (h - rows * patch) / s;
            const int ox = rng.below(slackX + 1) * s;
            const int oy = rng.below(slackY + 1) * s;
            std::vector<int> cells(static_cast<std::size_t>(cols) * rows);
            std::iota(cells.begin(), cells.end(), 0);
            rng.shuffle(cells);
            cells.resize(recipe.subimagesPerFrame);
            std::sort(cells.begin(), cells.end());
            const auto idx = window_indices(center, n);
            for (int cell : cells) {
                WindowSample smp;
                smp.source = SourceId{static_cast<int>(v), center, ox + (cell % cols) * patch, oy + (cell / cols) * patch};
                for (int k = 0; k < 5; ++k) {
                    smp.lr[k] = lr_frame(idx[k]).crop(smp.source.x / s, smp.source.y / s, recipe.lrPatchSize,
                                                      recipe.lrPatchSize);
                }
                smp.hr = clip.frames[center].luma.crop(smp.source.x, smp.source.y, patch, patch);
                samples.push_back(std::move(smp));
            }
        }
    }
    return samples;
}

std::vector<WindowSample> frame_windows(const VideoClip& clip, int scale, int stride, int video) {
    clip.validate();
    if (stride < 1) throw std::invalid_argument("frame_windows: stride must be >= 1");
    const int n = static_cast<int>(clip.size());
    std::vector<Plane> lr;
    lr.reserve(clip.size());
    for (const Frame& f : clip.frames) lr.push_back(downscale_frame(f.luma, scale));
    std::vector<WindowSample> out;
    for (int center = 0; center < n; center += stride) {
        WindowSample smp;
        const auto idx = window_indices(center, n);
        for (int k = 0; k < 5; ++k) smp.lr[k] = lr[idx[k]];
        smp.hr = clip.frames[center].luma.crop(0, 0, lr[center].width * scale, lr[center].height * scale);
        smp.source = SourceId{video, center, 0, 0};
        out.push_back(std::move(smp));
    }
    return out;
}

}  // namespace vsr
