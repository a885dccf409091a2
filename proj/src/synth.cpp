#include "vsr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vsr/random.hpp"

namespace vsr {

namespace {

struct Grating {
    double amp, fx, fy, phase;
};

struct Shape {
    bool disk;
    double cx, cy, rx, ry, vx, vy, level;
};

struct Scene {
    double base;
    double panX, panY;
    std::vector<Grating> gratings;
    std::vector<Shape> shapes;
    double chromaU, chromaV, chromaSlope;

    Scene(const SynthOptions& o, std::uint64_t seed) {
        Rng rng(seed);
        base = rng.uniform(0.25, 0.75);
        const double angle = rng.uniform(0.0, 2 * std::numbers::pi);
        const double speed = rng.uniform(0.3, 1.0) * o.maxPan;
        panX = speed * std::cos(angle);
        panY = speed * std::sin(angle);
        const int ng = 3 + rng.below(4);
        for (int i = 0; i < ng; ++i) {
            const double f = rng.uniform(0.01, 0.12);
            const double th = rng.uniform(0.0, std::numbers::pi);
            gratings.push_back({rng.uniform(0.01, 0.05), f * std::cos(th), f * std::sin(th),
                                rng.uniform(0.0, 2 * std::numbers::pi)});
        }
        const int ns = 24 + rng.below(16);
        const double span = std::max(o.width, o.height);
        for (int i = 0; i < ns; ++i) {
            Shape s;
            s.disk = rng.below(2) == 0;
            s.cx = rng.uniform(-0.2, 1.2) * o.width;
            s.cy = rng.uniform(-0.2, 1.2) * o.height;
            s.rx = rng.uniform(0.02, 0.15) * span;
            s.ry = s.disk ? s.rx : rng.uniform(0.02, 0.15) * span;
            s.vx = rng.uniform(-1.0, 1.0);
            s.vy = rng.uniform(-1.0, 1.0);
            s.level = rng.uniform(-0.5, 0.5);
            shapes.push_back(s);
        }
        chromaU = rng.uniform(0.35, 0.65);
        chromaV = rng.uniform(0.35, 0.65);
        chromaSlope = rng.uniform(-0.2, 0.2);
    }

    static double soft_step(double signedDist, double width) { return 1.0 / (1.0 + std::exp(-signedDist / width)); }

    double luma(double x, double y, double t, double edge) const {
        const double px = x + panX * t;
        const double py = y + panY * t;
        double v = base;
        for (const Grating& g : gratings) v += g.amp * std::sin(2 * std::numbers::pi * (g.fx * px + g.fy * py) + g.phase);
        for (const Shape& s : shapes) {
            const double dx = px - (s.cx + s.vx * t);
            const double dy = py - (s.cy + s.vy * t);
            double inside;
            if (s.disk) {
                inside = s.rx - std::hypot(dx, dy);
            } else {
                inside = std::min(s.rx - std::abs(dx), s.ry - std::abs(dy));
            }
            v += s.level * soft_step(inside, edge);
        }
        return std::clamp(v, 0.0, 1.0);
    }
};

Frame render(const Scene& scene, const SynthOptions& o, double t) {
    Plane y(o.width, o.height);
    for (int r = 0; r < o.height; ++r)
        for (int c = 0; c < o.width; ++c) y.at(c, r) = static_cast<float>(scene.luma(c + 0.5, r + 0.5, t, o.edgeWidth));
    if (!o.chroma) return Frame::from_luma(std::move(y));
    const int cw = chroma_extent(o.width);
    const int ch = chroma_extent(o.height);
    Plane u(cw, ch), v(cw, ch);
    for (int r = 0; r < ch; ++r)
        for (int c = 0; c < cw; ++c) {
            const double g = scene.chromaSlope * (static_cast<double>(c) / cw - 0.5);
            u.at(c, r) = static_cast<float>(std::clamp(scene.chromaU + g, 0.0, 1.0));
            v.at(c, r) = static_cast<float>(std::clamp(scene.chromaV - g, 0.0, 1.0));
        }
    return Frame::from_planes(std::move(y), std::move(u), std::move(v));
}

void check(const SynthOptions& o) {
    if (o.width < 1 || o.height < 1 || o.frames < 1) throw std::invalid_argument("synth: extents must be >= 1");
    if (o.edgeWidth <= 0) throw std::invalid_argument("synth: edge width must be positive");
}

}  // namespace

VideoClip synth_clip(const SynthOptions& options, std::uint64_t seed) {
    check(options);
    const Scene scene(options, seed);
    VideoClip clip;
    for (int t = 0; t < options.frames; ++t) clip.frames.push_back(render(scene, options, t));
    return clip;
}

VideoClip synth_cut_clip(const SynthOptions& options, int cutAt, std::uint64_t seedA, std::uint64_t seedB) {
    check(options);
    if (cutAt < 0 || cutAt > options.frames) throw std::invalid_argument("synth: cut position out of range");
    const Scene a(options, seedA);
    const Scene b(options, seedB);
    VideoClip clip;
    for (int t = 0; t < options.frames; ++t) clip.frames.push_back(t < cutAt ? render(a, options, t) : render(b, options, t));
    return clip;
}

std::vector<VideoClip> synth_scenes(const SynthOptions& options, int count, std::uint64_t seed) {
    std::vector<VideoClip> out;
    for (int i = 0; i < count; ++i) out.push_back(synth_clip(options, derive_seed(seed, "scene" + std::to_string(i))));
    return out;
}

}  // namespace vsr
