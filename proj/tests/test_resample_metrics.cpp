#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "vsr/clip_io.hpp"
#include "vsr/metrics.hpp"
#include "vsr/resample.hpp"
#include "vsr/synth.hpp"

using namespace vsr;
namespace fs = std::filesystem;

namespace {

// Dense (outW x inW) matrix built straight from the kernel definition.
std::vector<std::vector<double>> dense_matrix(int in, int out, const BicubicKernel& k) {
    const double scale = static_cast<double>(out) / in;
    const double support = (k.antialias && scale < 1.0) ? 2.0 / scale : 2.0;
    const double stretch = (k.antialias && scale < 1.0) ? scale : 1.0;
    std::vector<std::vector<double>> m(static_cast<std::size_t>(out), std::vector<double>(static_cast<std::size_t>(in), 0.0));
    for (int o = 0; o < out; ++o) {
        const double center = (o + 0.5) / scale - 0.5;
        double total = 0.0;
        for (int j = static_cast<int>(std::floor(center - support)); j <= static_cast<int>(std::ceil(center + support)); ++j) {
            const double wgt = k((center - j) * stretch);
            if (wgt == 0.0) continue;
            m[o][std::clamp(j, 0, in - 1)] += wgt;
            total += wgt;
        }
        for (double& v : m[o]) v /= total;
    }
    return m;
}

Plane apply_dense(const Plane& p, const std::vector<std::vector<double>>& mx, const std::vector<std::vector<double>>& my) {
    const int ow = static_cast<int>(mx.size()), oh = static_cast<int>(my.size());
    std::vector<double> tmp(static_cast<std::size_t>(p.height) * ow, 0.0);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < ow; ++x)
            for (int i = 0; i < p.width; ++i) tmp[y * ow + x] += mx[x][i] * p.at(i, y);
    Plane out(ow, oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < p.height; ++i) s += my[y][i] * tmp[i * ow + x];
            out.at(x, y) = static_cast<float>(std::clamp(s, 0.0, 1.0));
        }
    return out;
}

double ssim_oracle(const Plane& a, const Plane& b) {
    const SsimParams prm;
    const auto g = gaussian_window(prm);
    const int r = prm.window;
    const double c1 = std::pow(prm.k1 * prm.range, 2), c2 = std::pow(prm.k2 * prm.range, 2);
    double total = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + r <= a.height; ++y0)
        for (int x0 = 0; x0 + r <= a.width; ++x0) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < r; ++j) {
                    const double w = g[i] * g[j], u = a.at(x0 + j, y0 + i), v = b.at(x0 + j, y0 + i);
                    ma += w * u;
                    mb += w * v;
                    saa += w * u * u;
                    sbb += w * v * v;
                    sab += w * u * v;
                }
            saa -= ma * ma;
            sbb -= mb * mb;
            sab -= ma * mb;
            total += ((2 * ma * mb + c1) * (2 * sab + c2)) / ((ma * ma + mb * mb + c1) * (saa + sbb + c2));
            ++count;
        }
    return total / count;
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("vsr-test-" + std::to_string(Rng(std::random_device{}()).next()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("bicubic kernel") {
    const BicubicKernel k;
    CHECK(k(0.0) == 1.0);
    CHECK(k(1.0) == doctest::Approx(0.0));
    CHECK(k(2.0) == 0.0);
    CHECK(k(1.5) < 0.0);
    CHECK(k(-0.7) == k(0.7));
}

TEST_CASE("resample taps sum to one") {
    for (int in : {3, 8, 17, 64})
        for (int out : {1, 4, 9, 32, 100}) {
            for (const auto& t : resample_taps(in, out)) {
                double s = 0.0;
                for (double w : t.weight) s += w;
                CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
                for (int i : t.index) CHECK((i >= 0 && i < in));
            }
        }
}

TEST_CASE("resize identity and DC images") {
    const Plane p = test::random_plane(13, 7, 1);
    CHECK(resize_plane(p, 13, 7) == p);
    const Plane c(20, 12, 0.5f);
    for (auto [w, h] : {std::pair{10, 6}, {40, 24}, {7, 5}, {31, 17}}) {
        const Plane r = resize_plane(c, w, h);
        for (float v : r.data) CHECK(v == doctest::Approx(0.5f).epsilon(1e-6));
    }
}

TEST_CASE("ramp down-up matches the dense matrix oracle") {
    Plane ramp(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(x, y) = x / 7.0f;
    const BicubicKernel k;
    const Plane down = resize_plane(ramp, 4, 4);
    const Plane up = resize_plane(down, 8, 8);
    const Plane downRef = apply_dense(ramp, dense_matrix(8, 4, k), dense_matrix(8, 4, k));
    CHECK(test::max_abs_diff(down.data, downRef.data) < 1e-6);
    const Plane upRef = apply_dense(down, dense_matrix(4, 8, k), dense_matrix(4, 8, k));
    CHECK(test::max_abs_diff(up.data, upRef.data) < 1e-6);
    CHECK(test::max_abs_diff(bicubic_down_up(ramp, 2).data, upRef.data) < 1e-6);
}

TEST_CASE("random resize matches the dense matrix oracle") {
    const Plane p = test::random_plane(23, 11, 2);
    for (auto [w, h] : {std::pair{46, 22}, {8, 5}, {69, 33}, {12, 11}}) {
        const BicubicKernel k;
        const Plane ref = apply_dense(p, dense_matrix(23, w, k), dense_matrix(11, h, k));
        CHECK(test::max_abs_diff(resize_plane(p, w, h).data, ref.data) < 1e-5);
    }
}

TEST_CASE("chroma upscaling") {
    Frame f = Frame::from_planes(test::random_plane(10, 6, 3), Plane(5, 3, 0.25f), test::random_plane(5, 3, 4));
    const Frame same = upscale_chroma(f, 1);
    CHECK((*same.chroma)[1] == (*f.chroma)[1]);
    const Frame up = upscale_chroma(f, 2);
    CHECK(up.luma == f.luma);
    for (float v : (*up.chroma)[0].data) CHECK(v == doctest::Approx(0.25f).epsilon(1e-6));
    CHECK((*up.chroma)[1] == resize_plane((*f.chroma)[1], 10, 6));
}

TEST_CASE("psnr") {
    const Plane a = test::random_plane(16, 16, 5);
    CHECK(std::isinf(psnr(a, a)));
    Plane b = a;
    for (float& v : b.data) v = v < 0.5f ? v + 1.0f / 255 : v - 1.0f / 255;
    CHECK(psnr(a, b) == doctest::Approx(48.1308).epsilon(1e-4));
    CHECK(psnr(a, b) == psnr(b, a));
    Plane c = a;
    c.at(0, 0) = 1.0f - c.at(0, 0);
    CHECK(std::isinf(psnr(a, c, 1)));
    CHECK_THROWS(psnr(a, Plane(8, 8)));
}

TEST_CASE("psnr decreases as noise is added") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Plane a = test::random_plane(32, 32, seed);
        Rng rng(seed + 100);
        Plane b = a;
        double prev = INFINITY;
        for (int round = 0; round < 4; ++round) {
            for (float& v : b.data) v += static_cast<float>(rng.uniform(-0.02, 0.02));
            const double p = psnr(a, b);
            CHECK(p < prev);
            prev = p;
        }
    }
}

TEST_CASE("ssim") {
    const Plane a = test::random_plane(24, 20, 6);
    CHECK(ssim(a, a) == 1.0);
    const Plane b = test::random_plane(24, 20, 7);
    CHECK(ssim(a, b) == ssim(b, a));
    CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-9));

    Plane checker(22, 22), negative(22, 22);
    for (int y = 0; y < 22; ++y)
        for (int x = 0; x < 22; ++x) {
            checker.at(x, y) = ((x / 2 + y / 2) % 2) ? 0.8f : 0.2f;
            negative.at(x, y) = 1.0f - checker.at(x, y);
        }
    const double s = ssim(checker, negative);
    CHECK(s < 0.0);
    CHECK(s == doctest::Approx(ssim_oracle(checker, negative)).epsilon(1e-9));
    CHECK(gaussian_window({}).size() == 11);
}

TEST_CASE("down-up quality falls with scale") {
    SynthOptions o;
    o.width = 144;
    o.height = 96;
    o.frames = 3;
    const VideoClip clip = synth_clip(o, 42);
    for (const Frame& f : clip.frames) {
        const double p2 = psnr(f.luma, bicubic_down_up(f.luma, 2), 2);
        const double p3 = psnr(f.luma, bicubic_down_up(f.luma, 3), 3);
        const double p4 = psnr(f.luma, bicubic_down_up(f.luma, 4), 4);
        CHECK(p2 > p3);
        CHECK(p3 > p4);
    }
}

TEST_CASE("y4m header grammar") {
    const Y4MHeader h = parse_y4m_header("YUV4MPEG2 W16 H8 F30:1 C420");
    CHECK(h.geometry == Geometry{16, 8});
    CHECK(h.chroma);
    CHECK(h.frameRate == 30.0);
    CHECK_FALSE(parse_y4m_header("YUV4MPEG2 W16 H8 F25:1 Cmono").chroma);
    CHECK_THROWS_AS(parse_y4m_header("YUV4MPEG2 W16 F30:1"), ClipFormatError);
    CHECK_THROWS_AS(parse_y4m_header("YUV4MPEG2 W16 H8 C444"), ClipFormatError);
    CHECK(parse_geometry("1920x1080") == Geometry{1920, 1080});
    CHECK_THROWS(parse_geometry("19x"));
}

TEST_CASE("clip roundtrips") {
    TempDir dir;
    SynthOptions o;
    o.width = 17;
    o.height = 9;
    o.frames = 3;
    o.chroma = true;
    const VideoClip clip = synth_clip(o, 9);
    for (auto [name, fmt] : {std::pair{"a.yuv", ClipFormat::RawYUV420}, {"a.y4m", ClipFormat::Y4M}}) {
        CAPTURE(name);
        write_clip(clip, dir.path / name, fmt);
        const VideoClip back = read_clip(dir.path / name, fmt, Geometry{17, 9});
        REQUIRE(back.size() == 3);
        for (int t = 0; t < 3; ++t) {
            CHECK(test::max_abs_diff(back.frames[t].luma.data, clip.frames[t].luma.data) <= 1.0 / 510 + 1e-7);
            REQUIRE(back.frames[t].has_chroma());
            CHECK((*back.frames[t].chroma)[0].width == 9);
            CHECK((*back.frames[t].chroma)[0].height == 5);
        }
        write_clip(back, dir.path / "again", fmt);
        CHECK(read_clip(dir.path / "again", fmt, Geometry{17, 9}).frames[2].luma == back.frames[2].luma);
    }
    CHECK_THROWS(read_clip(dir.path / "a.yuv", ClipFormat::RawYUV420));
    CHECK_THROWS(read_clip(dir.path / "a.yuv", ClipFormat::RawYUV420, Geometry{16, 16}));
}

TEST_CASE("pgm directory keeps frame order") {
    TempDir dir;
    for (int i = 0; i < 3; ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "%03d.pgm", i);
        write_pgm(Plane(4, 3, static_cast<float>(i) / 4), dir.path / name);
    }
    const VideoClip clip = read_clip(dir.path, ClipFormat::PGMDir);
    REQUIRE(clip.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(clip.frames[i].luma.at(1, 1) == quantize8(i / 4.0f) / 255.0f);
    CHECK(guess_clip_format("x.y4m") == ClipFormat::Y4M);
    CHECK(guess_clip_format("x.yuv") == ClipFormat::RawYUV420);
    CHECK(guess_clip_format(dir.path) == ClipFormat::PGMDir);
}

TEST_CASE("frames clamp and validate") {
    Plane p(2, 2, 1.5f);
    p.at(0, 0) = -1.0f;
    const Frame f = Frame::from_luma(p);
    CHECK(f.luma.at(0, 0) == 0.0f);
    CHECK(f.luma.at(1, 1) == 1.0f);
    CHECK_THROWS(Frame::from_planes(Plane(4, 4), Plane(1, 1), Plane(2, 2)));
    VideoClip clip;
    CHECK_THROWS(clip.validate());
    clip.frames = {Frame::from_luma(Plane(4, 4)), Frame::from_luma(Plane(4, 5))};
    CHECK_THROWS(clip.validate());
    CHECK(window_indices(0, 10) == std::array<int, 5>{0, 0, 0, 1, 2});
    CHECK(window_indices(9, 10) == std::array<int, 5>{7, 8, 9, 9, 9});
    CHECK(window_indices(0, 1) == std::array<int, 5>{0, 0, 0, 0, 0});
}
