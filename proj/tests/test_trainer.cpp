#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "vsr/checkpoint.hpp"
#include "vsr/synth.hpp"
#include "vsr/train.hpp"

using namespace vsr;
namespace fs = std::filesystem;

namespace {

VideoClip small_clip(int w, int h, int frames, std::uint64_t seed) {
    SynthOptions o;
    o.width = w;
    o.height = h;
    o.frames = frames;
    return synth_clip(o, seed);
}

ModelSpec scalar_spec() {
    ModelSpec s;
    s.name = "scalar";
    s.layers = {LayerSpec{LayerKind::Conv2D, 1, 1, 1, 1, 1, TemporalPad::None, Activation::None, 0}};
    s.concatAfter = 0;
    s.inputFrames = 1;
    s.scale = 1;
    return s;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("dataset size follows the recipe") {
    const VideoClip clip = small_clip(80, 32, 100, 1);
    DatasetRecipe r;
    r.lrPatchSize = 8;
    const auto data = extract_dataset(std::span(&clip, 1), r, 3);
    CHECK(data.size() == 200);
    std::set<int> centers;
    for (const auto& s : data) {
        centers.insert(s.source.frame);
        CHECK(s.hr.width == 16);
        CHECK(s.lr[2].width == 8);
        CHECK(s.source.video == 0);
    }
    CHECK(centers.size() == 20);
    CHECK(*centers.begin() == 0);
    CHECK(*centers.rbegin() == 95);
}

TEST_CASE("patches do not overlap within a frame") {
    const VideoClip clip = small_clip(80, 32, 6, 2);
    DatasetRecipe r;
    r.lrPatchSize = 8;
    r.frameStride = 3;
    const auto data = extract_dataset(std::span(&clip, 1), r, 4);
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = i + 1; j < data.size(); ++j) {
            const SourceId &a = data[i].source, &b = data[j].source;
            if (a.frame != b.frame) continue;
            const bool apart = a.x + 16 <= b.x || b.x + 16 <= a.x || a.y + 16 <= b.y || b.y + 16 <= a.y;
            CHECK(apart);
        }
}

TEST_CASE("default patch geometry and determinism") {
    const VideoClip clip = small_clip(320, 160, 5, 3);
    DatasetRecipe r;
    r.subimagesPerFrame = 2;
    const auto a = extract_dataset(std::span(&clip, 1), r, 9);
    REQUIRE(a.size() == 2);
    CHECK((a[0].hr.width == 160 && a[0].hr.height == 160));
    CHECK((a[0].lr[0].width == 80 && a[0].lr[0].height == 80));
    CHECK(a == extract_dataset(std::span(&clip, 1), r, 9));
    r.subimagesPerFrame = 3;
    CHECK_THROWS(extract_dataset(std::span(&clip, 1), r, 9));
}

TEST_CASE("windows are cut from the downscaled frames") {
    const VideoClip clip = small_clip(40, 24, 5, 4);
    DatasetRecipe r;
    r.lrPatchSize = 4;
    r.subimagesPerFrame = 3;
    r.frameStride = 5;
    for (const auto& s : extract_dataset(std::span(&clip, 1), r, 1)) {
        const auto idx = window_indices(s.source.frame, 5);
        for (int k = 0; k < 5; ++k) {
            const Plane low = downscale_frame(clip.frames[idx[k]].luma, 2);
            CHECK(s.lr[k] == low.crop(s.source.x / 2, s.source.y / 2, 4, 4));
        }
        CHECK(s.hr == clip.frames[s.source.frame].luma.crop(s.source.x, s.source.y, 8, 8));
    }
}

TEST_CASE("mse loss") {
    const Tensor a = test::random_tensor<float>(Shape{2, 1, 1, 3, 4}, 1);
    const auto same = loss_mse(a, a);
    CHECK(same.loss == 0.0);
    for (float g : same.grad.values()) CHECK(g == 0.0f);
    Tensor b = a;
    for (float& v : b.values()) v -= 1.0f;
    const auto unit = loss_mse(a, b);
    CHECK(unit.loss == doctest::Approx(0.5));
    for (float g : unit.grad.values()) CHECK(g == doctest::Approx(1.0 / 24));
    const auto summed = loss_mse(a, b, LossNorm::SampleSum);
    CHECK(summed.loss == doctest::Approx(0.5 * 12));
    for (float g : summed.grad.values()) CHECK(g == doctest::Approx(0.5));
}

TEST_CASE("mse gradient matches finite differences") {
    const TensorD p = test::random_tensor<double>(Shape{3, 1, 1, 4, 5}, 2);
    const TensorD t = test::random_tensor<double>(Shape{3, 1, 1, 4, 5}, 3);
    for (LossNorm norm : {LossNorm::PixelMean, LossNorm::SampleSum}) {
        const auto l = loss_mse(p, t, norm);
        for (std::size_t i = 0; i < p.size(); ++i) {
            TensorD a = p, b = p;
            a[i] += 1e-6;
            b[i] -= 1e-6;
            const double num = (loss_mse(a, t, norm).loss - loss_mse(b, t, norm).loss) / 2e-6;
            CHECK(gradient_error(l.grad[i], num, Precision::Float64) < 1e-6);
            // the gradient is the scaled difference between prediction and target
            CHECK(l.grad[i] == doctest::Approx((p[i] - t[i]) * (norm == LossNorm::PixelMean ? 1.0 / 60 : 1.0 / 3)));
        }
    }
}

TEST_CASE("xavier initialisation") {
    const ModelSpec spec = build_architecture("full", 2);
    const ModelParams a = xavier_init(spec, 5);
    CHECK(a == xavier_init(spec, 5));
    CHECK_FALSE(a == xavier_init(spec, 6));
    const double bound = std::sqrt(6.0 / (27 + 864));
    double peak = 0.0;
    for (float v : a.layers[0].kernel.values()) peak = std::max(peak, double(std::abs(v)));
    CHECK(peak <= bound);
    CHECK(peak > 0.9 * bound);
    for (const auto& l : a.layers)
        for (float b : l.bias) CHECK(b == 0.0f);
}

TEST_CASE("adam on a scalar") {
    const ModelSpec spec = scalar_spec();
    ModelParams p = zero_params<float>(spec);
    p.layers[0].kernel[0] = 1.0f;
    ModelParams g = zero_params<float>(spec);
    g.layers[0].kernel[0] = 1.0f;
    AdamConfig cfg;
    cfg.lr = 0.1;
    cfg.weightDecay = 0.0;
    OptimState st = OptimState::create(spec, cfg);
    adam_step(p, g, st);
    CHECK(st.step == 1);
    CHECK(p.layers[0].kernel[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-7));
    CHECK(p.layers[0].bias[0] == 0.0f);
}

TEST_CASE("adam with zero gradients and no decay is the identity") {
    const ModelSpec spec = build_architecture("v1", 2);
    ModelParams p = xavier_init(spec, 1);
    const ModelParams before = p;
    AdamConfig cfg;
    cfg.weightDecay = 0.0;
    OptimState st = OptimState::create(spec, cfg);
    for (int i = 0; i < 3; ++i) adam_step(p, zero_params<float>(spec), st);
    CHECK(p == before);
    CHECK(st.step == 3);
}

TEST_CASE("non-finite gradients name the layer") {
    const ModelSpec spec = build_architecture("full", 2);
    ModelParams p = xavier_init(spec, 1);
    ModelParams g = zero_params<float>(spec);
    g.layers[3].kernel[7] = NAN;
    OptimState st = OptimState::create(spec, {});
    try {
        adam_step(p, g, st);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("layer 4") != std::string::npos);
    }
}

TEST_CASE("training") {
    const VideoClip clip = small_clip(48, 32, 10, 5);
    DatasetRecipe r;
    r.lrPatchSize = 6;
    r.subimagesPerFrame = 4;
    r.frameStride = 3;
    const auto data = extract_dataset(std::span(&clip, 1), r, 1);
    const auto val = frame_windows(clip, 2, 4);
    const ModelSpec spec = miniature(build_architecture("full", 2), 4);
    TrainHyper h;
    h.batch = 4;
    h.epochs = 2;
    h.seed = 11;
    h.valEvery = 3;

    SUBCASE("zero epochs keep the initialisation") {
        h.epochs = 0;
        const fs::path ck = fs::temp_directory_path() / "vsr-train-zero.3dsr";
        const TrainResult res = train(spec, data, val, h, TrainOutputs{ck, {}, {}});
        CHECK(res.steps == 0);
        CHECK(load_checkpoint(ck).params == xavier_init(spec, 11));
        fs::remove(ck);
    }
    SUBCASE("same seed, same run") {
        const fs::path dir = fs::temp_directory_path();
        const TrainResult a = train(spec, data, val, h, TrainOutputs{dir / "vsr-a.3dsr", dir / "vsr-a.csv", {}});
        const TrainResult b = train(spec, data, val, h, TrainOutputs{dir / "vsr-b.3dsr", dir / "vsr-b.csv", {}});
        CHECK(a.steps == 8);
        CHECK(a.log == b.log);
        CHECK(a.params == b.params);
        CHECK(slurp(dir / "vsr-a.3dsr") == slurp(dir / "vsr-b.3dsr"));
        CHECK(slurp(dir / "vsr-a.csv") == slurp(dir / "vsr-b.csv"));
        CHECK(slurp(dir / "vsr-a.csv").rfind("step,loss,val_psnr_db\n", 0) == 0);
        CHECK(a.log[2].valPsnr.has_value());
        CHECK_FALSE(a.log[3].valPsnr.has_value());
        h.seed = 12;
        CHECK_FALSE(train(spec, data, val, h).params == a.params);
        for (auto n : {"vsr-a.3dsr", "vsr-a.csv", "vsr-b.3dsr", "vsr-b.csv"}) fs::remove(dir / n);
    }
    SUBCASE("max steps") {
        h.maxSteps = 5;
        CHECK(train(spec, data, val, h).steps == 5);
    }
}

TEST_CASE("a small model fits a constant target") {
    // target 0.5 from constant windows: the residual is an affine function of the input
    std::vector<WindowSample> data;
    for (int i = 0; i < 8; ++i) {
        WindowSample s;
        const float v = 0.2f + 0.08f * i;
        s.lr.fill(Plane(4, 4, v));
        s.hr = Plane(8, 8, 0.5f);
        data.push_back(s);
    }
    const ModelSpec spec = miniature(build_architecture("full", 2), 4);
    TrainHyper h;
    h.lr = 1e-2;
    h.batch = 8;
    h.epochs = 3000;
    h.weightDecay = 0.0;
    h.biasLrFactor = 1.0;
    const TrainResult res = train(spec, data, {}, h);
    CHECK(res.log.back().loss < 1e-6);
}

TEST_CASE("gradient verification") {
    GradCheckOptions o;
    const auto full = grad_check(miniature(build_architecture("full", 2)), 1, o);
    CHECK(full.passed);
    CHECK(full.maxError < 1e-6);
    o.linear = true;
    CHECK(grad_check(miniature(build_architecture("full", 2)), 1, o).maxError < 1e-7);
    o.linear = false;
    o.corruptBiasLayer = 2;
    const auto bad = grad_check(miniature(build_architecture("v2", 2)), 1, o);
    CHECK_FALSE(bad.passed);
    int failing = 0;
    for (const auto& l : bad.layers) failing += !l.passed;
    CHECK(failing == 1);
    CHECK_FALSE(bad.layers[2].passed);
    CHECK(gradient_error(1e-9, 0.0, Precision::Float64) == doctest::Approx(1e-6));
    CHECK(gradient_error(2.0, 1.0, Precision::Float32) == doctest::Approx(0.5));
}
