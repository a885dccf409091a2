#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vsr/random.hpp"
#include "vsr/scene.hpp"
#include "vsr/synth.hpp"
#include "vsr/train.hpp"

using namespace vsr;

namespace {

// Scene i is a flat clip of brightness (i + 1) / 10, so a frame tells its scene.
std::vector<VideoClip> flat_scenes(int count, int w = 64, int h = 36, int frames = 8) {
    std::vector<VideoClip> out;
    for (int i = 0; i < count; ++i) {
        VideoClip c;
        for (int t = 0; t < frames; ++t) c.frames.push_back(Frame::from_luma(Plane(w, h, (i + 1) / 10.0f)));
        out.push_back(c);
    }
    return out;
}

int scene_of(const Plane& p) { return static_cast<int>(std::lround(p.data[0] * 10.0f)) - 1; }

}  // namespace

TEST_CASE("labels") {
    CHECK(std::string(to_string(SceneLabel::ChangeAfter2)) == "change-after-2");
    CHECK(std::string(to_string(SceneLabel::NoChange)) == "no-change");
    CHECK(scene_label_from_index(4) == SceneLabel::NoChange);
    CHECK_THROWS(scene_label_from_index(5));
}

TEST_CASE("sf net geometry") {
    for (int layers : {2, 3}) {
        const ModelSpec spec = build_sf_net(layers);
        CHECK_NOTHROW(spec.validate());
        const Tensor logits = run_network(spec, xavier_init(spec, 1), Tensor(Shape{3, 1, 5, kSfHeight, kSfWidth}));
        CHECK(logits.shape() == Shape{3, kSceneClasses, 1, 1, 1});
    }
    CHECK_THROWS(build_sf_net(4));
}

TEST_CASE("softmax, argmax and cross-entropy") {
    const std::vector<float> logits{1.0f, 2.0f, 0.5f, 2.0f, -1.0f};
    const auto p = softmax(logits);
    double s = 0.0;
    for (double v : p) s += v;
    CHECK(s == doctest::Approx(1.0));
    CHECK(argmax(p) == 1);
    const std::vector<float> huge{1000.0f, 0.0f, 0.0f, 0.0f, 0.0f};
    CHECK(softmax(huge)[0] == doctest::Approx(1.0));

    const Tensor z = test::random_tensor<float>(Shape{3, 5, 1, 1, 1}, 4, -2, 2);
    const std::vector<int> labels{0, 3, 4};
    const CrossEntropy ce = cross_entropy(z, labels);
    for (std::size_t i = 0; i < z.size(); ++i) {
        Tensor a = z, b = z;
        a[i] += 1e-2f;
        b[i] -= 1e-2f;
        const double num = (cross_entropy(a, labels).loss - cross_entropy(b, labels).loss) / 2e-2;
        CHECK(ce.grad[i] == doctest::Approx(num).epsilon(1e-3));
    }
    const Tensor sure(Shape{1, 5, 1, 1, 1}, std::vector<float>{30.0f, 0, 0, 0, 0});
    CHECK(cross_entropy(sure, std::vector<int>{0}).loss < 1e-9);
}

TEST_CASE("frame replacement") {
    const std::array<int, 5> f{1, 2, 3, 4, 5};
    CHECK(replace_frames(f, SceneLabel::ChangeAfter1) == std::array<int, 5>{2, 2, 3, 4, 5});
    CHECK(replace_frames(f, SceneLabel::ChangeAfter2) == std::array<int, 5>{3, 3, 3, 4, 5});
    CHECK(replace_frames(f, SceneLabel::ChangeAfter3) == std::array<int, 5>{1, 2, 3, 3, 3});
    CHECK(replace_frames(f, SceneLabel::ChangeAfter4) == std::array<int, 5>{1, 2, 3, 4, 4});
    CHECK(replace_frames(f, SceneLabel::NoChange) == f);
    for (int c = 0; c < kSceneClasses; ++c) {
        const SceneLabel l = scene_label_from_index(c);
        const auto once = replace_frames(f, l);
        CHECK(replace_frames(once, l) == once);
        CHECK(once[2] == 3);
    }
}

TEST_CASE("replacement keeps only the middle frame's scene") {
    const auto scenes = flat_scenes(6);
    const auto data = make_sf_dataset(scenes, 4, 7);
    for (const SfSample& s : data) {
        const auto fixed = replace_frames(s.frames, s.label);
        const int middle = scene_of(s.frames[2]);
        for (const Plane& p : fixed) CHECK(scene_of(p) == middle);
        const auto same = same_scene_as_middle(s.label);
        const auto zeroed = zero_cross_scene(s.frames, s.label);
        for (int k = 0; k < 5; ++k) {
            CHECK(same[k] == (scene_of(s.frames[k]) == middle));
            if (same[k]) {
                CHECK(zeroed[k] == s.frames[k]);
            } else {
                CHECK(zeroed[k] == Plane(kSfWidth, kSfHeight, 0.0f));
            }
        }
    }
}

TEST_CASE("sf dataset") {
    const auto scenes = flat_scenes(5);
    const auto data = make_sf_dataset(scenes, 20, 3);
    REQUIRE(data.size() == 100);
    int counts[kSceneClasses] = {};
    for (const SfSample& s : data) {
        ++counts[static_cast<int>(s.label)];
        for (const Plane& p : s.frames) CHECK((p.width == kSfWidth && p.height == kSfHeight));
        if (s.label == SceneLabel::NoChange) {
            CHECK(s.sceneA == s.sceneB);
            for (const Plane& p : s.frames) CHECK(scene_of(p) == s.sceneA);
        } else {
            CHECK(s.sceneA != s.sceneB);
            const int k = static_cast<int>(s.label) + 1;
            for (int i = 0; i < 5; ++i) CHECK(scene_of(s.frames[i]) == (i < k ? s.sceneA : s.sceneB));
        }
    }
    for (int c : counts) CHECK(c == 20);
    const auto again = make_sf_dataset(scenes, 20, 3);
    bool same = true;
    for (std::size_t i = 0; i < data.size(); ++i)
        same = same && data[i].frames == again[i].frames && data[i].label == again[i].label;
    CHECK(same);
    CHECK(make_sf_dataset(scenes, 2000, 3).size() == 10000);
}

TEST_CASE("sf input geometry") {
    std::array<Plane, 5> tiny;
    tiny.fill(Plane(40, 30));
    CHECK_THROWS(sf_frames(tiny));
    std::array<Plane, 5> ok;
    ok.fill(Plane(1920 / 20, 1080 / 20, 0.5f));
    const auto f = sf_frames(ok);
    CHECK((f[0].width == 48 && f[0].height == 27));
}

TEST_CASE("a trained classifier finds cuts") {
    SynthOptions o;
    o.width = 96;
    o.height = 54;
    o.frames = 12;
    const auto train = synth_scenes(o, 24, 1);
    const auto test = synth_scenes(o, 8, 2);
    const ModelSpec spec = build_sf_net(3);
    SfHyper h;
    h.epochs = 12;
    const SfTrainResult res = train_sf(spec, make_sf_dataset(train, 200, 3), h);
    const SfEvaluation eval = evaluate_sf(res.params, spec, make_sf_dataset(test, 40, 4));
    CHECK(eval.count == 200);
    CHECK(eval.accuracy >= 0.9);
    long diagonal = 0;
    for (int c = 0; c < kSceneClasses; ++c) diagonal += eval.confusion[c][c];
    CHECK(diagonal == std::lround(eval.accuracy * eval.count));

    const VideoClip still = synth_clip(o, 99);
    std::array<Plane, 5> same;
    same.fill(still.frames[0].luma);
    const SceneDecision d = classify_window(res.params, spec, same);
    CHECK(d.label == SceneLabel::NoChange);
    CHECK(d.confidence > 0.5);

    const VideoClip cut = synth_cut_clip(o, 6, 50, 51);
    std::vector<SceneLabel> labels;
    for (int t = 4; t <= 7; ++t) {
        const auto idx = window_indices(t, 12);
        std::array<Plane, 5> win;
        for (int k = 0; k < 5; ++k) win[k] = cut.frames[idx[k]].luma;
        labels.push_back(classify_window(res.params, spec, win).label);
    }
    CHECK(labels == std::vector<SceneLabel>{SceneLabel::ChangeAfter4, SceneLabel::ChangeAfter3,
                                            SceneLabel::ChangeAfter2, SceneLabel::ChangeAfter1});
}
