#include "vsr/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vsr/checkpoint.hpp"
#include "vsr/clip_io.hpp"
#include "vsr/metrics.hpp"
#include "vsr/random.hpp"
#include "vsr/resample.hpp"
#include "vsr/scene.hpp"
#include "vsr/synth.hpp"
#include "vsr/train.hpp"
#include "vsr/verify.hpp"

namespace vsr::app {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // shared
    std::uint64_t seed = 0;
    std::string format = "auto";
    std::string size;
    std::string outFormat = "auto";
    int threads = 0;

    // model / data
    std::string arch = "full";
    int scale = 2;
    std::vector<std::string> train;
    std::vector<std::string> val;
    int synthetic = 0;
    std::string syntheticSize = "96x64";
    int syntheticFrames = 20;
    int frameStride = 5;
    int subimages = 10;
    int patch = 0;
    int valStride = 10;

    // optimisation
    double lr = 5e-4;
    int batch = 32;
    int epochs = 1;
    long maxSteps = 0;
    int valEvery = 0;
    int checkpointEvery = 0;
    int printEvery = 100;
    std::string norm = "mean";
    double weightDecay = 5e-4;
    double biasLrFactor = 0.1;
    std::string out;
    std::string log;

    // upscale / evaluate / scene
    std::string input;
    std::string output;
    std::string checkpoint;
    std::string sfCheckpoint;
    std::string method;
    std::string dumpFeatures;
    int dumpLayer = 1;
    int dumpFrame = 0;
    std::vector<std::string> reference;
    std::vector<std::string> candidate;
    int border = -1;
    std::string csv;

    // scene training
    std::vector<std::string> scenes;
    std::vector<std::string> testScenes;
    int perClass = 200;
    int testPerClass = 100;
    int layers = 3;

    // verify / param-count
    int precision = 32;
    std::string injectFault = "none";
    int oracleConfigs = 50;
    bool includeBias = false;

    // synth
    int cutAt = -1;
};

std::string group_digits(long v) {
    std::string s = std::to_string(v < 0 ? -v : v);
    for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
    return v < 0 ? "-" + s : s;
}

std::string fixed(double v, int digits) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

// --- clip loading --------------------------------------------------------

ClipFormat resolve_format(const std::string& name, const fs::path& path) {
    return name == "auto" ? guess_clip_format(path) : clip_format_from_string(name);
}

VideoClip load_clip(const std::string& path, const RunConfig& cfg) {
    if (!fs::exists(path)) throw UsageError("no such clip: " + path);
    std::optional<Geometry> geometry;
    if (!cfg.size.empty()) geometry = parse_geometry(cfg.size);
    return read_clip(path, resolve_format(cfg.format, path), geometry);
}

void save_clip(const VideoClip& clip, const std::string& path, const RunConfig& cfg) {
    write_clip(clip, path, resolve_format(cfg.outFormat, path));
}

std::vector<VideoClip> load_clips(const std::vector<std::string>& paths, const RunConfig& cfg) {
    std::vector<VideoClip> clips;
    for (const std::string& p : paths) clips.push_back(load_clip(p, cfg));
    return clips;
}

SynthOptions synth_options(const RunConfig& cfg) {
    const Geometry g = parse_geometry(cfg.syntheticSize);
    SynthOptions o;
    o.width = g.width;
    o.height = g.height;
    o.frames = cfg.syntheticFrames;
    return o;
}

std::string sequence_name(const std::string& path) {
    fs::path p(path);
    if (p.filename().empty()) p = p.parent_path();
    return p.stem().string();
}

// --- train ---------------------------------------------------------------

int default_patch(int scale) { return scale == 2 ? 80 : scale == 3 ? 60 : 40; }

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    if (cfg.train.empty() && cfg.synthetic <= 0) {
        throw UsageError("no training data: pass --train <clip> (repeatable) or --synthetic <count>");
    }
    const ModelSpec spec = build_architecture(cfg.arch, cfg.scale);
    out << "architecture " << spec.name << " (scale " << spec.scale << "): " << group_digits(count_parameters(spec))
        << " weights, " << group_digits(count_parameters(spec, true)) << " with biases\n";

    std::vector<VideoClip> clips;
    std::vector<VideoClip> valClips;
    std::string valNote;
    if (!cfg.train.empty()) {
        clips = load_clips(cfg.train, cfg);
    } else {
        clips = synth_scenes(synth_options(cfg), cfg.synthetic, derive_seed(cfg.seed, "synthetic-train"));
    }
    if (!cfg.val.empty()) {
        valClips = load_clips(cfg.val, cfg);
    } else if (cfg.train.empty()) {
        valClips = synth_scenes(synth_options(cfg), std::max(1, cfg.synthetic / 4), derive_seed(cfg.seed, "synthetic-val"));
        valNote = " (held-out synthetic clips)";
    } else {
        valClips = clips;
        valNote = " (training clips; pass --val for held-out frames)";
    }

    DatasetRecipe recipe;
    recipe.frameStride = cfg.frameStride;
    recipe.subimagesPerFrame = cfg.subimages;
    recipe.lrPatchSize = cfg.patch > 0 ? cfg.patch : default_patch(cfg.scale);
    recipe.scale = cfg.scale;
    const std::vector<WindowSample> data = extract_dataset(clips, recipe, cfg.seed);
    std::vector<WindowSample> validation;
    for (std::size_t v = 0; v < valClips.size(); ++v) {
        for (WindowSample& w : frame_windows(valClips[v], cfg.scale, cfg.valStride, static_cast<int>(v))) {
            validation.push_back(std::move(w));
        }
    }
    out << "dataset: " << data.size() << " samples of " << recipe.lrPatchSize << "x" << recipe.lrPatchSize
        << " LR patches from " << clips.size() << " clip(s); " << validation.size() << " validation frames" << valNote
        << "\n";
    const double bicubic = bicubic_psnr(validation, cfg.scale);
    out << "validation bicubic PSNR " << fixed(bicubic, 3) << " dB\n" << std::flush;

    TrainHyper hyper;
    hyper.lr = cfg.lr;
    hyper.batch = cfg.batch;
    hyper.epochs = cfg.epochs;
    hyper.maxSteps = cfg.maxSteps;
    hyper.seed = cfg.seed;
    hyper.valEvery = cfg.valEvery;
    hyper.checkpointEvery = cfg.checkpointEvery;
    if (cfg.norm == "mean") {
        hyper.norm = LossNorm::PixelMean;
    } else if (cfg.norm == "sum") {
        hyper.norm = LossNorm::SampleSum;
    } else {
        throw UsageError("norm must be 'mean' or 'sum'");
    }
    hyper.weightDecay = cfg.weightDecay;
    hyper.biasLrFactor = cfg.biasLrFactor;

    TrainOutputs outputs;
    outputs.checkpoint = cfg.out.empty() ? fs::path("model.3dsr") : fs::path(cfg.out);
    outputs.log = cfg.log.empty() ? fs::path("train_log.csv") : fs::path(cfg.log);
    outputs.onStep = [&](const TrainLogRow& row) {
        if (cfg.printEvery > 0 && row.step % cfg.printEvery == 0) {
            out << "step " << row.step << "  loss " << std::setprecision(6) << row.loss;
            if (row.valPsnr) out << "  val " << fixed(*row.valPsnr, 3) << " dB";
            out << '\n' << std::flush;
        }
    };
    const TrainResult result = train(spec, data, validation, hyper, outputs);
    out << "trained " << result.steps << " steps; checkpoint " << outputs.checkpoint.string() << ", log "
        << outputs.log.string() << "\n";
    if (result.valPsnr) {
        out << "validation PSNR " << fixed(*result.valPsnr, 3) << " dB, bicubic " << fixed(bicubic, 3) << " dB, gain "
            << fixed(*result.valPsnr - bicubic, 3) << " dB\n";
    }
    return Success;
}

// --- upscale -------------------------------------------------------------

struct Upscaler {
    std::optional<Checkpoint> model;
    std::optional<Checkpoint> sf;
    int scale = 2;
};

Frame upscale_frame(const Upscaler& u, const VideoClip& clip, int t, std::optional<SceneDecision>* decision) {
    const int n = static_cast<int>(clip.size());
    const Frame& src = clip.frames[t];
    Plane luma;
    if (!u.model) {
        luma = resize_plane(src.luma, src.width() * u.scale, src.height() * u.scale);
    } else {
        const auto idx = window_indices(t, n);
        std::array<Plane, 5> window;
        for (int k = 0; k < 5; ++k) window[k] = clip.frames[idx[k]].luma;
        if (u.sf) {
            const SceneDecision d = classify_window(u.sf->params, u.sf->spec, window);
            window = replace_frames(window, d.label);
            if (decision) *decision = d;
        }
        const ModelSpec& spec = u.model->spec;
        luma = u.scale == spec.scale ? forward(u.model->params, spec, window)
                                     : forward_multiscale(u.model->params, spec, window, u.scale);
    }
    if (!src.has_chroma()) return Frame::from_luma(std::move(luma));
    const Frame up = upscale_chroma(src, u.scale);
    return Frame::from_planes(std::move(luma), (*up.chroma)[0], (*up.chroma)[1]);
}

int cmd_upscale(const RunConfig& cfg, std::ostream& out) {
    if (cfg.input.empty() || cfg.output.empty()) throw UsageError("upscale needs --input and --output");
    const std::string method = cfg.method.empty() ? (cfg.checkpoint.empty() ? "" : "network") : cfg.method;
    Upscaler u;
    if (method == "bicubic") {
        u.scale = cfg.scale;
    } else if (method == "network") {
        if (cfg.checkpoint.empty()) throw UsageError("--method network needs --checkpoint");
        u.model = load_checkpoint(cfg.checkpoint);
        const ModelSpec& spec = u.model->spec;
        if (spec.task != ModelTask::SuperResolution) throw UsageError(cfg.checkpoint + " is not an SR checkpoint");
        u.scale = cfg.scale > 0 ? cfg.scale : spec.scale;
        if (u.scale != spec.scale && !(spec.scale == 2 && (u.scale == 3 || u.scale == 4))) {
            throw UsageError("checkpoint scale " + std::to_string(spec.scale) + " cannot serve scale " +
                             std::to_string(u.scale));
        }
    } else {
        throw UsageError("pass --checkpoint (network) or --method bicubic");
    }
    if (u.scale < 1 || u.scale > 4) throw UsageError("scale must be 1-4");
    if (!cfg.sfCheckpoint.empty()) {
        if (!u.model) throw UsageError("--sf-checkpoint needs a network checkpoint");
        u.sf = load_checkpoint(cfg.sfCheckpoint);
        if (u.sf->spec.task != ModelTask::SceneClassifier) throw UsageError(cfg.sfCheckpoint + " is not an SF checkpoint");
    }

    const VideoClip clip = load_clip(cfg.input, cfg);
    clip.validate();
    VideoClip result;
    result.frameRate = clip.frameRate;
    long replaced = 0;
    for (int t = 0; t < static_cast<int>(clip.size()); ++t) {
        std::optional<SceneDecision> d;
        result.frames.push_back(upscale_frame(u, clip, t, &d));
        if (d && d->label != SceneLabel::NoChange) ++replaced;
    }
    save_clip(result, cfg.output, cfg);
    out << "upscaled " << clip.size() << " frames " << clip.width() << "x" << clip.height() << " -> "
        << result.width() << "x" << result.height() << " (" << (u.model ? "network" : "bicubic") << ")";
    if (u.sf) out << "; " << replaced << " windows with frame replacement";
    out << "\n";

    if (!cfg.dumpFeatures.empty()) {
        if (!u.model) throw UsageError("--dump-features needs a network checkpoint");
        if (cfg.dumpFrame < 0 || cfg.dumpFrame >= static_cast<int>(clip.size())) throw UsageError("--dump-frame out of range");
        const auto idx = window_indices(cfg.dumpFrame, static_cast<int>(clip.size()));
        std::array<Plane, 5> window;
        for (int k = 0; k < 5; ++k) window[k] = clip.frames[idx[k]].luma;
        const int count = dump_feature_maps(u.model->params, u.model->spec, window, cfg.dumpLayer, cfg.dumpFeatures);
        out << "wrote " << count << " feature maps of layer " << cfg.dumpLayer << " to " << cfg.dumpFeatures << "\n";
    }
    return Success;
}

// --- evaluate ------------------------------------------------------------

struct FrameScore {
    std::string sequence;
    int frame;
    double psnr;
    double ssim;
};

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
    if (cfg.reference.empty()) throw UsageError("evaluate needs --reference");
    const bool direct = !cfg.candidate.empty();
    if (direct && cfg.candidate.size() != cfg.reference.size()) {
        throw UsageError("pass one --candidate per --reference");
    }
    if (!direct && cfg.method != "bicubic" && cfg.method != "network") {
        throw UsageError("pass --candidate clips or --method bicubic|network");
    }
    Upscaler u;
    u.scale = cfg.scale;
    if (!direct && cfg.method == "network") {
        if (cfg.checkpoint.empty()) throw UsageError("--method network needs --checkpoint");
        u.model = load_checkpoint(cfg.checkpoint);
        const int s = u.model->spec.scale;
        if (u.scale != s && !(s == 2 && (u.scale == 3 || u.scale == 4))) {
            throw UsageError("checkpoint scale " + std::to_string(s) + " cannot serve scale " + std::to_string(u.scale));
        }
    }
    if (!cfg.sfCheckpoint.empty()) {
        if (!u.model) throw UsageError("--sf-checkpoint needs --method network");
        u.sf = load_checkpoint(cfg.sfCheckpoint);
    }
    const int border = cfg.border >= 0 ? cfg.border : (direct ? 0 : cfg.scale);

    std::vector<FrameScore> scores;
    for (std::size_t i = 0; i < cfg.reference.size(); ++i) {
        const VideoClip ref = load_clip(cfg.reference[i], cfg);
        ref.validate();
        const std::string name = sequence_name(cfg.reference[i]);
        VideoClip cand;
        VideoClip target = ref;
        if (direct) {
            cand = load_clip(cfg.candidate[i], cfg);
            if (cand.size() != ref.size()) {
                throw std::runtime_error(name + ": candidate has " + std::to_string(cand.size()) + " frames, reference " +
                                         std::to_string(ref.size()));
            }
        } else {
            VideoClip low;
            for (Frame& f : target.frames) {
                const int w = f.width() / cfg.scale * cfg.scale;
                const int h = f.height() / cfg.scale * cfg.scale;
                f = Frame::from_luma(f.luma.crop(0, 0, w, h));
                low.frames.push_back(Frame::from_luma(downscale_frame(f.luma, cfg.scale)));
            }
            for (int t = 0; t < static_cast<int>(low.size()); ++t) cand.frames.push_back(upscale_frame(u, low, t, nullptr));
        }
        for (int t = 0; t < static_cast<int>(target.size()); ++t) {
            const Plane& a = target.frames[t].luma;
            const Plane& b = cand.frames[t].luma;
            scores.push_back({name, t, psnr(a, b, border), ssim(a, b, border)});
        }
    }

    const std::string csvPath = cfg.csv.empty() ? "metrics.csv" : cfg.csv;
    std::ofstream csv(csvPath);
    if (!csv) throw std::runtime_error("cannot write " + csvPath);
    csv << "sequence,frame,psnr_db,ssim\n";
    for (const FrameScore& s : scores) csv << s.sequence << ',' << s.frame << ',' << fixed(s.psnr, 4) << ',' << fixed(s.ssim, 6) << '\n';

    std::vector<std::string> order;
    std::map<std::string, std::pair<double, double>> sums;
    std::map<std::string, int> counts;
    for (const FrameScore& s : scores) {
        if (!counts.count(s.sequence)) order.push_back(s.sequence);
        sums[s.sequence].first += s.psnr;
        sums[s.sequence].second += s.ssim;
        ++counts[s.sequence];
    }
    std::size_t width = 8;
    for (const std::string& n : order) width = std::max(width, n.size());
    out << std::left << std::setw(static_cast<int>(width)) << "sequence" << std::right << std::setw(8) << "frames"
        << std::setw(12) << "psnr_db" << std::setw(10) << "ssim" << '\n';
    double meanPsnr = 0.0, meanSsim = 0.0;
    for (const std::string& n : order) {
        const double p = sums[n].first / counts[n];
        const double q = sums[n].second / counts[n];
        meanPsnr += p;
        meanSsim += q;
        csv << n << ",mean," << fixed(p, 4) << ',' << fixed(q, 6) << '\n';
        out << std::left << std::setw(static_cast<int>(width)) << n << std::right << std::setw(8) << counts[n]
            << std::setw(12) << fixed(p, 4) << std::setw(10) << fixed(q, 4) << '\n';
    }
    meanPsnr /= static_cast<double>(order.size());
    meanSsim /= static_cast<double>(order.size());
    if (order.size() > 1) {
        out << std::left << std::setw(static_cast<int>(width)) << "average" << std::right << std::setw(8) << scores.size()
            << std::setw(12) << fixed(meanPsnr, 4) << std::setw(10) << fixed(meanSsim, 4) << '\n';
    }
    out << "per-frame metrics written to " << csvPath << "\n";
    return Success;
}

// --- scene ---------------------------------------------------------------

Checkpoint load_sf(const std::string& path) {
    if (path.empty()) throw UsageError("pass --sf-checkpoint");
    if (!fs::exists(path)) throw UsageError("no such checkpoint: " + path);
    Checkpoint ck = load_checkpoint(path);
    if (ck.spec.task != ModelTask::SceneClassifier) throw UsageError(path + " is not an SF checkpoint");
    return ck;
}

int cmd_scene(const RunConfig& cfg, std::ostream& out) {
    if (cfg.input.empty()) throw UsageError("scene needs --input");
    const Checkpoint sf = load_sf(cfg.sfCheckpoint);
    const VideoClip clip = load_clip(cfg.input, cfg);
    clip.validate();
    const int n = static_cast<int>(clip.size());
    const std::string csvPath = cfg.csv.empty() ? "scene.csv" : cfg.csv;
    std::ofstream csv(csvPath);
    if (!csv) throw std::runtime_error("cannot write " + csvPath);
    csv << "center,label,confidence\n";
    std::map<int, int> votes;  // first frame of the new scene -> windows agreeing
    for (int t = 0; t < n; ++t) {
        const auto idx = window_indices(t, n);
        std::array<Plane, 5> window;
        for (int k = 0; k < 5; ++k) window[k] = clip.frames[idx[k]].luma;
        const SceneDecision d = classify_window(sf.params, sf.spec, window);
        csv << t << ',' << to_string(d.label) << ',' << fixed(d.confidence, 6) << '\n';
        if (d.label != SceneLabel::NoChange) ++votes[idx[static_cast<int>(d.label) + 1]];
    }
    out << "classified " << n << " windows; labels written to " << csvPath << "\n";
    if (votes.empty()) out << "no scene changes detected\n";
    for (const auto& [frame, count] : votes) {
        out << "scene change before frame " << frame << " (" << count << " window" << (count == 1 ? "" : "s") << ")\n";
    }
    return Success;
}

// --- sf-train ------------------------------------------------------------

int cmd_sf_train(const RunConfig& cfg, std::ostream& out) {
    std::vector<VideoClip> trainScenes;
    std::vector<VideoClip> testScenes;
    if (!cfg.scenes.empty()) {
        trainScenes = load_clips(cfg.scenes, cfg);
        if (!cfg.testScenes.empty()) {
            testScenes = load_clips(cfg.testScenes, cfg);
        } else {
            const std::size_t hold = std::max<std::size_t>(2, trainScenes.size() / 4);
            if (trainScenes.size() < hold + 2) throw UsageError("need at least 4 scenes, or pass --test-scenes");
            testScenes.assign(trainScenes.end() - static_cast<long>(hold), trainScenes.end());
            trainScenes.resize(trainScenes.size() - hold);
        }
    } else if (cfg.synthetic > 0) {
        trainScenes = synth_scenes(synth_options(cfg), cfg.synthetic, derive_seed(cfg.seed, "sf-train-scenes"));
        testScenes = cfg.testScenes.empty()
                         ? synth_scenes(synth_options(cfg), std::max(2, cfg.synthetic / 2), derive_seed(cfg.seed, "sf-test-scenes"))
                         : load_clips(cfg.testScenes, cfg);
    } else {
        throw UsageError("no scene data: pass --scenes <clip> (repeatable, one scene per clip) or --synthetic <count>");
    }

    const ModelSpec spec = build_sf_net(cfg.layers);
    const auto train = make_sf_dataset(trainScenes, cfg.perClass, derive_seed(cfg.seed, "sf-train"));
    const auto test = make_sf_dataset(testScenes, cfg.testPerClass, derive_seed(cfg.seed, "sf-test"));
    out << "SF net " << spec.name << ": " << group_digits(count_parameters(spec, true)) << " parameters; "
        << train.size() << " training windows from " << trainScenes.size() << " scenes, " << test.size()
        << " held-out windows from " << testScenes.size() << " scenes\n";

    SfHyper hyper;
    hyper.lr = cfg.lr;
    hyper.batch = cfg.batch;
    hyper.epochs = cfg.epochs;
    hyper.maxSteps = cfg.maxSteps;
    hyper.seed = cfg.seed;
    hyper.weightDecay = cfg.weightDecay;
    hyper.biasLrFactor = cfg.biasLrFactor;
    const SfTrainResult result = train_sf(spec, train, hyper, [&](const SfLogRow& row) {
        if (cfg.printEvery > 0 && row.step % cfg.printEvery == 0) {
            out << "step " << row.step << "  loss " << std::setprecision(6) << row.loss << '\n' << std::flush;
        }
    });

    const std::string ckPath = cfg.out.empty() ? "sf.3dsr" : cfg.out;
    CheckpointMeta meta;
    meta.step = result.steps;
    meta.seed = cfg.seed;
    meta.extra["lr"] = std::to_string(cfg.lr);
    meta.extra["batch"] = std::to_string(cfg.batch);
    save_checkpoint(result.params, spec, meta, ckPath);
    if (!cfg.log.empty()) write_sf_log(result.log, cfg.log);

    const SfEvaluation eval = evaluate_sf(result.params, spec, test);
    const std::string confusionPath = cfg.csv.empty() ? "confusion.csv" : cfg.csv;
    write_confusion_csv(eval, confusionPath);
    out << "trained " << result.steps << " steps; checkpoint " << ckPath << "\n";
    out << "held-out accuracy " << fixed(100.0 * eval.accuracy, 3) << "% (" << eval.count << " windows)\n";
    out << "confusion (rows truth, columns predicted):\n";
    out << std::setw(16) << "";
    for (int c = 0; c < kSceneClasses; ++c) out << std::setw(16) << to_string(scene_label_from_index(c));
    out << '\n';
    for (int t = 0; t < kSceneClasses; ++t) {
        out << std::setw(16) << to_string(scene_label_from_index(t));
        for (int c = 0; c < kSceneClasses; ++c) out << std::setw(16) << eval.confusion[t][c];
        out << '\n';
    }
    out << "confusion matrix written to " << confusionPath << "\n";
    return Success;
}

// --- verify / param-count / synth ---------------------------------------

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
    VerifyOptions opt;
    if (cfg.precision != 32 && cfg.precision != 64) throw UsageError("precision must be 32 or 64");
    opt.precision = cfg.precision == 64 ? Precision::Float64 : Precision::Float32;
    try {
        opt.fault = injected_fault_from_string(cfg.injectFault);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    opt.seed = cfg.seed;
    opt.oracleConfigs = cfg.oracleConfigs;
    if (opt.fault != InjectedFault::None) out << "fault injected: " << cfg.injectFault << "\n";
    int failed = 0;
    const auto report = [&](const std::vector<CheckResult>& part) {
        for (const CheckResult& r : part) {
            out << (r.passed ? "PASS  " : "FAIL  ") << r.name << ": " << r.detail << '\n' << std::flush;
            if (!r.passed) ++failed;
        }
    };
    report(parameter_count_checks());
    report(gradient_checks(opt));
    report(conv_oracle_checks(opt));
    report(network_oracle_checks(opt));
    report(pixel_shuffle_checks(opt.seed));
    report(replacement_checks());
    out << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << "\n";
    return failed == 0 ? Success : RuntimeFailure;
}

int cmd_param_count(const RunConfig& cfg, std::ostream& out) {
    std::vector<std::string> names;
    if (cfg.arch == "all") {
        names = architecture_names();
    } else {
        names = {cfg.arch};
    }
    out << std::left << std::setw(8) << "arch" << std::right << std::setw(12) << "weights" << std::setw(14)
        << "with biases" << "  depths\n";
    for (const std::string& n : names) {
        const ModelSpec spec = build_architecture(n, cfg.scale);
        std::string depths;
        for (int d : spec.depth_trace()) depths += (depths.empty() ? "" : ",") + std::to_string(d);
        out << std::left << std::setw(8) << n << std::right << std::setw(12)
            << (cfg.includeBias ? count_parameters(spec, true) : count_parameters(spec)) << std::setw(14)
            << count_parameters(spec, true) << "  " << depths << '\n';
    }
    return Success;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
    if (cfg.output.empty()) throw UsageError("synth needs --output");
    const SynthOptions o = [&] {
        SynthOptions s = synth_options(cfg);
        s.chroma = true;
        return s;
    }();
    const VideoClip clip = cfg.cutAt >= 0 ? synth_cut_clip(o, cfg.cutAt, derive_seed(cfg.seed, "synth-a"),
                                                           derive_seed(cfg.seed, "synth-b"))
                                          : synth_clip(o, derive_seed(cfg.seed, "synth-a"));
    save_clip(clip, cfg.output, cfg);
    out << "wrote " << clip.size() << " frames " << o.width << "x" << o.height << " to " << cfg.output << "\n";
    return Success;
}

// --- command line --------------------------------------------------------

struct Command {
    CLI::App* app;
    int (*run)(const RunConfig&, std::ostream&);
};

void add_common(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--config", "key = value file; command-line options take precedence");
    sub->add_option("--seed", cfg.seed, "seed for every random stream")->capture_default_str();
    sub->add_option("--threads", cfg.threads, "worker threads (0: runtime default)");
}

void add_clip_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--format", cfg.format, "input format: auto, y4m, yuv, pgm")->capture_default_str();
    sub->add_option("--size", cfg.size, "geometry WxH of raw YUV input");
}

void add_synthetic(CLI::App* sub, RunConfig& cfg, const char* what) {
    sub->add_option("--synthetic", cfg.synthetic, what);
    sub->add_option("--synthetic-size", cfg.syntheticSize, "synthetic clip geometry WxH")->capture_default_str();
    sub->add_option("--synthetic-frames", cfg.syntheticFrames, "frames per synthetic clip")->capture_default_str();
}

// Applies `key = value` lines for options not given on the command line.
void apply_config(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::ParseError& e) {
        throw UsageError("config " + path + ": " + e.what());
    }
    for (const CLI::ConfigItem& item : items) {
        if (item.name == "++" || item.name == "--") continue;
        const std::string key = item.parents.empty() ? item.name : item.parents.back() + "." + item.name;
        if (!item.parents.empty() || key == "config") throw UsageError("config " + path + ": unknown key '" + key + "'");
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (!opt) throw UsageError("config " + path + ": unknown key '" + key + "' for " + sub->get_name());
        if (opt->count() > 0) continue;
        std::vector<std::string> values;
        for (const std::string& v : item.inputs) {
            std::stringstream ss(v);
            std::string part;
            if (opt->get_items_expected_max() > 1) {
                while (std::getline(ss, part, ',')) {
                    part.erase(0, part.find_first_not_of(" \t"));
                    part.erase(part.find_last_not_of(" \t") + 1);
                    if (!part.empty()) values.push_back(part);
                }
            } else {
                values.push_back(v);
            }
        }
        if (opt->get_type_size() == 0) {
            if (values.size() != 1) throw UsageError("config " + path + ": '" + key + "' expects true or false");
            if (values[0] == "true" || values[0] == "1") {
                opt->add_result("true");
            } else if (values[0] != "false" && values[0] != "0") {
                throw UsageError("config " + path + ": '" + key + "' expects true or false");
            } else {
                continue;
            }
        } else {
            opt->add_result(values);
        }
        opt->run_callback();
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"3D-CNN video super-resolution toolkit"};
    app.name("vsr3d");
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::vector<Command> commands;

    auto* train = app.add_subcommand("train", "train an SR network on clips");
    add_common(train, cfg);
    add_clip_options(train, cfg);
    add_synthetic(train, cfg, "train on this many synthetic clips instead of --train");
    train->add_option("--arch", cfg.arch, "cnn2d, v1, v2, v3 or full")->capture_default_str();
    train->add_option("--scale", cfg.scale, "upscaling factor 2-4")->capture_default_str();
    train->add_option("--train", cfg.train, "training clip (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    train->add_option("--val", cfg.val, "validation clip (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    train->add_option("--frame-stride", cfg.frameStride, "frames between sampled centers")->capture_default_str();
    train->add_option("--subimages", cfg.subimages, "patches per center frame")->capture_default_str();
    train->add_option("--patch", cfg.patch, "LR patch size (0: 80/60/40 for scale 2/3/4)")->capture_default_str();
    train->add_option("--val-stride", cfg.valStride, "frames between validation windows")->capture_default_str();
    train->add_option("--lr", cfg.lr, "learning rate")->capture_default_str();
    train->add_option("--batch", cfg.batch, "mini-batch size")->capture_default_str();
    train->add_option("--epochs", cfg.epochs, "passes over the dataset")->capture_default_str();
    train->add_option("--max-steps", cfg.maxSteps, "stop after this many steps (0: no limit)")->capture_default_str();
    train->add_option("--val-every", cfg.valEvery, "steps between validation passes")->capture_default_str();
    train->add_option("--checkpoint-every", cfg.checkpointEvery, "steps between checkpoints")->capture_default_str();
    train->add_option("--print-every", cfg.printEvery, "steps between progress lines")->capture_default_str();
    train->add_option("--norm", cfg.norm, "loss normalisation: mean (per pixel) or sum (per sample)")->capture_default_str();
    train->add_option("--weight-decay", cfg.weightDecay, "L2 decay on filters")->capture_default_str();
    train->add_option("--bias-lr-factor", cfg.biasLrFactor, "bias learning-rate multiplier")->capture_default_str();
    train->add_option("--out", cfg.out, "checkpoint path (default model.3dsr)");
    train->add_option("--log", cfg.log, "CSV training log (default train_log.csv)");
    commands.push_back({train, cmd_train});

    auto* upscale = app.add_subcommand(
        "upscale", "upscale a clip; windows at the clip ends replicate the first or last frame");
    add_common(upscale, cfg);
    add_clip_options(upscale, cfg);
    upscale->add_option("--input", cfg.input, "LR clip");
    upscale->add_option("--output", cfg.output, "output clip (.y4m, .yuv or PGM directory)");
    upscale->add_option("--out-format", cfg.outFormat, "output format: auto, y4m, yuv, pgm")->capture_default_str();
    upscale->add_option("--checkpoint", cfg.checkpoint, "SR checkpoint");
    upscale->add_option("--method", cfg.method, "network or bicubic");
    upscale->add_option("--scale", cfg.scale, "output scale (default: the checkpoint's)");
    upscale->add_option("--sf-checkpoint", cfg.sfCheckpoint, "scene-change classifier for frame replacement");
    upscale->add_option("--dump-features", cfg.dumpFeatures, "directory for feature-map PGMs");
    upscale->add_option("--dump-layer", cfg.dumpLayer, "layer to dump (1-based)")->capture_default_str();
    upscale->add_option("--dump-frame", cfg.dumpFrame, "center frame of the dumped window")->capture_default_str();
    commands.push_back({upscale, [](const RunConfig& c, std::ostream& o) {
                            RunConfig copy = c;
                            if (copy.method == "bicubic" && copy.scale == 0) copy.scale = 2;
                            return cmd_upscale(copy, o);
                        }});

    auto* evaluate = app.add_subcommand("evaluate", "PSNR / SSIM on luma against reference clips");
    add_common(evaluate, cfg);
    add_clip_options(evaluate, cfg);
    evaluate->add_option("--reference", cfg.reference, "HR reference clip (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    evaluate->add_option("--candidate", cfg.candidate, "clip to score, one per reference")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    evaluate->add_option("--method", cfg.method, "bicubic or network: degrade each reference by --scale and upscale it");
    evaluate->add_option("--checkpoint", cfg.checkpoint, "SR checkpoint for --method network");
    evaluate->add_option("--sf-checkpoint", cfg.sfCheckpoint, "scene-change classifier for --method network");
    evaluate->add_option("--scale", cfg.scale, "degradation factor")->capture_default_str();
    evaluate->add_option("--border", cfg.border, "pixels cropped per side (default: scale, or 0 with --candidate)");
    evaluate->add_option("--csv", cfg.csv, "per-frame CSV (default metrics.csv)");
    commands.push_back({evaluate, cmd_evaluate});

    auto* scene = app.add_subcommand("scene", "classify every five-frame window of a clip");
    add_common(scene, cfg);
    add_clip_options(scene, cfg);
    scene->add_option("--input", cfg.input, "clip");
    scene->add_option("--sf-checkpoint", cfg.sfCheckpoint, "trained scene-change classifier");
    scene->add_option("--csv", cfg.csv, "per-window CSV (default scene.csv)");
    commands.push_back({scene, cmd_scene});

    auto* sfTrain = app.add_subcommand("sf-train", "train the scene-change classifier");
    add_common(sfTrain, cfg);
    add_clip_options(sfTrain, cfg);
    add_synthetic(sfTrain, cfg, "train on this many synthetic scenes instead of --scenes");
    sfTrain->add_option("--scenes", cfg.scenes, "clip holding one scene (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sfTrain->add_option("--test-scenes", cfg.testScenes, "held-out scene clip (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sfTrain->add_option("--per-class", cfg.perClass, "training windows per class")->capture_default_str();
    sfTrain->add_option("--test-per-class", cfg.testPerClass, "held-out windows per class")->capture_default_str();
    sfTrain->add_option("--layers", cfg.layers, "2 or 3")->capture_default_str();
    sfTrain->add_option("--lr", cfg.lr, "learning rate")->default_str("0.001");
    sfTrain->add_option("--batch", cfg.batch, "mini-batch size")->default_str("64");
    sfTrain->add_option("--epochs", cfg.epochs, "passes over the dataset")->default_str("30");
    sfTrain->add_option("--max-steps", cfg.maxSteps, "stop after this many steps (0: no limit)")->capture_default_str();
    sfTrain->add_option("--print-every", cfg.printEvery, "steps between progress lines")->capture_default_str();
    sfTrain->add_option("--weight-decay", cfg.weightDecay, "L2 decay on filters")->capture_default_str();
    sfTrain->add_option("--bias-lr-factor", cfg.biasLrFactor, "bias learning-rate multiplier")->capture_default_str();
    sfTrain->add_option("--out", cfg.out, "checkpoint path (default sf.3dsr)");
    sfTrain->add_option("--log", cfg.log, "CSV training log");
    sfTrain->add_option("--csv", cfg.csv, "confusion matrix CSV (default confusion.csv)");
    commands.push_back({sfTrain, cmd_sf_train});

    auto* verify = app.add_subcommand("verify", "gradient, oracle and fixture self-checks");
    add_common(verify, cfg);
    verify->add_option("--precision", cfg.precision, "32 or 64 (64-bit gradient verification)")->capture_default_str();
    verify->add_option("--inject-fault", cfg.injectFault, "none, concat-order or bias-grad")->capture_default_str();
    verify->add_option("--oracle-configs", cfg.oracleConfigs, "random convolution configurations")->capture_default_str();
    commands.push_back({verify, cmd_verify});

    auto* params = app.add_subcommand("param-count", "weight counts of the architectures");
    add_common(params, cfg);
    params->add_option("--arch", cfg.arch, "architecture or 'all'")->default_str("all");
    params->add_option("--scale", cfg.scale, "upscaling factor 2-4")->capture_default_str();
    params->add_flag("--include-bias", cfg.includeBias, "count biases in the first column");
    commands.push_back({params, cmd_param_count});

    auto* synth = app.add_subcommand("synth", "write a procedural test clip");
    add_common(synth, cfg);
    synth->add_option("--output", cfg.output, "output clip");
    synth->add_option("--out-format", cfg.outFormat, "output format: auto, y4m, yuv, pgm")->capture_default_str();
    synth->add_option("--size", cfg.syntheticSize, "geometry WxH")->capture_default_str();
    synth->add_option("--frames", cfg.syntheticFrames, "frame count")->capture_default_str();
    synth->add_option("--cut-at", cfg.cutAt, "first frame of a second scene");
    commands.push_back({synth, cmd_synth});

    const bool paramDefault = std::find(args.begin(), args.end(), "param-count") != args.end();
    if (paramDefault) cfg.arch = "all";
    const bool sfDefaults = std::find(args.begin(), args.end(), "sf-train") != args.end();
    if (sfDefaults) {
        cfg.lr = 1e-3;
        cfg.batch = 64;
        cfg.epochs = 30;
    }
    const bool upscaleDefault = std::find(args.begin(), args.end(), "upscale") != args.end();
    if (upscaleDefault) cfg.scale = 0;

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        for (const Command& c : commands) {
            if (!c.app->parsed()) continue;
            if (CLI::Option* config = c.app->get_option_no_throw("--config"); config && config->count() > 0) {
                apply_config(c.app, config->as<std::string>());
            }
#ifdef _OPENMP
            if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
            return c.run(cfg, out);
        }
        return UsageFailure;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Success;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return Success;
    } catch (const CLI::ParseError& e) {
        err << "vsr3d: " << e.what() << "\n";
        return UsageFailure;
    } catch (const UsageError& e) {
        err << "vsr3d: " << e.what() << "\n";
        return UsageFailure;
    } catch (const std::exception& e) {
        err << "vsr3d: " << e.what() << "\n";
        return RuntimeFailure;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace vsr::app
