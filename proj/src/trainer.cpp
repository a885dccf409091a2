#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "vsr/checkpoint.hpp"
#include "vsr/metrics.hpp"
#include "vsr/random.hpp"
#include "vsr/resample.hpp"
#include "vsr/train.hpp"

namespace vsr {

SrBatch make_batch(std::span<const WindowSample> samples, std::span<const std::size_t> order, int scale) {
    if (order.empty()) throw std::invalid_argument("make_batch: empty batch");
    const WindowSample& first = samples[order[0]];
    const int lw = first.lr[0].width;
    const int lh = first.lr[0].height;
    const int n = static_cast<int>(order.size());
    SrBatch b{Tensor(Shape{n, 1, 5, lh, lw}), Tensor(Shape{n, 1, 1, lh * scale, lw * scale}),
              Tensor(Shape{n, 1, 1, lh * scale, lw * scale})};
    for (int i = 0; i < n; ++i) {
        const WindowSample& s = samples[order[i]];
        for (int k = 0; k < 5; ++k) {
            if (s.lr[k].width != lw || s.lr[k].height != lh) throw std::invalid_argument("make_batch: mixed patch sizes");
            std::copy(s.lr[k].data.begin(), s.lr[k].data.end(), b.lr.plane(i, 0, k));
        }
        if (s.hr.width != lw * scale || s.hr.height != lh * scale) {
            throw std::invalid_argument("make_batch: HR target is not scale x LR");
        }
        const Plane base = resize_plane(s.lr[2], lw * scale, lh * scale);
        std::copy(base.data.begin(), base.data.end(), b.baseline.plane(i, 0, 0));
        std::copy(s.hr.data.begin(), s.hr.data.end(), b.target.plane(i, 0, 0));
    }
    return b;
}

double validation_psnr(const ModelSpec& spec, const ModelParams& params, std::span<const WindowSample> samples) {
    if (samples.empty()) throw std::invalid_argument("validation_psnr: no samples");
    double sum = 0.0;
    for (const WindowSample& s : samples) {
        const Plane out = forward(params, spec, s.lr);
        sum += psnr(out, s.hr, spec.scale);
    }
    return sum / static_cast<double>(samples.size());
}

double bicubic_psnr(std::span<const WindowSample> samples, int scale) {
    if (samples.empty()) throw std::invalid_argument("bicubic_psnr: no samples");
    double sum = 0.0;
    for (const WindowSample& s : samples) {
        const Plane up = resize_plane(s.lr[2], s.lr[2].width * scale, s.lr[2].height * scale);
        sum += psnr(up, s.hr, scale);
    }
    return sum / static_cast<double>(samples.size());
}

void write_train_log(const std::vector<TrainLogRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write training log " + path.string());
    out << "step,loss,val_psnr_db\n";
    out << std::setprecision(9);
    for (const TrainLogRow& r : rows) {
        out << r.step << ',' << r.loss << ',';
        if (r.valPsnr) out << std::setprecision(6) << std::fixed << *r.valPsnr << std::defaultfloat << std::setprecision(9);
        out << '\n';
    }
}

TrainResult train(const ModelSpec& spec, std::span<const WindowSample> data, std::span<const WindowSample> validation,
                  const TrainHyper& hyper, const TrainOutputs& outputs, std::optional<ModelParams> initial) {
    spec.validate();
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    if (hyper.batch < 1 || hyper.epochs < 0 || hyper.maxSteps < 0) throw std::invalid_argument("train: bad hyperparameters");

    TrainResult result;
    result.params = initial ? std::move(*initial) : xavier_init(spec, hyper.seed);
    check_params(spec, result.params);
    OptimState state = OptimState::create(
        spec, AdamConfig{hyper.lr, 0.9, 0.999, 1e-8, hyper.biasLrFactor, hyper.weightDecay});
    Rng shuffler(derive_seed(hyper.seed, "shuffle"));

    const auto save = [&](long step) {
        if (outputs.checkpoint.empty()) return;
        CheckpointMeta meta;
        meta.step = step;
        meta.seed = hyper.seed;
        meta.extra["lr"] = std::to_string(hyper.lr);
        meta.extra["batch"] = std::to_string(hyper.batch);
        save_checkpoint(result.params, spec, meta, outputs.checkpoint);
    };
    const auto flush_log = [&] {
        if (!outputs.log.empty()) write_train_log(result.log, outputs.log);
    };

    std::vector<std::size_t> order(data.size());
    bool done = hyper.maxSteps > 0 && result.steps >= hyper.maxSteps;
    for (int epoch = 0; epoch < hyper.epochs && !done; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        shuffler.shuffle(order);
        for (std::size_t start = 0; start < order.size() && !done; start += hyper.batch) {
            const std::size_t count = std::min<std::size_t>(hyper.batch, order.size() - start);
            const SrBatch batch = make_batch(data, std::span(order).subspan(start, count), spec.scale);
            ForwardCache<float> cache;
            const Tensor pred = sr_predict(spec, result.params, batch.lr, batch.baseline, &cache);
            const LossResult<float> loss = loss_mse(pred, batch.target, hyper.norm);
            if (!std::isfinite(loss.loss)) {
                flush_log();
                throw TrainingError("loss became non-finite at step " + std::to_string(result.steps + 1) +
                                    "; last good checkpoint kept");
            }
            ModelParams grads = zero_params<float>(spec);
            sr_backward(spec, result.params, cache, loss.grad, grads, false);
            try {
                adam_step(result.params, grads, state);
            } catch (const TrainingError&) {
                flush_log();
                throw;
            }
            ++result.steps;
            TrainLogRow row{result.steps, loss.loss, std::nullopt};
            if (hyper.valEvery > 0 && !validation.empty() && result.steps % hyper.valEvery == 0) {
                row.valPsnr = validation_psnr(spec, result.params, validation);
            }
            result.log.push_back(row);
            if (outputs.onStep) outputs.onStep(row);
            if (hyper.checkpointEvery > 0 && result.steps % hyper.checkpointEvery == 0) save(result.steps);
            done = hyper.maxSteps > 0 && result.steps >= hyper.maxSteps;
        }
    }
    if (!validation.empty()) {
        result.valPsnr = validation_psnr(spec, result.params, validation);
        if (!result.log.empty() && !result.log.back().valPsnr) result.log.back().valPsnr = result.valPsnr;
    }
    save(result.steps);
    flush_log();
    return result;
}

}  // namespace vsr
