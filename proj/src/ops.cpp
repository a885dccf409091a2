#include "vsr/ops.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

namespace vsr {

std::string to_string(const Shape& s) {
    std::ostringstream os;
    os << '(' << s.n << 'x' << s.c << 'x' << s.d << 'x' << s.h << 'x' << s.w << ')';
    return os.str();
}

const char* to_string(TemporalPad p) {
    switch (p) {
        case TemporalPad::None: return "none";
        case TemporalPad::Zero: return "zero";
        case TemporalPad::Duplicate: return "duplicate";
    }
    return "none";
}

TemporalPad temporal_pad_from_string(const std::string& s) {
    if (s == "none") return TemporalPad::None;
    if (s == "zero") return TemporalPad::Zero;
    if (s == "duplicate") return TemporalPad::Duplicate;
    throw std::invalid_argument("unknown temporal pad '" + s + "'");
}

Shape conv_output_shape(const Shape& in, const Shape& k, const PadPolicy& pad, int stride) {
    if (in.c != k.c) {
        throw std::invalid_argument("conv: input has " + std::to_string(in.c) + " groups, kernel expects " +
                                    std::to_string(k.c));
    }
    if (pad.spatial < 0 || stride < 1 || pad.temporalPerSide < 0) {
        throw std::invalid_argument("conv: negative padding or non-positive stride");
    }
    const int dp = in.d + 2 * pad.depth_pad();
    const int hp = in.h + 2 * pad.spatial;
    const int wp = in.w + 2 * pad.spatial;
    if (k.d > dp || k.h > hp || k.w > wp) {
        throw std::invalid_argument("conv: kernel " + to_string(k) + " larger than padded input " + to_string(in));
    }
    return Shape{in.n, k.n, dp - k.d + 1, (hp - k.h) / stride + 1, (wp - k.w) / stride + 1};
}

namespace {

template <typename T>
BasicTensor<T> spatial_pad(const BasicTensor<T>& src, int p) {
    const Shape s = src.shape();
    BasicTensor<T> out(Shape{s.n, s.c, s.d, s.h + 2 * p, s.w + 2 * p});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int d = 0; d < s.d; ++d)
                for (int h = 0; h < s.h; ++h) {
                    const T* from = src.plane(n, c, d) + static_cast<std::size_t>(h) * s.w;
                    std::copy(from, from + s.w, &out.at(n, c, d, h + p, p));
                }
    return out;
}

// Temporal extrapolation followed by zero spatial padding.
template <typename T>
BasicTensor<T> pad_input(const BasicTensor<T>& input, const PadPolicy& pad) {
    if (pad.depth_pad() > 0) {
        BasicTensor<T> deep = temporal_extrapolate(input, pad.temporal, pad.temporalPerSide);
        return pad.spatial > 0 ? spatial_pad(deep, pad.spatial) : deep;
    }
    return pad.spatial > 0 ? spatial_pad(input, pad.spatial) : input;
}

// Drops the spatial border and folds the temporal padding back.
template <typename T>
BasicTensor<T> unpad_grad(const BasicTensor<T>& gradPadded, const PadPolicy& pad) {
    const Shape s = gradPadded.shape();
    const int p = pad.spatial;
    BasicTensor<T> cropped(Shape{s.n, s.c, s.d, s.h - 2 * p, s.w - 2 * p});
    const Shape cs = cropped.shape();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int d = 0; d < s.d; ++d)
                for (int h = 0; h < cs.h; ++h) {
                    const T* from = &gradPadded.at(n, c, d, h + p, p);
                    std::copy(from, from + cs.w, &cropped.at(n, c, d, h, 0));
                }
    if (pad.depth_pad() == 0) return cropped;
    return temporal_extrapolate_backward(cropped, pad.temporal, pad.temporalPerSide);
}

template <typename T>
struct LaneVec;
template <>
struct LaneVec<float> {
    typedef float type __attribute__((vector_size(64)));
};
template <>
struct LaneVec<double> {
    typedef double type __attribute__((vector_size(64)));
};
template <typename T>
using Lanes = typename LaneVec<T>::type;
template <typename T>
constexpr std::size_t kLanes = 64 / sizeof(T);

template <typename T>
inline Lanes<T> load_lanes(const T* p) {
    Lanes<T> v;
    std::memcpy(&v, p, sizeof(v));
    return v;
}

template <typename T>
inline T sum_lanes(const Lanes<T>& v) {
    T s = 0;
    for (std::size_t j = 0; j < kLanes<T>; ++j) s += v[j];
    return s;
}

// Fixed-lane dot products accumulated into per-lane partial sums; `len` must
// be a multiple of kLanes. The summation pattern depends only on the call
// sequence, so results are reproducible across runs and thread counts.
template <typename T>
void lane_dot_acc(const T* a, const T* b, std::size_t len, Lanes<T>& acc) {
    for (std::size_t i = 0; i < len; i += kLanes<T>) acc += load_lanes<T>(a + i) * load_lanes<T>(b + i);
}

// acc[p][q] += lanes of a_p . b_q
template <typename T>
void lane_dot4x4_acc(const T* a0, const T* a1, const T* a2, const T* a3, const T* b0, const T* b1, const T* b2,
                     const T* b3, std::size_t len, Lanes<T> (&acc)[4][4]) {
    Lanes<T> l00 = acc[0][0], l01 = acc[0][1], l02 = acc[0][2], l03 = acc[0][3];
    Lanes<T> l10 = acc[1][0], l11 = acc[1][1], l12 = acc[1][2], l13 = acc[1][3];
    Lanes<T> l20 = acc[2][0], l21 = acc[2][1], l22 = acc[2][2], l23 = acc[2][3];
    Lanes<T> l30 = acc[3][0], l31 = acc[3][1], l32 = acc[3][2], l33 = acc[3][3];
    for (std::size_t i = 0; i < len; i += kLanes<T>) {
        const Lanes<T> x0 = load_lanes<T>(a0 + i), x1 = load_lanes<T>(a1 + i), x2 = load_lanes<T>(a2 + i),
                       x3 = load_lanes<T>(a3 + i);
        Lanes<T> y = load_lanes<T>(b0 + i);
        l00 += x0 * y, l10 += x1 * y, l20 += x2 * y, l30 += x3 * y;
        y = load_lanes<T>(b1 + i);
        l01 += x0 * y, l11 += x1 * y, l21 += x2 * y, l31 += x3 * y;
        y = load_lanes<T>(b2 + i);
        l02 += x0 * y, l12 += x1 * y, l22 += x2 * y, l32 += x3 * y;
        y = load_lanes<T>(b3 + i);
        l03 += x0 * y, l13 += x1 * y, l23 += x2 * y, l33 += x3 * y;
    }
    acc[0][0] = l00, acc[0][1] = l01, acc[0][2] = l02, acc[0][3] = l03;
    acc[1][0] = l10, acc[1][1] = l11, acc[1][2] = l12, acc[1][3] = l13;
    acc[2][0] = l20, acc[2][1] = l21, acc[2][2] = l22, acc[2][3] = l23;
    acc[3][0] = l30, acc[3][1] = l31, acc[3][2] = l32, acc[3][3] = l33;
}

template <typename T, int OB, int PT>
inline void conv_tile_full(const T* __restrict src0, const std::size_t* __restrict offs, const T* __restrict kt,
                           std::size_t taps, int kstride, T (&acc)[OB][PT]) {
    for (int b = 0; b < OB; ++b)
        for (int j = 0; j < PT; ++j) acc[b][j] = 0;
    for (std::size_t r = 0; r < taps; ++r) {
        const T* __restrict s = src0 + offs[r];
        const T* __restrict wv = kt + r * kstride;
#pragma GCC unroll 8
        for (int b = 0; b < OB; ++b) {
            const T w = wv[b];
            for (int j = 0; j < PT; ++j) acc[b][j] += w * s[j];
        }
    }
}

// Valid correlation of a padded input with unit stride. Each output sums its
// taps in (in-group, kd, kh, kw) order regardless of tiling.
// Register tile of OB groups x PT flattened positions (PT * OB * sizeof(T)
// is 1 KiB, i.e. 16 AVX-512 registers).
template <typename T, int OB>
void conv_forward_tiled(const BasicTensor<T>& padded, const ConvWeights<T>& weights, BasicTensor<T>& out) {
    constexpr int PT = 1024 / (OB * static_cast<int>(sizeof(T)));
    const Shape ps = padded.shape();
    const Shape ks = weights.kernel.shape();
    const Shape os = out.shape();
    const int wp = ps.w;
    const std::size_t span = static_cast<std::size_t>(os.h - 1) * wp + os.w;
    const std::size_t taps = static_cast<std::size_t>(ks.c) * ks.d * ks.h * ks.w;
    const int ocPad = (os.c + OB - 1) / OB * OB;

    std::vector<std::size_t> offs(taps);
    std::vector<T> kt(taps * ocPad, T(0));
    {
        std::size_t r = 0;
        for (int ic = 0; ic < ks.c; ++ic)
            for (int kd = 0; kd < ks.d; ++kd)
                for (int kh = 0; kh < ks.h; ++kh)
                    for (int kw = 0; kw < ks.w; ++kw, ++r) {
                        offs[r] = ((static_cast<std::size_t>(ic) * ps.d + kd) * ps.h + kh) * wp + kw;
                        for (int oc = 0; oc < os.c; ++oc) kt[r * ocPad + oc] = weights.kernel.at(oc, ic, kd, kh, kw);
                    }
    }

    const int ocBlocks = ocPad / OB;
    const long tiles = static_cast<long>((span + PT - 1) / PT);
    const long jobs = static_cast<long>(os.n) * ocBlocks * os.d * tiles;

#pragma omp parallel for schedule(static)
    for (long job = 0; job < jobs; ++job) {
        long rest = job;
        const long tile = rest % tiles;
        rest /= tiles;
        const int od = static_cast<int>(rest % os.d);
        rest /= os.d;
        const int oc0 = static_cast<int>(rest % ocBlocks) * OB;
        const int n = static_cast<int>(rest / ocBlocks);
        const std::size_t p0 = static_cast<std::size_t>(tile) * PT;
        const std::size_t len = std::min<std::size_t>(PT, span - p0);
        const T* base = padded.plane(n, 0, od);

        alignas(64) T acc[OB][PT];
        if (len == static_cast<std::size_t>(PT)) {
            conv_tile_full<T, OB, PT>(base + p0, offs.data(), kt.data() + oc0, taps, ocPad, acc);
        } else {
            for (auto& row : acc) std::fill(row, row + PT, T(0));
            for (std::size_t r = 0; r < taps; ++r) {
                const T* s = base + offs[r] + p0;
                const T* wv = kt.data() + r * ocPad + oc0;
                for (int b = 0; b < OB; ++b)
                    for (std::size_t j = 0; j < len; ++j) acc[b][j] += wv[b] * s[j];
            }
        }
        const int nb = std::min(OB, os.c - oc0);
        for (int b = 0; b < nb; ++b) {
            const T bias = weights.bias[oc0 + b];
            for (std::size_t j = 0; j < len; ++j) {
                const std::size_t p = p0 + j;
                const int w = static_cast<int>(p % wp);
                if (w >= os.w) continue;
                out.at(n, oc0 + b, od, static_cast<int>(p / wp), w) = acc[b][j] + bias;
            }
        }
    }
}

// Valid correlation of a padded input with unit stride. Each output sums its
// taps in (in-group, kd, kh, kw) order regardless of tiling.
template <typename T>
void conv_forward_unit_stride(const BasicTensor<T>& padded, const ConvWeights<T>& weights, BasicTensor<T>& out) {
    const int oc = out.shape().c;
    if (oc >= 8) {
        conv_forward_tiled<T, 8>(padded, weights, out);
    } else if (oc >= 4) {
        conv_forward_tiled<T, 4>(padded, weights, out);
    } else if (oc >= 2) {
        conv_forward_tiled<T, 2>(padded, weights, out);
    } else {
        conv_forward_tiled<T, 1>(padded, weights, out);
    }
}

// Strided convolution as the unit-stride result sampled every `stride` pixels.
template <typename T>
void conv_forward_strided(const BasicTensor<T>& padded, const ConvWeights<T>& weights, BasicTensor<T>& out,
                          int stride) {
    const Shape ps = padded.shape();
    const Shape ks = weights.kernel.shape();
    const Shape os = out.shape();
    BasicTensor<T> dense(Shape{os.n, os.c, os.d, ps.h - ks.h + 1, ps.w - ks.w + 1});
    conv_forward_unit_stride(padded, weights, dense);
    for (int n = 0; n < os.n; ++n)
        for (int c = 0; c < os.c; ++c)
            for (int d = 0; d < os.d; ++d)
                for (int h = 0; h < os.h; ++h)
                    for (int w = 0; w < os.w; ++w) out.at(n, c, d, h, w) = dense.at(n, c, d, h * stride, w * stride);
}

template <typename T>
void check_weights(const ConvWeights<T>& weights) {
    if (weights.bias.size() != static_cast<std::size_t>(weights.kernel.shape().n)) {
        throw std::invalid_argument("conv: bias length " + std::to_string(weights.bias.size()) +
                                    " does not match " + std::to_string(weights.kernel.shape().n) + " out groups");
    }
}

}  // namespace

template <typename T>
BasicTensor<T> conv_forward(const BasicTensor<T>& input, const ConvWeights<T>& weights, const PadPolicy& pad,
                            int stride) {
    check_weights(weights);
    const Shape os = conv_output_shape(input.shape(), weights.kernel.shape(), pad, stride);
    const BasicTensor<T> padded = pad_input(input, pad);
    BasicTensor<T> out(os);
    if (stride == 1) {
        conv_forward_unit_stride(padded, weights, out);
    } else {
        conv_forward_strided(padded, weights, out, stride);
    }
    return out;
}

template <typename T>
ConvGrads<T> conv_backward(const BasicTensor<T>& input, const ConvWeights<T>& weights, const PadPolicy& pad,
                           const BasicTensor<T>& gradOut, int stride, bool needInput) {
    check_weights(weights);
    const Shape os = conv_output_shape(input.shape(), weights.kernel.shape(), pad, stride);
    if (gradOut.shape() != os) {
        throw std::invalid_argument("conv_backward: grad_out " + to_string(gradOut.shape()) + " but output is " +
                                    to_string(os));
    }
    const BasicTensor<T> padded = pad_input(input, pad);
    const Shape ps = padded.shape();
    const Shape ks = weights.kernel.shape();
    const int wp = ps.w;

    // Output gradient scattered onto the padded-width grid (stride-aware);
    // columns that correspond to no output stay zero.
    // Extra zero rows let the lane dots below run whole vectors past the end
    // of the span.
    const int gh = (os.h - 1) * stride + 1;
    const int slackRows = static_cast<int>((kLanes<T> - 1 + wp - 1) / wp);
    BasicTensor<T> wide(Shape{os.n, os.c, os.d, gh + slackRows, wp});
    for (int n = 0; n < os.n; ++n)
        for (int c = 0; c < os.c; ++c)
            for (int d = 0; d < os.d; ++d)
                for (int h = 0; h < os.h; ++h)
                    for (int w = 0; w < os.w; ++w)
                        wide.at(n, c, d, h * stride, w * stride) = gradOut.at(n, c, d, h, w);
    const std::size_t span = static_cast<std::size_t>(gh - 1) * wp + (os.w - 1) * stride + 1;

    ConvGrads<T> grads;
    grads.weights.kernel = BasicTensor<T>(ks);
    grads.weights.bias.assign(ks.n, T(0));

    BasicTensor<T> gradPadded;
    const int sp = pad.spatial;
    if (!needInput) {
    } else if (stride == 1 && sp <= ks.h - 1 && sp <= ks.w - 1) {
        // Correlation of the zero-extended output gradient with the flipped,
        // transposed kernel, evaluated on the unpadded spatial extent only.
        const int eh = ks.h - 1 - sp;
        const int ew = ks.w - 1 - sp;
        const Shape gs{os.n, os.c, os.d + 2 * (ks.d - 1), os.h + 2 * eh, os.w + 2 * ew};
        BasicTensor<T> full(gs);
        for (int n = 0; n < os.n; ++n)
            for (int c = 0; c < os.c; ++c)
                for (int d = 0; d < os.d; ++d)
                    for (int h = 0; h < os.h; ++h) {
                        const T* from = &gradOut.at(n, c, d, h, 0);
                        std::copy(from, from + os.w, &full.at(n, c, d + ks.d - 1, h + eh, ew));
                    }
        ConvWeights<T> flipped{BasicTensor<T>(Shape{ks.c, ks.n, ks.d, ks.h, ks.w}), std::vector<T>(ks.c, T(0))};
        for (int oc = 0; oc < ks.n; ++oc)
            for (int ic = 0; ic < ks.c; ++ic)
                for (int kd = 0; kd < ks.d; ++kd)
                    for (int kh = 0; kh < ks.h; ++kh)
                        for (int kw = 0; kw < ks.w; ++kw)
                            flipped.kernel.at(ic, oc, ks.d - 1 - kd, ks.h - 1 - kh, ks.w - 1 - kw) =
                                weights.kernel.at(oc, ic, kd, kh, kw);
        BasicTensor<T> inner(Shape{ps.n, ps.c, ps.d, ps.h - 2 * sp, ps.w - 2 * sp});
        conv_forward_unit_stride(full, flipped, inner);
        grads.input = pad.depth_pad() > 0 ? temporal_extrapolate_backward(inner, pad.temporal, pad.temporalPerSide)
                                          : std::move(inner);
    } else {
        gradPadded = BasicTensor<T>(ps);
        const long inJobs = static_cast<long>(ps.n) * ps.c;
#pragma omp parallel for schedule(static)
        for (long job = 0; job < inJobs; ++job) {
            const int n = static_cast<int>(job / ps.c);
            const int ic = static_cast<int>(job % ps.c);
            for (int dp = 0; dp < ps.d; ++dp)
                for (int oc = 0; oc < ks.n; ++oc)
                    for (int kd = 0; kd < ks.d; ++kd) {
                        const int od = dp - kd;
                        if (od < 0 || od >= os.d) continue;
                        const T* __restrict g = wide.plane(n, oc, od);
                        for (int kh = 0; kh < ks.h; ++kh)
                            for (int kw = 0; kw < ks.w; ++kw) {
                                T* __restrict dst = gradPadded.plane(n, ic, dp) + static_cast<std::size_t>(kh) * wp + kw;
                                const T wv = weights.kernel.at(oc, ic, kd, kh, kw);
                                for (std::size_t i = 0; i < span; ++i) dst[i] += wv * g[i];
                            }
                    }
        }
    }

    // Weight gradient: blocks of 4 out-groups x 4 taps.
    const std::size_t taps = static_cast<std::size_t>(ks.c) * ks.d * ks.h * ks.w;
    std::vector<std::size_t> offs(taps);
    {
        std::size_t r = 0;
        for (int ic = 0; ic < ks.c; ++ic)
            for (int kd = 0; kd < ks.d; ++kd)
                for (int kh = 0; kh < ks.h; ++kh)
                    for (int kw = 0; kw < ks.w; ++kw, ++r)
                        offs[r] = ((static_cast<std::size_t>(ic) * ps.d + kd) * ps.h + kh) * wp + kw;
    }
    // Zero gradient lanes past the span meet finite input values, so rounding
    // the dot length up to whole vectors leaves every product sum unchanged.
    const std::size_t dotLen = (span + kLanes<T> - 1) / kLanes<T> * kLanes<T>;
    std::vector<T> inputSlack(padded.size() + kLanes<T>, T(0));
    std::copy(padded.data(), padded.data() + padded.size(), inputSlack.data());
    const std::size_t batchStride = static_cast<std::size_t>(ps.c) * ps.d * ps.plane();
    constexpr int kBlock = 4;
    const int outBlocks = (ks.n + kBlock - 1) / kBlock;
    const long tapBlocks = static_cast<long>((taps + kBlock - 1) / kBlock);
    const long wJobs = outBlocks * tapBlocks;
    T* gk = grads.weights.kernel.data();
#pragma omp parallel for schedule(static)
    for (long job = 0; job < wJobs; ++job) {
        const int oc0 = static_cast<int>(job / tapBlocks) * kBlock;
        const std::size_t r0 = static_cast<std::size_t>(job % tapBlocks) * kBlock;
        const int nb = std::min(kBlock, ks.n - oc0);
        const int nr = static_cast<int>(std::min<std::size_t>(kBlock, taps - r0));
        Lanes<T> sum[kBlock][kBlock] = {};
        for (int n = 0; n < os.n; ++n)
            for (int od = 0; od < os.d; ++od) {
                const T* base = inputSlack.data() + n * batchStride + static_cast<std::size_t>(od) * ps.plane();
                if (nb == kBlock && nr == kBlock) {
                    lane_dot4x4_acc<T>(wide.plane(n, oc0, od), wide.plane(n, oc0 + 1, od), wide.plane(n, oc0 + 2, od),
                                       wide.plane(n, oc0 + 3, od), base + offs[r0], base + offs[r0 + 1],
                                       base + offs[r0 + 2], base + offs[r0 + 3], dotLen, sum);
                } else {
                    for (int b = 0; b < nb; ++b)
                        for (int k = 0; k < nr; ++k)
                            lane_dot_acc<T>(wide.plane(n, oc0 + b, od), base + offs[r0 + k], dotLen, sum[b][k]);
                }
            }
        for (int b = 0; b < nb; ++b)
            for (int k = 0; k < nr; ++k) gk[static_cast<std::size_t>(oc0 + b) * taps + r0 + k] = sum_lanes<T>(sum[b][k]);
    }
    for (int oc = 0; oc < ks.n; ++oc) {
        T bsum = 0;
        for (int n = 0; n < os.n; ++n)
            for (int od = 0; od < os.d; ++od) {
                const T* g = gradOut.plane(n, oc, od);
                T plane = 0;
                for (std::size_t i = 0; i < os.plane(); ++i) plane += g[i];
                bsum += plane;
            }
        grads.weights.bias[oc] = bsum;
    }

    if (!gradPadded.empty()) grads.input = unpad_grad(gradPadded, pad);
    return grads;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input) {
    BasicTensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
    return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& gradOut) {
    if (input.shape() != gradOut.shape()) {
        throw std::invalid_argument("relu_backward: shape mismatch");
    }
    BasicTensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? gradOut[i] : T(0);
    return out;
}

template <typename T>
BasicTensor<T> temporal_extrapolate(const BasicTensor<T>& input, TemporalPad policy, int perSide) {
    if (policy == TemporalPad::None) return input;
    if (perSide < 1) throw std::invalid_argument("temporal_extrapolate: perSide must be >= 1");
    const Shape s = input.shape();
    BasicTensor<T> out(Shape{s.n, s.c, s.d + 2 * perSide, s.h, s.w});
    const std::size_t plane = s.plane();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int d = 0; d < out.shape().d; ++d) {
                int from = d - perSide;
                if (from < 0 || from >= s.d) {
                    if (policy == TemporalPad::Zero) continue;
                    from = std::clamp(from, 0, s.d - 1);
                }
                const T* src = input.plane(n, c, from);
                std::copy(src, src + plane, out.plane(n, c, d));
            }
    return out;
}

template <typename T>
BasicTensor<T> temporal_extrapolate_backward(const BasicTensor<T>& gradPadded, TemporalPad policy, int perSide) {
    if (policy == TemporalPad::None) return gradPadded;
    const Shape s = gradPadded.shape();
    const int depth = s.d - 2 * perSide;
    if (depth < 1) throw std::invalid_argument("temporal_extrapolate_backward: depth too small");
    BasicTensor<T> out(Shape{s.n, s.c, depth, s.h, s.w});
    const std::size_t plane = s.plane();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int d = 0; d < s.d; ++d) {
                int to = d - perSide;
                if (to < 0 || to >= depth) {
                    if (policy == TemporalPad::Zero) continue;
                    to = std::clamp(to, 0, depth - 1);
                }
                const T* src = gradPadded.plane(n, c, d);
                T* dst = out.plane(n, c, to);
                for (std::size_t i = 0; i < plane; ++i) dst[i] += src[i];
            }
    return out;
}

template <typename T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& input, int scale) {
    const Shape s = input.shape();
    const int block = scale * scale;
    if (scale < 1 || s.c % block != 0) {
        throw std::invalid_argument("pixel_shuffle: " + std::to_string(s.c) + " channels not divisible by " +
                                    std::to_string(block));
    }
    if (s.d != 1) throw std::invalid_argument("pixel_shuffle: depth must be 1");
    BasicTensor<T> out(Shape{s.n, s.c / block, 1, s.h * scale, s.w * scale});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const int oc = c / block;
            const int dy = (c % block) / scale;
            const int dx = (c % block) % scale;
            for (int h = 0; h < s.h; ++h)
                for (int w = 0; w < s.w; ++w) out.at(n, oc, 0, h * scale + dy, w * scale + dx) = input.at(n, c, 0, h, w);
        }
    return out;
}

template <typename T>
BasicTensor<T> pixel_unshuffle(const BasicTensor<T>& input, int scale) {
    const Shape s = input.shape();
    if (scale < 1 || s.h % scale != 0 || s.w % scale != 0 || s.d != 1) {
        throw std::invalid_argument("pixel_unshuffle: extents " + to_string(s) + " not divisible by scale " +
                                    std::to_string(scale));
    }
    const int block = scale * scale;
    BasicTensor<T> out(Shape{s.n, s.c * block, 1, s.h / scale, s.w / scale});
    const Shape os = out.shape();
    for (int n = 0; n < os.n; ++n)
        for (int c = 0; c < os.c; ++c) {
            const int ic = c / block;
            const int dy = (c % block) / scale;
            const int dx = (c % block) % scale;
            for (int h = 0; h < os.h; ++h)
                for (int w = 0; w < os.w; ++w) out.at(n, c, 0, h, w) = input.at(n, ic, 0, h * scale + dy, w * scale + dx);
        }
    return out;
}

#define VSR_INSTANTIATE_OPS(T)                                                                                   \
    template BasicTensor<T> conv_forward(const BasicTensor<T>&, const ConvWeights<T>&, const PadPolicy&, int);   \
    template ConvGrads<T> conv_backward(const BasicTensor<T>&, const ConvWeights<T>&, const PadPolicy&,          \
                                        const BasicTensor<T>&, int, bool);                                       \
    template BasicTensor<T> relu(const BasicTensor<T>&);                                                         \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);                         \
    template BasicTensor<T> temporal_extrapolate(const BasicTensor<T>&, TemporalPad, int);                       \
    template BasicTensor<T> temporal_extrapolate_backward(const BasicTensor<T>&, TemporalPad, int);              \
    template BasicTensor<T> pixel_shuffle(const BasicTensor<T>&, int);                                           \
    template BasicTensor<T> pixel_unshuffle(const BasicTensor<T>&, int);

VSR_INSTANTIATE_OPS(float)
VSR_INSTANTIATE_OPS(double)

}  // namespace vsr
