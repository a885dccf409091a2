#include "vsr/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vsr {
namespace {

void check_pair(const Plane& a, const Plane& b, int border) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("metric: geometry mismatch " + std::to_string(a.width) + "x" +
                                    std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                    std::to_string(b.height));
    }
    if (border < 0 || 2 * border >= a.width || 2 * border >= a.height) {
        throw std::invalid_argument("metric: border " + std::to_string(border) + " leaves no pixels");
    }
}

}  // namespace

double psnr(const Plane& a, const Plane& b, int border) {
    check_pair(a, b, border);
    double sum = 0.0;
    for (int y = border; y < a.height - border; ++y)
        for (int x = border; x < a.width - border; ++x) {
            const double d = static_cast<double>(a.at(x, y)) - b.at(x, y);
            sum += d * d;
        }
    const double count = static_cast<double>(a.width - 2 * border) * (a.height - 2 * border);
    const double mse = sum / count;
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double psnr(const Frame& a, const Frame& b, int border) { return psnr(a.luma, b.luma, border); }

std::vector<double> gaussian_window(const SsimParams& p) {
    std::vector<double> g(p.window);
    const double mid = (p.window - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < p.window; ++i) {
        const double x = i - mid;
        g[i] = std::exp(-(x * x) / (2.0 * p.sigma * p.sigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

double ssim(const Plane& a, const Plane& b, int border, const SsimParams& p) {
    check_pair(a, b, border);
    const int w = a.width - 2 * border;
    const int h = a.height - 2 * border;
    if (w < p.window || h < p.window) {
        throw std::invalid_argument("ssim: image smaller than the " + std::to_string(p.window) + "px window");
    }
    const auto g = gaussian_window(p);
    const int ow = w - p.window + 1;
    const int oh = h - p.window + 1;

    // Horizontal pass for x, y, x^2, y^2, xy.
    const std::size_t rowCount = static_cast<std::size_t>(h) * ow;
    std::vector<double> hx(rowCount), hy(rowCount), hxx(rowCount), hyy(rowCount), hxy(rowCount);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int k = 0; k < p.window; ++k) {
                const double va = a.at(border + x + k, border + y);
                const double vb = b.at(border + x + k, border + y);
                sx += g[k] * va;
                sy += g[k] * vb;
                sxx += g[k] * va * va;
                syy += g[k] * vb * vb;
                sxy += g[k] * (va * vb);
            }
            const std::size_t i = static_cast<std::size_t>(y) * ow + x;
            hx[i] = sx;
            hy[i] = sy;
            hxx[i] = sxx;
            hyy[i] = syy;
            hxy[i] = sxy;
        }

    const double c1 = (p.k1 * p.range) * (p.k1 * p.range);
    const double c2 = (p.k2 * p.range) * (p.k2 * p.range);
    double total = 0.0;
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int k = 0; k < p.window; ++k) {
                const std::size_t i = static_cast<std::size_t>(y + k) * ow + x;
                mx += g[k] * hx[i];
                my += g[k] * hy[i];
                mxx += g[k] * hxx[i];
                myy += g[k] * hyy[i];
                mxy += g[k] * hxy[i];
            }
            const double vx = mxx - mx * mx;
            const double vy = myy - my * my;
            const double cov = mxy - mx * my;
            total += ((2 * (mx * my) + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    return total / (static_cast<double>(ow) * oh);
}

double ssim(const Frame& a, const Frame& b, int border, const SsimParams& p) {
    return ssim(a.luma, b.luma, border, p);
}

}  // namespace vsr
