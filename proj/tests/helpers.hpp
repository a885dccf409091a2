#pragma once

#include <cmath>

#include "vsr/random.hpp"
#include "vsr/tensor.hpp"
#include "vsr/frame.hpp"

namespace vsr::test {

template <typename T>
BasicTensor<T> random_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Rng rng(seed);
    BasicTensor<T> t(s);
    for (T& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

inline Plane random_plane(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    Plane p(w, h);
    for (float& v : p.data) v = static_cast<float>(rng.uniform());
    return p;
}

template <typename A, typename B>
double max_abs_diff(const A& a, const B& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
    return m;
}

}  // namespace vsr::test
