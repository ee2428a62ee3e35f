#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gridweave/core.hpp"
#include "gridweave/rng.hpp"

namespace gridweave::agents {

/// One-hidden-layer perceptron with tanh activation and a linear head.
/// Weights are plain dense arrays so updates stay transparent.
struct MlpParams {
    int in = 0;
    int hidden = 0;
    int out = 0;
    std::vector<double> w1; // hidden x in, row-major
    std::vector<double> b1; // hidden
    std::vector<double> w2; // out x hidden, row-major
    std::vector<double> b2; // out

    static MlpParams init(int in, int hidden, int out, rng::SplitMix64& g) {
        MlpParams p;
        p.in = in;
        p.hidden = hidden;
        p.out = out;
        double s1 = 1.0 / std::sqrt(static_cast<double>(in));
        double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
        p.w1.resize(static_cast<size_t>(hidden) * in);
        p.b1.assign(static_cast<size_t>(hidden), 0.0);
        p.w2.resize(static_cast<size_t>(out) * hidden);
        p.b2.assign(static_cast<size_t>(out), 0.0);
        for (auto& w : p.w1) w = g.uniform(-s1, s1);
        for (auto& w : p.w2) w = g.uniform(-s2, s2);
        return p;
    }

    size_t size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

    bool finite() const {
        auto ok = [](const std::vector<double>& v) {
            for (double x : v)
                if (!std::isfinite(x)) return false;
            return true;
        };
        return ok(w1) && ok(b1) && ok(w2) && ok(b2);
    }
};

/// Gradient accumulator with the same layout as the parameters.
struct MlpGrads {
    std::vector<double> w1, b1, w2, b2;

    explicit MlpGrads(const MlpParams& p)
        : w1(p.w1.size(), 0.0),
          b1(p.b1.size(), 0.0),
          w2(p.w2.size(), 0.0),
          b2(p.b2.size(), 0.0) {}

    void add(const MlpGrads& o) {
        for (size_t i = 0; i < w1.size(); ++i) w1[i] += o.w1[i];
        for (size_t i = 0; i < b1.size(); ++i) b1[i] += o.b1[i];
        for (size_t i = 0; i < w2.size(); ++i) w2[i] += o.w2[i];
        for (size_t i = 0; i < b2.size(); ++i) b2[i] += o.b2[i];
    }

    bool finite() const {
        auto ok = [](const std::vector<double>& v) {
            for (double x : v)
                if (!std::isfinite(x)) return false;
            return true;
        };
        return ok(w1) && ok(b1) && ok(w2) && ok(b2);
    }
};

/// Gradient step: params += scale * grads. Plain SGD, no momentum.
inline void apply(MlpParams& p, const MlpGrads& g, double scale) {
    for (size_t i = 0; i < p.w1.size(); ++i) p.w1[i] += scale * g.w1[i];
    for (size_t i = 0; i < p.b1.size(); ++i) p.b1[i] += scale * g.b1[i];
    for (size_t i = 0; i < p.w2.size(); ++i) p.w2[i] += scale * g.w2[i];
    for (size_t i = 0; i < p.b2.size(); ++i) p.b2[i] += scale * g.b2[i];
}

/// Forward pass; `hidden` receives the tanh activations (needed for the
/// backward pass), `out` the linear head values.
inline void forward(const MlpParams& p, std::span<const double> x,
                    std::vector<double>& hidden, std::vector<double>& out) {
    if (static_cast<int>(x.size()) != p.in)
        throw RunError("observation dimension " + std::to_string(x.size()) +
                       " does not match network input " + std::to_string(p.in));
    hidden.assign(static_cast<size_t>(p.hidden), 0.0);
    for (int h = 0; h < p.hidden; ++h) {
        const double* row = &p.w1[static_cast<size_t>(h) * p.in];
        double acc = p.b1[static_cast<size_t>(h)];
        for (int i = 0; i < p.in; ++i) acc += row[i] * x[static_cast<size_t>(i)];
        hidden[static_cast<size_t>(h)] = std::tanh(acc);
    }
    out.assign(static_cast<size_t>(p.out), 0.0);
    for (int o = 0; o < p.out; ++o) {
        const double* row = &p.w2[static_cast<size_t>(o) * p.hidden];
        double acc = p.b2[static_cast<size_t>(o)];
        for (int h = 0; h < p.hidden; ++h) acc += row[h] * hidden[static_cast<size_t>(h)];
        out[static_cast<size_t>(o)] = acc;
    }
}

/// Accumulate gradients for one sample given dL/d(out). `hidden` must be
/// the activations produced by forward() for the same input.
inline void backward(const MlpParams& p, std::span<const double> x,
                     std::span<const double> hidden, std::span<const double> dout,
                     MlpGrads& g) {
    std::vector<double> dhidden(static_cast<size_t>(p.hidden), 0.0);
    for (int o = 0; o < p.out; ++o) {
        double d = dout[static_cast<size_t>(o)];
        if (d == 0.0) continue;
        double* wrow = &g.w2[static_cast<size_t>(o) * p.hidden];
        const double* prow = &p.w2[static_cast<size_t>(o) * p.hidden];
        for (int h = 0; h < p.hidden; ++h) {
            wrow[h] += d * hidden[static_cast<size_t>(h)];
            dhidden[static_cast<size_t>(h)] += d * prow[h];
        }
        g.b2[static_cast<size_t>(o)] += d;
    }
    for (int h = 0; h < p.hidden; ++h) {
        double hv = hidden[static_cast<size_t>(h)];
        double dz = dhidden[static_cast<size_t>(h)] * (1.0 - hv * hv);
        if (dz == 0.0) continue;
        double* wrow = &g.w1[static_cast<size_t>(h) * p.in];
        for (int i = 0; i < p.in; ++i) wrow[i] += dz * x[static_cast<size_t>(i)];
        g.b1[static_cast<size_t>(h)] += dz;
    }
}

/// Numerically stable softmax.
inline std::vector<double> softmax(std::span<const double> logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

} // namespace gridweave::agents
