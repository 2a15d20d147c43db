#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "habsk/errors.hpp"
#include "habsk/rng.hpp"

namespace habsk {

/// Fully connected network: ReLU on hidden layers, identity on the output.
///
/// Parameters live in one flat vector. Layer l stores its weight matrix
/// W_l (out x in, row-major) followed by its bias b_l (out). The flat layout
/// makes target syncs, optimizer updates and checkpoints plain copies.
template <typename Scalar>
class Mlp {
public:
    Mlp() = default;

    /// `sizes` = {input, hidden..., output}; at least two entries.
    explicit Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
        if (sizes_.size() < 2) throw ShapeError("an MLP needs at least input and output sizes");
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw ShapeError("MLP layer sizes must be positive");
            offsets_.push_back(n);
            n += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
        }
        params_.assign(n, Scalar{0});
    }

    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    std::size_t input_size() const noexcept { return sizes_.front(); }
    std::size_t output_size() const noexcept { return sizes_.back(); }
    std::size_t layer_count() const noexcept { return offsets_.size(); }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    std::span<Scalar> parameters() noexcept { return params_; }
    std::span<const Scalar> parameters() const noexcept { return params_; }

    /// He-uniform weights, zero biases.
    void initialize(Rng& rng) {
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const std::size_t in = sizes_[l], out = sizes_[l + 1];
            const double bound = std::sqrt(6.0 / static_cast<double>(in));
            Scalar* w = weights(l);
            for (std::size_t i = 0; i < in * out; ++i) w[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
            Scalar* b = bias(l);
            for (std::size_t i = 0; i < out; ++i) b[i] = Scalar{0};
        }
    }

    /// Single-sample forward pass.
    void forward(std::span<const Scalar> x, std::span<Scalar> out) const {
        if (x.size() != input_size())
            throw ShapeError("observation length " + std::to_string(x.size()) + " does not match network input " +
                             std::to_string(input_size()));
        if (out.size() != output_size()) throw ShapeError("output buffer has the wrong length");
        thread_local std::vector<Scalar> a, b;
        a.assign(x.begin(), x.end());
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const bool last = l + 1 == layer_count();
            b.resize(sizes_[l + 1]);
            affine(l, a.data(), b.data());
            if (!last)
                for (auto& z : b) z = z > Scalar{0} ? z : Scalar{0};
            std::swap(a, b);
        }
        std::copy(a.begin(), a.end(), out.begin());
    }

    /// Mean squared TD error over a batch, restricted to the taken action:
    ///   L = (1/B) Σ_b (Q(x_b)[a_b] - y_b)^2
    /// Writes dL/dθ into `grad` (same layout as parameters()). `inputs` is
    /// B x input_size row-major.
    Scalar loss_and_gradient(std::span<const Scalar> inputs, std::span<const int> actions,
                             std::span<const Scalar> targets, std::span<Scalar> grad) const {
        const std::size_t batch = actions.size();
        if (batch == 0 || inputs.size() != batch * input_size() || targets.size() != batch)
            throw ShapeError("inconsistent batch shapes");
        if (grad.size() != params_.size()) throw ShapeError("gradient buffer has the wrong length");
        std::fill(grad.begin(), grad.end(), Scalar{0});

        const std::size_t L = layer_count();
        // acts[l] holds the input to layer l (post-activation of layer l-1).
        thread_local std::vector<std::vector<Scalar>> acts;
        acts.resize(L + 1);
        acts[0].assign(inputs.begin(), inputs.end());
        for (std::size_t l = 0; l < L; ++l) {
            const std::size_t in = sizes_[l], out = sizes_[l + 1];
            acts[l + 1].resize(batch * out);
            for (std::size_t s = 0; s < batch; ++s) {
                Scalar* z = acts[l + 1].data() + s * out;
                affine(l, acts[l].data() + s * in, z);
                if (l + 1 < L)
                    for (std::size_t o = 0; o < out; ++o) z[o] = z[o] > Scalar{0} ? z[o] : Scalar{0};
            }
        }

        const std::size_t n_out = output_size();
        thread_local std::vector<Scalar> delta, prev;
        delta.assign(batch * n_out, Scalar{0});
        Scalar loss{0};
        const Scalar inv_b = Scalar{1} / static_cast<Scalar>(batch);
        for (std::size_t s = 0; s < batch; ++s) {
            const int a = actions[s];
            if (a < 0 || static_cast<std::size_t>(a) >= n_out) throw ShapeError("action index out of range");
            const Scalar err = acts[L][s * n_out + static_cast<std::size_t>(a)] - targets[s];
            loss += err * err;
            delta[s * n_out + static_cast<std::size_t>(a)] = Scalar{2} * err * inv_b;
        }
        loss *= inv_b;

        for (std::size_t l = L; l-- > 0;) {
            const std::size_t in = sizes_[l], out = sizes_[l + 1];
            Scalar* gw = grad.data() + offsets_[l];
            Scalar* gb = gw + in * out;
            const Scalar* w = weights(l);
            const bool need_prev = l > 0;
            if (need_prev) prev.assign(batch * in, Scalar{0});
            for (std::size_t s = 0; s < batch; ++s) {
                const Scalar* h = acts[l].data() + s * in;
                const Scalar* d = delta.data() + s * out;
                Scalar* dp = need_prev ? prev.data() + s * in : nullptr;
                for (std::size_t o = 0; o < out; ++o) {
                    const Scalar dv = d[o];
                    if (dv == Scalar{0}) continue;
                    gb[o] += dv;
                    Scalar* gwo = gw + o * in;
                    const Scalar* wo = w + o * in;
                    for (std::size_t i = 0; i < in; ++i) gwo[i] += dv * h[i];
                    if (dp)
                        for (std::size_t i = 0; i < in; ++i) dp[i] += dv * wo[i];
                }
                if (dp)  // ReLU derivative on the previous layer's output
                    for (std::size_t i = 0; i < in; ++i)
                        if (!(h[i] > Scalar{0})) dp[i] = Scalar{0};
            }
            if (need_prev) std::swap(delta, prev);
        }
        return loss;
    }

    friend bool operator==(const Mlp& a, const Mlp& b) { return a.sizes_ == b.sizes_ && a.params_ == b.params_; }

private:
    Scalar* weights(std::size_t l) noexcept { return params_.data() + offsets_[l]; }
    const Scalar* weights(std::size_t l) const noexcept { return params_.data() + offsets_[l]; }
    Scalar* bias(std::size_t l) noexcept { return weights(l) + sizes_[l] * sizes_[l + 1]; }
    const Scalar* bias(std::size_t l) const noexcept { return weights(l) + sizes_[l] * sizes_[l + 1]; }

    void affine(std::size_t l, const Scalar* x, Scalar* z) const noexcept {
        const std::size_t in = sizes_[l], out = sizes_[l + 1];
        const Scalar* w = weights(l);
        const Scalar* b = bias(l);
        for (std::size_t o = 0; o < out; ++o) {
            const Scalar* wo = w + o * in;
            Scalar acc{0};
#pragma omp simd reduction(+ : acc)
            for (std::size_t i = 0; i < in; ++i) acc += wo[i] * x[i];
            z[o] = acc + b[o];
        }
    }

    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::vector<Scalar> params_;
};

using QNetwork = Mlp<float>;

/// Adam with bias correction.
template <typename Scalar>
class Adam {
public:
    Adam() = default;
    Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, Scalar{0}), v_(n, Scalar{0}) {}

    void step(std::span<Scalar> params, std::span<const Scalar> grad, double lr) {
        if (params.size() != m_.size() || grad.size() != m_.size()) throw ShapeError("optimizer size mismatch");
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        const auto b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
        const auto step_size = static_cast<Scalar>(lr / c1);
        const auto inv_sqrt_c2 = static_cast<Scalar>(1.0 / std::sqrt(c2));
        const auto eps = static_cast<Scalar>(eps_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Scalar g = grad[i];
            m_[i] = b1 * m_[i] + (Scalar{1} - b1) * g;
            v_[i] = b2 * v_[i] + (Scalar{1} - b2) * g * g;
            params[i] -= step_size * m_[i] / (std::sqrt(v_[i]) * inv_sqrt_c2 + eps);
        }
    }

    std::int64_t steps() const noexcept { return t_; }
    std::vector<Scalar>& first_moment() noexcept { return m_; }
    std::vector<Scalar>& second_moment() noexcept { return v_; }
    const std::vector<Scalar>& first_moment() const noexcept { return m_; }
    const std::vector<Scalar>& second_moment() const noexcept { return v_; }
    void set_steps(std::int64_t t) noexcept { t_ = t; }

private:
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::vector<Scalar> m_;
    std::vector<Scalar> v_;
    std::int64_t t_ = 0;
};

}  // namespace habsk
