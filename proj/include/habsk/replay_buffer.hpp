#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "habsk/rng.hpp"

namespace habsk {

/// A batch of transitions in flat row-major storage, ready for the network.
struct TransitionBatch {
    std::size_t obs_dim = 0;
    std::vector<float> obs;       // size x obs_dim
    std::vector<int> actions;
    std::vector<float> rewards;
    std::vector<float> next_obs;  // size x obs_dim
    std::vector<std::uint8_t> done;

    std::size_t size() const noexcept { return actions.size(); }
    void clear(std::size_t dim);
    void push(std::span<const float> s, int a, float r, std::span<const float> s_next, bool terminal);
};

/// Fixed-capacity ring of normalized transitions. Storage grows on demand
/// up to the capacity, then the oldest entry is overwritten.
class ReplayBuffer {
public:
    ReplayBuffer() = default;
    ReplayBuffer(std::size_t capacity, std::size_t obs_dim);

    void push(std::span<const float> s, int a, float r, std::span<const float> s_next, bool terminal);

    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t obs_dim() const noexcept { return obs_dim_; }

    /// Logical index: 0 is the oldest stored transition.
    std::span<const float> state(std::size_t i) const;
    std::span<const float> next_state(std::size_t i) const;
    int action(std::size_t i) const;
    float reward(std::size_t i) const;
    bool terminal(std::size_t i) const;

    /// Uniform sample of `batch` distinct transitions.
    void sample(std::size_t batch, Rng& rng, TransitionBatch& out) const;

    void serialize(std::ostream& os) const;
    void deserialize(std::istream& is);

    friend bool operator==(const ReplayBuffer&, const ReplayBuffer&) = default;

private:
    std::size_t physical(std::size_t i) const;

    std::size_t capacity_ = 0;
    std::size_t obs_dim_ = 0;
    std::size_t head_ = 0;  // next slot to write once full
    std::size_t size_ = 0;
    std::vector<float> s_;
    std::vector<float> s_next_;
    std::vector<std::int32_t> a_;
    std::vector<float> r_;
    std::vector<std::uint8_t> done_;
};

/// Floyd's algorithm: `k` distinct integers from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace habsk
