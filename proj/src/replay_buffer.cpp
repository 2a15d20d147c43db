#include "habsk/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

#include "habsk/binary_io.hpp"
#include "habsk/errors.hpp"

namespace habsk {

void TransitionBatch::clear(std::size_t dim) {
    obs_dim = dim;
    obs.clear();
    actions.clear();
    rewards.clear();
    next_obs.clear();
    done.clear();
}

void TransitionBatch::push(std::span<const float> s, int a, float r, std::span<const float> s_next, bool terminal) {
    if (s.size() != obs_dim || s_next.size() != obs_dim) throw ShapeError("transition has the wrong observation size");
    obs.insert(obs.end(), s.begin(), s.end());
    actions.push_back(a);
    rewards.push_back(r);
    next_obs.insert(next_obs.end(), s_next.begin(), s_next.end());
    done.push_back(terminal ? 1 : 0);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim) : capacity_(capacity), obs_dim_(obs_dim) {
    if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
    if (obs_dim == 0) throw ShapeError("replay observation size must be >= 1");
}

void ReplayBuffer::push(std::span<const float> s, int a, float r, std::span<const float> s_next, bool terminal) {
    if (s.size() != obs_dim_ || s_next.size() != obs_dim_)
        throw ShapeError(fmt::format("transition observation size {} != buffer size {}", s.size(), obs_dim_));
    if (!std::isfinite(r)) throw TrainingError("non-finite reward pushed to the replay buffer");
    if (size_ < capacity_) {
        s_.insert(s_.end(), s.begin(), s.end());
        s_next_.insert(s_next_.end(), s_next.begin(), s_next.end());
        a_.push_back(a);
        r_.push_back(r);
        done_.push_back(terminal ? 1 : 0);
        ++size_;
        head_ = size_ % capacity_;
        return;
    }
    const std::size_t slot = head_;
    std::copy(s.begin(), s.end(), s_.begin() + static_cast<std::ptrdiff_t>(slot * obs_dim_));
    std::copy(s_next.begin(), s_next.end(), s_next_.begin() + static_cast<std::ptrdiff_t>(slot * obs_dim_));
    a_[slot] = a;
    r_[slot] = r;
    done_[slot] = terminal ? 1 : 0;
    head_ = (head_ + 1) % capacity_;
}

std::size_t ReplayBuffer::physical(std::size_t i) const {
    if (i >= size_) throw StateError(fmt::format("replay index {} out of range (size {})", i, size_));
    return size_ < capacity_ ? i : (head_ + i) % capacity_;
}

std::span<const float> ReplayBuffer::state(std::size_t i) const {
    return {s_.data() + physical(i) * obs_dim_, obs_dim_};
}

std::span<const float> ReplayBuffer::next_state(std::size_t i) const {
    return {s_next_.data() + physical(i) * obs_dim_, obs_dim_};
}

int ReplayBuffer::action(std::size_t i) const { return a_[physical(i)]; }
float ReplayBuffer::reward(std::size_t i) const { return r_[physical(i)]; }
bool ReplayBuffer::terminal(std::size_t i) const { return done_[physical(i)] != 0; }

void ReplayBuffer::sample(std::size_t batch, Rng& rng, TransitionBatch& out) const {
    if (batch > size_) throw StateError(fmt::format("cannot sample {} transitions from {}", batch, size_));
    out.clear(obs_dim_);
    // Physical slots are sampled directly; the ring order does not matter here.
    for (std::size_t p : sample_without_replacement(size_, batch, rng)) {
        out.push({s_.data() + p * obs_dim_, obs_dim_}, a_[p], r_[p], {s_next_.data() + p * obs_dim_, obs_dim_},
                 done_[p] != 0);
    }
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    if (k > n) throw StateError("sample size exceeds population");
    std::vector<std::size_t> out;
    out.reserve(k);
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(k * 2);
    for (std::size_t j = n - k; j < n; ++j) {
        const auto t = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(j)));
        const std::size_t pick = chosen.count(t) ? j : t;
        chosen.insert(pick);
        out.push_back(pick);
    }
    return out;
}

void ReplayBuffer::serialize(std::ostream& os) const {
    binio::write_u64(os, capacity_);
    binio::write_u64(os, obs_dim_);
    binio::write_u64(os, head_);
    binio::write_u64(os, size_);
    binio::write_f32_span<float>(os, s_);
    binio::write_f32_span<float>(os, s_next_);
    for (std::int32_t a : a_) binio::write_u64(os, static_cast<std::uint64_t>(a));
    binio::write_f32_span<float>(os, r_);
    os.write(reinterpret_cast<const char*>(done_.data()), static_cast<std::streamsize>(done_.size()));
}

void ReplayBuffer::deserialize(std::istream& is) {
    capacity_ = binio::read_u64(is);
    obs_dim_ = binio::read_u64(is);
    head_ = binio::read_u64(is);
    size_ = binio::read_u64(is);
    if (capacity_ == 0 || size_ > capacity_ || head_ >= capacity_) throw DataError("corrupt replay buffer header");
    s_.resize(size_ * obs_dim_);
    s_next_.resize(size_ * obs_dim_);
    binio::read_f32_into<float>(is, s_);
    binio::read_f32_into<float>(is, s_next_);
    a_.resize(size_);
    for (auto& a : a_) a = static_cast<std::int32_t>(binio::read_u64(is));
    r_.resize(size_);
    binio::read_f32_into<float>(is, r_);
    done_.resize(size_);
    if (!is.read(reinterpret_cast<char*>(done_.data()), static_cast<std::streamsize>(size_)))
        throw DataError("truncated replay buffer");
}

}  // namespace habsk
