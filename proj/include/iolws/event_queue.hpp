#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "iolws/error.hpp"

namespace iolws::sim {

using SimTime = std::chrono::microseconds;

/// Ordering class for events sharing a timestamp. Timer expiries are
/// `Late`: they run after every regular event of the same instant.
enum class Priority : std::uint8_t { Normal = 0, Late = 1 };

/// Min-heap of timestamped events. Pops in (time, priority, insertion
/// order); never hands out an event older than the last one popped.
template <typename Payload>
class EventQueue {
public:
    struct Entry {
        SimTime at{0};
        Priority priority = Priority::Normal;
        std::uint64_t seq = 0;
        Payload payload;
    };

    void push(SimTime at, Payload payload, Priority priority = Priority::Normal)
    {
        if (at < now_) throw Error(ErrorCode::InvalidParameter, "event scheduled before the current time");
        heap_.push_back(Entry{at, priority, next_seq_++, std::move(payload)});
        std::push_heap(heap_.begin(), heap_.end(), later);
    }

    Entry pop()
    {
        std::pop_heap(heap_.begin(), heap_.end(), later);
        Entry e = std::move(heap_.back());
        heap_.pop_back();
        now_ = e.at;
        return e;
    }

    const Entry& top() const { return heap_.front(); }
    bool empty() const noexcept { return heap_.empty(); }
    std::size_t size() const noexcept { return heap_.size(); }
    SimTime now() const noexcept { return now_; }

private:
    static bool later(const Entry& a, const Entry& b)
    {
        if (a.at != b.at) return a.at > b.at;
        if (a.priority != b.priority) return a.priority > b.priority;
        return a.seq > b.seq;
    }

    std::vector<Entry> heap_;
    std::uint64_t next_seq_ = 0;
    SimTime now_{0};
};

} // namespace iolws::sim
