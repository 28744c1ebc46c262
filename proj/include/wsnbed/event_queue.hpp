#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace wsnbed {

/// Simulation time in milliseconds.
using SimTime = double;

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Min-queue ordered by (time, sequence). Sequence numbers are assigned at
 * insertion, so events scheduled for the same instant pop in insertion order.
 */
template <typename Payload>
class EventQueue {
public:
    struct Entry {
        SimTime time = 0;
        std::uint64_t seq = 0;
        Payload payload;
    };

    std::uint64_t push(SimTime time, Payload payload) {
        if (time < now_) {
            throw SimulationError("event scheduled in the past: " + std::to_string(time) + " < " +
                                  std::to_string(now_));
        }
        const std::uint64_t seq = next_seq_++;
        heap_.push(Entry{time, seq, std::move(payload)});
        return seq;
    }

    /// Pops the next entry and advances the clock; nullopt signals end of simulation.
    std::optional<Entry> pop() {
        if (heap_.empty()) return std::nullopt;
        Entry e = heap_.top();
        heap_.pop();
        now_ = e.time;
        return e;
    }

    std::optional<SimTime> peek_time() const {
        if (heap_.empty()) return std::nullopt;
        return heap_.top().time;
    }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    SimTime now() const { return now_; }

    /// Moves the clock forward without an event (idle time at the end of a run).
    void advance_to(SimTime t) {
        if (t < now_) throw SimulationError("clock cannot move backwards");
        if (auto next = peek_time(); next && *next < t) {
            throw SimulationError("cannot skip over pending events");
        }
        now_ = t;
    }

private:
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t next_seq_ = 0;
    SimTime now_ = 0;
};

}  // namespace wsnbed
