#pragma once

/**
 * @file frame.hpp
 * @brief Encoder and stream decoder for the sensor-network wire frame.
 *
 * Frame format:
 * ┌──────────┬──────────┬──────────────┬──────────┐
 * │ Header   │ Node ID  │ Payload      │ Checksum │
 * │ 0xFF     │ 1..254   │ L bytes      │ 1 byte   │
 * └──────────┴──────────┴──────────────┴──────────┘
 *
 * - There is no length field. L is looked up per node ID in a PayloadRegistry.
 * - Checksum = (node_id + sum(payload)) mod 256. The header is not summed.
 * - The decoder resynchronizes by skipping exactly one byte past a rejected
 *   header candidate, so a 0xFF inside a corrupted region can still open a
 *   valid frame.
 */

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wsnbed {

using Byte = std::uint8_t;
using Bytes = std::vector<Byte>;

inline constexpr Byte kHeaderByte = 0xFF;
inline constexpr std::size_t kMaxPayload = 8;
/// Parser buffer bound; older bytes are dropped and counted as resync skips.
inline constexpr std::size_t kMaxBufferedBytes = 64;

/// Node IDs fixed by the network layout.
inline constexpr Byte kLab1NodeId = 1;
inline constexpr Byte kLab2NodeId = 2;
inline constexpr Byte kRobotNodeId = 3;

/// Raised when a caller hands the codec a value that breaks a frame invariant.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline bool valid_node_id(int node_id) noexcept { return node_id >= 1 && node_id <= 254; }

inline Byte compute_checksum(int node_id, std::span<const Byte> payload) {
    if (!valid_node_id(node_id)) {
        throw ContractViolation("node id " + std::to_string(node_id) + " outside 1..254");
    }
    if (payload.empty() || payload.size() > kMaxPayload) {
        throw ContractViolation("payload length " + std::to_string(payload.size()) + " outside 1..8");
    }
    unsigned sum = static_cast<unsigned>(node_id);
    for (Byte b : payload) sum += b;
    return static_cast<Byte>(sum & 0xFFu);
}

struct Frame {
    Byte node_id = 0;
    Bytes payload;

    Frame() = default;
    Frame(Byte id, Bytes data) : node_id(id), payload(std::move(data)) {}

    Byte checksum() const { return compute_checksum(node_id, payload); }

    friend bool operator==(const Frame&, const Frame&) = default;
};

enum class PayloadKind { Temperature, RobotPosition, RobotCommand };

inline const char* to_string(PayloadKind kind) {
    switch (kind) {
        case PayloadKind::Temperature: return "temperature";
        case PayloadKind::RobotPosition: return "robot-position";
        case PayloadKind::RobotCommand: return "robot-command";
    }
    return "unknown";
}

struct PayloadSpec {
    std::size_t length = 1;
    PayloadKind kind = PayloadKind::Temperature;
};

/// Per-node payload layout. The wire carries no length, so both ends must agree on this.
class PayloadRegistry {
public:
    void add(Byte node_id, PayloadSpec spec) {
        if (!valid_node_id(node_id)) {
            throw ContractViolation("cannot register node id " + std::to_string(node_id));
        }
        if (spec.length == 0 || spec.length > kMaxPayload) {
            throw ContractViolation("registered payload length must be in 1..8");
        }
        if (!entries_.emplace(node_id, spec).second) {
            throw ContractViolation("node id " + std::to_string(node_id) + " registered twice");
        }
    }

    std::optional<PayloadSpec> find(Byte node_id) const {
        auto it = entries_.find(node_id);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(Byte node_id) const { return entries_.count(node_id) != 0; }
    const std::map<Byte, PayloadSpec>& entries() const { return entries_; }

    /// Two lab temperature nodes and the robot's position reports.
    static PayloadRegistry uplink_default() {
        PayloadRegistry r;
        r.add(kLab1NodeId, {1, PayloadKind::Temperature});
        r.add(kLab2NodeId, {1, PayloadKind::Temperature});
        r.add(kRobotNodeId, {2, PayloadKind::RobotPosition});
        return r;
    }

    /// What the robot's serial endpoint accepts: waypoint commands addressed to it.
    static PayloadRegistry robot_downlink() {
        PayloadRegistry r;
        r.add(kRobotNodeId, {2, PayloadKind::RobotCommand});
        return r;
    }

private:
    std::map<Byte, PayloadSpec> entries_;
};

inline Bytes encode_frame(const Frame& frame) {
    const Byte sum = frame.checksum();
    Bytes out;
    out.reserve(frame.payload.size() + 3);
    out.push_back(kHeaderByte);
    out.push_back(frame.node_id);
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    out.push_back(sum);
    return out;
}

/// Encodes after checking the payload length against the registry.
inline Bytes encode_frame(const Frame& frame, const PayloadRegistry& registry) {
    auto spec = registry.find(frame.node_id);
    if (!spec) {
        throw ContractViolation("node id " + std::to_string(frame.node_id) + " not registered");
    }
    if (spec->length != frame.payload.size()) {
        throw ContractViolation("payload length does not match registry for node " +
                                std::to_string(frame.node_id));
    }
    return encode_frame(frame);
}

struct ParserState {
    Bytes buffer;
    std::uint64_t frames_ok = 0;
    std::uint64_t checksum_failures = 0;
    /// Bytes discarded while hunting for a header (garbage, rejected candidates, overflow).
    std::uint64_t resync_skips = 0;
    std::uint64_t unregistered_ids = 0;
};

/**
 * Feeds `incoming` into the parser and returns every complete, valid frame.
 * Incomplete trailing data stays buffered for the next call.
 */
inline std::vector<Frame> decode_stream(ParserState& state, std::span<const Byte> incoming,
                                        const PayloadRegistry& registry) {
    std::vector<Frame> frames;
    Bytes& buf = state.buffer;
    buf.insert(buf.end(), incoming.begin(), incoming.end());

    std::size_t pos = 0;
    while (pos < buf.size()) {
        if (buf[pos] != kHeaderByte) {
            ++pos;
            ++state.resync_skips;
            continue;
        }
        if (pos + 1 >= buf.size()) break;  // need the id byte

        const Byte id = buf[pos + 1];
        auto spec = registry.find(id);
        if (!spec) {
            ++state.unregistered_ids;
            ++state.resync_skips;
            ++pos;
            continue;
        }
        const std::size_t frame_len = spec->length + 3;
        if (pos + frame_len > buf.size()) break;  // incomplete, keep buffered

        std::span<const Byte> payload(buf.data() + pos + 2, spec->length);
        const Byte wire_sum = buf[pos + frame_len - 1];
        if (compute_checksum(id, payload) != wire_sum) {
            ++state.checksum_failures;
            ++state.resync_skips;
            ++pos;
            continue;
        }
        frames.emplace_back(id, Bytes(payload.begin(), payload.end()));
        ++state.frames_ok;
        pos += frame_len;
    }
    buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(pos));

    if (buf.size() > kMaxBufferedBytes) {
        const std::size_t excess = buf.size() - kMaxBufferedBytes;
        state.resync_skips += excess;
        buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(excess));
    }
    return frames;
}

/// Space-separated uppercase hex, e.g. "FF 01 20 21".
inline std::string hex_dump(std::span<const Byte> bytes) {
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(bytes.size() * 3);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (i) out.push_back(' ');
        out.push_back(digits[bytes[i] >> 4]);
        out.push_back(digits[bytes[i] & 0x0F]);
    }
    return out;
}

}  // namespace wsnbed
