#pragma once

/**
 * @file gateway.hpp
 * @brief Coordinator-side monitor: decodes the coordinator's byte stream,
 * keeps the latest value per source, and writes one CSV row per reading.
 *
 * CSV layout (one header line, then data):
 *
 *   Date and Time,millis since start,Temp in Lab1,Temp in Lab2,Robot's position_X,Robot's position_Y
 *   1/23/2013/18:8:19,2093,32,28,1,0
 *
 * Dates are M/D/YYYY/H:M:S with no zero padding. Columns without a fresh
 * reading repeat their last value; a column that never had one logs 0.
 */

#include "wsnbed/frame.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wsnbed {

inline constexpr const char* kCsvHeader =
    "Date and Time,millis since start,Temp in Lab1,Temp in Lab2,Robot's position_X,Robot's position_Y";

/// Wall-clock instant, millisecond resolution, no time zone.
struct CivilTime {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;
    int millisecond = 0;
};

using SysMillis = std::chrono::sys_time<std::chrono::milliseconds>;

inline SysMillis to_sys(const CivilTime& c) {
    using namespace std::chrono;
    const sys_days day = year{c.year} / month{c.month} / std::chrono::day{c.day};
    return day + hours{c.hour} + minutes{c.minute} + seconds{c.second} + milliseconds{c.millisecond};
}

inline CivilTime from_sys(SysMillis t) {
    using namespace std::chrono;
    const sys_days day = floor<days>(t);
    const year_month_day ymd{day};
    hh_mm_ss<milliseconds> tod{t - day};
    return CivilTime{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), static_cast<int>(tod.hours().count()),
                     static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()),
                     static_cast<int>(tod.subseconds().count())};
}

/// Parses "YYYY-MM-DDTHH:MM:SS[.mmm]".
inline CivilTime parse_civil_time(const std::string& text) {
    CivilTime c;
    int ms = 0;
    char sep = 0;
    const int n = std::sscanf(text.c_str(), "%d-%u-%u%c%d:%d:%d.%d", &c.year, &c.month, &c.day, &sep, &c.hour,
                              &c.minute, &c.second, &ms);
    if (n < 7 || (sep != 'T' && sep != ' ')) throw std::invalid_argument("bad timestamp: " + text);
    c.millisecond = n == 8 ? ms : 0;
    return c;
}

/// Renders as M/D/YYYY/H:M:S, e.g. 1/23/2013/18:8:19.
inline std::string format_log_time(const CivilTime& c) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%u/%u/%d/%d:%d:%d", c.month, c.day, c.year, c.hour, c.minute, c.second);
    return buf;
}

enum class ReadingKind { Temperature, RobotPosition };

struct SensorReading {
    Byte node_id = 0;
    ReadingKind kind = ReadingKind::Temperature;
    int value = 0;  // temperature in degrees
    int x = 0;      // robot position, meters
    int y = 0;
    std::int64_t arrival_ms = 0;
};

struct NodeStatus {
    std::int64_t last_seen_ms = 0;
    bool stale = false;
};

struct LiveState {
    std::optional<int> temp_lab1;
    std::optional<int> temp_lab2;
    std::optional<std::pair<int, int>> robot_xy;
    std::map<Byte, NodeStatus> nodes;
    std::uint64_t frames_ok = 0;
    std::uint64_t checksum_failures = 0;
    std::uint64_t resync_skips = 0;
    std::uint64_t readings = 0;
};

struct LogRecord {
    std::string date_time;
    std::int64_t millis = 0;
    int temp1 = 0;
    int temp2 = 0;
    int robot_x = 0;
    int robot_y = 0;
};

inline std::string format_csv_line(const LogRecord& r) {
    return r.date_time + ',' + std::to_string(r.millis) + ',' + std::to_string(r.temp1) + ',' +
           std::to_string(r.temp2) + ',' + std::to_string(r.robot_x) + ',' + std::to_string(r.robot_y);
}

class GatewayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CSV sink. The header goes out once, before the first row.
class CsvLog {
public:
    explicit CsvLog(std::ostream& out) : out_(&out) {}

    /// Opens (truncating) a file; throws GatewayError if it cannot be written.
    static CsvLog open(const std::string& path) {
        CsvLog log;
        log.file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
        if (!*log.file_) throw GatewayError("cannot open log file " + path);
        log.out_ = log.file_.get();
        return log;
    }

    std::string append(const LogRecord& record) {
        if (!header_written_) {
            *out_ << kCsvHeader << '\n';
            header_written_ = true;
        }
        std::string line = format_csv_line(record);
        *out_ << line << '\n';
        out_->flush();
        if (!*out_) throw GatewayError("write to CSV log failed");
        ++lines_;
        return line;
    }

    std::uint64_t data_lines() const { return lines_; }

private:
    CsvLog() = default;
    std::unique_ptr<std::ofstream> file_;
    std::ostream* out_ = nullptr;
    bool header_written_ = false;
    std::uint64_t lines_ = 0;
};

struct DispatchResult {
    bool ok = false;
    std::string error;
};

struct GatewayConfig {
    CivilTime start_time{2013, 1, 23, 18, 8, 16, 907};
    std::int64_t expected_cadence_ms = 500;
    Byte robot_id = kRobotNodeId;
};

/**
 * Single-writer state machine fed by the coordinator's byte stream. Times
 * passed in are milliseconds since gateway start.
 */
class Gateway {
public:
    /// Coordinator-side radio send: (robot node, frame bytes) -> dispatch result.
    using Transmitter = std::function<DispatchResult(Byte, Bytes)>;
    using ReadingObserver = std::function<void(const SensorReading&, const LogRecord&)>;

    Gateway(GatewayConfig config, CsvLog* log)
        : config_(config), log_(log), registry_(PayloadRegistry::uplink_default()) {}

    void set_transmitter(Transmitter tx) { tx_ = std::move(tx); }
    void set_observer(ReadingObserver obs) { observer_ = std::move(obs); }

    std::vector<SensorReading> ingest(std::span<const Byte> bytes, std::int64_t now_ms) {
        std::vector<SensorReading> out;
        for (const Frame& f : decode_stream(parser_, bytes, registry_)) {
            auto spec = registry_.find(f.node_id);
            SensorReading r;
            r.node_id = f.node_id;
            r.arrival_ms = now_ms;
            if (spec->kind == PayloadKind::RobotPosition) {
                r.kind = ReadingKind::RobotPosition;
                r.x = f.payload[0];
                r.y = f.payload[1];
                state_.robot_xy = std::pair{r.x, r.y};
            } else {
                r.kind = ReadingKind::Temperature;
                r.value = f.payload[0];
                if (f.node_id == kLab1NodeId) state_.temp_lab1 = r.value;
                if (f.node_id == kLab2NodeId) state_.temp_lab2 = r.value;
            }
            state_.nodes[f.node_id].last_seen_ms = now_ms;
            ++state_.readings;
            const LogRecord rec = make_record(now_ms);
            if (log_) log_->append(rec);
            if (observer_) observer_(r, rec);
            out.push_back(r);
        }
        state_.frames_ok = parser_.frames_ok;
        state_.checksum_failures = parser_.checksum_failures;
        state_.resync_skips = parser_.resync_skips;
        return out;
    }

    /// Row for the current live values at `now_ms`.
    LogRecord make_record(std::int64_t now_ms) const {
        LogRecord rec;
        rec.date_time = format_log_time(from_sys(to_sys(config_.start_time) + std::chrono::milliseconds{now_ms}));
        rec.millis = now_ms;
        rec.temp1 = state_.temp_lab1.value_or(0);
        rec.temp2 = state_.temp_lab2.value_or(0);
        if (state_.robot_xy) {
            rec.robot_x = state_.robot_xy->first;
            rec.robot_y = state_.robot_xy->second;
        }
        return rec;
    }

    /// Copy of the live state with staleness evaluated at `now_ms` (3x expected cadence).
    LiveState snapshot(std::int64_t now_ms) const {
        LiveState s = state_;
        for (auto& [id, status] : s.nodes) {
            status.stale = now_ms - status.last_seen_ms > 3 * config_.expected_cadence_ms;
        }
        return s;
    }

    DispatchResult send_waypoint(int x, int y) {
        if (x < 0 || x > 255 || y < 0 || y > 255) return {false, "waypoint coordinates must be in 0..255"};
        if (!tx_) return {false, "no simulation connected"};
        return tx_(config_.robot_id,
                   encode_frame(Frame(config_.robot_id, {static_cast<Byte>(x), static_cast<Byte>(y)})));
    }

    const GatewayConfig& config() const { return config_; }
    const ParserState& parser() const { return parser_; }

private:
    GatewayConfig config_;
    CsvLog* log_ = nullptr;
    PayloadRegistry registry_;
    ParserState parser_;
    LiveState state_;
    Transmitter tx_;
    ReadingObserver observer_;
};

}  // namespace wsnbed
