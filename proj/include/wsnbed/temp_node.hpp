#pragma once

#include "wsnbed/frame.hpp"
#include "wsnbed/network.hpp"
#include "wsnbed/random.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace wsnbed {

inline constexpr int kAdcMaxCounts = 1023;

/// 10-bit ADC sample.
struct AdcReading {
    int counts = 0;

    explicit AdcReading(int c = 0) : counts(c) {
        if (c < 0 || c > kAdcMaxCounts) {
            throw ContractViolation("ADC counts " + std::to_string(c) + " outside 0..1023");
        }
    }
    friend bool operator==(const AdcReading&, const AdcReading&) = default;
};

/// Quantizes a sensor temperature as the node's 10-bit, 5 V ADC sees it (10 mV per degree).
inline AdcReading adc_sample(double true_temp_c, Rng* noise = nullptr) {
    long counts = std::lround(true_temp_c * 1024.0 / 500.0);
    if (noise) counts += noise->uniform_int(-1, 1);
    return AdcReading(static_cast<int>(std::clamp<long>(counts, 0, kAdcMaxCounts)));
}

/// Temperature = 5 * (analogRead * 100) / 1024
inline double counts_to_celsius(AdcReading reading) {
    return 5.0 * (static_cast<double>(reading.counts) * 100.0) / 1024.0;
}

inline double counts_to_celsius(int counts) { return counts_to_celsius(AdcReading(counts)); }

/// Integer byte sent on the wire: truncated toward zero, clamped to 0..255.
inline Byte temperature_byte(double celsius) {
    return static_cast<Byte>(std::clamp(std::trunc(celsius), 0.0, 255.0));
}

/// Bounded random walk around a baseline.
struct AmbientModel {
    double baseline_c = 25.0;
    double walk_step_c = 0.0;
    double min_c = 0.0;
    double max_c = 100.0;

    void validate() const {
        if (min_c < 0 || !(min_c <= baseline_c && baseline_c <= max_c)) {
            throw ContractViolation("ambient model needs 0 <= min <= baseline <= max");
        }
        if (walk_step_c < 0) throw ContractViolation("ambient walk step must be >= 0");
    }
};

class AmbientProcess {
public:
    AmbientProcess(AmbientModel model, std::uint64_t seed) : model_(model), current_(model.baseline_c), rng_(seed) {
        model_.validate();
    }

    double current() const { return current_; }

    double next() {
        if (model_.walk_step_c > 0) {
            current_ += rng_.uniform(-model_.walk_step_c, model_.walk_step_c);
            current_ = std::clamp(current_, model_.min_c, model_.max_c);
        }
        return current_;
    }

private:
    AmbientModel model_;
    double current_;
    Rng rng_;
};

struct TempNodeConfig {
    Byte node_id = kLab1NodeId;
    AmbientModel ambient;
    SimTime sample_period_ms = 500;
    SimTime first_tick_ms = 0;
    bool adc_noise = false;
};

/**
 * Remote node loop: wake, sample, convert, frame, transmit to the coordinator,
 * sleep until the next sample period.
 */
class TempNode : public NodeHandler {
public:
    static constexpr int kTickTag = 1;

    TempNode(TempNodeConfig config, std::uint64_t seed)
        : config_(config),
          ambient_(config.ambient, derive_seed(seed, config.node_id, Stream::Ambient)),
          noise_(derive_seed(seed, config.node_id, Stream::AdcNoise)) {
        if (!(config_.sample_period_ms > 0)) throw ContractViolation("sample period must be > 0");
    }

    void start(Network& net) {
        net.attach(config_.node_id, this);
        net.schedule_timer(config_.node_id, config_.first_tick_ms, kTickTag);
    }

    void on_timer(Network& net, int tag) override {
        if (tag != kTickTag) return;
        tick(net);
        net.schedule_timer(config_.node_id, net.now() + config_.sample_period_ms, kTickTag);
    }

    const TempNodeConfig& config() const { return config_; }
    std::optional<Byte> last_sent() const { return last_sent_; }
    std::uint64_t ticks() const { return ticks_; }

private:
    void tick(Network& net) {
        const double ambient = ambient_.next();
        const AdcReading reading = adc_sample(ambient, config_.adc_noise ? &noise_ : nullptr);
        const Byte value = temperature_byte(counts_to_celsius(reading));
        ++ticks_;
        last_sent_ = value;
        net.note("sample", config_.node_id, -1,
                 "counts=" + std::to_string(reading.counts) + " temp=" + std::to_string(value));
        net.transmit(config_.node_id, net.topology().coordinator(),
                     encode_frame(Frame(config_.node_id, {value})));
    }

    TempNodeConfig config_;
    AmbientProcess ambient_;
    Rng noise_;
    std::optional<Byte> last_sent_;
    std::uint64_t ticks_ = 0;
};

}  // namespace wsnbed
