#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "diode/broker.hpp"

namespace diode {

struct GeoLocation {
    double longitude = 4.899431;
    double latitude = 52.379189;

    bool operator==(const GeoLocation&) const = default;
};

struct SensorEvent {
    std::uint64_t index = 0;
    std::string date;  // UTC timestamp text
    std::string uuid;
    std::string sensor_type = "temperature";
    int sensor_id = 1;
    GeoLocation geo;
    std::string targetid = "bWFyY2Vs";
    double temperature = 21.0;
};

std::string sensor_event_to_json(const SensorEvent& ev);
SensorEvent sensor_event_from_json(const std::string& json);

// Fictitious temperature sensor: publishes SensorEvent JSON bodies with an
// index incrementing from 1; temperature follows a bounded random walk.
class SensorGenerator {
  public:
    SensorGenerator(Broker& broker, std::chrono::milliseconds period,
                    std::string exchange = "sensor", std::uint64_t seed = 0);
    ~SensorGenerator();

    void start();
    void stop();
    SensorEvent emit_once();  // publish a single event now

    std::uint64_t emitted() const { return next_index_.load() - 1; }

  private:
    Broker& broker_;
    std::chrono::milliseconds period_;
    std::string exchange_;
    std::atomic<std::uint64_t> next_index_{1};
    double temperature_ = 21.0;
    std::uint64_t rng_state_;
    std::thread thread_;
    std::atomic<bool> running_{false};
};

struct IndexGap {
    std::uint64_t expected = 0;
    std::uint64_t observed = 0;

    bool operator==(const IndexGap&) const = default;
};

// Streaming gap detector: first index establishes the baseline, every
// non-consecutive successor yields one warning.
class MissingIndexDetector {
  public:
    std::optional<IndexGap> observe(std::uint64_t index);
    const std::vector<IndexGap>& warnings() const { return warnings_; }

  private:
    std::optional<std::uint64_t> last_;
    std::vector<IndexGap> warnings_;
};

std::vector<IndexGap> detect_missing_indexes(const std::vector<std::uint64_t>& indexes);

}  // namespace diode
