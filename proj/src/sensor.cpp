#include "diode/sensor.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <random>

#include <nlohmann/json.hpp>

#include "diode/errors.hpp"
#include "diode/segmentation.hpp"

namespace diode {

namespace {

std::string utc_now_text() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) %
              1000;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d.%03d UTC", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(ms.count()));
    return buf;
}

std::string uuid_text() {
    Uuid u = random_uuid();
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%08" PRIx64 "-%04" PRIx64 "-%04" PRIx64 "-%04" PRIx64
                  "-%012" PRIx64,
                  u.hi >> 32, (u.hi >> 16) & 0xFFFF, u.hi & 0xFFFF, u.lo >> 48,
                  u.lo & 0xFFFFFFFFFFFFull);
    return buf;
}

}  // namespace

std::string sensor_event_to_json(const SensorEvent& ev) {
    nlohmann::ordered_json j;
    j["sensorEvent"] = {
        {"index", ev.index},
        {"date", ev.date},
        {"uuid", ev.uuid},
        {"sensor",
         {
             {"type", ev.sensor_type},
             {"id", ev.sensor_id},
             {"geo", {{"longitude", ev.geo.longitude}, {"latitude", ev.geo.latitude}}},
             {"targetid", ev.targetid},
         }},
        {"temperature", ev.temperature},
    };
    return j.dump();
}

SensorEvent sensor_event_from_json(const std::string& json) {
    auto j = nlohmann::json::parse(json, nullptr, false);
    if (j.is_discarded() || !j.contains("sensorEvent"))
        throw MalformedEnvelope("sensor event: bad JSON");
    try {
        const auto& s = j.at("sensorEvent");
        SensorEvent ev;
        ev.index = s.at("index").get<std::uint64_t>();
        ev.date = s.at("date").get<std::string>();
        ev.uuid = s.at("uuid").get<std::string>();
        const auto& sensor = s.at("sensor");
        ev.sensor_type = sensor.at("type").get<std::string>();
        ev.sensor_id = sensor.at("id").get<int>();
        ev.geo.longitude = sensor.at("geo").at("longitude").get<double>();
        ev.geo.latitude = sensor.at("geo").at("latitude").get<double>();
        ev.targetid = sensor.at("targetid").get<std::string>();
        ev.temperature = s.at("temperature").get<double>();
        return ev;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedEnvelope(std::string("sensor event: ") + e.what());
    }
}

SensorGenerator::SensorGenerator(Broker& broker, std::chrono::milliseconds period,
                                 std::string exchange, std::uint64_t seed)
    : broker_(broker), period_(period), exchange_(std::move(exchange)),
      rng_state_(seed ? seed : 0x9E3779B97F4A7C15ull) {
    broker_.declare_exchange({ExchangeKind::fanout, exchange_});
}

SensorGenerator::~SensorGenerator() { stop(); }

SensorEvent SensorGenerator::emit_once() {
    SensorEvent ev;
    ev.index = next_index_.fetch_add(1);
    ev.date = utc_now_text();
    ev.uuid = uuid_text();

    // bounded random walk around room temperature
    rng_state_ = rng_state_ * 6364136223846793005ull + 1442695040888963407ull;
    double step = (static_cast<double>(rng_state_ >> 40) / static_cast<double>(1 << 24)) - 0.5;
    temperature_ += step;
    temperature_ = std::min(40.0, std::max(5.0, temperature_));
    ev.temperature = temperature_;

    Message msg;
    msg.body = to_bytes(sensor_event_to_json(ev));
    msg.properties.content_type = "application/json";
    broker_.publish(exchange_, std::move(msg));
    return ev;
}

void SensorGenerator::start() {
    if (running_.exchange(true)) return;
    thread_ = std::thread([this] {
        while (running_) {
            emit_once();
            std::this_thread::sleep_for(period_);
        }
    });
}

void SensorGenerator::stop() {
    running_ = false;
    if (thread_.joinable()) thread_.join();
}

std::optional<IndexGap> MissingIndexDetector::observe(std::uint64_t index) {
    std::optional<IndexGap> warning;
    if (last_ && index != *last_ + 1) {
        warning = IndexGap{*last_ + 1, index};
        warnings_.push_back(*warning);
    }
    last_ = index;
    return warning;
}

std::vector<IndexGap> detect_missing_indexes(const std::vector<std::uint64_t>& indexes) {
    MissingIndexDetector detector;
    for (auto i : indexes) detector.observe(i);
    return detector.warnings();
}

}  // namespace diode
