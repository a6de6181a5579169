#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "diode/envelope.hpp"

namespace diode {

// AMQP topic wildcard match: '.'-separated words, '*' = exactly one word,
// '#' = zero or more words.
bool topic_match(const std::string& pattern, const std::string& key);

inline constexpr const char* kDefaultExchange = "(AMQP default)";
inline constexpr const char* kOriginHeader = "x-original-exchange";

struct Binding {
    std::string exchange;
    std::string queue;
    std::string pattern;
    std::map<std::string, std::string> args;
    // Broker-level tap for ".dd" mirror queues on direct exchanges: receives
    // every published message regardless of routing key.
    bool catch_all = false;

    bool operator==(const Binding&) const = default;
};

// Consumer callback; return true to ack. Returning false or throwing requeues
// the message at the head of the queue.
using Consumer = std::function<bool(const Message&)>;

struct ExchangeCounters {
    std::uint64_t in = 0;
    std::uint64_t out = 0;
};

struct BrokerSnapshot {
    std::map<std::string, ExchangeCounters> exchanges;
    std::map<std::string, std::size_t> queue_depths;
};

// In-memory publish/subscribe bus with AMQP-like semantics. Thread-safe;
// delivery callbacks run on one broker-owned dispatch thread per queue and
// must not block indefinitely.
class Broker {
  public:
    Broker();
    ~Broker();
    Broker(const Broker&) = delete;
    Broker& operator=(const Broker&) = delete;

    // Idempotent; true only when newly created. Same name with a different
    // kind throws KindConflict.
    bool declare_exchange(const ExchangeSpec& spec);
    std::optional<ExchangeSpec> exchange_spec(const std::string& name) const;
    std::vector<ExchangeSpec> exchanges() const;

    void declare_queue(const std::string& name, bool durable = false);
    bool has_queue(const std::string& name) const;
    std::size_t queue_depth(const std::string& name) const;

    void bind(const std::string& exchange, const std::string& queue,
              const std::string& pattern = "",
              const std::map<std::string, std::string>& args = {}, bool catch_all = false);

    // Routes per the exchange kind and returns the number of queues that
    // received the message. Sets received_exchange on the delivered copies.
    std::size_t publish(const std::string& exchange, Message msg);

    // Direct enqueue, bypassing routing (dead-letter path).
    void enqueue(const std::string& queue, Message msg);

    void consume(const std::string& queue, Consumer consumer);
    std::size_t consumer_count(const std::string& queue) const;

    // Continuously consumes from source_queue and republishes to
    // dest_exchange on dest (may be another broker). The origin exchange is
    // preserved in the "x-original-exchange" header.
    void add_shovel(const std::string& source_queue, Broker& dest,
                    const std::string& dest_exchange);

    BrokerSnapshot snapshot() const;

    // Stops all dispatch threads; called by the destructor.
    void stop();

  private:
    struct QueueImpl;

    QueueImpl& queue_or_throw(const std::string& name);
    const QueueImpl& queue_or_throw(const std::string& name) const;
    void deliver(QueueImpl& q, Message msg);

    mutable std::mutex mu_;
    std::map<std::string, ExchangeSpec> exchanges_;
    std::map<std::string, ExchangeCounters> counters_;
    std::map<std::string, std::unique_ptr<QueueImpl>> queues_;
    std::vector<Binding> bindings_;
    std::atomic<bool> stopped_{false};
};

// Periodically creates "<exchange>.dd" mirror queues for every non-skipped
// exchange and consumes them, handing (origin exchange, message) to the
// output callback.
class MirrorPoller {
  public:
    using Output = std::function<void(const std::string& origin_exchange, const Message& msg)>;

    MirrorPoller(Broker& broker, std::set<std::string> skip, std::chrono::milliseconds interval,
                 Output out);
    ~MirrorPoller();

    void start();
    void stop();
    // One pass; also called by the polling thread. Safe to call directly in tests.
    void poll_once();

  private:
    Broker& broker_;
    std::set<std::string> skip_;
    std::chrono::milliseconds interval_;
    Output out_;
    std::set<std::string> attached_;
    std::mutex mu_;
    std::thread thread_;
    std::atomic<bool> running_{false};
    std::condition_variable cv_;
    std::mutex cv_mu_;
};

}  // namespace diode
