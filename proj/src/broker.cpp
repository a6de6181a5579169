#include "diode/broker.hpp"

#include <algorithm>

#include "diode/errors.hpp"

namespace diode {

namespace {

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = s.find('.', start);
        if (dot == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, dot - start));
        start = dot + 1;
    }
}

}  // namespace

bool topic_match(const std::string& pattern, const std::string& key) {
    const auto p = split_words(pattern);
    const auto k = split_words(key);
    const std::size_t np = p.size();
    const std::size_t nk = k.size();
    // dp[i][j]: pattern words i.. match key words j..
    std::vector<std::vector<char>> dp(np + 1, std::vector<char>(nk + 1, 0));
    dp[np][nk] = 1;
    for (std::size_t i = np; i-- > 0;) {
        for (std::size_t j = nk + 1; j-- > 0;) {
            if (p[i] == "#") {
                dp[i][j] = dp[i + 1][j] || (j < nk && dp[i][j + 1]);
            } else if (j < nk && (p[i] == "*" || p[i] == k[j])) {
                dp[i][j] = dp[i + 1][j + 1];
            }
        }
    }
    return dp[0][0] != 0;
}

struct Broker::QueueImpl {
    std::string name;
    bool durable = false;

    std::mutex mu;
    std::condition_variable cv;
    std::deque<Message> messages;
    std::vector<Consumer> consumers;
    std::size_t next_consumer = 0;
    bool stop = false;
    std::thread dispatcher;
    std::uint64_t delivered = 0;

    void run() {
        std::unique_lock lock(mu);
        while (!stop) {
            if (messages.empty() || consumers.empty()) {
                cv.wait(lock, [&] { return stop || (!messages.empty() && !consumers.empty()); });
                continue;
            }
            Message msg = std::move(messages.front());
            messages.pop_front();
            Consumer consumer = consumers[next_consumer % consumers.size()];
            ++next_consumer;
            lock.unlock();
            bool acked = false;
            try {
                acked = consumer(msg);
            } catch (...) {
                acked = false;
            }
            lock.lock();
            if (acked) {
                ++delivered;
            } else {
                // nack: back at the head, retried after a short pause
                messages.push_front(std::move(msg));
                cv.wait_for(lock, std::chrono::milliseconds(10), [&] { return stop; });
            }
        }
    }

    void enqueue(Message msg) {
        {
            std::lock_guard lock(mu);
            if (stop) return;
            messages.push_back(std::move(msg));
        }
        cv.notify_all();
    }

    void shutdown() {
        {
            std::lock_guard lock(mu);
            stop = true;
        }
        cv.notify_all();
        if (dispatcher.joinable()) dispatcher.join();
    }
};

Broker::Broker() {
    declare_exchange({ExchangeKind::direct, kDefaultExchange});
    declare_exchange({ExchangeKind::direct, "amq.direct"});
    declare_exchange({ExchangeKind::fanout, "amq.fanout"});
    declare_exchange({ExchangeKind::headers, "amq.headers"});
    declare_exchange({ExchangeKind::headers, "amq.match"});
    declare_exchange({ExchangeKind::topic, "amq.topic"});
}

Broker::~Broker() { stop(); }

void Broker::stop() {
    if (stopped_.exchange(true)) return;
    std::vector<QueueImpl*> queues;
    {
        std::lock_guard lock(mu_);
        for (auto& [name, q] : queues_) queues.push_back(q.get());
    }
    for (auto* q : queues) q->shutdown();
}

bool Broker::declare_exchange(const ExchangeSpec& spec) {
    if (spec.name.empty()) throw DiodeError("exchange name must be non-empty");
    std::lock_guard lock(mu_);
    auto it = exchanges_.find(spec.name);
    if (it != exchanges_.end()) {
        if (it->second.kind != spec.kind)
            throw KindConflict("exchange '" + spec.name + "' already declared as " +
                               to_string(it->second.kind));
        return false;
    }
    exchanges_.emplace(spec.name, spec);
    counters_.emplace(spec.name, ExchangeCounters{});
    return true;
}

std::optional<ExchangeSpec> Broker::exchange_spec(const std::string& name) const {
    std::lock_guard lock(mu_);
    auto it = exchanges_.find(name);
    if (it == exchanges_.end()) return std::nullopt;
    return it->second;
}

std::vector<ExchangeSpec> Broker::exchanges() const {
    std::lock_guard lock(mu_);
    std::vector<ExchangeSpec> out;
    out.reserve(exchanges_.size());
    for (const auto& [name, spec] : exchanges_) out.push_back(spec);
    return out;
}

void Broker::declare_queue(const std::string& name, bool durable) {
    std::lock_guard lock(mu_);
    auto it = queues_.find(name);
    if (it != queues_.end()) return;
    auto q = std::make_unique<QueueImpl>();
    q->name = name;
    q->durable = durable;
    queues_.emplace(name, std::move(q));
}

bool Broker::has_queue(const std::string& name) const {
    std::lock_guard lock(mu_);
    return queues_.contains(name);
}

Broker::QueueImpl& Broker::queue_or_throw(const std::string& name) {
    auto it = queues_.find(name);
    if (it == queues_.end()) throw NoSuchQueue("no queue '" + name + "'");
    return *it->second;
}

const Broker::QueueImpl& Broker::queue_or_throw(const std::string& name) const {
    auto it = queues_.find(name);
    if (it == queues_.end()) throw NoSuchQueue("no queue '" + name + "'");
    return *it->second;
}

std::size_t Broker::queue_depth(const std::string& name) const {
    std::lock_guard lock(mu_);
    const QueueImpl& q = queue_or_throw(name);
    std::lock_guard qlock(const_cast<std::mutex&>(q.mu));
    return q.messages.size();
}

void Broker::bind(const std::string& exchange, const std::string& queue,
                  const std::string& pattern, const std::map<std::string, std::string>& args,
                  bool catch_all) {
    std::lock_guard lock(mu_);
    if (!exchanges_.contains(exchange)) throw NoSuchExchange("no exchange '" + exchange + "'");
    if (!queues_.contains(queue)) throw NoSuchQueue("no queue '" + queue + "'");
    Binding b{exchange, queue, pattern, args, catch_all};
    if (std::find(bindings_.begin(), bindings_.end(), b) == bindings_.end())
        bindings_.push_back(std::move(b));
}

std::size_t Broker::publish(const std::string& exchange, Message msg) {
    std::vector<QueueImpl*> targets;
    {
        std::lock_guard lock(mu_);
        auto ex = exchanges_.find(exchange);
        if (ex == exchanges_.end()) throw NoSuchExchange("no exchange '" + exchange + "'");
        const ExchangeKind kind = ex->second.kind;
        msg.properties.received_exchange = exchange;

        std::set<std::string> names;
        if (exchange == kDefaultExchange && queues_.contains(msg.properties.routing_key)) {
            // implicit binding of every queue to the default exchange by name
            names.insert(msg.properties.routing_key);
        }
        for (const auto& b : bindings_) {
            if (b.exchange != exchange) continue;
            bool matched = b.catch_all;
            if (!matched) {
                switch (kind) {
                    case ExchangeKind::fanout: matched = true; break;
                    case ExchangeKind::direct:
                        matched = b.pattern == msg.properties.routing_key;
                        break;
                    case ExchangeKind::topic:
                        matched = topic_match(b.pattern, msg.properties.routing_key);
                        break;
                    case ExchangeKind::headers: {
                        matched = true;
                        for (const auto& [k, v] : b.args) {
                            auto h = msg.properties.headers.find(k);
                            if (h == msg.properties.headers.end() || h->second != v) {
                                matched = false;
                                break;
                            }
                        }
                        break;
                    }
                }
            }
            if (matched) names.insert(b.queue);
        }
        for (const auto& name : names) targets.push_back(queues_.at(name).get());
        auto& c = counters_[exchange];
        ++c.in;
        c.out += targets.size();
    }
    for (auto* q : targets) q->enqueue(msg);
    return targets.size();
}

void Broker::enqueue(const std::string& queue, Message msg) {
    QueueImpl* q;
    {
        std::lock_guard lock(mu_);
        q = &queue_or_throw(queue);
    }
    q->enqueue(std::move(msg));
}

void Broker::consume(const std::string& queue, Consumer consumer) {
    QueueImpl* q;
    {
        std::lock_guard lock(mu_);
        q = &queue_or_throw(queue);
    }
    {
        std::lock_guard qlock(q->mu);
        q->consumers.push_back(std::move(consumer));
        if (!q->dispatcher.joinable()) q->dispatcher = std::thread([q] { q->run(); });
    }
    q->cv.notify_all();
}

std::size_t Broker::consumer_count(const std::string& queue) const {
    std::lock_guard lock(mu_);
    const QueueImpl& q = queue_or_throw(queue);
    std::lock_guard qlock(const_cast<std::mutex&>(q.mu));
    return q.consumers.size();
}

void Broker::add_shovel(const std::string& source_queue, Broker& dest,
                        const std::string& dest_exchange) {
    {
        std::lock_guard lock(mu_);
        queue_or_throw(source_queue);
    }
    if (!dest.exchange_spec(dest_exchange))
        throw NoSuchExchange("no exchange '" + dest_exchange + "'");
    consume(source_queue, [&dest, dest_exchange](const Message& msg) {
        Message copy = msg;
        copy.properties.headers[kOriginHeader] = msg.properties.received_exchange;
        dest.publish(dest_exchange, std::move(copy));
        return true;
    });
}

BrokerSnapshot Broker::snapshot() const {
    std::lock_guard lock(mu_);
    BrokerSnapshot snap;
    snap.exchanges = counters_;
    for (const auto& [name, q] : queues_) {
        std::lock_guard qlock(q->mu);
        snap.queue_depths[name] = q->messages.size();
    }
    return snap;
}

MirrorPoller::MirrorPoller(Broker& broker, std::set<std::string> skip,
                           std::chrono::milliseconds interval, Output out)
    : broker_(broker), skip_(std::move(skip)), interval_(interval), out_(std::move(out)) {}

MirrorPoller::~MirrorPoller() { stop(); }

void MirrorPoller::poll_once() {
    for (const auto& spec : broker_.exchanges()) {
        if (skip_.contains(spec.name)) continue;
        std::lock_guard lock(mu_);
        if (attached_.contains(spec.name)) continue;
        const std::string queue = spec.name + ".dd";
        if (!broker_.has_queue(queue)) broker_.declare_queue(queue);
        switch (spec.kind) {
            case ExchangeKind::fanout:
                broker_.bind(spec.name, queue);
                break;
            case ExchangeKind::topic:
                broker_.bind(spec.name, queue, "#");
                break;
            case ExchangeKind::headers:
                broker_.bind(spec.name, queue);  // empty args: match-all
                break;
            case ExchangeKind::direct:
                // keys are unbounded; tap every published message instead
                broker_.bind(spec.name, queue, "", {}, /*catch_all=*/true);
                break;
        }
        const std::string origin = spec.name;
        Output out = out_;
        broker_.consume(queue, [out, origin](const Message& msg) {
            out(origin, msg);
            return true;
        });
        attached_.insert(spec.name);
    }
}

void MirrorPoller::start() {
    if (running_.exchange(true)) return;
    thread_ = std::thread([this] {
        while (running_) {
            try {
                poll_once();
            } catch (const std::exception&) {
                // poll loop logs and continues
            }
            std::unique_lock lock(cv_mu_);
            cv_.wait_for(lock, interval_, [this] { return !running_.load(); });
        }
    });
}

void MirrorPoller::stop() {
    if (!running_.exchange(false)) {
        if (thread_.joinable()) thread_.join();
        return;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
}

}  // namespace diode
