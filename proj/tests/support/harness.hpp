#pragma once

#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "smartmars/model/parser.hpp"
#include "smartmars/patterns/event.hpp"
#include "smartmars/patterns/push.hpp"
#include "smartmars/patterns/query.hpp"
#include "smartmars/patterns/send.hpp"
#include "smartmars/patterns/transport.hpp"
#include "smartmars/tasks/clock.hpp"
#include "smartmars/tasks/executor.hpp"

namespace smartmars::testing {

/// Test types: Num {v: int64; tag: string}, Other {x: bool}.
std::shared_ptr<const patterns::TypeTable> test_types();

patterns::CommObject num(std::int64_t v, std::string tag = {});

model::ServicePortSpec port_spec(std::string name, model::Pattern pattern, model::Direction dir,
                                 std::optional<std::string> req, std::optional<std::string> ans);

/// One virtual clock, one in-process transport and one server executor.
struct Bench {
    explicit Bench(bool wire_roundtrip = false);
    ~Bench();

    std::shared_ptr<tasks::VirtualClock> clock;
    std::shared_ptr<const patterns::TypeTable> types;
    std::shared_ptr<patterns::InProcessTransport> transport;
    std::shared_ptr<tasks::Executor> executor;

    patterns::PortContext context(std::size_t depth = 16) const;

    template <class Server>
    std::shared_ptr<Server> server(const std::string& address, model::ServicePortSpec spec, std::size_t depth = 16) {
        auto s = std::make_shared<Server>(std::move(spec), context(depth));
        transport->bind(address, s);
        return s;
    }
    template <class Client>
    std::shared_ptr<Client> client(model::ServicePortSpec spec) {
        return std::make_shared<Client>(std::move(spec), context());
    }
    void wire(patterns::RequiredPort& client, const std::string& address) {
        client.connect(transport->opener(address, client.port_spec()), address);
    }

    /// Starts `body` as a participant of the clock.
    void spawn(std::function<void()> body);
    /// Advances the clock to `t` (after letting everything runnable settle).
    void run_until(tasks::Millis t);
    void join();

    std::vector<std::thread> threads;
};

}  // namespace smartmars::testing
