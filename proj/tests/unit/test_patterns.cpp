#include <doctest.h>

#include <atomic>
#include <mutex>

#include "harness.hpp"
#include "smartmars/error.hpp"

using namespace smartmars;
using namespace smartmars::patterns;
using namespace smartmars::testing;
using model::Direction;
using model::Pattern;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

model::ServicePortSpec send_spec(Direction d) { return port_spec("cmd", Pattern::Send, d, "Num", std::nullopt); }
model::ServicePortSpec query_spec(Direction d, std::optional<std::int64_t> timeout = std::nullopt) {
    auto s = port_spec("q", Pattern::Query, d, "Num", "Num");
    if (timeout) s.qos.timeout = model::TimeoutMs::millis(*timeout);
    return s;
}
model::ServicePortSpec newest_spec(Direction d) { return port_spec("state", Pattern::PushNewest, d, std::nullopt, "Num"); }
model::ServicePortSpec timed_spec(Direction d, std::optional<std::int64_t> cycle = 100) {
    auto s = port_spec("tick", Pattern::PushTimed, d, std::nullopt, "Num");
    if (d == Direction::Provided) s.qos.cycle_ms = cycle;
    return s;
}
model::ServicePortSpec event_spec(Direction d, std::optional<std::int64_t> timeout = std::nullopt) {
    auto s = port_spec("alarm", Pattern::Event, d, "Num", "Num");
    if (timeout) s.qos.timeout = model::TimeoutMs::millis(*timeout);
    return s;
}

}  // namespace

// --- send ----------------------------------------------------------------------

TEST_CASE("send: wired client, valid message reaches the handler once") {
    Bench b;
    auto server = b.server<SendServer>("s.cmd", send_spec(Direction::Provided));
    std::vector<CommObject> got;
    server->register_handler([&](const CommObject& m) { got.push_back(m); });
    auto client = b.client<SendClient>(send_spec(Direction::Required));
    b.wire(*client, "s.cmd");
    client->send(num(7, "a"));
    b.clock->settle();
    REQUIRE(got.size() == 1);
    CHECK(got[0] == num(7, "a"));
    CHECK(server->deliveries() == 1);
}

TEST_CASE("send: unwired client fails with NotWired") {
    Bench b;
    auto client = b.client<SendClient>(send_spec(Direction::Required));
    CHECK(code_of([&] { client->send(num(1)); }) == ErrorCode::NotWired);
}

TEST_CASE("send: message of the wrong type fails with TypeMismatch") {
    Bench b;
    auto server = b.server<SendServer>("s.cmd", send_spec(Direction::Provided));
    auto client = b.client<SendClient>(send_spec(Direction::Required));
    b.wire(*client, "s.cmd");
    CommObject other{"Other"};
    other.set("x", true);
    CHECK(code_of([&] { client->send(other); }) == ErrorCode::TypeMismatch);
    CommObject bad{"Num"};
    bad.set("v", std::string("seven"));
    bad.set("tag", "");
    CHECK(code_of([&] { client->send(bad); }) == ErrorCode::TypeMismatch);
}

TEST_CASE("send: the request queue is bounded") {
    Bench b;
    auto server = b.server<SendServer>("s.cmd", send_spec(Direction::Provided), 4);
    tasks::Completion<void> release;
    std::atomic<int> handled{0};
    server->register_handler([&](const CommObject&) {
        if (handled++ == 0) release.wait();
    });
    auto client = b.client<SendClient>(send_spec(Direction::Required));
    b.wire(*client, "s.cmd");
    client->send(num(0));
    b.clock->settle();
    for (int i = 1; i <= 4; ++i) client->send(num(i));
    CHECK(code_of([&] { client->send(num(5)); }) == ErrorCode::QueueFull);
    release.complete();
    b.clock->settle();
    CHECK(handled == 5);
    client->send(num(6));
    b.clock->settle();
    CHECK(handled == 6);
}

TEST_CASE("send: second handler registration is refused") {
    Bench b;
    auto server = b.server<SendServer>("s.cmd", send_spec(Direction::Provided));
    server->register_handler([](const CommObject&) {});
    CHECK(code_of([&] { server->register_handler([](const CommObject&) {}); }) == ErrorCode::HandlerAlreadyRegistered);
}

// --- query ---------------------------------------------------------------------

TEST_CASE("query: echo server returns the request") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    server->register_handler([](const CommObject& r) { return r; });
    auto client = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*client, "s.q");
    std::optional<CommObject> answer;
    b.spawn([&] { answer = client->query(num(42, "x")); });
    b.run_until(0);
    b.join();
    REQUIRE(answer);
    CHECK(*answer == num(42, "x"));
}

TEST_CASE("query: handlers run on the server executor, not the caller") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    std::atomic<bool> on_executor{false};
    server->register_handler([&](const CommObject& r) {
        on_executor = b.executor->on_executor_thread();
        return r;
    });
    auto client = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*client, "s.q");
    b.spawn([&] { client->query(num(1)); });
    b.run_until(0);
    b.join();
    CHECK(on_executor);
}

TEST_CASE("query: server that never answers times out exactly at the QoS timeout") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    auto client = b.client<QueryClient>(query_spec(Direction::Required, 50));
    b.wire(*client, "s.q");
    std::optional<ErrorCode> code;
    tasks::Millis at = -1;
    b.spawn([&] {
        code = code_of([&] { client->query(num(1)); });
        at = b.clock->now();
    });
    b.run_until(49);
    CHECK_FALSE(code.has_value());
    b.run_until(1000);
    b.join();
    CHECK(code == ErrorCode::Timeout);
    CHECK(at == 50);
}

TEST_CASE("query: per-call timeout overrides the QoS value") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    auto client = b.client<QueryClient>(query_spec(Direction::Required, 50));
    b.wire(*client, "s.q");
    tasks::Millis at = -1;
    b.spawn([&] {
        code_of([&] { client->query(num(1), model::TimeoutMs::millis(20)); });
        at = b.clock->now();
    });
    b.run_until(1000);
    b.join();
    CHECK(at == 20);
}

TEST_CASE("query: handler fault suppresses the answer and the client times out") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    server->register_handler([](const CommObject&) -> CommObject { throw std::runtime_error("injected"); });
    auto client = b.client<QueryClient>(query_spec(Direction::Required, 30));
    b.wire(*client, "s.q");
    std::optional<ErrorCode> code;
    b.spawn([&] { code = code_of([&] { client->query(num(1)); }); });
    b.run_until(100);
    b.join();
    CHECK(code == ErrorCode::Timeout);
}

TEST_CASE("query: disconnect while pending returns Disconnected without time passing") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    auto client = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*client, "s.q");
    std::optional<ErrorCode> code;
    b.spawn([&] { code = code_of([&] { client->query(num(1)); }); });
    b.clock->settle();
    CHECK_FALSE(code.has_value());
    client->disconnect();
    b.join();
    CHECK(code == ErrorCode::Disconnected);
    CHECK(b.clock->now() == 0);
    CHECK(client->state() == RequiredPort::State::Unwired);
    CHECK(code_of([&] { client->query_async(num(1)); }) == ErrorCode::NotWired);
    client->disconnect();
}

TEST_CASE("query: async request then blocking receive") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    server->register_handler([](const CommObject& r) { return r; });
    auto client = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*client, "s.q");
    QueryId id = client->query_async(num(5, "t"));
    std::optional<CommObject> answer;
    b.spawn([&] { answer = client->query_receive(id, true); });
    b.run_until(0);
    b.join();
    CHECK(*answer == num(5, "t"));
    CHECK(code_of([&] { client->query_receive(id, false); }) == ErrorCode::UnknownId);
}

TEST_CASE("query: non-blocking receive reports pending, then the answer once") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    server->register_handler([](const CommObject& r) { return r; });
    auto client = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*client, "s.q");
    QueryId id = client->query_async(num(9));
    b.clock->settle();
    auto first = client->query_receive(id, false);
    REQUIRE(first);
    CHECK(*first == num(9));
    CHECK(code_of([&] { client->query_receive(id, false); }) == ErrorCode::UnknownId);

    auto silent = b.server<QueryServer>("s.silent", query_spec(Direction::Provided));
    auto c2 = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*c2, "s.silent");
    QueryId pending = c2->query_async(num(1));
    CHECK_FALSE(c2->query_receive(pending, false).has_value());
    CHECK_FALSE(c2->query_receive(pending, false).has_value());
}

namespace {

/// Provider that holds requests and answers them in reverse arrival order.
class ReverseProvider final : public Provider {
public:
    explicit ReverseProvider(model::ServicePortSpec spec) : spec_(std::move(spec)) {}
    const model::ServicePortSpec& spec() const override { return spec_; }
    void attach(ConnectionId, std::shared_ptr<Replier> r) override { replier_ = std::move(r); }
    void detach(ConnectionId) override {}
    Admission deliver(ConnectionId, Message msg) override {
        held_.push_back(std::move(msg));
        return Admission::Accepted;
    }
    void flush() {
        for (auto it = held_.rbegin(); it != held_.rend(); ++it) {
            CommObject a = num(it->payload.get_int("v") * 10, it->payload.get_string("tag"));
            replier_->reply(Message{Op::Query, Kind::Answer, it->correlation, a});
        }
        held_.clear();
    }

private:
    model::ServicePortSpec spec_;
    std::shared_ptr<Replier> replier_;
    std::vector<Message> held_;
};

}  // namespace

TEST_CASE("query: answers delivered in reverse order correlate to their ids") {
    Bench b;
    auto provider = std::make_shared<ReverseProvider>(query_spec(Direction::Provided));
    b.transport->bind("r.q", provider);
    auto client = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*client, "r.q");
    QueryId a = client->query_async(num(1, "a"));
    QueryId c = client->query_async(num(2, "b"));
    provider->flush();
    CHECK(client->query_receive(c, false)->get_string("tag") == "b");
    CHECK(client->query_receive(a, false)->get_string("tag") == "a");
}

TEST_CASE("query: no handler registered, client times out") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    auto client = b.client<QueryClient>(query_spec(Direction::Required, 10));
    b.wire(*client, "s.q");
    std::optional<ErrorCode> code;
    b.spawn([&] { code = code_of([&] { client->query(num(1)); }); });
    b.run_until(100);
    b.join();
    CHECK(code == ErrorCode::Timeout);
}

TEST_CASE("query: deactivated provider rejects pending and new requests") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    tasks::Completion<void> never;
    server->register_handler([&](const CommObject& r) {
        never.wait(*b.clock, 1000);
        return r;
    });
    auto client = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*client, "s.q");
    std::optional<ErrorCode> code;
    b.spawn([&] { code = code_of([&] { client->query(num(1)); }); });
    b.clock->settle();
    server->set_active(false);
    b.clock->settle();
    CHECK(code == ErrorCode::ServiceDeactivated);
    CHECK(code_of([&] { client->query_async(num(2)); }) == ErrorCode::ServiceDeactivated);
    b.run_until(2000);
    b.join();
}

// --- push newest ---------------------------------------------------------------

TEST_CASE("push newest: latest value wins") {
    Bench b;
    auto pub = b.server<PushServer>("p.state", newest_spec(Direction::Provided));
    auto sub = b.client<PushClient>(newest_spec(Direction::Required));
    b.wire(*sub, "p.state");
    sub->subscribe();
    pub->publish(num(1));
    pub->publish(num(2));
    CHECK(*sub->get_update(false) == num(2));
    CHECK_FALSE(sub->get_update(false).has_value());
}

TEST_CASE("push newest: zero subscribers is not an error") {
    Bench b;
    auto pub = b.server<PushServer>("p.state", newest_spec(Direction::Provided));
    pub->publish(num(1));
    CHECK(pub->deliveries() == 1);
}

TEST_CASE("push newest: three subscribers each observe the latest value") {
    Bench b;
    auto pub = b.server<PushServer>("p.state", newest_spec(Direction::Provided));
    std::vector<std::shared_ptr<PushClient>> subs;
    for (int i = 0; i < 3; ++i) {
        subs.push_back(b.client<PushClient>(newest_spec(Direction::Required)));
        b.wire(*subs.back(), "p.state");
        subs.back()->subscribe();
    }
    pub->publish(num(1));
    pub->publish(num(2));
    for (auto& s : subs) CHECK(*s->get_update(false) == num(2));
}

TEST_CASE("push newest: subscribing after a publish hands over the current value") {
    Bench b;
    auto pub = b.server<PushServer>("p.state", newest_spec(Direction::Provided));
    pub->publish(num(5));
    auto sub = b.client<PushClient>(newest_spec(Direction::Required));
    b.wire(*sub, "p.state");
    sub->subscribe();
    CHECK(*sub->get_update(false) == num(5));
}

TEST_CASE("push newest: nothing published yet means no update") {
    Bench b;
    auto pub = b.server<PushServer>("p.state", newest_spec(Direction::Provided));
    auto sub = b.client<PushClient>(newest_spec(Direction::Required));
    b.wire(*sub, "p.state");
    sub->subscribe();
    CHECK_FALSE(sub->get_update(false).has_value());
}

TEST_CASE("push newest: blocking get_update wakes on publish and on disconnect") {
    Bench b;
    auto pub = b.server<PushServer>("p.state", newest_spec(Direction::Provided));
    auto sub = b.client<PushClient>(newest_spec(Direction::Required));
    b.wire(*sub, "p.state");
    sub->subscribe();
    std::optional<CommObject> got;
    b.spawn([&] { got = sub->get_update(true); });
    b.clock->settle();
    pub->publish(num(3));
    b.join();
    CHECK(*got == num(3));

    std::optional<ErrorCode> code;
    b.spawn([&] { code = code_of([&] { sub->get_update(true); }); });
    b.clock->settle();
    sub->disconnect();
    b.join();
    CHECK(code == ErrorCode::Disconnected);
    CHECK(code_of([&] { sub->get_update(false); }) == ErrorCode::NotWired);
}

TEST_CASE("push newest: subscription is renewed after rewiring") {
    Bench b;
    auto a = b.server<PushServer>("a.state", newest_spec(Direction::Provided));
    auto c = b.server<PushServer>("c.state", newest_spec(Direction::Provided));
    auto sub = b.client<PushClient>(newest_spec(Direction::Required));
    b.wire(*sub, "a.state");
    sub->subscribe();
    a->publish(num(1));
    CHECK(*sub->get_update(false) == num(1));
    b.wire(*sub, "c.state");
    CHECK(a->subscribers() == 0);
    CHECK(c->subscribers() == 1);
    c->publish(num(9));
    CHECK(*sub->get_update(false) == num(9));
}

// --- push timed ----------------------------------------------------------------

TEST_CASE("push timed: T=100 to t=350 with one value gives ticks at 100, 200, 300") {
    Bench b;
    auto pub = b.server<PushServer>("p.tick", timed_spec(Direction::Provided));
    auto sub = b.client<PushClient>(timed_spec(Direction::Required));
    b.wire(*sub, "p.tick");
    sub->subscribe();
    pub->publish(num(1));
    auto ticket = pub->start_timed();
    std::vector<tasks::Millis> seen;
    for (tasks::Millis t = 0; t <= 350; t += 10) {
        b.run_until(t);
        if (sub->get_update(false)) seen.push_back(b.clock->now());
    }
    CHECK(seen == std::vector<tasks::Millis>{100, 200, 300});
    CHECK(sub->deliveries() == 3);
    CHECK(pub->deliveries() == 3);
}

TEST_CASE("push timed: a tick without a value is skipped") {
    Bench b;
    auto pub = b.server<PushServer>("p.tick", timed_spec(Direction::Provided));
    auto sub = b.client<PushClient>(timed_spec(Direction::Required));
    b.wire(*sub, "p.tick");
    sub->subscribe();
    pub->start_timed();
    b.run_until(150);
    CHECK(sub->deliveries() == 0);
    pub->publish(num(1));
    b.run_until(250);
    CHECK(sub->deliveries() == 1);
}

TEST_CASE("push timed: no deliveries after the ticket is stopped") {
    Bench b;
    auto pub = b.server<PushServer>("p.tick", timed_spec(Direction::Provided));
    auto sub = b.client<PushClient>(timed_spec(Direction::Required));
    b.wire(*sub, "p.tick");
    sub->subscribe();
    pub->publish(num(1));
    auto ticket = pub->start_timed();
    b.run_until(250);
    ticket.stop();
    CHECK_FALSE(ticket.running());
    b.run_until(1000);
    CHECK(sub->deliveries() == 2);
    CHECK(b.clock->pending_timers() == 0);
}

TEST_CASE("push timed: start errors") {
    Bench b;
    auto pub = b.server<PushServer>("p.tick", timed_spec(Direction::Provided));
    auto ticket = pub->start_timed();
    CHECK(code_of([&] { pub->start_timed(); }) == ErrorCode::AlreadyStarted);
    auto no_cycle = b.server<PushServer>("p.nocycle", timed_spec(Direction::Provided, std::nullopt));
    CHECK(code_of([&] { no_cycle->start_timed(); }) == ErrorCode::NoCycleTime);
    auto newest = b.server<PushServer>("p.newest", newest_spec(Direction::Provided));
    CHECK(code_of([&] { newest->start_timed(); }) == ErrorCode::NoCycleTime);
    ticket.stop();
    CHECK_NOTHROW(pub->start_timed());
}

TEST_CASE("push timed: a started cycle is phase-aligned to multiples of T") {
    Bench b;
    b.run_until(130);
    auto pub = b.server<PushServer>("p.tick", timed_spec(Direction::Provided));
    pub->publish(num(1));
    pub->start_timed();
    b.run_until(199);
    CHECK(pub->deliveries() == 0);
    b.run_until(200);
    CHECK(pub->deliveries() == 1);
}

TEST_CASE("push: publishing the wrong type fails with TypeMismatch") {
    Bench b;
    auto pub = b.server<PushServer>("p.state", newest_spec(Direction::Provided));
    CommObject other{"Other"};
    other.set("x", false);
    CHECK(code_of([&] { pub->publish(other); }) == ErrorCode::TypeMismatch);
}

// --- event ---------------------------------------------------------------------

namespace {
void threshold_handler(EventServer& server) {
    server.register_handler([](const CommObject& p, const CommObject& s) { return s.get_int("v") >= p.get_int("v"); },
                            [](const CommObject&, const CommObject& s) { return num(s.get_int("v"), "fired"); });
}
}  // namespace

TEST_CASE("event: single activation fires once, for the first matching state") {
    Bench b;
    auto server = b.server<EventServer>("e.alarm", event_spec(Direction::Provided));
    threshold_handler(*server);
    auto client = b.client<EventClient>(event_spec(Direction::Required));
    b.wire(*client, "e.alarm");
    auto id = client->activate(num(5), EventMode::Single);
    for (int v : {3, 4, 7, 9}) server->put_state(num(v));
    b.clock->settle();
    auto n = client->get(id, false);
    REQUIRE(n);
    CHECK(n->get_int("v") == 7);
    CHECK(client->deliveries() == 1);
    CHECK(code_of([&] { client->get(id, false); }) == ErrorCode::UnknownId);
    CHECK(server->activations() == 0);
}

TEST_CASE("event: continuous activation fires on every matching state") {
    Bench b;
    auto server = b.server<EventServer>("e.alarm", event_spec(Direction::Provided));
    threshold_handler(*server);
    auto client = b.client<EventClient>(event_spec(Direction::Required));
    b.wire(*client, "e.alarm");
    auto id = client->activate(num(5), EventMode::Continuous);
    for (int v : {3, 7, 4, 9}) server->put_state(num(v));
    b.clock->settle();
    CHECK(client->get(id, false)->get_int("v") == 7);
    CHECK(client->get(id, false)->get_int("v") == 9);
    CHECK_FALSE(client->get(id, false).has_value());
}

TEST_CASE("event: deactivate before any firing, then get is UnknownId") {
    Bench b;
    auto server = b.server<EventServer>("e.alarm", event_spec(Direction::Provided));
    threshold_handler(*server);
    auto client = b.client<EventClient>(event_spec(Direction::Required));
    b.wire(*client, "e.alarm");
    auto id = client->activate(num(5), EventMode::Continuous);
    client->deactivate(id);
    server->put_state(num(10));
    b.clock->settle();
    CHECK(code_of([&] { client->get(id, false); }) == ErrorCode::UnknownId);
    CHECK(server->activations() == 0);
}

TEST_CASE("event: blocking get times out per QoS and unblocks on disconnect") {
    Bench b;
    auto server = b.server<EventServer>("e.alarm", event_spec(Direction::Provided));
    threshold_handler(*server);
    auto client = b.client<EventClient>(event_spec(Direction::Required, 40));
    b.wire(*client, "e.alarm");
    auto id = client->activate(num(5), EventMode::Continuous);
    std::optional<ErrorCode> code;
    tasks::Millis at = -1;
    b.spawn([&] {
        code = code_of([&] { client->get(id, true); });
        at = b.clock->now();
    });
    b.run_until(100);
    b.join();
    CHECK(code == ErrorCode::Timeout);
    CHECK(at == 40);

    b.spawn([&] { code = code_of([&] { client->get(id, true); }); });
    b.clock->settle();
    client->disconnect();
    b.join();
    CHECK(code == ErrorCode::Disconnected);
}

TEST_CASE("event: blocking get returns the notification when it fires") {
    Bench b;
    auto server = b.server<EventServer>("e.alarm", event_spec(Direction::Provided));
    threshold_handler(*server);
    auto client = b.client<EventClient>(event_spec(Direction::Required));
    b.wire(*client, "e.alarm");
    auto id = client->activate(num(5), EventMode::Single);
    std::optional<CommObject> got;
    b.spawn([&] { got = client->get(id, true); });
    b.clock->settle();
    server->put_state(num(6));
    b.join();
    CHECK(got->get_int("v") == 6);
}

// --- compatibility -------------------------------------------------------------

TEST_CASE("check_compatibility") {
    auto q = port_spec("a", Pattern::Query, Direction::Required, "A", "B");
    auto qp = port_spec("b", Pattern::Query, Direction::Provided, "A", "B");
    auto s = port_spec("c", Pattern::Send, Direction::Provided, "A", std::nullopt);
    auto timed = port_spec("d", Pattern::PushTimed, Direction::Required, std::nullopt, "A");
    auto newest = port_spec("e", Pattern::PushNewest, Direction::Provided, std::nullopt, "A");
    auto qx = port_spec("f", Pattern::Query, Direction::Provided, "A", "C");
    CHECK(check_compatibility(q, qp));
    CHECK_FALSE(check_compatibility(q, s));
    CHECK_FALSE(check_compatibility(timed, newest));
    CHECK(*incompatibility(q, s) == "pattern");
    CHECK(*incompatibility(q, qx) == "type");
}

TEST_CASE("transport: incompatible or missing provider refuses to open") {
    Bench b;
    auto pub = b.server<PushServer>("p.state", newest_spec(Direction::Provided));
    auto client = b.client<QueryClient>(query_spec(Direction::Required));
    CHECK(code_of([&] { b.wire(*client, "p.state"); }) == ErrorCode::Incompatible);
    CHECK(code_of([&] { b.wire(*client, "nobody.q"); }) == ErrorCode::Incompatible);
    CHECK(client->state() == RequiredPort::State::Unwired);
}

TEST_CASE("transport: provider shutdown disconnects pending callers") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    auto client = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*client, "s.q");
    std::optional<ErrorCode> code;
    b.spawn([&] { code = code_of([&] { client->query(num(1)); }); });
    b.clock->settle();
    b.transport->unbind("s.q");
    server->shutdown();
    b.join();
    CHECK(code == ErrorCode::Disconnected);
    CHECK(client->state() == RequiredPort::State::Unwired);
}

TEST_CASE("transport: wire round trip mode carries every pattern") {
    Bench b(true);
    auto qs = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    qs->register_handler([](const CommObject& r) { return num(r.get_int("v") + 1, r.get_string("tag")); });
    auto qc = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*qc, "s.q");
    auto pub = b.server<PushServer>("p.state", newest_spec(Direction::Provided));
    auto sub = b.client<PushClient>(newest_spec(Direction::Required));
    b.wire(*sub, "p.state");
    sub->subscribe();
    pub->publish(num(4, "\xc3\xa9t\xc3\xa9"));
    CHECK(*sub->get_update(false) == num(4, "\xc3\xa9t\xc3\xa9"));
    std::optional<CommObject> answer;
    b.spawn([&] { answer = qc->query(num(1, "r")); });
    b.run_until(0);
    b.join();
    CHECK(*answer == num(2, "r"));
}

// --- state gating on required ports --------------------------------------------

TEST_CASE("deactivated required port rejects calls and fails pending ones") {
    Bench b;
    auto server = b.server<QueryServer>("s.q", query_spec(Direction::Provided));
    auto client = b.client<QueryClient>(query_spec(Direction::Required));
    b.wire(*client, "s.q");
    std::optional<ErrorCode> code;
    b.spawn([&] { code = code_of([&] { client->query(num(1)); }); });
    b.clock->settle();
    client->set_active(false);
    b.join();
    CHECK(code == ErrorCode::ServiceDeactivated);
    CHECK(code_of([&] { client->query_async(num(1)); }) == ErrorCode::ServiceDeactivated);
    client->set_active(true);
    server->register_handler([](const CommObject& r) { return r; });
    b.spawn([&] { client->query(num(1)); });
    b.run_until(0);
    b.join();
}
