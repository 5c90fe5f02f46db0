#include <doctest.h>

#include <atomic>
#include <thread>

#include "harness.hpp"
#include "smartmars/component/system.hpp"
#include "smartmars/error.hpp"
#include "wiring_stress.hpp"

using namespace smartmars;
using namespace smartmars::patterns;
using namespace smartmars::component;
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

model::ServicePortSpec with_timeout(model::ServicePortSpec s, std::int64_t ms) {
    s.qos.timeout = model::TimeoutMs::millis(ms);
    return s;
}

/// Provider: query "q" and push newest "n"; client: query "rq", send "rs".
model::ComponentModel server_model() {
    model::ComponentModel m;
    m.name = "Server";
    m.ports.push_back(port_spec("q", Pattern::Query, Direction::Provided, "Num", "Num"));
    m.ports.push_back(port_spec("n", Pattern::PushNewest, Direction::Provided, std::nullopt, "Num"));
    m.ports.push_back(port_spec("s", Pattern::Send, Direction::Provided, "Num", std::nullopt));
    m.params.push_back({"gain", model::FieldType::primitive(model::FieldType::Kind::Int64)});
    m.params.push_back({"label", model::FieldType::primitive(model::FieldType::Kind::String)});
    return m;
}

model::ComponentModel client_model(std::int64_t timeout = 1000) {
    model::ComponentModel m;
    m.name = "Client";
    m.ports.push_back(with_timeout(port_spec("rq", Pattern::Query, Direction::Required, "Num", "Num"), timeout));
    m.ports.push_back(port_spec("rs", Pattern::Send, Direction::Required, "Num", std::nullopt));
    m.ports.push_back(with_timeout(port_spec("ro", Pattern::Query, Direction::Required, "Num", "Other"), timeout));
    return m;
}

/// Query handler answering v+1 tagged with the server name; optionally
/// holding each request for `delay` virtual ms.
System::Configure echo(std::shared_ptr<tasks::Clock> clock, std::string name, tasks::Millis delay = 0) {
    return [clock, name, delay](Component& c) {
        c.automaton().add_state("active");
        c.automaton().bind(c.port("q"), {"active"});
        c.port_as<QueryServer>("q")->register_handler([clock, name, delay](const CommObject& r) {
            if (delay > 0) clock->sleep_for(delay);
            return num(r.get_int("v") + 1, name);
        });
    };
}

struct Rig {
    Bench bench;
    System system{bench.types, bench.clock, bench.transport};

    ~Rig() {
        bench.clock->stop();
        bench.join();
        system.shutdown();
    }
};

}  // namespace

TEST_CASE("state: Neutral to active runs the entry action once and activates bound ports") {
    Rig rig;
    std::atomic<int> entries{0};
    auto server = rig.system.add("srv", server_model(), [&](Component& c) {
        echo(rig.bench.clock, "srv")(c);
        c.automaton().on_entry("active", [&] { ++entries; });
    });
    auto client = rig.system.add("cli", client_model());
    rig.system.connect({"cli", "rq"}, {"srv", "q"});
    CHECK(server->automaton().current() == "Neutral");
    CHECK_FALSE(server->port("q")->active());
    CHECK(server->port("n")->active());

    rig.system.set_state("srv", "active");
    CHECK(entries == 1);
    CHECK(server->port("q")->active());
    CHECK(client->port_as<QueryClient>("rq")->query(num(1)) == num(2, "srv"));
    rig.system.set_state("srv", "active");
    CHECK(entries == 1);
}

TEST_CASE("state: back to Neutral rejects queries with ServiceDeactivated") {
    Rig rig;
    auto server = rig.system.add("srv", server_model(), echo(rig.bench.clock, "srv", 50));
    auto client = rig.system.add("cli", client_model());
    rig.system.connect({"cli", "rq"}, {"srv", "q"});
    rig.system.set_state("srv", "active");
    auto rq = client->port_as<QueryClient>("rq");

    std::optional<ErrorCode> pending;
    tasks::Millis ended = -1;
    rig.bench.spawn([&] {
        pending = code_of([&] { rq->query(num(1)); });
        ended = rig.bench.clock->now();
    });
    rig.bench.run_until(10);
    rig.system.set_state("srv", "Neutral");
    rig.bench.run_until(20);
    CHECK(pending == ErrorCode::ServiceDeactivated);
    CHECK(ended == 10);
    CHECK(code_of([&] { rq->query(num(2)); }) == ErrorCode::ServiceDeactivated);
    rig.system.set_state("srv", "active");
    rig.bench.spawn([&] { CHECK(rq->query(num(3)).get_int("v") == 4); });
    rig.bench.run_until(200);
}

TEST_CASE("state: unknown state names are refused") {
    Rig rig;
    auto server = rig.system.add("srv", server_model(), echo(rig.bench.clock, "srv"));
    CHECK(code_of([&] { rig.system.set_state("srv", "flying"); }) == ErrorCode::UnknownState);
    CHECK(server->automaton().current() == "Neutral");
    CHECK(code_of([&] { rig.system.set_state("nobody", "active"); }) == ErrorCode::UnknownEndpoint);
    CHECK(code_of([&] { server->automaton().bind(server->port("n"), {"flying"}); }) == ErrorCode::UnknownState);
    CHECK(code_of([&] { server->automaton().bind(server->port("n"), {"Neutral"}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("state: exit runs before port changes and entry after") {
    StateAutomaton a;
    Bench bench;
    auto port = bench.server<QueryServer>("x.q", port_spec("q", Pattern::Query, Direction::Provided, "Num", "Num"));
    a.add_state("run");
    a.add_state("idle");
    a.bind(port, {"run"});
    std::vector<std::string> trace;
    auto record = [&](std::string what) { return [&trace, what, port] { trace.push_back(what + (port->active() ? "+" : "-")); }; };
    a.on_entry("Neutral", record("enter Neutral"));
    a.on_exit("Neutral", record("exit Neutral"));
    a.on_entry("run", record("enter run"));
    a.on_exit("run", record("exit run"));
    a.on_entry("idle", record("enter idle"));
    a.start();
    a.set_state("run");
    a.set_state("idle");
    a.set_state("Neutral");
    CHECK(trace == std::vector<std::string>{"enter Neutral-", "exit Neutral-", "enter run+", "exit run+",
                                            "enter idle-", "enter Neutral-"});
    CHECK_THROWS_AS(
        [&] {
            StateAutomaton b;
            b.add_state("s");
            b.on_entry("s", [&b] { b.set_state("Neutral"); });
            b.set_state("s");
        }(),
        std::logic_error);
}

TEST_CASE("state: unbound ports stay active in every state") {
    Rig rig;
    auto server = rig.system.add("srv", server_model(), echo(rig.bench.clock, "srv"));
    for (std::string s : {"active", "Neutral", "active"}) {
        rig.system.set_state("srv", s);
        CHECK(server->port("n")->active());
        CHECK(server->port("s")->active());
        CHECK(server->port("q")->active() == (s == "active"));
    }
}

TEST_CASE("wiring: compatible query pair is wired and answers") {
    Rig rig;
    rig.system.add("srv", server_model(), echo(rig.bench.clock, "srv"));
    auto client = rig.system.add("cli", client_model());
    rig.system.set_state("srv", "active");
    rig.system.connect({"cli", "rq"}, {"srv", "q"});
    CHECK(rig.system.wiring().get({"cli", "rq"}) == PortRef{"srv", "q"});
    auto rq = client->port_as<QueryClient>("rq");
    CHECK(rq->state() == RequiredPort::State::Wired);
    CHECK(rq->peer() == "srv.q");
    CHECK(rq->query(num(41)) == num(42, "srv"));
}

TEST_CASE("wiring: incompatible pairs are refused with a reason") {
    Rig rig;
    rig.system.add("srv", server_model(), echo(rig.bench.clock, "srv"));
    auto client = rig.system.add("cli", client_model());
    try {
        rig.system.connect({"cli", "rq"}, {"srv", "n"});
        FAIL("connect should fail");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Incompatible);
        CHECK(e.detail() == "pattern");
    }
    try {
        rig.system.connect({"cli", "ro"}, {"srv", "q"});
        FAIL("connect should fail");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Incompatible);
        CHECK(e.detail() == "type");
    }
    CHECK_FALSE(rig.system.wiring().get({"cli", "rq"}));
    CHECK(client->port_as<QueryClient>("rq")->state() == RequiredPort::State::Unwired);
}

TEST_CASE("wiring: unknown endpoints") {
    Rig rig;
    rig.system.add("srv", server_model(), echo(rig.bench.clock, "srv"));
    rig.system.add("cli", client_model());
    CHECK(code_of([&] { rig.system.connect({"cli", "nope"}, {"srv", "q"}); }) == ErrorCode::UnknownEndpoint);
    CHECK(code_of([&] { rig.system.connect({"cli", "rq"}, {"srv", "nope"}); }) == ErrorCode::UnknownEndpoint);
    CHECK(code_of([&] { rig.system.connect({"ghost", "rq"}, {"srv", "q"}); }) == ErrorCode::UnknownEndpoint);
    CHECK(code_of([&] { rig.system.connect({"cli", "rq"}, {"ghost", "q"}); }) == ErrorCode::UnknownEndpoint);
    CHECK(code_of([&] { rig.system.connect({"srv", "q"}, {"cli", "rq"}); }) == ErrorCode::UnknownEndpoint);
    CHECK(code_of([&] { rig.system.disconnect({"srv", "q"}); }) == ErrorCode::UnknownEndpoint);
    CHECK(code_of([&] { rig.system.disconnect({"cli", "nope"}); }) == ErrorCode::UnknownEndpoint);
    CHECK(code_of([&] { rig.system.add("cli", client_model()); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { rig.system.add("a.b", client_model()); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { rig.system.at("ghost"); }) == ErrorCode::UnknownEndpoint);
}

TEST_CASE("wiring: rewiring fails the pending query before the new wiring is visible") {
    Rig rig;
    rig.system.add("a", server_model(), echo(rig.bench.clock, "a", 100));
    rig.system.add("b", server_model(), echo(rig.bench.clock, "b"));
    auto client = rig.system.add("cli", client_model());
    rig.system.set_state("a", "active");
    rig.system.set_state("b", "active");
    rig.system.connect({"cli", "rq"}, {"a", "q"});
    auto rq = client->port_as<QueryClient>("rq");

    std::optional<ErrorCode> pending;
    tasks::Millis ended = -1;
    rig.bench.spawn([&] {
        pending = code_of([&] { rq->query(num(1)); });
        ended = rig.bench.clock->now();
    });
    rig.bench.run_until(30);
    rig.system.connect({"cli", "rq"}, {"b", "q"});
    CHECK(pending == ErrorCode::Disconnected);
    CHECK(ended == 30);
    CHECK(rig.system.wiring().get({"cli", "rq"}) == PortRef{"b", "q"});
    CHECK(rq->query(num(5)) == num(6, "b"));
    rig.bench.run_until(300);
    CHECK(rq->pending() == 0);
}

TEST_CASE("wiring: disconnect releases three blocked queries") {
    Rig rig;
    rig.system.add("srv", server_model(), echo(rig.bench.clock, "srv", 500));
    auto client = rig.system.add("cli", client_model(5000));
    rig.system.set_state("srv", "active");
    rig.system.connect({"cli", "rq"}, {"srv", "q"});
    auto rq = client->port_as<QueryClient>("rq");
    std::vector<std::optional<ErrorCode>> codes(3);
    std::vector<tasks::Millis> ended(3, -1);
    for (int i = 0; i < 3; ++i)
        rig.bench.spawn([&, i] {
            codes[i] = code_of([&] { rq->query(num(i)); });
            ended[i] = rig.bench.clock->now();
        });
    rig.bench.run_until(40);
    rig.system.disconnect({"cli", "rq"});
    rig.bench.run_until(41);
    for (int i = 0; i < 3; ++i) {
        CHECK(codes[i] == ErrorCode::Disconnected);
        CHECK(ended[i] == 40);
    }
    CHECK(rq->state() == RequiredPort::State::Unwired);
    CHECK_FALSE(rig.system.wiring().get({"cli", "rq"}));
    rig.system.disconnect({"cli", "rq"});
    CHECK(code_of([&] { rq->query(num(9)); }) == ErrorCode::NotWired);
}

TEST_CASE("wiring: removing the provider disconnects its clients") {
    Rig rig;
    rig.system.add("srv", server_model(), echo(rig.bench.clock, "srv", 100));
    auto client = rig.system.add("cli", client_model());
    rig.system.set_state("srv", "active");
    rig.system.connect({"cli", "rq"}, {"srv", "q"});
    auto rq = client->port_as<QueryClient>("rq");
    std::optional<ErrorCode> pending;
    rig.bench.spawn([&] { pending = code_of([&] { rq->query(num(1)); }); });
    rig.bench.run_until(10);
    rig.system.remove("srv");
    rig.bench.run_until(11);
    CHECK(pending == ErrorCode::Disconnected);
    CHECK(rig.system.wiring().entries().empty());
    CHECK(code_of([&] { rig.system.connect({"cli", "rq"}, {"srv", "q"}); }) == ErrorCode::UnknownEndpoint);
    CHECK(code_of([&] { rig.system.remove("srv"); }) == ErrorCode::UnknownEndpoint);
    CHECK(rig.system.instances() == std::vector<std::string>{"cli"});
}

TEST_CASE("wiring: provider destroyed while a client connects never deadlocks") {
    int wired_then_lost = 0;
    int refused = 0;
    for (int round = 0; round < 200; ++round) {
        auto clock = std::make_shared<tasks::RealClock>();
        auto types = test_types();
        auto transport = std::make_shared<InProcessTransport>(types);
        System system(types, clock, transport);
        auto server = system.add("srv", server_model());
        auto client = system.add("cli", client_model());
        std::thread destroyer([&] {
            if (round % 3 == 0) std::this_thread::yield();
            transport->unbind("srv.q");
            server->stop();
        });
        if (round % 4 == 0) destroyer.join();
        std::optional<ErrorCode> connect_error;
        try {
            system.connect({"cli", "rq"}, {"srv", "q"});
        } catch (const Error& e) {
            connect_error = e.code();
        }
        if (destroyer.joinable()) destroyer.join();
        auto rq = client->port_as<QueryClient>("rq");
        if (connect_error) {
            CHECK(*connect_error == ErrorCode::Incompatible);
            ++refused;
        } else {
            ++wired_then_lost;
        }
        CHECK(rq->state() == RequiredPort::State::Unwired);
        CHECK(code_of([&] { rq->query(num(1)); }) == ErrorCode::NotWired);
    }
    CHECK(wired_then_lost + refused == 200);
    CHECK(refused >= 50);
    MESSAGE("wired then lost: " << wired_then_lost << ", refused: " << refused);
}

TEST_CASE("params: typed set notifies hooks; unknown keys and wrong types are refused") {
    Rig rig;
    std::vector<std::pair<std::string, Value>> seen;
    auto server = rig.system.add("srv", server_model(), [&](Component& c) {
        c.params().on_change([&](const std::string& k, const Value& v) { seen.emplace_back(k, v); });
    });
    rig.system.set_param("srv", "gain", 7);
    rig.system.set_param("srv", "label", "fast");
    CHECK(server->params().get("gain") == Value(7));
    CHECK(server->params().get("label") == Value("fast"));
    REQUIRE(seen.size() == 2);
    CHECK(seen[0].first == "gain");
    CHECK(seen[0].second == Value(7));
    CHECK(code_of([&] { rig.system.set_param("srv", "speed", 1); }) == ErrorCode::UnknownKey);
    CHECK(code_of([&] { rig.system.set_param("srv", "gain", "seven"); }) == ErrorCode::TypeMismatch);
    CHECK(code_of([&] { server->params().set("gain", 1.5); }) == ErrorCode::TypeMismatch);
    CHECK(code_of([&] { server->params().set("nope", 1); }) == ErrorCode::UnknownKey);
    CHECK(server->params().get("gain") == Value(7));
    CHECK(seen.size() == 2);
}

TEST_CASE("params: wire form round trips each declared type") {
    auto types = test_types();
    using K = model::FieldType::Kind;
    auto list = model::FieldType::list(model::FieldType::primitive(K::Float64));
    CHECK(decode_param(encode_param(Value(-3), model::FieldType::primitive(K::Int64), *types),
                       model::FieldType::primitive(K::Int64), *types) == Value(-3));
    CHECK(decode_param(encode_param(Value(std::vector<Value>{1.5, 2.5}), list, *types), list, *types) ==
          Value(std::vector<Value>{1.5, 2.5}));
    CHECK(decode_param(encode_param(Value(num(4, "t")), model::FieldType::object("Num"), *types),
                       model::FieldType::object("Num"), *types) == Value(num(4, "t")));
    CHECK_THROWS_AS(encode_param(Value(true), model::FieldType::primitive(K::Int64), *types), Error);
}

TEST_CASE("control: malformed control messages are refused by the endpoint") {
    Rig rig;
    rig.system.add("srv", server_model(), echo(rig.bench.clock, "srv"));
    auto required = control_spec();
    required.direction = Direction::Required;
    auto ch = rig.bench.transport->open(control_address("srv"), required, [](Message) {});
    CHECK(ch->post(Message{Op::Query, Kind::Request, 1, num(1)}) == Admission::Malformed);
    CHECK(ch->post(Message{Op::ControlState, Kind::Control, 1, num(1)}) == Admission::Malformed);
    ch->close();
    auto wrong = required;
    wrong.pattern = Pattern::Send;
    CHECK(code_of([&] { rig.bench.transport->open(control_address("srv"), wrong, [](Message) {}); }) ==
          ErrorCode::Incompatible);
}

TEST_CASE("control: state commands from several threads are applied in order") {
    Rig rig;
    std::vector<std::string> order;
    std::mutex mu;
    auto server = rig.system.add("srv", server_model(), [&](Component& c) {
        c.automaton().add_state("x");
        c.automaton().add_state("y");
        for (std::string s : {"x", "y", "Neutral"})
            c.automaton().on_entry(s, [&, s] {
                std::lock_guard lk(mu);
                order.push_back(s);
            });
    });
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&, i] { rig.system.set_state("srv", i % 2 ? "x" : "y"); });
    for (auto& t : threads) t.join();
    std::lock_guard lk(mu);
    REQUIRE(order.size() >= 2);
    CHECK(order.front() == "Neutral");
    for (std::size_t i = 1; i < order.size(); ++i) CHECK(order[i] != order[i - 1]);
    CHECK(order.back() == server->automaton().current());
}

TEST_CASE("wiring: randomized schedules keep housekeeping live and states consistent") {
    auto report = run_wiring_stress(1, 500);
    INFO("first failing seed " << report.first_failing_seed.value_or(0) << ": " << report.first_failure);
    CHECK(report.runs == 500);
    CHECK(report.failures == 0);
}
