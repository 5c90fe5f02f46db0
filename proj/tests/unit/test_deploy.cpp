#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "smartmars/deploy/deploy.hpp"
#include "smartmars/model/parser.hpp"

using namespace smartmars;
using namespace smartmars::deploy;

namespace {

const char* kTypes = "commobject Num { v: int64; }\ncommobject Txt { s: string; }\n";

TransformResult transform_text(const std::string& text) { return transform(model::parse_model(text)); }

std::vector<Issue> check_text(const std::string& text) {
    auto t = transform_text(text);
    REQUIRE(t.ok());
    return check_deployment(t.psm);
}

std::set<std::pair<IssueKind, std::string>> keys(const std::vector<Issue>& issues) {
    std::set<std::pair<IssueKind, std::string>> out;
    for (const auto& i : issues) out.insert({i.kind, i.element});
    return out;
}

bool has(const std::vector<Issue>& issues, IssueKind kind, const std::string& element) {
    return keys(issues).count({kind, element}) > 0;
}

}  // namespace

TEST_CASE("transform: navigation fixture maps every task and passes the checks") {
    auto doc = model::load_model_file(SMARTMARS_TEST_DATA "/../fixtures/navigation.model");
    auto t = transform(doc);
    for (const auto& e : t.errors) MESSAGE(e.to_string());
    REQUIRE(t.ok());
    CHECK(t.psm.instances.size() == 7);
    const auto* base = t.psm.find("base");
    REQUIRE(base);
    REQUIRE(base->tasks.size() == 2);
    CHECK(base->tasks[0].mapping == tasks::TaskMapping::RealtimeTask);
    CHECK(t.psm.find("sequencer")->tasks[0].mapping == tasks::TaskMapping::EmulatedPeriodicTask);
    CHECK(t.psm.find("watchdog")->tasks[0].mapping == tasks::TaskMapping::FreeRunningTask);
    CHECK(check_deployment(t.psm).empty());

    auto set = extract_analysis_model(t.psm);
    REQUIRE(set.per_platform.size() == 1);
    const auto& robot = set.per_platform.at("robot");
    REQUIRE(robot.size() == 3);
    CHECK(robot[0] == analysis::AnalysisTask{"base.integrate", 20, 100, 2, false});
    CHECK(robot[1] == analysis::AnalysisTask{"base.safety", 10, 50, 3, false});
    CHECK(robot[2] == analysis::AnalysisTask{"laser.sweep", 30, 200, 1, false});
    auto result = analysis::analyze(set).at("robot");
    auto sim = analysis::simulate_hyperperiod(robot);
    CHECK(result.set_schedulable);
    for (const auto& s : sim) CHECK(result.find(s.name)->response_ms == s.worst_response_ms);
    CHECK(result.find("base.safety")->response_ms == 10);
    CHECK(result.find("base.integrate")->response_ms == 30);
    CHECK(result.find("laser.sweep")->response_ms == 70);

    auto with_load = extract_analysis_model(t.psm, {true});
    REQUIRE(with_load.per_platform.at("robot").size() == 4);
    CHECK(with_load.per_platform.at("robot")[3] == analysis::AnalysisTask{"base.basestate", 2, 100, 4, true});
    CHECK(analysis::analyze(with_load, true).at("robot").set_schedulable);
}

TEST_CASE("transform: realtime task on a non-realtime platform is reported") {
    auto t = transform_text(std::string(kTypes) +
                            "component C { task ctl realtime=true periodic=true periodMs=10 wcetMs=2 priority=1; }\n"
                            "platform pc { realtime=false; memoryMB=64; }\n"
                            "deployment { instance c: C on pc; }\n");
    REQUIRE(t.errors.size() == 1);
    CHECK(t.errors[0].kind == IssueKind::MissingPlatformCapability);
    CHECK(t.errors[0].element == "c.ctl");
    CHECK(t.errors[0].message.find("realtime") != std::string::npos);
    CHECK(t.psm.find("c")->tasks.empty());
}

TEST_CASE("transform: all non-realtime tasks map to emulated or free-running") {
    auto t = transform_text(std::string(kTypes) +
                            "component C { task a realtime=false periodic=true periodMs=10 priority=1;\n"
                            "  task b realtime=false periodic=false priority=0; }\n"
                            "platform rt { realtime=true; memoryMB=64; }\n"
                            "deployment { instance c: C on rt; instance d: C on rt; }\n");
    REQUIRE(t.ok());
    for (const auto& inst : t.psm.instances)
        for (const auto& task : inst.tasks) CHECK(task.mapping != tasks::TaskMapping::RealtimeTask);
    CHECK(extract_analysis_model(t.psm).per_platform.empty());
    CHECK(analysis::analyze(extract_analysis_model(t.psm)).empty());
    CHECK(analysis::rta({}).set_schedulable);
}

TEST_CASE("transform: errors in different components are all reported") {
    auto t = transform_text(std::string(kTypes) +
                            "component A { task x realtime=true periodic=true periodMs=10 wcetMs=2 priority=1; }\n"
                            "component B { task y realtime=true periodic=true periodMs=20 wcetMs=3 priority=1; }\n"
                            "platform pc { realtime=false; memoryMB=64; }\n"
                            "deployment { instance b: B on pc; instance a: A on pc; }\n");
    REQUIRE(t.errors.size() == 2);
    CHECK(t.errors[0].element == "a.x");
    CHECK(t.errors[1].element == "b.y");
}

TEST_CASE("transform: validation findings are carried as issues") {
    auto t = transform_text(std::string(kTypes) +
                            "component A { port q: query required req=Num ans=Num timeoutMs=10; }\n"
                            "platform pc { realtime=false; memoryMB=0; }\n"
                            "deployment { instance a: A on pc; }\n");
    REQUIRE(t.errors.size() == 1);
    CHECK(t.errors[0].kind == IssueKind::Validation);
    CHECK(t.errors[0].element == "platform:pc");
}

TEST_CASE("check: device shortage, memory boundary and realtime capability") {
    auto serial = check_text(std::string(kTypes) +
                             "component S { requires device serial x1; requires memoryMB=1; }\n"
                             "platform p { realtime=false; memoryMB=64; device serial x1; }\n"
                             "deployment { instance a: S on p; instance b: S on p; }\n");
    REQUIRE(serial.size() == 1);
    CHECK(serial[0].kind == IssueKind::DeviceShortage);
    CHECK(serial[0].element == "platform:p.device:serial");

    auto memory = [](int a, int b) {
        return check_text(std::string(kTypes) + "component A { requires memoryMB=" + std::to_string(a) +
                          "; }\ncomponent B { requires memoryMB=" + std::to_string(b) +
                          "; }\nplatform p { realtime=false; memoryMB=1024; }\n"
                          "deployment { instance a: A on p; instance b: B on p; }\n");
    };
    CHECK(memory(512, 512).empty());
    auto over = memory(512, 513);
    REQUIRE(over.size() == 1);
    CHECK(over[0].kind == IssueKind::MemoryExceeded);
    CHECK(over[0].element == "platform:p");

    auto rt = check_text(std::string(kTypes) +
                         "component R { requires realtime; }\n"
                         "platform p { realtime=false; memoryMB=64; }\n"
                         "platform q { realtime=true; memoryMB=64; }\n"
                         "deployment { instance a: R on p; instance b: R on q; }\n");
    REQUIRE(rt.size() == 1);
    CHECK(rt[0].kind == IssueKind::RealtimeUnsupported);
    CHECK(rt[0].element == "instance:a");
}

TEST_CASE("check: wiring compatibility and query timeouts against handling time") {
    std::string comps = std::string(kTypes) +
                        "component P { port q: query provided req=Num ans=Num minHandlingMs=20;\n"
                        "  port n: pushnewest provided ans=Num; port t: query provided req=Num ans=Txt; }\n"
                        "component C { port q: query required req=Num ans=Num timeoutMs=10;\n"
                        "  port w: query required req=Num ans=Num timeoutMs=20;\n"
                        "  port u: query required req=Num ans=Num timeoutMs=none; }\n"
                        "platform p { realtime=false; memoryMB=64; }\n";
    auto issues = check_text(comps +
                             "deployment { instance p: P on p; instance c: C on p;\n"
                             "  wire c.q -> p.n; wire c.w -> p.t; wire c.u -> p.q; }\n");
    REQUIRE(issues.size() == 2);
    CHECK(has(issues, IssueKind::Incompatible, "wire:c.q->p.n"));
    CHECK(has(issues, IssueKind::Incompatible, "wire:c.w->p.t"));
    CHECK(issues[0].message.find("pattern") != std::string::npos);
    CHECK(issues[1].message.find("type") != std::string::npos);

    auto timeouts = check_text(comps + "deployment { instance p: P on p; instance c: C on p;\n"
                                       "  wire c.q -> p.q; wire c.w -> p.q; wire c.u -> p.q; }\n");
    REQUIRE(timeouts.size() == 1);
    CHECK(timeouts[0].kind == IssueKind::TimeoutBelowHandling);
    CHECK(timeouts[0].element == "wire:c.q->p.q");

    auto overridden = check_text(comps + "deployment { instance p: P on p; instance c: C on p;\n"
                                         "  wire c.q -> p.q; override c.q timeoutMs=25; }\n");
    CHECK(overridden.empty());
    auto t = transform_text(comps + "deployment { instance p: P on p; instance c: C on p;\n"
                                    "  wire c.q -> p.q; override c.q timeoutMs=25; }\n");
    CHECK(t.psm.find("c")->component.find_port("q")->qos.timeout == model::TimeoutMs::millis(25));
    CHECK(t.psm.find("p")->component.find_port("q")->qos.min_handling_ms == 20);
}

TEST_CASE("extract: per platform sets keep C and T exactly") {
    auto t = transform_text(std::string(kTypes) +
                            "component A { task x realtime=true periodic=true periodMs=7 wcetMs=3 priority=2;\n"
                            "  task e realtime=false periodic=true periodMs=40 wcetMs=4 priority=1;\n"
                            "  task n realtime=false periodic=true periodMs=40 priority=1; }\n"
                            "platform p { realtime=true; memoryMB=64; }\n"
                            "platform q { realtime=true; memoryMB=64; }\n"
                            "deployment { instance a: A on p; instance b: A on q; }\n");
    REQUIRE(t.ok());
    auto set = extract_analysis_model(t.psm);
    REQUIRE(set.per_platform.size() == 2);
    for (const auto& [platform, tasks] : set.per_platform) {
        REQUIRE(tasks.size() == 2);
        CHECK(tasks[0].wcet_ms == 3);
        CHECK(tasks[0].period_ms == 7);
        CHECK_FALSE(tasks[0].emulated);
        CHECK(tasks[1].emulated);
        CHECK(tasks[1].wcet_ms == 4);
    }
    CHECK(set.per_platform.at("p")[0].name == "a.x");
    CHECK(set.per_platform.at("q")[0].name == "b.x");
}

namespace {

struct RandomDeployment {
    std::vector<std::string> components;
    std::vector<std::string> platforms;
    std::vector<std::string> instances;
    std::vector<std::string> wires;

    std::string text() const {
        std::ostringstream os;
        os << kTypes;
        for (const auto& c : components) os << c << "\n";
        for (const auto& p : platforms) os << p << "\n";
        os << "deployment {\n";
        for (const auto& i : instances) os << "  " << i << "\n";
        for (const auto& w : wires) os << "  " << w << "\n";
        os << "}\n";
        return os.str();
    }
};

/// Components K0..K3 with memory/device/realtime demands and a query pair;
/// instances i0.. placed at random; wires from random required to random
/// provided ports.
RandomDeployment random_deployment(std::mt19937_64& g, int instances) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); };
    RandomDeployment d;
    const char* classes[] = {"serial", "usb", "camera"};
    for (int k = 0; k < 4; ++k) {
        std::ostringstream c;
        c << "component K" << k << " {";
        c << " port q: query provided req=Num ans=" << (pick(0, 3) == 0 ? "Txt" : "Num") << " minHandlingMs=" << pick(1, 50)
          << ";";
        c << " port n: pushnewest provided ans=Num;";
        c << " port r: query required req=Num ans=Num timeoutMs=" << pick(1, 60) << ";";
        c << " port s: pushnewest required ans=Num;";
        c << " task t realtime=" << (pick(0, 1) ? "true" : "false") << " periodic=true periodMs=" << pick(10, 40)
          << " wcetMs=" << pick(1, 9) << " priority=" << k << ";";
        c << " requires memoryMB=" << pick(1, 300) << ";";
        if (pick(0, 1)) c << " requires device " << classes[pick(0, 2)] << " x" << pick(1, 2) << ";";
        if (pick(0, 2) == 0) c << " requires realtime;";
        c << " }";
        d.components.push_back(c.str());
    }
    for (int p = 0; p < 3; ++p) {
        std::ostringstream s;
        s << "platform P" << p << " { realtime=true; memoryMB=" << pick(100, 900) << ";";
        for (const char* cls : classes)
            if (pick(0, 1)) s << " device " << cls << " x" << pick(1, 3) << ";";
        s << " }";
        d.platforms.push_back(s.str());
    }
    for (int i = 0; i < instances; ++i)
        d.instances.push_back("instance i" + std::to_string(i) + ": K" + std::to_string(pick(0, 3)) + " on P" +
                              std::to_string(pick(0, 2)) + ";");
    std::set<std::string> used;
    for (int w = 0; w < instances; ++w) {
        auto from = "i" + std::to_string(pick(0, instances - 1)) + (pick(0, 1) ? ".r" : ".s");
        if (!used.insert(from).second) continue;
        auto to = "i" + std::to_string(pick(0, instances - 1)) + (pick(0, 1) ? ".q" : ".n");
        d.wires.push_back("wire " + from + " -> " + to + ";");
    }
    return d;
}

}  // namespace

TEST_CASE("check: adding an instance never removes a violation") {
    int grew = 0;
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        CAPTURE(seed);
        std::mt19937_64 g(seed);
        auto d = random_deployment(g, std::uniform_int_distribution<int>(1, 6)(g));
        auto before = transform_text(d.text());
        auto v_before = keys(check_deployment(before.psm));
        auto bigger = d;
        bigger.instances.push_back("instance extra: K" + std::to_string(seed % 4) + " on P" + std::to_string(seed % 3) + ";");
        auto after = transform_text(bigger.text());
        auto v_after = keys(check_deployment(after.psm));
        for (const auto& k : v_before) CHECK(v_after.count(k) == 1);
        auto e_before = keys(before.errors);
        auto e_after = keys(after.errors);
        for (const auto& k : e_before) CHECK(e_after.count(k) == 1);
        if (v_after.size() > v_before.size()) ++grew;
    }
    CHECK(grew >= 30);
}

TEST_CASE("transform and check are stable under declaration reordering") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        CAPTURE(seed);
        std::mt19937_64 g(seed);
        auto d = random_deployment(g, std::uniform_int_distribution<int>(1, 6)(g));
        auto shuffled = d;
        std::shuffle(shuffled.components.begin(), shuffled.components.end(), g);
        std::shuffle(shuffled.platforms.begin(), shuffled.platforms.end(), g);
        std::shuffle(shuffled.instances.begin(), shuffled.instances.end(), g);
        std::shuffle(shuffled.wires.begin(), shuffled.wires.end(), g);
        auto a = transform_text(d.text());
        auto b = transform_text(shuffled.text());
        CHECK(a.errors == b.errors);
        CHECK(a.psm.instances == b.psm.instances);
        auto va = check_deployment(a.psm);
        auto vb = check_deployment(b.psm);
        CHECK(va == vb);
        auto ea = extract_analysis_model(a.psm, {true});
        CHECK(ea == extract_analysis_model(b.psm, {true}));
        CHECK(deployment_report(a, va, ea).dump() == deployment_report(b, vb, ea).dump());
        CHECK(deployment_report(a, va, ea).dump() == deployment_report(transform_text(d.text()), va, ea).dump());
    }
}

TEST_CASE("report: schema keys") {
    auto t = transform_text(std::string(kTypes) +
                            "component A { task x realtime=true periodic=true periodMs=7 wcetMs=3 priority=2; "
                            "requires memoryMB=100; }\n"
                            "platform p { realtime=true; memoryMB=64; }\n"
                            "deployment { instance a: A on p; }\n");
    auto v = check_deployment(t.psm);
    auto j = deployment_report(t, v, extract_analysis_model(t.psm));
    CHECK(j["errors"].empty());
    REQUIRE(j["violations"].size() == 1);
    CHECK(j["violations"][0]["kind"] == "MemoryExceeded");
    CHECK(j["violations"][0]["element"] == "platform:p");
    CHECK(j["mapping"][0] == nlohmann::json{{"instance", "a"}, {"task", "x"}, {"mapping", "RealtimeTask"}, {"platform", "p"}});
    CHECK(j["taskSets"]["p"][0] ==
          nlohmann::json{{"name", "a.x"}, {"wcetMs", 3}, {"periodMs", 7}, {"priority", 2}, {"emulated", false}});
}
