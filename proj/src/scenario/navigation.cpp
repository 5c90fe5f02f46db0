#include "smartmars/scenario/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "navigation_model.inc"
#include "smartmars/error.hpp"
#include "smartmars/model/parser.hpp"
#include "smartmars/patterns/event.hpp"
#include "smartmars/patterns/push.hpp"
#include "smartmars/patterns/query.hpp"
#include "smartmars/patterns/send.hpp"

namespace smartmars::scenario {

using component::Component;
using patterns::CommObject;
using patterns::Value;
using tasks::TaskBody;
using tasks::TaskContext;

std::string_view navigation_model_text() { return kNavigationModel; }

namespace {

constexpr double kProximityThreshold = 0.5;
constexpr double kMaxSpeed = 0.5;

class BaseBehavior : public ComponentBehavior {
public:
    explicit BaseBehavior(bool simulated) : simulated_(simulated) {}

    void configure(Component& c, RunContext& ctx) override {
        c_ = &c;
        ctx_ = &ctx;
        c.port_as<patterns::SendServer>("motion")->register_handler([this](const CommObject& m) {
            {
                std::lock_guard lk(mu_);
                v_ = m.get_float("v");
                w_ = m.get_float("w");
            }
            ctx_->count(c_->instance() + ".motionReceived");
        });
        auto handling = c.model().find_port("status")->qos.min_handling_ms;
        auto clock = c.clock();
        c.port_as<patterns::QueryServer>("status")->register_handler([this, clock, handling](const CommObject&) {
            if (handling) clock->sleep_for(*handling);
            std::lock_guard lk(mu_);
            return CommObject("BaseStatus")
                .set("battery", 1.0 - static_cast<double>(clock->now()) / 1e6)
                .set("source", simulated_ ? "sim" : "stub");
        });
    }

    void start(Component& c, RunContext&) override {
        auto push = c.port_as<patterns::PushServer>("basestate");
        push->publish(state(c.clock()->now()));
        ticket_ = push->start_timed();
    }

    TaskBody task(const std::string& name) override {
        if (name == "integrate")
            return [this](TaskContext& t) {
                const double dt = static_cast<double>(t.clock().now() - last_) / 1000.0;
                last_ = t.clock().now();
                {
                    std::lock_guard lk(mu_);
                    heading_ += w_ * dt;
                    x_ += v_ * std::cos(heading_) * dt;
                    y_ += v_ * std::sin(heading_) * dt;
                }
                c_->port_as<patterns::PushServer>("basestate")->publish(state(last_));
            };
        if (name == "safety")
            return [this](TaskContext&) {
                std::lock_guard lk(mu_);
                v_ = std::clamp(v_, -kMaxSpeed, kMaxSpeed);
            };
        return {};
    }

    void finish(Component&, RunContext&) override { ticket_.stop(); }

private:
    CommObject state(tasks::Millis now) {
        std::lock_guard lk(mu_);
        return CommObject("BaseState")
            .set("x", x_)
            .set("y", y_)
            .set("heading", heading_)
            .set("v", v_)
            .set("w", w_)
            .set("timeMs", now);
    }

    bool simulated_;
    Component* c_ = nullptr;
    RunContext* ctx_ = nullptr;
    std::mutex mu_;
    double x_ = 0, y_ = 0, heading_ = 0, v_ = 0, w_ = 0;
    tasks::Millis last_ = 0;
    patterns::TimedTicket ticket_;
};

/// Obstacle distance walks 2.0 -> 0.3 -> 2.0 over ten sweeps.
double obstacle_distance(std::int64_t sweep) {
    return 0.3 + 1.7 * std::abs(static_cast<double>(sweep % 10) - 5.0) / 5.0;
}

class LaserBehavior : public ComponentBehavior {
public:
    void configure(Component& c, RunContext&) override { c_ = &c; }

    TaskBody task(const std::string& name) override {
        if (name != "sweep") return {};
        return [this](TaskContext& t) {
            const double d = obstacle_distance(t.iteration());
            std::vector<Value> ranges;
            for (int i = 0; i < 8; ++i) ranges.emplace_back(d + 0.1 * i);
            c_->port_as<patterns::PushServer>("scan")->publish(
                CommObject("LaserScan").set("ranges", std::move(ranges)).set("timeMs", t.clock().now()));
        };
    }

private:
    Component* c_ = nullptr;
};

class MapperBehavior : public ComponentBehavior {
public:
    void configure(Component& c, RunContext&) override {
        c_ = &c;
        c.params().set("resolution", Value(4));
        auto handling = c.model().find_port("map")->qos.min_handling_ms;
        auto clock = c.clock();
        c.port_as<patterns::QueryServer>("map")->register_handler([this, clock, handling](const CommObject& req) {
            if (handling) clock->sleep_for(*handling);
            std::int64_t res = req.get_int("resolution");
            if (res <= 0) res = std::get<std::int64_t>(c_->params().get("resolution")->data);
            std::vector<Value> cells(static_cast<std::size_t>(res * res), Value(0));
            std::lock_guard lk(mu_);
            return CommObject("GridMap")
                .set("width", res)
                .set("height", res)
                .set("cells", std::move(cells))
                .set("scans", scans_);
        });
    }

    void start(Component& c, RunContext&) override {
        c.port_as<patterns::PushClient>("scan")->subscribe();
        c.port_as<patterns::PushClient>("basestate")->subscribe();
    }

    TaskBody task(const std::string& name) override {
        if (name != "update") return {};
        return [this](TaskContext&) {
            bool fresh = c_->port_as<patterns::PushClient>("scan")->get_update(false).has_value();
            c_->port_as<patterns::PushClient>("basestate")->get_update(false);
            std::lock_guard lk(mu_);
            if (fresh) ++scans_;
        };
    }

private:
    Component* c_ = nullptr;
    std::mutex mu_;
    std::int64_t scans_ = 0;
};

class WatchdogBehavior : public ComponentBehavior {
public:
    void configure(Component& c, RunContext& ctx) override {
        c_ = &c;
        ctx_ = &ctx;
        c.port_as<patterns::EventServer>("proximity")
            ->register_handler(
                [](const CommObject& param, const CommObject& state) {
                    return state.get_float("distance") < param.get_float("distance");
                },
                [](const CommObject&, const CommObject& state) { return state; });
    }

    void start(Component& c, RunContext&) override { c.port_as<patterns::PushClient>("scan")->subscribe(); }

    TaskBody task(const std::string& name) override {
        if (name != "monitor") return {};
        return [this](TaskContext& t) {
            auto scan = c_->port_as<patterns::PushClient>("scan");
            auto proximity = c_->port_as<patterns::EventServer>("proximity");
            while (!t.stop_requested()) {
                auto s = scan->get_update(true);
                if (!s) continue;
                double nearest = 1e9;
                for (const auto& r : s->get_list("ranges")) nearest = std::min(nearest, std::get<double>(r.data));
                proximity->put_state(
                    CommObject("ProximityAlarm").set("distance", nearest).set("timeMs", s->get_int("timeMs")));
                ctx_->count(c_->instance() + ".checks");
            }
        };
    }

private:
    Component* c_ = nullptr;
    RunContext* ctx_ = nullptr;
};

class PlannerBehavior : public ComponentBehavior {
public:
    void configure(Component& c, RunContext& ctx) override {
        c_ = &c;
        ctx_ = &ctx;
        c.automaton().add_state("active");
        c.automaton().bind(c.port("motion"), {"active"});
        c.params().set("maxSpeed", Value(kMaxSpeed));
    }

    void start(Component& c, RunContext& ctx) override {
        c.port_as<patterns::PushClient>("basestate")->subscribe();
        activation_ = c.port_as<patterns::EventClient>("proximity")
                          ->activate(CommObject("ProximityThreshold").set("distance", kProximityThreshold),
                                     patterns::EventMode::Continuous);
        ctx.system().set_state(c.instance(), "active");
    }

    TaskBody task(const std::string& name) override {
        if (name != "plan") return {};
        return [this](TaskContext&) { plan(); };
    }

    void finish(Component&, RunContext&) override { drain_alarms(); }

private:
    void count(const std::string& what) { ctx_->count(c_->instance() + "." + what); }

    void plan() {
        auto pose = c_->port_as<patterns::PushClient>("basestate")->get_update(false);
        try {
            c_->port_as<patterns::QueryClient>("map")->query(CommObject("MapRequest").set("resolution", 0));
            count("plans");
        } catch (const Error& e) {
            count("mapFailed");
            return;
        }
        try {
            c_->port_as<patterns::QueryClient>("status")->query(CommObject("StatusRequest").set("detail", false));
            count("statusOk");
        } catch (const Error& e) {
            count(e.code() == ErrorCode::Disconnected ? "statusDisconnected" : "statusFailed");
        }
        const double speed = std::get<double>(c_->params().get("maxSpeed")->data);
        const double heading = pose ? pose->get_float("heading") : 0.0;
        try {
            c_->port_as<patterns::SendClient>("motion")->send(
                CommObject("MotionCommand").set("v", speed).set("w", heading > 0.1 ? -0.1 : 0.1));
            count("motionSent");
        } catch (const Error& e) {
            count(e.code() == ErrorCode::ServiceDeactivated ? "motionRejected" : "motionFailed");
        }
        drain_alarms();
    }

    void drain_alarms() {
        auto events = c_->port_as<patterns::EventClient>("proximity");
        try {
            while (events->get(activation_, false)) count("alarms");
        } catch (const Error&) {
            count("alarmReadFailed");
        }
    }

    Component* c_ = nullptr;
    RunContext* ctx_ = nullptr;
    patterns::ActivationId activation_ = 0;
};

class SequencerBehavior : public ComponentBehavior {
public:
    explicit SequencerBehavior(NavigationScript script) : script_(script) {}

    void configure(Component&, RunContext& ctx) override { ctx_ = &ctx; }

    TaskBody task(const std::string& name) override {
        if (name != "script") return {};
        return [this](TaskContext& t) {
            auto& sys = ctx_->system();
            if (t.release() == script_.swap_at) {
                sys.connect({"planner", "motion"}, {"stub", "motion"});
                sys.connect({"planner", "basestate"}, {"stub", "basestate"});
                sys.connect({"planner", "status"}, {"stub", "status"});
                ctx_->count("sequencer.swaps");
            }
            if (t.release() == script_.neutral_from) {
                sys.set_state("planner", std::string(component::kNeutral));
                ctx_->count("sequencer.stateChanges");
            }
            if (t.release() == script_.neutral_until) {
                sys.set_state("planner", "active");
                ctx_->count("sequencer.stateChanges");
            }
        };
    }

private:
    NavigationScript script_;
    RunContext* ctx_ = nullptr;
};

}  // namespace

void register_navigation(Registry& registry, const NavigationScript& script) {
    registry.add("BaseSim", [] { return std::make_unique<BaseBehavior>(true); });
    registry.add("BaseStub", [] { return std::make_unique<BaseBehavior>(false); });
    registry.add("LaserSim", [] { return std::make_unique<LaserBehavior>(); });
    registry.add("Mapper", [] { return std::make_unique<MapperBehavior>(); });
    registry.add("Watchdog", [] { return std::make_unique<WatchdogBehavior>(); });
    registry.add("Planner", [] { return std::make_unique<PlannerBehavior>(); });
    registry.add("Sequencer", [script] { return std::make_unique<SequencerBehavior>(script); });
}

NavigationScenario build_navigation_scenario(const NavigationScript& script) {
    NavigationScenario s{model::parse_model(navigation_model_text()), {}};
    register_navigation(s.registry, script);
    return s;
}

}  // namespace smartmars::scenario
