#include "smartmars/analysis/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "smartmars/error.hpp"

namespace smartmars::analysis {

std::size_t AnalysisTaskSet::size() const {
    std::size_t n = 0;
    for (const auto& [_, tasks] : per_platform) n += tasks.size();
    return n;
}

double utilization_bound(std::int64_t n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "utilization bound needs n >= 1");
    const double dn = static_cast<double>(n);
    return dn * std::expm1(std::log(2.0) / dn);
}

Rational utilization(const std::vector<AnalysisTask>& tasks) {
    Rational u = 0;
    for (const auto& t : tasks) u += Rational(t.wcet_ms, t.period_ms);
    return u;
}

std::string to_string(const Rational& r) {
    auto num = boost::multiprecision::numerator(r);
    auto den = boost::multiprecision::denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

std::vector<AnalysisTask> priority_order(const std::vector<AnalysisTask>& tasks) {
    std::set<std::string> names;
    for (const auto& t : tasks) {
        auto bad = [&](const std::string& why) { return Error(ErrorCode::InvalidTaskSet, t.name + ": " + why); };
        if (!t.priority) throw bad("no priority");
        if (t.period_ms <= 0) throw bad("periodMs must be positive");
        if (t.wcet_ms <= 0) throw bad("wcetMs must be positive");
        if (t.wcet_ms > t.period_ms) throw bad("wcetMs exceeds periodMs");
        if (!names.insert(t.name).second) throw bad("duplicate task name");
    }
    auto order = tasks;
    std::sort(order.begin(), order.end(), [](const AnalysisTask& a, const AnalysisTask& b) {
        if (*a.priority != *b.priority) return *a.priority > *b.priority;
        if (a.period_ms != b.period_ms) return a.period_ms < b.period_ms;
        return a.name < b.name;
    });
    return order;
}

std::string_view to_string(LlVerdict v) {
    return v == LlVerdict::SchedulableByBound ? "SchedulableByBound" : "Inconclusive";
}

const TaskResponse* RtaResult::find(std::string_view name) const {
    for (const auto& t : tasks)
        if (t.name == name) return &t;
    return nullptr;
}

RtaResult rta(const std::vector<AnalysisTask>& tasks) {
    auto order = priority_order(tasks);
    RtaResult out;
    out.utilization = utilization(order);
    if (!order.empty()) {
        out.ll_bound = utilization_bound(static_cast<std::int64_t>(order.size()));
        out.ll_verdict = out.utilization.convert_to<double>() <= out.ll_bound - 1e-9 ? LlVerdict::SchedulableByBound
                                                                                    : LlVerdict::Inconclusive;
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& t = order[i];
        TaskResponse r{t.name, t.wcet_ms, t.period_ms, *t.priority, std::nullopt, false};
        std::int64_t resp = t.wcet_ms;
        while (true) {
            std::int64_t next = t.wcet_ms;
            for (std::size_t j = 0; j < i; ++j)
                next += ((resp + order[j].period_ms - 1) / order[j].period_ms) * order[j].wcet_ms;
            if (next > t.period_ms) break;
            if (next == resp) {
                r.response_ms = resp;
                r.schedulable = true;
                break;
            }
            resp = next;
        }
        out.set_schedulable = out.set_schedulable && r.schedulable;
        out.tasks.push_back(std::move(r));
    }
    return out;
}

std::optional<std::int64_t> hyperperiod(const std::vector<AnalysisTask>& tasks, std::int64_t cap) {
    std::int64_t h = 1;
    for (const auto& t : tasks) {
        if (t.period_ms <= 0) throw Error(ErrorCode::InvalidTaskSet, t.name + ": periodMs must be positive");
        std::int64_t step = t.period_ms / std::gcd(h, t.period_ms);
        if (h > cap / step) return std::nullopt;
        h *= step;
        if (h > cap) return std::nullopt;
    }
    return h;
}

std::vector<SimulatedResponse> simulate_hyperperiod(const std::vector<AnalysisTask>& tasks, std::int64_t cap) {
    auto order = priority_order(tasks);
    auto h = hyperperiod(order, cap);
    if (!h)
        throw Error(ErrorCode::HyperperiodTooLarge, "hyperperiod exceeds " + std::to_string(cap) + " ms");
    const std::int64_t horizon = *h;
    const std::int64_t limit = 2 * horizon;
    constexpr std::int64_t never = std::numeric_limits<std::int64_t>::max();

    struct Job {
        std::int64_t release;
        std::int64_t remaining;
    };
    const std::size_t n = order.size();
    std::vector<std::deque<Job>> pending(n);
    std::vector<std::int64_t> next_release(n, 0);
    std::vector<SimulatedResponse> out;
    for (const auto& t : order) out.push_back({t.name, 0, 0});

    std::int64_t now = 0;
    while (now < limit) {
        for (std::size_t i = 0; i < n; ++i) {
            if (next_release[i] == now && now < horizon) {
                pending[i].push_back({now, order[i].wcet_ms});
                next_release[i] += order[i].period_ms;
            }
        }
        std::int64_t next_event = never;
        for (std::size_t i = 0; i < n; ++i)
            if (next_release[i] < horizon) next_event = std::min(next_event, next_release[i]);
        auto running = std::find_if(pending.begin(), pending.end(), [](const auto& q) { return !q.empty(); });
        if (running == pending.end()) {
            if (next_event == never) break;
            now = next_event;
            continue;
        }
        std::size_t i = static_cast<std::size_t>(running - pending.begin());
        Job& job = running->front();
        std::int64_t stop = std::min({now + job.remaining, next_event, limit});
        job.remaining -= stop - now;
        now = stop;
        if (job.remaining == 0) {
            std::int64_t response = now - job.release;
            out[i].worst_response_ms = std::max(*out[i].worst_response_ms, response);
            if (response > order[i].period_ms) ++out[i].deadline_misses;
            running->pop_front();
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!pending[i].empty()) {
            out[i].worst_response_ms.reset();
            out[i].deadline_misses += static_cast<std::int64_t>(pending[i].size());
        }
    }
    return out;
}

std::vector<AnalysisTask> assign_rm_priorities(std::vector<AnalysisTask> tasks) {
    if (std::all_of(tasks.begin(), tasks.end(), [](const AnalysisTask& t) { return t.priority.has_value(); }))
        return tasks;
    std::vector<std::size_t> idx(tasks.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (tasks[a].period_ms != tasks[b].period_ms) return tasks[a].period_ms < tasks[b].period_ms;
        return tasks[a].name < tasks[b].name;
    });
    const auto n = static_cast<std::int64_t>(tasks.size());
    for (std::int64_t rank = 0; rank < n; ++rank) tasks[idx[static_cast<std::size_t>(rank)]].priority = n - rank;
    return tasks;
}

std::map<std::string, RtaResult> analyze(const AnalysisTaskSet& set, bool include_emulated) {
    std::map<std::string, RtaResult> out;
    for (const auto& [platform, tasks] : set.per_platform) {
        std::vector<AnalysisTask> selected;
        for (const auto& t : tasks)
            if (!t.emulated || include_emulated) selected.push_back(t);
        out.emplace(platform, rta(selected));
    }
    return out;
}

namespace {

constexpr std::string_view kNativeHeader = "analysis 1";

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string export_native(const AnalysisTaskSet& set) {
    std::ostringstream os;
    os << kNativeHeader << "\n";
    for (const auto& [platform, tasks] : set.per_platform) {
        os << "platform " << platform << " {\n";
        for (const auto& t : tasks) {
            os << "  task " << t.name << " wcetMs=" << t.wcet_ms << " periodMs=" << t.period_ms;
            if (t.priority) os << " priority=" << *t.priority;
            if (t.emulated) os << " emulated";
            os << ";\n";
        }
        os << "}\n";
    }
    return os.str();
}

std::string export_cheddar(const AnalysisTaskSet& set) {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<cheddar>\n";
    int id = 1;
    auto next_id = [&] { return "id_" + std::to_string(id++); };
    os << "  <core_units>\n";
    for (const auto& [platform, _] : set.per_platform) {
        os << "    <core_unit id=\"" << next_id() << "\">\n"
           << "      <name>" << xml_escape(platform) << "_core</name>\n"
           << "      <scheduling>\n"
           << "        <scheduling_parameters>\n"
           << "          <scheduler_type>POSIX_1003_HIGHEST_PRIORITY_FIRST_PROTOCOL</scheduler_type>\n"
           << "          <quantum>0</quantum>\n"
           << "          <preemptive_type>PREEMPTIVE</preemptive_type>\n"
           << "        </scheduling_parameters>\n"
           << "      </scheduling>\n"
           << "    </core_unit>\n";
    }
    os << "  </core_units>\n  <processors>\n";
    for (const auto& [platform, _] : set.per_platform) {
        os << "    <mono_core_processor id=\"" << next_id() << "\">\n"
           << "      <name>" << xml_escape(platform) << "</name>\n"
           << "      <processor_type>MONOCORE_TYPE</processor_type>\n"
           << "      <core>" << xml_escape(platform) << "_core</core>\n"
           << "    </mono_core_processor>\n";
    }
    os << "  </processors>\n  <address_spaces>\n";
    for (const auto& [platform, _] : set.per_platform) {
        os << "    <address_space id=\"" << next_id() << "\">\n"
           << "      <name>" << xml_escape(platform) << "_space</name>\n"
           << "      <cpu_name>" << xml_escape(platform) << "</cpu_name>\n"
           << "    </address_space>\n";
    }
    os << "  </address_spaces>\n  <tasks>\n";
    for (const auto& [platform, tasks] : set.per_platform) {
        for (const auto& t : tasks) {
            os << "    <periodic_task id=\"" << next_id() << "\">\n"
               << "      <name>" << xml_escape(platform) << "." << xml_escape(t.name) << "</name>\n"
               << "      <task_type>PERIODIC_TYPE</task_type>\n"
               << "      <cpu_name>" << xml_escape(platform) << "</cpu_name>\n"
               << "      <address_space_name>" << xml_escape(platform) << "_space</address_space_name>\n"
               << "      <capacity>" << t.wcet_ms << "</capacity>\n"
               << "      <deadline>" << t.period_ms << "</deadline>\n"
               << "      <start_time>0</start_time>\n"
               << "      <priority>" << t.priority.value_or(0) << "</priority>\n"
               << "      <policy>SCHED_FIFO</policy>\n"
               << "      <period>" << t.period_ms << "</period>\n"
               << "      <jitter>0</jitter>\n"
               << "    </periodic_task>\n";
        }
    }
    os << "  </tasks>\n</cheddar>\n";
    return os.str();
}

std::vector<std::string_view> words(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

}  // namespace

std::string export_analysis_model(const AnalysisTaskSet& set, ExportFormat format) {
    return format == ExportFormat::Native ? export_native(set) : export_cheddar(set);
}

AnalysisTaskSet import_analysis_model(std::string_view text) {
    AnalysisTaskSet set;
    std::vector<AnalysisTask>* current = nullptr;
    bool header = false;
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++lineno;
        auto fail = [&](const std::string& why) {
            return Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": " + why);
        };
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        auto w = words(line);
        if (w.empty()) continue;
        if (!header) {
            if (w.size() != 2 || w[0] != "analysis" || w[1] != "1") throw fail("expected 'analysis 1'");
            header = true;
            continue;
        }
        if (w[0] == "platform") {
            if (current) throw fail("nested platform");
            if (w.size() != 3 || w[2] != "{") throw fail("expected 'platform <name> {'");
            auto [it, fresh] = set.per_platform.try_emplace(std::string(w[1]));
            if (!fresh) throw fail("duplicate platform " + std::string(w[1]));
            current = &it->second;
        } else if (w[0] == "}") {
            if (!current || w.size() != 1) throw fail("unexpected '}'");
            current = nullptr;
        } else if (w[0] == "task") {
            if (!current) throw fail("task outside platform");
            if (w.size() < 2) throw fail("task without name");
            std::string_view last = w.back();
            if (last.empty() || last.back() != ';') throw fail("missing ';'");
            w.back() = last.substr(0, last.size() - 1);
            if (w.back().empty()) w.pop_back();
            AnalysisTask t;
            t.name = std::string(w[1]);
            bool have_c = false;
            bool have_t = false;
            for (std::size_t k = 2; k < w.size(); ++k) {
                if (w[k] == "emulated") {
                    t.emulated = true;
                    continue;
                }
                auto eq = w[k].find('=');
                if (eq == std::string_view::npos) throw fail("unexpected '" + std::string(w[k]) + "'");
                auto key = w[k].substr(0, eq);
                auto val = w[k].substr(eq + 1);
                std::int64_t v = 0;
                auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
                if (ec != std::errc() || p != val.data() + val.size())
                    throw fail("bad integer '" + std::string(val) + "'");
                if (key == "wcetMs") {
                    t.wcet_ms = v;
                    have_c = true;
                } else if (key == "periodMs") {
                    t.period_ms = v;
                    have_t = true;
                } else if (key == "priority") {
                    t.priority = v;
                } else {
                    throw fail("unknown attribute " + std::string(key));
                }
            }
            if (!have_c || !have_t) throw fail("task needs wcetMs and periodMs");
            current->push_back(std::move(t));
        } else {
            throw fail("unexpected '" + std::string(w[0]) + "'");
        }
    }
    if (!header) throw Error(ErrorCode::InvalidArgument, "empty analysis model");
    if (current) throw Error(ErrorCode::InvalidArgument, "unterminated platform block");
    return set;
}

}  // namespace smartmars::analysis
