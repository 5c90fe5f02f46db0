#include "smartmars/app/cli.hpp"

#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "smartmars/analysis/analysis.hpp"
#include "smartmars/deploy/deploy.hpp"
#include "smartmars/error.hpp"
#include "smartmars/model/parser.hpp"
#include "smartmars/model/validate.hpp"
#include "smartmars/scenario/navigation.hpp"

namespace smartmars::app {

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Source {
    std::string path;
    int first_line = 1;
    int lines = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Parses the concatenation of the files; errors name the file and its line.
model::ModelDocument load(const std::vector<std::string>& paths) {
    std::string text;
    std::vector<Source> sources;
    int line = 1;
    for (const auto& p : paths) {
        std::string part = read_file(p);
        if (!part.empty() && part.back() != '\n') part += '\n';
        Source s{p, line, static_cast<int>(std::count(part.begin(), part.end(), '\n'))};
        line += s.lines;
        sources.push_back(s);
        text += part;
    }
    try {
        return model::parse_model(text);
    } catch (const model::ModelError& e) {
        std::string where = "<input>";
        int local = e.line();
        for (const auto& s : sources)
            if (e.line() >= s.first_line && e.line() < s.first_line + std::max(s.lines, 1)) {
                where = s.path;
                local = e.line() - s.first_line + 1;
            }
        std::string msg = e.what();
        auto colon = msg.find(": ");
        throw InputError(fmt::format("{}:{}:{}: {}: {}", where, local, e.column(), model::to_string(e.kind()),
                                     colon == std::string::npos ? msg : msg.substr(colon + 2)));
    }
}

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path);
    f << content;
}

/// Parses, validates and transforms; anything short of a PSM is an input error.
deploy::TransformResult prepare(const std::vector<std::string>& paths, std::ostream& err) {
    auto doc = load(paths);
    auto violations = model::validate_document(doc);
    auto t = deploy::transform(doc);
    if (!violations.empty() || !t.ok()) {
        for (const auto& v : violations) err << "violation: " << v.to_string() << "\n";
        for (const auto& i : t.errors)
            if (i.kind != deploy::IssueKind::Validation) err << "error: " << i.to_string() << "\n";
        throw InputError("model is not a valid deployment");
    }
    return t;
}

analysis::ExportFormat parse_format(const std::string& f) {
    return f == "cheddar" ? analysis::ExportFormat::CheddarXml : analysis::ExportFormat::Native;
}

int cmd_validate(const std::vector<std::string>& paths, std::ostream& out) {
    auto doc = load(paths);
    auto violations = model::validate_document(doc);
    for (const auto& v : violations) out << "violation: " << v.to_string() << "\n";
    if (!violations.empty()) {
        out << violations.size() << " violation(s)\n";
        return kSemanticFailure;
    }
    out << fmt::format("ok: {} types, {} components, {} platforms, {} instances\n", doc.types.size(),
                       doc.components.size(), doc.platforms.size(),
                       doc.deployment ? doc.deployment->instances.size() : 0);
    return kOk;
}

int cmd_transform(const std::vector<std::string>& paths, std::ostream& out) {
    auto doc = load(paths);
    auto t = deploy::transform(doc);
    for (const auto& i : t.errors) out << "error: " << i.to_string() << "\n";
    if (!t.ok()) return kSemanticFailure;
    for (const auto& inst : t.psm.instances)
        for (const auto& task : inst.tasks)
            out << fmt::format("{}.{} {} on {}\n", inst.name, task.spec.name, tasks::to_string(task.mapping),
                               task.platform);
    return kOk;
}

int cmd_check(const std::vector<std::string>& paths, const std::string& report, std::ostream& out) {
    auto doc = load(paths);
    auto t = deploy::transform(doc);
    std::vector<deploy::Issue> violations;
    analysis::AnalysisTaskSet tasks;
    if (t.ok()) {
        violations = deploy::check_deployment(t.psm);
        tasks = deploy::extract_analysis_model(t.psm);
    }
    if (!report.empty()) write_output(report, deploy::deployment_report(t, violations, tasks).dump(2) + "\n", out);
    for (const auto& i : t.errors) out << "error: " << i.to_string() << "\n";
    for (const auto& i : violations) out << "violation: " << i.to_string() << "\n";
    if (!t.ok() || !violations.empty()) return kSemanticFailure;
    if (report != "-") out << "ok: " << t.psm.instances.size() << " instances pass the deployment checks\n";
    return kOk;
}

struct AnalyzeOptions {
    std::string format;
    std::string output;
    bool oracle = false;
    bool include_emulated = false;
    bool cyclic_load = false;
};

/// Compares RTA with the hyperperiod simulation; returns a disagreement or "".
std::string oracle_check(const std::vector<analysis::AnalysisTask>& set, const analysis::RtaResult& r) {
    auto sim = analysis::simulate_hyperperiod(set);
    std::int64_t misses = 0;
    for (const auto& s : sim) misses += s.deadline_misses;
    if (!r.set_schedulable) return misses > 0 ? "" : "RTA rejects a set the simulation schedules";
    for (const auto& s : sim) {
        const auto* t = r.find(s.name);
        if (!t || s.deadline_misses > 0 || s.worst_response_ms != t->response_ms)
            return fmt::format("{}: simulated worst response {} against R={}", s.name,
                               s.worst_response_ms ? std::to_string(*s.worst_response_ms) : "none",
                               t && t->response_ms ? std::to_string(*t->response_ms) : "unbounded");
    }
    return "";
}

int cmd_analyze(const std::vector<std::string>& paths, const AnalyzeOptions& o, std::ostream& out,
                std::ostream& err) {
    auto t = prepare(paths, err);
    auto set = deploy::extract_analysis_model(t.psm, {o.cyclic_load});
    if (!o.format.empty())
        write_output(o.output, analysis::export_analysis_model(set, parse_format(o.format)), out);
    auto results = analysis::analyze(set, o.include_emulated);
    bool schedulable = true;
    std::size_t checked = 0;
    std::vector<std::string> disagreements;
    for (const auto& [platform, r] : results) {
        out << fmt::format("platform {}: {} tasks, U={} ({:.6f}), LL bound {:.6f} -> {}, RTA {}\n", platform,
                           r.tasks.size(), analysis::to_string(r.utilization),
                           r.utilization.convert_to<double>(), r.ll_bound, analysis::to_string(r.ll_verdict),
                           r.set_schedulable ? "schedulable" : "unschedulable");
        for (const auto& task : r.tasks)
            out << fmt::format("  {} C={} T={} P={} R={} {}\n", task.name, task.wcet_ms, task.period_ms,
                               task.priority, task.response_ms ? std::to_string(*task.response_ms) : "unbounded",
                               task.schedulable ? "ok" : "MISS");
        schedulable = schedulable && r.set_schedulable;
        if (o.oracle) {
            std::vector<analysis::AnalysisTask> tasks;
            for (const auto& a : set.per_platform.at(platform))
                if (o.include_emulated || !a.emulated) tasks.push_back(a);
            try {
                auto d = oracle_check(tasks, r);
                if (!d.empty()) disagreements.push_back(platform + ": " + d);
                checked += tasks.size();
            } catch (const Error& e) {
                if (e.code() != ErrorCode::HyperperiodTooLarge) throw;
                out << "oracle skipped on " << platform << ": " << e.what() << "\n";
            }
        }
    }
    if (results.empty()) out << "no realtime tasks\n";
    out << "verdict: " << (schedulable ? "schedulable" : "unschedulable") << "\n";
    if (o.oracle) {
        for (const auto& d : disagreements) out << "oracle disagrees: " << d << "\n";
        if (disagreements.empty())
            out << fmt::format("oracle agrees ({} tasks on {} platforms)\n", checked, results.size());
    }
    return schedulable && disagreements.empty() ? kOk : kSemanticFailure;
}

int cmd_export(const std::vector<std::string>& paths, const std::string& format, const std::string& output,
               bool cyclic_load, std::ostream& out, std::ostream& err) {
    auto t = prepare(paths, err);
    write_output(output, analysis::export_analysis_model(deploy::extract_analysis_model(t.psm, {cyclic_load}),
                                                         parse_format(format)),
                 out);
    return kOk;
}

int cmd_format(const std::vector<std::string>& paths, const std::string& output, bool check, std::ostream& out) {
    auto text = model::serialize_model(load(paths));
    if (check) {
        if (paths.size() != 1) throw InputError("--check takes exactly one file");
        if (read_file(paths.front()) != text) {
            out << paths.front() << " is not in canonical form\n";
            return kSemanticFailure;
        }
        return kOk;
    }
    write_output(output, text, out);
    return kOk;
}

struct RunCliOptions {
    tasks::Millis virtual_until = -1;
    bool real = false;
    tasks::Millis real_for = -1;
    std::string report;
};

int cmd_run(const std::vector<std::string>& paths, const RunCliOptions& o, const std::atomic<bool>* interrupt,
            std::ostream& out, std::ostream& err) {
    auto doc = load(paths);
    scenario::Registry registry;
    scenario::register_navigation(registry);
    scenario::RunOptions options;
    if (o.real) {
        if (o.real_for >= 0) options.real_for = o.real_for;
        options.interrupt = interrupt;
        if (!options.real_for && !options.interrupt) throw InputError("--real needs --real-for here");
    } else {
        options.virtual_until = o.virtual_until;
    }
    scenario::RunBundle bundle;
    try {
        bundle = scenario::run_deployment(doc, registry, options);
    } catch (const scenario::CheckFailed& e) {
        for (const auto& i : e.issues()) err << "error: " << i.to_string() << "\n";
        throw InputError("deployment failed its checks; nothing was started");
    }
    if (!o.report.empty()) write_output(o.report, scenario::to_json(bundle).dump(2) + "\n", out);
    if (o.report != "-") {
        out << fmt::format("run: {} clock, ended at {} ms, {} tasks, {} failures\n", bundle.clock,
                           bundle.end_time_ms, bundle.tasks.size(), bundle.failures.size());
        for (const auto& t : bundle.tasks)
            out << fmt::format("  task {} iterations={} misses={} jitter={}ms\n", t.task, t.iterations,
                               t.deadline_misses, t.max_jitter_ms);
        for (const auto& p : bundle.ports)
            out << fmt::format("  port {}.{} {} deliveries={}\n", p.instance, p.port, model::to_string(p.pattern),
                               p.deliveries);
    }
    for (const auto& f : bundle.failures) err << "failure: " << f << "\n";
    return bundle.failures.empty() ? kOk : kSemanticFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* interrupt) {
    CLI::App app{"Model-driven component toolchain: validate, transform, check, analyze, export and run"};
    app.name("smartmars");
    app.require_subcommand(1);

    std::vector<std::string> paths;
    auto add_paths = [&](CLI::App* sub) {
        sub->add_option("models", paths, "Model files, read in order as one document")->required();
    };

    auto* validate = app.add_subcommand("validate", "Parse and validate models");
    add_paths(validate);

    auto* transform = app.add_subcommand("transform", "Map deployed tasks onto their platforms");
    add_paths(transform);

    std::string check_report;
    auto* check = app.add_subcommand("check", "Check a deployment against its platforms");
    add_paths(check);
    check->add_option("--report", check_report, "Write the JSON deployment report here ('-' for stdout)");

    AnalyzeOptions ao;
    auto* analyze = app.add_subcommand("analyze", "Schedulability analysis of the realtime tasks");
    add_paths(analyze);
    analyze->add_option("--format", ao.format, "Also write the analysis model")
        ->check(CLI::IsMember({"native", "cheddar"}));
    analyze->add_option("-o,--output", ao.output, "File for --format (default stdout)");
    analyze->add_flag("--oracle", ao.oracle, "Cross-check against a hyperperiod simulation");
    analyze->add_flag("--include-emulated", ao.include_emulated, "Analyze emulated tasks with a declared WCET too");
    analyze->add_flag("--cyclic-load", ao.cyclic_load, "Add push timed cycle costs as tasks");

    std::string export_format = "native", export_output;
    bool export_cyclic = false;
    auto* exp = app.add_subcommand("export", "Write the analysis model");
    add_paths(exp);
    exp->add_option("--format", export_format, "native or cheddar")->check(CLI::IsMember({"native", "cheddar"}));
    exp->add_option("-o,--output", export_output, "Output file (default stdout)");
    exp->add_flag("--cyclic-load", export_cyclic, "Add push timed cycle costs as tasks");

    std::string format_output;
    bool format_check = false;
    auto* format = app.add_subcommand("format", "Print models in canonical form");
    add_paths(format);
    format->add_option("-o,--output", format_output, "Output file (default stdout)");
    format->add_flag("--check", format_check, "Fail unless the file is already canonical");

    RunCliOptions ro;
    auto* run = app.add_subcommand("run", "Execute a deployment in-process with the built-in behaviors");
    add_paths(run);
    auto* vu = run->add_option("--virtual-until", ro.virtual_until, "Run on a virtual clock up to this time (ms)")
                   ->check(CLI::NonNegativeNumber);
    auto* real = run->add_flag("--real", ro.real, "Run on the real clock until interrupted");
    run->add_option("--real-for", ro.real_for, "With --real: stop after this many ms")
        ->check(CLI::NonNegativeNumber)
        ->needs(real);
    vu->excludes(real);
    run->add_option("--report", ro.report, "Write the JSON run report here ('-' for stdout)");

    auto* demo = app.add_subcommand("demo", "Print the bundled navigation model");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }
    if (run->parsed() && !ro.real && ro.virtual_until < 0) {
        err << "run: one of --virtual-until or --real is required\n";
        return kInputError;
    }

    try {
        if (validate->parsed()) return cmd_validate(paths, out);
        if (transform->parsed()) return cmd_transform(paths, out);
        if (check->parsed()) return cmd_check(paths, check_report, out);
        if (analyze->parsed()) return cmd_analyze(paths, ao, out, err);
        if (exp->parsed()) return cmd_export(paths, export_format, export_output, export_cyclic, out, err);
        if (format->parsed()) return cmd_format(paths, format_output, format_check, out);
        if (run->parsed()) return cmd_run(paths, ro, interrupt, out, err);
        if (demo->parsed()) {
            out << scenario::navigation_model_text();
            return kOk;
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}

}  // namespace smartmars::app
