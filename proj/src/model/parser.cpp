#include "smartmars/model/parser.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace smartmars::model {

ModelError::ModelError(Kind kind, int line, int column, std::string name, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " at " + std::to_string(line) + ":" +
                         std::to_string(column) + ": " + message),
      kind_(kind),
      line_(line),
      column_(column),
      name_(std::move(name)) {}

std::string_view to_string(ModelError::Kind kind) {
    switch (kind) {
        case ModelError::Kind::Syntax: return "SyntaxError";
        case ModelError::Kind::UnresolvedReference: return "UnresolvedReference";
        case ModelError::Kind::DuplicateName: return "DuplicateName";
    }
    return "ModelError";
}

namespace {

enum class Tok { Ident, Number, Punct, Arrow, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 1;
    int column = 1;
};

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    int line = 1;
    int col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < text.size() && is_ident_char(text[j])) ++j;
            t.kind = Tok::Ident;
            t.text = std::string(text.substr(i, j - i));
            advance(j - i);
        } else if (is_digit(c) || (c == '-' && i + 1 < text.size() && is_digit(text[i + 1]))) {
            std::size_t j = i + 1;
            while (j < text.size() && is_digit(text[j])) ++j;
            t.kind = Tok::Number;
            t.text = std::string(text.substr(i, j - i));
            advance(j - i);
        } else if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
            t.kind = Tok::Arrow;
            t.text = "->";
            advance(2);
        } else if (std::string_view("{}:;=.<>").find(c) != std::string_view::npos) {
            t.kind = Tok::Punct;
            t.text = std::string(1, c);
            advance(1);
        } else {
            throw ModelError(ModelError::Kind::Syntax, line, col, std::string(1, c),
                             "unexpected character '" + std::string(1, c) + "'");
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

/// A name occurrence remembered for the resolution pass.
struct Ref {
    std::string name;
    int line;
    int column;
};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    ModelDocument run() {
        while (peek().kind != Tok::End) {
            const Token& kw = expect_ident();
            if (kw.text == "commobject") {
                parse_commobject();
            } else if (kw.text == "component") {
                parse_component();
            } else if (kw.text == "platform") {
                parse_platform();
            } else if (kw.text == "deployment") {
                parse_deployment(kw);
            } else {
                syntax(kw, "expected 'commobject', 'component', 'platform' or 'deployment'");
            }
        }
        resolve();
        return std::move(doc_);
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (t.kind != Tok::End) ++pos_;
        return t;
    }

    [[noreturn]] static void syntax(const Token& t, const std::string& what) {
        std::string shown = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw ModelError(ModelError::Kind::Syntax, t.line, t.column, t.text, what + ", found " + shown);
    }
    [[noreturn]] static void duplicate(const Token& t, const std::string& what) {
        throw ModelError(ModelError::Kind::DuplicateName, t.line, t.column, t.text,
                         "duplicate " + what + " '" + t.text + "'");
    }

    const Token& expect_ident() {
        const Token& t = next();
        if (t.kind != Tok::Ident) syntax(t, "expected identifier");
        return t;
    }
    void expect_keyword(std::string_view kw) {
        const Token& t = next();
        if (t.kind != Tok::Ident || t.text != kw) syntax(t, "expected '" + std::string(kw) + "'");
    }
    void expect_punct(char c) {
        const Token& t = next();
        if (t.kind != Tok::Punct || t.text[0] != c) syntax(t, "expected '" + std::string(1, c) + "'");
    }
    bool accept_punct(char c) {
        if (peek().kind == Tok::Punct && peek().text[0] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    std::int64_t expect_int(const Token& t) {
        if (t.kind != Tok::Number) syntax(t, "expected integer");
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size()) syntax(t, "integer out of range");
        return v;
    }
    std::int64_t expect_int() { return expect_int(next()); }
    bool expect_bool() {
        const Token& t = next();
        if (t.kind == Tok::Ident && t.text == "true") return true;
        if (t.kind == Tok::Ident && t.text == "false") return false;
        syntax(t, "expected 'true' or 'false'");
    }
    /// `x<n>` multiplicity written as one identifier token, e.g. `x2`.
    std::int64_t expect_multiplicity() {
        const Token& t = next();
        if (t.kind != Tok::Ident || t.text.size() < 2 || t.text[0] != 'x') syntax(t, "expected multiplicity 'x<n>'");
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(t.text.data() + 1, t.text.data() + t.text.size(), v);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size()) syntax(t, "expected multiplicity 'x<n>'");
        return v;
    }

    FieldType parse_type() {
        const Token& t = expect_ident();
        if (t.text == "list" && peek().kind == Tok::Punct && peek().text == "<") {
            expect_punct('<');
            FieldType inner = parse_type();
            expect_punct('>');
            return FieldType::list(std::move(inner));
        }
        auto ft = parse_field_type(t.text);
        if (!ft) syntax(t, "expected field type");
        if (ft->kind == FieldType::Kind::Object) type_refs_.push_back({t.text, t.line, t.column});
        return *ft;
    }

    void parse_commobject() {
        const Token& name = expect_ident();
        if (!type_names_.insert(name.text).second) duplicate(name, "commobject");
        CommObjectType type{name.text, {}};
        expect_punct('{');
        std::set<std::string> seen;
        while (!accept_punct('}')) {
            const Token& field = expect_ident();
            if (!seen.insert(field.text).second) duplicate(field, "field");
            expect_punct(':');
            FieldType ft = parse_type();
            expect_punct(';');
            type.fields.push_back({field.text, std::move(ft)});
        }
        doc_.types.push_back(std::move(type));
    }

    struct Attr {
        Token key;
        Token value;
    };

    std::vector<Attr> parse_attrs() {
        std::vector<Attr> attrs;
        std::set<std::string> seen;
        while (!accept_punct(';')) {
            Attr a;
            a.key = expect_ident();
            if (!seen.insert(a.key.text).second) syntax(a.key, "attribute given twice");
            expect_punct('=');
            a.value = next();
            if (a.value.kind != Tok::Ident && a.value.kind != Tok::Number) syntax(a.value, "expected attribute value");
            attrs.push_back(std::move(a));
        }
        return attrs;
    }

    bool attr_bool(const Attr& a) {
        if (a.value.kind == Tok::Ident && (a.value.text == "true" || a.value.text == "false"))
            return a.value.text == "true";
        syntax(a.value, "expected 'true' or 'false'");
    }

    void parse_port(ComponentModel& comp, std::set<std::string>& port_names) {
        const Token& name = expect_ident();
        if (!port_names.insert(name.text).second) duplicate(name, "port");
        expect_punct(':');
        ServicePortSpec port;
        port.name = name.text;
        const Token& pat = expect_ident();
        auto p = parse_pattern(pat.text);
        if (!p) syntax(pat, "expected pattern (send|query|pushnewest|pushtimed|event)");
        port.pattern = *p;
        const Token& dir = expect_ident();
        if (dir.text == "provided") {
            port.direction = Direction::Provided;
        } else if (dir.text == "required") {
            port.direction = Direction::Required;
        } else {
            syntax(dir, "expected 'provided' or 'required'");
        }
        for (const Attr& a : parse_attrs()) {
            const std::string& k = a.key.text;
            if (k == "req" || k == "ans") {
                if (a.value.kind != Tok::Ident) syntax(a.value, "expected type name");
                (k == "req" ? port.request_type : port.answer_type) = a.value.text;
                type_refs_.push_back({a.value.text, a.value.line, a.value.column});
            } else if (k == "cycleMs") {
                port.qos.cycle_ms = expect_int(a.value);
            } else if (k == "timeoutMs") {
                if (a.value.kind == Tok::Ident && a.value.text == "none")
                    port.qos.timeout = TimeoutMs::unbounded();
                else
                    port.qos.timeout = TimeoutMs::millis(expect_int(a.value));
            } else if (k == "minHandlingMs") {
                port.qos.min_handling_ms = expect_int(a.value);
            } else if (k == "cycleCostMs") {
                port.qos.cycle_cost_ms = expect_int(a.value);
            } else {
                syntax(a.key, "unknown port attribute");
            }
        }
        comp.ports.push_back(std::move(port));
    }

    void parse_task(ComponentModel& comp, std::set<std::string>& task_names) {
        const Token& name = expect_ident();
        if (!task_names.insert(name.text).second) duplicate(name, "task");
        TaskSpec task;
        task.name = name.text;
        bool has_rt = false, has_periodic = false, has_prio = false;
        for (const Attr& a : parse_attrs()) {
            const std::string& k = a.key.text;
            if (k == "realtime") {
                task.is_realtime = attr_bool(a);
                has_rt = true;
            } else if (k == "periodic") {
                task.is_periodic = attr_bool(a);
                has_periodic = true;
            } else if (k == "periodMs") {
                task.period_ms = expect_int(a.value);
            } else if (k == "wcetMs") {
                task.wcet_ms = expect_int(a.value);
            } else if (k == "priority") {
                task.priority = expect_int(a.value);
                has_prio = true;
            } else {
                syntax(a.key, "unknown task attribute");
            }
        }
        if (!has_rt || !has_periodic || !has_prio)
            syntax(name, "task requires realtime=, periodic= and priority=");
        comp.tasks.push_back(std::move(task));
    }

    void parse_component() {
        const Token& name = expect_ident();
        if (!component_names_.insert(name.text).second) duplicate(name, "component");
        ComponentModel comp;
        comp.name = name.text;
        std::set<std::string> ports, tasks, params;
        expect_punct('{');
        while (!accept_punct('}')) {
            const Token& kw = expect_ident();
            if (kw.text == "port") {
                parse_port(comp, ports);
            } else if (kw.text == "task") {
                parse_task(comp, tasks);
            } else if (kw.text == "param") {
                const Token& key = expect_ident();
                if (!params.insert(key.text).second) duplicate(key, "param");
                expect_punct(':');
                FieldType ft = parse_type();
                expect_punct(';');
                comp.params.push_back({key.text, std::move(ft)});
            } else if (kw.text == "requires") {
                const Token& tag = expect_ident();
                if (tag.text == "realtime") {
                    comp.constraints.emplace_back(RequiresRealtime{});
                } else if (tag.text == "device") {
                    const Token& cls = expect_ident();
                    comp.constraints.emplace_back(RequiresDevice{cls.text, expect_multiplicity()});
                } else if (tag.text == "memoryMB") {
                    expect_punct('=');
                    comp.constraints.emplace_back(RequiresMemory{expect_int()});
                } else {
                    syntax(tag, "expected 'realtime', 'device' or 'memoryMB'");
                }
                expect_punct(';');
            } else {
                syntax(kw, "expected 'port', 'task', 'param' or 'requires'");
            }
        }
        doc_.components.push_back(std::move(comp));
    }

    void parse_platform() {
        const Token& name = expect_ident();
        if (!platform_names_.insert(name.text).second) duplicate(name, "platform");
        PlatformDescription plat;
        plat.name = name.text;
        std::set<std::string> devices;
        bool has_rt = false, has_mem = false;
        expect_punct('{');
        while (!accept_punct('}')) {
            const Token& kw = expect_ident();
            if (kw.text == "realtime") {
                expect_punct('=');
                plat.supports_realtime = expect_bool();
                has_rt = true;
            } else if (kw.text == "memoryMB") {
                expect_punct('=');
                plat.memory_mb = expect_int();
                has_mem = true;
            } else if (kw.text == "cpuCount") {
                expect_punct('=');
                plat.cpu_count = expect_int();
            } else if (kw.text == "device") {
                const Token& cls = expect_ident();
                if (!devices.insert(cls.text).second) duplicate(cls, "device class");
                plat.devices.push_back({cls.text, expect_multiplicity()});
            } else {
                syntax(kw, "expected 'realtime', 'memoryMB', 'cpuCount' or 'device'");
            }
            expect_punct(';');
        }
        if (!has_rt || !has_mem) syntax(name, "platform requires realtime= and memoryMB=");
        doc_.platforms.push_back(std::move(plat));
    }

    struct EndpointRef {
        Ref instance;
        Ref port;
    };

    EndpointRef parse_endpoint() {
        const Token& inst = expect_ident();
        expect_punct('.');
        const Token& port = expect_ident();
        return {{inst.text, inst.line, inst.column}, {port.text, port.line, port.column}};
    }

    void parse_deployment(const Token& kw) {
        if (doc_.deployment) duplicate(kw, "deployment");
        DeploymentModel dep;
        std::set<std::string> instances;
        expect_punct('{');
        while (!accept_punct('}')) {
            const Token& item = expect_ident();
            if (item.text == "instance") {
                const Token& name = expect_ident();
                if (!instances.insert(name.text).second) duplicate(name, "instance");
                expect_punct(':');
                const Token& comp = expect_ident();
                expect_keyword("on");
                const Token& plat = expect_ident();
                dep.instances.push_back({name.text, comp.text, plat.text});
                component_refs_.push_back({comp.text, comp.line, comp.column});
                platform_refs_.push_back({plat.text, plat.line, plat.column});
            } else if (item.text == "wire") {
                EndpointRef from = parse_endpoint();
                const Token& arrow = next();
                if (arrow.kind != Tok::Arrow) syntax(arrow, "expected '->'");
                EndpointRef to = parse_endpoint();
                dep.wires.push_back({from.instance.name, from.port.name, to.instance.name, to.port.name});
                endpoint_refs_.push_back(from);
                endpoint_refs_.push_back(to);
            } else if (item.text == "override") {
                EndpointRef at = parse_endpoint();
                expect_keyword("timeoutMs");
                expect_punct('=');
                const Token& v = next();
                TimeoutMs t = (v.kind == Tok::Ident && v.text == "none") ? TimeoutMs::unbounded()
                                                                         : TimeoutMs::millis(expect_int(v));
                dep.overrides.push_back({at.instance.name, at.port.name, t});
                endpoint_refs_.push_back(at);
            } else {
                syntax(item, "expected 'instance', 'wire' or 'override'");
            }
            expect_punct(';');
        }
        doc_.deployment = std::move(dep);
    }

    [[noreturn]] static void unresolved(const Ref& r, const std::string& what) {
        throw ModelError(ModelError::Kind::UnresolvedReference, r.line, r.column, r.name,
                         "unresolved " + what + " '" + r.name + "'");
    }

    void resolve() const {
        for (const Ref& r : type_refs_)
            if (!type_names_.count(r.name)) unresolved(r, "commobject type");
        for (const Ref& r : component_refs_)
            if (!component_names_.count(r.name)) unresolved(r, "component");
        for (const Ref& r : platform_refs_)
            if (!platform_names_.count(r.name)) unresolved(r, "platform");
        if (!doc_.deployment) return;
        for (const EndpointRef& e : endpoint_refs_) {
            const Instance* inst = doc_.deployment->find_instance(e.instance.name);
            if (!inst) unresolved(e.instance, "instance");
            const ComponentModel* comp = doc_.find_component(inst->component);
            if (!comp->find_port(e.port.name)) unresolved(e.port, "port");
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    ModelDocument doc_;
    std::set<std::string> type_names_, component_names_, platform_names_;
    std::vector<Ref> type_refs_, component_refs_, platform_refs_;
    std::vector<EndpointRef> endpoint_refs_;
};

void write_timeout(std::ostream& os, const TimeoutMs& t) {
    if (t.is_unbounded())
        os << "none";
    else
        os << *t.bound;
}

}  // namespace

ModelDocument parse_model(std::string_view text) { return Parser(tokenize(text)).run(); }

ModelDocument load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

std::string serialize_model(const ModelDocument& doc) {
    std::ostringstream os;
    bool first = true;
    auto separate = [&] {
        if (!first) os << '\n';
        first = false;
    };
    for (const auto& t : doc.types) {
        separate();
        os << "commobject " << t.name << " {\n";
        for (const auto& f : t.fields) os << "  " << f.name << ": " << f.type.to_string() << ";\n";
        os << "}\n";
    }
    for (const auto& c : doc.components) {
        separate();
        os << "component " << c.name << " {\n";
        for (const auto& p : c.ports) {
            os << "  port " << p.name << ": " << to_string(p.pattern) << ' ' << to_string(p.direction);
            if (p.request_type) os << " req=" << *p.request_type;
            if (p.answer_type) os << " ans=" << *p.answer_type;
            if (p.qos.cycle_ms) os << " cycleMs=" << *p.qos.cycle_ms;
            if (p.qos.timeout) {
                os << " timeoutMs=";
                write_timeout(os, *p.qos.timeout);
            }
            if (p.qos.min_handling_ms) os << " minHandlingMs=" << *p.qos.min_handling_ms;
            if (p.qos.cycle_cost_ms) os << " cycleCostMs=" << *p.qos.cycle_cost_ms;
            os << ";\n";
        }
        for (const auto& t : c.tasks) {
            os << "  task " << t.name << " realtime=" << (t.is_realtime ? "true" : "false")
               << " periodic=" << (t.is_periodic ? "true" : "false");
            if (t.period_ms) os << " periodMs=" << *t.period_ms;
            if (t.wcet_ms) os << " wcetMs=" << *t.wcet_ms;
            os << " priority=" << t.priority << ";\n";
        }
        for (const auto& p : c.params) os << "  param " << p.key << ": " << p.type.to_string() << ";\n";
        for (const auto& k : c.constraints) {
            std::visit(
                [&](const auto& tag) {
                    using T = std::decay_t<decltype(tag)>;
                    if constexpr (std::is_same_v<T, RequiresRealtime>)
                        os << "  requires realtime;\n";
                    else if constexpr (std::is_same_v<T, RequiresDevice>)
                        os << "  requires device " << tag.device_class << " x" << tag.count << ";\n";
                    else
                        os << "  requires memoryMB=" << tag.mb << ";\n";
                },
                k);
        }
        os << "}\n";
    }
    for (const auto& p : doc.platforms) {
        separate();
        os << "platform " << p.name << " {\n";
        os << "  realtime=" << (p.supports_realtime ? "true" : "false") << ";\n";
        os << "  memoryMB=" << p.memory_mb << ";\n";
        if (p.cpu_count != 1) os << "  cpuCount=" << p.cpu_count << ";\n";
        for (const auto& d : p.devices) os << "  device " << d.device_class << " x" << d.count << ";\n";
        os << "}\n";
    }
    if (doc.deployment) {
        separate();
        os << "deployment {\n";
        for (const auto& i : doc.deployment->instances)
            os << "  instance " << i.name << ": " << i.component << " on " << i.platform << ";\n";
        for (const auto& w : doc.deployment->wires)
            os << "  wire " << w.from_instance << '.' << w.from_port << " -> " << w.to_instance << '.' << w.to_port
               << ";\n";
        for (const auto& o : doc.deployment->overrides) {
            os << "  override " << o.instance << '.' << o.port << " timeoutMs=";
            write_timeout(os, o.timeout);
            os << ";\n";
        }
        os << "}\n";
    }
    return os.str();
}

}  // namespace smartmars::model
