#include "betop/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace betop {

namespace {

using nlohmann::json;

const char* code_text(ParseCode code) {
    switch (code) {
        case ParseCode::bad_json: return "malformed JSON";
        case ParseCode::schema_mismatch: return "schema mismatch";
        case ParseCode::non_finite: return "non-finite value";
        case ParseCode::ragged: return "ragged array";
        case ParseCode::duplicate_id: return "duplicate id";
        case ParseCode::bad_value: return "bad value";
    }
    return "parse error";
}

std::string compose(const std::string& path, const std::string& description) {
    if (path.empty()) return description;
    return description + " at " + path;
}

[[noreturn]] void fail(ParseCode code, const std::string& path, const std::string& description) {
    throw ParseError(code, path, description);
}

std::string idx(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

std::string field(const std::string& base, const std::string& name) {
    return base.empty() ? name : base + "." + name;
}

json parse_document(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::out_of_range&) {
        fail(ParseCode::non_finite, "", "number outside double range");
    } catch (const json::exception&) {
        fail(ParseCode::bad_json, "", code_text(ParseCode::bad_json));
    }
}

const json& as_object(const json& v, const std::string& path) {
    if (!v.is_object()) fail(ParseCode::schema_mismatch, path, "expected an object");
    return v;
}

const json& as_array(const json& v, const std::string& path) {
    if (!v.is_array()) fail(ParseCode::schema_mismatch, path, "expected an array");
    return v;
}

const json& member(const json& obj, const std::string& base, const char* name) {
    const auto it = obj.find(name);
    if (it == obj.end()) fail(ParseCode::schema_mismatch, field(base, name), "missing field");
    return *it;
}

void reject_unknown(const json& obj, const std::string& base,
                    std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(),
                         [&](const char* name) { return it.key() == name; })) {
            fail(ParseCode::schema_mismatch, field(base, it.key()), "unknown field");
        }
    }
}

double number_at(const json& v, const std::string& path) {
    if (v.is_null()) fail(ParseCode::non_finite, path, code_text(ParseCode::non_finite));
    if (!v.is_number()) fail(ParseCode::schema_mismatch, path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ParseCode::non_finite, path, code_text(ParseCode::non_finite));
    return d;
}

std::uint64_t uint_at(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    fail(ParseCode::schema_mismatch, path, "expected a nonnegative integer");
}

std::string string_at(const json& v, const std::string& path) {
    if (!v.is_string()) fail(ParseCode::schema_mismatch, path, "expected a string");
    return v.get<std::string>();
}

bool bool_at(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(ParseCode::schema_mismatch, path, "expected a boolean");
    return v.get<bool>();
}

void check_schema(const json& root, const char* expected) {
    const json& v = member(root, "", "schema_version");
    if (!v.is_string() || v.get<std::string>() != expected) {
        fail(ParseCode::schema_mismatch, "schema_version",
             std::string("expected \"") + expected + "\"");
    }
}

// +0.0 normalizes away a negative zero so canonical output never holds "-0.0".
double canonical(double v) { return v + 0.0; }

json state_row(const TrajState& s) {
    return json::array({canonical(s.t), canonical(s.x), canonical(s.y), canonical(s.vx),
                        canonical(s.vy), canonical(s.heading)});
}

Trajectory parse_states(const json& arr, const std::string& path, double dt) {
    as_array(arr, path);
    Trajectory out;
    out.dt = dt;
    out.states.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string row_path = idx(path, i);
        const json& row = arr[i];
        as_array(row, row_path);
        if (row.size() != 6) fail(ParseCode::ragged, row_path, "expected 6 values per state");
        TrajState s;
        s.t = number_at(row[0], idx(row_path, 0));
        s.x = number_at(row[1], idx(row_path, 1));
        s.y = number_at(row[2], idx(row_path, 2));
        s.vx = number_at(row[3], idx(row_path, 3));
        s.vy = number_at(row[4], idx(row_path, 4));
        s.heading = number_at(row[5], idx(row_path, 5));
        out.states.push_back(s);
    }
    return out;
}

AgentKind parse_kind(const std::string& text, const std::string& path) {
    if (text == "vehicle") return AgentKind::vehicle;
    if (text == "pedestrian") return AgentKind::pedestrian;
    if (text == "cyclist") return AgentKind::cyclist;
    fail(ParseCode::schema_mismatch, path, "unknown agent kind \"" + text + "\"");
}

const char* kind_name(AgentKind kind) {
    switch (kind) {
        case AgentKind::vehicle: return "vehicle";
        case AgentKind::pedestrian: return "pedestrian";
        case AgentKind::cyclist: return "cyclist";
    }
    return "vehicle";
}

std::string dump(const json& root) { return root.dump(1) + "\n"; }

// --- CSV helpers -----------------------------------------------------------

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(std::move(cur));
    return lines;
}

double csv_number(const std::string& cell, const std::string& path) {
    if (cell.empty()) fail(ParseCode::schema_mismatch, path, "expected a number");
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) {
        fail(ParseCode::schema_mismatch, path, "expected a number");
    }
    if (!std::isfinite(value)) fail(ParseCode::non_finite, path, code_text(ParseCode::non_finite));
    return value;
}

void require_empty(const std::string& cell, const std::string& path) {
    if (!cell.empty()) fail(ParseCode::schema_mismatch, path, "cell must be empty");
}

std::string safe_csv_id(const std::string& id) {
    if (id.empty() || id.find_first_of(",\"\r\n") != std::string::npos) {
        throw std::invalid_argument("agent id unusable in CSV: \"" + id + "\"");
    }
    return id;
}

constexpr const char* kTraceHeader = "record,t,agent,other,x,y,x2,y2,heading,speed";
constexpr const char* kSummaryHeader =
    "kind,policy,count,collisions,mean_pdm,mean_min_ttc,comfort_rate,mean_progress";

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

ParseError::ParseError(ParseCode code, std::string path, const std::string& description)
    : std::runtime_error(compose(path, description)), code_(code), path_(std::move(path)) {}

std::string format_double(double value) {
    value = canonical(value);
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

// --- scenario files ----------------------------------------------------

Scenario parse_scenario(const std::string& text) {
    const json root = parse_document(text);
    as_object(root, "");
    check_schema(root, "betop-scenario/1");
    reject_unknown(root, "", {"schema_version", "dt", "agents", "map"});

    const double dt = number_at(member(root, "", "dt"), "dt");
    if (!(dt > 0.0)) fail(ParseCode::bad_value, "dt", "must be positive");

    Scenario sc;
    const json& agents = as_array(member(root, "", "agents"), "agents");
    if (agents.empty()) fail(ParseCode::bad_value, "agents", "needs at least one agent");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const std::string path = idx("agents", i);
        const json& a = as_object(agents[i], path);
        reject_unknown(a, path, {"id", "kind", "length", "width", "history", "future"});
        AgentRecord rec;
        rec.id = string_at(member(a, path, "id"), field(path, "id"));
        if (!seen.insert(rec.id).second) {
            fail(ParseCode::duplicate_id, field(path, "id"), "duplicate id \"" + rec.id + "\"");
        }
        rec.kind = parse_kind(string_at(member(a, path, "kind"), field(path, "kind")),
                              field(path, "kind"));
        rec.shape.length = number_at(member(a, path, "length"), field(path, "length"));
        rec.shape.width = number_at(member(a, path, "width"), field(path, "width"));
        rec.history = parse_states(member(a, path, "history"), field(path, "history"), dt);
        if (a.contains("future")) {
            rec.future = parse_states(a["future"], field(path, "future"), dt);
        }
        sc.agents.push_back(std::move(rec));
    }

    if (root.contains("map")) {
        const json& map = as_array(root["map"], "map");
        for (std::size_t i = 0; i < map.size(); ++i) {
            const std::string path = idx("map", i);
            const json& entry = as_object(map[i], path);
            reject_unknown(entry, path, {"tag", "points"});
            MapPolyline line;
            line.tag = string_at(member(entry, path, "tag"), field(path, "tag"));
            const json& pts = as_array(member(entry, path, "points"), field(path, "points"));
            for (std::size_t p = 0; p < pts.size(); ++p) {
                const std::string pp = idx(field(path, "points"), p);
                const json& pair = as_array(pts[p], pp);
                if (pair.size() != 2) fail(ParseCode::ragged, pp, "expected 2 values per point");
                line.points.push_back(
                    Vec2{number_at(pair[0], idx(pp, 0)), number_at(pair[1], idx(pp, 1))});
            }
            sc.map_polylines.push_back(std::move(line));
        }
    }

    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(ParseCode::bad_value, "", e.what());
    }
    sc.horizon_history = -sc.agents.front().history.states.front().t;
    for (const AgentRecord& rec : sc.agents) {
        if (rec.future) {
            sc.horizon_future = rec.future->states.back().t;
            break;
        }
    }
    return sc;
}

std::string serialize_scenario(const Scenario& scenario) {
    scenario.validate();
    json root = json::object();
    root["schema_version"] = "betop-scenario/1";
    root["dt"] = canonical(scenario.dt());
    json agents = json::array();
    for (const AgentRecord& rec : scenario.agents) {
        json a = json::object();
        a["id"] = rec.id;
        a["kind"] = kind_name(rec.kind);
        a["length"] = canonical(rec.shape.length);
        a["width"] = canonical(rec.shape.width);
        json hist = json::array();
        for (const TrajState& s : rec.history.states) hist.push_back(state_row(s));
        a["history"] = std::move(hist);
        if (rec.future) {
            json fut = json::array();
            for (const TrajState& s : rec.future->states) fut.push_back(state_row(s));
            a["future"] = std::move(fut);
        }
        agents.push_back(std::move(a));
    }
    root["agents"] = std::move(agents);
    if (!scenario.map_polylines.empty()) {
        json map = json::array();
        for (const MapPolyline& line : scenario.map_polylines) {
            json entry = json::object();
            entry["tag"] = line.tag;
            json pts = json::array();
            for (const Vec2& p : line.points) {
                pts.push_back(json::array({canonical(p.x), canonical(p.y)}));
            }
            entry["points"] = std::move(pts);
            map.push_back(std::move(entry));
        }
        root["map"] = std::move(map);
    }
    return dump(root);
}

// --- topology files ---------------------------------------------------

TopologyFile parse_topology(const std::string& text) {
    const json root = parse_document(text);
    as_object(root, "");
    check_schema(root, "betop-topology/1");
    reject_unknown(root, "", {"schema_version", "agent_ids", "matrix"});

    TopologyFile out;
    const json& ids = as_array(member(root, "", "agent_ids"), "agent_ids");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::string path = idx("agent_ids", i);
        out.agent_ids.push_back(string_at(ids[i], path));
        if (!seen.insert(out.agent_ids.back()).second) {
            fail(ParseCode::duplicate_id, path, "duplicate id \"" + out.agent_ids.back() + "\"");
        }
    }
    const json& matrix = as_array(member(root, "", "matrix"), "matrix");
    const std::size_t n = out.agent_ids.size();
    if (matrix.size() != n * n) {
        fail(ParseCode::bad_value, "matrix", "expected a square matrix over agent_ids");
    }
    out.matrix.reserve(matrix.size());
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out.matrix.push_back(number_at(matrix[i], idx("matrix", i)));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (out.matrix[i * n + i] != 0.0) {
            fail(ParseCode::bad_value, idx("matrix", i * n + i), "diagonal must be zero");
        }
    }
    return out;
}

namespace {

std::string topology_json(const std::vector<std::string>& agent_ids,
                          const std::vector<double>& values) {
    std::set<std::string> seen;
    for (const std::string& id : agent_ids) {
        if (!seen.insert(id).second) {
            throw std::invalid_argument("duplicate agent id: " + id);
        }
    }
    json root = json::object();
    root["schema_version"] = "betop-topology/1";
    root["agent_ids"] = agent_ids;
    json matrix = json::array();
    for (double v : values) matrix.push_back(canonical(v));
    root["matrix"] = std::move(matrix);
    return dump(root);
}

}  // namespace

std::string serialize_topology(const std::vector<std::string>& agent_ids,
                               const EdgeTopology& topology) {
    topology.validate();
    if (agent_ids.size() != topology.n_agents) {
        throw std::invalid_argument("agent id count must match the matrix dimension");
    }
    std::vector<double> values(topology.entries.begin(), topology.entries.end());
    return topology_json(agent_ids, values);
}

std::string serialize_topology(const std::vector<std::string>& agent_ids,
                               const ScoredTopology& topology) {
    topology.validate();
    if (agent_ids.size() != topology.n_agents) {
        throw std::invalid_argument("agent id count must match the matrix dimension");
    }
    return topology_json(agent_ids, topology.scores);
}

// --- simulation reports --------------------------------------------------

ReportFile parse_report(const std::string& text) {
    const json root = parse_document(text);
    as_object(root, "");
    check_schema(root, "betop-report/1");
    reject_unknown(root, "", {"schema_version", "seed", "kind", "policy", "collisions", "min_ttc",
                              "progress_ratio", "comfort_ok", "pdm_lite"});
    ReportFile out;
    out.seed = uint_at(member(root, "", "seed"), "seed");
    try {
        out.kind = parse_scenario_kind(string_at(member(root, "", "kind"), "kind"));
        out.policy = parse_policy(string_at(member(root, "", "policy"), "policy"));
    } catch (const std::invalid_argument& e) {
        throw ParseError(ParseCode::bad_value, "", e.what());
    }
    out.report.collisions = static_cast<int>(uint_at(member(root, "", "collisions"), "collisions"));
    out.report.min_ttc = number_at(member(root, "", "min_ttc"), "min_ttc");
    out.report.progress_ratio = number_at(member(root, "", "progress_ratio"), "progress_ratio");
    out.report.comfort_ok = bool_at(member(root, "", "comfort_ok"), "comfort_ok");
    out.report.pdm_lite = number_at(member(root, "", "pdm_lite"), "pdm_lite");
    return out;
}

std::string serialize_report(const ReportFile& report) {
    json root = json::object();
    root["schema_version"] = "betop-report/1";
    root["seed"] = report.seed;
    root["kind"] = to_string(report.kind);
    root["policy"] = to_string(report.policy);
    root["collisions"] = report.report.collisions;
    root["min_ttc"] = canonical(report.report.min_ttc);
    root["progress_ratio"] = canonical(report.report.progress_ratio);
    root["comfort_ok"] = report.report.comfort_ok;
    root["pdm_lite"] = canonical(report.report.pdm_lite);
    return dump(root);
}

// --- plan files -----------------------------------------------------------

PlanFile parse_plan(const std::string& text) {
    const json root = parse_document(text);
    as_object(root, "");
    check_schema(root, "betop-plan/1");
    reject_unknown(root, "", {"schema_version", "dt", "trunk_index", "branch_choice", "total_cost",
                              "trunk"});
    PlanFile out;
    const double dt = number_at(member(root, "", "dt"), "dt");
    if (!(dt > 0.0)) fail(ParseCode::bad_value, "dt", "must be positive");
    out.trunk_index = uint_at(member(root, "", "trunk_index"), "trunk_index");
    const json& choices = as_array(member(root, "", "branch_choice"), "branch_choice");
    for (std::size_t i = 0; i < choices.size(); ++i) {
        out.branch_choice.push_back(uint_at(choices[i], idx("branch_choice", i)));
    }
    out.total_cost = number_at(member(root, "", "total_cost"), "total_cost");
    out.trunk = parse_states(member(root, "", "trunk"), "trunk", dt);
    try {
        out.trunk.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(ParseCode::bad_value, "trunk", e.what());
    }
    return out;
}

std::string serialize_plan(const PlanFile& plan) {
    plan.trunk.validate();
    json root = json::object();
    root["schema_version"] = "betop-plan/1";
    root["dt"] = canonical(plan.trunk.dt);
    root["trunk_index"] = plan.trunk_index;
    json choices = json::array();
    for (std::size_t c : plan.branch_choice) choices.push_back(c);
    root["branch_choice"] = std::move(choices);
    root["total_cost"] = canonical(plan.total_cost);
    json trunk = json::array();
    for (const TrajState& s : plan.trunk.states) trunk.push_back(state_row(s));
    root["trunk"] = std::move(trunk);
    return dump(root);
}

// --- planner configuration -------------------------------------------------

PlanConfigFile parse_plan_config(const std::string& text) {
    const json root = parse_document(text);
    as_object(root, "");
    check_schema(root, "betop-plan-config/1");
    reject_unknown(root, "", {"schema_version", "t_b", "lambda_1", "lambda_2", "lambda_m", "k_m",
                              "m_modes", "m_branches", "candidates"});
    PlanConfigFile out;
    if (root.contains("t_b")) out.planner.t_b = number_at(root["t_b"], "t_b");
    if (root.contains("lambda_1")) out.planner.lambda_1 = number_at(root["lambda_1"], "lambda_1");
    if (root.contains("lambda_2")) out.planner.lambda_2 = number_at(root["lambda_2"], "lambda_2");
    if (root.contains("lambda_m")) out.planner.lambda_m = number_at(root["lambda_m"], "lambda_m");
    if (root.contains("k_m")) out.planner.k_m = uint_at(root["k_m"], "k_m");
    if (root.contains("m_modes")) out.planner.m_modes = uint_at(root["m_modes"], "m_modes");
    if (root.contains("m_branches")) {
        out.planner.m_branches = uint_at(root["m_branches"], "m_branches");
    }
    try {
        out.planner.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(ParseCode::bad_value, "", e.what());
    }

    if (root.contains("candidates")) {
        const json& cand = as_object(root["candidates"], "candidates");
        reject_unknown(cand, "candidates", {"dt", "trunks", "branches", "trunk_scores"});
        const double dt = number_at(member(cand, "candidates", "dt"), "candidates.dt");
        if (!(dt > 0.0)) fail(ParseCode::bad_value, "candidates.dt", "must be positive");
        PlanCandidateSet set;
        const json& trunks = as_array(member(cand, "candidates", "trunks"), "candidates.trunks");
        for (std::size_t i = 0; i < trunks.size(); ++i) {
            set.trunks.push_back(parse_states(trunks[i], idx("candidates.trunks", i), dt));
        }
        const json& branches =
            as_array(member(cand, "candidates", "branches"), "candidates.branches");
        for (std::size_t i = 0; i < branches.size(); ++i) {
            const std::string path = idx("candidates.branches", i);
            const json& per_trunk = as_array(branches[i], path);
            std::vector<Trajectory> list;
            for (std::size_t b = 0; b < per_trunk.size(); ++b) {
                list.push_back(parse_states(per_trunk[b], idx(path, b), dt));
            }
            set.branches.push_back(std::move(list));
        }
        const json& scores =
            as_array(member(cand, "candidates", "trunk_scores"), "candidates.trunk_scores");
        for (std::size_t i = 0; i < scores.size(); ++i) {
            set.trunk_scores.push_back(number_at(scores[i], idx("candidates.trunk_scores", i)));
        }
        try {
            set.validate();
        } catch (const std::invalid_argument& e) {
            throw ParseError(ParseCode::bad_value, "candidates", e.what());
        }
        out.candidates = std::move(set);
    }
    return out;
}

// --- rollout traces -------------------------------------------------------

std::string serialize_trace(const Trace& trace) {
    std::string out = kTraceHeader;
    out.push_back('\n');
    for (const TraceState& s : trace.states) {
        out += "state," + format_double(s.t) + "," + safe_csv_id(s.agent) + ",," +
               format_double(s.x) + "," + format_double(s.y) + ",,," +
               format_double(s.heading) + "," + format_double(s.speed) + "\n";
    }
    for (const TraceEdge& e : trace.edges) {
        out += "edge," + format_double(e.t) + "," + safe_csv_id(e.from) + "," +
               safe_csv_id(e.to) + "," + format_double(e.x1) + "," + format_double(e.y1) + "," +
               format_double(e.x2) + "," + format_double(e.y2) + ",,\n";
    }
    return out;
}

Trace parse_trace(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines.front() != kTraceHeader) {
        fail(ParseCode::schema_mismatch, "line 1", "expected trace header");
    }
    Trace out;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        const std::string path = "line " + std::to_string(n + 1);
        const std::vector<std::string> cells = split_line(lines[n]);
        if (cells.size() != 10) fail(ParseCode::ragged, path, "expected 10 cells");
        if (cells[0] == "state") {
            TraceState s;
            s.t = csv_number(cells[1], path);
            s.agent = cells[2];
            require_empty(cells[3], path);
            s.x = csv_number(cells[4], path);
            s.y = csv_number(cells[5], path);
            require_empty(cells[6], path);
            require_empty(cells[7], path);
            s.heading = csv_number(cells[8], path);
            s.speed = csv_number(cells[9], path);
            if (s.agent.empty()) fail(ParseCode::bad_value, path, "missing agent id");
            out.states.push_back(std::move(s));
        } else if (cells[0] == "edge") {
            TraceEdge e;
            e.t = csv_number(cells[1], path);
            e.from = cells[2];
            e.to = cells[3];
            e.x1 = csv_number(cells[4], path);
            e.y1 = csv_number(cells[5], path);
            e.x2 = csv_number(cells[6], path);
            e.y2 = csv_number(cells[7], path);
            require_empty(cells[8], path);
            require_empty(cells[9], path);
            if (e.from.empty() || e.to.empty()) {
                fail(ParseCode::bad_value, path, "missing agent id");
            }
            out.edges.push_back(std::move(e));
        } else {
            fail(ParseCode::schema_mismatch, path, "unknown record type \"" + cells[0] + "\"");
        }
    }
    return out;
}

// --- aggregate summaries --------------------------------------------------

std::string serialize_summary(const std::vector<SummaryRow>& rows) {
    std::string out = kSummaryHeader;
    out.push_back('\n');
    for (const SummaryRow& r : rows) {
        out += safe_csv_id(r.kind) + "," + safe_csv_id(r.policy) + "," + std::to_string(r.count) +
               "," + std::to_string(r.collisions) + "," + format_double(r.mean_pdm) + "," +
               format_double(r.mean_min_ttc) + "," + format_double(r.comfort_rate) + "," +
               format_double(r.mean_progress) + "\n";
    }
    return out;
}

std::vector<SummaryRow> parse_summary(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines.front() != kSummaryHeader) {
        fail(ParseCode::schema_mismatch, "line 1", "expected summary header");
    }
    std::vector<SummaryRow> rows;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        const std::string path = "line " + std::to_string(n + 1);
        const std::vector<std::string> cells = split_line(lines[n]);
        if (cells.size() != 8) fail(ParseCode::ragged, path, "expected 8 cells");
        SummaryRow r;
        r.kind = cells[0];
        r.policy = cells[1];
        r.count = static_cast<std::size_t>(csv_number(cells[2], path));
        r.collisions = static_cast<std::size_t>(csv_number(cells[3], path));
        r.mean_pdm = csv_number(cells[4], path);
        r.mean_min_ttc = csv_number(cells[5], path);
        r.comfort_rate = csv_number(cells[6], path);
        r.mean_progress = csv_number(cells[7], path);
        rows.push_back(std::move(r));
    }
    return rows;
}

// --- plots ----------------------------------------------------------

std::string render_svg(const Trace& trace) {
    if (trace.states.empty()) {
        throw std::invalid_argument("trace has no states to plot");
    }
    // Agents in order of first appearance, each with its polyline points.
    std::vector<std::pair<std::string, std::vector<const TraceState*>>> agents;
    std::map<std::string, std::size_t> index;
    for (const TraceState& s : trace.states) {
        auto [it, inserted] = index.emplace(s.agent, agents.size());
        if (inserted) agents.push_back({s.agent, {}});
        agents[it->second].second.push_back(&s);
    }

    double min_x = trace.states.front().x;
    double max_x = min_x;
    double min_y = trace.states.front().y;
    double max_y = min_y;
    auto grow = [&](double x, double y) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
    };
    for (const TraceState& s : trace.states) grow(s.x, s.y);
    for (const TraceEdge& e : trace.edges) {
        grow(e.x1, e.y1);
        grow(e.x2, e.y2);
    }

    const double pad = 5.0;
    const double width = (max_x - min_x) + 2.0 * pad;
    const double height = (max_y - min_y) + 2.0 * pad;
    // Flip y so +y in world coordinates points up in the image.
    auto px = [&](double x) { return format_double(x - min_x + pad); };
    auto py = [&](double y) { return format_double(max_y - y + pad); };

    static constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};
    constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << format_double(width)
        << " " << format_double(height) << "\">\n";
    svg << " <g fill=\"none\" stroke-width=\"0.3\" stroke-linecap=\"round\">\n";
    for (std::size_t a = 0; a < agents.size(); ++a) {
        svg << "  <polyline class=\"agent\" data-agent=\"" << xml_escape(agents[a].first)
            << "\" stroke=\"" << kPalette[a % kPaletteSize] << "\" points=\"";
        for (std::size_t i = 0; i < agents[a].second.size(); ++i) {
            if (i > 0) svg << ' ';
            svg << px(agents[a].second[i]->x) << ',' << py(agents[a].second[i]->y);
        }
        svg << "\"/>\n";
    }
    for (const TraceEdge& e : trace.edges) {
        svg << "  <line class=\"edge\" stroke=\"#d62728\" stroke-dasharray=\"0.8 0.5\" x1=\""
            << px(e.x1) << "\" y1=\"" << py(e.y1) << "\" x2=\"" << px(e.x2) << "\" y2=\""
            << py(e.y2) << "\"/>\n";
    }
    svg << " </g>\n</svg>\n";
    return svg.str();
}

}  // namespace betop
