#include "betop/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "betop/io.hpp"
#include "betop/planner.hpp"
#include "betop/prediction.hpp"
#include "betop/sim.hpp"
#include "betop/topology.hpp"

namespace betop {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::invalid_argument("cannot read " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::invalid_argument("cannot write " + path);
    }
    out << content;
    if (!out) {
        throw std::invalid_argument("cannot write " + path);
    }
    log_info("wrote " + path);
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
            throw std::invalid_argument("expected comma-separated indices, got \"" + text + "\"");
        }
        out.push_back(static_cast<std::size_t>(std::stoull(token)));
    }
    if (out.empty()) {
        throw std::invalid_argument("expected comma-separated indices, got \"" + text + "\"");
    }
    return out;
}

std::vector<std::string> agent_ids_of(const Scenario& sc) {
    std::vector<std::string> ids;
    ids.reserve(sc.agents.size());
    for (const AgentRecord& a : sc.agents) ids.push_back(a.id);
    return ids;
}

// Futures and presence frames for topology extraction; every agent needs a
// ground-truth future.
void gather_futures(const Scenario& sc, std::vector<Trajectory>& futures,
                    std::vector<Pose2>& frames) {
    for (const AgentRecord& a : sc.agents) {
        if (!a.future) {
            throw std::invalid_argument("agent \"" + a.id + "\" has no future trajectory");
        }
        futures.push_back(*a.future);
        frames.push_back(a.presence_pose());
    }
}

// JSON files sorted by filename: deterministic directory sweeps.
std::vector<fs::path> json_files(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        throw std::invalid_argument(dir + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw std::invalid_argument("no .json files in " + dir);
    }
    return files;
}

int run_extract(const std::string& in, const std::string& out, const std::string& sources) {
    const Scenario sc = parse_scenario(read_file(in));
    std::vector<Trajectory> futures;
    std::vector<Pose2> frames;
    gather_futures(sc, futures, frames);
    std::optional<std::vector<std::size_t>> source_rows;
    if (!sources.empty()) {
        source_rows = parse_index_list(sources);
    }
    IntertwineStats stats;
    const EdgeTopology topo = extract_topology(futures, frames, source_rows, &stats);
    log_debug("interval checks: " + std::to_string(stats.interval_checks));
    write_file(out, serialize_topology(agent_ids_of(sc), topo));
    return 0;
}

int run_winding(const std::string& in, const std::string& pair, const std::string& format) {
    const Scenario sc = parse_scenario(read_file(in));
    const std::vector<std::size_t> indices = parse_index_list(pair);
    if (indices.size() != 2 || indices[0] == indices[1]) {
        throw std::invalid_argument("--pair needs two distinct indices");
    }
    for (std::size_t i : indices) {
        if (i >= sc.agents.size()) {
            throw std::invalid_argument("agent index " + std::to_string(i) + " out of range");
        }
        if (!sc.agents[i].future) {
            throw std::invalid_argument("agent \"" + sc.agents[i].id +
                                        "\" has no future trajectory");
        }
    }
    const double w = winding_number(*sc.agents[indices[0]].future, *sc.agents[indices[1]].future);
    if (format == "json") {
        nlohmann::json obj = nlohmann::json::object();
        obj["i"] = indices[0];
        obj["j"] = indices[1];
        obj["w"] = w + 0.0;
        std::cout << obj.dump() << "\n";
    } else if (format == "csv") {
        std::cout << "i,j,w\n"
                  << indices[0] << "," << indices[1] << "," << format_double(w) << "\n";
    } else {
        std::cout << format_double(w) << "\n";
    }
    return 0;
}

int run_plan(const std::string& in, const std::string& config, const std::string& out) {
    const Scenario sc = parse_scenario(read_file(in));
    const PlanConfigFile cfg = parse_plan_config(read_file(config));
    if (sc.agents.size() < 2) {
        throw std::invalid_argument("planning needs at least one agent besides the AV");
    }
    const double dt = sc.dt();

    PlanCandidateSet candidates;
    if (cfg.candidates) {
        candidates = *cfg.candidates;
    } else {
        SimConfig sim_cfg;
        sim_cfg.dt = dt;
        sim_cfg.replan_period = dt;
        sim_cfg.n_agents = sc.agents.size();
        candidates = lattice_candidates(sc.agents.front(), sim_cfg, cfg.planner);
    }
    const std::size_t horizon_steps =
        candidates.trunks.front().size() + candidates.branches.front().front().size() - 1;
    const double horizon = static_cast<double>(horizon_steps) * dt;

    std::vector<GmmPrediction> marginals;
    std::vector<Trajectory> topo_futures;
    std::vector<Pose2> frames;
    const GmmPrediction av_pred = constant_velocity_gmm(sc.agents.front(), horizon, 1);
    topo_futures.push_back(mode_mean(av_pred, 0, dt));
    frames.push_back(sc.agents.front().presence_pose());
    for (std::size_t i = 1; i < sc.agents.size(); ++i) {
        marginals.push_back(constant_velocity_gmm(sc.agents[i], horizon, cfg.planner.m_modes));
        topo_futures.push_back(mode_mean(marginals.back(), 0, dt));
        frames.push_back(sc.agents[i].presence_pose());
    }
    const EdgeTopology topo = extract_topology(topo_futures, frames);
    const PlanSelection sel = select_plan(candidates, marginals, to_scored(topo), cfg.planner);
    log_debug("selected trunk " + std::to_string(sel.trunk_index) + " with cost " +
              format_double(sel.total_cost));

    PlanFile plan;
    plan.trunk_index = sel.trunk_index;
    plan.branch_choice = sel.branch_choice;
    plan.total_cost = sel.total_cost;
    plan.trunk = candidates.trunks[sel.trunk_index];
    write_file(out, serialize_plan(plan));
    return 0;
}

int run_simulate(std::uint64_t seed, const std::string& kind, const std::string& policy,
                 const std::string& report_path, const std::string& trace_path) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.kind = parse_scenario_kind(kind);
    const Policy pol = parse_policy(policy);
    Trace trace;
    Trace* trace_ptr = trace_path.empty() ? nullptr : &trace;
    const SimReport report = rollout(cfg, PlannerConfig{}, pol, trace_ptr);
    log_debug("pdm_lite " + format_double(report.pdm_lite));
    ReportFile file;
    file.seed = seed;
    file.kind = cfg.kind;
    file.policy = pol;
    file.report = report;
    write_file(report_path, serialize_report(file));
    if (trace_ptr) {
        write_file(trace_path, serialize_trace(trace));
    }
    return 0;
}

int run_eval(const std::string& reports_dir, const std::string& out, const std::string& format) {
    struct Accum {
        std::size_t count{0};
        std::size_t collisions{0};
        double pdm{0.0};
        double ttc{0.0};
        double comfort{0.0};
        double progress{0.0};
    };
    std::map<std::pair<std::string, std::string>, Accum> groups;
    for (const fs::path& path : json_files(reports_dir)) {
        const ReportFile report = parse_report(read_file(path.string()));
        Accum& acc = groups[{to_string(report.kind), to_string(report.policy)}];
        ++acc.count;
        acc.collisions += static_cast<std::size_t>(report.report.collisions);
        acc.pdm += report.report.pdm_lite;
        acc.ttc += report.report.min_ttc;
        acc.comfort += report.report.comfort_ok ? 1.0 : 0.0;
        acc.progress += report.report.progress_ratio;
    }
    std::vector<SummaryRow> rows;
    for (const auto& [key, acc] : groups) {
        SummaryRow row;
        row.kind = key.first;
        row.policy = key.second;
        row.count = acc.count;
        row.collisions = acc.collisions;
        const double n = static_cast<double>(acc.count);
        row.mean_pdm = acc.pdm / n;
        row.mean_min_ttc = acc.ttc / n;
        row.comfort_rate = acc.comfort / n;
        row.mean_progress = acc.progress / n;
        rows.push_back(std::move(row));
    }
    if (format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const SummaryRow& r : rows) {
            nlohmann::json obj = nlohmann::json::object();
            obj["kind"] = r.kind;
            obj["policy"] = r.policy;
            obj["count"] = r.count;
            obj["collisions"] = r.collisions;
            obj["mean_pdm"] = r.mean_pdm + 0.0;
            obj["mean_min_ttc"] = r.mean_min_ttc + 0.0;
            obj["comfort_rate"] = r.comfort_rate + 0.0;
            obj["mean_progress"] = r.mean_progress + 0.0;
            arr.push_back(std::move(obj));
        }
        write_file(out, arr.dump(1) + "\n");
    } else {
        write_file(out, serialize_summary(rows));
    }
    return 0;
}

int run_mine(const std::string& scenarios_dir, double gamma, const std::string& out) {
    std::vector<Scenario> scenarios;
    std::vector<std::string> names;
    for (const fs::path& path : json_files(scenarios_dir)) {
        scenarios.push_back(parse_scenario(read_file(path.string())));
        names.push_back(path.string());
    }
    const std::vector<std::size_t> kept =
        mine_interactive(scenarios, gamma, SimConfig{}, PlannerConfig{});
    log_info("kept " + std::to_string(kept.size()) + " of " + std::to_string(scenarios.size()) +
             " scenarios");
    std::string listing;
    for (std::size_t i : kept) {
        listing += names[i];
        listing.push_back('\n');
    }
    write_file(out, listing);
    return 0;
}

int run_plot(const std::string& trace_path, const std::string& out) {
    const Trace trace = parse_trace(read_file(trace_path));
    write_file(out, render_svg(trace));
    return 0;
}

}  // namespace

LogLevel log_level() {
    const char* env = std::getenv("BETOP_LOG");
    if (env == nullptr) return LogLevel::error;
    const std::string value(env);
    if (value == "debug") return LogLevel::debug;
    if (value == "info") return LogLevel::info;
    return LogLevel::error;
}

void log_info(const std::string& line) {
    if (log_level() >= LogLevel::info) {
        std::cerr << "[info] " << line << "\n";
    }
}

void log_debug(const std::string& line) {
    if (log_level() >= LogLevel::debug) {
        std::cerr << "[debug] " << line << "\n";
    }
}

int cli_run(int argc, const char* const* argv) {
    CLI::App app{"behavioral topology toolkit: interaction extraction, contingency planning "
                 "and closed-loop evaluation on synthetic driving scenes"};
    app.require_subcommand(1);

    std::string ex_in, ex_out, ex_sources;
    CLI::App* extract = app.add_subcommand("extract", "extract the interaction matrix");
    extract->add_option("--in", ex_in, "scenario JSON")->required();
    extract->add_option("--out", ex_out, "topology JSON to write")->required();
    extract->add_option("--sources", ex_sources, "comma-separated source rows (default: all)");

    std::string w_in, w_pair, w_format{"plain"};
    CLI::App* winding = app.add_subcommand("winding", "print the winding number of a pair");
    winding->add_option("--in", w_in, "scenario JSON")->required();
    winding->add_option("--pair", w_pair, "two agent indices, e.g. 0,1")->required();
    winding->add_option("--format", w_format, "plain|json|csv")
        ->check(CLI::IsMember({"plain", "json", "csv"}));

    std::string p_in, p_config, p_out;
    CLI::App* plan = app.add_subcommand("plan", "select a contingency plan");
    plan->add_option("--in", p_in, "scenario JSON")->required();
    plan->add_option("--config", p_config, "planner configuration JSON")->required();
    plan->add_option("--out", p_out, "plan JSON to write")->required();

    std::uint64_t s_seed{0};
    std::string s_kind{"crossing"}, s_policy{"contingency"}, s_report, s_trace;
    CLI::App* simulate = app.add_subcommand("simulate", "closed-loop rollout of a seeded scene");
    simulate->add_option("--seed", s_seed, "scenario seed");
    simulate->add_option("--kind", s_kind, "crossing|merge|parallel|dense_random");
    simulate->add_option("--policy", s_policy,
                         "contingency|naive_best_score|constant_velocity|expert_replay");
    simulate->add_option("--report", s_report, "report JSON to write")->required();
    simulate->add_option("--trace", s_trace, "optional trace CSV to write");

    std::string e_reports, e_out, e_format{"csv"};
    CLI::App* eval = app.add_subcommand("eval", "aggregate report files");
    eval->add_option("--reports", e_reports, "directory of report JSON files")->required();
    eval->add_option("--out", e_out, "summary file to write")->required();
    eval->add_option("--format", e_format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

    std::string m_scenarios, m_out;
    double m_gamma{0.1};
    CLI::App* mine = app.add_subcommand("mine", "keep interactive scenarios");
    mine->add_option("--scenarios", m_scenarios, "directory of scenario JSON files")->required();
    mine->add_option("--gamma", m_gamma, "mining threshold in (0, 1)");
    mine->add_option("--out", m_out, "list file to write")->required();

    std::string pl_trace, pl_out;
    CLI::App* plot = app.add_subcommand("plot", "render a trace as SVG");
    plot->add_option("--trace", pl_trace, "trace CSV")->required();
    plot->add_option("--out", pl_out, "SVG to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (extract->parsed()) return run_extract(ex_in, ex_out, ex_sources);
        if (winding->parsed()) return run_winding(w_in, w_pair, w_format);
        if (plan->parsed()) return run_plan(p_in, p_config, p_out);
        if (simulate->parsed()) return run_simulate(s_seed, s_kind, s_policy, s_report, s_trace);
        if (eval->parsed()) return run_eval(e_reports, e_out, e_format);
        if (mine->parsed()) return run_mine(m_scenarios, m_gamma, m_out);
        if (plot->parsed()) return run_plot(pl_trace, pl_out);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace betop
