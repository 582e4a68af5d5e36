#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "betop/planner.hpp"
#include "betop/scenario.hpp"
#include "betop/sim.hpp"
#include "betop/topology.hpp"

// File formats. Everything emitted here re-parses under its own schema, and
// serialization is canonical: object keys sorted, floats printed with the
// shortest representation that round-trips, one-space indent, trailing
// newline. Canonical bytes make "same inputs, same file" checks exact.

namespace betop {

enum class ParseCode {
    bad_json,         // text is not JSON at all
    schema_mismatch,  // wrong schema_version, missing/unknown field, wrong type
    non_finite,       // null/overflow where a finite number is required
    ragged,           // rows of one array differ in length
    duplicate_id,     // repeated agent id
    bad_value,        // parses fine but violates a semantic invariant
};

// what() is "<description> at <path>", e.g.
//   "non-finite value at agents[0].future[3][1]"
class ParseError : public std::runtime_error {
  public:
    ParseError(ParseCode code, std::string path, const std::string& description);

    ParseCode code() const { return code_; }
    const std::string& path() const { return path_; }

  private:
    ParseCode code_;
    std::string path_;
};

// --- scenario files ("betop-scenario/1") ---------------------------------

Scenario parse_scenario(const std::string& text);
std::string serialize_scenario(const Scenario& scenario);

// --- topology files ("betop-topology/1") ---------------------------------

struct TopologyFile {
    std::vector<std::string> agent_ids;
    std::vector<double> matrix;  // row-major, square, zero diagonal

    std::size_t n_agents() const { return agent_ids.size(); }
};

TopologyFile parse_topology(const std::string& text);
std::string serialize_topology(const std::vector<std::string>& agent_ids,
                               const EdgeTopology& topology);
std::string serialize_topology(const std::vector<std::string>& agent_ids,
                               const ScoredTopology& topology);

// --- simulation reports ("betop-report/1") -------------------------------

struct ReportFile {
    std::uint64_t seed{0};
    ScenarioKind kind{ScenarioKind::crossing};
    Policy policy{Policy::contingency};
    SimReport report;
};

ReportFile parse_report(const std::string& text);
std::string serialize_report(const ReportFile& report);

// --- plan files ("betop-plan/1") ------------------------------------------

struct PlanFile {
    std::size_t trunk_index{0};
    std::vector<std::size_t> branch_choice;  // one branch per joint mode
    double total_cost{0.0};
    Trajectory trunk;
};

PlanFile parse_plan(const std::string& text);
std::string serialize_plan(const PlanFile& plan);

// --- planner configuration ("betop-plan-config/1") -------------------------
//
// Input-only. Carries the planner constants plus, optionally, an explicit
// candidate set; without one the caller samples candidates itself.

struct PlanConfigFile {
    PlannerConfig planner;
    std::optional<PlanCandidateSet> candidates;
};

PlanConfigFile parse_plan_config(const std::string& text);

// --- rollout traces (CSV) --------------------------------------------------
//
// Header: record,t,agent,other,x,y,x2,y2,heading,speed
// "state" rows fill t,agent,x,y,heading,speed; "edge" rows fill t,agent
// (source), other (target) and both endpoints. Unused cells stay empty.

std::string serialize_trace(const Trace& trace);
Trace parse_trace(const std::string& text);

// --- aggregate summaries (CSV) ---------------------------------------------

struct SummaryRow {
    std::string kind;
    std::string policy;
    std::size_t count{0};
    std::size_t collisions{0};
    double mean_pdm{0.0};
    double mean_min_ttc{0.0};
    double comfort_rate{0.0};
    double mean_progress{0.0};
};

std::string serialize_summary(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> parse_summary(const std::string& text);

// --- plots -------------------------------------------------------------

/// Standalone SVG: one polyline per agent (class "agent") plus one line with
/// class "edge" per recorded topology edge. Output is well-formed XML.
std::string render_svg(const Trace& trace);

/// Shortest decimal form that parses back to exactly the same double.
/// -0 is printed as 0.
std::string format_double(double value);

}  // namespace betop
