#pragma once

#include "omx/metric_store.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace omx {

enum class Severity { Info, Warn, Critical };

std::string_view to_string(Severity s);
Severity parse_severity(std::string_view text);

struct FindingEvidence {
    std::string metric_id;
    std::string stat; // "max", "avg", "last", ...
    double value = 0.0;
    bool operator==(const FindingEvidence&) const = default;
};

struct FindingItem {
    Severity severity = Severity::Info;
    std::string message;
    std::vector<FindingEvidence> evidence;
    bool operator==(const FindingItem&) const = default;
};

struct ToolFindings {
    std::string tool_id;
    std::vector<FindingItem> items;
    bool operator==(const ToolFindings&) const = default;
};

using ToolParams = std::map<std::string, std::string>;

// An analyzer reads whatever the snapshot holds; it must not consult any other
// state, so identical inputs give identical findings.
using ToolAnalyzer = std::function<ToolFindings(const MetricSource& snapshot, const ToolParams& params)>;

class ToolRegistry {
public:
    // Throws DuplicateTool.
    bool register_tool(const std::string& tool_id, ToolAnalyzer analyzer);
    bool contains(const std::string& tool_id) const { return tools_.count(tool_id) > 0; }
    std::vector<std::string> tool_ids() const;

    // Throws UnknownTool. Evidence that does not resolve in the snapshot is a
    // tool defect and raises InvalidArgument.
    ToolFindings run_tool(const std::string& tool_id, const MetricSource& snapshot, const ToolParams& params = {}) const;

    // Registry preloaded with logsync_verifier and redoarchive_inspector.
    static ToolRegistry with_builtins();

private:
    std::map<std::string, ToolAnalyzer> tools_;
};

// Evidence entries whose metric is missing from the snapshot.
std::vector<FindingEvidence> unresolved_evidence(const ToolFindings& findings, const MetricSource& snapshot);

ToolFindings logsync_verifier(const MetricSource& snapshot, const ToolParams& params);
ToolFindings redoarchive_inspector(const MetricSource& snapshot, const ToolParams& params);

void to_json(nlohmann::json& j, const ToolFindings& f);
void from_json(const nlohmann::json& j, ToolFindings& f);

} // namespace omx
