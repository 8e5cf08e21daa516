#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarmci/errors.hpp"

namespace swarmci {

enum class ScaleMode { linear, log2 };

std::string to_string(ScaleMode mode);

// Inclusive integer range [lo, hi], 1 <= lo <= hi.
struct AxisRange {
    int lo = 1;
    int hi = 1;

    bool operator==(const AxisRange&) const = default;
};

struct ScalabilitySpec {
    std::string script;
    AxisRange num_of_nodes;
    AxisRange proc_per_node;
    ScaleMode mode = ScaleMode::linear;
    int step = 1;     // linear mode only
    int repeats = 1;  // runs per scale point, lower-median record kept

    bool operator==(const ScalabilitySpec&) const = default;
};

struct ParseWarning {
    std::string json_path;
    std::string message;
};

struct ValidationFinding {
    std::string json_path;
    std::string message;
};

struct TaskSpec {
    std::string task_name;
    std::string exec_target;
    std::string image_ref;  // empty is fine for the simulated backend
    ScalabilitySpec scalability;

    // Opaque backend block, validated by the selected backend. When the
    // beefile nests it as exec_env_conf.<target> the nesting is remembered
    // so serialization and finding paths round-trip.
    nlohmann::json backend_conf = nlohmann::json::object();
    bool backend_conf_nested = false;

    // Unknown keys are preserved so host CI scripts can carry extra metadata.
    nlohmann::json docker_extras = nlohmann::json::object();
    nlohmann::json task_conf_extras = nlohmann::json::object();
    nlohmann::json scalability_extras = nlohmann::json::object();
    nlohmann::json extras = nlohmann::json::object();

    std::vector<ParseWarning> warnings;  // not part of value identity

    bool operator==(const TaskSpec& other) const;
};

TaskSpec parse_taskspec(const std::string& raw);
TaskSpec parse_taskspec_file(const std::filesystem::path& file);
std::string serialize_taskspec(const TaskSpec& spec);

// JSON-path prefix of the active backend conf block, e.g. "$.exec_env_conf"
// or "$.exec_env_conf.ssh-cluster".
std::string backend_conf_path(const TaskSpec& spec);

// Empty when the selected backend accepts its conf block; otherwise one
// finding per defect. Never throws for conf defects.
std::vector<ValidationFinding> validate_backend_conf(const TaskSpec& spec);

}  // namespace swarmci
