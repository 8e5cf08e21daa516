#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarmci/backend.hpp"
#include "swarmci/config.hpp"

namespace swarmci {

using BackendFactory = std::function<std::unique_ptr<Backend>(
    const nlohmann::json& conf, const std::string& image_ref)>;

// Validators report findings relative to path_prefix; required_nodes lets a
// backend cross-check its capacity against the planned matrix.
using BackendConfValidator = std::function<std::vector<ValidationFinding>(
    const nlohmann::json& conf, const std::string& path_prefix, int required_nodes)>;

// Open enum: "simulated" and "ssh-cluster" ship built in, further backends
// register by name.
void register_backend(const std::string& name, BackendFactory factory,
                      BackendConfValidator validator);

bool backend_known(const std::string& name);
std::vector<std::string> known_backends();

std::unique_ptr<Backend> make_backend(const std::string& name,
                                      const nlohmann::json& conf,
                                      const std::string& image_ref);

std::vector<ValidationFinding> validate_backend_conf_block(
    const std::string& name, const nlohmann::json& conf,
    const std::string& path_prefix, int required_nodes);

}  // namespace swarmci
