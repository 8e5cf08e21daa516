#pragma once

#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarmci/backend.hpp"

namespace swarmci {

// Seams the CLI needs from the outside world; tests swap them out.
struct CliServices {
    std::function<std::unique_ptr<Backend>(const std::string& name,
                                           const nlohmann::json& conf,
                                           const std::string& image_ref)>
        backend_factory;                      // default: the backend registry
    std::map<std::string, std::string> env;   // default: process CI env
    bool use_process_env = true;
};

// Exit codes: 0 success, 1 test/job failure, 2 configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err, const CliServices& services = {});

}  // namespace swarmci
