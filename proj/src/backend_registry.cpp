#include "swarmci/backend_registry.hpp"

#include <map>

#include "swarmci/simulated_backend.hpp"
#include "swarmci/ssh_backend.hpp"

namespace swarmci {

namespace {

struct Entry {
    BackendFactory factory;
    BackendConfValidator validator;
};

std::map<std::string, Entry>& registry() {
    static std::map<std::string, Entry> reg = [] {
        std::map<std::string, Entry> r;
        r["simulated"] = {
            [](const nlohmann::json& conf, const std::string&) {
                return std::unique_ptr<Backend>(
                    new SimulatedBackend(SimulatedConf::from_json(conf)));
            },
            &SimulatedConf::validate,
        };
        r["ssh-cluster"] = {
            [](const nlohmann::json& conf, const std::string& image_ref) {
                return std::unique_ptr<Backend>(
                    new SshClusterBackend(SshConf::from_json(conf), image_ref));
            },
            &SshConf::validate,
        };
        return r;
    }();
    return reg;
}

}  // namespace

void register_backend(const std::string& name, BackendFactory factory,
                      BackendConfValidator validator) {
    registry()[name] = {std::move(factory), std::move(validator)};
}

bool backend_known(const std::string& name) { return registry().count(name) > 0; }

std::vector<std::string> known_backends() {
    std::vector<std::string> names;
    for (const auto& [name, _] : registry()) names.push_back(name);
    return names;
}

std::unique_ptr<Backend> make_backend(const std::string& name,
                                      const nlohmann::json& conf,
                                      const std::string& image_ref) {
    auto it = registry().find(name);
    if (it == registry().end())
        throw UnknownBackend("unknown backend \"" + name + "\"");
    return it->second.factory(conf, image_ref);
}

std::vector<ValidationFinding> validate_backend_conf_block(
    const std::string& name, const nlohmann::json& conf,
    const std::string& path_prefix, int required_nodes) {
    auto it = registry().find(name);
    if (it == registry().end())
        return {{path_prefix, "unknown backend \"" + name + "\""}};
    return it->second.validator(conf, path_prefix, required_nodes);
}

}  // namespace swarmci
