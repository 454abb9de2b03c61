#include "crlkit/config.hpp"

#include <fstream>
#include <sstream>

#include "crlkit/common.hpp"

namespace crlkit {

const std::map<std::string, std::string>& ExperimentConfig::registry_defaults() {
    static const std::map<std::string, std::string> kRegistry = {
        // model
        {"model.k", "50"},
        {"model.f_act", "sigmoid"},
        {"model.g_act", "sigmoid"},
        {"model.recon_loss", "auto"},  // auto: cross_entropy iff manifest says binary views
        // training
        {"train.method", "corrnet"},   // corrnet | mae
        {"train.epochs", "30"},
        {"train.batch_size", "100"},
        {"train.learning_rate", "0.01"},
        {"train.optimizer", "rmsprop"},
        {"train.rmsprop_decay", "0.9"},
        {"train.rmsprop_eps", "1e-6"},
        {"train.lambda", "2.0"},
        {"train.mask", "L1,L2,L3,L4"},
        {"train.seed", "12345"},
        {"train.merge_factor", "1"},
        // data
        {"data.kind", "mnist_halves"},  // mnist_halves | synth_digits | synth_latent | bow_pair
        {"data.images", ""},
        {"data.labels", ""},
        {"data.test_images", ""},
        {"data.test_labels", ""},
        {"data.n_train", "50000"},
        {"data.split_seed", "999"},
        {"data.n", "60000"},
        {"data.n_test", "10000"},
        {"data.seed", "4242"},
        {"data.d1", "5"},
        {"data.d2", "5"},
        {"data.latent_dim", "3"},
        {"data.noise_sd", "1.0"},
        {"data.x_docs", ""},
        {"data.y_docs", ""},
        {"data.x_only_docs", ""},
        {"data.y_only_docs", ""},
        {"data.binary_views", "auto"},  // auto | true | false
        // evaluation
        {"eval.folds", "5"},
        {"eval.l2", "1e-4"},
        {"eval.seed", "777"},
        {"eval.dump_count", "10"},
        // baselines
        {"cca.ridge", "1e-4"},
        // grids
        {"ablate.masks", "L1;L1+L4;L2+L3;L2+L3+L4;L1+L2+L3;L1+L2+L3+L4;L5+L6;L5+L6+L4;L7+L8;L7+L8+L4"},
        {"sweep.dims", "5,10,20,35,50,65,80"},
        // output
        {"output.dir", "run"},
    };
    return kRegistry;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // Strip comments and whitespace.
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        auto end = line.find_last_not_of(" \t\r");
        line = line.substr(begin, end - begin + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) +
                              " is not key=value: '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto kend = key.find_last_not_of(" \t");
        key = key.substr(0, kend + 1);
        auto vbegin = val.find_first_not_of(" \t");
        val = vbegin == std::string::npos ? "" : val.substr(vbegin);
        cfg.set(key, val);
    }
    return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (!registry_defaults().count(key))
        throw ConfigError("config: unknown key '" + key + "'");
    values_[key] = value;
}

void ExperimentConfig::set_override(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("config: override must be key=value, got '" + assignment + "'");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

bool ExperimentConfig::has(const std::string& key) const {
    return values_.count(key) > 0 || registry_defaults().count(key) > 0;
}

std::string ExperimentConfig::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    auto rit = registry_defaults().find(key);
    if (rit == registry_defaults().end())
        throw ConfigError("config: unknown key '" + key + "'");
    return rit->second;
}

std::int64_t ExperimentConfig::get_int(const std::string& key) const {
    const std::string s = get_string(key);
    try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + s + "'");
    }
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
    const std::string s = get_string(key);
    try {
        std::size_t used = 0;
        std::uint64_t v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + s +
                          "'");
    }
}

double ExperimentConfig::get_double(const std::string& key) const {
    const std::string s = get_string(key);
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + s + "'");
    }
}

bool ExperimentConfig::get_bool(const std::string& key) const {
    const std::string s = get_string(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config: key '" + key + "' expects a boolean, got '" + s + "'");
}

std::string ExperimentConfig::resolved() const {
    std::ostringstream out;
    for (const auto& [key, def] : registry_defaults()) out << key << "=" << get_string(key) << "\n";
    return out.str();
}

void ExperimentConfig::write_resolved(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("config: cannot open '" + path + "' for writing");
    out << resolved();
}

}  // namespace crlkit
