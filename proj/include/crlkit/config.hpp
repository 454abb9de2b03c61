#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace crlkit {

/// Flat key=value experiment configuration with dotted section prefixes
/// (model.k=50). Keys are validated against a fixed registry; unknown keys
/// are rejected so stale configs fail loudly. Precedence: command-line
/// overrides > file > registry default.
class ExperimentConfig {
  public:
    ExperimentConfig() = default;

    static ExperimentConfig from_file(const std::string& path);

    /// Applies a single "key=value" override (validated).
    void set_override(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;

    /// Every registry key with its effective value, one per line, sorted.
    std::string resolved() const;
    void write_resolved(const std::string& path) const;

    static const std::map<std::string, std::string>& registry_defaults();

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace crlkit
