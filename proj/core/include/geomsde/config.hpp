#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace geomsde::config {

// Flat key-value text with dotted sections:
//   # comment
//   experiment = rate-one-step
//   manifold.kind = sphere
//   grid.T = 2^-6, 2^-5, 2^-4
// Values may be plain numbers, 2^k powers, or comma lists. Parse failures
// throw ConfigError with a line diagnostic.
class Config {
public:
    Config() = default;

    static Config parse_file(const std::string& path);
    static Config parse_text(const std::string& text, const std::string& origin = "<config>");

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

    // number token: plain double or p^q power form (e.g. 2^-6)
    static double parse_number(const std::string& token, const std::string& context);

private:
    std::map<std::string, std::string> values_;
};

} // namespace geomsde::config
