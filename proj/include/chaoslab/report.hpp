#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chaoslab/stats.hpp"

namespace chaoslab {

// Shortest exact decimal form used everywhere a double is written to text
// output; paired with the fixed reduction order this makes files byte-stable.
std::string format_double(double x);

struct Provenance {
    std::uint64_t seed = 0;
    std::string generator_id;
    unsigned threads = 1;
    std::string timestamp;  // RFC 3339; empty string = omitted from output
};

// Per-replicate (or per-configuration) numeric table attached to a report.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Uniform result container produced by every experiment driver.  Insertion
// order is preserved so serialized output is reproducible.
struct ExperimentReport {
    std::string name;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<std::pair<std::string, double>> exact;
    std::vector<std::pair<std::string, Estimate>> estimates;
    std::vector<std::pair<std::string, double>> bounds;
    std::vector<std::pair<std::string, double>> distances;
    std::vector<std::pair<std::string, bool>> pass_flags;
    std::vector<std::string> warnings;
    Provenance provenance;
    Table table;

    void set_param(const std::string& key, const std::string& value);
    void set_param(const std::string& key, double value);
    void set_param(const std::string& key, std::int64_t value);
    void add_exact(const std::string& key, double value);
    void add_estimate(const std::string& key, Estimate e);
    void add_bound(const std::string& key, double value);
    void add_distance(const std::string& key, double value);
    void add_flag(const std::string& key, bool pass);
    void add_warning(const std::string& message);

    bool all_pass() const;

    std::string to_json() const;
    void write_json(const std::string& path) const;
    void write_csv(const std::string& path) const;
};

}  // namespace chaoslab
