#include "chaoslab/report.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "chaoslab/errors.hpp"

namespace chaoslab {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void ExperimentReport::set_param(const std::string& key, const std::string& value) {
    parameters.emplace_back(key, value);
}
void ExperimentReport::set_param(const std::string& key, double value) {
    parameters.emplace_back(key, format_double(value));
}
void ExperimentReport::set_param(const std::string& key, std::int64_t value) {
    parameters.emplace_back(key, std::to_string(value));
}
void ExperimentReport::add_exact(const std::string& key, double value) {
    exact.emplace_back(key, value);
}
void ExperimentReport::add_estimate(const std::string& key, Estimate e) {
    estimates.emplace_back(key, e);
}
void ExperimentReport::add_bound(const std::string& key, double value) {
    bounds.emplace_back(key, value);
}
void ExperimentReport::add_distance(const std::string& key, double value) {
    distances.emplace_back(key, value);
}
void ExperimentReport::add_flag(const std::string& key, bool pass) {
    pass_flags.emplace_back(key, pass);
}
void ExperimentReport::add_warning(const std::string& message) {
    warnings.push_back(message);
}

bool ExperimentReport::all_pass() const {
    for (const auto& [k, v] : pass_flags)
        if (!v) return false;
    return true;
}

std::string ExperimentReport::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["name"] = name;
    nlohmann::ordered_json jp = nlohmann::ordered_json::object();
    for (const auto& [k, v] : parameters) jp[k] = v;
    j["parameters"] = jp;
    nlohmann::ordered_json je = nlohmann::ordered_json::object();
    for (const auto& [k, v] : exact) je[k] = v;
    j["exact"] = je;
    nlohmann::ordered_json js = nlohmann::ordered_json::object();
    for (const auto& [k, v] : estimates)
        js[k] = nlohmann::ordered_json{{"value", v.value}, {"se", v.se}};
    j["estimates"] = js;
    nlohmann::ordered_json jb = nlohmann::ordered_json::object();
    for (const auto& [k, v] : bounds) jb[k] = v;
    j["bounds"] = jb;
    nlohmann::ordered_json jd = nlohmann::ordered_json::object();
    for (const auto& [k, v] : distances) jd[k] = v;
    j["distances"] = jd;
    nlohmann::ordered_json jf = nlohmann::ordered_json::object();
    for (const auto& [k, v] : pass_flags) jf[k] = v;
    j["pass_flags"] = jf;
    nlohmann::ordered_json jprov = nlohmann::ordered_json::object();
    jprov["seed"] = provenance.seed;
    jprov["generator_id"] = provenance.generator_id;
    jprov["threads"] = provenance.threads;
    if (!provenance.timestamp.empty()) jprov["timestamp"] = provenance.timestamp;
    j["provenance"] = jprov;
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

void ExperimentReport::write_json(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << to_json();
    if (!out) throw io_error("write failed: " + path);
}

void ExperimentReport::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out << ',';
        out << table.columns[c];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << format_double(row[c]);
        }
        out << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace chaoslab
