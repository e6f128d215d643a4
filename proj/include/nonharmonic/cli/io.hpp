#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "nonharmonic/error.hpp"

namespace nonharmonic::cli {

using json = nlohmann::json;

// ---------------------------------------------------------------- CSV

using Cell = std::variant<double, long long, std::string>;

/// Doubles are written with 17 significant digits.
inline std::string format_cell(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *d);
        return buf;
    }
    if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != header.size()) throw UsageError("CSV row width does not match header");
        rows.push_back(std::move(row));
    }

    std::string to_csv() const {
        std::string out;
        for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
        out += '\n';
        for (const auto& r : rows) {
            for (std::size_t k = 0; k < r.size(); ++k) out += (k ? "," : "") + format_cell(r[k]);
            out += '\n';
        }
        return out;
    }
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << text;
}

// ---------------------------------------------------------------- digest

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += hex[md[k] >> 4];
        out += hex[md[k] & 15];
    }
    return out;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(now.time_since_epoch()).count() % 1000000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%06lldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<long long>(us));
    return buf;
}

// ---------------------------------------------------------------- registry

struct RunRecord {
    std::string run_id;
    std::string config_digest;
    std::string timestamp;
    std::string tool_version;
    std::string task;
    std::vector<std::string> csv_paths;
    bool pass = false;
    int exit_code = 0;

    json to_json() const {
        return {{"run_id", run_id},   {"config_digest", config_digest}, {"timestamp", timestamp},
                {"tool_version", tool_version}, {"task", task}, {"csv", csv_paths},
                {"pass", pass},       {"exit_code", exit_code}};
    }

    static RunRecord from_json(const json& j) {
        RunRecord r;
        r.run_id = j.at("run_id").get<std::string>();
        r.config_digest = j.at("config_digest").get<std::string>();
        r.timestamp = j.at("timestamp").get<std::string>();
        r.tool_version = j.at("tool_version").get<std::string>();
        r.task = j.at("task").get<std::string>();
        r.csv_paths = j.at("csv").get<std::vector<std::string>>();
        r.pass = j.at("pass").get<bool>();
        r.exit_code = j.at("exit_code").get<int>();
        return r;
    }
};

/// One JSON object per line; existing lines are never rewritten.
inline void append_record(const std::filesystem::path& registry, const RunRecord& r) {
    if (registry.has_parent_path()) std::filesystem::create_directories(registry.parent_path());
    std::ofstream out(registry, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to registry '" + registry.string() + "'");
    out << r.to_json().dump() << '\n';
}

struct RegistryReport {
    Table table;
    int corrupt = 0;
    int total = 0;
};

inline Table report_table() {
    return {{"run_id", "timestamp", "config_digest", "tool_version", "task", "pass", "exit_code", "csv_paths"}, {}};
}

/// Rows in file order; corrupt lines are counted and skipped.
inline RegistryReport read_registry(std::istream& in, std::ostream& warn) {
    RegistryReport rep{report_table(), 0, 0};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ++rep.total;
        try {
            const RunRecord r = RunRecord::from_json(json::parse(line));
            std::string paths;
            for (std::size_t k = 0; k < r.csv_paths.size(); ++k) paths += (k ? ";" : "") + r.csv_paths[k];
            rep.table.add({r.run_id, r.timestamp, r.config_digest, r.tool_version, r.task,
                           std::string(r.pass ? "true" : "false"), static_cast<long long>(r.exit_code), paths});
        } catch (const json::exception& e) {
            ++rep.corrupt;
            warn << "warning: skipping corrupt registry line " << lineno << ": " << e.what() << '\n';
        }
    }
    return rep;
}

}  // namespace nonharmonic::cli
