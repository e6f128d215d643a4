#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nonharmonic/cli/config.hpp"
#include "nonharmonic/cli/io.hpp"
#include "nonharmonic/cli/tasks.hpp"

#ifndef NONHARMONIC_VERSION
#define NONHARMONIC_VERSION "0.0.0"
#endif

namespace nonharmonic::cli {

enum ExitCode : int { kPass = 0, kAssertionFailure = 1, kInvalidConfig = 2, kNumericalError = 3 };

struct RunOptions {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
};

inline std::string config_digest(const ExperimentConfig& c) { return sha256_hex(c.canonical().dump()); }

/// Writes <out>/<task>.csv and <out>/summary.json, appends to <out>/registry.jsonl.
inline int run(const RunOptions& opt, std::ostream& log = std::cerr) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(opt.config_path);
        if (opt.out_dir) cfg.output_dir = *opt.out_dir;
        if (opt.seed) cfg.seed = *opt.seed;
    } catch (const Error& e) {
        log << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    }

    const std::filesystem::path out = cfg.output_dir;
    const std::string digest = config_digest(cfg);
    json summary = {{"task", cfg.task}, {"config_digest", digest}, {"tool_version", NONHARMONIC_VERSION}};
    int code = kPass;
    std::vector<std::string> csv;
    try {
        const TaskResult r = run_task(cfg);
        const std::filesystem::path path = out / (cfg.task + ".csv");
        write_file(path, r.table.to_csv());
        csv.push_back(path.string());
        summary["result"] = r.summary;
        code = r.pass ? kPass : kAssertionFailure;
    } catch (const ConfigError& e) {
        log << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const UsageError& e) {
        log << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const NumericalError& e) {
        log << "numerical error: " << e.what() << '\n';
        summary["error"] = e.what();
        code = kNumericalError;
    }
    summary["pass"] = code == kPass;
    summary["exit_code"] = code;
    summary["csv"] = csv;
    write_file(out / "summary.json", summary.dump(2) + "\n");

    RunRecord rec;
    rec.config_digest = digest;
    rec.timestamp = utc_timestamp();
    rec.run_id = sha256_hex(digest + rec.timestamp).substr(0, 16);
    rec.tool_version = NONHARMONIC_VERSION;
    rec.task = cfg.task;
    rec.csv_paths = csv;
    rec.pass = code == kPass;
    rec.exit_code = code;
    append_record(out / "registry.jsonl", rec);
    log << cfg.task << ": " << (code == kPass ? "PASS" : "FAIL") << " (exit " << code << ", run " << rec.run_id
        << ")\n";
    return code;
}

/// Prints the registry as CSV. Returns 2 if the registry is missing or every
/// entry is corrupt.
inline int report(const std::string& registry, std::ostream& out, std::ostream& log = std::cerr) {
    std::ifstream in(registry);
    if (!in) {
        log << "cannot open registry '" << registry << "'\n";
        return kInvalidConfig;
    }
    const RegistryReport rep = read_registry(in, log);
    out << rep.table.to_csv();
    if (rep.total > 0 && rep.corrupt == rep.total) return kInvalidConfig;
    return kPass;
}

}  // namespace nonharmonic::cli
