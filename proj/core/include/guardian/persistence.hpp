#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "guardian/consensus.hpp"

namespace guardian {

/// Atomic write: temp file in the target directory, then rename. Creates
/// parent directories. Rewriting identical content is byte-idempotent.
void atomic_write(const std::string& path, const std::string& content);

std::string artifact_filename(TaskKind task);
std::string trace_filename(TaskKind task);

struct StoredPaths {
  std::string artifact_path;
  std::string trace_path;
};

/// Writes out/cases/<case_id>/{<artifact>.json, trace_<task>.json} with
/// stable key ordering. result.canonical must validate.
StoredPaths persist_result(const std::string& case_id, TaskKind task,
                           const ConsensusResult& result, const std::string& out_root);

struct LoadedResult {
  std::string case_id;
  TaskKind task = TaskKind::summarize;
  ConsensusResult result;
};

struct LoadReport {
  std::vector<LoadedResult> results;
  std::vector<std::string> diagnostics;  // corrupt files, reported not fatal
};

/// Loads every persisted result under out_root, optionally filtered by case
/// and/or task. Throws on an unreadable root; corrupt files become
/// diagnostics.
LoadReport load_results(const std::string& out_root,
                        const ExtractionSchema& schema,
                        const std::optional<std::string>& case_filter = std::nullopt,
                        const std::optional<TaskKind>& task_filter = std::nullopt);

struct StageCounters {
  std::int64_t completed = 0;
  std::int64_t fallbacks = 0;
  std::int64_t referee_calls = 0;
  std::int64_t repairs = 0;
};

struct RunManifest {
  std::string run_id;
  std::int64_t started_ms = 0;
  std::int64_t finished_ms = 0;
  std::string config_digest;
  std::map<std::string, std::string> template_versions;
  std::string schema_version;
  std::int64_t case_count = 0;
  std::map<std::string, StageCounters> per_stage;
  std::uint64_t seed = 0;

  ojson to_json() const;
  static RunManifest from_json(const ojson& doc);
};

void save_manifest(const RunManifest& manifest, const std::string& out_root);
std::optional<RunManifest> load_manifest(const std::string& out_root);

}  // namespace guardian
