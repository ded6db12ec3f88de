#include "guardian/persistence.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace guardian {

void atomic_write(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());

  static std::atomic<std::uint64_t> counter{0};
  const fs::path temp =
      target.parent_path() /
      (target.filename().string() + ".tmp" + std::to_string(counter.fetch_add(1)));
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + temp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write: " + temp.string());
  }
  fs::rename(temp, target);
}

std::string artifact_filename(TaskKind task) {
  switch (task) {
    case TaskKind::summarize: return "summary.json";
    case TaskKind::extract: return "extraction.json";
    case TaskKind::weak_label: return "weak_labels.json";
    case TaskKind::zone_plausibility: return "zone_plausibility.json";
  }
  return "artifact.json";
}

std::string trace_filename(TaskKind task) { return "trace_" + task_slug(task) + ".json"; }

StoredPaths persist_result(const std::string& case_id, TaskKind task,
                           const ConsensusResult& result, const std::string& out_root) {
  const std::string dir = out_root + "/cases/" + case_id;
  StoredPaths paths;
  paths.artifact_path = dir + "/" + artifact_filename(task);
  paths.trace_path = dir + "/" + trace_filename(task);
  atomic_write(paths.artifact_path, artifact_to_json(result.canonical).dump(2) + "\n");
  atomic_write(paths.trace_path, trace_to_json(result.trace).dump(2) + "\n");
  return paths;
}

LoadReport load_results(const std::string& out_root, const ExtractionSchema& schema,
                        const std::optional<std::string>& case_filter,
                        const std::optional<TaskKind>& task_filter) {
  LoadReport report;
  const fs::path cases_dir = fs::path(out_root) / "cases";
  if (!fs::exists(out_root))
    throw std::runtime_error("output root does not exist: " + out_root);
  if (!fs::exists(cases_dir)) return report;

  std::vector<fs::path> case_dirs;
  for (const auto& entry : fs::directory_iterator(cases_dir))
    if (entry.is_directory()) case_dirs.push_back(entry.path());
  std::sort(case_dirs.begin(), case_dirs.end());

  static const TaskKind kTasks[] = {TaskKind::summarize, TaskKind::extract,
                                    TaskKind::weak_label, TaskKind::zone_plausibility};
  for (const auto& dir : case_dirs) {
    const std::string case_id = dir.filename().string();
    if (case_filter && *case_filter != case_id) continue;
    for (TaskKind task : kTasks) {
      if (task_filter && *task_filter != task) continue;
      const fs::path artifact_path = dir / artifact_filename(task);
      const fs::path trace_path = dir / trace_filename(task);
      if (!fs::exists(artifact_path) || !fs::exists(trace_path)) continue;
      try {
        std::ifstream artifact_in(artifact_path);
        std::ifstream trace_in(trace_path);
        const ojson artifact_doc = ojson::parse(artifact_in);
        const ojson trace_doc = ojson::parse(trace_in);
        LoadedResult loaded;
        loaded.case_id = case_id;
        loaded.task = task;
        loaded.result.trace = trace_from_json(trace_doc);
        loaded.result.canonical = artifact_from_json(task, artifact_doc, schema);
        report.results.push_back(std::move(loaded));
      } catch (const std::exception& e) {
        report.diagnostics.push_back(artifact_path.string() + ": " + e.what());
      }
    }
  }
  return report;
}

ojson RunManifest::to_json() const {
  ojson doc;
  doc["run_id"] = run_id;
  doc["started_ms"] = started_ms;
  doc["finished_ms"] = finished_ms;
  doc["config_digest"] = config_digest;
  ojson versions = ojson::object();
  for (const auto& [id, version] : template_versions) versions[id] = version;
  doc["template_versions"] = std::move(versions);
  doc["schema_version"] = schema_version;
  doc["case_count"] = case_count;
  ojson stages = ojson::object();
  for (const auto& [stage, counters] : per_stage) {
    ojson c;
    c["completed"] = counters.completed;
    c["fallbacks"] = counters.fallbacks;
    c["referee_calls"] = counters.referee_calls;
    c["repairs"] = counters.repairs;
    stages[stage] = std::move(c);
  }
  doc["per_stage"] = std::move(stages);
  doc["seed"] = seed;
  return doc;
}

RunManifest RunManifest::from_json(const ojson& doc) {
  RunManifest manifest;
  manifest.run_id = doc.at("run_id").get<std::string>();
  manifest.started_ms = doc.at("started_ms").get<std::int64_t>();
  manifest.finished_ms = doc.at("finished_ms").get<std::int64_t>();
  manifest.config_digest = doc.at("config_digest").get<std::string>();
  for (const auto& [id, version] : doc.at("template_versions").items())
    manifest.template_versions[id] = version.get<std::string>();
  manifest.schema_version = doc.at("schema_version").get<std::string>();
  manifest.case_count = doc.at("case_count").get<std::int64_t>();
  for (const auto& [stage, counters] : doc.at("per_stage").items()) {
    StageCounters c;
    c.completed = counters.at("completed").get<std::int64_t>();
    c.fallbacks = counters.at("fallbacks").get<std::int64_t>();
    c.referee_calls = counters.at("referee_calls").get<std::int64_t>();
    c.repairs = counters.at("repairs").get<std::int64_t>();
    manifest.per_stage[stage] = c;
  }
  manifest.seed = doc.at("seed").get<std::uint64_t>();
  return manifest;
}

void save_manifest(const RunManifest& manifest, const std::string& out_root) {
  atomic_write(out_root + "/run_manifest.json", manifest.to_json().dump(2) + "\n");
}

std::optional<RunManifest> load_manifest(const std::string& out_root) {
  std::ifstream in(out_root + "/run_manifest.json");
  if (!in) return std::nullopt;
  return RunManifest::from_json(ojson::parse(in));
}

}  // namespace guardian
