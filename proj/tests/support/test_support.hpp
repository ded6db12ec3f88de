#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "guardian/agreement.hpp"
#include "guardian/case_model.hpp"
#include "guardian/normalize.hpp"
#include "guardian/scripted_backend.hpp"
#include "guardian/text.hpp"

namespace guardian::testing {

/// Unique scratch directory under the system temp root, removed on
/// destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<std::uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("guardian_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string sub(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline CaseRecord make_case(const std::string& case_id, const std::string& narrative) {
  CaseRecord rec;
  rec.case_id = case_id;
  rec.narrative = narrative;
  return rec;
}

inline NormalizedCandidate weak_label_candidate(const std::string& backend_id,
                                                Movement movement, Risk risk,
                                                double confidence = 0.7) {
  NormalizedCandidate candidate;
  candidate.backend_id = backend_id;
  WeakLabelArtifact label;
  label.movement = movement;
  label.risk = risk;
  label.confidence = confidence;
  candidate.artifact = label;
  candidate.parse_path = {kStepDirect};
  candidate.valid = true;
  return candidate;
}

inline NormalizedCandidate extraction_candidate(const std::string& backend_id,
                                                const ojson& values,
                                                const ExtractionSchema& schema) {
  NormalizedCandidate candidate;
  candidate.backend_id = backend_id;
  CoercionOutcome coerced = coerce_extraction(values, schema);
  candidate.artifact = std::move(coerced.artifact);
  candidate.notes = std::move(coerced.notes);
  candidate.parse_path = {kStepDirect};
  candidate.valid = validate_artifact(candidate.artifact, schema).pass;
  return candidate;
}

inline NormalizedCandidate summary_candidate(const std::string& backend_id,
                                             const std::vector<std::string>& bullets) {
  NormalizedCandidate candidate = normalize_summary(text::join(bullets, "\n"), backend_id);
  return candidate;
}

inline BackendProfile scripted_profile(const std::string& backend_id, BackendRole role) {
  BackendProfile profile;
  profile.backend_id = backend_id;
  profile.role = role;
  profile.kind = BackendKind::scripted;
  profile.model_name = "scripted-model";
  return profile;
}

/// Scripted backend whose table is built from {key -> directives} pairs.
inline BackendHandle scripted_handle(
    const std::string& backend_id, BackendRole role,
    const std::map<std::string, std::vector<Directive>>& entries,
    std::shared_ptr<Clock> clock, std::uint64_t seed = 0) {
  ScriptTable table;
  table.entries = entries;
  return scripted_backend(scripted_profile(backend_id, role), std::move(table),
                          std::move(clock), seed);
}

inline Directive text_directive(const std::string& body) {
  Directive d;
  d.kind = Directive::Kind::text;
  d.text = body;
  return d;
}

inline Directive fault_directive(Directive::Kind kind) {
  Directive d;
  d.kind = kind;
  return d;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace guardian::testing
