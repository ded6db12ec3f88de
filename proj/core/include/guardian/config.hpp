#pragma once

#include <optional>
#include <string>
#include <vector>

#include "guardian/agreement.hpp"
#include "guardian/backends.hpp"
#include "guardian/case_model.hpp"
#include "guardian/consensus.hpp"
#include "guardian/zone_qa.hpp"

namespace guardian {

struct OrchestratorSettings {
  int concurrency_limit = 6;
  std::int64_t per_task_budget_ms = 60000;
  std::string out_root = "out";
  std::string cache_dir = "cache";
};

struct TemplateSettings {
  std::optional<std::string> dir;
  std::size_t char_budget = 12000;
};

/// One merged configuration document with sections [backends], [agreement],
/// [consensus], [orchestrator], [zone_qa], [templates]. Defaults mirror the
/// deployed topology: per role one Qwen server on port 8001 and one Llama
/// server on port 8002, plus a referee.
struct GuardianConfig {
  std::vector<BackendProfile> backends;  // task roles only
  BackendProfile referee;
  AgreementConfig agreement;
  std::optional<std::string> stopword_list_path;
  std::optional<std::string> cue_table_path;
  ConsensusConfig consensus;
  std::optional<std::string> synonym_table_path;
  OrchestratorSettings orchestrator;
  ZoneQaConfig zone_qa;
  TemplateSettings templates;
  std::optional<std::string> schema_path;

  /// Canonical serialization; its hash is the config digest.
  ojson to_json() const;
  std::string digest() const;
};

GuardianConfig default_config();

/// Loads a config file section-by-section over the defaults. Throws
/// std::runtime_error with a diagnostic on malformed content.
GuardianConfig load_config_file(const std::string& path);

ojson backend_profile_to_json(const BackendProfile& profile);
BackendProfile backend_profile_from_json(const ojson& doc, const BackendProfile& base);

}  // namespace guardian
