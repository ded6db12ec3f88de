#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "guardian/backends.hpp"
#include "guardian/cache.hpp"
#include "guardian/case_model.hpp"
#include "guardian/consensus.hpp"
#include "guardian/executor.hpp"
#include "guardian/persistence.hpp"
#include "guardian/prompts.hpp"
#include "guardian/zone_qa.hpp"

namespace guardian {

enum class RunMode { stage_by_stage, case_by_case };

struct RunPlan {
  RunMode mode = RunMode::stage_by_stage;
  std::vector<TaskKind> stages = {TaskKind::summarize, TaskKind::extract,
                                  TaskKind::weak_label};
  int concurrency_limit = 6;
  std::int64_t per_task_budget_ms = 60000;
  bool force = false;
  std::uint64_t seed = 0;
};

/// Backends per role (the referee is passed separately).
using RoleBackends = std::map<BackendRole, std::vector<BackendHandle>>;

using RunResults = std::map<std::string, std::map<TaskKind, ConsensusResult>>;

struct OrchestratorConfig {
  ConsensusConfig consensus;
  std::string out_root = "out";
  std::string cache_dir = "cache";
  std::string config_digest;  // echoed into the manifest
};

BackendRole role_for_task(TaskKind task);

/// Pipeline coordinator. Owns all concurrency: backend calls run on a pool
/// bounded by the plan's concurrency_limit; normalization, consensus,
/// validation, and persistence for one (case, task) run sequentially after
/// its candidates resolve. The pipeline order is fixed: generation ->
/// normalization -> consensus -> validation -> persistence -> cache.
class Orchestrator {
 public:
  Orchestrator(const PromptLibrary* prompts, ExtractionSchema schema,
               OrchestratorConfig config, std::shared_ptr<Clock> clock);

  /// Stage-by-stage: all cases through each stage before the next stage.
  /// Case-by-case: each case through all stages before the next case.
  /// Results are identical between modes for the same inputs and seed.
  RunResults run_corpus(const std::vector<CaseRecord>& cases, const RunPlan& plan,
                        const RoleBackends& backends, const BackendHandle* referee);

  /// One (case, task): cache check unless force, one prompt render shared by
  /// all role backends, concurrent dispatch within the budget, normalization,
  /// consensus on the remaining budget, validation, persistence, cache store.
  ConsensusResult run_task(const CaseRecord& rec, TaskKind task,
                           const std::vector<BackendHandle>& role_backends,
                           const BackendHandle* referee, DeadlineBudget budget,
                           ResultCache& cache, bool force, std::uint64_t seed);

  struct ZoneRunOutcome {
    std::map<std::string, std::vector<ZoneAssessment>> assessments;  // by case
    std::vector<std::string> skipped_cases;  // cases without zones
  };

  /// Zone QA over every zoned case: each zone's description is labeled
  /// through the weak-label consensus pipeline, priorities are recomputed,
  /// and out/cases/<case_id>/zones.json is written. Cases without zones are
  /// skipped with a note.
  ZoneRunOutcome run_zone_corpus(const std::vector<CaseRecord>& cases,
                                 const RunPlan& plan, const RoleBackends& backends,
                                 const BackendHandle* referee,
                                 const std::optional<std::map<std::string, double>>& rl_scores,
                                 const ZoneQaConfig& zone_config);

  const RunManifest& last_manifest() const { return manifest_; }
  const std::vector<std::string>& last_diagnostics() const { return last_diagnostics_; }
  ConsensusEngine& engine() { return engine_; }
  const ConsensusEngine& engine() const { return engine_; }
  std::shared_ptr<Clock> clock() const { return clock_; }
  const OrchestratorConfig& config() const { return config_; }

 private:
  NormalizedCandidate normalize_response(TaskKind task, const BackendResponse& response,
                                         const BackendHandle* referee,
                                         const DeadlineBudget& deadline,
                                         const std::string& case_id) const;
  std::string backend_set_digest(const std::vector<BackendHandle>& role_backends,
                                 const BackendHandle* referee) const;

  const PromptLibrary* prompts_;
  ExtractionSchema schema_;
  OrchestratorConfig config_;
  std::shared_ptr<Clock> clock_;
  ConsensusEngine engine_;
  std::unique_ptr<WorkerPool> call_pool_;  // live during run_corpus
  RunManifest manifest_;
  std::mutex manifest_mu_;
  std::vector<std::string> last_diagnostics_;

  friend class ZoneQaRunner;
};

}  // namespace guardian
