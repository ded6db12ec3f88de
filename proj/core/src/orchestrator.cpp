#include "guardian/orchestrator.hpp"

#include <algorithm>

#include "guardian/text.hpp"

namespace guardian {

BackendRole role_for_task(TaskKind task) {
  switch (task) {
    case TaskKind::summarize: return BackendRole::summarizer;
    case TaskKind::extract: return BackendRole::extractor;
    case TaskKind::weak_label: return BackendRole::weak_labeler;
    case TaskKind::zone_plausibility: return BackendRole::weak_labeler;
  }
  return BackendRole::extractor;
}

Orchestrator::Orchestrator(const PromptLibrary* prompts, ExtractionSchema schema,
                           OrchestratorConfig config, std::shared_ptr<Clock> clock)
    : prompts_(prompts),
      schema_(std::move(schema)),
      config_(std::move(config)),
      clock_(std::move(clock)),
      engine_(prompts_, schema_, config_.consensus, clock_,
              [this](const BackendHandle& handle, const ChatRequest& request,
                     const DeadlineBudget& deadline, const CallTag& tag) {
                if (call_pool_) {
                  auto future = call_pool_->submit(
                      [&] { return complete(handle, request, deadline, tag); });
                  return await(*clock_, future);
                }
                return complete(handle, request, deadline, tag);
              }) {}

std::string Orchestrator::backend_set_digest(
    const std::vector<BackendHandle>& role_backends, const BackendHandle* referee) const {
  std::string joined;
  for (const auto& handle : role_backends) {
    joined += handle.profile.backend_id + "/" + handle.profile.model_name + "/" +
              (handle.profile.kind == BackendKind::http ? "http" : "scripted") + ";";
  }
  if (referee) joined += "referee=" + referee->profile.backend_id;
  return text::sha256_hex(joined);
}

NormalizedCandidate Orchestrator::normalize_response(TaskKind task,
                                                     const BackendResponse& response,
                                                     const BackendHandle* referee,
                                                     const DeadlineBudget& deadline,
                                                     const std::string& case_id) const {
  NormalizedCandidate candidate;
  candidate.backend_id = response.backend_id;

  if (!response.ok()) {
    candidate.artifact = empty_artifact(task, schema_);
    candidate.parse_path = {kStepDefaulted};
    candidate.valid = false;
    candidate.notes.push_back("discarded:" + outcome_name(response.outcome));
    return candidate;
  }

  const std::string processed = postprocess(task, response.raw_text);
  if (task == TaskKind::summarize) {
    if (text::trim(processed).empty()) {
      candidate.artifact = empty_artifact(task, schema_);
      candidate.valid = false;
      candidate.notes.push_back("empty response");
      return candidate;
    }
    candidate = normalize_summary(processed, response.backend_id);
    return candidate;
  }

  if (text::trim(processed).empty()) {
    candidate.artifact = empty_artifact(task, schema_);
    candidate.parse_path = {kStepDefaulted};
    candidate.valid = false;
    candidate.notes.push_back("empty response");
    return candidate;
  }

  const RecoverOutcome recovered = recover_json(processed);
  if (!recovered.ok()) {
    if (task == TaskKind::extract)
      return engine_.repair_candidate(response, referee, deadline, case_id);
    candidate.artifact = empty_artifact(task, schema_);
    candidate.parse_path = recovered.parse_path;
    candidate.parse_path.push_back(kStepDefaulted);
    candidate.valid = false;
    candidate.notes.push_back("unparseable response");
    return candidate;
  }

  candidate.parse_path = recovered.parse_path;
  if (task == TaskKind::extract) {
    CoercionOutcome coerced = coerce_extraction(*recovered.doc, schema_);
    candidate.artifact = std::move(coerced.artifact);
    candidate.notes = std::move(coerced.notes);
  } else {
    WeakLabelOutcome normalized = normalize_weak_label(*recovered.doc, engine_.synonyms());
    candidate.artifact = std::move(normalized.artifact);
    candidate.notes = std::move(normalized.notes);
  }
  candidate.valid = validate_artifact(candidate.artifact, schema_).pass;
  return candidate;
}

ConsensusResult Orchestrator::run_task(const CaseRecord& rec, TaskKind task,
                                       const std::vector<BackendHandle>& role_backends,
                                       const BackendHandle* referee,
                                       DeadlineBudget budget, ResultCache& cache,
                                       bool force, std::uint64_t seed) {
  CacheKey key;
  key.case_id = rec.case_id;
  key.task = task;
  key.schema_version = schema_.schema_version;
  key.template_versions_digest = digest_template_versions(prompts_->versions());
  key.backend_set_digest = backend_set_digest(role_backends, referee);
  const std::string digest = key.digest();

  if (!force) {
    if (auto bytes = cache.get(digest)) {
      ojson doc = ojson::parse(*bytes, nullptr, false);
      if (!doc.is_discarded()) {
        ConsensusResult cached = result_from_json(doc, schema_);
        // Keep the output tree complete even when the hit serves a fresh
        // out_root; rewriting identical content is byte-idempotent.
        persist_result(rec.case_id, task, cached, config_.out_root);
        std::lock_guard<std::mutex> lock(manifest_mu_);
        StageCounters& counters = manifest_.per_stage[task_slug(task)];
        counters.completed += 1;
        if (cached.trace.fallback_reason != FallbackReason::none)
          counters.fallbacks += 1;
        if (cached.trace.referee_called) counters.referee_calls += 1;
        if (!cached.trace.repaired_fields.empty()) counters.repairs += 1;
        return cached;
      }
    }
  }

  // Generation: one render shared by every role backend, concurrent dispatch.
  const std::int64_t generation_start = clock_->now_ms();
  const ChatRequest request = prompts_->render_task_prompt(task, rec, schema_);
  const CallTag tag{role_name(role_for_task(task)), rec.case_id, "task"};

  std::vector<BackendResponse> responses(role_backends.size());
  if (call_pool_) {
    std::vector<std::future<BackendResponse>> futures;
    futures.reserve(role_backends.size());
    for (const auto& handle : role_backends) {
      BackendHandle seeded = handle;
      seeded.run_seed = seed;
      futures.push_back(call_pool_->submit([seeded, request, budget, tag] {
        return complete(seeded, request, budget, tag);
      }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i)
      responses[i] = await(*clock_, futures[i]);
  } else {
    for (std::size_t i = 0; i < role_backends.size(); ++i) {
      BackendHandle seeded = role_backends[i];
      seeded.run_seed = seed;
      responses[i] = complete(seeded, request, budget, tag);
    }
  }
  const std::int64_t generation_ms = clock_->now_ms() - generation_start;

  // Normalization (with repair escalation where the ladder failed).
  const std::int64_t normalize_start = clock_->now_ms();
  std::vector<NormalizedCandidate> candidates;
  candidates.reserve(responses.size());
  for (const auto& response : responses)
    candidates.push_back(normalize_response(task, response, referee, budget, rec.case_id));
  const std::int64_t normalize_ms = clock_->now_ms() - normalize_start;

  std::vector<std::string> priority_order;
  for (const auto& handle : role_backends)
    priority_order.push_back(handle.profile.backend_id);

  ConsensusResult result =
      engine_.run_consensus(task, rec, candidates, referee, budget, priority_order);

  // Validation backstop: consensus guarantees validity; a failure here means
  // a defaulted artifact plus a loud note.
  if (!validate_artifact(result.canonical, schema_).pass) {
    result.canonical = empty_artifact(task, schema_);
    result.trace.notes.push_back("post-consensus validation failed; defaulted");
  }

  std::vector<std::pair<std::string, std::int64_t>> timing;
  timing.emplace_back("generation", generation_ms);
  timing.emplace_back("normalize", normalize_ms);
  for (auto& entry : result.trace.timing_ms) timing.push_back(std::move(entry));
  result.trace.timing_ms = std::move(timing);

  persist_result(rec.case_id, task, result, config_.out_root);
  // Cache after persistence so an entry never exists without its artifact;
  // the cached bytes mirror the persisted content exactly.
  cache.put(digest, result_to_json(result).dump(2) + "\n");

  {
    std::lock_guard<std::mutex> lock(manifest_mu_);
    StageCounters& counters = manifest_.per_stage[task_slug(task)];
    counters.completed += 1;
    if (result.trace.fallback_reason != FallbackReason::none) counters.fallbacks += 1;
    if (result.trace.referee_called) counters.referee_calls += 1;
    if (!result.trace.repaired_fields.empty()) counters.repairs += 1;
  }
  return result;
}

RunResults Orchestrator::run_corpus(const std::vector<CaseRecord>& cases,
                                    const RunPlan& plan, const RoleBackends& backends,
                                    const BackendHandle* referee) {
  ScopedWork main_work(*clock_);
  call_pool_ = std::make_unique<WorkerPool>(plan.concurrency_limit, clock_);
  ResultCache cache(config_.cache_dir);

  manifest_ = RunManifest{};
  manifest_.run_id = "run-" + text::sha256_hex(config_.config_digest + ":" +
                                               std::to_string(plan.seed))
                                  .substr(0, 12);
  manifest_.started_ms = clock_->now_ms();
  manifest_.config_digest = config_.config_digest;
  manifest_.template_versions = prompts_->versions();
  manifest_.schema_version = schema_.schema_version;
  manifest_.case_count = static_cast<std::int64_t>(cases.size());
  manifest_.seed = plan.seed;

  RunResults results;
  std::mutex results_mu_;
  std::vector<std::string> failures;

  auto run_one = [&](const CaseRecord& rec, TaskKind stage) {
    const BackendRole role = role_for_task(stage);
    auto it = backends.find(role);
    if (it == backends.end() || it->second.empty())
      throw std::runtime_error("no backends for role " + role_name(role));
    ConsensusResult result =
        run_task(rec, stage, it->second, referee,
                 DeadlineBudget(clock_, plan.per_task_budget_ms), cache, plan.force,
                 plan.seed);
    std::lock_guard<std::mutex> lock(results_mu_);
    results[rec.case_id][stage] = std::move(result);
  };

  if (plan.mode == RunMode::stage_by_stage) {
    WorkerPool job_pool(std::min<int>(plan.concurrency_limit,
                                      static_cast<int>(cases.size())),
                        clock_);
    for (TaskKind stage : plan.stages) {
      std::vector<std::future<void>> futures;
      futures.reserve(cases.size());
      for (std::size_t i = 0; i < cases.size(); ++i) {
        futures.push_back(job_pool.submit([&, i, stage] { run_one(cases[i], stage); }));
      }
      for (auto& future : futures) {
        try {
          await(*clock_, future);
        } catch (const std::exception& e) {
          // Per-case isolation: a failed case never aborts the run.
          std::lock_guard<std::mutex> lock(results_mu_);
          failures.emplace_back(e.what());
        }
      }
    }
  } else {
    for (const auto& rec : cases) {
      for (TaskKind stage : plan.stages) {
        try {
          run_one(rec, stage);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(results_mu_);
          failures.emplace_back(e.what());
        }
      }
    }
  }

  manifest_.finished_ms = clock_->now_ms();
  save_manifest(manifest_, config_.out_root);
  call_pool_.reset();
  last_diagnostics_ = std::move(failures);
  return results;
}

Orchestrator::ZoneRunOutcome Orchestrator::run_zone_corpus(
    const std::vector<CaseRecord>& cases, const RunPlan& plan,
    const RoleBackends& backends, const BackendHandle* referee,
    const std::optional<std::map<std::string, double>>& rl_scores,
    const ZoneQaConfig& zone_config) {
  ScopedWork main_work(*clock_);
  call_pool_ = std::make_unique<WorkerPool>(plan.concurrency_limit, clock_);
  ResultCache cache(config_.cache_dir);

  manifest_ = RunManifest{};
  manifest_.run_id = "zoneqa-" + text::sha256_hex(config_.config_digest + ":" +
                                                  std::to_string(plan.seed))
                                     .substr(0, 12);
  manifest_.started_ms = clock_->now_ms();
  manifest_.config_digest = config_.config_digest;
  manifest_.template_versions = prompts_->versions();
  manifest_.schema_version = schema_.schema_version;
  manifest_.case_count = static_cast<std::int64_t>(cases.size());
  manifest_.seed = plan.seed;

  auto it = backends.find(BackendRole::weak_labeler);
  if (it == backends.end() || it->second.empty())
    throw std::runtime_error("zone QA needs weak_labeler backends");
  const std::vector<BackendHandle>& labeler_backends = it->second;

  ZoneLabeler labeler = [&](const CaseRecord& pseudo) -> std::optional<WeakLabelArtifact> {
    ConsensusResult result =
        run_task(pseudo, TaskKind::zone_plausibility, labeler_backends, referee,
                 DeadlineBudget(clock_, plan.per_task_budget_ms), cache, plan.force,
                 plan.seed);
    if (result.trace.fallback_reason == FallbackReason::all_invalid) return std::nullopt;
    if (const auto* label = std::get_if<WeakLabelArtifact>(&result.canonical))
      return *label;
    return std::nullopt;
  };

  ZoneRunOutcome outcome;
  for (const auto& rec : cases) {
    if (rec.zones.empty()) {
      outcome.skipped_cases.push_back(rec.case_id);
      continue;
    }
    std::vector<ZoneAssessment> assessments =
        assess_zones(rec, labeler, rl_scores, zone_config);
    ojson zones_doc = ojson::array();
    for (std::size_t i = 0; i < rec.zones.size(); ++i)
      zones_doc.push_back(zone_assessment_to_json(rec.zones[i], assessments[i]));
    atomic_write(config_.out_root + "/cases/" + rec.case_id + "/zones.json",
                 zones_doc.dump(2) + "\n");
    outcome.assessments[rec.case_id] = std::move(assessments);
  }

  manifest_.finished_ms = clock_->now_ms();
  save_manifest(manifest_, config_.out_root);
  call_pool_.reset();
  return outcome;
}

}  // namespace guardian
