#include "guardian/consensus.hpp"

#include <algorithm>

#include "guardian/text.hpp"

namespace guardian {

std::string fallback_reason_name(FallbackReason reason) {
  switch (reason) {
    case FallbackReason::none: return "none";
    case FallbackReason::deadline_exceeded: return "deadline_exceeded";
    case FallbackReason::referee_failed: return "referee_failed";
    case FallbackReason::all_invalid: return "all_invalid";
  }
  return "none";
}

FallbackReason fallback_reason_from_name(const std::string& name) {
  if (name == "deadline_exceeded") return FallbackReason::deadline_exceeded;
  if (name == "referee_failed") return FallbackReason::referee_failed;
  if (name == "all_invalid") return FallbackReason::all_invalid;
  return FallbackReason::none;
}

// ---------------------------------------------------------------------------
// Serialization

ojson agreement_to_json(const AgreementReport& report) {
  ojson doc;
  ojson per_field = ojson::object();
  for (const auto& [name, score] : report.per_field) per_field[name] = score;
  doc["per_field"] = std::move(per_field);
  doc["overall"] = report.overall;
  doc["passed"] = report.passed;
  doc["threshold_used"] = report.threshold_used;
  doc["contested_fields"] = report.contested_fields;
  return doc;
}

AgreementReport agreement_from_json(const ojson& doc) {
  AgreementReport report;
  for (const auto& [name, score] : doc.at("per_field").items())
    report.per_field.emplace_back(name, score.get<double>());
  report.overall = doc.at("overall").get<double>();
  report.passed = doc.at("passed").get<bool>();
  report.threshold_used = doc.at("threshold_used").get<double>();
  report.contested_fields =
      doc.at("contested_fields").get<std::vector<std::string>>();
  return report;
}

ojson trace_to_json(const ConsensusTrace& trace) {
  ojson doc;
  doc["task"] = task_slug(trace.task);
  doc["case_id"] = trace.case_id;
  doc["candidate_ids"] = trace.candidate_ids;
  doc["agreement"] = agreement_to_json(trace.agreement);
  doc["referee_called"] = trace.referee_called;
  if (trace.referee_called)
    doc["referee_backend"] = trace.referee_backend;
  else
    doc["referee_backend"] = nullptr;
  doc["repaired_fields"] = trace.repaired_fields;
  doc["reverted_fields"] = trace.reverted_fields;
  if (trace.fallback_reason == FallbackReason::none)
    doc["fallback_reason"] = nullptr;
  else
    doc["fallback_reason"] = fallback_reason_name(trace.fallback_reason);
  ojson versions = ojson::object();
  for (const auto& [id, version] : trace.template_versions) versions[id] = version;
  doc["template_versions"] = std::move(versions);
  ojson timing = ojson::object();
  for (const auto& [phase, ms] : trace.timing_ms) timing[phase] = ms;
  doc["timing_ms"] = std::move(timing);
  doc["notes"] = trace.notes;
  return doc;
}

ConsensusTrace trace_from_json(const ojson& doc) {
  ConsensusTrace trace;
  trace.task = task_from_slug(doc.at("task").get<std::string>())
                   .value_or(TaskKind::summarize);
  trace.case_id = doc.at("case_id").get<std::string>();
  trace.candidate_ids = doc.at("candidate_ids").get<std::vector<std::string>>();
  trace.agreement = agreement_from_json(doc.at("agreement"));
  trace.referee_called = doc.at("referee_called").get<bool>();
  if (!doc.at("referee_backend").is_null())
    trace.referee_backend = doc.at("referee_backend").get<std::string>();
  trace.repaired_fields = doc.at("repaired_fields").get<std::vector<std::string>>();
  trace.reverted_fields = doc.at("reverted_fields").get<std::vector<std::string>>();
  if (!doc.at("fallback_reason").is_null())
    trace.fallback_reason =
        fallback_reason_from_name(doc.at("fallback_reason").get<std::string>());
  for (const auto& [id, version] : doc.at("template_versions").items())
    trace.template_versions[id] = version.get<std::string>();
  for (const auto& [phase, ms] : doc.at("timing_ms").items())
    trace.timing_ms.emplace_back(phase, ms.get<std::int64_t>());
  if (doc.contains("notes"))
    trace.notes = doc.at("notes").get<std::vector<std::string>>();
  return trace;
}

ojson result_to_json(const ConsensusResult& result) {
  ojson doc;
  doc["artifact"] = artifact_to_json(result.canonical);
  doc["trace"] = trace_to_json(result.trace);
  return doc;
}

ConsensusResult result_from_json(const ojson& doc, const ExtractionSchema& schema) {
  ConsensusResult result;
  result.trace = trace_from_json(doc.at("trace"));
  result.canonical =
      artifact_from_json(result.trace.task, doc.at("artifact"), schema);
  return result;
}

// ---------------------------------------------------------------------------
// Engine

ConsensusEngine::ConsensusEngine(const PromptLibrary* prompts, ExtractionSchema schema,
                                 ConsensusConfig config, std::shared_ptr<Clock> clock,
                                 CompleteFn complete_fn)
    : prompts_(prompts),
      schema_(std::move(schema)),
      config_(std::move(config)),
      synonyms_(SynonymTable::builtin()),
      clock_(std::move(clock)),
      complete_fn_(std::move(complete_fn)) {}

BackendResponse ConsensusEngine::call(const BackendHandle& handle,
                                      const ChatRequest& request,
                                      const DeadlineBudget& deadline,
                                      const CallTag& tag) const {
  if (complete_fn_) return complete_fn_(handle, request, deadline, tag);
  return complete(handle, request, deadline, tag);
}

namespace {

/// String form shown to the referee for one candidate field value.
std::string option_text(const FieldValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  return field_value_to_json(value).dump();
}

std::string option_canonical(const FieldValue& value) {
  return text::canonical(option_text(value));
}

std::set<std::string> list_element_union(
    const std::vector<const ExtractionArtifact*>& candidates, const FieldSpec& spec) {
  std::set<std::string> out;
  for (const auto* artifact : candidates) {
    const FieldValue* value = artifact->find(spec.name);
    if (!value) continue;
    if (const auto* list = std::get_if<std::vector<std::string>>(value)) {
      for (const auto& item : *list) out.insert(text::canonical(item));
    } else if (const auto* records = std::get_if<std::vector<RecordValue>>(value)) {
      for (const auto& rec : *records) {
        std::vector<std::string> parts;
        for (const auto& [k, v] : rec) parts.push_back(k + "=" + text::canonical(v));
        out.insert(text::join(parts, "|"));
      }
    }
  }
  return out;
}

std::string record_canonical_key(const RecordValue& rec) {
  std::vector<std::string> parts;
  for (const auto& [k, v] : rec) parts.push_back(k + "=" + text::canonical(v));
  return text::join(parts, "|");
}

}  // namespace

Artifact ConsensusEngine::merge_agreeing(const std::vector<NormalizedCandidate>& ranked,
                                         const AgreementReport& report) const {
  (void)report;
  const Artifact& top = ranked.front().artifact;
  if (!std::holds_alternative<ExtractionArtifact>(top) || ranked.size() == 1)
    return top;

  // Extraction merge: union list fields in rank order, everything else from
  // the top-ranked candidate.
  ExtractionArtifact merged = std::get<ExtractionArtifact>(top);
  for (auto& [name, value] : merged.values) {
    const FieldSpec* spec = schema_.find(name);
    if (!spec) continue;
    if (spec->kind == FieldKind::list_of_text) {
      std::vector<std::string> unioned;
      std::set<std::string> seen;
      for (const auto& candidate : ranked) {
        const auto& artifact = std::get<ExtractionArtifact>(candidate.artifact);
        const FieldValue* v = artifact.find(name);
        if (!v) continue;
        if (const auto* list = std::get_if<std::vector<std::string>>(v)) {
          for (const auto& item : *list)
            if (seen.insert(text::canonical(item)).second) unioned.push_back(item);
        }
      }
      value = std::move(unioned);
    } else if (spec->kind == FieldKind::list_of_record) {
      std::vector<RecordValue> unioned;
      std::set<std::string> seen;
      for (const auto& candidate : ranked) {
        const auto& artifact = std::get<ExtractionArtifact>(candidate.artifact);
        const FieldValue* v = artifact.find(name);
        if (!v) continue;
        if (const auto* records = std::get_if<std::vector<RecordValue>>(v)) {
          for (const auto& rec : *records)
            if (seen.insert(record_canonical_key(rec)).second) unioned.push_back(rec);
        }
      }
      value = std::move(unioned);
    }
  }
  return merged;
}

std::optional<std::string> ConsensusEngine::adjudicate_field(
    const std::string& field_name, const std::vector<std::string>& options,
    const BackendHandle& referee, const DeadlineBudget& deadline,
    const std::string& case_id, bool* failed) const {
  if (options.size() < 2)
    throw std::invalid_argument("adjudicate_field needs at least two options");
  if (failed) *failed = false;

  const ChatRequest request = prompts_->render_tiebreak_prompt(field_name, options);
  const CallTag tag{role_name(BackendRole::referee), case_id, "tiebreak:" + field_name};
  const BackendResponse response = call(referee, request, deadline, tag);
  if (!response.ok()) {
    if (failed) *failed = true;
    return std::nullopt;
  }

  const RecoverOutcome recovered = recover_json(response.raw_text);
  if (!recovered.ok() || !recovered.doc->contains("choice")) {
    if (failed) *failed = true;
    return std::nullopt;
  }
  const ojson& choice = recovered.doc->at("choice");
  const std::string chosen =
      text::canonical(choice.is_string() ? choice.get<std::string>() : choice.dump());
  for (const auto& option : options)
    if (text::canonical(option) == chosen) return option;
  return std::nullopt;  // no-invention violation: answer outside the options
}

NormalizedCandidate ConsensusEngine::repair_candidate(const BackendResponse& raw,
                                                      const BackendHandle* referee,
                                                      const DeadlineBudget& deadline,
                                                      const std::string& case_id) const {
  NormalizedCandidate candidate;
  candidate.backend_id = raw.backend_id;
  candidate.parse_path = recover_json(raw.raw_text).parse_path;

  auto defaulted = [&](const std::string& note) {
    candidate.artifact = empty_artifact(TaskKind::extract, schema_);
    candidate.parse_path.push_back(kStepDefaulted);
    candidate.valid = false;
    candidate.notes.push_back(note);
    return candidate;
  };

  if (!referee) return defaulted("repair skipped: no referee backend");
  if (!escalation_gate(deadline, config_.referee_cost_estimate_ms))
    return defaulted("repair skipped: deadline");

  const ChatRequest request = prompts_->render_repair_prompt(raw.raw_text, schema_);
  const CallTag tag{role_name(BackendRole::referee), case_id, "repair"};
  const BackendResponse response = call(*referee, request, deadline, tag);
  if (!response.ok()) return defaulted("repair failed: " + outcome_name(response.outcome));

  const RecoverOutcome recovered =
      recover_json(postprocess(TaskKind::extract, response.raw_text));
  if (!recovered.ok()) return defaulted("repair failed: unparseable reply");

  CoercionOutcome coerced = coerce_extraction(*recovered.doc, schema_);
  candidate.parse_path.push_back(kStepRepairPrompt);
  candidate.artifact = std::move(coerced.artifact);
  candidate.notes = std::move(coerced.notes);
  candidate.notes.push_back("repaired");
  candidate.valid = validate_artifact(candidate.artifact, schema_).pass;
  return candidate;
}

// ---------------------------------------------------------------------------
// run_consensus

namespace {

struct Timer {
  Timer(const std::shared_ptr<Clock>& clock, ConsensusTrace& trace, std::string phase)
      : clock_(clock.get()), trace_(trace), phase_(std::move(phase)),
        start_(clock_->now_ms()) {}
  ~Timer() { trace_.timing_ms.emplace_back(phase_, clock_->now_ms() - start_); }
  Clock* clock_;
  ConsensusTrace& trace_;
  std::string phase_;
  std::int64_t start_;
};

}  // namespace

ConsensusResult ConsensusEngine::run_consensus(
    TaskKind task, const CaseRecord& rec,
    const std::vector<NormalizedCandidate>& candidates, const BackendHandle* referee,
    const DeadlineBudget& deadline,
    const std::vector<std::string>& priority_order) const {
  ConsensusResult result;
  ConsensusTrace& trace = result.trace;
  trace.task = task;
  trace.case_id = rec.case_id;
  for (const auto& c : candidates) trace.candidate_ids.push_back(c.backend_id);
  trace.template_versions[task_template_id(task)] =
      prompts_->get(task_template_id(task)).version;

  std::vector<NormalizedCandidate> valid;
  for (const auto& c : candidates) {
    if (c.valid) valid.push_back(c);
    for (const auto& note : c.notes) trace.notes.push_back(c.backend_id + ": " + note);
    if (std::find(c.parse_path.begin(), c.parse_path.end(), kStepRepairPrompt) !=
        c.parse_path.end()) {
      // Record which fields the repair recovered (non-default values).
      if (const auto* e = std::get_if<ExtractionArtifact>(&c.artifact)) {
        for (const auto& [name, value] : e->values) {
          const FieldSpec* spec = schema_.find(name);
          if (!spec) continue;
          const FieldValue empty = field_value_from_json(spec->empty_default(), *spec);
          if (!(value == empty) &&
              std::find(trace.repaired_fields.begin(), trace.repaired_fields.end(),
                        name) == trace.repaired_fields.end())
            trace.repaired_fields.push_back(name);
        }
      }
    }
  }

  // (1) nothing usable: validated empty-defaults fallback
  if (valid.empty()) {
    result.canonical = empty_artifact(task, schema_);
    trace.agreement.threshold_used = config_.agreement.accept_threshold;
    trace.agreement.overall = 0.0;
    trace.agreement.passed = false;
    trace.fallback_reason = FallbackReason::all_invalid;
    trace.timing_ms.emplace_back("consensus", 0);
    return result;
  }

  const std::int64_t t0 = clock_->now_ms();
  std::vector<NormalizedCandidate> ranked;
  {
    Timer timer(clock_, trace, "agreement");
    trace.agreement = aggregate_agreement(valid, config_.agreement, schema_);
    ranked = rank_candidates(valid, config_.agreement, schema_, priority_order);
  }

  // (2) agreement path
  if (trace.agreement.passed) {
    result.canonical = merge_agreeing(ranked, trace.agreement);
    trace.timing_ms.emplace_back("consensus", clock_->now_ms() - t0);
    return result;
  }

  std::vector<std::string> disagreements = trace.agreement.contested_fields;
  if (disagreements.empty()) {
    for (const auto& [name, score] : trace.agreement.per_field)
      if (score < 1.0) disagreements.push_back(name);
  }

  // (4) not enough budget for a referee: best validated candidate
  if (!referee || disagreements.empty() ||
      !escalation_gate(deadline, config_.referee_cost_estimate_ms)) {
    result.canonical = ranked.front().artifact;
    trace.fallback_reason = FallbackReason::deadline_exceeded;
    trace.timing_ms.emplace_back("consensus", clock_->now_ms() - t0);
    return result;
  }

  // (3) referee adjudication
  trace.referee_called = true;
  trace.referee_backend = referee->profile.backend_id;
  {
    Timer timer(clock_, trace, "referee");
    if (task == TaskKind::summarize) {
      adjudicate_summary(ranked, disagreements, *referee, deadline, rec, trace, result);
    } else if (static_cast<int>(disagreements.size()) <= config_.tiebreak_max_fields) {
      adjudicate_tiebreaks(task, ranked, disagreements, *referee, deadline, rec, trace,
                           result);
    } else {
      adjudicate_whole(task, ranked, disagreements, *referee, deadline, rec, trace,
                       result);
    }
  }
  trace.timing_ms.emplace_back("consensus", clock_->now_ms() - t0);
  return result;
}

// ---------------------------------------------------------------------------
// Escalation paths

void ConsensusEngine::adjudicate_summary(const std::vector<NormalizedCandidate>& ranked,
                                         const std::vector<std::string>& disagreements,
                                         const BackendHandle& referee,
                                         const DeadlineBudget& deadline,
                                         const CaseRecord& rec, ConsensusTrace& trace,
                                         ConsensusResult& result) const {
  trace.template_versions[referee_template_id(TaskKind::summarize)] =
      prompts_->get(referee_template_id(TaskKind::summarize)).version;
  const ChatRequest request = prompts_->render_referee_prompt(
      TaskKind::summarize, ranked, disagreements, rec.narrative);
  const CallTag tag{role_name(BackendRole::referee), rec.case_id, "referee"};
  const BackendResponse response = call(referee, request, deadline, tag);
  if (!response.ok()) {
    result.canonical = ranked.front().artifact;
    trace.fallback_reason = FallbackReason::referee_failed;
    return;
  }

  NormalizedCandidate adjudicated = normalize_summary(
      postprocess(TaskKind::summarize, response.raw_text), referee.profile.backend_id);
  const auto& bullets = std::get<SummaryArtifact>(adjudicated.artifact).bullets;

  // No-invention: every referee bullet must appear in some candidate.
  std::set<std::string> allowed{text::canonical(kSummaryPlaceholder)};
  for (const auto& candidate : ranked)
    for (const auto& bullet : std::get<SummaryArtifact>(candidate.artifact).bullets)
      allowed.insert(text::canonical(bullet));
  bool invented = false;
  for (const auto& bullet : bullets)
    if (!allowed.count(text::canonical(bullet))) invented = true;

  if (invented) {
    result.canonical = ranked.front().artifact;
    trace.reverted_fields = disagreements;
  } else {
    result.canonical = adjudicated.artifact;
  }
}

void ConsensusEngine::adjudicate_tiebreaks(
    TaskKind task, const std::vector<NormalizedCandidate>& ranked,
    const std::vector<std::string>& disagreements, const BackendHandle& referee,
    const DeadlineBudget& deadline, const CaseRecord& rec, ConsensusTrace& trace,
    ConsensusResult& result) const {
  trace.template_versions["tiebreak"] = prompts_->get("tiebreak").version;
  Artifact base = ranked.front().artifact;
  int calls = 0;
  int failures = 0;

  for (const auto& field : disagreements) {
    // Distinct options in rank order, deduplicated canonically.
    std::vector<std::string> options;
    std::vector<FieldValue> option_values;
    std::set<std::string> seen;
    const bool weak_shaped = std::holds_alternative<WeakLabelArtifact>(base);
    for (const auto& candidate : ranked) {
      if (weak_shaped) {
        const auto& w = std::get<WeakLabelArtifact>(candidate.artifact);
        const std::string value =
            field == "movement" ? movement_name(w.movement) : risk_name(w.risk);
        if (seen.insert(value).second) options.push_back(value);
      } else {
        const auto& e = std::get<ExtractionArtifact>(candidate.artifact);
        const FieldValue* value = e.find(field);
        if (!value) continue;
        const std::string canon = option_canonical(*value);
        if (seen.insert(canon).second) {
          options.push_back(option_text(*value));
          option_values.push_back(*value);
        }
      }
    }
    if (options.size() < 2) continue;  // values agree canonically; nothing to break

    if (!escalation_gate(deadline, config_.referee_cost_estimate_ms)) {
      trace.fallback_reason = FallbackReason::deadline_exceeded;
      break;
    }
    ++calls;
    bool failed = false;
    const std::optional<std::string> choice =
        adjudicate_field(field, options, referee, deadline, rec.case_id, &failed);
    if (!choice) {
      if (failed) ++failures;
      trace.reverted_fields.push_back(field);
      continue;  // keep the top-ranked candidate's value
    }
    if (weak_shaped) {
      auto& w = std::get<WeakLabelArtifact>(base);
      if (field == "movement")
        w.movement = movement_from_string(*choice).value_or(w.movement);
      else if (field == "risk")
        w.risk = risk_from_string(*choice).value_or(w.risk);
    } else {
      auto& e = std::get<ExtractionArtifact>(base);
      for (std::size_t i = 0; i < options.size(); ++i) {
        if (text::canonical(options[i]) == text::canonical(*choice)) {
          for (auto& [name, value] : e.values)
            if (name == field) value = option_values[i];
          break;
        }
      }
    }
  }

  (void)task;
  if (calls > 0 && failures == calls)
    trace.fallback_reason = FallbackReason::referee_failed;
  result.canonical = std::move(base);
}

void ConsensusEngine::adjudicate_whole(TaskKind task,
                                       const std::vector<NormalizedCandidate>& ranked,
                                       const std::vector<std::string>& disagreements,
                                       const BackendHandle& referee,
                                       const DeadlineBudget& deadline,
                                       const CaseRecord& rec, ConsensusTrace& trace,
                                       ConsensusResult& result) const {
  trace.template_versions[referee_template_id(task)] =
      prompts_->get(referee_template_id(task)).version;
  const ChatRequest request =
      prompts_->render_referee_prompt(task, ranked, disagreements, rec.narrative);
  const CallTag tag{role_name(BackendRole::referee), rec.case_id, "referee"};
  const BackendResponse response = call(referee, request, deadline, tag);

  auto fall_back = [&] {
    result.canonical = ranked.front().artifact;
    trace.fallback_reason = FallbackReason::referee_failed;
  };
  if (!response.ok()) return fall_back();
  const RecoverOutcome recovered =
      recover_json(postprocess(task, response.raw_text));
  if (!recovered.ok()) return fall_back();

  if (task == TaskKind::extract) {
    ExtractionArtifact adjudicated =
        coerce_extraction(*recovered.doc, schema_).artifact;
    const ExtractionArtifact& top = std::get<ExtractionArtifact>(ranked.front().artifact);

    std::vector<const ExtractionArtifact*> sources;
    for (const auto& candidate : ranked)
      sources.push_back(&std::get<ExtractionArtifact>(candidate.artifact));

    for (auto& [name, value] : adjudicated.values) {
      const FieldSpec* spec = schema_.find(name);
      if (!spec) continue;
      const FieldValue empty = field_value_from_json(spec->empty_default(), *spec);
      bool supported = value == empty;
      if (!supported) {
        switch (spec->kind) {
          case FieldKind::text:
          case FieldKind::timestamp_text:
          case FieldKind::integer: {
            const std::string canon = option_canonical(value);
            for (const auto* source : sources) {
              const FieldValue* sv = source->find(name);
              if (sv && option_canonical(*sv) == canon) supported = true;
            }
            break;
          }
          case FieldKind::list_of_text: {
            const std::set<std::string> allowed = list_element_union(sources, *spec);
            supported = true;
            for (const auto& item : std::get<std::vector<std::string>>(value))
              if (!allowed.count(text::canonical(item))) supported = false;
            break;
          }
          case FieldKind::list_of_record: {
            const std::set<std::string> allowed = list_element_union(sources, *spec);
            supported = true;
            for (const auto& record : std::get<std::vector<RecordValue>>(value))
              if (!allowed.count(record_canonical_key(record))) supported = false;
            break;
          }
        }
      }
      if (!supported) {
        const FieldValue* tv = top.find(name);
        value = tv ? *tv : empty;
        trace.reverted_fields.push_back(name);
      }
    }
    result.canonical = std::move(adjudicated);
    return;
  }

  // Weak-label shaped tasks: labels come from the referee only when some
  // candidate proposed them; confidence and rationale stay with the top rank.
  WeakLabelOutcome normalized = normalize_weak_label(*recovered.doc, synonyms_);
  WeakLabelArtifact adjudicated = std::get<WeakLabelArtifact>(ranked.front().artifact);
  std::set<std::string> movements;
  std::set<std::string> risks;
  for (const auto& candidate : ranked) {
    const auto& w = std::get<WeakLabelArtifact>(candidate.artifact);
    movements.insert(movement_name(w.movement));
    risks.insert(risk_name(w.risk));
  }
  if (movements.count(movement_name(normalized.artifact.movement)))
    adjudicated.movement = normalized.artifact.movement;
  else
    trace.reverted_fields.push_back("movement");
  if (risks.count(risk_name(normalized.artifact.risk)))
    adjudicated.risk = normalized.artifact.risk;
  else
    trace.reverted_fields.push_back("risk");
  result.canonical = adjudicated;
}

}  // namespace guardian
