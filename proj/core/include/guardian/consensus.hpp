#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "guardian/agreement.hpp"
#include "guardian/backends.hpp"
#include "guardian/case_model.hpp"
#include "guardian/normalize.hpp"
#include "guardian/prompts.hpp"

namespace guardian {

/// True when the remaining budget covers the configured cost estimate for a
/// referee escalation.
inline bool escalation_gate(const DeadlineBudget& budget,
                            std::int64_t referee_cost_estimate_ms) {
  return budget.remaining_ms() >= referee_cost_estimate_ms;
}

struct ConsensusConfig {
  AgreementConfig agreement;
  std::int64_t referee_cost_estimate_ms = 3000;
  // Up to this many contested fields go through single-field tie-breaks;
  // beyond it the referee adjudicates the whole artifact.
  int tiebreak_max_fields = 2;
};

enum class FallbackReason { none, deadline_exceeded, referee_failed, all_invalid };

std::string fallback_reason_name(FallbackReason reason);
FallbackReason fallback_reason_from_name(const std::string& name);

struct ConsensusTrace {
  TaskKind task = TaskKind::summarize;
  std::string case_id;
  std::vector<std::string> candidate_ids;
  AgreementReport agreement;
  bool referee_called = false;
  std::string referee_backend;
  std::vector<std::string> repaired_fields;
  std::vector<std::string> reverted_fields;
  FallbackReason fallback_reason = FallbackReason::none;
  std::map<std::string, std::string> template_versions;
  std::vector<std::pair<std::string, std::int64_t>> timing_ms;
  std::vector<std::string> notes;
};

struct ConsensusResult {
  Artifact canonical;
  ConsensusTrace trace;
};

ojson agreement_to_json(const AgreementReport& report);
AgreementReport agreement_from_json(const ojson& doc);
ojson trace_to_json(const ConsensusTrace& trace);
ConsensusTrace trace_from_json(const ojson& doc);
ojson result_to_json(const ConsensusResult& result);
ConsensusResult result_from_json(const ojson& doc, const ExtractionSchema& schema);

/// Centralized consensus: agreement scoring, merge on agreement, referee or
/// tie-break escalation on disagreement, repair for unparseable candidates,
/// no-invention enforcement with revert, and a complete trace on every path.
class ConsensusEngine {
 public:
  ConsensusEngine(const PromptLibrary* prompts, ExtractionSchema schema,
                  ConsensusConfig config, std::shared_ptr<Clock> clock,
                  CompleteFn complete_fn = {});

  /// Never fails: every path collapses to a validated artifact with the
  /// fallback_reason recorded.
  ConsensusResult run_consensus(TaskKind task, const CaseRecord& rec,
                                const std::vector<NormalizedCandidate>& candidates,
                                const BackendHandle* referee,
                                const DeadlineBudget& deadline,
                                const std::vector<std::string>& priority_order) const;

  /// Agreement-path merge: equal scalars pass through, list fields take the
  /// union ordered by first appearance in rank order, everything else defers
  /// to the top-ranked candidate. report.passed must hold.
  Artifact merge_agreeing(const std::vector<NormalizedCandidate>& ranked,
                          const AgreementReport& report) const;

  /// Single contested field: returns the chosen option, or nullopt on a
  /// no-invention violation, referee failure, or unparseable reply. When
  /// `failed` is given it is set for transport/parse failures (as opposed to
  /// out-of-option answers).
  std::optional<std::string> adjudicate_field(const std::string& field_name,
                                              const std::vector<std::string>& options,
                                              const BackendHandle& referee,
                                              const DeadlineBudget& deadline,
                                              const std::string& case_id,
                                              bool* failed = nullptr) const;

  /// Repair escalation for an extraction candidate whose deterministic
  /// recovery failed; falls back to a defaulted, invalid candidate.
  NormalizedCandidate repair_candidate(const BackendResponse& raw,
                                       const BackendHandle* referee,
                                       const DeadlineBudget& deadline,
                                       const std::string& case_id) const;

  const ExtractionSchema& schema() const { return schema_; }
  const ConsensusConfig& config() const { return config_; }
  const SynonymTable& synonyms() const { return synonyms_; }
  void set_synonyms(SynonymTable table) { synonyms_ = std::move(table); }

 private:
  BackendResponse call(const BackendHandle& handle, const ChatRequest& request,
                       const DeadlineBudget& deadline, const CallTag& tag) const;
  void adjudicate_summary(const std::vector<NormalizedCandidate>& ranked,
                          const std::vector<std::string>& disagreements,
                          const BackendHandle& referee, const DeadlineBudget& deadline,
                          const CaseRecord& rec, ConsensusTrace& trace,
                          ConsensusResult& result) const;
  void adjudicate_tiebreaks(TaskKind task, const std::vector<NormalizedCandidate>& ranked,
                            const std::vector<std::string>& disagreements,
                            const BackendHandle& referee, const DeadlineBudget& deadline,
                            const CaseRecord& rec, ConsensusTrace& trace,
                            ConsensusResult& result) const;
  void adjudicate_whole(TaskKind task, const std::vector<NormalizedCandidate>& ranked,
                        const std::vector<std::string>& disagreements,
                        const BackendHandle& referee, const DeadlineBudget& deadline,
                        const CaseRecord& rec, ConsensusTrace& trace,
                        ConsensusResult& result) const;

  const PromptLibrary* prompts_;
  ExtractionSchema schema_;
  ConsensusConfig config_;
  SynonymTable synonyms_;
  std::shared_ptr<Clock> clock_;
  CompleteFn complete_fn_;
};

}  // namespace guardian
