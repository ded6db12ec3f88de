#pragma once

#include <set>
#include <string>
#include <vector>

#include "guardian/case_model.hpp"
#include "guardian/normalize.hpp"

namespace guardian {

/// Keyword cue tables that assign summary tokens to informational slots.
struct CueTable {
  std::set<std::string> time_tokens;
  std::set<std::string> vehicle_tokens;
  std::set<std::string> movement_tokens;
  std::set<std::string> location_cues;

  static CueTable builtin();
  static CueTable load(const std::string& path);
};

std::set<std::string> builtin_stopwords();

struct AgreementConfig {
  double field_threshold = 0.6;
  double accept_threshold = 0.75;
  int long_text_token_cutoff = 4;
  std::set<std::string> stopwords = builtin_stopwords();
  CueTable cues = CueTable::builtin();

  static AgreementConfig defaults() { return {}; }
};

/// Token sets per informational slot: lowercase, punctuation-stripped,
/// stopword-filtered.
struct SummarySlots {
  std::set<std::string> subject;
  std::set<std::string> last_seen_location;
  std::set<std::string> last_seen_time;
  std::set<std::string> vehicle;
  std::set<std::string> movement;

  std::vector<std::pair<std::string, const std::set<std::string>*>> named() const;
};

SummarySlots extract_slots(const SummaryArtifact& summary, const AgreementConfig& config);

struct AgreementReport {
  std::vector<std::pair<std::string, double>> per_field;
  double overall = 1.0;
  bool passed = true;
  double threshold_used = 0.0;
  std::vector<std::string> contested_fields;

  double field_score(std::string_view name) const;
};

/// Field-level agreement between two valid candidates of the same task.
/// Summaries compare slot token sets by Jaccard; extraction scalars compare
/// canonically (token Jaccard for long text), lists as order-invariant sets;
/// weak labels exact-match movement and risk, ignoring confidence. overall is
/// the weighted mean (required fields weight 2); passed requires overall >=
/// accept_threshold and no required field at zero.
AgreementReport score_pair(const NormalizedCandidate& a, const NormalizedCandidate& b,
                           const AgreementConfig& config, const ExtractionSchema& schema);

/// Mean pairwise report across valid candidates (vacuous pass for a single
/// valid candidate).
AgreementReport aggregate_agreement(const std::vector<NormalizedCandidate>& candidates,
                                    const AgreementConfig& config,
                                    const ExtractionSchema& schema);

/// Deterministic total order: valid first, then mean pairwise agreement with
/// the others, then backend priority order, then backend_id.
std::vector<NormalizedCandidate> rank_candidates(
    const std::vector<NormalizedCandidate>& candidates, const AgreementConfig& config,
    const ExtractionSchema& schema, const std::vector<std::string>& priority_order);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

}  // namespace guardian
