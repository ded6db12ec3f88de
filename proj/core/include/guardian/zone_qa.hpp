#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "guardian/case_model.hpp"

namespace guardian {

enum class PlausibilitySource { labeler, neutral_fallback };

std::string plausibility_source_name(PlausibilitySource source);

struct ZoneQaConfig {
  double w_p = 2.0;
  double w_q = 1.5;
  double w_a = 0.5;
  double w_r = 1.0;
  double bias = -1.5;
  double area_ref_km2 = 10.0;
  double confidence_floor = 0.4;
  int batch_size = 8;
};

struct ZoneAssessment {
  std::string zone_id;
  double plausibility = 0.5;
  PlausibilitySource plausibility_source = PlausibilitySource::neutral_fallback;
  double new_priority = 0.5;
  // Addends of the sigmoid argument, in formula order.
  std::vector<std::pair<std::string, double>> components;
};

/// Maps a validated label to a plausibility score. Labeler failure, an
/// invalid artifact, or confidence below the floor yields the neutral (0.5)
/// fallback; otherwise 0.5 + direction(risk) * 0.5 * confidence, clamped to
/// [0,1], with direction in {low:-1, moderate:-0.25, high:+0.5, critical:+1,
/// unknown:0}.
std::pair<double, PlausibilitySource> plausibility_from_label(
    const std::optional<WeakLabelArtifact>& label, double confidence_floor);

/// Bounded reweighting: z = w_p*priority + w_q*plausibility
/// - w_a*ln(1 + area/area_ref) + w_r*rl_score + bias; new_priority = sigmoid(z),
/// kept strictly inside (0,1).
ZoneAssessment recompute_priority(const ZoneCandidate& zone, double plausibility,
                                  const ZoneQaConfig& config);

/// Labels one pseudo-case (narrative plus zone description in metadata);
/// nullopt signals labeler failure and triggers the neutral fallback.
using ZoneLabeler = std::function<std::optional<WeakLabelArtifact>(const CaseRecord&)>;

/// Builds the pseudo-case a zone is labeled through. case_id becomes
/// "<case_id>#<zone_id>"; the zone description lands in metadata.
CaseRecord zone_pseudo_case(const CaseRecord& rec, const ZoneCandidate& zone);

/// Processes zones in batches of batch_size through the labeler, preserving
/// input order. External rl_scores override zone-embedded rl_score values; a
/// labeler failure affects only its own zone.
std::vector<ZoneAssessment> assess_zones(
    const CaseRecord& rec, const ZoneLabeler& labeler,
    const std::optional<std::map<std::string, double>>& rl_scores,
    const ZoneQaConfig& config);

ojson zone_assessment_to_json(const ZoneCandidate& zone, const ZoneAssessment& assessment);

/// RL score file: JSON map {zone_id: score in [0,1]}.
std::map<std::string, double> load_rl_scores(const std::string& path);

}  // namespace guardian
