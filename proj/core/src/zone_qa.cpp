#include "guardian/zone_qa.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace guardian {

std::string plausibility_source_name(PlausibilitySource source) {
  return source == PlausibilitySource::labeler ? "labeler" : "neutral_fallback";
}

namespace {

double risk_direction(Risk risk) {
  switch (risk) {
    case Risk::low: return -1.0;
    case Risk::moderate: return -0.25;
    case Risk::high: return 0.5;
    case Risk::critical: return 1.0;
    case Risk::unknown: return 0.0;
  }
  return 0.0;
}

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::pair<double, PlausibilitySource> plausibility_from_label(
    const std::optional<WeakLabelArtifact>& label, double confidence_floor) {
  if (!label) return {0.5, PlausibilitySource::neutral_fallback};
  if (!(label->confidence >= 0.0 && label->confidence <= 1.0))
    return {0.5, PlausibilitySource::neutral_fallback};
  if (label->confidence < confidence_floor)
    return {0.5, PlausibilitySource::neutral_fallback};
  double p = 0.5 + risk_direction(label->risk) * 0.5 * label->confidence;
  p = std::min(1.0, std::max(0.0, p));
  return {p, PlausibilitySource::labeler};
}

ZoneAssessment recompute_priority(const ZoneCandidate& zone, double plausibility,
                                  const ZoneQaConfig& config) {
  ZoneAssessment assessment;
  assessment.zone_id = zone.zone_id;
  assessment.plausibility = plausibility;

  const double pen_size = std::log1p(zone.area_km2 / config.area_ref_km2);
  const double s_rl = zone.rl_score.value_or(0.0);
  const double c_priority = config.w_p * zone.priority;
  const double c_plausibility = config.w_q * plausibility;
  const double c_area = -config.w_a * pen_size;
  const double c_rl = config.w_r * s_rl;
  const double z = c_priority + c_plausibility + c_area + c_rl + config.bias;

  double priority = stable_sigmoid(z);
  if (priority <= 0.0) priority = std::numeric_limits<double>::min();
  if (priority >= 1.0) priority = std::nextafter(1.0, 0.0);
  assessment.new_priority = priority;

  assessment.components = {
      {"w_p*p_orig", c_priority},
      {"w_q*s_plaus", c_plausibility},
      {"-w_a*pen_size", c_area},
      {"w_r*s_rl", c_rl},
      {"bias", config.bias},
  };
  return assessment;
}

CaseRecord zone_pseudo_case(const CaseRecord& rec, const ZoneCandidate& zone) {
  CaseRecord pseudo;
  pseudo.case_id = rec.case_id + "#" + zone.zone_id;
  pseudo.narrative = rec.narrative;
  pseudo.metadata = rec.metadata;
  pseudo.metadata["zone_id"] = zone.zone_id;
  pseudo.metadata["zone_description"] = zone.description;
  return pseudo;
}

std::vector<ZoneAssessment> assess_zones(
    const CaseRecord& rec, const ZoneLabeler& labeler,
    const std::optional<std::map<std::string, double>>& rl_scores,
    const ZoneQaConfig& config) {
  if (rec.zones.empty())
    throw std::invalid_argument("assess_zones: case " + rec.case_id + " has no zones");

  std::vector<ZoneAssessment> assessments;
  assessments.reserve(rec.zones.size());
  const std::size_t batch =
      config.batch_size > 0 ? static_cast<std::size_t>(config.batch_size) : 1;

  for (std::size_t begin = 0; begin < rec.zones.size(); begin += batch) {
    const std::size_t end = std::min(begin + batch, rec.zones.size());
    for (std::size_t i = begin; i < end; ++i) {
      ZoneCandidate zone = rec.zones[i];
      if (rl_scores) {
        auto it = rl_scores->find(zone.zone_id);
        if (it != rl_scores->end()) zone.rl_score = it->second;
      }
      std::optional<WeakLabelArtifact> label;
      try {
        label = labeler(zone_pseudo_case(rec, zone));
      } catch (const std::exception&) {
        label = std::nullopt;  // failure isolated to this zone
      }
      const auto [plausibility, source] =
          plausibility_from_label(label, config.confidence_floor);
      ZoneAssessment assessment = recompute_priority(zone, plausibility, config);
      assessment.plausibility_source = source;
      assessments.push_back(std::move(assessment));
    }
  }
  return assessments;
}

ojson zone_assessment_to_json(const ZoneCandidate& zone,
                              const ZoneAssessment& assessment) {
  ojson doc = zone_to_json(zone);
  doc["plausibility"] = assessment.plausibility;
  doc["plausibility_source"] = plausibility_source_name(assessment.plausibility_source);
  doc["new_priority"] = assessment.new_priority;
  ojson components = ojson::object();
  for (const auto& [name, value] : assessment.components) components[name] = value;
  doc["components"] = std::move(components);
  return doc;
}

std::map<std::string, double> load_rl_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open RL score file: " + path);
  ojson doc = ojson::parse(in);
  std::map<std::string, double> scores;
  for (const auto& [zone_id, score] : doc.items()) {
    const double value = score.get<double>();
    if (value < 0.0 || value > 1.0)
      throw std::runtime_error("rl score outside [0,1] for zone " + zone_id);
    scores[zone_id] = value;
  }
  return scores;
}

}  // namespace guardian
