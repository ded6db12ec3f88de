#include "guardian/agreement.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "guardian/text.hpp"

namespace guardian {

CueTable CueTable::builtin() {
  CueTable cues;
  cues.time_tokens = {
      "am",      "pm",      "noon",    "midnight", "morning", "afternoon",
      "evening", "night",   "dusk",    "dawn",     "today",   "yesterday",
      "tonight", "monday",  "tuesday", "wednesday", "thursday", "friday",
      "saturday", "sunday", "january", "february", "march",   "april",
      "may",     "june",    "july",    "august",   "september", "october",
      "november", "december", "oclock", "hours",
  };
  cues.vehicle_tokens = {
      "sedan",  "suv",    "truck",  "van",     "car",     "pickup", "coupe",
      "hatchback", "motorcycle", "bike", "bus", "minivan", "jeep",
      "honda",  "toyota", "ford",   "chevrolet", "chevy", "nissan", "dodge",
      "subaru", "hyundai", "kia",   "bmw",     "mazda",   "plate",  "plates",
      "license", "red",   "blue",   "black",   "white",   "silver", "gray",
      "grey",   "green",  "yellow", "orange",  "brown",   "tan",    "maroon",
  };
  cues.movement_tokens = {
      "north", "south", "east",  "west",  "northbound", "southbound",
      "eastbound", "westbound", "heading", "headed", "walking", "walked",
      "driving", "drove", "running", "ran", "fled", "fleeing", "traveling",
      "travelling", "moving", "toward", "towards", "departed", "leaving",
      "left", "hitchhiking", "bus", "train", "highway", "interstate",
      "route", "direction",
  };
  cues.location_cues = {"at", "near", "in", "on", "by", "around", "outside", "behind"};
  return cues;
}

CueTable CueTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cue table: " + path);
  ojson doc = ojson::parse(in);
  CueTable cues;
  auto read = [&](const char* key, std::set<std::string>& out) {
    if (!doc.contains(key)) return;
    for (const auto& item : doc.at(key)) out.insert(text::canonical(item.get<std::string>()));
  };
  read("time_tokens", cues.time_tokens);
  read("vehicle_tokens", cues.vehicle_tokens);
  read("movement_tokens", cues.movement_tokens);
  read("location_cues", cues.location_cues);
  return cues;
}

std::set<std::string> builtin_stopwords() {
  return {"a",    "an",   "and",  "are", "as",   "at",   "be",   "but", "for",
          "from", "had",  "has",  "have", "he",  "her",  "his",  "in",  "is",
          "it",   "its",  "of",   "off", "no",   "not",  "or",   "s",   "she",
          "so",   "than", "that", "the", "their", "them", "then", "there",
          "they", "this", "to",   "was", "were", "with", "will", "would"};
}

std::vector<std::pair<std::string, const std::set<std::string>*>> SummarySlots::named()
    const {
  return {{"subject", &subject},
          {"last_seen_location", &last_seen_location},
          {"last_seen_time", &last_seen_time},
          {"vehicle", &vehicle},
          {"movement", &movement}};
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::size_t intersection = 0;
  for (const auto& item : a) intersection += b.count(item);
  const std::size_t unions = a.size() + b.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(unions);
}

// ---------------------------------------------------------------------------
// Slot extraction

namespace {

bool all_digit_token(const std::string& token) {
  return !token.empty() &&
         std::all_of(token.begin(), token.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

bool time_like(const std::string& token, const CueTable& cues) {
  if (cues.time_tokens.count(token)) return true;
  if (all_digit_token(token)) return true;
  // "6pm", "1130am"
  if (token.size() > 2) {
    const std::string tail = token.substr(token.size() - 2);
    if ((tail == "am" || tail == "pm") &&
        all_digit_token(token.substr(0, token.size() - 2)))
      return true;
  }
  return false;
}

}  // namespace

SummarySlots extract_slots(const SummaryArtifact& summary, const AgreementConfig& config) {
  SummarySlots slots;
  const CueTable& cues = config.cues;

  for (const auto& bullet : summary.bullets) {
    if (text::canonical(bullet) == text::canonical(kSummaryPlaceholder)) continue;

    // Word-level pass keeps the original casing for subject detection.
    std::vector<std::string> words;
    {
      std::string cur;
      for (char c : bullet) {
        if (std::isspace(static_cast<unsigned char>(c))) {
          if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      if (!cur.empty()) words.push_back(std::move(cur));
    }

    bool in_location_span = false;
    for (std::size_t w = 0; w < words.size(); ++w) {
      const bool capitalized =
          std::isupper(static_cast<unsigned char>(words[w][0])) != 0;
      for (const auto& token : text::tokenize(words[w])) {
        if (config.stopwords.count(token)) {
          if (cues.location_cues.count(token)) in_location_span = true;
          continue;
        }
        if (cues.location_cues.count(token)) {
          in_location_span = true;
          continue;
        }
        bool matched = false;
        if (time_like(token, cues)) {
          slots.last_seen_time.insert(token);
          matched = true;
        }
        if (cues.vehicle_tokens.count(token)) {
          slots.vehicle.insert(token);
          matched = true;
        }
        if (cues.movement_tokens.count(token)) {
          slots.movement.insert(token);
          matched = true;
        }
        if (!matched && in_location_span) {
          slots.last_seen_location.insert(token);
          matched = true;
        }
        if (capitalized && w > 0 && !time_like(token, cues) &&
            !cues.vehicle_tokens.count(token) && !cues.movement_tokens.count(token)) {
          slots.subject.insert(token);
        }
      }
    }
  }
  return slots;
}

// ---------------------------------------------------------------------------
// Pairwise scoring

namespace {

std::set<std::string> token_set(const std::string& s,
                                const std::set<std::string>& stopwords) {
  std::set<std::string> out;
  for (const auto& token : text::tokenize(s))
    if (!stopwords.count(token)) out.insert(token);
  return out;
}

std::string record_canonical(const RecordValue& rec) {
  std::vector<std::string> parts;
  for (const auto& [k, v] : rec) parts.push_back(k + "=" + text::canonical(v));
  return text::join(parts, "|");
}

std::set<std::string> list_canonical(const FieldValue& value) {
  std::set<std::string> out;
  if (const auto* list = std::get_if<std::vector<std::string>>(&value)) {
    for (const auto& item : *list) {
      const std::string c = text::canonical(item);
      if (!c.empty()) out.insert(c);
    }
  } else if (const auto* records = std::get_if<std::vector<RecordValue>>(&value)) {
    for (const auto& rec : *records) out.insert(record_canonical(rec));
  }
  return out;
}

double scalar_text_score(const std::string& a, const std::string& b,
                         const AgreementConfig& config) {
  const std::string ca = text::canonical(a);
  const std::string cb = text::canonical(b);
  if (ca == cb) return 1.0;
  const auto ta = text::tokenize(ca);
  const auto tb = text::tokenize(cb);
  const std::size_t longest = std::max(ta.size(), tb.size());
  if (longest >= static_cast<std::size_t>(config.long_text_token_cutoff)) {
    return jaccard(std::set<std::string>(ta.begin(), ta.end()),
                   std::set<std::string>(tb.begin(), tb.end()));
  }
  return 0.0;
}

double extraction_field_score(const FieldValue& a, const FieldValue& b,
                              const FieldSpec& spec, const AgreementConfig& config) {
  switch (spec.kind) {
    case FieldKind::text:
    case FieldKind::timestamp_text: {
      const auto* sa = std::get_if<std::string>(&a);
      const auto* sb = std::get_if<std::string>(&b);
      if (!sa || !sb) return sa == sb ? 1.0 : 0.0;
      return scalar_text_score(*sa, *sb, config);
    }
    case FieldKind::integer: {
      const bool na = std::holds_alternative<std::monostate>(a);
      const bool nb = std::holds_alternative<std::monostate>(b);
      if (na && nb) return 1.0;
      if (na || nb) return 0.0;
      return std::get<std::int64_t>(a) == std::get<std::int64_t>(b) ? 1.0 : 0.0;
    }
    case FieldKind::list_of_text:
    case FieldKind::list_of_record:
      return jaccard(list_canonical(a), list_canonical(b));
  }
  return 0.0;
}

struct FieldScore {
  std::string name;
  double score;
  double weight;
  bool required;
};

AgreementReport finalize(std::vector<FieldScore> scores, const AgreementConfig& config) {
  AgreementReport report;
  report.threshold_used = config.accept_threshold;
  double weighted_sum = 0.0;
  double weight_total = 0.0;
  bool required_zero = false;
  for (const auto& fs : scores) {
    report.per_field.emplace_back(fs.name, fs.score);
    weighted_sum += fs.score * fs.weight;
    weight_total += fs.weight;
    if (fs.score < config.field_threshold) report.contested_fields.push_back(fs.name);
    if (fs.required && fs.score == 0.0) required_zero = true;
  }
  report.overall = weight_total > 0.0 ? weighted_sum / weight_total : 1.0;
  report.passed = report.overall >= config.accept_threshold && !required_zero;
  return report;
}

}  // namespace

double AgreementReport::field_score(std::string_view name) const {
  for (const auto& [field, score] : per_field)
    if (field == name) return score;
  return 0.0;
}

AgreementReport score_pair(const NormalizedCandidate& a, const NormalizedCandidate& b,
                           const AgreementConfig& config, const ExtractionSchema& schema) {
  const TaskKind task = artifact_task(a.artifact);
  if (task != artifact_task(b.artifact))
    throw std::invalid_argument("score_pair: candidates must share a task kind");

  std::vector<FieldScore> scores;
  if (task == TaskKind::summarize) {
    const SummarySlots sa = extract_slots(std::get<SummaryArtifact>(a.artifact), config);
    const SummarySlots sb = extract_slots(std::get<SummaryArtifact>(b.artifact), config);
    const auto named_a = sa.named();
    const auto named_b = sb.named();
    for (std::size_t i = 0; i < named_a.size(); ++i)
      scores.push_back({named_a[i].first,
                        jaccard(*named_a[i].second, *named_b[i].second), 1.0, false});
  } else if (task == TaskKind::extract) {
    const auto& ea = std::get<ExtractionArtifact>(a.artifact);
    const auto& eb = std::get<ExtractionArtifact>(b.artifact);
    for (const auto& spec : schema.fields) {
      const FieldValue* va = ea.find(spec.name);
      const FieldValue* vb = eb.find(spec.name);
      const FieldValue empty = field_value_from_json(spec.empty_default(), spec);
      const double score = extraction_field_score(va ? *va : empty, vb ? *vb : empty,
                                                  spec, config);
      scores.push_back({spec.name, score, spec.required ? 2.0 : 1.0, spec.required});
    }
  } else {
    const auto& wa = std::get<WeakLabelArtifact>(a.artifact);
    const auto& wb = std::get<WeakLabelArtifact>(b.artifact);
    scores.push_back({"movement", wa.movement == wb.movement ? 1.0 : 0.0, 2.0, true});
    scores.push_back({"risk", wa.risk == wb.risk ? 1.0 : 0.0, 2.0, true});
  }
  return finalize(std::move(scores), config);
}

AgreementReport aggregate_agreement(const std::vector<NormalizedCandidate>& candidates,
                                    const AgreementConfig& config,
                                    const ExtractionSchema& schema) {
  std::vector<const NormalizedCandidate*> valid;
  for (const auto& c : candidates)
    if (c.valid) valid.push_back(&c);

  if (valid.size() <= 1) {
    // Vacuous agreement: nothing to compare against.
    AgreementReport report;
    report.threshold_used = config.accept_threshold;
    report.overall = valid.empty() ? 0.0 : 1.0;
    report.passed = !valid.empty();
    if (!valid.empty()) {
      AgreementReport self = score_pair(*valid[0], *valid[0], config, schema);
      report.per_field = self.per_field;
    }
    return report;
  }

  std::vector<AgreementReport> pairs;
  for (std::size_t i = 0; i < valid.size(); ++i)
    for (std::size_t j = i + 1; j < valid.size(); ++j)
      pairs.push_back(score_pair(*valid[i], *valid[j], config, schema));

  std::set<std::string> required_fields;
  if (artifact_task(valid.front()->artifact) == TaskKind::extract) {
    for (const auto& spec : schema.fields)
      if (spec.required) required_fields.insert(spec.name);
  } else if (artifact_task(valid.front()->artifact) != TaskKind::summarize) {
    required_fields = {"movement", "risk"};
  }

  AgreementReport report;
  report.threshold_used = config.accept_threshold;
  const auto& names = pairs.front().per_field;
  double overall_sum = 0.0;
  bool required_zero = false;
  for (std::size_t f = 0; f < names.size(); ++f) {
    double sum = 0.0;
    for (const auto& p : pairs) sum += p.per_field[f].second;
    const double mean = sum / static_cast<double>(pairs.size());
    report.per_field.emplace_back(names[f].first, mean);
    if (mean < config.field_threshold) report.contested_fields.push_back(names[f].first);
    if (required_fields.count(names[f].first) && mean == 0.0) required_zero = true;
  }
  for (const auto& p : pairs) overall_sum += p.overall;
  report.overall = overall_sum / static_cast<double>(pairs.size());
  report.passed = report.overall >= config.accept_threshold && !required_zero;
  return report;
}

std::vector<NormalizedCandidate> rank_candidates(
    const std::vector<NormalizedCandidate>& candidates, const AgreementConfig& config,
    const ExtractionSchema& schema, const std::vector<std::string>& priority_order) {
  struct Key {
    bool valid;
    double mean_agreement;
    std::size_t priority;
    std::string backend_id;
    std::size_t index;
  };
  auto priority_of = [&](const std::string& backend_id) {
    for (std::size_t i = 0; i < priority_order.size(); ++i)
      if (priority_order[i] == backend_id) return i;
    return priority_order.size();
  };

  std::vector<Key> keys;
  keys.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    double mean = 0.0;
    if (c.valid) {
      double sum = 0.0;
      std::size_t others = 0;
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (j == i || !candidates[j].valid) continue;
        sum += score_pair(c, candidates[j], config, schema).overall;
        ++others;
      }
      mean = others > 0 ? sum / static_cast<double>(others) : 1.0;
    }
    keys.push_back({c.valid, mean, priority_of(c.backend_id), c.backend_id, i});
  }
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    if (a.valid != b.valid) return a.valid;
    if (a.mean_agreement != b.mean_agreement) return a.mean_agreement > b.mean_agreement;
    if (a.priority != b.priority) return a.priority < b.priority;
    return a.backend_id < b.backend_id;
  });

  std::vector<NormalizedCandidate> ranked;
  ranked.reserve(candidates.size());
  for (const auto& key : keys) ranked.push_back(candidates[key.index]);
  return ranked;
}

}  // namespace guardian
