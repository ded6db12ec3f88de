#include "guardian/normalize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "guardian/text.hpp"

namespace guardian {

// ---------------------------------------------------------------------------
// Recovery ladder

namespace {

std::optional<ojson> try_parse(const std::string& s) {
  if (text::trim(s).empty()) return std::nullopt;
  ojson doc = ojson::parse(s, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  return doc;
}

/// Content between the first fence pair (the opening marker's language tag is
/// skipped); text without a fence passes through unchanged.
std::string strip_fences(const std::string& s) {
  const std::size_t open = s.find("```");
  if (open == std::string::npos) return s;
  std::size_t content_start = s.find('\n', open);
  if (content_start == std::string::npos) return s;
  ++content_start;
  const std::size_t close = s.find("```", content_start);
  const std::string content = close == std::string::npos
                                  ? s.substr(content_start)
                                  : s.substr(content_start, close - content_start);
  return text::trim(content);
}

/// First balanced {...} substring; brace counting is aware of double-quoted
/// strings and backslash escapes.
std::optional<std::string> first_balanced_object(const std::string& s) {
  std::size_t start = std::string::npos;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      if (depth == 0) start = i;
      ++depth;
    } else if (c == '}') {
      if (depth > 0 && --depth == 0)
        return s.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

/// Removes trailing commas before } or ] and converts single-quoted strings
/// to double-quoted ones (escaping any embedded double quote). Apostrophes
/// inside double-quoted strings are left alone.
std::string lenient_fixes(const std::string& s) {
  std::string converted;
  converted.reserve(s.size());
  bool in_double = false;
  bool in_single = false;
  bool escaped = false;
  for (char c : s) {
    if (escaped) {
      converted.push_back(c);
      escaped = false;
      continue;
    }
    if (c == '\\') {
      converted.push_back(c);
      escaped = true;
      continue;
    }
    if (in_double) {
      if (c == '"') in_double = false;
      converted.push_back(c);
      continue;
    }
    if (in_single) {
      if (c == '\'') {
        in_single = false;
        converted.push_back('"');
      } else if (c == '"') {
        converted.append("\\\"");
      } else {
        converted.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_double = true;
      converted.push_back(c);
    } else if (c == '\'') {
      in_single = true;
      converted.push_back('"');
    } else {
      converted.push_back(c);
    }
  }

  // Trailing commas: drop a comma whose next non-whitespace char closes a
  // container. String-aware second pass.
  std::string out;
  out.reserve(converted.size());
  in_double = false;
  escaped = false;
  for (std::size_t i = 0; i < converted.size(); ++i) {
    const char c = converted[i];
    if (in_double) {
      out.push_back(c);
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_double = false;
      continue;
    }
    if (c == '"') {
      in_double = true;
      out.push_back(c);
      continue;
    }
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < converted.size() &&
             std::isspace(static_cast<unsigned char>(converted[j])))
        ++j;
      if (j < converted.size() && (converted[j] == '}' || converted[j] == ']'))
        continue;  // drop the comma
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

RecoverOutcome recover_json(const std::string& raw_text) {
  RecoverOutcome outcome;

  outcome.parse_path.push_back(kStepDirect);
  if (auto doc = try_parse(raw_text)) {
    outcome.doc = std::move(doc);
    return outcome;
  }

  outcome.parse_path.push_back(kStepFenceStrip);
  const std::string defenced = strip_fences(raw_text);
  if (auto doc = try_parse(defenced)) {
    outcome.doc = std::move(doc);
    return outcome;
  }

  outcome.parse_path.push_back(kStepBalancedScan);
  const std::optional<std::string> balanced = first_balanced_object(raw_text);
  if (balanced) {
    if (auto doc = try_parse(*balanced)) {
      outcome.doc = std::move(doc);
      return outcome;
    }
  }

  outcome.parse_path.push_back(kStepLenientFix);
  const std::string candidate = balanced ? *balanced : defenced;
  if (auto doc = try_parse(lenient_fixes(candidate))) {
    outcome.doc = std::move(doc);
    return outcome;
  }
  // The quote conversion may reveal an object the earlier scan could not see
  // (single-quoted strings hid the braces); rescan once on the fixed text.
  if (auto rescanned = first_balanced_object(lenient_fixes(raw_text))) {
    if (auto doc = try_parse(*rescanned)) {
      outcome.doc = std::move(doc);
      return outcome;
    }
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Summary normalization

NormalizedCandidate normalize_summary(const std::string& raw_text,
                                      const std::string& backend_id) {
  NormalizedCandidate candidate;
  candidate.backend_id = backend_id;

  std::vector<std::string> bullets;
  for (const auto& line : text::split_lines(raw_text)) {
    std::string cleaned = text::collapse_ws(line);
    if (cleaned.empty()) continue;
    bullets.push_back(text::truncate(cleaned, kSummaryBulletMaxChars));
  }
  if (bullets.size() > kSummaryBulletCount) {
    candidate.notes.push_back(
        "truncated:" + std::to_string(bullets.size() - kSummaryBulletCount));
    bullets.resize(kSummaryBulletCount);
  } else if (bullets.size() < kSummaryBulletCount) {
    candidate.notes.push_back(
        "padded:" + std::to_string(kSummaryBulletCount - bullets.size()));
    while (bullets.size() < kSummaryBulletCount)
      bullets.push_back(kSummaryPlaceholder);
  }
  candidate.artifact = SummaryArtifact{std::move(bullets)};
  candidate.valid = true;
  return candidate;
}

// ---------------------------------------------------------------------------
// Extraction coercion

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

std::string scalar_to_text(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string normalize_text_value(const ojson& v) {
  return text::collapse_ws(scalar_to_text(v));
}

FieldValue coerce_field(const ojson& raw, const FieldSpec& spec,
                        std::vector<std::string>& notes) {
  auto note_coerced = [&] { notes.push_back("coerced:" + spec.name); };
  switch (spec.kind) {
    case FieldKind::text:
    case FieldKind::timestamp_text: {
      if (raw.is_string()) return normalize_text_value(raw);
      if (raw.is_array()) {
        // list where a scalar is expected: take the first element
        note_coerced();
        if (!raw.empty()) return normalize_text_value(raw[0]);
        return std::string();
      }
      if (raw.is_null()) {
        notes.push_back("defaulted:" + spec.name);
        return std::string();
      }
      note_coerced();
      return normalize_text_value(raw);
    }
    case FieldKind::integer: {
      if (raw.is_number_integer()) return raw.get<std::int64_t>();
      if (raw.is_number_float()) {
        note_coerced();
        return static_cast<std::int64_t>(raw.get<double>());
      }
      if (raw.is_string() && all_digits(text::trim(raw.get<std::string>()))) {
        note_coerced();
        return static_cast<std::int64_t>(std::stoll(text::trim(raw.get<std::string>())));
      }
      if (raw.is_array() && !raw.empty()) {
        note_coerced();
        return coerce_field(raw[0], spec, notes);
      }
      if (!raw.is_null()) notes.push_back("uncoercible:" + spec.name);
      return std::monostate{};
    }
    case FieldKind::list_of_text: {
      std::vector<std::string> out;
      if (raw.is_array()) {
        for (const auto& item : raw)
          if (!item.is_null()) out.push_back(normalize_text_value(item));
      } else if (!raw.is_null()) {
        // scalar where a list is expected: singleton list
        note_coerced();
        out.push_back(normalize_text_value(raw));
      }
      return out;
    }
    case FieldKind::list_of_record: {
      std::vector<RecordValue> out;
      auto coerce_record = [&](const ojson& item) -> std::optional<RecordValue> {
        if (!item.is_object()) {
          notes.push_back("uncoercible:" + spec.name + " element");
          return std::nullopt;
        }
        RecordValue rec;
        for (const auto& key : spec.record_keys) {
          if (item.contains(key) && !item.at(key).is_null())
            rec.emplace_back(key, normalize_text_value(item.at(key)));
          else
            rec.emplace_back(key, "");
        }
        for (const auto& [k, v] : item.items()) {
          (void)v;
          if (std::find(spec.record_keys.begin(), spec.record_keys.end(), k) ==
              spec.record_keys.end())
            notes.push_back("dropped:" + spec.name + "." + k);
        }
        return rec;
      };
      if (raw.is_array()) {
        for (const auto& item : raw)
          if (auto rec = coerce_record(item)) out.push_back(std::move(*rec));
      } else if (raw.is_object()) {
        note_coerced();
        if (auto rec = coerce_record(raw)) out.push_back(std::move(*rec));
      } else if (!raw.is_null()) {
        notes.push_back("uncoercible:" + spec.name);
      }
      return out;
    }
  }
  return std::monostate{};
}

}  // namespace

CoercionOutcome coerce_extraction(const ojson& doc, const ExtractionSchema& schema) {
  CoercionOutcome outcome;
  outcome.artifact.schema_version = schema.schema_version;
  for (const auto& spec : schema.fields) {
    if (doc.contains(spec.name)) {
      outcome.artifact.values.emplace_back(
          spec.name, coerce_field(doc.at(spec.name), spec, outcome.notes));
    } else {
      outcome.notes.push_back("defaulted:" + spec.name);
      outcome.artifact.values.emplace_back(
          spec.name, field_value_from_json(spec.empty_default(), spec));
    }
  }
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (!schema.find(key)) outcome.notes.push_back("dropped:" + key);
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Weak-label normalization

SynonymTable SynonymTable::builtin() {
  SynonymTable table;
  table.movement = {
      {"staying put", "stationary"}, {"not moving", "stationary"},
      {"immobile", "stationary"},    {"static", "stationary"},
      {"at home", "stationary"},     {"sheltering", "stationary"},
      {"nearby", "local"},           {"in the area", "local"},
      {"neighborhood", "local"},     {"same town", "local"},
      {"walking distance", "local"}, {"on foot nearby", "local"},
      {"crossed town", "regional"},  {"next county", "regional"},
      {"within the region", "regional"}, {"nearby city", "regional"},
      {"intercity", "regional"},     {"across the county", "regional"},
      {"fled the state", "long_range"},  {"out of state", "long_range"},
      {"interstate", "long_range"},  {"cross country", "long_range"},
      {"long distance", "long_range"},   {"far away", "long_range"},
      {"unclear", "unknown"},        {"uncertain", "unknown"},
      {"cannot tell", "unknown"},    {"no information", "unknown"},
  };
  table.risk = {
      {"minimal", "low"},        {"minor", "low"},
      {"safe", "low"},           {"negligible", "low"},
      {"slight", "low"},         {"medium", "moderate"},
      {"elevated", "moderate"},  {"concerning", "moderate"},
      {"notable", "moderate"},   {"guarded", "moderate"},
      {"serious", "high"},       {"urgent", "high"},
      {"dangerous", "high"},     {"significant", "high"},
      {"grave", "critical"},     {"severe", "critical"},
      {"extreme", "critical"},   {"life threatening", "critical"},
      {"emergency", "critical"}, {"imminent danger", "critical"},
      {"unclear", "unknown"},    {"uncertain", "unknown"},
      {"cannot tell", "unknown"},
  };
  return table;
}

SynonymTable SynonymTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open synonym table: " + path);
  ojson doc = ojson::parse(in);
  SynonymTable table;
  if (doc.contains("movement"))
    for (const auto& [term, label] : doc.at("movement").items())
      table.movement[text::canonical(term)] = label.get<std::string>();
  if (doc.contains("risk"))
    for (const auto& [term, label] : doc.at("risk").items())
      table.risk[text::canonical(term)] = label.get<std::string>();
  return table;
}

namespace {

template <typename Enum>
Enum map_label(const ojson& doc, const char* key,
               const std::map<std::string, std::string>& synonyms,
               std::optional<Enum> (*parse)(std::string_view), Enum fallback,
               std::vector<std::string>& notes) {
  if (!doc.contains(key) || doc.at(key).is_null()) {
    notes.push_back(std::string("missing:") + key);
    return fallback;
  }
  const std::string term =
      text::canonical(doc.at(key).is_string() ? doc.at(key).get<std::string>()
                                              : doc.at(key).dump());
  if (auto direct = parse(term)) return *direct;
  if (auto it = synonyms.find(term); it != synonyms.end()) {
    if (auto mapped = parse(it->second)) {
      notes.push_back(std::string("synonym:") + key + ":" + term + "->" + it->second);
      return *mapped;
    }
  }
  notes.push_back(std::string("unmapped:") + key);
  return fallback;
}

}  // namespace

WeakLabelOutcome normalize_weak_label(const ojson& doc, const SynonymTable& table) {
  WeakLabelOutcome outcome;
  outcome.artifact.movement =
      map_label<Movement>(doc, "movement", table.movement, &movement_from_string,
                          Movement::unknown, outcome.notes);
  outcome.artifact.risk = map_label<Risk>(doc, "risk", table.risk, &risk_from_string,
                                          Risk::unknown, outcome.notes);

  if (doc.contains("confidence") && doc.at("confidence").is_number()) {
    double c = doc.at("confidence").get<double>();
    if (c < 0.0 || c > 1.0) outcome.notes.push_back("clamped:confidence");
    outcome.artifact.confidence = std::min(1.0, std::max(0.0, c));
  } else if (doc.contains("confidence") && doc.at("confidence").is_string() &&
             !doc.at("confidence").get<std::string>().empty()) {
    try {
      double c = std::stod(doc.at("confidence").get<std::string>());
      if (c < 0.0 || c > 1.0) outcome.notes.push_back("clamped:confidence");
      outcome.artifact.confidence = std::min(1.0, std::max(0.0, c));
      outcome.notes.push_back("coerced:confidence");
    } catch (const std::exception&) {
      outcome.artifact.confidence = 0.5;
      outcome.notes.push_back("defaulted:confidence");
    }
  } else {
    outcome.artifact.confidence = 0.5;
    outcome.notes.push_back("defaulted:confidence");
  }

  if (doc.contains("rationale") && doc.at("rationale").is_string())
    outcome.artifact.rationale =
        text::truncate(text::trim(doc.at("rationale").get<std::string>()),
                       kRationaleMaxChars);
  return outcome;
}

}  // namespace guardian
