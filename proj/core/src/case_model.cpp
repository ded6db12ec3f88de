#include "guardian/case_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "guardian/text.hpp"

namespace guardian {

std::string task_slug(TaskKind task) {
  switch (task) {
    case TaskKind::summarize: return "summarize";
    case TaskKind::extract: return "extract";
    case TaskKind::weak_label: return "weak_label";
    case TaskKind::zone_plausibility: return "zone_plausibility";
  }
  return "unknown";
}

std::optional<TaskKind> task_from_slug(std::string_view slug) {
  if (slug == "summarize") return TaskKind::summarize;
  if (slug == "extract") return TaskKind::extract;
  if (slug == "weak_label") return TaskKind::weak_label;
  if (slug == "zone_plausibility") return TaskKind::zone_plausibility;
  return std::nullopt;
}

std::string field_kind_name(FieldKind kind) {
  switch (kind) {
    case FieldKind::text: return "text";
    case FieldKind::timestamp_text: return "timestamp-text";
    case FieldKind::integer: return "integer";
    case FieldKind::list_of_text: return "list-of-text";
    case FieldKind::list_of_record: return "list-of-record";
  }
  return "text";
}

std::optional<FieldKind> field_kind_from_name(std::string_view name) {
  if (name == "text") return FieldKind::text;
  if (name == "timestamp-text") return FieldKind::timestamp_text;
  if (name == "integer") return FieldKind::integer;
  if (name == "list-of-text") return FieldKind::list_of_text;
  if (name == "list-of-record") return FieldKind::list_of_record;
  return std::nullopt;
}

ojson FieldSpec::empty_default() const {
  switch (kind) {
    case FieldKind::text:
    case FieldKind::timestamp_text: return "";
    case FieldKind::integer: return nullptr;
    case FieldKind::list_of_text:
    case FieldKind::list_of_record: return ojson::array();
  }
  return nullptr;
}

const FieldSpec* ExtractionSchema::find(std::string_view name) const {
  for (const auto& f : fields)
    if (f.name == name) return &f;
  return nullptr;
}

std::size_t ExtractionSchema::required_count() const {
  std::size_t n = 0;
  for (const auto& f : fields) n += f.required ? 1 : 0;
  return n;
}

bool ExtractionSchema::well_formed() const {
  std::set<std::string> seen;
  for (const auto& f : fields) {
    if (f.name.empty()) return false;
    if (!seen.insert(f.name).second) return false;
  }
  return !schema_version.empty();
}

ExtractionSchema ExtractionSchema::from_json(const ojson& doc) {
  ExtractionSchema schema;
  schema.schema_version = doc.at("schema_version").get<std::string>();
  for (const auto& f : doc.at("fields")) {
    FieldSpec spec;
    spec.name = f.at("name").get<std::string>();
    auto kind = field_kind_from_name(f.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown field kind for " + spec.name);
    spec.kind = *kind;
    spec.required = f.value("required", false);
    if (f.contains("record_keys"))
      spec.record_keys = f.at("record_keys").get<std::vector<std::string>>();
    schema.fields.push_back(std::move(spec));
  }
  if (!schema.well_formed())
    throw std::runtime_error("schema is not well formed (duplicate or empty field names)");
  return schema;
}

ojson ExtractionSchema::to_json() const {
  ojson doc;
  doc["schema_version"] = schema_version;
  doc["fields"] = ojson::array();
  for (const auto& f : fields) {
    ojson fj;
    fj["name"] = f.name;
    fj["kind"] = field_kind_name(f.kind);
    fj["required"] = f.required;
    if (!f.record_keys.empty()) fj["record_keys"] = f.record_keys;
    doc["fields"].push_back(std::move(fj));
  }
  return doc;
}

ExtractionSchema default_extraction_schema() {
  ExtractionSchema schema;
  schema.schema_version = "guardian-x1";
  schema.fields = {
      {"subject_name", FieldKind::text, true, {}},
      {"subject_age", FieldKind::integer, false, {}},
      {"subject_description", FieldKind::text, true, {}},
      {"last_seen_location", FieldKind::text, true, {}},
      {"last_seen_time", FieldKind::timestamp_text, true, {}},
      {"vehicles", FieldKind::list_of_record, false, {"make", "model", "color", "plate"}},
      {"companions", FieldKind::list_of_text, false, {}},
      {"movement_cues", FieldKind::list_of_text, true, {}},
      {"risk_factors", FieldKind::list_of_text, true, {}},
  };
  return schema;
}

// ---------------------------------------------------------------------------

const FieldValue* ExtractionArtifact::find(std::string_view name) const {
  for (const auto& [k, v] : values)
    if (k == name) return &v;
  return nullptr;
}

std::string movement_name(Movement m) {
  switch (m) {
    case Movement::stationary: return "stationary";
    case Movement::local: return "local";
    case Movement::regional: return "regional";
    case Movement::long_range: return "long_range";
    case Movement::unknown: return "unknown";
  }
  return "unknown";
}

std::string risk_name(Risk r) {
  switch (r) {
    case Risk::low: return "low";
    case Risk::moderate: return "moderate";
    case Risk::high: return "high";
    case Risk::critical: return "critical";
    case Risk::unknown: return "unknown";
  }
  return "unknown";
}

std::optional<Movement> movement_from_string(std::string_view s) {
  if (s == "stationary") return Movement::stationary;
  if (s == "local") return Movement::local;
  if (s == "regional") return Movement::regional;
  if (s == "long_range") return Movement::long_range;
  if (s == "unknown") return Movement::unknown;
  return std::nullopt;
}

std::optional<Risk> risk_from_string(std::string_view s) {
  if (s == "low") return Risk::low;
  if (s == "moderate") return Risk::moderate;
  if (s == "high") return Risk::high;
  if (s == "critical") return Risk::critical;
  if (s == "unknown") return Risk::unknown;
  return std::nullopt;
}

std::vector<std::string> movement_vocabulary() {
  return {"stationary", "local", "regional", "long_range", "unknown"};
}

std::vector<std::string> risk_vocabulary() {
  return {"low", "moderate", "high", "critical", "unknown"};
}

TaskKind artifact_task(const Artifact& artifact) {
  if (std::holds_alternative<SummaryArtifact>(artifact)) return TaskKind::summarize;
  if (std::holds_alternative<ExtractionArtifact>(artifact)) return TaskKind::extract;
  return TaskKind::weak_label;
}

Artifact empty_artifact(TaskKind task, const ExtractionSchema& schema) {
  switch (task) {
    case TaskKind::summarize: {
      SummaryArtifact s;
      s.bullets.assign(kSummaryBulletCount, kSummaryPlaceholder);
      return s;
    }
    case TaskKind::extract: {
      ExtractionArtifact e;
      e.schema_version = schema.schema_version;
      for (const auto& f : schema.fields)
        e.values.emplace_back(f.name, field_value_from_json(f.empty_default(), f));
      return e;
    }
    case TaskKind::weak_label:
    case TaskKind::zone_plausibility:
      return WeakLabelArtifact{};
  }
  return WeakLabelArtifact{};
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void validate_summary(const SummaryArtifact& s, ValidationReport& report) {
  if (s.bullets.size() != kSummaryBulletCount) {
    report.violations.push_back(
        {"bullets", "count=" + std::to_string(s.bullets.size())});
  }
  for (std::size_t i = 0; i < s.bullets.size(); ++i) {
    const std::string trimmed = text::trim(s.bullets[i]);
    const std::string tag = "bullets[" + std::to_string(i) + "]";
    if (trimmed.empty()) report.violations.push_back({tag, "empty"});
    if (trimmed.size() > kSummaryBulletMaxChars)
      report.violations.push_back({tag, "length=" + std::to_string(trimmed.size())});
  }
}

bool value_conforms(const FieldValue& value, const FieldSpec& spec) {
  switch (spec.kind) {
    case FieldKind::text:
    case FieldKind::timestamp_text:
      return std::holds_alternative<std::string>(value);
    case FieldKind::integer:
      return std::holds_alternative<std::int64_t>(value) ||
             (!spec.required && std::holds_alternative<std::monostate>(value));
    case FieldKind::list_of_text:
      return std::holds_alternative<std::vector<std::string>>(value);
    case FieldKind::list_of_record: {
      const auto* records = std::get_if<std::vector<RecordValue>>(&value);
      if (!records) return false;
      for (const auto& rec : *records)
        for (const auto& [k, v] : rec)
          if (std::find(spec.record_keys.begin(), spec.record_keys.end(), k) ==
              spec.record_keys.end())
            return false;
      return true;
    }
  }
  return false;
}

void validate_extraction(const ExtractionArtifact& e, const ExtractionSchema& schema,
                         ValidationReport& report) {
  if (e.schema_version != schema.schema_version)
    report.violations.push_back({"schema_version", "mismatch:" + e.schema_version});
  for (const auto& f : schema.fields) {
    const FieldValue* v = e.find(f.name);
    if (!v) {
      if (f.required) report.violations.push_back({f.name, "missing required field"});
      continue;
    }
    if (!value_conforms(*v, f))
      report.violations.push_back({f.name, "type does not match " + field_kind_name(f.kind)});
  }
  for (const auto& [name, value] : e.values) {
    (void)value;
    if (!schema.find(name)) report.violations.push_back({name, "unknown field"});
  }
}

void validate_weak_label(const WeakLabelArtifact& w, ValidationReport& report) {
  if (!(w.confidence >= 0.0 && w.confidence <= 1.0))
    report.violations.push_back({"confidence", "out of [0,1]"});
  if (w.rationale.size() > kRationaleMaxChars)
    report.violations.push_back(
        {"rationale", "length=" + std::to_string(w.rationale.size())});
}

}  // namespace

ValidationReport validate_artifact(const Artifact& artifact,
                                   const ExtractionSchema& schema) {
  ValidationReport report;
  if (const auto* s = std::get_if<SummaryArtifact>(&artifact)) {
    validate_summary(*s, report);
  } else if (const auto* e = std::get_if<ExtractionArtifact>(&artifact)) {
    validate_extraction(*e, schema, report);
  } else if (const auto* w = std::get_if<WeakLabelArtifact>(&artifact)) {
    validate_weak_label(*w, report);
  }
  report.pass = report.violations.empty();
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

ojson field_value_to_json(const FieldValue& value) {
  if (std::holds_alternative<std::monostate>(value)) return nullptr;
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  if (const auto* list = std::get_if<std::vector<std::string>>(&value)) {
    ojson arr = ojson::array();
    for (const auto& item : *list) arr.push_back(item);
    return arr;
  }
  const auto& records = std::get<std::vector<RecordValue>>(value);
  ojson arr = ojson::array();
  for (const auto& rec : records) {
    ojson obj = ojson::object();
    for (const auto& [k, v] : rec) obj[k] = v;
    arr.push_back(std::move(obj));
  }
  return arr;
}

FieldValue field_value_from_json(const ojson& value, const FieldSpec& spec) {
  switch (spec.kind) {
    case FieldKind::text:
    case FieldKind::timestamp_text:
      return value.is_string() ? FieldValue(value.get<std::string>()) : FieldValue(std::string());
    case FieldKind::integer:
      if (value.is_number_integer()) return FieldValue(value.get<std::int64_t>());
      return FieldValue(std::monostate{});
    case FieldKind::list_of_text: {
      std::vector<std::string> out;
      if (value.is_array())
        for (const auto& item : value)
          out.push_back(item.is_string() ? item.get<std::string>() : item.dump());
      return out;
    }
    case FieldKind::list_of_record: {
      std::vector<RecordValue> out;
      if (value.is_array()) {
        for (const auto& item : value) {
          if (!item.is_object()) continue;
          RecordValue rec;
          for (const auto& key : spec.record_keys) {
            if (item.contains(key) && item.at(key).is_string())
              rec.emplace_back(key, item.at(key).get<std::string>());
            else
              rec.emplace_back(key, "");
          }
          out.push_back(std::move(rec));
        }
      }
      return out;
    }
  }
  return FieldValue(std::monostate{});
}

ojson artifact_to_json(const Artifact& artifact) {
  ojson doc;
  if (const auto* s = std::get_if<SummaryArtifact>(&artifact)) {
    doc["bullets"] = s->bullets;
  } else if (const auto* e = std::get_if<ExtractionArtifact>(&artifact)) {
    doc["schema_version"] = e->schema_version;
    ojson values = ojson::object();
    for (const auto& [name, value] : e->values) values[name] = field_value_to_json(value);
    doc["values"] = std::move(values);
  } else if (const auto* w = std::get_if<WeakLabelArtifact>(&artifact)) {
    doc["movement"] = movement_name(w->movement);
    doc["risk"] = risk_name(w->risk);
    doc["confidence"] = w->confidence;
    doc["rationale"] = w->rationale;
  }
  return doc;
}

Artifact artifact_from_json(TaskKind task, const ojson& doc,
                            const ExtractionSchema& schema) {
  switch (task) {
    case TaskKind::summarize: {
      SummaryArtifact s;
      s.bullets = doc.at("bullets").get<std::vector<std::string>>();
      return s;
    }
    case TaskKind::extract: {
      ExtractionArtifact e;
      e.schema_version = doc.at("schema_version").get<std::string>();
      const ojson& values = doc.at("values");
      for (const auto& f : schema.fields) {
        if (values.contains(f.name))
          e.values.emplace_back(f.name, field_value_from_json(values.at(f.name), f));
      }
      return e;
    }
    case TaskKind::weak_label:
    case TaskKind::zone_plausibility: {
      WeakLabelArtifact w;
      auto movement = movement_from_string(doc.at("movement").get<std::string>());
      auto risk = risk_from_string(doc.at("risk").get<std::string>());
      if (!movement || !risk)
        throw std::runtime_error("weak label outside the closed vocabulary");
      w.movement = *movement;
      w.risk = *risk;
      w.confidence = doc.at("confidence").get<double>();
      w.rationale = doc.value("rationale", "");
      return w;
    }
  }
  throw std::runtime_error("unknown task kind");
}

ojson zone_to_json(const ZoneCandidate& zone) {
  ojson doc;
  doc["zone_id"] = zone.zone_id;
  doc["area_km2"] = zone.area_km2;
  doc["priority"] = zone.priority;
  if (zone.rl_score) doc["rl_score"] = *zone.rl_score;
  doc["description"] = zone.description;
  return doc;
}

ZoneCandidate zone_from_json(const ojson& doc) {
  ZoneCandidate zone;
  zone.zone_id = doc.at("zone_id").get<std::string>();
  zone.area_km2 = doc.at("area_km2").get<double>();
  zone.priority = doc.at("priority").get<double>();
  if (doc.contains("rl_score") && !doc.at("rl_score").is_null())
    zone.rl_score = doc.at("rl_score").get<double>();
  zone.description = doc.value("description", "");
  if (!(zone.area_km2 > 0.0))
    throw std::runtime_error("zone " + zone.zone_id + ": area_km2 must be positive");
  if (zone.priority < 0.0 || zone.priority > 1.0)
    throw std::runtime_error("zone " + zone.zone_id + ": priority outside [0,1]");
  if (zone.rl_score && (*zone.rl_score < 0.0 || *zone.rl_score > 1.0))
    throw std::runtime_error("zone " + zone.zone_id + ": rl_score outside [0,1]");
  return zone;
}

ojson case_to_json(const CaseRecord& rec) {
  ojson doc;
  doc["case_id"] = rec.case_id;
  doc["narrative"] = rec.narrative;
  if (!rec.zones.empty()) {
    ojson zones = ojson::array();
    for (const auto& z : rec.zones) zones.push_back(zone_to_json(z));
    doc["zones"] = std::move(zones);
  }
  if (rec.ground_truth) doc["ground_truth"] = artifact_to_json(Artifact(*rec.ground_truth));
  if (!rec.metadata.empty()) {
    ojson meta = ojson::object();
    for (const auto& [k, v] : rec.metadata) meta[k] = v;
    doc["metadata"] = std::move(meta);
  }
  return doc;
}

CaseRecord case_from_json(const ojson& doc, const ExtractionSchema& schema) {
  static const std::set<std::string> allowed = {"case_id", "narrative", "zones",
                                                "ground_truth", "metadata"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (!allowed.count(key)) throw CorpusError("unknown case key: " + key);
  }
  CaseRecord rec;
  rec.case_id = doc.at("case_id").get<std::string>();
  rec.narrative = doc.at("narrative").get<std::string>();
  if (rec.case_id.empty()) throw CorpusError("case_id is empty");
  if (text::trim(rec.narrative).empty())
    throw CorpusError("case " + rec.case_id + ": narrative is empty");
  if (doc.contains("zones"))
    for (const auto& z : doc.at("zones")) rec.zones.push_back(zone_from_json(z));
  if (doc.contains("ground_truth") && !doc.at("ground_truth").is_null())
    rec.ground_truth = std::get<ExtractionArtifact>(
        artifact_from_json(TaskKind::extract, doc.at("ground_truth"), schema));
  if (doc.contains("metadata"))
    for (const auto& [k, v] : doc.at("metadata").items())
      rec.metadata[k] = v.get<std::string>();
  return rec;
}

std::vector<CaseRecord> load_corpus(const std::string& path,
                                    const ExtractionSchema& schema) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  std::vector<CaseRecord> cases;
  auto add_case = [&](const ojson& doc) { cases.push_back(case_from_json(doc, schema)); };

  ojson whole = ojson::parse(content, nullptr, false);
  if (!whole.is_discarded()) {
    if (whole.is_object()) {
      add_case(whole);
    } else if (whole.is_array()) {
      for (const auto& item : whole) add_case(item);
    } else {
      throw CorpusError("corpus document must be an object or array");
    }
  } else {
    // JSON-lines: one case per nonempty line.
    std::size_t lineno = 0;
    for (const auto& line : text::split_lines(content)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      ojson doc = ojson::parse(line, nullptr, false);
      if (doc.is_discarded())
        throw CorpusError(path + ":" + std::to_string(lineno) + ": invalid JSON");
      add_case(doc);
    }
  }

  std::set<std::string> ids;
  for (const auto& rec : cases)
    if (!ids.insert(rec.case_id).second)
      throw CorpusError("duplicate case_id: " + rec.case_id);
  if (cases.empty()) throw CorpusError("corpus is empty: " + path);
  return cases;
}

}  // namespace guardian
