#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "guardian/json_types.hpp"

namespace guardian {

enum class TaskKind { summarize, extract, weak_label, zone_plausibility };

std::string task_slug(TaskKind task);
std::optional<TaskKind> task_from_slug(std::string_view slug);

enum class FieldKind { text, timestamp_text, integer, list_of_text, list_of_record };

std::string field_kind_name(FieldKind kind);
std::optional<FieldKind> field_kind_from_name(std::string_view name);

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::text;
  bool required = false;
  // Sub-keys for list_of_record fields, in serialization order.
  std::vector<std::string> record_keys;

  ojson empty_default() const;
};

struct ExtractionSchema {
  std::string schema_version;
  std::vector<FieldSpec> fields;

  const FieldSpec* find(std::string_view name) const;
  std::size_t required_count() const;
  // Field names are unique and every name is nonempty.
  bool well_formed() const;

  static ExtractionSchema from_json(const ojson& doc);
  ojson to_json() const;
};

/// The canonical Guardian extraction schema, version "guardian-x1".
ExtractionSchema default_extraction_schema();

// ---------------------------------------------------------------------------
// Artifacts

struct SummaryArtifact {
  std::vector<std::string> bullets;
  bool operator==(const SummaryArtifact&) const = default;
};

inline constexpr std::size_t kSummaryBulletCount = 5;
inline constexpr std::size_t kSummaryBulletMaxChars = 160;
inline constexpr const char* kSummaryPlaceholder = "(no information)";

using RecordValue = std::vector<std::pair<std::string, std::string>>;
using FieldValue = std::variant<std::monostate, std::string, std::int64_t,
                                std::vector<std::string>, std::vector<RecordValue>>;

struct ExtractionArtifact {
  std::string schema_version;
  // Kept in schema field order; constructed complete (one entry per field).
  std::vector<std::pair<std::string, FieldValue>> values;

  const FieldValue* find(std::string_view name) const;
  bool operator==(const ExtractionArtifact&) const = default;
};

enum class Movement { stationary, local, regional, long_range, unknown };
enum class Risk { low, moderate, high, critical, unknown };

std::string movement_name(Movement m);
std::string risk_name(Risk r);
std::optional<Movement> movement_from_string(std::string_view s);
std::optional<Risk> risk_from_string(std::string_view s);
std::vector<std::string> movement_vocabulary();
std::vector<std::string> risk_vocabulary();

inline constexpr std::size_t kRationaleMaxChars = 300;

struct WeakLabelArtifact {
  Movement movement = Movement::unknown;
  Risk risk = Risk::unknown;
  double confidence = 0.5;
  std::string rationale;
  bool operator==(const WeakLabelArtifact&) const = default;
};

using Artifact = std::variant<SummaryArtifact, ExtractionArtifact, WeakLabelArtifact>;

TaskKind artifact_task(const Artifact& artifact);

/// Fully-defaulted artifact for a task: five placeholder bullets, all
/// empty-default fields, or an unknown/unknown label at neutral confidence.
Artifact empty_artifact(TaskKind task, const ExtractionSchema& schema);

// ---------------------------------------------------------------------------
// Cases and zones

struct ZoneCandidate {
  std::string zone_id;
  double area_km2 = 1.0;
  double priority = 0.0;
  std::optional<double> rl_score;
  std::string description;
};

struct CaseRecord {
  std::string case_id;
  std::string narrative;
  std::vector<ZoneCandidate> zones;
  std::optional<ExtractionArtifact> ground_truth;
  std::map<std::string, std::string> metadata;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string field;
  std::string reason;
  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  bool pass = true;
  std::vector<Violation> violations;
};

/// Deterministic, side-effect-free structural validation. Violations are
/// data, not errors; summaries ignore the schema argument.
ValidationReport validate_artifact(const Artifact& artifact,
                                   const ExtractionSchema& schema);

// ---------------------------------------------------------------------------
// Serialization (stable key order everywhere)

ojson field_value_to_json(const FieldValue& value);
FieldValue field_value_from_json(const ojson& value, const FieldSpec& spec);

ojson artifact_to_json(const Artifact& artifact);
Artifact artifact_from_json(TaskKind task, const ojson& doc,
                            const ExtractionSchema& schema);

ojson zone_to_json(const ZoneCandidate& zone);
ZoneCandidate zone_from_json(const ojson& doc);

ojson case_to_json(const CaseRecord& rec);
CaseRecord case_from_json(const ojson& doc, const ExtractionSchema& schema);

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Loads a corpus file: a JSON-lines file of CaseRecord objects, a single
/// JSON case object, or a JSON array of them. Throws CorpusError with the
/// first parse diagnostic on malformed input, duplicate ids, or empty
/// narratives.
std::vector<CaseRecord> load_corpus(const std::string& path,
                                    const ExtractionSchema& schema);

}  // namespace guardian
