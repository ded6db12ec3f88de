#pragma once

#include <optional>
#include <string>
#include <vector>

#include "guardian/case_model.hpp"

namespace guardian {

/// A candidate transformed into a comparable, schema-conforming artifact.
/// valid=true implies the artifact passes validate_artifact; parse_path lists
/// every recovery step attempted for JSON tasks.
struct NormalizedCandidate {
  std::string backend_id;
  Artifact artifact;
  std::vector<std::string> parse_path;
  bool valid = false;
  std::vector<std::string> notes;
};

// Step names recorded in parse_path, in ladder order.
inline constexpr const char* kStepDirect = "direct";
inline constexpr const char* kStepFenceStrip = "fence_strip";
inline constexpr const char* kStepBalancedScan = "balanced_scan";
inline constexpr const char* kStepLenientFix = "lenient_fix";
inline constexpr const char* kStepRepairPrompt = "repair_prompt";
inline constexpr const char* kStepDefaulted = "defaulted";

struct RecoverOutcome {
  std::optional<ojson> doc;
  std::vector<std::string> parse_path;
  bool ok() const { return doc.has_value(); }
};

/// Deterministic JSON recovery ladder, cheapest step first:
///   1. direct parse
///   2. code-fence strip, then parse
///   3. first balanced {...} substring (string-aware brace scan), then parse
///   4. lenient fixes (trailing commas removed, unambiguous single quotes
///      converted), then parse
/// Every attempted step is recorded; failure is a value, not an exception.
RecoverOutcome recover_json(const std::string& raw_text);

/// Bullet-count enforcement: trims and collapses whitespace, truncates each
/// bullet to 160 chars, keeps the first five, pads with "(no information)".
/// Total: always yields a valid SummaryArtifact.
NormalizedCandidate normalize_summary(const std::string& raw_text,
                                      const std::string& backend_id = "");

struct CoercionOutcome {
  ExtractionArtifact artifact;
  std::vector<std::string> notes;
};

/// Schema-driven type coercion: empty defaults for missing fields, scalars
/// wrapped into singleton lists, first element taken where a scalar is
/// expected, digit strings parsed for integer fields, unknown keys dropped.
/// The result always validates against the schema.
CoercionOutcome coerce_extraction(const ojson& doc, const ExtractionSchema& schema);

/// Case-insensitive synonym mapping onto the closed label vocabularies.
struct SynonymTable {
  std::map<std::string, std::string> movement;
  std::map<std::string, std::string> risk;

  static SynonymTable builtin();
  static SynonymTable load(const std::string& path);
};

struct WeakLabelOutcome {
  WeakLabelArtifact artifact;
  std::vector<std::string> notes;
};

/// Closed-set mapping: canonical labels pass through, synonyms map through
/// the table, anything else becomes `unknown` with a note. Confidence is
/// clamped to [0,1] (missing -> 0.5); the rationale is trimmed to 300 chars.
WeakLabelOutcome normalize_weak_label(const ojson& doc, const SynonymTable& table);

}  // namespace guardian
