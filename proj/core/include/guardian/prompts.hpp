#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "guardian/backends.hpp"
#include "guardian/case_model.hpp"

namespace guardian {

struct NormalizedCandidate;  // normalize.hpp

struct FormatContract {
  enum class Kind { json_only, five_bullets, single_field_json };
  Kind kind = Kind::json_only;
  std::vector<std::string> allowed_keys;
  std::vector<std::string> allowed_values;
  std::optional<int> max_lines;
};

/// Versioned prompt template. user_pattern carries named placeholders such as
/// {narrative}, {schema_json}, {candidates_json}, {field_name}, {options};
/// rendering with all placeholders bound leaves no residual markers.
struct PromptTemplate {
  std::string template_id;
  std::string version;
  std::string system_text;
  std::string user_pattern;
  FormatContract contract;

  static PromptTemplate from_json(const ojson& doc);
  ojson to_json() const;
};

inline constexpr std::size_t kRefereeNarrativePrefixChars = 600;
inline constexpr std::size_t kRepairInputMaxChars = 4000;
inline constexpr std::size_t kTiebreakRationaleMaxChars = 200;

/// Template store plus deterministic rendering. Built-in templates cover every
/// task; a template directory (one JSON file per template_id) overrides or
/// extends them at startup. Rendering is pure: identical inputs yield a
/// byte-identical ChatRequest.
class PromptLibrary {
 public:
  static PromptLibrary builtin();

  /// Loads every *.json file in dir, replacing builtin templates that share a
  /// template_id.
  void load_dir(const std::string& dir);

  const PromptTemplate& get(const std::string& template_id) const;
  std::map<std::string, std::string> versions() const;

  ChatRequest render_task_prompt(TaskKind task, const CaseRecord& rec,
                                 const ExtractionSchema& schema) const;
  ChatRequest render_referee_prompt(TaskKind task,
                                    const std::vector<NormalizedCandidate>& candidates,
                                    const std::vector<std::string>& disagreements,
                                    const std::string& narrative) const;
  ChatRequest render_tiebreak_prompt(const std::string& field_name,
                                     const std::vector<std::string>& options) const;
  ChatRequest render_repair_prompt(const std::string& raw_text,
                                   const ExtractionSchema& schema) const;

  /// Total rendered characters per request; overruns truncate the narrative
  /// binding, never the contract text.
  std::size_t char_budget = 12000;
  GenParams gen_params;

 private:
  ChatRequest assemble(const PromptTemplate& tmpl,
                       std::map<std::string, std::string> bindings) const;
  std::map<std::string, PromptTemplate> templates_;
};

/// Deterministic post-processing bound to the task's contract: bullet-line
/// extraction with a hard stop for summaries; code-fence and outer-prose
/// stripping for JSON tasks. Pure text transform, idempotent.
std::string postprocess(TaskKind task, const std::string& raw_text);

std::string task_template_id(TaskKind task);
std::string referee_template_id(TaskKind task);

}  // namespace guardian
