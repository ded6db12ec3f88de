#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "guardian/backends.hpp"

namespace guardian {

/// One scripted reply. Fault directives reproduce the failure modes the live
/// deployment exhibits: malformed JSON, timeouts, server errors, free-form
/// garbage, and overconfident labels.
struct Directive {
  enum class Kind { text, malformed_json, timeout, http_5xx, garbage, overconfident_label };
  Kind kind = Kind::text;
  std::string text;

  static Directive from_json(const ojson& doc);
  ojson to_json() const;
};

// Fixed fault fixtures. The malformed fixture has an unbalanced brace so no
// deterministic recovery step can rescue it.
inline constexpr const char* kMalformedJsonFixture =
    "{\"subject_name\": \"Unknown\", \"last_seen_location\": \"Maple Park\", ";
inline constexpr const char* kGarbageFixture = "%%% no structured output %%%";
inline constexpr const char* kOverconfidentLabelFixture =
    "{\"movement\":\"long_range\",\"risk\":\"critical\",\"confidence\":0.99,"
    "\"rationale\":\"Certainly fled far away.\"}";

/// Directive lists keyed by "role:case_id".
struct ScriptTable {
  std::map<std::string, std::vector<Directive>> entries;

  static ScriptTable from_json(const ojson& doc);
  static ScriptTable load(const std::string& path);
  ojson to_json() const;
};

/// Deterministic replay transport. Each instance owns its replay cursors, so
/// two backends sharing one script file replay independently. Missing keys
/// yield an ok reply with empty text (invalid downstream); calls past the end
/// of a directive list replay the final directive.
class ScriptedTransport final : public Transport {
 public:
  ScriptedTransport(ScriptTable table, std::shared_ptr<Clock> clock);

  AttemptResult attempt(const BackendProfile& profile, const ChatRequest& request,
                        std::int64_t timeout_ms, const CallTag& tag) override;

 private:
  ScriptTable table_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::map<std::string, std::size_t> cursors_;
};

/// Builds a ready-to-use scripted backend handle.
BackendHandle scripted_backend(BackendProfile profile, ScriptTable script,
                               std::shared_ptr<Clock> clock, std::uint64_t run_seed = 0);

}  // namespace guardian
