#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "guardian/clock.hpp"
#include "guardian/json_types.hpp"

namespace guardian {

enum class BackendRole { summarizer, extractor, weak_labeler, referee };
enum class BackendKind { http, scripted };

std::string role_name(BackendRole role);
std::optional<BackendRole> role_from_name(std::string_view name);

struct RetryPolicy {
  int max_retries = 3;
  std::int64_t base_delay_ms = 500;
  double factor = 2.0;
  // Full jitter: retry k (1-based) sleeps uniform in [0, base*factor^(k-1)].
  bool retry_on_timeout = true;
  bool retry_on_http_5xx = true;
  bool retry_on_http_429 = true;
  bool retry_on_connect_error = true;
};

struct RateLimitPolicy {
  std::int64_t capacity = 120;
  double refill_per_sec = 60.0;
};

struct GenParams {
  double temperature = 0.2;
  int max_tokens = 512;
  std::vector<std::string> stop;
  bool operator==(const GenParams&) const = default;
};

struct BackendProfile {
  std::string backend_id;
  BackendRole role = BackendRole::extractor;
  BackendKind kind = BackendKind::scripted;
  std::string base_url;  // http only, e.g. "http://127.0.0.1"
  std::string model_name;
  int port = 0;  // http only
  std::string bearer_token;
  GenParams gen_params;
  RetryPolicy resiliency;
  RateLimitPolicy rate;
  std::int64_t timeout_ms = 20000;
  std::string script_path;  // scripted only
};

enum class ChatRole { system, user, assistant };

struct ChatMessage {
  ChatRole role = ChatRole::user;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  GenParams gen_params;
  bool operator==(const ChatRequest&) const = default;
};

enum class CallOutcome { ok, timed_out, exhausted_retries, deadline_expired };

std::string outcome_name(CallOutcome outcome);

struct BackendResponse {
  std::string backend_id;
  std::string raw_text;
  std::int64_t latency_ms = 0;
  int attempts = 0;
  CallOutcome outcome = CallOutcome::ok;
  std::string error_note;
  std::vector<std::int64_t> retry_sleeps_ms;

  bool ok() const { return outcome == CallOutcome::ok; }
};

/// Identifies one call for scripted replay and per-episode jitter seeding.
struct CallTag {
  std::string role;
  std::string case_id;
  std::string purpose = "task";  // task | referee | tiebreak:<field> | repair

  std::string script_key() const { return role + ":" + case_id; }
};

// ---------------------------------------------------------------------------
// Transport

struct AttemptResult {
  enum class Kind { ok, timeout, http_5xx, http_429, connect_error };
  Kind kind = Kind::ok;
  std::string text;
  std::string note;
};

/// One wire-level attempt. Implementations must respect timeout_ms and must
/// not block past it.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual AttemptResult attempt(const BackendProfile& profile, const ChatRequest& request,
                                std::int64_t timeout_ms, const CallTag& tag) = 0;
};

// ---------------------------------------------------------------------------
// Rate limiting (token bucket; one token per call)

class RateLimiter {
 public:
  RateLimiter(RateLimitPolicy policy, std::shared_ptr<Clock> clock);

  /// Waits for a token, never sleeping past the deadline. Returns false when
  /// the budget expired first.
  bool acquire(const DeadlineBudget& deadline);

 private:
  RateLimitPolicy policy_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  double tokens_;
  std::int64_t last_refill_ms_;
};

// ---------------------------------------------------------------------------
// Backend handle

struct BackendHandle {
  BackendProfile profile;
  std::shared_ptr<Transport> transport;
  std::shared_ptr<RateLimiter> limiter;
  std::shared_ptr<Clock> clock;
  std::uint64_t run_seed = 0;
};

/// Issues one request with retry/backoff per the profile's RetryPolicy.
/// Never sleeps past the deadline instant; the attempt count includes the
/// first try.
BackendResponse complete(const BackendHandle& handle, const ChatRequest& request,
                         const DeadlineBudget& deadline, const CallTag& tag);

using CompleteFn = std::function<BackendResponse(
    const BackendHandle&, const ChatRequest&, const DeadlineBudget&, const CallTag&)>;

// ---------------------------------------------------------------------------
// OpenAI-compatible wire format

/// Chat-completions body: {"model","messages","temperature","max_tokens"[,"stop"]}.
ojson build_http_body(const BackendProfile& profile, const ChatRequest& request);

/// Reads choices[0].message.content; nullopt when the reply shape is wrong.
std::optional<std::string> parse_chat_completion_reply(const std::string& body);

inline constexpr const char* kChatCompletionsPath = "/v1/chat/completions";

}  // namespace guardian
