#include "guardian/backends.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "guardian/text.hpp"

namespace guardian {

std::string role_name(BackendRole role) {
  switch (role) {
    case BackendRole::summarizer: return "summarizer";
    case BackendRole::extractor: return "extractor";
    case BackendRole::weak_labeler: return "weak_labeler";
    case BackendRole::referee: return "referee";
  }
  return "extractor";
}

std::optional<BackendRole> role_from_name(std::string_view name) {
  if (name == "summarizer") return BackendRole::summarizer;
  if (name == "extractor") return BackendRole::extractor;
  if (name == "weak_labeler") return BackendRole::weak_labeler;
  if (name == "referee") return BackendRole::referee;
  return std::nullopt;
}

std::string outcome_name(CallOutcome outcome) {
  switch (outcome) {
    case CallOutcome::ok: return "ok";
    case CallOutcome::timed_out: return "timed_out";
    case CallOutcome::exhausted_retries: return "exhausted_retries";
    case CallOutcome::deadline_expired: return "deadline_expired";
  }
  return "ok";
}

RateLimiter::RateLimiter(RateLimitPolicy policy, std::shared_ptr<Clock> clock)
    : policy_(policy),
      clock_(std::move(clock)),
      tokens_(static_cast<double>(policy.capacity)),
      last_refill_ms_(clock_->now_ms()) {}

bool RateLimiter::acquire(const DeadlineBudget& deadline) {
  for (;;) {
    std::int64_t wait_ms = 0;
    {
      std::lock_guard<std::mutex> lock(mu_);
      const std::int64_t now = clock_->now_ms();
      if (now > last_refill_ms_) {
        tokens_ = std::min<double>(
            static_cast<double>(policy_.capacity),
            tokens_ + (now - last_refill_ms_) / 1000.0 * policy_.refill_per_sec);
        last_refill_ms_ = now;
      }
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return true;
      }
      wait_ms = static_cast<std::int64_t>(
          std::ceil((1.0 - tokens_) / policy_.refill_per_sec * 1000.0));
      wait_ms = std::max<std::int64_t>(wait_ms, 1);
    }
    const std::int64_t remaining = deadline.remaining_ms();
    if (remaining <= 0) return false;
    clock_->sleep_ms(std::min(wait_ms, remaining));
  }
}

namespace {

std::mt19937_64 episode_rng(const BackendHandle& handle, const CallTag& tag) {
  std::uint64_t seed = handle.run_seed;
  seed = text::fnv1a64(handle.profile.backend_id, seed ^ 0x9e3779b97f4a7c15ull);
  seed = text::fnv1a64(tag.role, seed);
  seed = text::fnv1a64(tag.case_id, seed);
  seed = text::fnv1a64(tag.purpose, seed);
  return std::mt19937_64(seed);
}

bool retryable(AttemptResult::Kind kind, const RetryPolicy& policy) {
  switch (kind) {
    case AttemptResult::Kind::timeout: return policy.retry_on_timeout;
    case AttemptResult::Kind::http_5xx: return policy.retry_on_http_5xx;
    case AttemptResult::Kind::http_429: return policy.retry_on_http_429;
    case AttemptResult::Kind::connect_error: return policy.retry_on_connect_error;
    case AttemptResult::Kind::ok: return false;
  }
  return false;
}

CallOutcome failure_outcome(AttemptResult::Kind kind) {
  return kind == AttemptResult::Kind::timeout ? CallOutcome::timed_out
                                              : CallOutcome::exhausted_retries;
}

}  // namespace

BackendResponse complete(const BackendHandle& handle, const ChatRequest& request,
                         const DeadlineBudget& deadline, const CallTag& tag) {
  const RetryPolicy& policy = handle.profile.resiliency;
  BackendResponse response;
  response.backend_id = handle.profile.backend_id;
  const std::int64_t t0 = handle.clock->now_ms();

  auto finish = [&](CallOutcome outcome, std::string text, std::string note) {
    response.outcome = outcome;
    response.raw_text = outcome == CallOutcome::ok ? std::move(text) : std::string();
    response.error_note = std::move(note);
    response.latency_ms = handle.clock->now_ms() - t0;
    return response;
  };

  if (deadline.expired())
    return finish(CallOutcome::deadline_expired, "", "no budget before dispatch");
  if (handle.limiter && !handle.limiter->acquire(deadline))
    return finish(CallOutcome::deadline_expired, "", "budget expired in rate limiter");

  auto rng = episode_rng(handle, tag);
  std::string last_note;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    const std::int64_t remaining = deadline.remaining_ms();
    if (remaining <= 0)
      return finish(CallOutcome::deadline_expired, "", "budget expired mid-retry");
    ++response.attempts;
    const std::int64_t per_attempt = std::min(handle.profile.timeout_ms, remaining);
    AttemptResult result =
        handle.transport->attempt(handle.profile, request, per_attempt, tag);
    if (result.kind == AttemptResult::Kind::ok)
      return finish(CallOutcome::ok, std::move(result.text), std::move(result.note));
    last_note = result.note;

    const bool last_attempt = attempt == policy.max_retries;
    if (last_attempt || !retryable(result.kind, policy))
      return finish(failure_outcome(result.kind), "", last_note);

    const double bound = static_cast<double>(policy.base_delay_ms) *
                         std::pow(policy.factor, static_cast<double>(attempt));
    std::uniform_int_distribution<std::int64_t> jitter(
        0, std::max<std::int64_t>(0, static_cast<std::int64_t>(bound)));
    const std::int64_t sleep = jitter(rng);
    const std::int64_t left = deadline.remaining_ms();
    if (sleep >= left) {
      // Sleeping the full jitter would cross the deadline; consume what is
      // left and report expiry exactly at the deadline instant.
      handle.clock->sleep_ms(left);
      response.retry_sleeps_ms.push_back(left);
      return finish(CallOutcome::deadline_expired, "", "budget expired mid-retry");
    }
    handle.clock->sleep_ms(sleep);
    response.retry_sleeps_ms.push_back(sleep);
  }
  return finish(CallOutcome::exhausted_retries, "", last_note);
}

ojson build_http_body(const BackendProfile& profile, const ChatRequest& request) {
  ojson body;
  body["model"] = profile.model_name;
  ojson messages = ojson::array();
  for (const auto& msg : request.messages) {
    ojson m;
    switch (msg.role) {
      case ChatRole::system: m["role"] = "system"; break;
      case ChatRole::user: m["role"] = "user"; break;
      case ChatRole::assistant: m["role"] = "assistant"; break;
    }
    m["content"] = msg.content;
    messages.push_back(std::move(m));
  }
  body["messages"] = std::move(messages);
  body["temperature"] = request.gen_params.temperature;
  body["max_tokens"] = request.gen_params.max_tokens;
  if (!request.gen_params.stop.empty()) body["stop"] = request.gen_params.stop;
  return body;
}

std::optional<std::string> parse_chat_completion_reply(const std::string& body) {
  ojson doc = ojson::parse(body, nullptr, false);
  if (doc.is_discarded()) return std::nullopt;
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
    return std::nullopt;
  const ojson& first = doc["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string())
    return std::nullopt;
  return first["message"]["content"].get<std::string>();
}

}  // namespace guardian
