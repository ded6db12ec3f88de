#pragma once

#include <memory>

#include "guardian/backends.hpp"

namespace guardian {

/// OpenAI-compatible chat-completions client. POSTs build_http_body() to
/// base_url:port/v1/chat/completions and reads choices[0].message.content.
/// A syntactically broken reply is reported as http_5xx so the retry policy
/// treats it like a transient server fault.
class HttpTransport final : public Transport {
 public:
  AttemptResult attempt(const BackendProfile& profile, const ChatRequest& request,
                        std::int64_t timeout_ms, const CallTag& tag) override;
};

BackendHandle http_backend(BackendProfile profile, std::shared_ptr<Clock> clock,
                           std::uint64_t run_seed = 0);

}  // namespace guardian
