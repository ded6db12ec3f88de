#include "guardian/http_backend.hpp"

#include "httplib.h"

namespace guardian {

AttemptResult HttpTransport::attempt(const BackendProfile& profile,
                                     const ChatRequest& request,
                                     std::int64_t timeout_ms, const CallTag& tag) {
  (void)tag;
  std::string host = profile.base_url;
  if (host.rfind("http://", 0) == 0) host = host.substr(7);
  if (host.rfind("https://", 0) == 0) host = host.substr(8);
  if (auto slash = host.find('/'); slash != std::string::npos) host = host.substr(0, slash);
  if (auto colon = host.find(':'); colon != std::string::npos) host = host.substr(0, colon);

  httplib::Client client(host, profile.port);
  const time_t secs = static_cast<time_t>(timeout_ms / 1000);
  const time_t usecs = static_cast<time_t>((timeout_ms % 1000) * 1000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  if (!profile.bearer_token.empty())
    client.set_default_headers({{"Authorization", "Bearer " + profile.bearer_token}});

  const std::string body = build_http_body(profile, request).dump();
  auto res = client.Post(kChatCompletionsPath, body, "application/json");
  if (!res) {
    switch (res.error()) {
      case httplib::Error::ConnectionTimeout:
      case httplib::Error::Read:
      case httplib::Error::Write:
        return {AttemptResult::Kind::timeout, "", httplib::to_string(res.error())};
      default:
        return {AttemptResult::Kind::connect_error, "", httplib::to_string(res.error())};
    }
  }
  if (res->status == 429) return {AttemptResult::Kind::http_429, "", "http 429"};
  if (res->status >= 500)
    return {AttemptResult::Kind::http_5xx, "", "http " + std::to_string(res->status)};
  if (res->status < 200 || res->status >= 300)
    return {AttemptResult::Kind::connect_error, "", "http " + std::to_string(res->status)};

  auto content = parse_chat_completion_reply(res->body);
  if (!content)
    return {AttemptResult::Kind::http_5xx, "", "malformed reply: missing choices path"};
  return {AttemptResult::Kind::ok, std::move(*content), ""};
}

BackendHandle http_backend(BackendProfile profile, std::shared_ptr<Clock> clock,
                           std::uint64_t run_seed) {
  BackendHandle handle;
  handle.profile = std::move(profile);
  handle.profile.kind = BackendKind::http;
  handle.transport = std::make_shared<HttpTransport>();
  handle.limiter = std::make_shared<RateLimiter>(handle.profile.rate, clock);
  handle.clock = std::move(clock);
  handle.run_seed = run_seed;
  return handle;
}

}  // namespace guardian
