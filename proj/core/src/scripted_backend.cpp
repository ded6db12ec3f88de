#include "guardian/scripted_backend.hpp"

#include <fstream>
#include <stdexcept>

namespace guardian {

namespace {

Directive::Kind fault_from_name(const std::string& name) {
  if (name == "malformed_json") return Directive::Kind::malformed_json;
  if (name == "timeout") return Directive::Kind::timeout;
  if (name == "http_5xx") return Directive::Kind::http_5xx;
  if (name == "garbage") return Directive::Kind::garbage;
  if (name == "overconfident_label") return Directive::Kind::overconfident_label;
  throw std::runtime_error("unknown fault directive: " + name);
}

std::string fault_name(Directive::Kind kind) {
  switch (kind) {
    case Directive::Kind::malformed_json: return "malformed_json";
    case Directive::Kind::timeout: return "timeout";
    case Directive::Kind::http_5xx: return "http_5xx";
    case Directive::Kind::garbage: return "garbage";
    case Directive::Kind::overconfident_label: return "overconfident_label";
    case Directive::Kind::text: return "text";
  }
  return "text";
}

}  // namespace

Directive Directive::from_json(const ojson& doc) {
  Directive d;
  if (doc.contains("text")) {
    d.kind = Kind::text;
    d.text = doc.at("text").get<std::string>();
  } else if (doc.contains("fault")) {
    d.kind = fault_from_name(doc.at("fault").get<std::string>());
  } else {
    throw std::runtime_error("directive needs a 'text' or 'fault' key");
  }
  return d;
}

ojson Directive::to_json() const {
  ojson doc;
  if (kind == Kind::text)
    doc["text"] = text;
  else
    doc["fault"] = fault_name(kind);
  return doc;
}

ScriptTable ScriptTable::from_json(const ojson& doc) {
  ScriptTable table;
  for (const auto& [key, directives] : doc.items()) {
    std::vector<Directive> list;
    for (const auto& d : directives) list.push_back(Directive::from_json(d));
    table.entries[key] = std::move(list);
  }
  return table;
}

ScriptTable ScriptTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open script file: " + path);
  ojson doc = ojson::parse(in);
  return from_json(doc);
}

ojson ScriptTable::to_json() const {
  ojson doc = ojson::object();
  for (const auto& [key, directives] : entries) {
    ojson list = ojson::array();
    for (const auto& d : directives) list.push_back(d.to_json());
    doc[key] = std::move(list);
  }
  return doc;
}

ScriptedTransport::ScriptedTransport(ScriptTable table, std::shared_ptr<Clock> clock)
    : table_(std::move(table)), clock_(std::move(clock)) {}

AttemptResult ScriptedTransport::attempt(const BackendProfile& profile,
                                         const ChatRequest& request,
                                         std::int64_t timeout_ms, const CallTag& tag) {
  (void)profile;
  (void)request;
  Directive directive;
  {
    std::lock_guard<std::mutex> lock(mu_);
    const std::string key = tag.script_key();
    auto it = table_.entries.find(key);
    if (it == table_.entries.end() || it->second.empty())
      return {AttemptResult::Kind::ok, "", "script: no entry for " + key};
    std::size_t& cursor = cursors_[key];
    const std::size_t index = std::min(cursor, it->second.size() - 1);
    directive = it->second[index];
    ++cursor;
  }

  switch (directive.kind) {
    case Directive::Kind::text:
      return {AttemptResult::Kind::ok, directive.text, ""};
    case Directive::Kind::malformed_json:
      return {AttemptResult::Kind::ok, kMalformedJsonFixture, ""};
    case Directive::Kind::garbage:
      return {AttemptResult::Kind::ok, kGarbageFixture, ""};
    case Directive::Kind::overconfident_label:
      return {AttemptResult::Kind::ok, kOverconfidentLabelFixture, ""};
    case Directive::Kind::http_5xx:
      return {AttemptResult::Kind::http_5xx, "", "scripted http 500"};
    case Directive::Kind::timeout:
      clock_->sleep_ms(timeout_ms);
      return {AttemptResult::Kind::timeout, "", "scripted timeout"};
  }
  return {AttemptResult::Kind::ok, "", ""};
}

BackendHandle scripted_backend(BackendProfile profile, ScriptTable script,
                               std::shared_ptr<Clock> clock, std::uint64_t run_seed) {
  BackendHandle handle;
  handle.profile = std::move(profile);
  handle.profile.kind = BackendKind::scripted;
  handle.transport = std::make_shared<ScriptedTransport>(std::move(script), clock);
  handle.limiter = std::make_shared<RateLimiter>(handle.profile.rate, clock);
  handle.clock = std::move(clock);
  handle.run_seed = run_seed;
  return handle;
}

}  // namespace guardian
