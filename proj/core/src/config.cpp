#include "guardian/config.hpp"

#include <fstream>

#include "guardian/text.hpp"

namespace guardian {

namespace {

BackendProfile make_profile(const std::string& backend_id, BackendRole role,
                            const std::string& model, int port) {
  BackendProfile profile;
  profile.backend_id = backend_id;
  profile.role = role;
  profile.kind = BackendKind::scripted;
  profile.base_url = "http://127.0.0.1";
  profile.model_name = model;
  profile.port = port;
  return profile;
}

constexpr const char* kQwenModel = "qwen2.5-3b-instruct";
constexpr const char* kLlamaModel = "llama-3.2-3b-instruct";

}  // namespace

GuardianConfig default_config() {
  GuardianConfig config;
  config.backends = {
      make_profile("summarizer-qwen", BackendRole::summarizer, kQwenModel, 8001),
      make_profile("summarizer-llama", BackendRole::summarizer, kLlamaModel, 8002),
      make_profile("extractor-qwen", BackendRole::extractor, kQwenModel, 8001),
      make_profile("extractor-llama", BackendRole::extractor, kLlamaModel, 8002),
      make_profile("weak_labeler-qwen", BackendRole::weak_labeler, kQwenModel, 8001),
      make_profile("weak_labeler-llama", BackendRole::weak_labeler, kLlamaModel, 8002),
  };
  config.referee = make_profile("referee", BackendRole::referee, "referee-model", 8003);
  config.agreement = AgreementConfig::defaults();
  config.consensus.agreement = config.agreement;
  return config;
}

ojson backend_profile_to_json(const BackendProfile& profile) {
  ojson doc;
  doc["backend_id"] = profile.backend_id;
  doc["role"] = role_name(profile.role);
  doc["kind"] = profile.kind == BackendKind::http ? "http" : "scripted";
  doc["base_url"] = profile.base_url;
  doc["model_name"] = profile.model_name;
  doc["port"] = profile.port;
  if (!profile.bearer_token.empty()) doc["bearer_token"] = profile.bearer_token;
  ojson gen;
  gen["temperature"] = profile.gen_params.temperature;
  gen["max_tokens"] = profile.gen_params.max_tokens;
  if (!profile.gen_params.stop.empty()) gen["stop"] = profile.gen_params.stop;
  doc["gen_params"] = std::move(gen);
  ojson retry;
  retry["max_retries"] = profile.resiliency.max_retries;
  retry["base_delay_ms"] = profile.resiliency.base_delay_ms;
  retry["factor"] = profile.resiliency.factor;
  retry["jitter"] = "full";
  std::vector<std::string> retry_on;
  if (profile.resiliency.retry_on_timeout) retry_on.push_back("timeout");
  if (profile.resiliency.retry_on_http_5xx) retry_on.push_back("http_5xx");
  if (profile.resiliency.retry_on_http_429) retry_on.push_back("http_429");
  if (profile.resiliency.retry_on_connect_error) retry_on.push_back("connect_error");
  retry["retry_on"] = retry_on;
  doc["resiliency"] = std::move(retry);
  ojson rate;
  rate["capacity"] = profile.rate.capacity;
  rate["refill_per_sec"] = profile.rate.refill_per_sec;
  doc["rate"] = std::move(rate);
  doc["timeout_ms"] = profile.timeout_ms;
  if (!profile.script_path.empty()) doc["script_path"] = profile.script_path;
  return doc;
}

BackendProfile backend_profile_from_json(const ojson& doc, const BackendProfile& base) {
  BackendProfile profile = base;
  if (doc.contains("backend_id")) profile.backend_id = doc.at("backend_id");
  if (doc.contains("role")) {
    auto role = role_from_name(doc.at("role").get<std::string>());
    if (!role) throw std::runtime_error("unknown backend role in config");
    profile.role = *role;
  }
  if (doc.contains("kind")) {
    const std::string kind = doc.at("kind");
    if (kind == "http")
      profile.kind = BackendKind::http;
    else if (kind == "scripted")
      profile.kind = BackendKind::scripted;
    else
      throw std::runtime_error("unknown backend kind: " + kind);
  }
  if (doc.contains("base_url")) profile.base_url = doc.at("base_url");
  if (doc.contains("model_name")) profile.model_name = doc.at("model_name");
  if (doc.contains("port")) profile.port = doc.at("port");
  if (doc.contains("bearer_token")) profile.bearer_token = doc.at("bearer_token");
  if (doc.contains("gen_params")) {
    const ojson& gen = doc.at("gen_params");
    if (gen.contains("temperature")) profile.gen_params.temperature = gen.at("temperature");
    if (gen.contains("max_tokens")) profile.gen_params.max_tokens = gen.at("max_tokens");
    if (gen.contains("stop"))
      profile.gen_params.stop = gen.at("stop").get<std::vector<std::string>>();
  }
  if (doc.contains("resiliency")) {
    const ojson& retry = doc.at("resiliency");
    if (retry.contains("max_retries")) profile.resiliency.max_retries = retry.at("max_retries");
    if (retry.contains("base_delay_ms"))
      profile.resiliency.base_delay_ms = retry.at("base_delay_ms");
    if (retry.contains("factor")) profile.resiliency.factor = retry.at("factor");
    if (retry.contains("retry_on")) {
      profile.resiliency.retry_on_timeout = false;
      profile.resiliency.retry_on_http_5xx = false;
      profile.resiliency.retry_on_http_429 = false;
      profile.resiliency.retry_on_connect_error = false;
      for (const auto& item : retry.at("retry_on")) {
        const std::string name = item.get<std::string>();
        if (name == "timeout") profile.resiliency.retry_on_timeout = true;
        else if (name == "http_5xx") profile.resiliency.retry_on_http_5xx = true;
        else if (name == "http_429") profile.resiliency.retry_on_http_429 = true;
        else if (name == "connect_error") profile.resiliency.retry_on_connect_error = true;
        else throw std::runtime_error("unknown retry_on entry: " + name);
      }
    }
  }
  if (doc.contains("rate")) {
    const ojson& rate = doc.at("rate");
    if (rate.contains("capacity")) profile.rate.capacity = rate.at("capacity");
    if (rate.contains("refill_per_sec")) profile.rate.refill_per_sec = rate.at("refill_per_sec");
  }
  if (doc.contains("timeout_ms")) profile.timeout_ms = doc.at("timeout_ms");
  if (doc.contains("script_path")) profile.script_path = doc.at("script_path");
  if (profile.timeout_ms <= 0) throw std::runtime_error("timeout_ms must be positive");
  if (profile.gen_params.temperature < 0)
    throw std::runtime_error("temperature must be >= 0");
  if (profile.gen_params.max_tokens < 1)
    throw std::runtime_error("max_tokens must be >= 1");
  return profile;
}

ojson GuardianConfig::to_json() const {
  ojson doc;
  ojson backends_doc;
  ojson profiles = ojson::array();
  for (const auto& profile : backends) profiles.push_back(backend_profile_to_json(profile));
  backends_doc["profiles"] = std::move(profiles);
  backends_doc["referee"] = backend_profile_to_json(referee);
  doc["backends"] = std::move(backends_doc);

  ojson agreement_doc;
  agreement_doc["field_threshold"] = agreement.field_threshold;
  agreement_doc["accept_threshold"] = agreement.accept_threshold;
  agreement_doc["long_text_token_cutoff"] = agreement.long_text_token_cutoff;
  agreement_doc["stopword_list_path"] =
      stopword_list_path ? ojson(*stopword_list_path) : ojson(nullptr);
  agreement_doc["cue_table_path"] = cue_table_path ? ojson(*cue_table_path) : ojson(nullptr);
  doc["agreement"] = std::move(agreement_doc);

  ojson consensus_doc;
  consensus_doc["referee_cost_estimate_ms"] = consensus.referee_cost_estimate_ms;
  consensus_doc["tiebreak_max_fields"] = consensus.tiebreak_max_fields;
  consensus_doc["synonym_table_path"] =
      synonym_table_path ? ojson(*synonym_table_path) : ojson(nullptr);
  doc["consensus"] = std::move(consensus_doc);

  ojson orchestrator_doc;
  orchestrator_doc["concurrency_limit"] = orchestrator.concurrency_limit;
  orchestrator_doc["per_task_budget_ms"] = orchestrator.per_task_budget_ms;
  orchestrator_doc["out_root"] = orchestrator.out_root;
  orchestrator_doc["cache_dir"] = orchestrator.cache_dir;
  doc["orchestrator"] = std::move(orchestrator_doc);

  ojson zone_doc;
  zone_doc["w_p"] = zone_qa.w_p;
  zone_doc["w_q"] = zone_qa.w_q;
  zone_doc["w_a"] = zone_qa.w_a;
  zone_doc["w_r"] = zone_qa.w_r;
  zone_doc["bias"] = zone_qa.bias;
  zone_doc["area_ref_km2"] = zone_qa.area_ref_km2;
  zone_doc["confidence_floor"] = zone_qa.confidence_floor;
  zone_doc["batch_size"] = zone_qa.batch_size;
  doc["zone_qa"] = std::move(zone_doc);

  ojson templates_doc;
  templates_doc["dir"] = templates.dir ? ojson(*templates.dir) : ojson(nullptr);
  templates_doc["char_budget"] = templates.char_budget;
  doc["templates"] = std::move(templates_doc);

  doc["schema_path"] = schema_path ? ojson(*schema_path) : ojson(nullptr);
  return doc;
}

std::string GuardianConfig::digest() const { return text::sha256_hex(to_json().dump()); }

GuardianConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ojson doc = ojson::parse(in, nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("config is not valid JSON: " + path);

  GuardianConfig config = default_config();
  if (doc.contains("backends")) {
    const ojson& backends_doc = doc.at("backends");
    if (backends_doc.contains("profiles")) {
      BackendProfile base;  // fresh defaults for explicitly listed profiles
      config.backends.clear();
      for (const auto& item : backends_doc.at("profiles"))
        config.backends.push_back(backend_profile_from_json(item, base));
    }
    if (backends_doc.contains("referee"))
      config.referee = backend_profile_from_json(backends_doc.at("referee"), config.referee);
  }
  if (doc.contains("agreement")) {
    const ojson& agreement_doc = doc.at("agreement");
    if (agreement_doc.contains("field_threshold"))
      config.agreement.field_threshold = agreement_doc.at("field_threshold");
    if (agreement_doc.contains("accept_threshold"))
      config.agreement.accept_threshold = agreement_doc.at("accept_threshold");
    if (agreement_doc.contains("long_text_token_cutoff"))
      config.agreement.long_text_token_cutoff = agreement_doc.at("long_text_token_cutoff");
    if (agreement_doc.contains("stopword_list_path") &&
        !agreement_doc.at("stopword_list_path").is_null())
      config.stopword_list_path = agreement_doc.at("stopword_list_path").get<std::string>();
    if (agreement_doc.contains("cue_table_path") &&
        !agreement_doc.at("cue_table_path").is_null())
      config.cue_table_path = agreement_doc.at("cue_table_path").get<std::string>();
  }
  if (doc.contains("consensus")) {
    const ojson& consensus_doc = doc.at("consensus");
    if (consensus_doc.contains("referee_cost_estimate_ms"))
      config.consensus.referee_cost_estimate_ms =
          consensus_doc.at("referee_cost_estimate_ms");
    if (consensus_doc.contains("tiebreak_max_fields"))
      config.consensus.tiebreak_max_fields = consensus_doc.at("tiebreak_max_fields");
    if (consensus_doc.contains("synonym_table_path") &&
        !consensus_doc.at("synonym_table_path").is_null())
      config.synonym_table_path = consensus_doc.at("synonym_table_path").get<std::string>();
  }
  if (doc.contains("orchestrator")) {
    const ojson& orchestrator_doc = doc.at("orchestrator");
    if (orchestrator_doc.contains("concurrency_limit"))
      config.orchestrator.concurrency_limit = orchestrator_doc.at("concurrency_limit");
    if (orchestrator_doc.contains("per_task_budget_ms"))
      config.orchestrator.per_task_budget_ms = orchestrator_doc.at("per_task_budget_ms");
    if (orchestrator_doc.contains("out_root"))
      config.orchestrator.out_root = orchestrator_doc.at("out_root");
    if (orchestrator_doc.contains("cache_dir"))
      config.orchestrator.cache_dir = orchestrator_doc.at("cache_dir");
  }
  if (doc.contains("zone_qa")) {
    const ojson& zone_doc = doc.at("zone_qa");
    if (zone_doc.contains("w_p")) config.zone_qa.w_p = zone_doc.at("w_p");
    if (zone_doc.contains("w_q")) config.zone_qa.w_q = zone_doc.at("w_q");
    if (zone_doc.contains("w_a")) config.zone_qa.w_a = zone_doc.at("w_a");
    if (zone_doc.contains("w_r")) config.zone_qa.w_r = zone_doc.at("w_r");
    if (zone_doc.contains("bias")) config.zone_qa.bias = zone_doc.at("bias");
    if (zone_doc.contains("area_ref_km2"))
      config.zone_qa.area_ref_km2 = zone_doc.at("area_ref_km2");
    if (zone_doc.contains("confidence_floor"))
      config.zone_qa.confidence_floor = zone_doc.at("confidence_floor");
    if (zone_doc.contains("batch_size")) config.zone_qa.batch_size = zone_doc.at("batch_size");
  }
  if (doc.contains("templates")) {
    const ojson& templates_doc = doc.at("templates");
    if (templates_doc.contains("dir") && !templates_doc.at("dir").is_null())
      config.templates.dir = templates_doc.at("dir").get<std::string>();
    if (templates_doc.contains("char_budget"))
      config.templates.char_budget = templates_doc.at("char_budget");
  }
  if (doc.contains("schema_path") && !doc.at("schema_path").is_null())
    config.schema_path = doc.at("schema_path").get<std::string>();

  config.agreement.stopwords = builtin_stopwords();
  config.agreement.cues = CueTable::builtin();
  config.consensus.agreement = config.agreement;
  return config;
}

}  // namespace guardian
