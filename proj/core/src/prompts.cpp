#include "guardian/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "guardian/normalize.hpp"
#include "guardian/text.hpp"

namespace guardian {

namespace {

std::string contract_kind_name(FormatContract::Kind kind) {
  switch (kind) {
    case FormatContract::Kind::json_only: return "json_only";
    case FormatContract::Kind::five_bullets: return "five_bullets";
    case FormatContract::Kind::single_field_json: return "single_field_json";
  }
  return "json_only";
}

FormatContract::Kind contract_kind_from_name(const std::string& name) {
  if (name == "json_only") return FormatContract::Kind::json_only;
  if (name == "five_bullets") return FormatContract::Kind::five_bullets;
  if (name == "single_field_json") return FormatContract::Kind::single_field_json;
  throw std::runtime_error("unknown contract kind: " + name);
}

/// Example JSON object whose keys equal the schema's field names, embedded in
/// extract and repair prompts as the format contract.
std::string schema_example_json(const ExtractionSchema& schema) {
  ojson example = ojson::object();
  for (const auto& f : schema.fields) {
    switch (f.kind) {
      case FieldKind::text: example[f.name] = "..."; break;
      case FieldKind::timestamp_text: example[f.name] = "..."; break;
      case FieldKind::integer: example[f.name] = 0; break;
      case FieldKind::list_of_text: example[f.name] = ojson::array({"..."}); break;
      case FieldKind::list_of_record: {
        ojson rec = ojson::object();
        for (const auto& key : f.record_keys) rec[key] = "...";
        example[f.name] = ojson::array({std::move(rec)});
        break;
      }
    }
  }
  return example.dump();
}

std::string replace_all(std::string text, const std::string& needle,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

PromptTemplate PromptTemplate::from_json(const ojson& doc) {
  PromptTemplate tmpl;
  tmpl.template_id = doc.at("template_id").get<std::string>();
  tmpl.version = doc.at("version").get<std::string>();
  tmpl.system_text = doc.at("system_text").get<std::string>();
  tmpl.user_pattern = doc.at("user_pattern").get<std::string>();
  const ojson& c = doc.at("contract");
  tmpl.contract.kind = contract_kind_from_name(c.at("kind").get<std::string>());
  if (c.contains("allowed_keys"))
    tmpl.contract.allowed_keys = c.at("allowed_keys").get<std::vector<std::string>>();
  if (c.contains("allowed_values"))
    tmpl.contract.allowed_values = c.at("allowed_values").get<std::vector<std::string>>();
  if (c.contains("max_lines")) tmpl.contract.max_lines = c.at("max_lines").get<int>();
  return tmpl;
}

ojson PromptTemplate::to_json() const {
  ojson doc;
  doc["template_id"] = template_id;
  doc["version"] = version;
  doc["system_text"] = system_text;
  doc["user_pattern"] = user_pattern;
  ojson c;
  c["kind"] = contract_kind_name(contract.kind);
  if (!contract.allowed_keys.empty()) c["allowed_keys"] = contract.allowed_keys;
  if (!contract.allowed_values.empty()) c["allowed_values"] = contract.allowed_values;
  if (contract.max_lines) c["max_lines"] = *contract.max_lines;
  doc["contract"] = std::move(c);
  return doc;
}

std::string task_template_id(TaskKind task) { return "task." + task_slug(task); }
std::string referee_template_id(TaskKind task) { return "referee." + task_slug(task); }

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  auto add = [&](PromptTemplate tmpl) { lib.templates_[tmpl.template_id] = std::move(tmpl); };

  {
    PromptTemplate t;
    t.template_id = "task.summarize";
    t.version = "v1";
    t.system_text =
        "You are an investigator-facing summarizer for missing-person cases. "
        "Respond with exactly five short bullet lines and nothing else. Each line "
        "starts with '- '. Cover, in order: subject identity, last-seen location, "
        "last-seen time, vehicles, movement cues. State only facts present in the "
        "narrative; never speculate about intent or unstated vehicles. No "
        "commentary before or after the bullets.";
    t.user_pattern = "Case narrative:\n{narrative}\n\nWrite exactly five bullets now.";
    t.contract.kind = FormatContract::Kind::five_bullets;
    t.contract.max_lines = 5;
    add(std::move(t));
  }
  {
    PromptTemplate t;
    t.template_id = "task.extract";
    t.version = "v1";
    t.system_text =
        "You extract structured fields from missing-person narratives. Return "
        "JSON only, no prose, with exactly the keys of this example object:\n"
        "{schema_json}\n"
        "Leave a field empty (empty string or empty list) when the narrative "
        "does not state it. Do not invent facts and do not add keys.";
    t.user_pattern = "Narrative:\n{narrative}\n\nReturn the JSON object now.";
    t.contract.kind = FormatContract::Kind::json_only;
    add(std::move(t));
  }
  {
    PromptTemplate t;
    t.template_id = "task.weak_label";
    t.version = "v1";
    t.system_text =
        "You assign weak supervision labels to a missing-person narrative. "
        "Return JSON only with keys \"movement\", \"risk\", \"confidence\", "
        "\"rationale\". movement must be one of: stationary, local, regional, "
        "long_range, unknown. risk must be one of: low, moderate, high, critical, "
        "unknown. confidence is a number in [0,1]. rationale is at most 300 "
        "characters. Choose unknown when the narrative is inconclusive; do not "
        "overstate confidence. Example: {\"movement\":\"local\",\"risk\":"
        "\"moderate\",\"confidence\":0.6,\"rationale\":\"seen nearby twice\"}";
    t.user_pattern = "Narrative:\n{narrative}\n\nReturn the JSON object now.";
    t.contract.kind = FormatContract::Kind::json_only;
    t.contract.allowed_keys = {"movement", "risk", "confidence", "rationale"};
    add(std::move(t));
  }
  {
    PromptTemplate t;
    t.template_id = "task.zone_plausibility";
    t.version = "v1";
    t.system_text =
        "You assess how plausible a candidate search zone is for the subject of "
        "a missing-person case. Return JSON only with keys \"movement\", "
        "\"risk\", \"confidence\", \"rationale\". movement must be one of: "
        "stationary, local, regional, long_range, unknown. risk expresses how "
        "strongly the zone should be prioritized and must be one of: low, "
        "moderate, high, critical, unknown. confidence is a number in [0,1]. "
        "rationale is at most 300 characters. Choose unknown when the narrative "
        "is inconclusive.";
    t.user_pattern =
        "Narrative:\n{narrative}\n\nCandidate zone:\n{zone_description}\n\n"
        "Return the JSON object now.";
    t.contract.kind = FormatContract::Kind::json_only;
    t.contract.allowed_keys = {"movement", "risk", "confidence", "rationale"};
    add(std::move(t));
  }
  {
    PromptTemplate t;
    t.template_id = "referee.summarize";
    t.version = "v1";
    t.system_text =
        "You adjudicate between candidate five-bullet summaries produced by "
        "other models. Produce exactly five bullet lines, each starting with "
        "'- ', selecting bullets only from the candidates. Never introduce "
        "content that appears in no candidate.";
    t.user_pattern =
        "NARRATIVE PREFIX:\n{narrative}\n\nCANDIDATES:\n{candidates_json}\n\n"
        "CONTESTED SLOTS: {contested_fields}\n\nReturn exactly five bullets now.";
    t.contract.kind = FormatContract::Kind::five_bullets;
    t.contract.max_lines = 5;
    add(std::move(t));
  }
  {
    PromptTemplate t;
    t.template_id = "referee.extract";
    t.version = "v1";
    t.system_text =
        "You adjudicate between candidate JSON extractions produced by other "
        "models. Return JSON only with exactly the candidate keys. For each "
        "field, select a value from one candidate or merge compatible list "
        "values; never introduce a value that appears in no candidate.";
    t.user_pattern =
        "CANDIDATES:\n{candidates_json}\n\nCONTESTED FIELDS: {contested_fields}\n\n"
        "Return the adjudicated JSON object now.";
    t.contract.kind = FormatContract::Kind::json_only;
    add(std::move(t));
  }
  {
    PromptTemplate t;
    t.template_id = "referee.weak_label";
    t.version = "v1";
    t.system_text =
        "You adjudicate between candidate weak-label JSON objects produced by "
        "other models. Return JSON only with keys \"movement\", \"risk\", "
        "\"confidence\", \"rationale\", selecting each label from the candidate "
        "values. Never introduce a label that appears in no candidate.";
    t.user_pattern =
        "CANDIDATES:\n{candidates_json}\n\nCONTESTED FIELDS: {contested_fields}\n\n"
        "Return the adjudicated JSON object now.";
    t.contract.kind = FormatContract::Kind::json_only;
    t.contract.allowed_keys = {"movement", "risk", "confidence", "rationale"};
    add(std::move(t));
  }
  {
    PromptTemplate t;
    t.template_id = "referee.zone_plausibility";
    t.version = "v1";
    t.system_text =
        "You adjudicate between candidate zone-plausibility JSON objects "
        "produced by other models. Return JSON only with keys \"movement\", "
        "\"risk\", \"confidence\", \"rationale\", selecting each label from the "
        "candidate values. Never introduce a label that appears in no candidate.";
    t.user_pattern =
        "CANDIDATES:\n{candidates_json}\n\nCONTESTED FIELDS: {contested_fields}\n\n"
        "Return the adjudicated JSON object now.";
    t.contract.kind = FormatContract::Kind::json_only;
    t.contract.allowed_keys = {"movement", "risk", "confidence", "rationale"};
    add(std::move(t));
  }
  {
    PromptTemplate t;
    t.template_id = "tiebreak";
    t.version = "v1";
    t.system_text =
        "You resolve a single contested field. Return JSON only of the form "
        "{\"choice\": <one of the presented options, copied verbatim>, "
        "\"rationale\": <string of at most 200 characters>}. You must pick "
        "exactly one presented option; any other answer is invalid.";
    t.user_pattern =
        "FIELD: {field_name}\nOPTIONS:\n{options}\n\nReturn the JSON object now.";
    t.contract.kind = FormatContract::Kind::single_field_json;
    t.contract.allowed_keys = {"choice", "rationale"};
    add(std::move(t));
  }
  {
    PromptTemplate t;
    t.template_id = "repair";
    t.version = "v1";
    t.system_text =
        "You repair malformed JSON emitted by another model. Return valid JSON "
        "only, using exactly these keys: {schema_keys}. Preserve the original "
        "content; perform structural repair only. Do not add facts, keys, or "
        "commentary. Input longer than 4000 characters arrives truncated.";
    t.user_pattern =
        "BROKEN OUTPUT:\n```\n{raw_text}\n```\n\nReturn the repaired JSON object now.";
    t.contract.kind = FormatContract::Kind::json_only;
    add(std::move(t));
  }
  return lib;
}

void PromptLibrary::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir)) throw std::runtime_error("template directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path);
    ojson doc = ojson::parse(in);
    PromptTemplate tmpl = PromptTemplate::from_json(doc);
    templates_[tmpl.template_id] = std::move(tmpl);
  }
}

const PromptTemplate& PromptLibrary::get(const std::string& template_id) const {
  auto it = templates_.find(template_id);
  if (it == templates_.end())
    throw std::runtime_error("unknown template: " + template_id);
  return it->second;
}

std::map<std::string, std::string> PromptLibrary::versions() const {
  std::map<std::string, std::string> out;
  for (const auto& [id, tmpl] : templates_) out[id] = tmpl.version;
  return out;
}

ChatRequest PromptLibrary::assemble(const PromptTemplate& tmpl,
                                    std::map<std::string, std::string> bindings) const {
  std::string system_text = tmpl.system_text;
  std::string user_text = tmpl.user_pattern;
  for (const auto& [name, value] : bindings) {
    if (name == "narrative") continue;  // bound last, under the char budget
    const std::string marker = "{" + name + "}";
    system_text = replace_all(system_text, marker, value);
    user_text = replace_all(user_text, marker, value);
  }

  auto narrative = bindings.find("narrative");
  if (narrative != bindings.end()) {
    const std::string marker = "{narrative}";
    std::size_t fixed = system_text.size() + user_text.size();
    std::size_t occurrences = 0;
    for (std::size_t pos = user_text.find(marker); pos != std::string::npos;
         pos = user_text.find(marker, pos + marker.size()))
      ++occurrences;
    if (occurrences > 0) fixed -= occurrences * marker.size();
    std::string bound = narrative->second;
    if (char_budget > 0 && occurrences > 0 &&
        fixed + occurrences * bound.size() > char_budget) {
      const std::size_t room =
          char_budget > fixed ? (char_budget - fixed) / occurrences : 0;
      bound = text::truncate(bound, room);
    }
    user_text = replace_all(user_text, marker, bound);
    system_text = replace_all(system_text, marker, bound);
  }

  ChatRequest request;
  request.gen_params = gen_params;
  request.messages.push_back({ChatRole::system, std::move(system_text)});
  request.messages.push_back({ChatRole::user, std::move(user_text)});
  return request;
}

ChatRequest PromptLibrary::render_task_prompt(TaskKind task, const CaseRecord& rec,
                                              const ExtractionSchema& schema) const {
  const PromptTemplate& tmpl = get(task_template_id(task));
  std::map<std::string, std::string> bindings;
  bindings["narrative"] = rec.narrative;
  if (task == TaskKind::extract) bindings["schema_json"] = schema_example_json(schema);
  if (task == TaskKind::zone_plausibility) {
    auto it = rec.metadata.find("zone_description");
    bindings["zone_description"] = it != rec.metadata.end() ? it->second : "";
  }
  return assemble(tmpl, std::move(bindings));
}

ChatRequest PromptLibrary::render_referee_prompt(
    TaskKind task, const std::vector<NormalizedCandidate>& candidates,
    const std::vector<std::string>& disagreements, const std::string& narrative) const {
  if (candidates.size() < 2)
    throw std::invalid_argument("referee needs at least two candidates");
  if (disagreements.empty())
    throw std::invalid_argument("referee needs a nonempty disagreement list");
  const PromptTemplate& tmpl = get(referee_template_id(task));

  ojson blocks = ojson::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ojson block;
    block["candidate"] = static_cast<int>(i + 1);
    block["output"] = artifact_to_json(candidates[i].artifact);
    blocks.push_back(std::move(block));
  }

  std::map<std::string, std::string> bindings;
  bindings["candidates_json"] = blocks.dump(2);
  bindings["contested_fields"] = text::join(disagreements, ", ");
  bindings["narrative"] = task == TaskKind::summarize
                              ? text::truncate(narrative, kRefereeNarrativePrefixChars)
                              : narrative;
  return assemble(tmpl, std::move(bindings));
}

ChatRequest PromptLibrary::render_tiebreak_prompt(
    const std::string& field_name, const std::vector<std::string>& options) const {
  if (options.size() < 2)
    throw std::invalid_argument("tiebreak needs at least two distinct options");
  const PromptTemplate& tmpl = get("tiebreak");
  std::vector<std::string> numbered;
  numbered.reserve(options.size());
  for (std::size_t i = 0; i < options.size(); ++i)
    numbered.push_back(std::to_string(i + 1) + ". " + options[i]);
  std::map<std::string, std::string> bindings;
  bindings["field_name"] = field_name;
  bindings["options"] = text::join(numbered, "\n");
  return assemble(tmpl, std::move(bindings));
}

ChatRequest PromptLibrary::render_repair_prompt(const std::string& raw_text,
                                                const ExtractionSchema& schema) const {
  const PromptTemplate& tmpl = get("repair");
  std::string embedded = text::truncate(raw_text, kRepairInputMaxChars);
  if (embedded.size() < raw_text.size()) embedded += "\n[TRUNCATED]";
  std::vector<std::string> keys;
  for (const auto& f : schema.fields) keys.push_back(f.name);
  std::map<std::string, std::string> bindings;
  bindings["raw_text"] = std::move(embedded);
  bindings["schema_keys"] = text::join(keys, ", ");
  return assemble(tmpl, std::move(bindings));
}

// ---------------------------------------------------------------------------
// Post-processing

namespace {

/// Leading bullet marker: -, •, *, or "N." — returns text after the marker,
/// or nullopt when the line is not bullet-like.
std::optional<std::string> strip_bullet_marker(const std::string& line) {
  const std::string trimmed = text::trim(line);
  if (trimmed.empty()) return std::nullopt;
  if (trimmed[0] == '-' || trimmed[0] == '*')
    return text::trim(trimmed.substr(1));
  if (trimmed.rfind("\xe2\x80\xa2", 0) == 0)  // U+2022 bullet
    return text::trim(trimmed.substr(3));
  std::size_t i = 0;
  while (i < trimmed.size() && std::isdigit(static_cast<unsigned char>(trimmed[i]))) ++i;
  if (i > 0 && i < trimmed.size() && trimmed[i] == '.')
    return text::trim(trimmed.substr(i + 1));
  return std::nullopt;
}

std::string postprocess_summary(const std::string& raw_text) {
  std::vector<std::string> bullets;
  bool seen_bullet = false;
  for (const auto& line : text::split_lines(raw_text)) {
    auto bullet = strip_bullet_marker(line);
    if (bullet) {
      // Strip stacked markers so the output never re-parses as bullets.
      while (auto inner = strip_bullet_marker(*bullet)) bullet = std::move(inner);
      bullets.push_back(std::move(*bullet));
      seen_bullet = true;
    } else if (seen_bullet && !text::trim(line).empty()) {
      break;  // hard stop at the first non-bullet line after the first bullet
    }
  }
  if (!seen_bullet) return raw_text;  // nothing bullet-like; leave untouched
  return text::join(bullets, "\n");
}

std::string strip_code_fences(const std::string& s) {
  std::string out;
  for (const auto& line : text::split_lines(s)) {
    if (text::trim(line).rfind("```", 0) == 0) continue;
    if (!out.empty()) out.push_back('\n');
    out.append(line);
  }
  return out;
}

std::string postprocess_json(const std::string& raw_text) {
  std::string s = strip_code_fences(raw_text);
  const std::size_t first = s.find('{');
  const std::size_t last = s.rfind('}');
  if (first != std::string::npos && last != std::string::npos && last > first)
    return s.substr(first, last - first + 1);
  return text::trim(s);
}

}  // namespace

std::string postprocess(TaskKind task, const std::string& raw_text) {
  if (raw_text.empty()) return raw_text;
  if (task == TaskKind::summarize) return postprocess_summary(raw_text);
  return postprocess_json(raw_text);
}

}  // namespace guardian
