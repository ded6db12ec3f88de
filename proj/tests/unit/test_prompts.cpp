#include "doctest.h"
#include "guardian/prompts.hpp"
#include "support/test_support.hpp"

using namespace guardian;
using namespace guardian::testing;

namespace {
const PromptLibrary& lib() {
  static PromptLibrary instance = PromptLibrary::builtin();
  return instance;
}
}  // namespace

TEST_SUITE("prompts") {

TEST_CASE("summarize prompt demands exactly five bullets and embeds the narrative") {
  const CaseRecord rec = make_case("c1", "Child last seen at Maple Park.");
  const ChatRequest request =
      lib().render_task_prompt(TaskKind::summarize, rec, default_extraction_schema());
  REQUIRE(request.messages.size() == 2);
  CHECK(request.messages[0].role == ChatRole::system);
  CHECK(request.messages[0].content.find("exactly five") != std::string::npos);
  CHECK(request.messages[1].content.find(rec.narrative) != std::string::npos);
}

TEST_CASE("extract prompt embeds a JSON example with the schema's keys") {
  const ExtractionSchema schema = default_extraction_schema();
  const CaseRecord rec = make_case("c1", "narrative");
  const ChatRequest request = lib().render_task_prompt(TaskKind::extract, rec, schema);
  for (const auto& field : schema.fields)
    CHECK(request.messages[0].content.find("\"" + field.name + "\"") != std::string::npos);
  CHECK(request.messages[0].content.find("{schema_json}") == std::string::npos);
}

TEST_CASE("weak label prompt enumerates all ten labels") {
  const CaseRecord rec = make_case("c1", "narrative");
  const ChatRequest request =
      lib().render_task_prompt(TaskKind::weak_label, rec, default_extraction_schema());
  for (const auto& label : movement_vocabulary())
    CHECK(request.messages[0].content.find(label) != std::string::npos);
  for (const auto& label : risk_vocabulary())
    CHECK(request.messages[0].content.find(label) != std::string::npos);
}

TEST_CASE("referee prompt lists contested fields and numbered candidates") {
  const ExtractionSchema schema = default_extraction_schema();
  const std::vector<NormalizedCandidate> candidates = {
      extraction_candidate("a", {{"subject_name", "Dan"},
                                 {"last_seen_location", "Maple Park"}},
                           schema),
      extraction_candidate("b", {{"subject_name", "Dan"},
                                 {"last_seen_location", "River Trail"}},
                           schema)};
  const ChatRequest request = lib().render_referee_prompt(
      TaskKind::extract, candidates, {"last_seen_location"}, "narrative");
  CHECK(request.messages[1].content.find("CONTESTED FIELDS") != std::string::npos);
  CHECK(request.messages[1].content.find("last_seen_location") != std::string::npos);
  CHECK(request.messages[1].content.find("\"candidate\": 1") != std::string::npos);
  CHECK(request.messages[1].content.find("\"candidate\": 2") != std::string::npos);
}

TEST_CASE("summary referee sees at most 600 narrative characters") {
  const std::string narrative(5000, 'n');
  const std::vector<NormalizedCandidate> candidates = {
      summary_candidate("a", {"b1", "b2", "b3", "b4", "b5"}),
      summary_candidate("b", {"x1", "x2", "x3", "x4", "x5"})};
  const ChatRequest request = lib().render_referee_prompt(
      TaskKind::summarize, candidates, {"subject"}, narrative);
  // The user text contains a truncated prefix, never the full narrative.
  CHECK(request.messages[1].content.find(narrative) == std::string::npos);
  CHECK(request.messages[1].content.find(std::string(600, 'n')) != std::string::npos);
  CHECK(request.messages[1].content.find(std::string(601, 'n')) == std::string::npos);
}

TEST_CASE("referee rendering enforces its preconditions") {
  const std::vector<NormalizedCandidate> one = {
      summary_candidate("a", {"b1", "b2", "b3", "b4", "b5"})};
  CHECK_THROWS_AS(lib().render_referee_prompt(TaskKind::summarize, one, {"subject"}, "n"),
                  std::invalid_argument);
  const std::vector<NormalizedCandidate> two = {
      summary_candidate("a", {"b1", "b2", "b3", "b4", "b5"}),
      summary_candidate("b", {"b1", "b2", "b3", "b4", "b5"})};
  CHECK_THROWS_AS(lib().render_referee_prompt(TaskKind::summarize, two, {}, "n"),
                  std::invalid_argument);
}

TEST_CASE("tiebreak prompt enumerates exactly the presented options") {
  const ChatRequest request =
      lib().render_tiebreak_prompt("movement", {"local", "regional"});
  CHECK(request.messages[1].content.find("1. local") != std::string::npos);
  CHECK(request.messages[1].content.find("2. regional") != std::string::npos);
  CHECK(request.messages[1].content.find("movement") != std::string::npos);
  CHECK_THROWS_AS(lib().render_tiebreak_prompt("movement", {"local"}),
                  std::invalid_argument);
}

TEST_CASE("repair prompt embeds broken text in a fenced block, truncated at 4000") {
  const ExtractionSchema schema = default_extraction_schema();
  const ChatRequest small = lib().render_repair_prompt("{\"a\": broken", schema);
  CHECK(small.messages[1].content.find("```") != std::string::npos);
  CHECK(small.messages[1].content.find("{\"a\": broken") != std::string::npos);
  for (const auto& field : schema.fields)
    CHECK(small.messages[0].content.find(field.name) != std::string::npos);

  const std::string huge(10000, 'x');
  const ChatRequest big = lib().render_repair_prompt(huge, schema);
  CHECK(big.messages[1].content.find(std::string(4000, 'x')) != std::string::npos);
  CHECK(big.messages[1].content.find(std::string(4001, 'x')) == std::string::npos);
  CHECK(big.messages[1].content.find("[TRUNCATED]") != std::string::npos);
}

TEST_CASE("rendering is deterministic") {
  const CaseRecord rec = make_case("c1", "Some narrative about a missing teen.");
  const ExtractionSchema schema = default_extraction_schema();
  const ChatRequest a = lib().render_task_prompt(TaskKind::extract, rec, schema);
  const ChatRequest b = lib().render_task_prompt(TaskKind::extract, rec, schema);
  CHECK(a == b);
}

TEST_CASE("char budget truncates the narrative but never the contract") {
  PromptLibrary small = PromptLibrary::builtin();
  small.char_budget = 1200;
  const CaseRecord rec = make_case("c1", std::string(8000, 'q'));
  const ExtractionSchema schema = default_extraction_schema();
  const ChatRequest request = small.render_task_prompt(TaskKind::extract, rec, schema);
  const std::size_t total =
      request.messages[0].content.size() + request.messages[1].content.size();
  CHECK(total <= 1200);
  // Contract language survives in full.
  CHECK(request.messages[0].content.find("JSON only") != std::string::npos);
}

TEST_CASE("template directory overrides builtin versions") {
  TempDir tmp("templates");
  {
    PromptTemplate custom = lib().get("task.summarize");
    custom.version = "v2-custom";
    custom.system_text = "Custom summarizer contract: exactly five bullets.";
    std::ofstream out(tmp.sub("task.summarize.json"));
    out << custom.to_json().dump(2);
  }
  PromptLibrary merged = PromptLibrary::builtin();
  merged.load_dir(tmp.str());
  CHECK(merged.get("task.summarize").version == "v2-custom");
  CHECK(merged.versions().at("task.summarize") == "v2-custom");
  CHECK(merged.get("task.extract").version == "v1");
}

TEST_CASE("postprocess extracts bullets, strips markers, hard-stops at prose") {
  CHECK(postprocess(TaskKind::summarize, "Here you go:\n- a\n- b\nHope this helps") ==
        "a\nb");
  CHECK(postprocess(TaskKind::summarize, "1. one\n2. two\n\n- three") == "one\ntwo\nthree");
  CHECK(postprocess(TaskKind::summarize,
                    "\xe2\x80\xa2 dot\n* star\nafterword\n- ignored") == "dot\nstar");
  CHECK(postprocess(TaskKind::summarize, "") == "");
}

TEST_CASE("postprocess strips fences and outer prose for JSON tasks") {
  CHECK(postprocess(TaskKind::extract, "```json\n{\"x\":1}\n```") == "{\"x\":1}");
  CHECK(postprocess(TaskKind::weak_label, "Sure thing. {\"movement\":\"local\"} done") ==
        "{\"movement\":\"local\"}");
  CHECK(postprocess(TaskKind::extract, "") == "");
}

TEST_CASE("postprocess is idempotent") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> pieces = {
      "- bullet one",   "* bullet two", "1. numbered", "plain prose",
      "```json",        "{\"k\":1}",    "```",         "",
      "   - indented",  "tail note",    "{\"a\":[1,2]}",
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::string input;
    const int lines = static_cast<int>(rng() % 8);
    for (int i = 0; i < lines; ++i) {
      input += pieces[rng() % pieces.size()];
      input += "\n";
    }
    for (TaskKind task : {TaskKind::summarize, TaskKind::extract, TaskKind::weak_label}) {
      const std::string once = postprocess(task, input);
      CHECK(postprocess(task, once) == once);
    }
  }
}

}  // TEST_SUITE
