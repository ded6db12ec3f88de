#include "doctest.h"
#include "guardian/normalize.hpp"
#include "support/test_support.hpp"

using namespace guardian;

TEST_SUITE("normalize") {

TEST_CASE("five clean bullets pass through unchanged") {
  const NormalizedCandidate candidate = normalize_summary("a\nb\nc\nd\ne");
  const auto& bullets = std::get<SummaryArtifact>(candidate.artifact).bullets;
  CHECK(bullets == std::vector<std::string>{"a", "b", "c", "d", "e"});
  CHECK(candidate.valid);
  CHECK(candidate.notes.empty());
}

TEST_CASE("seven bullets keep the first five with a truncation note") {
  const NormalizedCandidate candidate = normalize_summary("1\n2\n3\n4\n5\n6\n7");
  const auto& bullets = std::get<SummaryArtifact>(candidate.artifact).bullets;
  REQUIRE(bullets.size() == 5);
  CHECK(bullets[4] == "5");
  REQUIRE(candidate.notes.size() == 1);
  CHECK(candidate.notes[0] == "truncated:2");
}

TEST_CASE("three bullets are padded with placeholders and a note") {
  const NormalizedCandidate candidate = normalize_summary("x\ny\nz");
  const auto& bullets = std::get<SummaryArtifact>(candidate.artifact).bullets;
  REQUIRE(bullets.size() == 5);
  CHECK(bullets[3] == kSummaryPlaceholder);
  CHECK(bullets[4] == kSummaryPlaceholder);
  REQUIRE(candidate.notes.size() == 1);
  CHECK(candidate.notes[0] == "padded:2");
  CHECK(validate_artifact(candidate.artifact, default_extraction_schema()).pass);
}

TEST_CASE("long bullets are trimmed, collapsed, and capped at 160 chars") {
  const std::string long_line = "  lots   of    space " + std::string(300, 'w');
  const NormalizedCandidate candidate = normalize_summary(long_line);
  const auto& bullets = std::get<SummaryArtifact>(candidate.artifact).bullets;
  CHECK(bullets[0].size() == kSummaryBulletMaxChars);
  CHECK(bullets[0].rfind("lots of space", 0) == 0);
  CHECK(validate_artifact(candidate.artifact, default_extraction_schema()).pass);
}

TEST_CASE("recovery ladder: direct parse") {
  const RecoverOutcome outcome = recover_json(R"({"a":1})");
  REQUIRE(outcome.ok());
  CHECK((*outcome.doc)["a"] == 1);
  CHECK(outcome.parse_path == std::vector<std::string>{kStepDirect});
}

TEST_CASE("recovery ladder: fenced JSON with prose") {
  const RecoverOutcome outcome = recover_json("Sure! ```json\n{\"a\":1}\n``` done");
  REQUIRE(outcome.ok());
  CHECK((*outcome.doc)["a"] == 1);
  CHECK(outcome.parse_path ==
        std::vector<std::string>{kStepDirect, kStepFenceStrip});
}

TEST_CASE("recovery ladder: balanced scan pulls the first object") {
  const RecoverOutcome outcome =
      recover_json("prefix {\"a\": {\"nested\": \"}\"}} suffix {\"b\":2}");
  REQUIRE(outcome.ok());
  CHECK((*outcome.doc)["a"]["nested"] == "}");
  CHECK(outcome.parse_path == std::vector<std::string>{kStepDirect, kStepFenceStrip,
                                                       kStepBalancedScan});
}

TEST_CASE("recovery ladder: lenient fix repairs trailing comma inside prose") {
  // Matches a reference parse of the hand-repaired form exactly.
  const RecoverOutcome outcome = recover_json("prefix {\"a\":[1,2],} suffix");
  REQUIRE(outcome.ok());
  CHECK(*outcome.doc == ojson::parse(R"({"a":[1,2]})"));
  CHECK(outcome.parse_path ==
        std::vector<std::string>{kStepDirect, kStepFenceStrip, kStepBalancedScan,
                                 kStepLenientFix});
}

TEST_CASE("recovery ladder: single quotes are converted when unambiguous") {
  const RecoverOutcome outcome = recover_json("{'movement': 'local', 'risk': 'high'}");
  REQUIRE(outcome.ok());
  CHECK(*outcome.doc == ojson::parse(R"({"movement":"local","risk":"high"})"));
}

TEST_CASE("recovery ladder: unbalanced braces fail with the full path recorded") {
  const RecoverOutcome outcome = recover_json(kMalformedJsonFixture);
  CHECK_FALSE(outcome.ok());
  CHECK(outcome.parse_path ==
        std::vector<std::string>{kStepDirect, kStepFenceStrip, kStepBalancedScan,
                                 kStepLenientFix});
}

TEST_CASE("ladder order is fixed: step-k inputs never attribute to step k+1") {
  const std::vector<std::pair<std::string, std::string>> fixtures = {
      {R"({"k":"v"})", kStepDirect},
      {"```\n{\"k\":\"v\"}\n```", kStepFenceStrip},
      {"noise {\"k\":\"v\"} noise", kStepBalancedScan},
      {"noise {\"k\":\"v\",} noise", kStepLenientFix},
  };
  for (const auto& [input, expected_last] : fixtures) {
    const RecoverOutcome outcome = recover_json(input);
    REQUIRE(outcome.ok());
    CHECK(outcome.parse_path.back() == expected_last);
  }
}

TEST_CASE("ladder totality: random bytes never crash and never lie") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    std::string junk;
    const std::size_t len = rng() % 200;
    for (std::size_t i = 0; i < len; ++i)
      junk.push_back(static_cast<char>(rng() % 256));
    const RecoverOutcome outcome = recover_json(junk);
    if (outcome.ok()) CHECK(outcome.doc->is_object());
    const RecoverOutcome again = recover_json(junk);
    CHECK(outcome.ok() == again.ok());
    CHECK(outcome.parse_path == again.parse_path);
    if (outcome.ok()) CHECK(*outcome.doc == *again.doc);
  }
}

TEST_CASE("coercion: complete document passes through") {
  const ExtractionSchema schema = default_extraction_schema();
  ojson doc = ojson::parse(R"({
    "subject_name": "Dana", "subject_age": 12, "subject_description": "red coat",
    "last_seen_location": "Maple Park", "last_seen_time": "6 pm",
    "vehicles": [{"make":"Ford","model":"Focus","color":"blue","plate":"X1"}],
    "companions": ["adult male"], "movement_cues": ["north"], "risk_factors": ["weather"]
  })");
  const CoercionOutcome outcome = coerce_extraction(doc, schema);
  CHECK(validate_artifact(Artifact(outcome.artifact), schema).pass);
  CHECK(std::get<std::string>(*outcome.artifact.find("subject_name")) == "Dana");
  CHECK(std::get<std::int64_t>(*outcome.artifact.find("subject_age")) == 12);
}

TEST_CASE("coercion: scalar where list expected becomes a singleton with a note") {
  const ExtractionSchema schema = default_extraction_schema();
  const CoercionOutcome outcome =
      coerce_extraction(ojson::parse(R"({"movement_cues":"heading north"})"), schema);
  const auto& cues =
      std::get<std::vector<std::string>>(*outcome.artifact.find("movement_cues"));
  CHECK(cues == std::vector<std::string>{"heading north"});
  bool noted = false;
  for (const auto& note : outcome.notes)
    if (note == "coerced:movement_cues") noted = true;
  CHECK(noted);
}

TEST_CASE("coercion: empty document materializes every default with notes") {
  const ExtractionSchema schema = default_extraction_schema();
  const CoercionOutcome outcome = coerce_extraction(ojson::object(), schema);
  CHECK(validate_artifact(Artifact(outcome.artifact), schema).pass);
  CHECK(outcome.artifact.values.size() == schema.fields.size());
  for (const auto& field : schema.fields) {
    bool noted = false;
    for (const auto& note : outcome.notes)
      if (note == "defaulted:" + field.name) noted = true;
    CHECK(noted);
  }
}

TEST_CASE("coercion: list where scalar expected takes the first element") {
  const ExtractionSchema schema = default_extraction_schema();
  const CoercionOutcome outcome = coerce_extraction(
      ojson::parse(R"({"last_seen_location":["Maple Park","River Trail"]})"), schema);
  CHECK(std::get<std::string>(*outcome.artifact.find("last_seen_location")) ==
        "Maple Park");
}

TEST_CASE("coercion: digit strings parse for integer fields") {
  const ExtractionSchema schema = default_extraction_schema();
  const CoercionOutcome outcome =
      coerce_extraction(ojson::parse(R"({"subject_age":" 14 "})"), schema);
  CHECK(std::get<std::int64_t>(*outcome.artifact.find("subject_age")) == 14);
  const CoercionOutcome bad =
      coerce_extraction(ojson::parse(R"({"subject_age":"fourteen"})"), schema);
  CHECK(std::holds_alternative<std::monostate>(*bad.artifact.find("subject_age")));
}

TEST_CASE("coercion: unknown keys are dropped with notes") {
  const ExtractionSchema schema = default_extraction_schema();
  const CoercionOutcome outcome =
      coerce_extraction(ojson::parse(R"({"invented_field":"x"})"), schema);
  CHECK(outcome.artifact.find("invented_field") == nullptr);
  bool noted = false;
  for (const auto& note : outcome.notes)
    if (note == "dropped:invented_field") noted = true;
  CHECK(noted);
}

TEST_CASE("coercion never invents content") {
  const ExtractionSchema schema = default_extraction_schema();
  std::mt19937_64 rng(7);
  const std::vector<std::string> words = {"alpha", "bravo", "cedar", "delta", "east"};
  for (int trial = 0; trial < 200; ++trial) {
    ojson doc = ojson::object();
    const std::string name = words[rng() % words.size()];
    doc["subject_name"] = name;
    if (rng() % 2) doc["movement_cues"] = words[rng() % words.size()];
    if (rng() % 2) doc["junk"] = words[rng() % words.size()];
    const std::string serialized = doc.dump();
    const CoercionOutcome outcome = coerce_extraction(doc, schema);
    for (const auto& [field, value] : outcome.artifact.values) {
      if (const auto* s = std::get_if<std::string>(&value)) {
        if (!s->empty()) CHECK(serialized.find(*s) != std::string::npos);
      } else if (const auto* list = std::get_if<std::vector<std::string>>(&value)) {
        for (const auto& item : *list)
          CHECK(serialized.find(item) != std::string::npos);
      }
    }
  }
}

TEST_CASE("weak labels: canonical values pass through") {
  const WeakLabelOutcome outcome = normalize_weak_label(
      ojson::parse(R"({"movement":"local","risk":"high","confidence":0.8})"),
      SynonymTable::builtin());
  CHECK(outcome.artifact.movement == Movement::local);
  CHECK(outcome.artifact.risk == Risk::high);
  CHECK(outcome.artifact.confidence == doctest::Approx(0.8));
}

TEST_CASE("weak labels: synonyms map with notes; confidence defaults to 0.5") {
  const WeakLabelOutcome outcome = normalize_weak_label(
      ojson::parse(R"({"movement":"fled the state","risk":"severe"})"),
      SynonymTable::builtin());
  CHECK(outcome.artifact.movement == Movement::long_range);
  CHECK(outcome.artifact.risk == Risk::critical);
  CHECK(outcome.artifact.confidence == doctest::Approx(0.5));
  bool synonym_note = false, confidence_note = false;
  for (const auto& note : outcome.notes) {
    if (note.rfind("synonym:movement", 0) == 0) synonym_note = true;
    if (note == "defaulted:confidence") confidence_note = true;
  }
  CHECK(synonym_note);
  CHECK(confidence_note);
}

TEST_CASE("weak labels: unmapped terms become unknown with a note") {
  const WeakLabelOutcome outcome = normalize_weak_label(
      ojson::parse(R"({"movement":"teleported"})"), SynonymTable::builtin());
  CHECK(outcome.artifact.movement == Movement::unknown);
  bool noted = false;
  for (const auto& note : outcome.notes)
    if (note == "unmapped:movement") noted = true;
  CHECK(noted);
}

TEST_CASE("weak labels: confidence clamps into [0,1]; rationale trims to 300") {
  const WeakLabelOutcome high = normalize_weak_label(
      ojson::parse(R"({"movement":"local","risk":"low","confidence":3.5})"),
      SynonymTable::builtin());
  CHECK(high.artifact.confidence == 1.0);
  const WeakLabelOutcome low = normalize_weak_label(
      ojson::parse(R"({"movement":"local","risk":"low","confidence":-2})"),
      SynonymTable::builtin());
  CHECK(low.artifact.confidence == 0.0);

  ojson doc;
  doc["movement"] = "local";
  doc["risk"] = "low";
  doc["confidence"] = 0.5;
  doc["rationale"] = std::string(500, 'r');
  const WeakLabelOutcome trimmed = normalize_weak_label(doc, SynonymTable::builtin());
  CHECK(trimmed.artifact.rationale.size() == kRationaleMaxChars);
  CHECK(validate_artifact(Artifact(trimmed.artifact), default_extraction_schema()).pass);
}

TEST_CASE("synonym table loads from a JSON file") {
  guardian::testing::TempDir tmp("synonyms");
  {
    std::ofstream out(tmp.sub("synonyms.json"));
    out << R"({"movement":{"bolted":"long_range"},"risk":{"spicy":"high"}})";
  }
  const SynonymTable table = SynonymTable::load(tmp.sub("synonyms.json"));
  const WeakLabelOutcome outcome = normalize_weak_label(
      ojson::parse(R"({"movement":"bolted","risk":"spicy","confidence":0.9})"), table);
  CHECK(outcome.artifact.movement == Movement::long_range);
  CHECK(outcome.artifact.risk == Risk::high);
}

}  // TEST_SUITE
