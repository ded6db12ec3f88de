#include <benchmark/benchmark.h>

#include "guardian/agreement.hpp"
#include "guardian/normalize.hpp"
#include "guardian/prompts.hpp"
#include "guardian/zone_qa.hpp"

using namespace guardian;

namespace {

const char* kCleanJson =
    R"({"subject_name":"Daniel Ochoa","subject_age":14,"subject_description":"red hoodie",
        "last_seen_location":"Maple Park","last_seen_time":"around 6 pm",
        "vehicles":[{"make":"Honda","model":"Civic","color":"blue","plate":""}],
        "companions":[],"movement_cues":["heading north on Route 9"],
        "risk_factors":["weather","age"]})";

void BM_RecoverDirect(benchmark::State& state) {
  const std::string input = kCleanJson;
  for (auto _ : state) benchmark::DoNotOptimize(recover_json(input));
}
BENCHMARK(BM_RecoverDirect);

void BM_RecoverFenced(benchmark::State& state) {
  const std::string input = "Sure! ```json\n" + std::string(kCleanJson) + "\n``` done";
  for (auto _ : state) benchmark::DoNotOptimize(recover_json(input));
}
BENCHMARK(BM_RecoverFenced);

void BM_RecoverLenient(benchmark::State& state) {
  std::string body = kCleanJson;
  body = "noise before " + body.substr(0, body.size() - 1) + ",} noise after";
  for (auto _ : state) benchmark::DoNotOptimize(recover_json(body));
}
BENCHMARK(BM_RecoverLenient);

void BM_CoerceExtraction(benchmark::State& state) {
  const ExtractionSchema schema = default_extraction_schema();
  const ojson doc = ojson::parse(kCleanJson);
  for (auto _ : state) benchmark::DoNotOptimize(coerce_extraction(doc, schema));
}
BENCHMARK(BM_CoerceExtraction);

void BM_NormalizeSummary(benchmark::State& state) {
  const std::string raw =
      "Daniel Ochoa, 14, red hoodie\nLast seen at Maple Park\nAround 6 pm\n"
      "Blue sedan heading north\nPossible adult companion\nExtra line one\nExtra two";
  for (auto _ : state) benchmark::DoNotOptimize(normalize_summary(raw));
}
BENCHMARK(BM_NormalizeSummary);

void BM_ScorePairExtraction(benchmark::State& state) {
  const ExtractionSchema schema = default_extraction_schema();
  const AgreementConfig config;
  NormalizedCandidate a, b;
  a.backend_id = "a";
  a.artifact = coerce_extraction(ojson::parse(kCleanJson), schema).artifact;
  a.valid = true;
  b = a;
  b.backend_id = "b";
  for (auto _ : state) benchmark::DoNotOptimize(score_pair(a, b, config, schema));
}
BENCHMARK(BM_ScorePairExtraction);

void BM_ScorePairSummary(benchmark::State& state) {
  const ExtractionSchema schema = default_extraction_schema();
  const AgreementConfig config;
  const NormalizedCandidate a = normalize_summary(
      "Daniel Ochoa, 14\nLast seen at Maple Park\nAround 6 pm\nBlue sedan\nHeading north",
      "a");
  const NormalizedCandidate b = normalize_summary(
      "Daniel, age 14\nSeen near Maple Park\nEvening around 6 pm\nBlue Honda\nMoving north",
      "b");
  for (auto _ : state) benchmark::DoNotOptimize(score_pair(a, b, config, schema));
}
BENCHMARK(BM_ScorePairSummary);

void BM_RenderExtractPrompt(benchmark::State& state) {
  const PromptLibrary prompts = PromptLibrary::builtin();
  const ExtractionSchema schema = default_extraction_schema();
  CaseRecord rec;
  rec.case_id = "bench";
  rec.narrative = std::string(2000, 'n');
  for (auto _ : state)
    benchmark::DoNotOptimize(prompts.render_task_prompt(TaskKind::extract, rec, schema));
}
BENCHMARK(BM_RenderExtractPrompt);

void BM_RecomputePriority(benchmark::State& state) {
  const ZoneQaConfig config;
  ZoneCandidate zone;
  zone.zone_id = "z";
  zone.area_km2 = 12.5;
  zone.priority = 0.62;
  zone.rl_score = 0.4;
  for (auto _ : state)
    benchmark::DoNotOptimize(recompute_priority(zone, 0.7, config));
}
BENCHMARK(BM_RecomputePriority);

}  // namespace

BENCHMARK_MAIN();
