// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line through the criterion reporter. Everything runs on scripted backends
// and a virtual clock; the only network activity is one integration test
// against a local stub server.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "doctest.h"
#include "guardian/consensus.hpp"
#include "guardian/http_backend.hpp"
#include "guardian/orchestrator.hpp"
#include "guardian/zone_qa.hpp"
#include "httplib.h"
#include "support/test_support.hpp"

namespace fs = std::filesystem;
using namespace guardian;
using namespace guardian::testing;

namespace {

std::string fixture_path(const std::string& name) {
  return std::string(GUARDIAN_FIXTURES_DIR) + "/" + name;
}

ojson load_script_doc() {
  std::ifstream in(fixture_path("script20.json"));
  REQUIRE(in);
  return ojson::parse(in);
}

/// Full fixture pipeline: 20-case corpus, six scripted task backends plus a
/// scripted referee, virtual clock.
struct FixtureRun {
  FixtureRun() : clock(std::make_shared<FakeClock>()), prompts(PromptLibrary::builtin()) {
    schema = default_extraction_schema();
    cases = load_corpus(fixture_path("corpus20.jsonl"), schema);
  }

  void build(const std::string& out_root, const std::string& cache_dir) {
    const ojson script = load_script_doc();
    auto handle = [&](const std::string& backend_id, BackendRole role) {
      return scripted_backend(scripted_profile(backend_id, role),
                              ScriptTable::from_json(script.at(backend_id)), clock);
    };
    backends[BackendRole::summarizer] = {handle("summarizer-qwen", BackendRole::summarizer),
                                         handle("summarizer-llama", BackendRole::summarizer)};
    backends[BackendRole::extractor] = {handle("extractor-qwen", BackendRole::extractor),
                                        handle("extractor-llama", BackendRole::extractor)};
    backends[BackendRole::weak_labeler] = {
        handle("weak_labeler-qwen", BackendRole::weak_labeler),
        handle("weak_labeler-llama", BackendRole::weak_labeler)};
    referee = handle("referee", BackendRole::referee);

    OrchestratorConfig config;
    config.out_root = out_root;
    config.cache_dir = cache_dir;
    config.config_digest = "fixture-config";
    orchestrator = std::make_unique<Orchestrator>(&prompts, schema, config, clock);
  }

  RunResults run(RunMode mode, std::uint64_t seed) {
    RunPlan plan;
    plan.mode = mode;
    plan.seed = seed;
    return orchestrator->run_corpus(cases, plan, backends, &referee);
  }

  std::shared_ptr<FakeClock> clock;
  PromptLibrary prompts;
  ExtractionSchema schema;
  std::vector<CaseRecord> cases;
  RoleBackends backends;
  BackendHandle referee;
  std::unique_ptr<Orchestrator> orchestrator;
};

std::map<std::string, std::string> snapshot_tree(const std::string& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      files[fs::relative(entry.path(), root).string()] =
          read_file(entry.path().string());
  return files;
}

}  // namespace

TEST_SUITE("acceptance") {

TEST_CASE("C01 end-to-end reliability on the fault-injected corpus") {
  // The bundled scripts must actually inject the observed failure modes.
  const ojson script = load_script_doc();
  int extraction_responses = 0;
  int malformed = 0;
  for (const auto& backend : {"extractor-qwen", "extractor-llama"}) {
    for (const auto& [key, directives] : script.at(backend).items()) {
      (void)key;
      for (const auto& d : directives) {
        ++extraction_responses;
        if (d.contains("fault") && d.at("fault") == "malformed_json") ++malformed;
      }
    }
  }
  CHECK(extraction_responses == 40);
  CHECK(static_cast<double>(malformed) / extraction_responses >= 0.30);

  bool overconfident_present = false;
  for (const auto& [key, directives] : script.at("weak_labeler-qwen").items()) {
    (void)key;
    for (const auto& d : directives)
      if (d.contains("fault") && d.at("fault") == "overconfident_label")
        overconfident_present = true;
  }
  CHECK(overconfident_present);

  bool speculative_prose = false;
  for (const auto& [key, directives] : script.at("summarizer-qwen").items()) {
    (void)key;
    for (const auto& d : directives)
      if (d.contains("text") &&
          d.at("text").get<std::string>().find("probably") != std::string::npos)
        speculative_prose = true;
  }
  CHECK(speculative_prose);

  const auto wall_start = std::chrono::steady_clock::now();
  TempDir tmp("acc_c1");
  FixtureRun fixture;
  fixture.build(tmp.sub("out"), tmp.sub("cache"));
  const RunResults results = fixture.run(RunMode::stage_by_stage, 1);
  const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - wall_start)
                           .count();
  CHECK(wall_ms < 30000);

  REQUIRE(results.size() == 20);
  int artifacts = 0;
  for (const auto& rec : fixture.cases) {
    REQUIRE(results.count(rec.case_id));
    for (TaskKind task :
         {TaskKind::summarize, TaskKind::extract, TaskKind::weak_label}) {
      REQUIRE(results.at(rec.case_id).count(task));
      const ConsensusResult& result = results.at(rec.case_id).at(task);
      CHECK(validate_artifact(result.canonical, fixture.schema).pass);
      ++artifacts;
      // Complete trace: identity, candidates, agreement, timing all present.
      CHECK(result.trace.case_id == rec.case_id);
      CHECK(result.trace.candidate_ids.size() == 2);
      CHECK_FALSE(result.trace.timing_ms.empty());
      const std::string trace_file =
          tmp.sub("out") + "/cases/" + rec.case_id + "/" + trace_filename(task);
      CHECK(fs::exists(trace_file));
    }
  }
  CHECK(artifacts == 60);
}

TEST_CASE("C02 deterministic recovery ladder on a generated corruption corpus") {
  std::mt19937_64 rng(20240809);
  const std::vector<std::string> words = {"maple", "park",  "sedan", "north",
                                          "red",   "trail", "noon",  "creek"};
  auto base_doc = [&] {
    ojson doc = ojson::object();
    doc["subject_name"] = words[rng() % words.size()] + " " + words[rng() % words.size()];
    doc["last_seen_location"] = words[rng() % words.size()];
    doc["last_seen_time"] = "around " + std::to_string(1 + rng() % 12) + " pm";
    ojson cues = ojson::array();
    for (std::size_t i = 0; i < 1 + rng() % 3; ++i)
      cues.push_back(words[rng() % words.size()]);
    doc["movement_cues"] = cues;
    doc["subject_age"] = static_cast<int>(6 + rng() % 12);
    return doc;
  };

  using Corruptor = std::function<std::string(const std::string&)>;
  const Corruptor prose = [](const std::string& s) {
    return "The extraction result follows. " + s + " End of model output.";
  };
  const Corruptor fence = [](const std::string& s) {
    return "```json\n" + s + "\n```";
  };
  const Corruptor fence_prose = [](const std::string& s) {
    return "Sure! ```json\n" + s + "\n``` anything else?";
  };
  const Corruptor trailing_comma = [](const std::string& s) {
    return s.substr(0, s.size() - 1) + ",}";
  };
  const Corruptor single_quotes = [](const std::string& s) {
    std::string out = s;
    for (char& c : out)
      if (c == '"') c = '\'';
    return out;
  };
  const std::vector<std::vector<Corruptor>> recipes = {
      {prose},
      {fence},
      {fence_prose},
      {trailing_comma},
      {single_quotes},
      {trailing_comma, prose},
      {single_quotes, prose},
      {trailing_comma, fence},
      {single_quotes, fence_prose},
      {single_quotes, trailing_comma, prose},
  };

  int total = 0;
  int recovered_exactly = 0;
  for (int round = 0; round < 24; ++round) {
    const ojson original = base_doc();
    for (const auto& recipe : recipes) {
      std::string corrupted = original.dump();
      for (const auto& step : recipe) corrupted = step(corrupted);
      ++total;
      const RecoverOutcome outcome = recover_json(corrupted);
      if (!outcome.ok()) continue;
      // No repair-prompt step may appear in the deterministic ladder.
      for (const auto& step : outcome.parse_path) {
        CHECK(step != kStepRepairPrompt);
        CHECK(step != kStepDefaulted);
      }
      if (*outcome.doc == original) ++recovered_exactly;
    }
  }
  CHECK(total == 240);
  CAPTURE(recovered_exactly);
  CHECK(static_cast<double>(recovered_exactly) / total >= 0.95);
}

TEST_CASE("C03 no-invention constraint under adversarial referees") {
  std::mt19937_64 rng(777);
  const std::vector<std::string> invented = {"flee", "evaporated", "teleported",
                                             "catastrophic", "42", "long_range "};
  const PromptLibrary prompts = PromptLibrary::builtin();
  const ExtractionSchema schema = default_extraction_schema();
  int weak_violations_recorded = 0;
  int extract_violations_recorded = 0;

  for (int trial = 0; trial < 1000; ++trial) {
    auto clock = std::make_shared<FakeClock>();
    ConsensusConfig config;
    config.agreement = AgreementConfig::defaults();

    if (trial % 2 == 0) {
      // Weak-label tie-break path with an adversarial single-field referee.
      const Movement m1 = static_cast<Movement>(rng() % 4);
      const Movement m2 = static_cast<Movement>((static_cast<int>(m1) + 1 + rng() % 3) % 4);
      const Risk r = static_cast<Risk>(rng() % 5);
      const std::vector<NormalizedCandidate> candidates = {
          weak_label_candidate("a", m1, r), weak_label_candidate("b", m2, r)};

      const bool adversarial = rng() % 10 < 7;
      const std::string choice =
          adversarial ? invented[rng() % invented.size()] : movement_name(m2);
      // A choice that canonicalizes onto a presented option is a legitimate
      // selection, not an invention.
      const bool is_violation = text::canonical(choice) != movement_name(m1) &&
                                text::canonical(choice) != movement_name(m2);
      BackendHandle referee = scripted_handle(
          "referee", BackendRole::referee,
          {{"referee:t", {text_directive(std::string("{\"choice\":\"") + choice +
                                         "\",\"rationale\":\"x\"}")}}},
          clock);
      const ConsensusEngine engine(&prompts, schema, config, clock);
      const DeadlineBudget budget(clock, 60000);
      const ConsensusResult result =
          engine.run_consensus(TaskKind::weak_label, make_case("t", "n"), candidates,
                               &referee, budget, {"a", "b"});

      const auto& canonical = std::get<WeakLabelArtifact>(result.canonical);
      CHECK((canonical.movement == m1 || canonical.movement == m2));
      CHECK(canonical.risk == r);
      if (is_violation) {
        bool recorded = false;
        for (const auto& field : result.trace.reverted_fields)
          if (field == "movement") recorded = true;
        CHECK(recorded);
        ++weak_violations_recorded;
      }
    } else {
      // Whole-artifact extraction adjudication with invented scalar values.
      config.tiebreak_max_fields = 0;
      ojson values_a = ojson::object();
      values_a["subject_name"] = "Case Subject";
      values_a["subject_description"] = "green coat";
      values_a["last_seen_location"] = std::string("location ") + std::to_string(rng() % 5);
      values_a["last_seen_time"] = "noon";
      values_a["movement_cues"] = ojson::array({"north"});
      values_a["risk_factors"] = ojson::array({"weather"});
      ojson values_b = values_a;
      values_b["last_seen_location"] = std::string("location ") + std::to_string(5 + rng() % 5);

      const std::vector<NormalizedCandidate> candidates = {
          extraction_candidate("a", values_a, schema),
          extraction_candidate("b", values_b, schema)};

      ojson referee_doc = values_a;
      referee_doc["last_seen_location"] = "invented place " + std::to_string(rng() % 100);
      const bool also_invent_name = rng() % 2 == 0;
      if (also_invent_name) referee_doc["subject_name"] = "Nobody Anywhere";
      BackendHandle referee = scripted_handle(
          "referee", BackendRole::referee,
          {{"referee:t", {text_directive(referee_doc.dump())}}}, clock);
      const ConsensusEngine engine(&prompts, schema, config, clock);
      const DeadlineBudget budget(clock, 60000);
      const ConsensusResult result =
          engine.run_consensus(TaskKind::extract, make_case("t", "n"), candidates,
                               &referee, budget, {"a", "b"});

      const auto& canonical = std::get<ExtractionArtifact>(result.canonical);
      for (const auto& [field, value] : canonical.values) {
        const FieldSpec* spec = schema.find(field);
        REQUIRE(spec != nullptr);
        if (spec->kind != FieldKind::text && spec->kind != FieldKind::timestamp_text)
          continue;
        const std::string canon = text::canonical(std::get<std::string>(value));
        if (canon.empty()) continue;  // schema default
        bool from_candidates = false;
        for (const auto& candidate : candidates) {
          const auto& artifact = std::get<ExtractionArtifact>(candidate.artifact);
          const FieldValue* cv = artifact.find(field);
          if (cv && text::canonical(std::get<std::string>(*cv)) == canon)
            from_candidates = true;
        }
        CHECK(from_candidates);
      }
      bool location_reverted = false;
      bool name_reverted = false;
      for (const auto& field : result.trace.reverted_fields) {
        if (field == "last_seen_location") location_reverted = true;
        if (field == "subject_name") name_reverted = true;
      }
      CHECK(location_reverted);
      if (also_invent_name) CHECK(name_reverted);
      ++extract_violations_recorded;
    }
  }
  CHECK(weak_violations_recorded > 0);
  CHECK(extract_violations_recorded > 0);
}

TEST_CASE("C04 deadline dominance over referee escalation") {
  const PromptLibrary prompts = PromptLibrary::builtin();
  const ExtractionSchema schema = default_extraction_schema();
  std::mt19937_64 rng(4242);

  int tight_ok = 0;
  int ample_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Movement m1 = static_cast<Movement>(rng() % 4);
    const Movement m2 = static_cast<Movement>((static_cast<int>(m1) + 1) % 4);
    const std::vector<NormalizedCandidate> candidates = {
        weak_label_candidate("a", m1, Risk::high),
        weak_label_candidate("b", m2, Risk::high)};

    {
      auto clock = std::make_shared<FakeClock>();
      ConsensusConfig config;
      config.agreement = AgreementConfig::defaults();
      BackendHandle referee = scripted_handle(
          "referee", BackendRole::referee,
          {{"referee:t",
            {text_directive("{\"choice\":\"" + movement_name(m1) + "\",\"rationale\":\"x\"}")}}},
          clock);
      const ConsensusEngine engine(&prompts, schema, config, clock);
      const DeadlineBudget tight(clock, config.referee_cost_estimate_ms - 1);
      const ConsensusResult result = engine.run_consensus(
          TaskKind::weak_label, make_case("t", "n"), candidates, &referee, tight, {"a", "b"});
      if (!result.trace.referee_called &&
          result.trace.fallback_reason == FallbackReason::deadline_exceeded)
        ++tight_ok;
    }
    {
      auto clock = std::make_shared<FakeClock>();
      ConsensusConfig config;
      config.agreement = AgreementConfig::defaults();
      BackendHandle referee = scripted_handle(
          "referee", BackendRole::referee,
          {{"referee:t",
            {text_directive("{\"choice\":\"" + movement_name(m1) + "\",\"rationale\":\"x\"}")}}},
          clock);
      const ConsensusEngine engine(&prompts, schema, config, clock);
      const DeadlineBudget ample(clock, 60000);
      const ConsensusResult result = engine.run_consensus(
          TaskKind::weak_label, make_case("t", "n"), candidates, &referee, ample, {"a", "b"});
      if (result.trace.referee_called) ++ample_ok;
    }
  }
  CHECK(tight_ok == 100);
  CHECK(ample_ok == 100);
}

TEST_CASE("C05 consensus determinism: byte-identical artifact and trace files") {
  auto run_tree = [](std::uint64_t seed) {
    TempDir tmp("acc_c5");
    FixtureRun fixture;
    fixture.build(tmp.sub("out"), tmp.sub("cache"));
    fixture.run(RunMode::stage_by_stage, seed);
    return snapshot_tree(tmp.sub("out"));
  };
  const auto first = run_tree(11);
  const auto second = run_tree(11);
  REQUIRE(first.size() == second.size());
  for (const auto& [path, bytes] : first) {
    CAPTURE(path);
    REQUIRE(second.count(path));
    CHECK(second.at(path) == bytes);
  }
}

TEST_CASE("C06 mode equivalence: stage and case runs write identical artifacts") {
  auto run_tree = [](RunMode mode) {
    TempDir tmp("acc_c6");
    FixtureRun fixture;
    fixture.build(tmp.sub("out"), tmp.sub("cache"));
    fixture.run(mode, 21);
    std::map<std::string, std::string> artifacts;
    for (const auto& [path, bytes] : snapshot_tree(tmp.sub("out"))) {
      const std::string name = fs::path(path).filename().string();
      if (name.rfind("trace_", 0) == 0 || name == "run_manifest.json") continue;
      artifacts[path] = bytes;
    }
    return artifacts;
  };
  const auto stage = run_tree(RunMode::stage_by_stage);
  const auto by_case = run_tree(RunMode::case_by_case);
  REQUIRE(stage.size() == 60);
  REQUIRE(by_case.size() == 60);
  for (const auto& [path, bytes] : stage) {
    CAPTURE(path);
    REQUIRE(by_case.count(path));
    CHECK(by_case.at(path) == bytes);
  }
}

TEST_CASE("C07 resiliency schedule: jitter windows and deadline instants") {
  int episodes = 0;
  int violations = 0;

  // 700 retry episodes: sleeps must land in [0,500], [0,1000], [0,2000].
  for (std::uint64_t seed = 0; seed < 700; ++seed) {
    auto clock = std::make_shared<FakeClock>();
    auto handle = scripted_handle(
        "b", BackendRole::extractor,
        {{"extractor:c",
          {fault_directive(Directive::Kind::http_5xx),
           fault_directive(Directive::Kind::http_5xx),
           fault_directive(Directive::Kind::http_5xx), text_directive("ok")}}},
        clock, seed);
    const DeadlineBudget budget(clock, 3600000);
    const BackendResponse response = complete(
        handle, ChatRequest{{{ChatRole::user, "x"}}, {}}, budget, {"extractor", "c", "task"});
    ++episodes;
    if (response.outcome != CallOutcome::ok || response.attempts != 4) ++violations;
    REQUIRE(response.retry_sleeps_ms.size() == 3);
    const std::int64_t bounds[3] = {500, 1000, 2000};
    for (int k = 0; k < 3; ++k)
      if (response.retry_sleeps_ms[k] < 0 || response.retry_sleeps_ms[k] > bounds[k])
        ++violations;
    if (clock->now_ms() > budget.deadline_instant_ms()) ++violations;
  }

  // 300 episodes under starved deadlines mixing timeouts and server faults:
  // completion never crosses the deadline instant.
  std::mt19937_64 rng(3131);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto clock = std::make_shared<FakeClock>();
    auto handle = scripted_handle(
        "b", BackendRole::extractor,
        {{"extractor:c",
          {fault_directive(seed % 2 ? Directive::Kind::timeout
                                    : Directive::Kind::http_5xx),
           fault_directive(Directive::Kind::timeout),
           fault_directive(Directive::Kind::http_5xx)}}},
        clock, seed);
    const DeadlineBudget budget(clock, static_cast<std::int64_t>(1 + rng() % 900));
    const BackendResponse response = complete(
        handle, ChatRequest{{{ChatRole::user, "x"}}, {}}, budget, {"extractor", "c", "task"});
    ++episodes;
    (void)response;
    if (clock->now_ms() > budget.deadline_instant_ms()) ++violations;
  }

  CHECK(episodes == 1000);
  CHECK(violations == 0);
}

TEST_CASE("C08 zone QA properties over 10000 random samples") {
  std::mt19937_64 rng(88);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() % 1000000) / 1000000.0);
  };

  for (int trial = 0; trial < 10000; ++trial) {
    ZoneQaConfig config;
    config.w_p = uniform(0.1, 3.0);
    config.w_q = uniform(0.1, 3.0);
    config.w_a = uniform(0.1, 3.0);
    config.w_r = uniform(0.0, 3.0);
    config.bias = uniform(-3.0, 3.0);
    config.area_ref_km2 = uniform(1.0, 100.0);

    ZoneCandidate zone;
    zone.zone_id = "z";
    zone.area_km2 = uniform(0.05, 2000.0);
    zone.priority = uniform(0.0, 1.0);
    if (rng() % 2) zone.rl_score = uniform(0.0, 1.0);
    const double plausibility = uniform(0.0, 1.0);

    const ZoneAssessment base = recompute_priority(zone, plausibility, config);
    CHECK(base.new_priority > 0.0);
    CHECK(base.new_priority < 1.0);

    // Strict monotonicity with positive weights.
    const double dp = 0.05;
    if (plausibility + dp <= 1.0) {
      const ZoneAssessment more = recompute_priority(zone, plausibility + dp, config);
      CHECK(more.new_priority > base.new_priority);
    }
    ZoneCandidate higher = zone;
    if (zone.priority + dp <= 1.0) {
      higher.priority = zone.priority + dp;
      CHECK(recompute_priority(higher, plausibility, config).new_priority >
            base.new_priority);
    }
    ZoneCandidate bigger = zone;
    bigger.area_km2 = zone.area_km2 * 2.0;
    CHECK(recompute_priority(bigger, plausibility, config).new_priority <
          base.new_priority);

    // Labeler failure: always neutral 0.5.
    const auto [p, source] = plausibility_from_label(std::nullopt, config.confidence_floor);
    CHECK(p == 0.5);
    CHECK(source == PlausibilitySource::neutral_fallback);
  }

  // Worked example against the independently evaluated oracle value.
  ZoneQaConfig defaults;
  ZoneCandidate zone;
  zone.zone_id = "ex";
  zone.area_km2 = 10.0;
  zone.priority = 0.8;
  const ZoneAssessment example = recompute_priority(zone, 0.5, defaults);
  CHECK(std::abs(example.new_priority - 0.6232642116936161) < 1e-9);
}

TEST_CASE("C09 agreement algebra property tests") {
  const AgreementConfig config = AgreementConfig::defaults();
  const ExtractionSchema schema = default_extraction_schema();
  std::mt19937_64 rng(909);
  const std::vector<std::string> words = {"maple", "park", "north", "sedan", "red",
                                          "river", "trail", "dusk",  "friday", "blue"};
  auto random_list = [&](std::size_t max_len) {
    std::vector<std::string> items;
    const std::size_t n = rng() % (max_len + 1);
    for (std::size_t i = 0; i < n; ++i) items.push_back(words[rng() % words.size()]);
    return items;
  };
  auto candidate_from_lists = [&](const std::string& id,
                                  const std::vector<std::string>& cues,
                                  const std::vector<std::string>& risks) {
    ojson doc = ojson::object();
    doc["subject_name"] = words[rng() % words.size()];
    doc["movement_cues"] = cues;
    doc["risk_factors"] = risks;
    return extraction_candidate(id, doc, schema);
  };

  for (int trial = 0; trial < 1000; ++trial) {
    // Reflexivity and symmetry on random weak labels.
    const NormalizedCandidate w1 = weak_label_candidate(
        "a", static_cast<Movement>(rng() % 5), static_cast<Risk>(rng() % 5),
        static_cast<double>(rng() % 100) / 100.0);
    const NormalizedCandidate w2 = weak_label_candidate(
        "b", static_cast<Movement>(rng() % 5), static_cast<Risk>(rng() % 5),
        static_cast<double>(rng() % 100) / 100.0);
    CHECK(score_pair(w1, w1, config, schema).overall == 1.0);
    CHECK(score_pair(w1, w2, config, schema).overall ==
          score_pair(w2, w1, config, schema).overall);

    // List order-invariance on extractions.
    std::vector<std::string> cues = random_list(5);
    std::vector<std::string> risks = random_list(4);
    const NormalizedCandidate e1 = candidate_from_lists("a", cues, risks);
    std::shuffle(cues.begin(), cues.end(), rng);
    std::shuffle(risks.begin(), risks.end(), rng);
    const NormalizedCandidate e2 = candidate_from_lists("b", cues, risks);
    const AgreementReport report = score_pair(e1, e2, config, schema);
    CHECK(report.field_score("movement_cues") == 1.0);
    CHECK(report.field_score("risk_factors") == 1.0);
    CHECK(score_pair(e1, e1, config, schema).overall == 1.0);

    // Rank permutation stability.
    std::vector<NormalizedCandidate> trio = {
        weak_label_candidate("a", static_cast<Movement>(rng() % 5),
                             static_cast<Risk>(rng() % 5)),
        weak_label_candidate("b", static_cast<Movement>(rng() % 5),
                             static_cast<Risk>(rng() % 5)),
        weak_label_candidate("c", static_cast<Movement>(rng() % 5),
                             static_cast<Risk>(rng() % 5))};
    auto ids_of = [](const std::vector<NormalizedCandidate>& ranked) {
      std::vector<std::string> ids;
      for (const auto& candidate : ranked) ids.push_back(candidate.backend_id);
      return ids;
    };
    const auto baseline = ids_of(rank_candidates(trio, config, schema, {"a", "b", "c"}));
    std::shuffle(trio.begin(), trio.end(), rng);
    CHECK(ids_of(rank_candidates(trio, config, schema, {"a", "b", "c"})) == baseline);
  }
}

TEST_CASE("C10 offline guarantee with one local stub integration test") {
  // Scripted backends never open sockets: the whole fixture run uses
  // ScriptedTransport instances only.
  FixtureRun fixture;
  {
    TempDir tmp("acc_c10");
    fixture.build(tmp.sub("out"), tmp.sub("cache"));
    for (const auto& [role, handles] : fixture.backends) {
      (void)role;
      for (const auto& handle : handles)
        CHECK(handle.profile.kind == BackendKind::scripted);
    }
    CHECK(fixture.referee.profile.kind == BackendKind::scripted);
    fixture.run(RunMode::stage_by_stage, 31);
  }

  // The single http integration test: a local stub speaking the
  // /v1/chat/completions format.
  httplib::Server server;
  std::string seen_path;
  ojson seen_body;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                seen_path = req.path;
                seen_body = ojson::parse(req.body);
                ojson reply;
                reply["choices"] = ojson::array(
                    {{{"message", {{"role", "assistant"}, {"content", "- stub"}}}}});
                res.set_content(reply.dump(), "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto clock = std::make_shared<SystemClock>();
  BackendProfile profile;
  profile.backend_id = "stub";
  profile.role = BackendRole::summarizer;
  profile.kind = BackendKind::http;
  profile.base_url = "http://127.0.0.1";
  profile.port = port;
  profile.model_name = "stub-model";
  BackendHandle handle = http_backend(profile, clock);
  const DeadlineBudget budget(clock, 20000);
  ChatRequest request;
  request.messages = {{ChatRole::system, "contract"}, {ChatRole::user, "case"}};
  const BackendResponse response =
      complete(handle, request, budget, {"summarizer", "stub-case", "task"});

  server.stop();
  server_thread.join();

  CHECK(response.outcome == CallOutcome::ok);
  CHECK(response.raw_text == "- stub");
  CHECK(seen_path == "/v1/chat/completions");
  CHECK(seen_body.at("model") == "stub-model");
  REQUIRE(seen_body.at("messages").size() == 2);
  CHECK(seen_body.at("messages")[0].at("role") == "system");
}

}  // TEST_SUITE
