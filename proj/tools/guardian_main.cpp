// Guardian pipeline CLI: run the consensus pipeline or Zone QA over a case
// corpus, inspect traces, re-validate persisted artifacts, manage the cache.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "guardian/config.hpp"
#include "guardian/http_backend.hpp"
#include "guardian/orchestrator.hpp"
#include "guardian/scripted_backend.hpp"
#include "guardian/text.hpp"

namespace {

using namespace guardian;

constexpr int kExitOk = 0;
constexpr int kExitViolations = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitUsage = 64;

struct CommonFlags {
  std::string cases_path;
  std::string config_path;
  std::string out_root;
  std::string cache_dir;
  std::string backends_mode = "scripted";
  std::string clock_mode = "auto";  // fake for scripted, real for http
  std::string script_path;
  std::string mode = "stage";
  std::string stages_csv = "summarize,extract,weak_label";
  std::string rl_scores_path;
  int concurrency = 0;
  std::int64_t deadline_ms = 0;
  bool force = false;
  std::uint64_t seed = 0;
};

GuardianConfig load_effective_config(const CommonFlags& flags) {
  std::string path = flags.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("GUARDIAN_CONFIG")) path = env;
  }
  GuardianConfig config = path.empty() ? default_config() : load_config_file(path);

  // Flags override file values.
  if (!flags.out_root.empty()) config.orchestrator.out_root = flags.out_root;
  if (!flags.cache_dir.empty()) config.orchestrator.cache_dir = flags.cache_dir;
  if (flags.concurrency > 0) config.orchestrator.concurrency_limit = flags.concurrency;
  if (flags.deadline_ms > 0) config.orchestrator.per_task_budget_ms = flags.deadline_ms;

  const BackendKind kind =
      flags.backends_mode == "http" ? BackendKind::http : BackendKind::scripted;
  for (auto& profile : config.backends) {
    profile.kind = kind;
    if (!flags.script_path.empty()) profile.script_path = flags.script_path;
  }
  config.referee.kind = kind;
  if (!flags.script_path.empty()) config.referee.script_path = flags.script_path;
  return config;
}

/// Script files map "role:case_id" to directive arrays, either flat (shared
/// by every backend) or nested under backend ids.
ScriptTable script_for_backend(const std::string& path, const std::string& backend_id) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open script file: " + path);
  ojson doc = ojson::parse(in);
  if (doc.is_object() && !doc.empty() && doc.begin().value().is_object()) {
    // Nested form: {"backend_id": {"role:case": [...]}}
    if (doc.contains(backend_id)) return ScriptTable::from_json(doc.at(backend_id));
    return {};
  }
  return ScriptTable::from_json(doc);
}

struct Runtime {
  GuardianConfig config;
  std::shared_ptr<Clock> clock;
  std::unique_ptr<PromptLibrary> prompts;
  ExtractionSchema schema;
  RoleBackends backends;
  BackendHandle referee;
  std::unique_ptr<Orchestrator> orchestrator;
};

BackendHandle build_backend(const BackendProfile& profile,
                            const std::shared_ptr<Clock>& clock) {
  if (profile.kind == BackendKind::http) return http_backend(profile, clock);
  return scripted_backend(profile, script_for_backend(profile.script_path,
                                                      profile.backend_id),
                          clock);
}

Runtime build_runtime(const CommonFlags& flags) {
  Runtime rt;
  rt.config = load_effective_config(flags);

  const bool fake_clock = flags.clock_mode == "fake" ||
                          (flags.clock_mode == "auto" && flags.backends_mode == "scripted");
  if (fake_clock)
    rt.clock = std::make_shared<FakeClock>();
  else
    rt.clock = std::make_shared<SystemClock>();

  rt.prompts = std::make_unique<PromptLibrary>(PromptLibrary::builtin());
  rt.prompts->char_budget = rt.config.templates.char_budget;
  if (rt.config.templates.dir) rt.prompts->load_dir(*rt.config.templates.dir);

  if (rt.config.schema_path) {
    std::ifstream in(*rt.config.schema_path);
    if (!in) throw std::runtime_error("cannot open schema file: " + *rt.config.schema_path);
    rt.schema = ExtractionSchema::from_json(ojson::parse(in));
  } else {
    rt.schema = default_extraction_schema();
  }

  if (rt.config.stopword_list_path) {
    std::ifstream in(*rt.config.stopword_list_path);
    if (!in)
      throw std::runtime_error("cannot open stopword list: " +
                               *rt.config.stopword_list_path);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      const std::string word = text::canonical(line);
      if (!word.empty()) words.insert(word);
    }
    rt.config.agreement.stopwords = std::move(words);
  }
  if (rt.config.cue_table_path)
    rt.config.agreement.cues = CueTable::load(*rt.config.cue_table_path);
  rt.config.consensus.agreement = rt.config.agreement;

  for (const auto& profile : rt.config.backends)
    rt.backends[profile.role].push_back(build_backend(profile, rt.clock));
  rt.referee = build_backend(rt.config.referee, rt.clock);

  OrchestratorConfig orch;
  orch.consensus = rt.config.consensus;
  orch.out_root = rt.config.orchestrator.out_root;
  orch.cache_dir = rt.config.orchestrator.cache_dir;
  orch.config_digest = rt.config.digest();
  rt.orchestrator =
      std::make_unique<Orchestrator>(rt.prompts.get(), rt.schema, orch, rt.clock);
  if (rt.config.synonym_table_path)
    rt.orchestrator->engine().set_synonyms(
        SynonymTable::load(*rt.config.synonym_table_path));
  return rt;
}

RunPlan build_plan(const CommonFlags& flags, const GuardianConfig& config) {
  RunPlan plan;
  plan.mode = flags.mode == "case" ? RunMode::case_by_case : RunMode::stage_by_stage;
  plan.stages.clear();
  std::string csv = flags.stages_csv;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t comma = csv.find(',', pos);
    const std::string token = text::trim(
        comma == std::string::npos ? csv.substr(pos) : csv.substr(pos, comma - pos));
    if (!token.empty()) {
      auto task = task_from_slug(token);
      if (!task) throw std::runtime_error("unknown stage: " + token);
      plan.stages.push_back(*task);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (plan.stages.empty()) throw std::runtime_error("no stages selected");
  plan.concurrency_limit = config.orchestrator.concurrency_limit;
  plan.per_task_budget_ms = config.orchestrator.per_task_budget_ms;
  plan.force = flags.force;
  plan.seed = flags.seed;
  return plan;
}

int cmd_run(const CommonFlags& flags) {
  Runtime rt = build_runtime(flags);
  const std::vector<CaseRecord> cases = load_corpus(flags.cases_path, rt.schema);
  const RunPlan plan = build_plan(flags, rt.config);

  RunResults results = rt.orchestrator->run_corpus(cases, plan, rt.backends, &rt.referee);
  for (const auto& diagnostic : rt.orchestrator->last_diagnostics())
    std::cerr << "warning: " << diagnostic << "\n";

  bool complete = true;
  for (const auto& rec : cases) {
    auto it = results.find(rec.case_id);
    for (TaskKind stage : plan.stages)
      if (it == results.end() || !it->second.count(stage)) complete = false;
  }
  std::cout << "processed " << cases.size() << " case(s) across " << plan.stages.size()
            << " stage(s); output at " << rt.config.orchestrator.out_root << "\n";
  return complete ? kExitOk : kExitViolations;
}

int cmd_zone_qa(const CommonFlags& flags) {
  Runtime rt = build_runtime(flags);
  const std::vector<CaseRecord> cases = load_corpus(flags.cases_path, rt.schema);
  RunPlan plan = build_plan(flags, rt.config);

  std::optional<std::map<std::string, double>> rl_scores;
  if (!flags.rl_scores_path.empty()) rl_scores = load_rl_scores(flags.rl_scores_path);

  auto outcome = rt.orchestrator->run_zone_corpus(cases, plan, rt.backends, &rt.referee,
                                                  rl_scores, rt.config.zone_qa);
  for (const auto& case_id : outcome.skipped_cases)
    std::cerr << "warning: case " << case_id << " has no zones; skipped\n";
  std::cout << "assessed zones for " << outcome.assessments.size() << " case(s); output at "
            << rt.config.orchestrator.out_root << "\n";
  return kExitOk;
}

ExtractionSchema schema_from_config(const std::string& config_path) {
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("GUARDIAN_CONFIG")) path = env;
  }
  if (path.empty()) return default_extraction_schema();
  const GuardianConfig config = load_config_file(path);
  if (!config.schema_path) return default_extraction_schema();
  std::ifstream in(*config.schema_path);
  if (!in) throw std::runtime_error("cannot open schema file: " + *config.schema_path);
  return ExtractionSchema::from_json(ojson::parse(in));
}

int cmd_trace(const std::string& out_root, const std::string& case_filter,
              const std::string& config_path) {
  const ExtractionSchema schema = schema_from_config(config_path);
  std::optional<std::string> filter;
  if (!case_filter.empty()) filter = case_filter;
  LoadReport report = load_results(out_root, schema, filter);
  for (const auto& diagnostic : report.diagnostics)
    std::cerr << "warning: " << diagnostic << "\n";
  for (const auto& loaded : report.results) {
    const ConsensusTrace& trace = loaded.result.trace;
    std::vector<std::string> repaired = trace.repaired_fields;
    std::vector<std::string> reverted = trace.reverted_fields;
    std::cout << "case=" << loaded.case_id << " task=" << task_slug(loaded.task)
              << " referee_called=" << (trace.referee_called ? "true" : "false")
              << " repaired=[" << text::join(repaired, ",") << "]"
              << " reverted=[" << text::join(reverted, ",") << "]"
              << " fallback=" << fallback_reason_name(trace.fallback_reason)
              << " agreement=" << trace.agreement.overall
              << " passed=" << (trace.agreement.passed ? "true" : "false") << "\n";
  }
  return kExitOk;
}

int cmd_validate(const std::string& out_root, const std::string& config_path) {
  const ExtractionSchema schema = schema_from_config(config_path);
  LoadReport report = load_results(out_root, schema);
  int violations = 0;
  for (const auto& diagnostic : report.diagnostics) {
    std::cerr << "corrupt: " << diagnostic << "\n";
    ++violations;
  }
  for (const auto& loaded : report.results) {
    const ValidationReport check = validate_artifact(loaded.result.canonical, schema);
    if (!check.pass) {
      for (const auto& violation : check.violations)
        std::cerr << out_root << "/cases/" << loaded.case_id << "/"
                  << artifact_filename(loaded.task) << ": " << violation.field << ": "
                  << violation.reason << "\n";
      ++violations;
    }
  }
  std::cout << "validated " << report.results.size() << " artifact(s), " << violations
            << " problem(s)\n";
  return violations == 0 ? kExitOk : kExitViolations;
}

int cmd_cache_clear(const std::string& cache_dir) {
  ResultCache cache(cache_dir);
  const std::size_t removed = cache.clear();
  std::cout << "cleared " << removed << " cache entr" << (removed == 1 ? "y" : "ies")
            << " from " << cache_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guardian consensus pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto add_common = [&](CLI::App* cmd, bool needs_cases) {
    auto* cases_opt = cmd->add_option("--cases", flags.cases_path, "case corpus file");
    if (needs_cases) cases_opt->required();
    cmd->add_option("--config", flags.config_path,
                    "config file (or GUARDIAN_CONFIG env)");
    cmd->add_option("--out", flags.out_root, "output root directory");
    cmd->add_option("--cache-dir", flags.cache_dir, "cache directory");
    cmd->add_option("--concurrency", flags.concurrency, "concurrency limit");
    cmd->add_option("--deadline-ms", flags.deadline_ms, "per-task budget in ms");
    cmd->add_option("--seed", flags.seed, "run seed");
    cmd->add_option("--backends", flags.backends_mode, "scripted|http")
        ->check(CLI::IsMember({"scripted", "http"}));
    cmd->add_option("--clock", flags.clock_mode, "auto|fake|real")
        ->check(CLI::IsMember({"auto", "fake", "real"}));
    cmd->add_option("--script", flags.script_path, "script table for scripted backends");
    cmd->add_flag("--force", flags.force, "bypass the cache and recompute");
  };

  CLI::App* run = app.add_subcommand("run", "run the pipeline over a corpus");
  add_common(run, true);
  run->add_option("--mode", flags.mode, "stage|case")
      ->check(CLI::IsMember({"stage", "case"}));
  run->add_option("--stages", flags.stages_csv, "comma-separated stage list");

  CLI::App* zone = app.add_subcommand("zone-qa", "recompute zone priorities");
  add_common(zone, true);
  zone->add_option("--rl-scores", flags.rl_scores_path, "RL score file (zone_id -> score)");

  std::string trace_out = "out";
  std::string trace_case;
  std::string trace_config;
  CLI::App* trace = app.add_subcommand("trace", "print adjudication summaries");
  trace->add_option("--out", trace_out, "output root directory");
  trace->add_option("--case", trace_case, "only this case id");
  trace->add_option("--config", trace_config, "config file (for a custom schema)");

  std::string validate_out = "out";
  std::string validate_config;
  CLI::App* validate = app.add_subcommand("validate", "re-validate persisted artifacts");
  validate->add_option("--out", validate_out, "output root directory");
  validate->add_option("--config", validate_config, "config file (for a custom schema)");

  std::string cache_dir = "cache";
  CLI::App* cache = app.add_subcommand("cache", "cache management");
  CLI::App* cache_clear = cache->add_subcommand("clear", "empty the cache directory");
  cache_clear->add_option("--cache-dir", cache_dir, "cache directory");
  cache->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(flags);
    if (zone->parsed()) return cmd_zone_qa(flags);
    if (trace->parsed()) return cmd_trace(trace_out, trace_case, trace_config);
    if (validate->parsed()) return cmd_validate(validate_out, validate_config);
    if (cache->parsed() && cache_clear->parsed()) return cmd_cache_clear(cache_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  return kExitUsage;
}
