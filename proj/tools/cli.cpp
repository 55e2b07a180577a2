#include "cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "wordalise/catalog.hpp"
#include "wordalise/chatengine.hpp"
#include "wordalise/error.hpp"
#include "wordalise/evalharness.hpp"
#include "wordalise/llmgateway.hpp"
#include "wordalise/mock_providers.hpp"
#include "wordalise/promptforge.hpp"
#include "wordalise/service.hpp"

#ifndef WORDALISE_DEFAULT_DATA_DIR
#define WORDALISE_DEFAULT_DATA_DIR "data/apps"
#endif

namespace wordalise::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string data_dir;
  std::string provider = "mock";
  std::string mock = "echo";
  std::uint64_t seed = 0;
};

bool color_enabled(std::ostream& os) {
  if (std::getenv("NO_COLOR")) return false;
  return &os == &std::cerr && ::isatty(2);
}

void report_error(std::ostream& err, const std::string& msg) {
  if (color_enabled(err)) {
    err << "\033[31merror:\033[0m " << msg << "\n";
  } else {
    err << "error: " << msg << "\n";
  }
}

// Config and input problems map to exit 2, everything else to 1.
int exit_code_for(Errc code) {
  switch (code) {
    case Errc::MissingColumn:
    case Errc::NonNumericValue:
    case Errc::EmptyDataset:
    case Errc::MalformedRow:
    case Errc::MissingHeader:
    case Errc::EmptyCorpus:
    case Errc::InvalidConfig:
    case Errc::UnresolvedPath:
    case Errc::DuplicateApp:
    case Errc::OutOfRangeAnswer:
    case Errc::BadWeight:
    case Errc::UnknownApp:
    case Errc::UnknownEntity:
    case Errc::BadRequest:
    case Errc::NoFewShotToModify:
      return kUsage;
    default:
      return kRuntimeFailure;
  }
}

fs::path resolve_data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* v = std::getenv("WORDALISE_DATA_DIR"); v && *v) return v;
  return WORDALISE_DEFAULT_DATA_DIR;
}

Catalog load_catalog(const Common& c) {
  const fs::path dir = resolve_data_dir(c.data_dir);
  if (!fs::is_directory(dir)) throw Error(Errc::UnresolvedPath, "data directory '" + dir.string() + "' not found");
  Catalog cat = Catalog::load_directory(dir);
  if (cat.applications().empty()) throw Error(Errc::InvalidConfig, "no applications under '" + dir.string() + "'");
  return cat;
}

ProviderConfig live_config(const Application* app) {
  return provider_config_from_env(provider_config_from_json(app ? app->config.provider : json::object()));
}

std::shared_ptr<ChatProvider> chat_provider(const Common& c, const Application* app) {
  if (c.provider == "live") return std::make_shared<HttpProvider>(live_config(app));
  return mock::make_chat_mock(c.mock, c.seed);
}

void add_common(CLI::App* sub, Common& c, bool with_mock = true) {
  sub->add_option("--data-dir", c.data_dir, "Directory holding one sub-directory per application");
  if (!with_mock) return;
  sub->add_option("--provider", c.provider, "mock or live")->check(CLI::IsMember({"mock", "live"}));
  sub->add_option("--mock", c.mock, "Offline provider")->check(CLI::IsMember({"echo", "ignore", "ignore-data", "random"}));
  sub->add_option("--seed", c.seed, "Seed for offline providers and per-request seeds");
}

void print_prompt(std::ostream& out, const PromptBundle& b) {
  for (const auto& r : render_inspectable(b)) {
    out << "[" << to_string(r.tag) << "/" << to_string(r.role) << "] " << r.content << "\n";
  }
}

PromptBundle bundle_for(const Application& app, const Entity& e, bool control) {
  if (control) return assemble_control(app.config, app.qa, app.few_shot, e);
  return assemble(app.config, app.qa, app.few_shot, e, app.synthetic(e));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::UnresolvedPath, "cannot write '" + path + "'");
  f << content;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Turn tabular data into grounded natural-language descriptions.", "wordalise"};
  app.require_subcommand(1);

  Common common;
  std::string app_id, entity_id, format = "text", condition = "both", out_path, csv_path;
  bool control = false, show_prompt = false;
  int port = 0, reps = 10, workers = 4;
  double fault_rate = 0.0;
  std::string transcripts;

  auto* serve = app.add_subcommand("serve", "Run the HTTP JSON service");
  add_common(serve, common);
  serve->add_option("--port", port, "Port (default: WORDALISE_PORT or 8080)");
  serve->add_option("--transcripts", transcripts, "Directory for chat transcripts (JSONL)");

  auto* word = app.add_subcommand("wordalise", "Describe one entity");
  add_common(word, common);
  word->add_option("--app", app_id, "Application id")->required();
  word->add_option("--entity", entity_id, "Entity id")->required();
  word->add_flag("--control", control, "Omit the data (control condition)");
  word->add_flag("--show-prompt", show_prompt, "Print the prompt before the answer");
  word->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* inspect = app.add_subcommand("inspect-prompt", "Print the tagged prompt for one entity");
  add_common(inspect, common, false);
  inspect->add_option("--app", app_id, "Application id")->required();
  inspect->add_option("--entity", entity_id, "Entity id")->required();
  inspect->add_flag("--control", control, "Control-condition prompt");
  inspect->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* validate = app.add_subcommand("validate", "Check application configs");
  add_common(validate, common, false);
  validate->add_option("--app", app_id, "Only this application");
  validate->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Measure how faithfully descriptions carry the data");
  add_common(evaluate_cmd, common);
  evaluate_cmd->add_option("--app", app_id, "Application id")->required();
  evaluate_cmd->add_option("--reps", reps, "Valid reconstructions per entity and condition")->check(CLI::PositiveNumber);
  evaluate_cmd->add_option("--condition", condition, "test, control or both")
      ->check(CLI::IsMember({"test", "control", "both"}));
  evaluate_cmd->add_option("--fault-rate", fault_rate, "Corrupt this fraction of reconstruction replies")
      ->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--workers", workers, "Parallel requests")->check(CLI::PositiveNumber);
  evaluate_cmd->add_option("--out", out_path, "Write the JSON report here");
  evaluate_cmd->add_option("--csv", csv_path, "Write per-record results here");
  evaluate_cmd->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    report_error(err, e.what());
    err << "Run with --help for usage.\n";
    return kUsage;
  }

  try {
    if (*validate) {
      const fs::path dir = resolve_data_dir(common.data_dir);
      if (!fs::is_directory(dir)) throw Error(Errc::UnresolvedPath, "data directory '" + dir.string() + "' not found");
      std::vector<fs::path> configs;
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory() && fs::is_regular_file(e.path() / "config.json")) configs.push_back(e.path() / "config.json");
      }
      std::sort(configs.begin(), configs.end());
      json results = json::array();
      bool all_ok = true, matched = app_id.empty();
      for (const auto& path : configs) {
        json entry = {{"config", path.string()}, {"findings", json::array()}};
        try {
          const ApplicationConfig cfg = load_config(path);
          if (!app_id.empty() && cfg.app_id != app_id) continue;
          matched = true;
          entry["app_id"] = cfg.app_id;
          for (const auto& f : validate_config(cfg, cfg.normative_model).findings) {
            entry["findings"].push_back({{"kind", f.kind}, {"message", f.message}});
          }
          if (entry["findings"].empty()) load_application(path);  // data files parse too
        } catch (const Error& e) {
          if (!app_id.empty() && !entry.contains("app_id")) continue;
          entry["findings"].push_back({{"kind", std::string(to_string(e.code()))}, {"message", e.detail()}});
        }
        all_ok = all_ok && entry["findings"].empty();
        results.push_back(entry);
      }
      if (!matched) throw Error(Errc::UnknownApp, app_id);
      if (format == "json") {
        out << results.dump(2) << "\n";
      } else {
        for (const auto& r : results) {
          out << r.value("app_id", r["config"].get<std::string>()) << ": "
              << (r["findings"].empty() ? "ok" : std::to_string(r["findings"].size()) + " finding(s)") << "\n";
          for (const auto& f : r["findings"]) {
            out << "  " << f["kind"].get<std::string>() << ": " << f["message"].get<std::string>() << "\n";
          }
        }
      }
      return all_ok ? kOk : kUsage;
    }

    const Catalog catalog = load_catalog(common);

    if (*inspect) {
      const Application& a = catalog.at(app_id);
      const PromptBundle b = bundle_for(a, a.entity(entity_id), control);
      if (format == "json") {
        out << to_inspect_json(b).dump(2) << "\n";
      } else {
        print_prompt(out, b);
      }
      for (const auto& w : b.warnings) err << "warning: " << w << "\n";
      return kOk;
    }

    if (*word) {
      const Application& a = catalog.at(app_id);
      const Entity& e = a.entity(entity_id);
      const PromptBundle b = bundle_for(a, e, control);
      auto provider = chat_provider(common, &a);
      const CompletionResult r = chat_complete(b, *provider, {std::nullopt, mix_seed(common.seed, e.entity_id)});
      if (!r.ok()) throw Error(Errc::MalformedProviderResponse, "completion ended with '" + r.finish_reason + "'");
      if (format == "json") {
        json j = {{"app_id", a.config.app_id}, {"entity_id", e.entity_id}, {"label", e.label},
                  {"control", control},        {"text", r.text},          {"provider", provider->name()}};
        if (show_prompt) j["prompt"] = to_inspect_json(b);
        out << j.dump(2) << "\n";
      } else {
        if (show_prompt) {
          print_prompt(out, b);
          out << "---\n";
        }
        out << r.text << "\n";
      }
      return kOk;
    }

    if (*evaluate_cmd) {
      const Application& a = catalog.at(app_id);
      EvalSettings s;
      s.app_id = app_id;
      s.repetitions_target = reps;
      s.condition = condition_set_from_string(condition);
      s.seed = common.seed;
      s.workers = workers;
      std::shared_ptr<ChatProvider> generator = chat_provider(common, &a);
      std::shared_ptr<ChatProvider> reconstructor =
          common.provider == "live" ? chat_provider(common, &a) : generator;
      if (fault_rate > 0) reconstructor = std::make_shared<mock::FaultyProvider>(reconstructor, fault_rate, common.seed);
      const EvalRun run = run_evaluation(a, s, *generator, *reconstructor);
      const EvaluationReport rep = accuracy(a, run.records, s);
      if (!out_path.empty()) write_file(out_path, to_json(rep).dump(2) + "\n");
      if (!csv_path.empty()) write_file(csv_path, records_csv(run.records));
      if (format == "json") {
        out << to_json(rep).dump(2) << "\n";
      } else {
        out << render_table(rep);
        for (const auto& [cond, c] : rep.counts) {
          out << cond << ": generated " << c.generated << ", valid " << c.valid << ", discarded " << c.discarded
              << ", exhausted " << c.exhausted << "\n";
        }
        for (const auto& sf : rep.shortfalls) {
          err << "warning: " << sf.entity_id << " (" << to_string(sf.condition) << ") reached " << sf.valid << " of "
              << reps << " valid reconstructions\n";
        }
      }
      return kOk;
    }

    if (*serve) {
      if (port == 0) {
        const char* v = std::getenv("WORDALISE_PORT");
        port = v && *v ? std::atoi(v) : 8080;
      }
      if (port <= 0 || port > 65535) throw Error(Errc::InvalidConfig, "port out of range");
      ServiceDeps deps;
      deps.catalog = std::make_shared<const Catalog>(catalog);
      if (common.provider == "live") {
        auto live = std::make_shared<HttpProvider>(live_config(nullptr));
        deps.generator = live;
        deps.embedder = live;
      } else {
        deps.generator = mock::make_chat_mock(common.mock, common.seed);
        deps.embedder = std::make_shared<mock::HashingEmbedder>();
      }
      if (!transcripts.empty()) deps.transcript_dir = fs::path(transcripts);
      Service svc(std::move(deps));
      out << "listening on http://0.0.0.0:" << port << " (provider " << common.provider << ")" << std::endl;
      if (!svc.listen("0.0.0.0", port)) throw Error(Errc::TransportError, "cannot bind port " + std::to_string(port));
      return kOk;
    }
  } catch (const Error& e) {
    report_error(err, std::string(to_string(e.code())) + ": " + e.detail());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error(err, e.what());
    return kRuntimeFailure;
  }
  return kUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace wordalise::cli
