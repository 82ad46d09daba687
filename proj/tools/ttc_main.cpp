#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ttc/corpus.hpp"
#include "ttc/error.hpp"
#include "ttc/experiment.hpp"
#include "ttc/report.hpp"
#include "ttc/synth.hpp"
#include "ttc/synthetic_corpus.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;
constexpr int kExitConfig = 3;

void print_summary(const ttc::RunSummary& s, std::ostream& out) {
  out << "cells: " << s.total_cells << " total, " << s.already_complete << " already complete, " << s.completed
      << " completed, " << s.failed << " failed, " << s.skipped << " skipped\n"
      << "backend calls: " << s.backend_calls << ", cache hits: " << s.cache_hits << "\n";
  if (s.budget_stop) out << "stopped: call budget exhausted (rerun with a larger budget to continue)\n";
}

std::vector<ttc::TaskKind> parse_tasks(const std::string& list) {
  std::vector<ttc::TaskKind> tasks;
  std::stringstream in(list);
  for (std::string item; std::getline(in, item, ',');) {
    if (item.empty()) continue;
    try {
      tasks.push_back(ttc::task_from_number(std::stoi(item)));
    } catch (const std::invalid_argument&) {
      tasks.push_back(ttc::parse_task_kind(item));
    }
  }
  if (tasks.empty()) throw ttc::ConfigError("--tasks: no task given");
  return tasks;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw ttc::IoError("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-time compute evaluation harness for audio question answering"};
  app.require_subcommand(1);

  // make-corpus
  auto* make_corpus = app.add_subcommand("make-corpus", "Write a small synthetic clip corpus with a manifest");
  std::string corpus_out;
  std::uint64_t corpus_seed = 0;
  ttc::SyntheticCorpusOptions corpus_opts;
  bool single_rate = false;
  make_corpus->add_option("--out", corpus_out, "Output directory")->required();
  make_corpus->add_option("--seed", corpus_seed, "Random seed");
  make_corpus->add_option("--clips-per-digit", corpus_opts.clips_per_digit, "Clips per (digit, gender)");
  make_corpus->add_flag("--single-rate", single_rate, "Store every clip at the session rate");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate trials (audio + JSON) from a corpus manifest");
  std::string manifest, gen_out, task_list = "1,2,3";
  ttc::TrialSetSpec set_spec;
  gen->add_option("--manifest", manifest, "Corpus manifest (CSV or JSON)")->required();
  gen->add_option("--tasks", task_list, "Comma-separated task numbers");
  gen->add_option("--n-per-task", set_spec.per_task, "Trials per task");
  gen->add_option("--seed", set_spec.seed, "Random seed");
  gen->add_option("--snr", set_spec.params.snr_db, "Foreground-to-noise ratio in dB");
  gen->add_option("--sequence-length", set_spec.params.sequence_length, "Digits per speaker");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // run / sweep / resume / validate
  auto* run = app.add_subcommand("run", "Run every incomplete cell of an experiment");
  std::string config_path;
  run->add_option("--config", config_path, "Experiment TOML")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a beam-size or temperature sweep");
  std::string axis;
  sweep->add_option("--config", config_path, "Experiment TOML")->required();
  sweep->add_option("--axis", axis, "beam or temperature")->required()->check(CLI::IsMember({"beam", "temperature"}));

  auto* resume = app.add_subcommand("resume", "Continue the commands recorded in a run directory");
  std::string run_dir;
  resume->add_option("--run-dir", run_dir, "Run directory")->required();

  auto* validate = app.add_subcommand("validate", "Check an experiment config without running it");
  validate->add_option("--config", config_path, "Experiment TOML")->required();

  // report
  auto* report = app.add_subcommand("report", "Accuracy tables and sweep CSVs for a run directory");
  std::string baseline = "no-ttc", format = "table";
  report->add_option("--run-dir", run_dir, "Run directory")->required();
  report->add_option("--baseline", baseline, "Baseline strategy name");
  report->add_option("--format", format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*make_corpus) {
      corpus_opts.mixed_rates = !single_rate;
      const auto path = ttc::write_synthetic_corpus(corpus_out, corpus_seed, corpus_opts);
      std::cout << path.string() << "\n";
      return kExitOk;
    }
    if (*gen) {
      set_spec.tasks = parse_tasks(task_list);
      ttc::CorpusOptions copts;
      copts.required_tasks = set_spec.tasks;
      const auto corpus = ttc::load_corpus(manifest, copts);
      const auto written = ttc::write_trial_set(corpus, set_spec, gen_out);
      std::cout << "wrote " << written.size() << " trials to " << (fs::path(gen_out) / "trials").string() << "\n";
      return kExitOk;
    }
    if (*validate) {
      const auto config = ttc::validate_config(config_path);
      std::size_t cells = 0;
      for (const auto& e : config.strategies) cells += config.subjects_for(e).size();
      std::cout << "ok: " << config.backends.size() << " backends, " << config.strategies.size() << " strategies, "
                << cells << " (backend, strategy) pairs per trial\n";
      return kExitOk;
    }
    if (*run || *sweep || *resume) {
      ttc::RunSummary summary;
      if (*resume) {
        summary = ttc::resume_run(run_dir);
      } else {
        const auto config = ttc::validate_config(config_path);
        summary = *run ? ttc::run_experiment(config) : ttc::run_sweep(config, ttc::parse_sweep_axis(axis));
      }
      print_summary(summary, std::cout);
      return summary.exit_code() == 0 ? kExitOk : kExitPartial;
    }
    if (*report) {
      const auto records = ttc::load_records(run_dir);
      if (records.empty()) throw ttc::ConfigError("report: no records in " + run_dir);
      const auto table = ttc::accuracy_by_task(records);
      const auto comparison = ttc::render_comparison(table, baseline);
      const fs::path out_dir = fs::path(run_dir) / "reports";
      write_file(out_dir / "comparison.csv", comparison.csv);
      for (auto a : {ttc::SweepAxis::Beam, ttc::SweepAxis::Temperature}) {
        try {
          write_file(out_dir / ("sweep_" + std::string(ttc::to_string(a)) + ".csv"), ttc::emit_sweep_csv(records, a));
        } catch (const ttc::ConfigError&) {
        }
      }
      std::cout << (format == "csv" ? comparison.csv : comparison.text);
      return kExitOk;
    }
  } catch (const ttc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
