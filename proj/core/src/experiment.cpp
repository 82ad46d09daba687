#include "ttc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <toml.hpp>

#include "ttc/cache.hpp"
#include "ttc/digest.hpp"
#include "ttc/error.hpp"

namespace ttc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// TOML access with field paths in error messages

class Node {
 public:
  Node(const toml::table& table, std::string path) : table_(table), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  std::string at(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }
  bool has(std::string_view key) const { return table_.contains(key); }

  [[noreturn]] void fail(std::string_view key, const std::string& what) const { throw ConfigError(at(key) + ": " + what); }

  std::optional<std::string> string(std::string_view key) const {
    const auto* n = table_.get(key);
    if (n == nullptr) return std::nullopt;
    if (!n->is_string()) fail(key, "expected string");
    return n->as_string()->get();
  }
  std::string required_string(std::string_view key) const {
    auto v = string(key);
    if (!v) fail(key, "missing required field");
    return *v;
  }
  std::optional<double> number(std::string_view key) const {
    const auto* n = table_.get(key);
    if (n == nullptr) return std::nullopt;
    if (n->is_floating_point()) return n->as_floating_point()->get();
    if (n->is_integer()) return static_cast<double>(n->as_integer()->get());
    fail(key, "expected number");
  }
  std::optional<std::int64_t> integer(std::string_view key) const {
    const auto* n = table_.get(key);
    if (n == nullptr) return std::nullopt;
    if (!n->is_integer()) fail(key, "expected integer");
    return n->as_integer()->get();
  }
  std::optional<bool> boolean(std::string_view key) const {
    const auto* n = table_.get(key);
    if (n == nullptr) return std::nullopt;
    if (!n->is_boolean()) fail(key, "expected boolean");
    return n->as_boolean()->get();
  }
  std::optional<std::vector<double>> numbers(std::string_view key) const {
    const auto* n = table_.get(key);
    if (n == nullptr) return std::nullopt;
    if (!n->is_array()) fail(key, "expected array of numbers");
    std::vector<double> out;
    std::size_t i = 0;
    for (const auto& el : *n->as_array()) {
      if (el.is_floating_point()) {
        out.push_back(el.as_floating_point()->get());
      } else if (el.is_integer()) {
        out.push_back(static_cast<double>(el.as_integer()->get()));
      } else {
        fail(std::string(key) + "[" + std::to_string(i) + "]", "expected number");
      }
      ++i;
    }
    return out;
  }
  std::optional<std::vector<std::string>> strings(std::string_view key) const {
    const auto* n = table_.get(key);
    if (n == nullptr) return std::nullopt;
    if (!n->is_array()) fail(key, "expected array of strings");
    std::vector<std::string> out;
    std::size_t i = 0;
    for (const auto& el : *n->as_array()) {
      if (!el.is_string()) fail(std::string(key) + "[" + std::to_string(i) + "]", "expected string");
      out.push_back(el.as_string()->get());
      ++i;
    }
    return out;
  }
  std::optional<Node> table(std::string_view key) const {
    const auto* n = table_.get(key);
    if (n == nullptr) return std::nullopt;
    if (!n->is_table()) fail(key, "expected table");
    return Node(*n->as_table(), at(key));
  }
  std::vector<Node> array_of_tables(std::string_view key) const {
    const auto* n = table_.get(key);
    if (n == nullptr) return {};
    if (!n->is_array()) fail(key, "expected array of tables");
    std::vector<Node> out;
    std::size_t i = 0;
    for (const auto& el : *n->as_array()) {
      const std::string p = at(key) + "[" + std::to_string(i) + "]";
      if (!el.is_table()) throw ConfigError(p + ": expected table");
      out.emplace_back(*el.as_table(), p);
      ++i;
    }
    return out;
  }
  void reject_unknown(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [k, v] : table_) {
      if (std::find(allowed.begin(), allowed.end(), k.str()) == allowed.end()) fail(k.str(), "unknown field");
    }
  }

 private:
  const toml::table& table_;
  std::string path_;
};

template <class F>
auto with_path(const Node& node, std::string_view key, F&& f) {
  try {
    return f();
  } catch (const RangeError& e) {
    throw RangeError(node.at(key) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(node.at(key) + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

Capabilities parse_capabilities(const Node& node, Capabilities caps) {
  auto list = node.strings("capabilities");
  if (!list) return caps;
  caps = Capabilities{false, false, false, false};
  for (const auto& c : *list) {
    if (c == "sample") {
      caps.sample = true;
    } else if (c == "beam") {
      caps.beam = true;
    } else if (c == "logprobs") {
      caps.logprobs = true;
    } else if (c == "audio") {
      caps.audio = true;
    } else if (c == "sample-only") {
      caps.sample = true;
      caps.audio = true;
    } else {
      node.fail("capabilities", "unknown capability '" + c + "'");
    }
  }
  return caps;
}

BackendSpec parse_backend(const Node& node, std::uint64_t experiment_seed) {
  node.reject_unknown({"id", "kind", "role", "model", "capabilities", "temperature_min", "temperature_max",
                       "temperature_max_inclusive", "verbose", "max_concurrency", "requests_per_minute",
                       "max_beam_width", "oracle", "judge", "base_url", "protocol", "key_env", "require_key",
                       "timeout_s"});
  BackendSpec spec;
  auto& info = spec.info;
  info.id = node.required_string("id");
  if (info.id.empty()) node.fail("id", "must not be empty");
  const std::string kind = node.string("kind").value_or("simulated");
  if (kind == "simulated") {
    spec.kind = BackendKind::Simulated;
    info.caps = {true, true, true, true};
  } else if (kind == "simulated-verifier") {
    spec.kind = BackendKind::SimulatedVerifier;
    spec.role = BackendRole::Verifier;
    info.caps = {true, false, false, true};
  } else if (kind == "http" || kind == "openai-chat") {
    spec.kind = BackendKind::Http;
    info.caps = {true, false, false, true};
    spec.http.protocol = kind == "openai-chat" ? HttpProtocol::OpenAIChat : HttpProtocol::TtcWire;
  } else {
    node.fail("kind", "unknown backend kind '" + kind + "'");
  }
  if (auto role = node.string("role")) {
    if (*role == "subject") {
      spec.role = BackendRole::Subject;
    } else if (*role == "verifier") {
      spec.role = BackendRole::Verifier;
    } else {
      node.fail("role", "expected subject or verifier");
    }
  }
  info.model = node.string("model").value_or(info.id);
  info.caps = parse_capabilities(node, info.caps);
  info.temperature.min = node.number("temperature_min").value_or(0.0);
  info.temperature.max = node.number("temperature_max").value_or(2.0);
  info.temperature.max_inclusive = node.boolean("temperature_max_inclusive").value_or(true);
  if (!(info.temperature.min >= 0.0) || !(info.temperature.max >= info.temperature.min)) {
    node.fail("temperature_max", "temperature range is empty or negative");
  }
  info.verbose = node.boolean("verbose").value_or(false);
  info.limits.max_concurrency = static_cast<int>(node.integer("max_concurrency").value_or(8));
  info.limits.requests_per_minute = node.number("requests_per_minute").value_or(0.0);
  info.limits.max_beam_width = static_cast<int>(node.integer("max_beam_width").value_or(16));
  if (info.limits.max_concurrency < 1) node.fail("max_concurrency", "must be >= 1");
  if (info.limits.requests_per_minute < 0) node.fail("requests_per_minute", "must be >= 0");

  const std::uint64_t derived_seed = experiment_seed ^ digest_seed(info.id);
  spec.oracle.seed = derived_seed;
  spec.verifier.seed = derived_seed;
  if (auto o = node.table("oracle")) {
    o->reject_unknown({"accuracy", "temperature_slope", "verbosity", "mu_correct", "mu_wrong", "sigma", "seed"});
    if (auto acc = o->numbers("accuracy")) {
      if (acc->size() != 3) o->fail("accuracy", "expected three values (task 1, 2, 3)");
      std::copy(acc->begin(), acc->end(), spec.oracle.accuracy.begin());
    }
    spec.oracle.temperature_slope = o->number("temperature_slope").value_or(spec.oracle.temperature_slope);
    spec.oracle.verbosity = o->number("verbosity").value_or(spec.oracle.verbosity);
    spec.oracle.mu_correct = o->number("mu_correct").value_or(spec.oracle.mu_correct);
    spec.oracle.mu_wrong = o->number("mu_wrong").value_or(spec.oracle.mu_wrong);
    spec.oracle.sigma = o->number("sigma").value_or(spec.oracle.sigma);
    if (auto s = o->integer("seed")) spec.oracle.seed = static_cast<std::uint64_t>(*s);
    with_path(node, "oracle", [&] { spec.oracle.validate(); });
  }
  if (auto j = node.table("judge")) {
    j->reject_unknown({"detection_accuracy", "malformed_rate", "seed"});
    spec.verifier.detection_accuracy = j->number("detection_accuracy").value_or(spec.verifier.detection_accuracy);
    spec.verifier.malformed_rate = j->number("malformed_rate").value_or(spec.verifier.malformed_rate);
    if (auto s = j->integer("seed")) spec.verifier.seed = static_cast<std::uint64_t>(*s);
    with_path(node, "judge", [&] { spec.verifier.validate(); });
  }
  if (spec.kind == BackendKind::Http) {
    spec.http.base_url = node.required_string("base_url");
    if (auto p = node.string("protocol")) spec.http.protocol = with_path(node, "protocol", [&] { return parse_http_protocol(*p); });
    spec.http.key_env = node.string("key_env");
    spec.http.require_key = node.boolean("require_key").value_or(true);
    spec.http.timeout_s = node.number("timeout_s").value_or(120.0);
    if (spec.http.protocol == HttpProtocol::OpenAIChat && info.caps.beam) {
      node.fail("capabilities", "the openai-chat protocol cannot provide beams");
    }
  }
  spec.http.info = info;
  return spec;
}

StrategyEntry parse_strategy(const Node& node) {
  node.reject_unknown({"kind", "name", "backends", "temperature_grid", "beam_width", "temperature", "verifier",
                       "tie_break", "raw_weights", "length_norm", "verifier_answer_mode", "verifier_max_attempts",
                       "verifier_fallback", "verifier_temperature", "max_tokens"});
  StrategyEntry entry;
  auto& c = entry.config;
  c.kind = with_path(node, "kind", [&] { return parse_strategy_kind(node.required_string("kind")); });
  c.name = node.string("name").value_or("");
  entry.backends = node.strings("backends").value_or(std::vector<std::string>{});
  if (auto grid = node.numbers("temperature_grid")) c.temperature_grid = *grid;
  if (auto b = node.integer("beam_width")) {
    c.beam_width = static_cast<int>(*b);
    entry.fixed_beam_width = true;
  }
  if (auto t = node.number("temperature")) {
    c.temperature = *t;
    entry.fixed_temperature = true;
  }
  c.verifier_backend = node.string("verifier");
  if (auto t = node.string("tie_break")) c.tie_break = with_path(node, "tie_break", [&] { return parse_tie_break(*t); });
  c.raw_weights = node.boolean("raw_weights").value_or(false);
  if (auto n = node.string("length_norm")) c.length_norm = with_path(node, "length_norm", [&] { return parse_length_norm(*n); });
  c.verifier_answer_mode = node.boolean("verifier_answer_mode").value_or(false);
  c.verifier_policy.max_attempts = static_cast<int>(node.integer("verifier_max_attempts").value_or(3));
  c.verifier_policy.fallback_rating = node.number("verifier_fallback").value_or(0.5);
  c.verifier_policy.temperature = node.number("verifier_temperature").value_or(0.0);
  c.max_tokens = static_cast<int>(node.integer("max_tokens").value_or(128));
  if (!(c.verifier_policy.fallback_rating >= 0.0 && c.verifier_policy.fallback_rating <= 1.0)) {
    throw RangeError(node.at("verifier_fallback") + ": must lie in [0, 1]");
  }
  return entry;
}

SweepSpec parse_sweep(const Node& node) {
  node.reject_unknown({"axis", "beam_range", "beam_widths", "temperatures"});
  SweepSpec sweep;
  sweep.axis = with_path(node, "axis", [&] { return parse_sweep_axis(node.required_string("axis")); });
  if (auto range = node.numbers("beam_range")) {
    if (range->size() != 2 || (*range)[0] < 1 || (*range)[1] < (*range)[0]) {
      node.fail("beam_range", "expected [low, high] with 1 <= low <= high");
    }
    sweep.beam_widths.clear();
    for (int b = static_cast<int>((*range)[0]); b <= static_cast<int>((*range)[1]); ++b) sweep.beam_widths.push_back(b);
  }
  if (auto widths = node.numbers("beam_widths")) {
    sweep.beam_widths.clear();
    for (double w : *widths) {
      if (w < 1 || w != std::floor(w)) node.fail("beam_widths", "expected positive integers");
      sweep.beam_widths.push_back(static_cast<int>(w));
    }
  }
  if (auto temps = node.numbers("temperatures")) sweep.temperatures = *temps;
  std::sort(sweep.beam_widths.begin(), sweep.beam_widths.end());
  sweep.beam_widths.erase(std::unique(sweep.beam_widths.begin(), sweep.beam_widths.end()), sweep.beam_widths.end());
  std::sort(sweep.temperatures.begin(), sweep.temperatures.end());
  sweep.temperatures.erase(std::unique(sweep.temperatures.begin(), sweep.temperatures.end()), sweep.temperatures.end());
  if (sweep.beam_widths.empty() || sweep.temperatures.empty()) node.fail("axis", "sweep has no points");
  return sweep;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<SweepPoint> SweepSpec::points() const {
  std::vector<SweepPoint> out;
  if (axis == SweepAxis::Beam) {
    for (int b : beam_widths) out.push_back({axis, static_cast<double>(b)});
  } else {
    for (double t : temperatures) out.push_back({axis, t});
  }
  return out;
}

const BackendSpec* ExperimentConfig::find_backend(const std::string& id) const {
  for (const auto& b : backends) {
    if (b.info.id == id) return &b;
  }
  return nullptr;
}

std::vector<const BackendSpec*> ExperimentConfig::subjects() const {
  std::vector<const BackendSpec*> out;
  for (const auto& b : backends) {
    if (b.role == BackendRole::Subject) out.push_back(&b);
  }
  return out;
}

std::vector<const BackendSpec*> ExperimentConfig::subjects_for(const StrategyEntry& entry) const {
  if (entry.backends.empty()) return subjects();
  std::vector<const BackendSpec*> out;
  for (const auto& id : entry.backends) {
    if (const auto* b = find_backend(id)) out.push_back(b);
  }
  return out;
}

ExperimentConfig parse_config(const std::string& toml_text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: TOML syntax error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  Node node(root, "");
  node.reject_unknown({"trials", "output_dir", "cache_dir", "seed", "max_concurrency", "budget", "retry", "backends",
                       "strategies", "sweep"});

  ExperimentConfig config;
  config.base_dir = base_dir;
  config.trials = resolve(base_dir, node.required_string("trials"));
  config.output_dir = resolve(base_dir, node.required_string("output_dir"));
  if (auto c = node.string("cache_dir")) config.cache_dir = resolve(base_dir, *c);
  config.seed = static_cast<std::uint64_t>(node.integer("seed").value_or(0));
  config.max_concurrency = static_cast<int>(node.integer("max_concurrency").value_or(4));
  config.budget = node.integer("budget").value_or(0);
  if (config.max_concurrency < 1) node.fail("max_concurrency", "must be >= 1");
  if (config.budget < 0) node.fail("budget", "must be >= 0");

  if (auto r = node.table("retry")) {
    r->reject_unknown({"max_attempts", "base_ms", "multiplier", "jitter"});
    config.retry.max_attempts = static_cast<int>(r->integer("max_attempts").value_or(config.retry.max_attempts));
    config.retry.base = std::chrono::milliseconds(r->integer("base_ms").value_or(config.retry.base.count()));
    config.retry.multiplier = r->number("multiplier").value_or(config.retry.multiplier);
    config.retry.jitter = r->boolean("jitter").value_or(config.retry.jitter);
    if (config.retry.max_attempts < 1) r->fail("max_attempts", "must be >= 1");
  }
  for (const auto& b : node.array_of_tables("backends")) config.backends.push_back(parse_backend(b, config.seed));
  for (const auto& s : node.array_of_tables("strategies")) config.strategies.push_back(parse_strategy(s));
  if (auto s = node.table("sweep")) config.sweep = parse_sweep(*s);

  // LLM strategies without an explicit judge use the first verifier backend.
  for (auto& entry : config.strategies) {
    auto& c = entry.config;
    if ((c.kind == StrategyKind::LLMTop1 || c.kind == StrategyKind::LLMW) && !c.verifier_backend) {
      for (const auto& b : config.backends) {
        if (b.role == BackendRole::Verifier) {
          c.verifier_backend = b.info.id;
          break;
        }
      }
    }
  }
  return config;
}

void check_config(const ExperimentConfig& config) {
  if (!fs::exists(config.trials)) throw ConfigError("trials: path " + config.trials.string() + " does not exist");
  if (config.backends.empty()) throw ConfigError("backends: at least one backend is required");
  std::set<std::string> ids;
  for (const auto& b : config.backends) {
    if (!ids.insert(b.info.id).second) throw ConfigError("backends: duplicate id '" + b.info.id + "'");
  }
  if (config.subjects().empty()) throw ConfigError("backends: no backend has role 'subject'");
  if (config.strategies.empty()) throw ConfigError("strategies: at least one strategy is required");

  std::set<std::string> labels;
  for (std::size_t i = 0; i < config.strategies.size(); ++i) {
    const auto& entry = config.strategies[i];
    const std::string path = "strategies[" + std::to_string(i) + "]";
    if (!labels.insert(entry.config.label()).second) {
      throw ConfigError(path + ": duplicate strategy name '" + entry.config.label() + "'");
    }
    for (const auto& id : entry.backends) {
      const auto* b = config.find_backend(id);
      if (b == nullptr) throw ConfigError(path + ".backends: unknown backend '" + id + "'");
      if (b->role != BackendRole::Subject) throw ConfigError(path + ".backends: '" + id + "' is not a subject backend");
    }
    const BackendInfo* verifier = nullptr;
    if (entry.config.verifier_backend) {
      const auto* v = config.find_backend(*entry.config.verifier_backend);
      if (v == nullptr) {
        throw ConfigError(path + ".verifier: unknown backend '" + *entry.config.verifier_backend + "'");
      }
      verifier = &v->info;
    }
    for (const auto* subject : config.subjects_for(entry)) {
      try {
        validate_strategy(entry.config, subject->info, verifier);
      } catch (const CapabilityError& e) {
        throw CapabilityError(path + ": " + e.what());
      } catch (const RangeError& e) {
        throw RangeError(path + ": " + e.what());
      } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
      }
    }
  }

  if (config.sweep) {
    const auto axis = config.sweep->axis;
    for (std::size_t i = 0; i < config.strategies.size(); ++i) {
      const auto& entry = config.strategies[i];
      const std::string path = "strategies[" + std::to_string(i) + "]";
      if (axis == SweepAxis::Beam && entry.config.kind == StrategyKind::BSW && entry.fixed_beam_width) {
        throw ConfigError(path + ".beam_width: fixed beam width conflicts with the beam sweep axis");
      }
      if (axis == SweepAxis::Temperature && entry.config.kind == StrategyKind::Direct && entry.fixed_temperature) {
        throw ConfigError(path + ".temperature: fixed temperature conflicts with the temperature sweep axis");
      }
    }
    for (const auto* subject : config.subjects()) {
      const auto& info = subject->info;
      if (axis == SweepAxis::Beam && info.caps.beam && info.caps.logprobs) {
        for (int b : config.sweep->beam_widths) {
          if (b > info.limits.max_beam_width) {
            throw RangeError("sweep.beam_widths: " + std::to_string(b) + " exceeds the limit of backend '" + info.id + "'");
          }
        }
      }
      if (axis == SweepAxis::Temperature) {
        for (double t : config.sweep->temperatures) {
          if (!info.temperature.contains(t)) {
            std::ostringstream msg;
            msg << "sweep.temperatures: " << t << " outside the range " << info.temperature.describe() << " of backend '"
                << info.id << "'";
            throw RangeError(msg.str());
          }
        }
      }
    }
  }
}

ExperimentConfig validate_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig config = parse_config(text.str(), fs::absolute(path).parent_path());
  config.source = fs::absolute(path);
  check_config(config);
  return config;
}

std::shared_ptr<Backend> make_backend(const BackendSpec& spec) {
  switch (spec.kind) {
    case BackendKind::Simulated: return std::make_shared<SimulatedBackend>(spec.info, spec.oracle);
    case BackendKind::SimulatedVerifier: return std::make_shared<SimulatedVerifierBackend>(spec.info, spec.verifier);
    case BackendKind::Http: {
      auto http = spec.http;
      http.info = spec.info;
      return std::make_shared<HttpBackend>(std::move(http));
    }
  }
  throw ConfigError("unknown backend kind");
}

json summary_to_json(const RunSummary& s) {
  return {{"total_cells", s.total_cells},     {"already_complete", s.already_complete},
          {"completed", s.completed},         {"failed", s.failed},
          {"skipped", s.skipped},             {"budget_stop", s.budget_stop},
          {"backend_calls", s.backend_calls}, {"cache_hits", s.cache_hits},
          {"elapsed_s", s.elapsed_s},         {"exit_code", s.exit_code()}};
}

// ---------------------------------------------------------------------------
// Run directory

namespace {

constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kFailuresFile = "failures.jsonl";
constexpr const char* kStateFile = "run_state.json";

void truncate_torn_tail(const fs::path& file) {
  std::error_code ec;
  const auto size = fs::file_size(file, ec);
  if (ec || size == 0) return;
  std::ifstream in(file, std::ios::binary);
  std::string data(size, '\0');
  in.read(data.data(), static_cast<std::streamsize>(size));
  if (data.back() == '\n') return;
  const auto last = data.find_last_of('\n');
  in.close();
  fs::resize_file(file, last == std::string::npos ? 0 : last + 1);
  std::cerr << "warning: truncated a partial record at the end of " << file.string() << '\n';
}

std::vector<Trial> load_trials(const fs::path& path) {
  if (fs::is_regular_file(path)) return {load_trial(path)};
  const fs::path nested = path / "trials";
  auto trials = load_trial_set(fs::is_directory(nested) ? nested : path);
  if (trials.empty()) throw ConfigError("trials: no trial documents under " + path.string());
  return trials;
}

struct Cell {
  const Trial* trial = nullptr;
  const BackendSpec* backend = nullptr;
  StrategyConfig strategy;
  std::optional<SweepPoint> sweep;
  std::string key;
};

void write_run_state(const ExperimentConfig& config, const std::string& command) {
  const fs::path file = config.output_dir / kStateFile;
  json state = {{"base_dir", config.base_dir.string()}, {"commands", json::array()}};
  if (std::ifstream in(file); in) {
    json prev = json::parse(in, nullptr, false);
    if (!prev.is_discarded() && prev.contains("commands")) state["commands"] = prev["commands"];
  }
  auto& cmds = state["commands"];
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end()) cmds.push_back(command);
  std::ofstream(file) << state.dump(2) << '\n';
}

void copy_config(const ExperimentConfig& config) {
  if (config.source.empty()) return;
  const fs::path dest = config.output_dir / "config.toml";
  std::error_code ec;
  if (fs::exists(dest) && fs::equivalent(dest, config.source, ec)) return;
  fs::copy_file(config.source, dest, fs::copy_options::overwrite_existing, ec);
  if (ec) throw IoError("cannot copy config into " + dest.string() + ": " + ec.message());
}

class RecordWriter {
 public:
  explicit RecordWriter(const fs::path& dir)
      : records_(dir / kRecordsFile, std::ios::app | std::ios::binary),
        failures_(dir / kFailuresFile, std::ios::app | std::ios::binary) {
    if (!records_ || !failures_) throw IoError("cannot open record files in " + dir.string());
  }

  void record(const json& doc) { append(records_, doc); }
  void failure(const json& doc) { append(failures_, doc); }

 private:
  void append(std::ofstream& out, const json& doc) {
    const std::string line = doc.dump() + "\n";
    std::lock_guard lock(mu_);
    out << line;
    out.flush();
    if (!out) throw IoError("record write failed");
  }

  std::mutex mu_;
  std::ofstream records_;
  std::ofstream failures_;
};

RunSummary execute(const ExperimentConfig& config, std::vector<Cell> cells, const RunOptions& options,
                   const std::string& command) {
  const auto started = std::chrono::steady_clock::now();
  fs::create_directories(config.output_dir);
  copy_config(config);
  write_run_state(config, command);

  const fs::path records_path = config.output_dir / kRecordsFile;
  truncate_torn_tail(records_path);
  std::set<std::string> done;
  for (const auto& r : load_records(config.output_dir)) done.insert(r.key());

  RunSummary summary;
  summary.total_cells = cells.size();
  std::vector<Cell> pending;
  for (auto& cell : cells) {
    if (done.count(cell.key)) {
      ++summary.already_complete;
    } else {
      pending.push_back(std::move(cell));
    }
  }
  if (pending.empty()) {
    summary.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::ofstream(config.output_dir / "summary.json") << summary_to_json(summary).dump(2) << '\n';
    return summary;
  }

  Gateway gateway(config.retry, config.seed);
  if (options.sleeper) gateway.set_sleeper(options.sleeper);
  for (const auto& spec : config.backends) {
    gateway.register_backend(options.backend_factory ? options.backend_factory(spec) : make_backend(spec));
  }
  ResponseCache cache(config.cache_dir.value_or(config.output_dir / "cache"));
  Dispatcher dispatcher(gateway, &cache);
  RecordWriter writer(config.output_dir);

  std::atomic<std::int64_t> remaining_budget{config.budget > 0 ? config.budget : INT64_MAX};
  std::atomic<bool> stop{false};
  std::atomic<bool> budget_stop{false};
  std::atomic<std::size_t> next{0}, completed{0}, failed{0}, skipped{0};
  std::atomic<std::uint64_t> hits{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      const Cell& cell = pending[i];
      if (stop.load()) {
        ++skipped;
        continue;
      }
      const std::int64_t reserve = planned_calls(cell.strategy, cell.backend->info);
      std::int64_t have = remaining_budget.load();
      bool reserved = false;
      while (have >= reserve) {
        if (remaining_budget.compare_exchange_weak(have, have - reserve)) {
          reserved = true;
          break;
        }
      }
      if (!reserved) {
        budget_stop = true;
        stop = true;
        ++skipped;
        writer.failure({{"key", cell.key}, {"kind", "budget"}, {"message", "budget exhausted before the cell started"},
                        {"time", utc_timestamp()}});
        continue;
      }

      TrialRecord rec;
      rec.trial_id = cell.trial->id;
      rec.task = cell.trial->task;
      rec.backend = cell.backend->info.id;
      rec.model = cell.backend->info.model;
      rec.strategy = cell.strategy.label();
      rec.strategy_kind = cell.strategy.kind;
      rec.sweep = cell.sweep;
      rec.options = cell.trial->options;
      rec.ground_truth = cell.trial->ground_truth;
      rec.started_at = utc_timestamp();
      try {
        rec.run = run_strategy(cell.strategy, *cell.trial, cell.backend->info.id, dispatcher);
        rec.finished_at = utc_timestamp();
        rec.correct = rec.run.outcome.final_answer == cell.trial->ground_truth;
        remaining_budget += reserve - rec.run.backend_calls;
        hits += static_cast<std::uint64_t>(rec.run.cache_hits);
        writer.record(record_to_json(rec));
        const std::size_t n = ++completed;
        if (options.stop_after && n >= *options.stop_after) stop = true;
      } catch (const std::exception& e) {
        ++failed;
        std::string kind = "error";
        if (const auto* be = dynamic_cast<const BackendError*>(&e)) {
          static constexpr const char* kNames[] = {"auth", "rate_limited", "transient", "malformed", "rejected"};
          kind = std::string("backend_") + kNames[static_cast<int>(be->kind())];
        } else if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
          kind = "config";
        }
        writer.failure({{"key", cell.key}, {"trial_id", rec.trial_id}, {"backend", rec.backend},
                        {"strategy", rec.strategy}, {"kind", kind}, {"message", e.what()}, {"time", utc_timestamp()}});
      }
    }
  };

  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.max_concurrency), pending.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  const auto stats = gateway.stats();
  summary.completed = completed;
  summary.failed = failed;
  summary.skipped = skipped;
  summary.budget_stop = budget_stop;
  summary.backend_calls = stats.dispatched;
  summary.cache_hits = hits;
  summary.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::ofstream(config.output_dir / "summary.json") << summary_to_json(summary).dump(2) << '\n';
  return summary;
}

Cell make_cell(const Trial& trial, const BackendSpec& backend, StrategyConfig strategy, std::optional<SweepPoint> sweep) {
  Cell cell{&trial, &backend, std::move(strategy), sweep, {}};
  cell.key = record_key(trial.id, backend.info.id, cell.strategy.label(), sweep);
  return cell;
}

RunSummary& operator+=(RunSummary& a, const RunSummary& b) {
  a.total_cells += b.total_cells;
  a.already_complete += b.already_complete;
  a.completed += b.completed;
  a.failed += b.failed;
  a.skipped += b.skipped;
  a.budget_stop = a.budget_stop || b.budget_stop;
  a.backend_calls += b.backend_calls;
  a.cache_hits += b.cache_hits;
  a.elapsed_s += b.elapsed_s;
  return a;
}

}  // namespace

std::vector<TrialRecord> load_records(const fs::path& run_dir) {
  std::vector<TrialRecord> out;
  std::ifstream in(run_dir / kRecordsFile);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      std::cerr << "warning: skipping unreadable record on line " << lineno << '\n';
      continue;
    }
    try {
      out.push_back(record_from_json(doc));
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping invalid record on line " << lineno << ": " << e.what() << '\n';
    }
  }
  return out;
}

RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto trials = load_trials(config.trials);
  std::vector<Cell> cells;
  for (const auto& trial : trials) {
    for (const auto& entry : config.strategies) {
      for (const auto* backend : config.subjects_for(entry)) cells.push_back(make_cell(trial, *backend, entry.config, std::nullopt));
    }
  }
  return execute(config, std::move(cells), options, "run");
}

RunSummary run_sweep(const ExperimentConfig& config, SweepAxis axis, const RunOptions& options) {
  if (config.sweep && config.sweep->axis != axis) {
    throw ConfigError("sweep: requested axis '" + std::string(to_string(axis)) + "' but the config declares '" +
                      std::string(to_string(config.sweep->axis)) + "'");
  }
  SweepSpec spec = config.sweep.value_or(SweepSpec{});
  spec.axis = axis;
  const StrategyKind swept = axis == SweepAxis::Beam ? StrategyKind::BSW : StrategyKind::Direct;

  std::vector<StrategyEntry> entries;
  for (const auto& e : config.strategies) {
    if (e.config.kind == swept) entries.push_back(e);
  }
  if (entries.empty()) {
    StrategyEntry fallback;
    fallback.config.kind = swept;
    entries.push_back(std::move(fallback));
  }

  const auto trials = load_trials(config.trials);
  std::vector<Cell> cells;
  for (const auto& entry : entries) {
    for (const auto* backend : config.subjects_for(entry)) {
      if (axis == SweepAxis::Beam && !(backend->info.caps.logprobs && backend->info.caps.beam)) continue;
      for (const auto& point : spec.points()) {
        StrategyConfig c = entry.config;
        if (axis == SweepAxis::Beam) {
          c.beam_width = static_cast<int>(point.value);
        } else {
          c.temperature = point.value;
        }
        validate_strategy(c, backend->info, nullptr);
        for (const auto& trial : trials) cells.push_back(make_cell(trial, *backend, c, point));
      }
    }
  }
  if (cells.empty()) {
    throw CapabilityError("sweep: no subject backend supports the '" + std::string(to_string(axis)) + "' axis");
  }
  return execute(config, std::move(cells), options, "sweep:" + std::string(to_string(axis)));
}

RunSummary resume_run(const fs::path& run_dir, const RunOptions& options) {
  const fs::path config_path = run_dir / "config.toml";
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw ConfigError("resume: " + config_path.string() + " not found");
  std::ostringstream text;
  text << in.rdbuf();

  fs::path base_dir = fs::absolute(run_dir);
  std::vector<std::string> commands{"run"};
  if (std::ifstream state_in(run_dir / kStateFile); state_in) {
    json state = json::parse(state_in, nullptr, false);
    if (!state.is_discarded()) {
      if (state.contains("base_dir")) base_dir = state["base_dir"].get<std::string>();
      if (state.contains("commands")) commands = state["commands"].get<std::vector<std::string>>();
    }
  }
  ExperimentConfig config = parse_config(text.str(), base_dir);
  config.output_dir = fs::absolute(run_dir);
  config.source = fs::absolute(config_path);
  check_config(config);

  RunSummary total;
  for (const auto& cmd : commands) {
    if (cmd == "run") {
      total += run_experiment(config, options);
    } else if (cmd.rfind("sweep:", 0) == 0) {
      total += run_sweep(config, parse_sweep_axis(cmd.substr(6)), options);
    } else {
      throw ConfigError("resume: unknown recorded command '" + cmd + "'");
    }
  }
  return total;
}

}  // namespace ttc
