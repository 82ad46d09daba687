#include "ttc/record.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "ttc/error.hpp"

namespace ttc {

using nlohmann::json;

std::string_view to_string(SweepAxis axis) noexcept { return axis == SweepAxis::Beam ? "beam" : "temperature"; }

SweepAxis parse_sweep_axis(std::string_view text) {
  if (text == "beam") return SweepAxis::Beam;
  if (text == "temperature") return SweepAxis::Temperature;
  throw ConfigError("unknown sweep axis '" + std::string(text) + "' (expected beam or temperature)");
}

std::string SweepPoint::label() const {
  std::ostringstream out;
  out << to_string(axis) << '=';
  if (axis == SweepAxis::Beam) {
    out << static_cast<long long>(std::llround(value));
  } else {
    out << std::setprecision(6) << value;
  }
  return out.str();
}

std::string record_key(const std::string& trial_id, const std::string& backend, const std::string& strategy,
                       const std::optional<SweepPoint>& sweep) {
  return trial_id + "|" + backend + "|" + strategy + "|" + (sweep ? sweep->label() : std::string("-"));
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return out.str();
}

namespace {

json optional_index(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

json candidate_json(const Candidate& c) {
  return {{"text", c.text},
          {"tokens", c.tokens},
          {"token_logprobs", c.token_logprobs},
          {"cum_logprob", c.cum_logprob ? json(*c.cum_logprob) : json(nullptr)},
          {"temperature", c.temperature},
          {"beam_rank", c.beam_rank},
          {"canonical", {{"option", optional_index(c.canonical.option)}, {"rule", to_string(c.canonical.rule)}}}};
}

Candidate candidate_from(const json& j) {
  Candidate c;
  c.text = j.at("text").get<std::string>();
  c.tokens = j.at("tokens").get<std::vector<std::string>>();
  c.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
  if (!j.at("cum_logprob").is_null()) c.cum_logprob = j.at("cum_logprob").get<double>();
  c.temperature = j.at("temperature").get<double>();
  c.beam_rank = j.at("beam_rank").get<int>();
  const auto& can = j.at("canonical");
  if (!can.at("option").is_null()) c.canonical.option = can.at("option").get<std::size_t>();
  c.canonical.rule = parse_match_rule(can.at("rule").get<std::string>());
  return c;
}

json score_json(const VerifierScore& s) {
  return {{"rating", s.rating},
          {"analysis", s.analysis},
          {"selected_option", optional_index(s.selected_option)},
          {"selected_text", s.selected_text},
          {"parse_trace", s.parse_trace},
          {"clamped", s.clamped},
          {"fallback", s.fallback},
          {"attempts", s.attempts}};
}

VerifierScore score_from(const json& j) {
  VerifierScore s;
  s.rating = j.at("rating").get<double>();
  s.analysis = j.at("analysis").get<std::string>();
  if (!j.at("selected_option").is_null()) s.selected_option = j.at("selected_option").get<std::size_t>();
  s.selected_text = j.at("selected_text").get<std::string>();
  s.parse_trace = j.at("parse_trace").get<std::string>();
  s.clamped = j.at("clamped").get<bool>();
  s.fallback = j.at("fallback").get<bool>();
  s.attempts = j.at("attempts").get<int>();
  return s;
}

WeightSource parse_weight_source(const std::string& s) {
  for (auto w : {WeightSource::LogLikSoftmax, WeightSource::LogLikRaw, WeightSource::VerifierScore, WeightSource::Uniform}) {
    if (s == to_string(w)) return w;
  }
  throw ConfigError("unknown weight source '" + s + "'");
}

}  // namespace

json record_to_json(const TrialRecord& r) {
  json candidates = json::array();
  for (const auto& c : r.run.candidates) candidates.push_back(candidate_json(c));
  json scores = json::array();
  for (const auto& s : r.run.verifier_scores) scores.push_back(score_json(s));
  const auto& o = r.run.outcome;
  return {
      {"schema", kRecordSchema},
      {"key", r.key()},
      {"trial_id", r.trial_id},
      {"task_kind", to_string(r.task)},
      {"backend", r.backend},
      {"model", r.model},
      {"strategy", r.strategy},
      {"strategy_kind", to_string(r.strategy_kind)},
      {"sweep", r.sweep ? json{{"axis", to_string(r.sweep->axis)}, {"value", r.sweep->value}} : json(nullptr)},
      {"options", r.options},
      {"ground_truth_index", r.ground_truth},
      {"candidate_source", r.run.candidate_source},
      {"candidates", std::move(candidates)},
      {"verifier_scores", std::move(scores)},
      {"outcome",
       {{"final_answer", optional_index(o.final_answer)},
        {"weights", o.weights},
        {"weight_source", to_string(o.weight_source)},
        {"option_scores", o.option_scores},
        {"decision_rule", o.decision_rule},
        {"tie_break", to_string(o.tie_break)},
        {"tie_broken", o.tie_broken},
        {"mapped_candidates", o.mapped_candidates}}},
      {"correct", r.correct},
      {"backend_calls", r.run.backend_calls},
      {"cache_hits", r.run.cache_hits},
      {"started_at", r.started_at},
      {"finished_at", r.finished_at},
  };
}

TrialRecord record_from_json(const json& doc) {
  if (auto errors = validate_record_json(doc); !errors.empty()) {
    throw ConfigError("invalid record: " + errors.front());
  }
  TrialRecord r;
  r.trial_id = doc["trial_id"].get<std::string>();
  r.task = parse_task_kind(doc["task_kind"].get<std::string>());
  r.backend = doc["backend"].get<std::string>();
  r.model = doc["model"].get<std::string>();
  r.strategy = doc["strategy"].get<std::string>();
  r.strategy_kind = parse_strategy_kind(doc["strategy_kind"].get<std::string>());
  if (!doc["sweep"].is_null()) {
    r.sweep = SweepPoint{parse_sweep_axis(doc["sweep"]["axis"].get<std::string>()), doc["sweep"]["value"].get<double>()};
  }
  r.options = doc["options"].get<std::vector<std::string>>();
  r.ground_truth = doc["ground_truth_index"].get<std::size_t>();
  r.run.candidate_source = doc["candidate_source"].get<std::string>();
  for (const auto& c : doc["candidates"]) r.run.candidates.push_back(candidate_from(c));
  for (const auto& s : doc["verifier_scores"]) r.run.verifier_scores.push_back(score_from(s));
  const auto& o = doc["outcome"];
  auto& out = r.run.outcome;
  if (!o["final_answer"].is_null()) out.final_answer = o["final_answer"].get<std::size_t>();
  out.weights = o["weights"].get<std::vector<double>>();
  out.weight_source = parse_weight_source(o["weight_source"].get<std::string>());
  out.option_scores = o["option_scores"].get<std::vector<double>>();
  out.decision_rule = o["decision_rule"].get<std::string>();
  out.tie_break = parse_tie_break(o["tie_break"].get<std::string>());
  out.tie_broken = o["tie_broken"].get<bool>();
  out.mapped_candidates = o["mapped_candidates"].get<std::size_t>();
  r.correct = doc["correct"].get<bool>();
  r.run.backend_calls = doc["backend_calls"].get<int>();
  r.run.cache_hits = doc["cache_hits"].get<int>();
  r.started_at = doc["started_at"].get<std::string>();
  r.finished_at = doc["finished_at"].get<std::string>();
  return r;
}

namespace {

class Checker {
 public:
  std::vector<std::string> errors;

  const json* member(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      errors.push_back(path + "." + key + ": missing");
      return nullptr;
    }
    return &*it;
  }
  void expect(bool ok, const std::string& path, const std::string& what) {
    if (!ok) errors.push_back(path + ": " + what);
  }
  void string(const json& obj, const std::string& path, const char* key) {
    if (auto v = member(obj, path, key)) expect(v->is_string(), path + "." + key, "expected string");
  }
  void boolean(const json& obj, const std::string& path, const char* key) {
    if (auto v = member(obj, path, key)) expect(v->is_boolean(), path + "." + key, "expected boolean");
  }
  void count(const json& obj, const std::string& path, const char* key) {
    if (auto v = member(obj, path, key)) expect(v->is_number_unsigned() || (v->is_number_integer() && v->get<long long>() >= 0), path + "." + key, "expected non-negative integer");
  }
  void number(const json& obj, const std::string& path, const char* key, bool nullable = false) {
    if (auto v = member(obj, path, key)) expect(v->is_number() || (nullable && v->is_null()), path + "." + key, "expected number");
  }
  void index(const json& obj, const std::string& path, const char* key, std::size_t bound) {
    if (auto v = member(obj, path, key)) {
      if (v->is_null()) return;
      expect(v->is_number_unsigned() && v->get<std::size_t>() < bound, path + "." + key, "expected option index or null");
    }
  }
  void number_array(const json& obj, const std::string& path, const char* key) {
    if (auto v = member(obj, path, key)) {
      expect(v->is_array(), path + "." + key, "expected array");
      if (v->is_array()) {
        for (std::size_t i = 0; i < v->size(); ++i) {
          expect((*v)[i].is_number(), path + "." + key + "[" + std::to_string(i) + "]", "expected number");
        }
      }
    }
  }
  void enumeration(const json& obj, const std::string& path, const char* key, std::initializer_list<const char*> allowed) {
    if (auto v = member(obj, path, key)) {
      bool ok = false;
      if (v->is_string()) {
        for (const char* a : allowed) ok = ok || v->get<std::string>() == a;
      }
      expect(ok, path + "." + key, "unexpected value");
    }
  }
};

}  // namespace

std::vector<std::string> validate_record_json(const json& doc) {
  Checker c;
  const std::string root = "$";
  if (!doc.is_object()) return {"$: expected object"};
  if (auto v = c.member(doc, root, "schema")) c.expect(v->is_string() && *v == kRecordSchema, "$.schema", "unsupported schema");
  for (const char* k : {"key", "trial_id", "backend", "model", "strategy", "candidate_source", "started_at", "finished_at"}) {
    c.string(doc, root, k);
  }
  c.enumeration(doc, root, "task_kind", {"task1_event", "task2_speech", "task3_overlap"});
  c.enumeration(doc, root, "strategy_kind", {"no-ttc", "cot", "majority", "bs-w", "llm-top1", "llm-w"});
  c.boolean(doc, root, "correct");
  c.count(doc, root, "backend_calls");
  c.count(doc, root, "cache_hits");

  std::size_t n_options = 0;
  if (auto v = c.member(doc, root, "options")) {
    const bool ok = v->is_array() && v->size() >= 2 &&
                    std::all_of(v->begin(), v->end(), [](const json& o) { return o.is_string(); });
    c.expect(ok, "$.options", "expected array of at least two strings");
    if (ok) n_options = v->size();
  }
  if (auto v = c.member(doc, root, "ground_truth_index")) {
    c.expect(v->is_number_unsigned() && v->get<std::size_t>() < std::max<std::size_t>(n_options, 1),
             "$.ground_truth_index", "expected option index");
  }
  if (auto v = c.member(doc, root, "sweep"); v && !v->is_null()) {
    c.expect(v->is_object(), "$.sweep", "expected object or null");
    if (v->is_object()) {
      c.enumeration(*v, "$.sweep", "axis", {"beam", "temperature"});
      c.number(*v, "$.sweep", "value");
    }
  }
  if (auto v = c.member(doc, root, "candidates")) {
    c.expect(v->is_array(), "$.candidates", "expected array");
    if (v->is_array()) {
      for (std::size_t i = 0; i < v->size(); ++i) {
        const std::string p = "$.candidates[" + std::to_string(i) + "]";
        const auto& cand = (*v)[i];
        if (!cand.is_object()) {
          c.expect(false, p, "expected object");
          continue;
        }
        c.string(cand, p, "text");
        if (auto t = c.member(cand, p, "tokens")) c.expect(t->is_array(), p + ".tokens", "expected array");
        c.number_array(cand, p, "token_logprobs");
        c.number(cand, p, "cum_logprob", true);
        c.number(cand, p, "temperature");
        if (auto b = c.member(cand, p, "beam_rank")) c.expect(b->is_number_integer() && b->get<long long>() >= -1, p + ".beam_rank", "expected integer >= -1");
        if (auto can = c.member(cand, p, "canonical")) {
          c.expect(can->is_object(), p + ".canonical", "expected object");
          if (can->is_object()) {
            c.index(*can, p + ".canonical", "option", n_options);
            c.enumeration(*can, p + ".canonical", "rule", {"exact", "normalized", "bracket_list", "embedded", "none"});
          }
        }
      }
    }
  }
  if (auto v = c.member(doc, root, "verifier_scores")) {
    c.expect(v->is_array(), "$.verifier_scores", "expected array");
    if (v->is_array()) {
      for (std::size_t i = 0; i < v->size(); ++i) {
        const std::string p = "$.verifier_scores[" + std::to_string(i) + "]";
        const auto& s = (*v)[i];
        if (!s.is_object()) {
          c.expect(false, p, "expected object");
          continue;
        }
        if (auto r = c.member(s, p, "rating")) {
          c.expect(r->is_number() && r->get<double>() >= 0.0 && r->get<double>() <= 1.0, p + ".rating", "expected number in [0, 1]");
        }
        c.string(s, p, "analysis");
        c.index(s, p, "selected_option", n_options);
        c.string(s, p, "selected_text");
        c.string(s, p, "parse_trace");
        c.boolean(s, p, "clamped");
        c.boolean(s, p, "fallback");
        c.count(s, p, "attempts");
      }
    }
  }
  if (auto o = c.member(doc, root, "outcome")) {
    c.expect(o->is_object(), "$.outcome", "expected object");
    if (o->is_object()) {
      const std::string p = "$.outcome";
      c.index(*o, p, "final_answer", n_options);
      c.number_array(*o, p, "weights");
      c.enumeration(*o, p, "weight_source", {"loglik-softmax", "loglik-raw", "verifier-score", "uniform"});
      c.number_array(*o, p, "option_scores");
      c.string(*o, p, "decision_rule");
      c.enumeration(*o, p, "tie_break", {"lowest-temperature", "first-candidate", "lex-smallest-option"});
      c.boolean(*o, p, "tie_broken");
      c.count(*o, p, "mapped_candidates");
    }
  }
  return c.errors;
}

}  // namespace ttc
