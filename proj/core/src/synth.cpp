#include "ttc/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "ttc/error.hpp"

namespace ttc {
namespace {

constexpr double kForegroundHeadroomDbfs = -3.0;

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string join_digits(std::initializer_list<int> digits) {
  std::string out;
  for (int d : digits) {
    if (!out.empty()) out += ',';
    out += std::to_string(d);
  }
  return out;
}

std::string join_digits(const std::vector<int>& digits) {
  std::string out;
  for (int d : digits) {
    if (!out.empty()) out += ',';
    out += std::to_string(d);
  }
  return out;
}

template <typename T>
T pick(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
  return items[dist(rng)];
}

/// Correct option plus `count - 1` distractors: shuffled `primary` values
/// first, then shuffled `fallback` values. Values equal to the correct one or
/// already chosen are skipped.
std::vector<std::string> draw_distractors(const std::string& correct, std::vector<std::string> primary,
                                          std::vector<std::string> fallback, int count,
                                          std::mt19937_64& rng, const char* what) {
  std::shuffle(primary.begin(), primary.end(), rng);
  std::shuffle(fallback.begin(), fallback.end(), rng);
  std::vector<std::string> chosen;
  std::set<std::string> used{correct};
  for (auto* pool : {&primary, &fallback}) {
    for (auto& v : *pool) {
      if (static_cast<int>(chosen.size()) + 1 >= count) break;
      if (used.insert(v).second) chosen.push_back(v);
    }
  }
  if (static_cast<int>(chosen.size()) + 1 < count) {
    throw GenerationError(std::string("not enough plausible distractors for ") + what + " (need " +
                          std::to_string(count - 1) + ", have " + std::to_string(chosen.size()) + ")");
  }
  return chosen;
}

GeneratedQuestion finish(std::string pre, std::string question, const std::string& correct,
                         std::vector<std::string> distractors, TargetGender target, std::mt19937_64& rng) {
  GeneratedQuestion q;
  q.pre_instruction = std::move(pre);
  q.question = std::move(question);
  q.options = std::move(distractors);
  q.options.push_back(correct);
  std::shuffle(q.options.begin(), q.options.end(), rng);
  q.ground_truth = static_cast<std::size_t>(
      std::find(q.options.begin(), q.options.end(), correct) - q.options.begin());
  q.target = target;
  return q;
}

std::vector<std::vector<int>> adjacent_pairs(const std::vector<int>& seq) {
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) out.push_back({seq[i], seq[i + 1]});
  return out;
}

std::size_t min_length(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::LastTwoDigits:
    case QuestionKind::SumLastTwo: return 2;
    case QuestionKind::OrderLastThree: return 3;
    default: return 1;
  }
}

std::int64_t ms_to_samples(double ms, int rate) {
  return static_cast<std::int64_t>(std::llround(ms * rate / 1000.0));
}

void place(Waveform& dst, const Waveform& clip, std::int64_t onset) {
  const auto end = static_cast<std::size_t>(onset) + clip.size();
  if (dst.samples.size() < end) dst.samples.resize(end, 0.0f);
  for (std::size_t i = 0; i < clip.size(); ++i) dst.samples[static_cast<std::size_t>(onset) + i] += clip.samples[i];
}

}  // namespace

QuestionTemplate default_template(QuestionKind kind) {
  QuestionTemplate t;
  t.kind = kind;
  t.option_count = (kind == QuestionKind::EventPresence || kind == QuestionKind::LastTwoDigits) ? 2 : 4;
  return t;
}

std::vector<QuestionTemplate> default_templates(TaskKind task) {
  switch (task) {
    case TaskKind::Task1Event: return {default_template(QuestionKind::EventPresence)};
    case TaskKind::Task2Speech:
      return {default_template(QuestionKind::LastDigit), default_template(QuestionKind::LastTwoDigits)};
    case TaskKind::Task3Overlap:
      return {default_template(QuestionKind::SumLastTwo), default_template(QuestionKind::NotMentioned),
              default_template(QuestionKind::OrderLastThree), default_template(QuestionKind::LastTwoDigits)};
  }
  return {};
}

void validate_template(const QuestionTemplate& tmpl, TaskKind task) {
  const auto name = std::string(to_string(tmpl.kind));
  if (tmpl.option_count < 2) throw ConfigError("template " + name + ": option_count must be >= 2");
  const bool event_kind = tmpl.kind == QuestionKind::EventPresence;
  if (event_kind != (task == TaskKind::Task1Event)) {
    throw ConfigError("template " + name + " is not valid for " + std::string(to_string(task)));
  }
  if (event_kind && tmpl.option_count != 2) throw ConfigError("event presence questions have exactly two options");
  const bool overlap_only = tmpl.kind == QuestionKind::SumLastTwo || tmpl.kind == QuestionKind::NotMentioned ||
                            tmpl.kind == QuestionKind::OrderLastThree;
  if (overlap_only && task != TaskKind::Task3Overlap) {
    throw ConfigError("template " + name + " needs overlapped speech (task 3)");
  }
  if (tmpl.target_gender == TargetGender::Both) {
    if (task != TaskKind::Task3Overlap || tmpl.kind != QuestionKind::LastDigit) {
      throw ConfigError("template " + name + ": target 'both' is only supported for last_digit on task 3");
    }
  }
  if (tmpl.kind == QuestionKind::NotMentioned && tmpl.option_count > 10) {
    throw ConfigError("not_mentioned supports at most 10 options");
  }
}

GeneratedQuestion generate_question(const QuestionTemplate& tmpl, const SceneFacts& facts, std::mt19937_64& rng) {
  validate_template(tmpl, facts.task);

  if (tmpl.kind == QuestionKind::EventPresence) {
    if (facts.queried_event.empty()) throw GenerationError("event presence: no queried event");
    GeneratedQuestion q;
    q.pre_instruction = facts.queried_category ? "Focus on " + upper(*facts.queried_category) + " sound."
                                               : std::string("Focus on the sound events.");
    q.question = "Did you hear the " + facts.queried_event + "?";
    q.options = {"Yes", "No"};
    q.ground_truth = facts.event_present ? 0 : 1;
    return q;
  }

  // Resolve the addressed speaker.
  TargetGender target;
  if (facts.task == TaskKind::Task2Speech) {
    target = facts.male_digits.empty() ? TargetGender::Female : TargetGender::Male;
    if (tmpl.target_gender && *tmpl.target_gender != target) {
      throw GenerationError("template targets a speaker who is not in the scene");
    }
  } else if (tmpl.target_gender) {
    target = *tmpl.target_gender;
  } else {
    target = std::bernoulli_distribution(0.5)(rng) ? TargetGender::Male : TargetGender::Female;
  }

  const Gender g = target == TargetGender::Female ? Gender::Female : Gender::Male;
  const auto& seq = g == Gender::Male ? facts.male_digits : facts.female_digits;
  const auto& other = g == Gender::Male ? facts.female_digits : facts.male_digits;
  const std::string who = std::string(to_string(g));
  const std::string WHO = upper(who);
  if (seq.size() < min_length(tmpl.kind) ||
      (target == TargetGender::Both && (facts.male_digits.empty() || facts.female_digits.empty()))) {
    throw GenerationError("digit sequence too short for " + std::string(to_string(tmpl.kind)));
  }

  const std::string pre = facts.task == TaskKind::Task2Speech ? std::string("Listen carefully.")
                          : target == TargetGender::Both     ? std::string("Focus on both speakers.")
                          : tmpl.kind == QuestionKind::OrderLastThree
                              ? "Focus on digits order spoken by " + WHO + "."
                              : "Focus on " + WHO + ".";

  std::vector<std::string> all_digits;
  for (int d = 0; d <= 9; ++d) all_digits.push_back(std::to_string(d));

  switch (tmpl.kind) {
    case QuestionKind::LastDigit: {
      if (target == TargetGender::Both) {
        const int m = facts.male_digits.back();
        const int f = facts.female_digits.back();
        const auto correct = join_digits({m, f});
        std::vector<std::string> primary, fallback;
        if (m != f) primary.push_back(join_digits({f, m}));
        for (int x : facts.male_digits) primary.push_back(join_digits({x, f}));
        for (int y : facts.female_digits) primary.push_back(join_digits({m, y}));
        for (int d = 0; d <= 9; ++d) {
          fallback.push_back(join_digits({d, f}));
          fallback.push_back(join_digits({m, d}));
        }
        return finish(pre, "What is the last digit spoken by the male and by the female, respectively?", correct,
                      draw_distractors(correct, primary, fallback, tmpl.option_count, rng, "last_digit"), target,
                      rng);
      }
      const auto correct = std::to_string(seq.back());
      std::vector<std::string> primary;
      for (int d : seq) primary.push_back(std::to_string(d));
      for (int d : other) primary.push_back(std::to_string(d));
      return finish(pre, "What is the last digit spoken by the " + who + "?", correct,
                    draw_distractors(correct, primary, all_digits, tmpl.option_count, rng, "last_digit"), target, rng);
    }
    case QuestionKind::LastTwoDigits: {
      const int a = seq[seq.size() - 2];
      const int b = seq.back();
      const auto correct = join_digits({a, b});
      std::vector<std::string> primary, fallback;
      for (const auto& p : adjacent_pairs(seq)) primary.push_back(join_digits(p));
      for (const auto& p : adjacent_pairs(other)) primary.push_back(join_digits(p));
      for (int d = 0; d <= 9; ++d) {
        fallback.push_back(join_digits({d, b}));
        fallback.push_back(join_digits({a, d}));
      }
      return finish(pre, "What is the LAST TWO digits spoken by " + who + "?", correct,
                    draw_distractors(correct, primary, fallback, tmpl.option_count, rng, "last_two_digits"), target,
                    rng);
    }
    case QuestionKind::SumLastTwo: {
      const int correct_sum = seq[seq.size() - 2] + seq.back();
      const auto correct = std::to_string(correct_sum);
      std::vector<std::string> primary;
      for (const auto* s : {&seq, &other}) {
        for (const auto& p : adjacent_pairs(*s)) primary.push_back(std::to_string(p[0] + p[1]));
      }
      return finish(pre, "What is the sum of the last two digits spoken by the " + who + "?", correct,
                    draw_distractors(correct, primary, {}, tmpl.option_count, rng, "sum_last_two"), target, rng);
    }
    case QuestionKind::NotMentioned: {
      std::set<int> spoken(seq.begin(), seq.end());
      std::vector<std::string> unspoken, spoken_text;
      for (int d = 0; d <= 9; ++d) (spoken.count(d) ? spoken_text : unspoken).push_back(std::to_string(d));
      if (unspoken.empty()) throw GenerationError("not_mentioned: every digit was spoken");
      const auto correct = pick(unspoken, rng);
      return finish(pre, "Which digit has NOT been mentioned by " + who + "?", correct,
                    draw_distractors(correct, spoken_text, {}, tmpl.option_count, rng, "not_mentioned"), target, rng);
    }
    case QuestionKind::OrderLastThree: {
      std::vector<int> mine(seq.end() - 3, seq.end());
      const auto correct = join_digits(mine);
      std::vector<std::string> primary, fallback;
      if (other.size() >= 3) {
        std::vector<int> theirs(other.end() - 3, other.end());
        for (int mask = 1; mask < 8; ++mask) {
          std::vector<int> mixed = mine;
          for (int k = 0; k < 3; ++k) {
            if (mask & (1 << k)) mixed[static_cast<std::size_t>(k)] = theirs[static_cast<std::size_t>(k)];
          }
          primary.push_back(join_digits(mixed));
        }
      }
      std::vector<int> perm = mine;
      std::sort(perm.begin(), perm.end());
      do {
        fallback.push_back(join_digits(perm));
      } while (std::next_permutation(perm.begin(), perm.end()));
      return finish(pre, "What is the order of last three digits spoken by " + who + "?", correct,
                    draw_distractors(correct, primary, fallback, tmpl.option_count, rng, "order_last_three"), target,
                    rng);
    }
    case QuestionKind::EventPresence: break;
  }
  throw GenerationError("unhandled question kind");
}

SynthesisResult synthesize_trial(const Corpus& corpus, TaskKind task, const QuestionTemplate& tmpl,
                                 const SynthParams& params, std::uint64_t seed, std::string id) {
  validate_template(tmpl, task);
  const TaskKind tasks[] = {task};
  check_coverage(corpus, tasks);
  if (task != TaskKind::Task1Event && params.sequence_length < 1) {
    throw ConfigError("sequence_length must be >= 1");
  }
  if (task != TaskKind::Task1Event && static_cast<std::size_t>(params.sequence_length) < min_length(tmpl.kind)) {
    throw ConfigError("sequence_length " + std::to_string(params.sequence_length) + " too short for " +
                      std::string(to_string(tmpl.kind)));
  }
  const bool noisy = task != TaskKind::Task1Event && !(std::isinf(params.snr_db) && params.snr_db > 0);
  const auto noises = corpus.of_kind(ClipKind::Noise);
  if (noisy && noises.empty()) throw CoverageError("corpus has no noise clip for a noisy trial");

  std::mt19937_64 rng(seed);
  const int rate = corpus.sample_rate;
  const auto gap = ms_to_samples(task == TaskKind::Task1Event ? params.event_gap_ms : params.gap_ms, rate);
  const auto lead = ms_to_samples(params.lead_ms, rate);

  for (int attempt = 0; attempt <= params.max_retries; ++attempt) {
    SceneFacts facts;
    facts.task = task;
    std::vector<MixLayer> layers;
    std::vector<std::int64_t> onsets;
    Waveform fg;
    fg.sample_rate = rate;

    if (task == TaskKind::Task1Event) {
      auto labels = corpus.event_labels();
      const int hi = std::min<int>(params.max_events, static_cast<int>(labels.size()));
      const int lo = std::min(std::max(1, params.min_events), hi);
      const int count = std::uniform_int_distribution<int>(lo, hi)(rng);
      std::shuffle(labels.begin(), labels.end(), rng);
      std::vector<std::string> played(labels.begin(), labels.begin() + count);
      std::vector<std::string> absent(labels.begin() + count, labels.end());
      std::int64_t cursor = lead;
      for (const auto& label : played) {
        std::vector<const Clip*> choices;
        for (const auto& c : corpus.clips) {
          if (c.kind == ClipKind::Event && c.label == label) choices.push_back(&c);
        }
        const Clip* clip = pick(choices, rng);
        place(fg, clip->wave, cursor);
        layers.push_back({clip->id, cursor, 1.0});
        onsets.push_back(cursor);
        cursor += static_cast<std::int64_t>(clip->wave.size()) + gap;
      }
      fg.samples.resize(static_cast<std::size_t>(cursor - gap + lead), 0.0f);
      const bool present = absent.empty() || std::bernoulli_distribution(0.5)(rng);
      facts.events_played = played;
      facts.event_present = present;
      facts.queried_event = present ? pick(played, rng) : pick(absent, rng);
      if (const Clip* q = corpus.find_event(facts.queried_event)) facts.queried_category = q->category;
    } else {
      std::vector<Gender> speakers;
      if (task == TaskKind::Task3Overlap) {
        speakers = {Gender::Male, Gender::Female};
      } else if (tmpl.target_gender == TargetGender::Male) {
        speakers = {Gender::Male};
      } else if (tmpl.target_gender == TargetGender::Female) {
        speakers = {Gender::Female};
      } else {
        speakers = {std::bernoulli_distribution(0.5)(rng) ? Gender::Male : Gender::Female};
      }
      std::uniform_int_distribution<int> digit(0, 9);
      for (Gender g : speakers) {
        auto& seq = g == Gender::Male ? facts.male_digits : facts.female_digits;
        for (int k = 0; k < params.sequence_length; ++k) seq.push_back(digit(rng));
      }
      std::int64_t cursor = lead;
      for (int k = 0; k < params.sequence_length; ++k) {
        std::size_t longest = 0;
        for (Gender g : speakers) {
          const auto& seq = g == Gender::Male ? facts.male_digits : facts.female_digits;
          const Clip* clip = pick(corpus.digit_clips(seq[static_cast<std::size_t>(k)], g), rng);
          place(fg, clip->wave, cursor);
          layers.push_back({clip->id, cursor, 1.0});
          longest = std::max(longest, clip->wave.size());
        }
        onsets.push_back(cursor);
        cursor += static_cast<std::int64_t>(longest) + gap;
      }
      fg.samples.resize(static_cast<std::size_t>(cursor - gap + lead), 0.0f);
    }

    GeneratedQuestion q;
    try {
      q = generate_question(tmpl, facts, rng);
    } catch (const GenerationError&) {
      continue;
    }

    const double limit = db_to_linear(kForegroundHeadroomDbfs);
    if (const float p = peak(fg.samples); p > limit) {
      const double scale = limit / p;
      for (float& s : fg.samples) s = static_cast<float>(s * scale);
      for (auto& l : layers) l.gain *= scale;
    }

    SynthesisResult out;
    out.foreground = fg;
    out.plan.duration = static_cast<std::int64_t>(fg.size());
    if (noisy) {
      const Clip* bed = pick(noises, rng);
      auto mixed = mix_at_snr(fg, bed->wave, params.snr_db, params.activity);
      layers.push_back({bed->id, 0, mixed.background_gain});
      out.plan.target_snr_db = params.snr_db;
      out.background = std::move(mixed.background);
      out.trial.audio = std::move(mixed.mix);
    } else {
      out.background.sample_rate = rate;
      out.background.samples.assign(fg.size(), 0.0f);
      out.trial.audio = fg;
    }
    out.plan.layers = std::move(layers);

    Trial& t = out.trial;
    if (id.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "task%d-%016llx", task_number(task), static_cast<unsigned long long>(seed));
      id = buf;
    }
    t.id = id;
    t.task = task;
    t.pre_instruction = q.pre_instruction;
    t.question = q.question;
    t.options = q.options;
    t.ground_truth = q.ground_truth;
    auto& md = t.metadata;
    md.question_kind = tmpl.kind;
    if (task != TaskKind::Task1Event) md.target_gender = q.target;
    if (noisy) md.snr_db = params.snr_db;
    md.male_digits = facts.male_digits;
    md.female_digits = facts.female_digits;
    md.event_labels = facts.events_played;
    if (task == TaskKind::Task1Event) md.queried_event = facts.queried_event;
    md.digit_onsets = task == TaskKind::Task1Event ? std::vector<std::int64_t>{} : onsets;
    md.gap_ms = task == TaskKind::Task1Event ? params.event_gap_ms : params.gap_ms;
    md.seed = seed;
    validate_trial(t);
    return out;
  }
  throw GenerationError("could not satisfy template " + std::string(to_string(tmpl.kind)) + " after " +
                        std::to_string(params.max_retries + 1) + " draws");
}

std::uint64_t trial_seed(std::uint64_t set_seed, TaskKind task, int index) noexcept {
  // splitmix64 over (seed, task, index)
  std::uint64_t z = set_seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(task_number(task)) * 1000003ull +
                                                        static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<std::filesystem::path> write_trial_set(const Corpus& corpus, const TrialSetSpec& spec,
                                                   const std::filesystem::path& out_dir) {
  if (spec.per_task < 0) throw ConfigError("per-task trial count must be >= 0");
  const auto trial_dir = out_dir / "trials";
  const auto audio_dir = out_dir / "audio";
  std::filesystem::create_directories(trial_dir);
  std::filesystem::create_directories(audio_dir);
  check_coverage(corpus, spec.tasks);

  std::vector<std::filesystem::path> written;
  for (TaskKind task : spec.tasks) {
    const auto templates = default_templates(task);
    for (int i = 0; i < spec.per_task; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "task%d-%04d", task_number(task), i);
      const auto& tmpl = templates[static_cast<std::size_t>(i) % templates.size()];
      auto result = synthesize_trial(corpus, task, tmpl, spec.params, trial_seed(spec.seed, task, i), id);
      Trial& t = result.trial;
      write_wav(audio_dir / (t.id + ".wav"), t.audio);
      t.audio_path = "../audio/" + t.id + ".wav";
      const auto path = trial_dir / (t.id + ".json");
      save_trial(t, path);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace ttc
