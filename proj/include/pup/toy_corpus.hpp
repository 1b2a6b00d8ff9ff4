// Copyright (c) 2026 The PUP Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace pup::toy {

// A small synthetic question corpus. Every sentence realizes an intent
// through one of several templates; slots are filled either with an entity
// (kept fixed across paraphrases) or with a member of a synonym group
// (free to vary across paraphrases).

struct Slot {
  std::string name;
  std::vector<std::string> fillers;
  bool entity = false;
};

struct Intent {
  std::vector<std::string> templates;
};

struct ToyCorpus {
  std::vector<std::string> train;
  std::vector<std::string> valid;
  // Each row holds a source sentence followed by its references.
  std::vector<std::vector<std::string>> test;
};

namespace detail {

inline const std::map<std::string, Slot>& slots() {
  static const std::map<std::string, Slot> table = [] {
    std::map<std::string, Slot> t;
    auto add = [&t](std::string name, std::vector<std::string> fillers, bool entity) {
      t[name] = Slot{name, std::move(fillers), entity};
    };
    add("learn", {"learn", "study", "master"}, false);
    add("subject", {"python", "math", "physics", "english", "guitar", "chess", "history", "cooking"}, true);
    add("quickly", {"quickly", "fast", "rapidly"}, false);
    add("best", {"best", "easiest", "simplest"}, false);
    add("buy", {"buy", "purchase", "get"}, false);
    add("cheap", {"cheap", "affordable", "inexpensive"}, false);
    add("item", {"laptop", "phone", "car", "bike", "camera", "watch"}, true);
    add("people", {"people", "folks"}, false);
    add("like", {"like", "love", "enjoy"}, false);
    add("thing", {"music", "movies", "football", "coffee", "games", "travel"}, true);
    add("possible", {"possible", "feasible"}, false);
    add("span", {"month", "week", "year"}, true);
    add("improve", {"improve", "boost", "increase"}, false);
    add("skill", {"memory", "focus", "confidence", "sleep", "health"}, true);
    add("city", {"london", "paris", "tokyo", "berlin", "delhi"}, true);
    add("visit", {"visit", "see", "explore"}, false);
    add("good", {"good", "nice", "great"}, false);
    return t;
  }();
  return table;
}

inline const std::vector<Intent>& intents() {
  static const std::vector<Intent> table = {
      {{"how can i {learn} {subject} {quickly} ?", "how do i {learn} {subject} {quickly} ?",
        "what is the {best} way to {learn} {subject} ?"}},
      {{"where can i {buy} a {cheap} {item} ?", "where do i {buy} a {cheap} {item} ?",
        "what is the {best} place to {buy} a {cheap} {item} ?"}},
      {{"why do {people} {like} {thing} so much ?", "why do {people} {like} {thing} ?",
        "why do so many {people} {like} {thing} ?"}},
      {{"is it {possible} to {learn} {subject} in a {span} ?", "can i {learn} {subject} in a {span} ?",
        "can someone {learn} {subject} in one {span} ?"}},
      {{"how can i {improve} my {skill} ?", "how do i {improve} my {skill} ?",
        "what is the {best} way to {improve} my {skill} ?"}},
      {{"what are {good} places to {visit} in {city} ?", "what should i {visit} in {city} ?",
        "which {good} places should i {visit} in {city} ?"}},
  };
  return table;
}

inline std::vector<std::string> slot_names(const std::string& tmpl) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = tmpl.find('{', pos)) != std::string::npos) {
    const std::size_t close = tmpl.find('}', pos);
    names.push_back(tmpl.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return names;
}

inline std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out += tmpl.substr(pos);
      break;
    }
    const std::size_t close = tmpl.find('}', open);
    out += tmpl.substr(pos, open - pos);
    out += values.at(tmpl.substr(open + 1, close - open - 1));
    pos = close + 1;
  }
  return out;
}

template <class Rng>
std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Entities for every slot used by the intent, drawn once so paraphrases
// agree on them.
template <class Rng>
std::map<std::string, std::string> draw_entities(const Intent& intent, Rng& rng) {
  std::map<std::string, std::string> values;
  for (const auto& t : intent.templates)
    for (const auto& name : slot_names(t)) {
      const Slot& s = slots().at(name);
      if (s.entity && !values.count(name)) values[name] = s.fillers[pick(rng, s.fillers.size())];
    }
  return values;
}

template <class Rng>
std::string realize(const Intent& intent, std::size_t tmpl, std::map<std::string, std::string> entities, Rng& rng) {
  for (const auto& name : slot_names(intent.templates[tmpl])) {
    const Slot& s = slots().at(name);
    if (!s.entity) entities[name] = s.fillers[pick(rng, s.fillers.size())];
  }
  return fill(intent.templates[tmpl], entities);
}

}  // namespace detail

/// Deterministic for a given seed. Test rows carry `n_refs` references,
/// each a different template of the source's intent with the same entities.
inline ToyCorpus make_toy_corpus(std::uint64_t seed, std::size_t n_train, std::size_t n_valid, std::size_t n_test,
                                 std::size_t n_refs = 2) {
  std::mt19937_64 rng(seed);
  const auto& intents = detail::intents();
  auto sentence = [&] {
    const Intent& intent = intents[detail::pick(rng, intents.size())];
    const auto entities = detail::draw_entities(intent, rng);
    return detail::realize(intent, detail::pick(rng, intent.templates.size()), entities, rng);
  };
  ToyCorpus c;
  for (std::size_t k = 0; k < n_train; ++k) c.train.push_back(sentence());
  for (std::size_t k = 0; k < n_valid; ++k) c.valid.push_back(sentence());
  for (std::size_t k = 0; k < n_test; ++k) {
    const Intent& intent = intents[detail::pick(rng, intents.size())];
    const auto entities = detail::draw_entities(intent, rng);
    const std::size_t src = detail::pick(rng, intent.templates.size());
    std::vector<std::string> row{detail::realize(intent, src, entities, rng)};
    for (std::size_t r = 0; r < n_refs; ++r) {
      const std::size_t t = (src + 1 + r % (intent.templates.size() - 1)) % intent.templates.size();
      row.push_back(detail::realize(intent, t, entities, rng));
    }
    c.test.push_back(std::move(row));
  }
  return c;
}

}  // namespace pup::toy
