// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/motion/text.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace fm {

namespace {

const std::vector<std::string> kVocabulary = {
    "<pad>", "<unk>", "a", "person", "walks", "slowly", "quickly", "in", "straight", "line",
    "small", "large", "circle", "to", "the", "left", "right", "jumps", "once", "twice",
    "three", "times", "waves", "hand", "use", "opposite", "side", "do", "it", "faster",
    "slower", "move", "with", "bigger", "smaller", "motions", "raise", "higher", "and", "then",
};

const std::unordered_map<std::string, int64_t>& word_index() {
  static const auto index = [] {
    std::unordered_map<std::string, int64_t> m;
    for (size_t i = 0; i < kVocabulary.size(); ++i) m.emplace(kVocabulary[i], static_cast<int64_t>(i));
    return m;
  }();
  return index;
}

struct TemplateSpec {
  const char* name;
  const char* pattern;  // "{}" marks a slot
  size_t slots;
};

const TemplateSpec& spec_of(TextTemplate id) {
  static const TemplateSpec specs[] = {
      {"walk-line", "a person walks {} in a straight line", 1},
      {"walk-circle", "a person walks in a {} circle to the {}", 2},
      {"jump", "a person jumps {}", 1},
      {"arm-wave", "a person waves the {} hand {}", 2},
      {"edit-mirror", "use the opposite side", 0},
      {"edit-speed", "do it {}", 1},
      {"edit-amplitude", "move with {} motions", 1},
      {"edit-raise-arm", "raise the {} hand higher", 1},
      {"free", "", 0},
  };
  return specs[static_cast<int>(id)];
}

}  // namespace

const std::vector<std::string>& vocabulary() { return kVocabulary; }
int vocabulary_size() { return static_cast<int>(kVocabulary.size()); }

int64_t token_id(std::string_view word) {
  auto it = word_index().find(std::string(word));
  return it == word_index().end() ? 1 : it->second;
}

std::vector<int64_t> tokenize(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    clean.push_back(std::isalnum(u) ? static_cast<char>(std::tolower(u)) : ' ');
  }
  std::istringstream in(clean);
  std::vector<int64_t> ids;
  for (std::string w; in >> w;) ids.push_back(token_id(w));
  if (ids.empty()) throw std::invalid_argument("text prompt has no words");
  if (static_cast<int>(ids.size()) > kMaxTextTokens)
    throw std::invalid_argument("text prompt has " + std::to_string(ids.size()) + " words, at most " + std::to_string(kMaxTextTokens) +
                                " are supported");
  return ids;
}

TextPrompt TextPrompt::render(TextTemplate id, std::vector<std::string> slots) {
  const auto& spec = spec_of(id);
  if (id == TextTemplate::Free) throw std::invalid_argument("free text has no template; use TextPrompt::free");
  if (slots.size() != spec.slots)
    throw std::invalid_argument(std::string("template '") + spec.name + "' takes " + std::to_string(spec.slots) + " slots, got " +
                                std::to_string(slots.size()));
  std::string out;
  size_t next = 0;
  for (const char* p = spec.pattern; *p; ++p) {
    if (p[0] == '{' && p[1] == '}') {
      out += slots[next++];
      ++p;
    } else {
      out.push_back(*p);
    }
  }
  TextPrompt t;
  t.template_id = id;
  t.slots = std::move(slots);
  t.text = std::move(out);
  t.tokens = tokenize(t.text);
  return t;
}

TextPrompt TextPrompt::free(std::string text) {
  TextPrompt t;
  t.tokens = tokenize(text);
  t.text = std::move(text);
  return t;
}

const char* template_name(TextTemplate id) { return spec_of(id).name; }

}  // namespace fm
