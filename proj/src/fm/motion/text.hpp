// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fm {

inline constexpr int kMaxTextTokens = 16;

/// Fixed template vocabulary. Id 0 is padding, id 1 stands for unknown words.
const std::vector<std::string>& vocabulary();
int vocabulary_size();
int64_t token_id(std::string_view word);

/// Lower-cases, strips punctuation and maps each word to a vocabulary id.
/// Throws std::invalid_argument beyond kMaxTextTokens words or on empty text.
std::vector<int64_t> tokenize(std::string_view text);

enum class TextTemplate {
  WalkLine,
  WalkCircle,
  Jump,
  ArmWave,
  EditMirror,
  EditSpeed,
  EditAmplitude,
  EditRaiseArm,
  Free,
};

struct TextPrompt {
  TextTemplate template_id = TextTemplate::Free;
  std::vector<std::string> slots;
  std::string text;
  std::vector<int64_t> tokens;

  static TextPrompt render(TextTemplate id, std::vector<std::string> slots);
  /// Wraps user text (condition files); tokens come from the same tokenizer.
  static TextPrompt free(std::string text);

  bool operator==(const TextPrompt&) const = default;
};

const char* template_name(TextTemplate id);

}  // namespace fm
