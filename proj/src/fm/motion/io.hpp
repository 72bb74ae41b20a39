// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fm/motion/generator.hpp"

namespace fm {

using json = nlohmann::json;

/// A one-line compact JSON header terminated by '\n', followed by a binary payload.
struct Framed {
  json header;
  std::vector<char> payload;
  size_t header_bytes = 0;  // including the newline
};

Framed read_framed(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it into place.
void write_framed(const std::filesystem::path& path, const json& header, const std::vector<char>& payload);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

void append_floats(std::vector<char>& out, std::span<const float> values);
/// Reads `count` little-endian float32 values starting at `offset`. Throws
/// IoError naming the byte offset of the first non-finite value.
std::vector<float> read_floats(const Framed& f, size_t offset, size_t count, const std::string& what);

void save_motion(const MotionTensor& m, const std::filesystem::path& path, const json& metadata = json::object());
MotionTensor load_motion(const std::filesystem::path& path);
/// Also rejects files whose layout differs from `expected`.
MotionTensor load_motion(const std::filesystem::path& path, const FeatureLayout& expected);
json load_motion_metadata(const std::filesystem::path& path);

json to_json(const DataConfig& c);
DataConfig data_config_from_json(const json& j);

/// Writes manifest.json and motions/ under `dir`.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir, const json& extra = json::object());
Dataset load_dataset(const std::filesystem::path& dir);
/// Content identity of the dataset's manifest (16 hex digits).
std::string dataset_hash(const std::filesystem::path& dir);

/// FNV-1a of a byte string rendered as 16 hex digits.
std::string hex_hash(std::string_view bytes);

}  // namespace fm
