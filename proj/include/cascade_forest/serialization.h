/*
 * Copyright 2026 The Cascade Forest Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CASCADE_FOREST_SERIALIZATION_H_
#define CASCADE_FOREST_SERIALIZATION_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "cascade_forest/cascade.h"
#include "cascade_forest/ensemble.h"

namespace cforest {

inline constexpr std::uint16_t kFormatVersion = 1;

// Binary ensemble container, all integers and doubles little-endian:
//   "CFEM" u16 version, config block, u32 n_features, f64 base_score,
//   u8 constant flag, f64 x2 constant pair, u32 tree count, then per tree
//   f64 weight, u32 node count and preorder node records
//   (u8 kind, u32 feature, f64 threshold, f64 x2 leaf pair, u64 n_train).
// Child links are implied by the preorder layout.
std::string serialize_model(const EnsembleModel& model);
// Throws FormatError on any malformed or truncated input.
EnsembleModel deserialize_model(std::string_view bytes);

// JSON mirror of the binary layout; doubles round-trip exactly.
std::string model_to_json(const EnsembleModel& model);
EnsembleModel model_from_json(std::string_view text);

// Cascade container: "CFCM" u16 version, coarse and expert config blocks,
// f64 cct, f64 tct, routing stats, then three u64-length-prefixed CFEM
// blobs (coarse, expert1, expert2). Length 0 marks an absent expert.
std::string serialize_cascade(const CascadeModel& model);
CascadeModel deserialize_cascade(std::string_view bytes);

std::string cascade_to_json(const CascadeModel& model);
CascadeModel cascade_from_json(std::string_view text);

enum class BlobKind { kEnsemble, kCascade, kUnknown };
BlobKind sniff_blob(std::string_view bytes);

// Whole-file helpers; failures raise DataError.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace cforest

#endif  // CASCADE_FOREST_SERIALIZATION_H_
