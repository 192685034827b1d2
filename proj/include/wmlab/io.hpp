#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wmlab/eval.hpp"

namespace wmlab {

// Line-oriented JSON container: one header object, then one object per record.
// Keys serialize sorted and doubles round-trip, so identical content gives
// identical bytes.
struct JsonlFile {
  nlohmann::json header;
  std::vector<nlohmann::json> records;
};

void write_jsonl(const std::filesystem::path& path, const JsonlFile& file);
JsonlFile read_jsonl(const std::filesystem::path& path);

std::string format_double(double v);

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);
void write_fpr_study_csv(const std::filesystem::path& path, const FprStudyResult& study);
void write_attack_csv(const std::filesystem::path& path, std::span<const AttackResult> results);

}  // namespace wmlab
