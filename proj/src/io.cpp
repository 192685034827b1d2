#include "wmlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace wmlab {

void write_jsonl(const std::filesystem::path& path, const JsonlFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << file.header.dump() << '\n';
  for (const auto& rec : file.records) out << rec.dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

JsonlFile read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  JsonlFile file;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);  // throws with line context lost; fine at this scale
    if (!have_header) {
      file.header = std::move(j);
      have_header = true;
    } else {
      file.records.push_back(std::move(j));
    }
  }
  if (!have_header) throw std::runtime_error("empty jsonl file: " + path.string());
  return file;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "# auc=" << format_double(curve.auc) << '\n';
  out << "fpr,tpr,threshold\n";
  for (const RocPoint& p : curve.points)
    out << format_double(p.fpr) << ',' << format_double(p.tpr) << ','
        << format_double(p.threshold) << '\n';
}

void write_fpr_study_csv(const std::filesystem::path& path, const FprStudyResult& study) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "lambda,match_threshold,theoretical,empirical,num_sequences\n";
  for (const FprRow& r : study.rows)
    out << format_double(r.lambda) << ',' << r.match_threshold << ','
        << format_double(r.theoretical) << ',' << format_double(r.empirical) << ','
        << r.num_sequences << '\n';
}

void write_attack_csv(const std::filesystem::path& path, std::span<const AttackResult> results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  double mean = 0.0;
  for (const AttackResult& r : results) mean += r.replaced_fraction;
  if (!results.empty()) mean /= static_cast<double>(results.size());
  out << "# mean_replaced_fraction=" << format_double(mean) << '\n';
  out << "id,masked_count,replaced_count,replaced_fraction\n";
  for (std::size_t i = 0; i < results.size(); ++i)
    out << i << ',' << results[i].masked_count << ',' << results[i].replaced_count << ','
        << format_double(results[i].replaced_fraction) << '\n';
}

}  // namespace wmlab
