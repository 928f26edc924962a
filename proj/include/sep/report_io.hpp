#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sep/analysis.hpp"
#include "sep/stirring.hpp"

namespace sep {

/// Bumped whenever a column or key changes meaning.
constexpr int kSchemaVersion = 1;

/// Output file written under `<path>.partial` and renamed to `<path>` by
/// commit(). If the owner goes away without committing (an abort), the
/// `.partial` file is left behind for inspection.
class OutputFile {
 public:
  explicit OutputFile(std::filesystem::path path);
  OutputFile(const OutputFile&) = delete;
  OutputFile& operator=(const OutputFile&) = delete;
  ~OutputFile();

  std::ostream& stream() { return out_; }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path partial_path() const;
  void commit();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  bool committed_ = false;
};

/// CSV files open with a "# schema_version=N" line.
void write_csv_preamble(std::ostream& os);

/// "t,replica_index,w" rows for one horizon.
void append_samples_csv(std::ostream& os, const ReplicaSummary& summary, bool header);

/// Reports table with the schema preamble; see write_reports_csv.
void write_reports_table(std::ostream& os,
                         const std::vector<std::pair<double, NormalityReport>>& reports);

/// Pretty-printed JSON with a top-level "schema_version" key.
void write_json_document(std::ostream& os, nlohmann::json doc);

}  // namespace sep
