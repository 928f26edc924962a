#include "sep/report_io.hpp"

#include <ostream>

namespace sep {

OutputFile::OutputFile(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(partial_path(), std::ios::binary | std::ios::trunc);
  if (!out_) throw SepError("cannot open output file " + partial_path().string());
}

OutputFile::~OutputFile() {
  if (out_.is_open()) out_.close();
}

std::filesystem::path OutputFile::partial_path() const {
  auto p = path_;
  p += ".partial";
  return p;
}

void OutputFile::commit() {
  if (committed_) return;
  out_.flush();
  if (!out_) throw SepError("write failed for " + partial_path().string());
  out_.close();
  std::filesystem::rename(partial_path(), path_);
  committed_ = true;
}

void write_csv_preamble(std::ostream& os) { os << "# schema_version=" << kSchemaVersion << '\n'; }

void append_samples_csv(std::ostream& os, const ReplicaSummary& summary, bool header) {
  if (header) os << "t,replica_index,w\n";
  os.precision(17);
  for (std::size_t r = 0; r < summary.samples.size(); ++r) {
    os << summary.horizon << ',' << r << ',' << summary.samples[r] << '\n';
  }
}

void write_reports_table(std::ostream& os,
                         const std::vector<std::pair<double, NormalityReport>>& reports) {
  write_csv_preamble(os);
  write_reports_csv(os, reports);
}

void write_json_document(std::ostream& os, nlohmann::json doc) {
  doc["schema_version"] = kSchemaVersion;
  os << doc.dump(2) << '\n';
}

}  // namespace sep
