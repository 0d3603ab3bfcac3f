#pragma once

#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "characterize.hpp"
#include "circuit.hpp"
#include "config.hpp"
#include "engine.hpp"

namespace spdsim {

// Streaming timestamp writer: a config echo as '#' header lines, then one
// "<time_ps> <D|S>" row per record.
class FileRecordSink : public RecordSink {
public:
  FileRecordSink(const std::string& path, const Config& cfg);
  ~FileRecordSink() override;

  FileRecordSink(const FileRecordSink&) = delete;
  FileRecordSink& operator=(const FileRecordSink&) = delete;

  void on_record(const TimestampRecord& rec) override;
  void close();  // flush and report any write error

private:
  std::FILE* f_ = nullptr;
  std::string path_;
};

void write_timestamp_file(const std::string& path, const Config& cfg,
                          std::span<const TimestampRecord> records);

struct LoadedRecords {
  std::vector<TimestampRecord> records;
  Config config;  // reconstructed from the header echo
};

LoadedRecords load_timestamp_file(const std::string& path);

void write_histogram_csv(const std::string& path, const Histogram& h);

void write_report_csv(const std::string& path, const CalibrationReport& rep,
                      const Config& cfg);

void write_waveform(const std::string& path,
                    std::span<const WaveformPoint> points);

}  // namespace spdsim
