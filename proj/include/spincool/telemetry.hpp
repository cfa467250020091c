#pragma once

#include <condition_variable>
#include <cstdio>
#include <deque>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace spincool {

struct TelemetryRecord {
  double t = 0.0;
  double mx = 0.0, my = 0.0, mz = 0.0;
  double f = 0.0;
  double g = 0.0;
  double e = 0.0;

  bool operator==(const TelemetryRecord&) const = default;
};

inline constexpr const char* kTelemetryHeader = "t,mx,my,mz,f,g,e";

/// "t,mx,my,mz,f,g,e" values at 17 significant digits, no newline.
std::string format_record(const TelemetryRecord& r);

std::vector<TelemetryRecord> read_telemetry_csv(const std::filesystem::path& path);

class TelemetrySink {
 public:
  virtual ~TelemetrySink() = default;
  virtual void consume(const TelemetryRecord& record) = 0;
  /// Blocks until everything consumed so far is persisted.
  virtual void finish() {}
};

class NullSink final : public TelemetrySink {
 public:
  void consume(const TelemetryRecord&) override {}
};

class VectorSink final : public TelemetrySink {
 public:
  void consume(const TelemetryRecord& record) override { records.push_back(record); }
  std::vector<TelemetryRecord> records;
};

/// CSV writer with a bounded queue drained by a background thread. `consume`
/// blocks only while the queue is full. Write failures surface as IoError
/// from the next consume() or finish().
class CsvTelemetryWriter final : public TelemetrySink {
 public:
  CsvTelemetryWriter(const std::filesystem::path& path, bool append, std::size_t capacity = 4096);
  ~CsvTelemetryWriter() override;
  CsvTelemetryWriter(const CsvTelemetryWriter&) = delete;
  CsvTelemetryWriter& operator=(const CsvTelemetryWriter&) = delete;

  void consume(const TelemetryRecord& record) override;
  void finish() override;

  const std::filesystem::path& path() const { return path_; }

 private:
  void drain();
  void rethrow_if_failed();

  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  std::size_t capacity_;
  std::deque<TelemetryRecord> queue_;
  std::mutex mutex_;
  std::condition_variable not_empty_, not_full_, idle_;
  bool closing_ = false;
  bool busy_ = false;
  std::exception_ptr failure_;
  std::thread worker_;
};

}  // namespace spincool
