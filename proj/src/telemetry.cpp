#include "spincool/telemetry.hpp"

#include <fstream>
#include <sstream>

#include "spincool/config.hpp"
#include "spincool/errors.hpp"

namespace spincool {

std::string format_record(const TelemetryRecord& r) {
  std::string line;
  line.reserve(7 * 25);
  for (double v : {r.t, r.mx, r.my, r.mz, r.f, r.g, r.e}) {
    if (!line.empty()) line += ',';
    line += format_double(v);
  }
  return line;
}

std::vector<TelemetryRecord> read_telemetry_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open telemetry " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("telemetry file " + path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTelemetryHeader)
    throw ConfigError("telemetry header must be '" + std::string(kTelemetryHeader) + "'");
  std::vector<TelemetryRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[7];
    int k = 0;
    while (k < 7 && std::getline(ss, cell, ',')) {
      char* end = nullptr;
      v[k] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw ConfigError("bad telemetry value '" + cell + "'");
      ++k;
    }
    if (k != 7) throw ConfigError("telemetry row with fewer than 7 columns");
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6]});
  }
  return out;
}

CsvTelemetryWriter::CsvTelemetryWriter(const std::filesystem::path& path, bool append, std::size_t capacity)
    : path_(path), capacity_(capacity == 0 ? 1 : capacity) {
  const bool has_content =
      append && std::filesystem::is_regular_file(path) && std::filesystem::file_size(path) > 0;
  file_ = std::fopen(path.string().c_str(), append ? "ab" : "wb");
  if (file_ == nullptr) throw IoError("cannot open telemetry output " + path.string());
  if (!has_content && std::fprintf(file_, "%s\n", kTelemetryHeader) < 0) {
    std::fclose(file_);
    throw IoError("cannot write telemetry header to " + path.string());
  }
  worker_ = std::thread([this] { drain(); });
}

CsvTelemetryWriter::~CsvTelemetryWriter() {
  try {
    finish();
  } catch (...) {
  }
  {
    std::lock_guard lock(mutex_);
    closing_ = true;
  }
  not_empty_.notify_all();
  if (worker_.joinable()) worker_.join();
  if (file_ != nullptr) std::fclose(file_);
}

void CsvTelemetryWriter::rethrow_if_failed() {
  if (failure_) std::rethrow_exception(failure_);
}

void CsvTelemetryWriter::consume(const TelemetryRecord& record) {
  std::unique_lock lock(mutex_);
  rethrow_if_failed();
  not_full_.wait(lock, [&] { return queue_.size() < capacity_ || failure_; });
  rethrow_if_failed();
  queue_.push_back(record);
  lock.unlock();
  not_empty_.notify_one();
}

void CsvTelemetryWriter::finish() {
  std::unique_lock lock(mutex_);
  idle_.wait(lock, [&] { return (queue_.empty() && !busy_) || failure_; });
  rethrow_if_failed();
  if (std::fflush(file_) != 0) throw IoError("flush failed for " + path_.string());
}

void CsvTelemetryWriter::drain() {
  std::unique_lock lock(mutex_);
  for (;;) {
    not_empty_.wait(lock, [&] { return !queue_.empty() || closing_; });
    if (queue_.empty() && closing_) return;
    std::vector<TelemetryRecord> batch(queue_.begin(), queue_.end());
    queue_.clear();
    busy_ = true;
    lock.unlock();
    not_full_.notify_all();
    bool ok = true;
    for (const auto& r : batch) {
      const std::string line = format_record(r) + '\n';
      if (std::fwrite(line.data(), 1, line.size(), file_) != line.size()) {
        ok = false;
        break;
      }
    }
    lock.lock();
    busy_ = false;
    if (!ok && !failure_) failure_ = std::make_exception_ptr(IoError("write failed for " + path_.string()));
    idle_.notify_all();
    not_full_.notify_all();
  }
}

}  // namespace spincool
