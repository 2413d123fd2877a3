#include "cqkit/jsonl.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <unistd.h>

#include "cqkit/errors.hpp"

namespace cqkit {

void for_each_json_line(
    const std::filesystem::path &path,
    const std::function<void(const json &, std::size_t)> &fn) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception &e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed JSON: " + e.what());
    }
    if (!obj.is_object())
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected a JSON object");
    fn(obj, line_no);
  }
}

json read_json_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw DataError(path.string() + ": malformed JSON: " + e.what());
  }
}

AtomicFile::AtomicFile(std::filesystem::path dest) : dest_(std::move(dest)) {
  static std::atomic<unsigned> counter{0};
  if (dest_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(dest_.parent_path(), ec);
  }
  tmp_ = dest_;
  tmp_ += ".tmp." + std::to_string(::getpid()) + "." +
          std::to_string(counter.fetch_add(1));
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_)
    throw IoError("cannot write " + dest_.string());
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_)
    throw IoError("write failed for " + dest_.string());
  out_.close();
  std::error_code ec;
  std::filesystem::rename(tmp_, dest_, ec);
  if (ec)
    throw IoError("cannot rename into " + dest_.string() + ": " +
                  ec.message());
  committed_ = true;
}

void write_file_atomic(const std::filesystem::path &dest,
                       const std::string &contents) {
  AtomicFile file(dest);
  file.stream() << contents;
  file.commit();
}

std::string format_double(double v) {
  if (!std::isfinite(v))
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

} // namespace cqkit
