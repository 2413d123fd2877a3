#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

namespace cqkit {

using json = nlohmann::json;

/// Calls `fn(object, line_number)` for every non-blank line of a JSON-lines
/// file. Line numbers are 1-based. Parse failures and non-object lines throw
/// DataError naming the file and line; an unreadable file throws IoError.
void for_each_json_line(const std::filesystem::path &path,
                        const std::function<void(const json &, std::size_t)> &fn);

json read_json_file(const std::filesystem::path &path);

/// Writes to a temporary sibling and renames it over the destination on
/// commit(). Destroying an uncommitted writer removes the temporary, so the
/// destination is either untouched or complete.
class AtomicFile {
public:
  explicit AtomicFile(std::filesystem::path dest);
  AtomicFile(const AtomicFile &) = delete;
  AtomicFile &operator=(const AtomicFile &) = delete;
  ~AtomicFile();

  std::ostream &stream() { return out_; }
  void commit();

private:
  std::filesystem::path dest_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_file_atomic(const std::filesystem::path &dest,
                       const std::string &contents);

/// Shortest round-trippable decimal form, so reports are byte-stable.
std::string format_double(double v);

} // namespace cqkit
