#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace mobgen::util {

/// Static-partition parallel loop. `body(i)` must only touch state owned by
/// index i; results are independent of the worker count.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned default_thread_count();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

/// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(const std::string& data);

/// SHA-256 of a file's content, lowercase hex.
std::string sha256_file_hex(const std::filesystem::path& path);

/// Minimal CSV reader: comma separated, no quoting (our survey schema never
/// needs it). Returns rows of fields; skips blank lines.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

void log_info(const std::string& msg);
void log_warn(const std::string& msg);

} // namespace mobgen::util
