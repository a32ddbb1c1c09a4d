#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace surf {

/// A realization saved for later re-analysis: the steps plus the inputs that
/// produced them. Layouts are documented in docs/formats.md.
struct Trace {
  std::string spec;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> steps;  // Z_1..Z_n
};

enum class TraceFormat { binary, csv };

/// `.csv` selects CSV, anything else the binary layout.
TraceFormat trace_format_for(const std::filesystem::path& path);

void write_trace(const Trace& trace, const std::filesystem::path& path);
void write_trace(const Trace& trace, const std::filesystem::path& path, TraceFormat format);
/// Detects the format from the leading magic bytes.
Trace read_trace(const std::filesystem::path& path);

}  // namespace surf
