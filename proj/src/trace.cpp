#include "surf/trace.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace surf {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'U', 'R', 'F', 'T', 'R', 'C', '1'};
constexpr std::string_view kCsvMagic = "# surf-trace v1";

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<unsigned char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw std::runtime_error("truncated trace");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("malformed integer in trace: '" + std::string(s) + "'");
  }
  return v;
}

std::string_view after_comma(const std::string& line, std::string_view key) {
  if (line.rfind(std::string(key) + ",", 0) != 0) {
    throw std::runtime_error("trace: expected '" + std::string(key) + ",' line, got '" + line + "'");
  }
  return std::string_view(line).substr(key.size() + 1);
}

}  // namespace

TraceFormat trace_format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? TraceFormat::csv : TraceFormat::binary;
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  write_trace(trace, path, trace_format_for(path));
}

void write_trace(const Trace& trace, const std::filesystem::path& path, TraceFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (format == TraceFormat::binary) {
    os.write(kMagic.data(), kMagic.size());
    put_u64(os, trace.spec.size());
    os.write(trace.spec.data(), static_cast<std::streamsize>(trace.spec.size()));
    put_u64(os, trace.seed);
    put_u64(os, trace.steps.size());
    for (auto z : trace.steps) put_u64(os, z);
  } else {
    os << kCsvMagic << '\n';
    os << "spec," << trace.spec << '\n';
    os << "seed," << trace.seed << '\n';
    os << "n," << trace.steps.size() << '\n';
    os << "t,z\n";
    std::uint64_t t = 0;
    for (auto z : trace.steps) os << ++t << ',' << z << '\n';
  }
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 8> head{};
  is.read(head.data(), head.size());
  Trace trace;
  if (is && head == kMagic) {
    const auto len = get_u64(is);
    if (len > (1u << 20)) throw std::runtime_error("trace spec string too long");
    trace.spec.resize(len);
    if (!is.read(trace.spec.data(), static_cast<std::streamsize>(len))) throw std::runtime_error("truncated trace");
    trace.seed = get_u64(is);
    const auto n = get_u64(is);
    trace.steps.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) trace.steps.push_back(get_u64(is));
    return trace;
  }

  is.clear();
  is.seekg(0);
  std::string line;
  if (!std::getline(is, line) || line != kCsvMagic) throw std::runtime_error("not a surf trace: " + path.string());
  std::getline(is, line);
  trace.spec = std::string(after_comma(line, "spec"));
  std::getline(is, line);
  trace.seed = to_u64(after_comma(line, "seed"));
  std::getline(is, line);
  const auto n = to_u64(after_comma(line, "n"));
  std::getline(is, line);
  if (line != "t,z") throw std::runtime_error("trace: missing 't,z' header");
  trace.steps.reserve(n);
  for (std::uint64_t t = 1; t <= n; ++t) {
    if (!std::getline(is, line)) throw std::runtime_error("truncated trace");
    const auto comma = line.find(',');
    if (comma == std::string::npos || to_u64(std::string_view(line).substr(0, comma)) != t) {
      throw std::runtime_error("trace: bad row " + std::to_string(t));
    }
    trace.steps.push_back(to_u64(std::string_view(line).substr(comma + 1)));
  }
  return trace;
}

}  // namespace surf
