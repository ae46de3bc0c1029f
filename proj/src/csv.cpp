#include "acela/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "acela/error.hpp"

namespace acela {
namespace {

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorKind::InvalidRecord, fmt::format("invalid record: line {}: bad number '{}'", line_no, s));
  return v;
}

int parse_int(std::string_view s, std::size_t line_no) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorKind::InvalidRecord, fmt::format("invalid record: line {}: bad integer '{}'", line_no, s));
  return v;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
  out << kDatasetHeader << '\n';
  for (const auto& r : dataset.records()) {
    const auto& hw = r.hardware;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.job_id, to_string(r.firmware),
                       r.current_version, r.target_version, hw.server_type, hw.num_cores, hw.ram_gb,
                       hw.disk_gb, hw.flash_gb, hw.region, hw.days_since_last_maintenance, r.priority,
                       r.true_duration, r.visit_time, r.server_id);
  }
}

std::string dataset_to_csv(const Dataset& dataset) {
  std::ostringstream out;
  write_dataset_csv(out, dataset);
  return out.str();
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyInput, "empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetHeader)
    throw Error(ErrorKind::InvalidRecord, "invalid record: unexpected CSV header");

  std::vector<JobRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != 15)
      throw Error(ErrorKind::InvalidRecord,
                  fmt::format("invalid record: line {}: expected 15 fields, got {}", line_no, f.size()));
    JobRecord r;
    r.job_id = f[0];
    r.firmware = parse_firmware(f[1]);
    r.current_version = f[2];
    r.target_version = f[3];
    r.hardware.server_type = f[4];
    r.hardware.num_cores = parse_int(f[5], line_no);
    r.hardware.ram_gb = parse_double(f[6], line_no);
    r.hardware.disk_gb = parse_double(f[7], line_no);
    r.hardware.flash_gb = parse_double(f[8], line_no);
    r.hardware.region = f[9];
    r.hardware.days_since_last_maintenance = parse_double(f[10], line_no);
    r.priority = parse_int(f[11], line_no);
    r.true_duration = parse_double(f[12], line_no);
    r.visit_time = parse_double(f[13], line_no);
    r.server_id = f[14];
    records.push_back(std::move(r));
  }
  return Dataset(std::move(records));
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  return read_dataset_csv(in);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, fmt::format("cannot rename onto '{}': {}", path.string(), ec.message()));
}

}  // namespace acela
