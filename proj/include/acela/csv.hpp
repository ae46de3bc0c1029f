#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "acela/domain.hpp"

namespace acela {

/// Column order of the dataset CSV. The header row must match exactly.
inline constexpr std::string_view kDatasetHeader =
    "job_id,firmware,current_version,target_version,server_type,num_cores,ram_gb,"
    "disk_gb,flash_gb,region,days_since_last_maintenance,priority,true_duration,"
    "visit_time,server_id";

std::vector<std::string> split_csv_line(std::string_view line);

void write_dataset_csv(std::ostream& out, const Dataset& dataset);
Dataset read_dataset_csv(std::istream& in);

Dataset load_dataset(const std::filesystem::path& path);
std::string dataset_to_csv(const Dataset& dataset);

/// Writes `contents` to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace acela
