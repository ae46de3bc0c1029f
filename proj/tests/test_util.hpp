#pragma once

#include <string>

#include "acela/domain.hpp"

namespace acela::testing {

inline JobRecord make_record(std::string id, double visit_time, double duration = 100.0,
                             FirmwareType fw = FirmwareType::BIOS, std::string server = "s0") {
  JobRecord r;
  r.job_id = std::move(id);
  r.firmware = fw;
  r.current_version = "v1";
  r.target_version = "v2";
  r.hardware.server_type = "T00";
  r.hardware.num_cores = 32;
  r.hardware.ram_gb = 128;
  r.hardware.disk_gb = 960;
  r.hardware.flash_gb = 256;
  r.hardware.region = "R0";
  r.hardware.days_since_last_maintenance = 10;
  r.true_duration = duration;
  r.visit_time = visit_time;
  r.server_id = std::move(server);
  return r;
}

}  // namespace acela::testing
