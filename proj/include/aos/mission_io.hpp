#pragma once

// Line-delimited JSON for mission logs and detection messages.
//
// Log lines: a "mission" header, one object per event in mission order, and
// a closing "summary". Poses are [x, y, z, yaw, pitch, roll].

#include "aos/mission.hpp"

#include <iosfwd>
#include <string>

namespace aos {

std::string integral_file_name(int id);  // integrals/integral_NNN.pgm
std::string integral_sidecar_name(int id);

void write_mission_log(std::ostream& out, const MissionLog& log);
void write_message(std::ostream& out, const DetectionMessage& msg);

struct MissionSummary {
  std::string mission_id;
  std::vector<IntegralRecord> integrals;
  std::vector<ConfirmEvent> confirmations;
  double path_length_m = 0.0;
  double flight_time_s = 0.0;
  int cells_visited = 0;
  std::string stop_reason;
};

/// Reads back what write_mission_log produced; ParseError on schema mismatch.
MissionSummary read_mission_log(std::istream& in);

}  // namespace aos
