#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "increlora/allocator.hpp"
#include "increlora/trainer.hpp"

// JSON-lines records written by a training run.
//   metrics.jsonl:   {"step":int,"task_loss":f64,"regu_loss":f64,"r_total":int,"eval":f64|null}
//   events.jsonl:    {"step":int,"selected":[int],"r_total":int,"ranks":[int],"scores":[f64]}
//   schedules.jsonl: {"step":int,"groups":[{"group":int,"birth":int,"lr":f64}]}
// Parsers reject missing keys, extra keys and wrong types.
namespace increlora {

nlohmann::json metrics_json(const MetricsRecord& r);
MetricsRecord parse_metrics(const nlohmann::json& j);

nlohmann::json event_json(const AllocationEvent& e);
AllocationEvent parse_event(const nlohmann::json& j);

nlohmann::json schedule_json(const ScheduleRecord& r);

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& lines);
std::vector<nlohmann::json> read_jsonl(const std::string& path);

std::vector<AllocationEvent> read_events(const std::string& path);
std::vector<MetricsRecord> read_metrics(const std::string& path);

}  // namespace increlora
