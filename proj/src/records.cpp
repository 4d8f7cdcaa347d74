#include "increlora/records.hpp"

#include <fstream>
#include <set>

#include "increlora/errors.hpp"

namespace increlora {
namespace {

using nlohmann::json;

void expect_keys(const json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) throw Error(std::string(what) + ": record is not an object");
  std::set<std::string> want(keys.begin(), keys.end());
  for (const auto& k : want) {
    if (!j.contains(k)) throw Error(std::string(what) + ": missing key '" + k + "'");
  }
  for (const auto& [k, _] : j.items()) {
    if (!want.contains(k)) throw Error(std::string(what) + ": unexpected key '" + k + "'");
  }
}

std::uint64_t get_uint(const json& j, const char* key, const char* what) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw Error(std::string(what) + ": '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double get_real(const json& v, const std::string& key, const char* what) {
  if (!v.is_number()) throw Error(std::string(what) + ": '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

json metrics_json(const MetricsRecord& r) {
  return {{"step", r.step},
          {"task_loss", r.task_loss},
          {"regu_loss", r.regu_loss},
          {"r_total", r.r_total},
          {"eval", r.eval ? json(*r.eval) : json(nullptr)}};
}

MetricsRecord parse_metrics(const json& j) {
  constexpr const char* what = "metrics record";
  expect_keys(j, {"step", "task_loss", "regu_loss", "r_total", "eval"}, what);
  MetricsRecord r;
  r.step = get_uint(j, "step", what);
  r.task_loss = get_real(j.at("task_loss"), "task_loss", what);
  r.regu_loss = get_real(j.at("regu_loss"), "regu_loss", what);
  r.r_total = get_uint(j, "r_total", what);
  if (!j.at("eval").is_null()) r.eval = get_real(j.at("eval"), "eval", what);
  return r;
}

json event_json(const AllocationEvent& e) {
  return {{"step", e.step},
          {"selected", e.selected},
          {"r_total", e.r_total},
          {"ranks", e.ranks},
          {"scores", e.scores}};
}

AllocationEvent parse_event(const json& j) {
  constexpr const char* what = "event record";
  expect_keys(j, {"step", "selected", "r_total", "ranks", "scores"}, what);
  AllocationEvent e;
  e.step = get_uint(j, "step", what);
  e.r_total = get_uint(j, "r_total", what);
  for (const char* key : {"selected", "ranks", "scores"}) {
    if (!j.at(key).is_array()) throw Error(std::string(what) + ": '" + key + "' must be an array");
  }
  for (const auto& v : j.at("selected")) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw Error("event record: bad selected entry");
    e.selected.push_back(v.get<std::size_t>());
  }
  for (const auto& v : j.at("ranks")) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw Error("event record: bad ranks entry");
    e.ranks.push_back(v.get<std::size_t>());
  }
  for (const auto& v : j.at("scores")) e.scores.push_back(get_real(v, "scores", what));
  return e;
}

json schedule_json(const ScheduleRecord& r) {
  json groups = json::array();
  for (const auto& g : r.groups) groups.push_back({{"group", g.group}, {"birth", g.birth}, {"lr", g.lr}});
  return {{"step", r.step}, {"groups", groups}};
}

void write_jsonl(const std::string& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& j : lines) out << j.dump() << '\n';
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<AllocationEvent> read_events(const std::string& path) {
  std::vector<AllocationEvent> out;
  for (const auto& j : read_jsonl(path)) out.push_back(parse_event(j));
  return out;
}

std::vector<MetricsRecord> read_metrics(const std::string& path) {
  std::vector<MetricsRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(parse_metrics(j));
  return out;
}

}  // namespace increlora
