#include "percog/pipeline/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "json.hpp"

namespace percog::pipeline {

using nlohmann::json;

const char* kCodeVersion = "percog-0.1.0";

std::string manifest_to_json(const RunManifest& m) {
  json stages = json::array();
  for (const auto& s : m.stages)
    stages.push_back(json{{"name", s.name},
                          {"inputs", s.inputs},
                          {"outputs", s.outputs},
                          {"signature", s.signature},
                          {"status", s.status},
                          {"started", s.started},
                          {"finished", s.finished}});
  json doc{{"format", "percog-manifest"},
           {"version", 1},
           {"config_hash", m.config_hash},
           {"code_version", m.code_version},
           {"stages", std::move(stages)}};
  return doc.dump(2);
}

RunManifest manifest_from_json(const std::string& text) {
  json doc = json::parse(text);
  RunManifest m;
  m.config_hash = doc.value("config_hash", "");
  m.code_version = doc.value("code_version", "");
  for (const auto& js : doc.at("stages")) {
    StageRecord s;
    s.name = js.at("name").get<std::string>();
    s.inputs = js.at("inputs").get<std::map<std::string, std::string>>();
    s.outputs = js.at("outputs").get<std::map<std::string, std::string>>();
    s.signature = js.value("signature", "");
    s.status = js.value("status", "ok");
    s.started = js.value("started", "");
    s.finished = js.value("finished", "");
    m.stages.push_back(std::move(s));
  }
  return m;
}

void save_manifest(const std::string& path, const RunManifest& m) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("save_manifest: cannot open " + tmp);
    f << manifest_to_json(m);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("save_manifest: rename failed for " + path);
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_manifest: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return manifest_from_json(text);
}

std::string iso_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace percog::pipeline
