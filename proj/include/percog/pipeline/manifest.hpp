#pragma once

#include <map>
#include <string>
#include <vector>

namespace percog::pipeline {

struct StageRecord {
  std::string name;
  std::map<std::string, std::string> inputs;   // artifact -> content hash
  std::map<std::string, std::string> outputs;  // artifact -> content hash
  std::string signature;                       // (config subtree, input hashes)
  std::string status = "ok";                   // ok | skipped | failed
  std::string started;
  std::string finished;
};

/// Reproducibility record of one pipeline run: config hash, code version and
/// per-stage artifact hashes. Every produced artifact appears exactly once.
struct RunManifest {
  std::string config_hash;
  std::string code_version;
  std::vector<StageRecord> stages;
};

extern const char* kCodeVersion;

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

/// Atomic (write-temp-then-rename) persistence.
void save_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

std::string iso_timestamp();

}  // namespace percog::pipeline
