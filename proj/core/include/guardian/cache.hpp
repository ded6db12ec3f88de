#pragma once

#include <map>
#include <optional>
#include <string>

#include "guardian/case_model.hpp"

namespace guardian {

/// Identity of one (case, task) computation. Any change to the schema, the
/// template set, or the backend set changes the digest.
struct CacheKey {
  std::string case_id;
  TaskKind task = TaskKind::summarize;
  std::string schema_version;
  std::string template_versions_digest;
  std::string backend_set_digest;

  std::string digest() const;
};

std::string digest_template_versions(const std::map<std::string, std::string>& versions);

/// Content-addressed on-disk store: cache/<key-digest>.json holding the
/// serialized ConsensusResult bytes. Thread-safe; get returns the exact bytes
/// originally stored.
class ResultCache {
 public:
  explicit ResultCache(std::string dir);

  std::optional<std::string> get(const std::string& digest) const;
  void put(const std::string& digest, const std::string& bytes);
  std::size_t clear();
  const std::string& dir() const { return dir_; }

 private:
  std::string path_for(const std::string& digest) const;
  std::string dir_;
};

}  // namespace guardian
