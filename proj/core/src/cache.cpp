#include "guardian/cache.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "guardian/persistence.hpp"
#include "guardian/text.hpp"

namespace fs = std::filesystem;

namespace guardian {

std::string digest_template_versions(
    const std::map<std::string, std::string>& versions) {
  std::string joined;
  for (const auto& [id, version] : versions)
    joined += id + "=" + version + ";";
  return text::sha256_hex(joined);
}

std::string CacheKey::digest() const {
  std::string joined = case_id + "|" + task_slug(task) + "|" + schema_version + "|" +
                       template_versions_digest + "|" + backend_set_digest;
  return text::sha256_hex(joined);
}

ResultCache::ResultCache(std::string dir) : dir_(std::move(dir)) {}

std::string ResultCache::path_for(const std::string& digest) const {
  return dir_ + "/" + digest + ".json";
}

std::optional<std::string> ResultCache::get(const std::string& digest) const {
  std::ifstream in(path_for(digest), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void ResultCache::put(const std::string& digest, const std::string& bytes) {
  atomic_write(path_for(digest), bytes);
}

std::size_t ResultCache::clear() {
  if (!fs::exists(dir_)) return 0;
  std::size_t removed = 0;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      fs::remove(entry.path());
      ++removed;
    }
  }
  return removed;
}

}  // namespace guardian
