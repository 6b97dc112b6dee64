#include "perflab/kv_store.hpp"

#include <mutex>
#include <stdexcept>

namespace perflab::store {

KvStore::KvStore(const KvStore& other) {
  std::shared_lock lock(other.mutex_);
  data_ = other.data_;
}

KvStore& KvStore::operator=(const KvStore& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  data_ = other.data_;
  return *this;
}

KvStore::KvStore(KvStore&& other) {
  std::unique_lock lock(other.mutex_);
  data_ = std::move(other.data_);
  other.data_.clear();
}

KvStore& KvStore::operator=(KvStore&& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  data_ = std::move(other.data_);
  other.data_.clear();
  return *this;
}

void KvStore::put(std::string_view key, std::string_view value) {
  if (key.empty()) throw std::invalid_argument("kv store key must not be empty");
  std::unique_lock lock(mutex_);
  auto it = data_.find(key);
  if (it == data_.end()) {
    data_.emplace(std::string(key), std::string(value));
  } else {
    it->second.assign(value);
  }
}

std::optional<std::string> KvStore::get(std::string_view key) const {
  std::shared_lock lock(mutex_);
  auto it = data_.find(key);
  if (it == data_.end()) return std::nullopt;
  return it->second;
}

bool KvStore::compare_and_swap(std::string_view key, const std::optional<std::string>& expected,
                               std::string_view desired) {
  if (key.empty()) throw std::invalid_argument("kv store key must not be empty");
  std::unique_lock lock(mutex_);
  auto it = data_.find(key);
  if (it == data_.end()) {
    if (expected) return false;
    data_.emplace(std::string(key), std::string(desired));
    return true;
  }
  if (!expected || it->second != *expected) return false;
  it->second.assign(desired);
  return true;
}

std::vector<KeyValue> KvStore::scan_prefix(std::string_view prefix) const {
  std::vector<KeyValue> out;
  for_each_prefix(prefix, [&](std::string_view k, std::string_view v) {
    out.emplace_back(std::string(k), std::string(v));
  });
  return out;
}

std::size_t KvStore::size() const {
  std::shared_lock lock(mutex_);
  return data_.size();
}

std::string KvStore::serialize() const {
  std::shared_lock lock(mutex_);
  std::string out;
  for (const auto& [k, v] : data_) {
    out.append(k).push_back('\t');
    out.append(v).push_back('\n');
  }
  return out;
}

}  // namespace perflab::store
