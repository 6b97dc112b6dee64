#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace perflab::store {

using KeyValue = std::pair<std::string, std::string>;

/// Ordered in-memory key-value store. Readers share a lock; writers and
/// compare-and-swap take it exclusively, so every single-key operation is
/// linearizable.
class KvStore {
 public:
  KvStore() = default;
  KvStore(const KvStore& other);
  KvStore& operator=(const KvStore& other);
  KvStore(KvStore&& other);
  KvStore& operator=(KvStore&& other);

  /// Throws std::invalid_argument on an empty key.
  void put(std::string_view key, std::string_view value);

  /// std::nullopt when the key is absent; an empty string is a valid value.
  [[nodiscard]] std::optional<std::string> get(std::string_view key) const;

  /// Replaces the value only if it currently equals `expected`.
  /// `expected == std::nullopt` means "key must be absent".
  bool compare_and_swap(std::string_view key, const std::optional<std::string>& expected,
                        std::string_view desired);

  /// All entries whose key starts with `prefix`, in ascending key order.
  [[nodiscard]] std::vector<KeyValue> scan_prefix(std::string_view prefix) const;

  /// Visits matching entries under the read lock without copying them.
  template <typename Visitor>
  void for_each_prefix(std::string_view prefix, Visitor&& visit) const {
    std::shared_lock lock(mutex_);
    for (auto it = data_.lower_bound(prefix); it != data_.end(); ++it) {
      if (std::string_view(it->first).substr(0, prefix.size()) != prefix) break;
      visit(std::string_view(it->first), std::string_view(it->second));
    }
  }

  [[nodiscard]] std::size_t size() const;

  /// Deterministic dump: one "key\tvalue\n" line per entry in key order.
  [[nodiscard]] std::string serialize() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::string, std::less<>> data_;
};

}  // namespace perflab::store
