#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace crowdroute {

// Embedded transactional key-value store with an append-only event log.
// Backed by SQLite; ":memory:" opens a private in-memory database.
class KvStore {
 public:
  class Transaction {
   public:
    Transaction(Transaction&& other) noexcept;
    Transaction(const Transaction&) = delete;
    Transaction& operator=(const Transaction&) = delete;
    Transaction& operator=(Transaction&&) = delete;
    ~Transaction();  // rolls back unless committed

    void commit();

   private:
    friend class KvStore;
    explicit Transaction(KvStore& store);

    KvStore* store_;
    std::unique_lock<std::recursive_mutex> lock_;
    bool done_ = false;
  };

  static std::shared_ptr<KvStore> open(const std::string& path);
  ~KvStore();
  KvStore(const KvStore&) = delete;
  KvStore& operator=(const KvStore&) = delete;

  void put(std::string_view key, std::string_view value);
  std::optional<std::string> get(std::string_view key) const;
  void erase(std::string_view key);
  std::vector<std::pair<std::string, std::string>> scan(std::string_view prefix) const;

  std::uint64_t append_event(std::string_view payload);
  std::vector<std::pair<std::uint64_t, std::string>> events(std::uint64_t after = 0) const;

  Transaction transaction() { return Transaction(*this); }

 private:
  struct Impl;
  explicit KvStore(std::unique_ptr<Impl> impl);
  void exec(const char* sql);

  std::unique_ptr<Impl> impl_;
  mutable std::recursive_mutex mutex_;
};

}  // namespace crowdroute
