#include "crowdroute/kv_store.hpp"

#include <sqlite3.h>

#include "crowdroute/error.hpp"

namespace crowdroute {

struct KvStore::Impl {
  sqlite3* db = nullptr;
  ~Impl() {
    if (db != nullptr) sqlite3_close(db);
  }
};

namespace {

[[noreturn]] void fail(sqlite3* db, const std::string& what) {
  throw Error(ErrorCode::kStorage, what + ": " + (db != nullptr ? sqlite3_errmsg(db) : "no database"));
}

// Prepared statement with RAII finalize.
class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) fail(db, "prepare");
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  void bind(int index, std::string_view text) {
    if (sqlite3_bind_text(stmt_, index, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT) != SQLITE_OK) {
      fail(db_, "bind");
    }
  }
  void bind(int index, std::int64_t value) {
    if (sqlite3_bind_int64(stmt_, index, value) != SQLITE_OK) fail(db_, "bind");
  }
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(db_, "step");
  }
  std::string text(int column) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, column));
    return p == nullptr ? std::string() : std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, column)));
  }
  std::int64_t integer(int column) const { return sqlite3_column_int64(stmt_, column); }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

}  // namespace

std::shared_ptr<KvStore> KvStore::open(const std::string& path) {
  auto impl = std::make_unique<Impl>();
  if (sqlite3_open(path.c_str(), &impl->db) != SQLITE_OK) fail(impl->db, "open " + path);
  std::shared_ptr<KvStore> store(new KvStore(std::move(impl)));
  store->exec("PRAGMA journal_mode=WAL;");
  store->exec("PRAGMA synchronous=NORMAL;");
  store->exec("CREATE TABLE IF NOT EXISTS kv (key TEXT PRIMARY KEY, value TEXT NOT NULL);");
  store->exec("CREATE TABLE IF NOT EXISTS events (seq INTEGER PRIMARY KEY AUTOINCREMENT, payload TEXT NOT NULL);");
  return store;
}

KvStore::KvStore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
KvStore::~KvStore() = default;

void KvStore::exec(const char* sql) {
  std::lock_guard lock(mutex_);
  char* err = nullptr;
  if (sqlite3_exec(impl_->db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err != nullptr ? err : "unknown";
    sqlite3_free(err);
    throw Error(ErrorCode::kStorage, std::string(sql) + ": " + msg);
  }
}

void KvStore::put(std::string_view key, std::string_view value) {
  std::lock_guard lock(mutex_);
  Statement s(impl_->db, "INSERT INTO kv(key, value) VALUES(?1, ?2) ON CONFLICT(key) DO UPDATE SET value = ?2;");
  s.bind(1, key);
  s.bind(2, value);
  s.step();
}

std::optional<std::string> KvStore::get(std::string_view key) const {
  std::lock_guard lock(mutex_);
  Statement s(impl_->db, "SELECT value FROM kv WHERE key = ?1;");
  s.bind(1, key);
  if (!s.step()) return std::nullopt;
  return s.text(0);
}

void KvStore::erase(std::string_view key) {
  std::lock_guard lock(mutex_);
  Statement s(impl_->db, "DELETE FROM kv WHERE key = ?1;");
  s.bind(1, key);
  s.step();
}

std::vector<std::pair<std::string, std::string>> KvStore::scan(std::string_view prefix) const {
  std::lock_guard lock(mutex_);
  Statement s(impl_->db, "SELECT key, value FROM kv WHERE substr(key, 1, ?2) = ?1 ORDER BY key;");
  s.bind(1, prefix);
  s.bind(2, static_cast<std::int64_t>(prefix.size()));
  std::vector<std::pair<std::string, std::string>> out;
  while (s.step()) out.emplace_back(s.text(0), s.text(1));
  return out;
}

std::uint64_t KvStore::append_event(std::string_view payload) {
  std::lock_guard lock(mutex_);
  Statement s(impl_->db, "INSERT INTO events(payload) VALUES(?1);");
  s.bind(1, payload);
  s.step();
  return static_cast<std::uint64_t>(sqlite3_last_insert_rowid(impl_->db));
}

std::vector<std::pair<std::uint64_t, std::string>> KvStore::events(std::uint64_t after) const {
  std::lock_guard lock(mutex_);
  Statement s(impl_->db, "SELECT seq, payload FROM events WHERE seq > ?1 ORDER BY seq;");
  s.bind(1, static_cast<std::int64_t>(after));
  std::vector<std::pair<std::uint64_t, std::string>> out;
  while (s.step()) out.emplace_back(static_cast<std::uint64_t>(s.integer(0)), s.text(1));
  return out;
}

KvStore::Transaction::Transaction(KvStore& store) : store_(&store), lock_(store.mutex_) {
  store_->exec("BEGIN IMMEDIATE;");
}

KvStore::Transaction::Transaction(Transaction&& other) noexcept
    : store_(other.store_), lock_(std::move(other.lock_)), done_(other.done_) {
  other.done_ = true;
}

KvStore::Transaction::~Transaction() {
  if (done_) return;
  try {
    store_->exec("ROLLBACK;");
  } catch (...) {
  }
}

void KvStore::Transaction::commit() {
  if (done_) return;
  store_->exec("COMMIT;");
  done_ = true;
}

}  // namespace crowdroute
