#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace m3 {

struct FileStat {
    int64_t mtime_sec = 0;
    int64_t mtime_nsec = 0;
    uint64_t size = 0;

    bool operator==(const FileStat&) const = default;
};

// Filesystem access goes through this interface so dependency checking can be
// instrumented: the cheap-probe guarantees (one stat for an untouched library,
// no content reads for unchanged files) are asserted by counting calls.
class Vfs {
public:
    virtual ~Vfs() = default;

    virtual std::optional<FileStat> stat(const std::string& path);
    virtual std::optional<std::string> read(const std::string& path);

    virtual void write(const std::string& path, const std::string& content);
};

// Wrapper that counts probes per path, for tests that pin probe budgets.
class CountingVfs : public Vfs {
public:
    explicit CountingVfs(Vfs& inner) : inner_(inner) {}

    std::optional<FileStat> stat(const std::string& path) override;
    std::optional<std::string> read(const std::string& path) override;
    void write(const std::string& path, const std::string& content) override;

    uint64_t stats() const { return total_stats_; }
    uint64_t reads() const { return total_reads_; }
    uint64_t stats_under(const std::string& prefix) const;
    uint64_t reads_under(const std::string& prefix) const;
    void reset();

private:
    Vfs& inner_;
    uint64_t total_stats_ = 0;
    uint64_t total_reads_ = 0;
    std::map<std::string, uint64_t> stat_counts_;
    std::map<std::string, uint64_t> read_counts_;
};

// Sets a file's modification time with nanosecond precision. Tests use this to
// exercise the timestamp shortcut without sleeping between builds.
void set_mtime(const std::string& path, int64_t sec, int64_t nsec);

} // namespace m3
