#include "m3/vfs.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace m3 {

std::optional<FileStat> Vfs::stat(const std::string& path) {
    struct ::stat st;
    if (::stat(path.c_str(), &st) != 0) return std::nullopt;
    FileStat out;
    out.mtime_sec = st.st_mtim.tv_sec;
    out.mtime_nsec = st.st_mtim.tv_nsec;
    out.size = static_cast<uint64_t>(st.st_size);
    return out;
}

std::optional<std::string> Vfs::read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void Vfs::write(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::optional<FileStat> CountingVfs::stat(const std::string& path) {
    total_stats_++;
    stat_counts_[path]++;
    return inner_.stat(path);
}

std::optional<std::string> CountingVfs::read(const std::string& path) {
    total_reads_++;
    read_counts_[path]++;
    return inner_.read(path);
}

void CountingVfs::write(const std::string& path, const std::string& content) {
    inner_.write(path, content);
}

uint64_t CountingVfs::stats_under(const std::string& prefix) const {
    uint64_t n = 0;
    for (const auto& [path, count] : stat_counts_)
        if (path.compare(0, prefix.size(), prefix) == 0) n += count;
    return n;
}

uint64_t CountingVfs::reads_under(const std::string& prefix) const {
    uint64_t n = 0;
    for (const auto& [path, count] : read_counts_)
        if (path.compare(0, prefix.size(), prefix) == 0) n += count;
    return n;
}

void CountingVfs::reset() {
    total_stats_ = 0;
    total_reads_ = 0;
    stat_counts_.clear();
    read_counts_.clear();
}

void set_mtime(const std::string& path, int64_t sec, int64_t nsec) {
    struct timespec times[2];
    times[0].tv_sec = sec;
    times[0].tv_nsec = nsec;
    times[1].tv_sec = sec;
    times[1].tv_nsec = nsec;
    if (utimensat(AT_FDCWD, path.c_str(), times, 0) != 0)
        throw std::runtime_error("utimensat failed for " + path + ": " + std::strerror(errno));
}

} // namespace m3
