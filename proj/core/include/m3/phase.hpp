#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace m3 {

// Per-build timing breakdown and work counters. Seconds per phase; the
// formatter reports milliseconds where machines read it.
struct PhaseReport {
    double smart_recomp = 0;
    double frontend = 0;
    double codegen = 0;
    double link = 0;
    double other = 0;
    double total = 0;
    uint64_t interfaces_parsed = 0;
    uint64_t interfaces_reused = 0;
    uint64_t units_compiled = 0;
    bool failed = false;
    std::string error;      // first diagnostic when failed
    double queue_wait = 0;  // seconds spent queued behind other builds

    bool operator==(const PhaseReport&) const = default;
};

// Human table, column vocabulary as published: smart recomp., front end,
// code gen., linking, other, total.
std::string format_report(const PhaseReport& r);

// Line-oriented `key=value` form, millisecond timings.
std::string report_kv(const PhaseReport& r);

enum class Phase : uint8_t { SmartRecomp, Frontend, Codegen, Link, Other };

// Attributes wall time to the innermost open phase, so a parse happening
// inside the validation walk still counts as front-end time. Unclaimed time
// lands in `other`; the phase columns always sum to `total`.
class PhaseClock {
public:
    explicit PhaseClock(PhaseReport& report);

    class Scope {
    public:
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;
        Scope(Scope&& other) noexcept : clock_(other.clock_) { other.clock_ = nullptr; }
        ~Scope() {
            if (clock_) clock_->pop();
        }

    private:
        friend class PhaseClock;
        explicit Scope(PhaseClock* c) : clock_(c) {}
        PhaseClock* clock_;
    };

    [[nodiscard]] Scope enter(Phase p);

    // Settles `total`. Call once, after the last phase scope has closed.
    void finish();

private:
    using Clock = std::chrono::steady_clock;

    double* bucket(Phase p);
    void flush(Clock::time_point now);
    void pop();

    PhaseReport& report_;
    Clock::time_point start_;
    Clock::time_point last_;
    std::vector<Phase> stack_;
};

} // namespace m3
