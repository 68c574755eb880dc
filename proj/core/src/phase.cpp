#include "m3/phase.hpp"

#include <cstdio>
#include <sstream>

namespace m3 {

namespace {

std::string secs(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

long long ms(double v) { return static_cast<long long>(v * 1000.0 + 0.5); }

} // namespace

std::string format_report(const PhaseReport& r) {
    std::ostringstream s;
    s << "phase          smart recomp.  front end  code gen.  linking  other  total\n";
    s << "seconds        " << secs(r.smart_recomp) << "          " << secs(r.frontend)
      << "      " << secs(r.codegen) << "      " << secs(r.link) << "    " << secs(r.other)
      << "  " << secs(r.total) << "\n";
    s << "interfaces: " << r.interfaces_parsed << " parsed, " << r.interfaces_reused
      << " reused; units compiled: " << r.units_compiled;
    if (r.queue_wait > 0) s << "; queue wait " << secs(r.queue_wait) << " s";
    s << "\n";
    if (r.failed) s << "build FAILED: " << r.error << "\n";
    return s.str();
}

std::string report_kv(const PhaseReport& r) {
    std::ostringstream s;
    s << "smart_recomp_ms=" << ms(r.smart_recomp) << "\n"
      << "frontend_ms=" << ms(r.frontend) << "\n"
      << "codegen_ms=" << ms(r.codegen) << "\n"
      << "link_ms=" << ms(r.link) << "\n"
      << "other_ms=" << ms(r.other) << "\n"
      << "total_ms=" << ms(r.total) << "\n"
      << "interfaces_parsed=" << r.interfaces_parsed << "\n"
      << "interfaces_reused=" << r.interfaces_reused << "\n"
      << "units_compiled=" << r.units_compiled << "\n"
      << "queue_wait_ms=" << ms(r.queue_wait) << "\n"
      << "failed=" << (r.failed ? 1 : 0) << "\n";
    return s.str();
}

PhaseClock::PhaseClock(PhaseReport& report)
    : report_(report), start_(Clock::now()), last_(start_) {
    stack_.push_back(Phase::Other);
}

double* PhaseClock::bucket(Phase p) {
    switch (p) {
        case Phase::SmartRecomp: return &report_.smart_recomp;
        case Phase::Frontend: return &report_.frontend;
        case Phase::Codegen: return &report_.codegen;
        case Phase::Link: return &report_.link;
        case Phase::Other: break;
    }
    return &report_.other;
}

void PhaseClock::flush(Clock::time_point now) {
    *bucket(stack_.back()) += std::chrono::duration<double>(now - last_).count();
    last_ = now;
}

PhaseClock::Scope PhaseClock::enter(Phase p) {
    flush(Clock::now());
    stack_.push_back(p);
    return Scope(this);
}

void PhaseClock::pop() {
    flush(Clock::now());
    stack_.pop_back();
}

void PhaseClock::finish() {
    flush(Clock::now());
    report_.total = std::chrono::duration<double>(last_ - start_).count();
}

} // namespace m3
