#pragma once
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace gaplab::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

inline Level level() {
  static Level lv = [] {
    const char* e = std::getenv("GAPLAB_LOG");
    if (e == nullptr) return Level::Info;
    if (std::strcmp(e, "error") == 0) return Level::Error;
    if (std::strcmp(e, "debug") == 0) return Level::Debug;
    return Level::Info;
  }();
  return lv;
}

template <class... Args>
void emit(Level lv, const char* tag, const char* fmt, Args... args) {
  if (lv > level()) return;
  std::fprintf(stderr, "[gaplab][%s] ", tag);
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

template <class... Args> void error(const char* fmt, Args... args) { emit(Level::Error, "error", fmt, args...); }
template <class... Args> void info(const char* fmt, Args... args) { emit(Level::Info, "info", fmt, args...); }
template <class... Args> void debug(const char* fmt, Args... args) { emit(Level::Debug, "debug", fmt, args...); }

} // namespace gaplab::log
