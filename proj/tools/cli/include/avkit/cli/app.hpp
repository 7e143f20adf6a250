#pragma once

#include <iosfwd>

namespace avkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCorpus = 3;
inline constexpr int kExitExperiment = 4;

// Entry point of the avkit command; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace avkit::cli
