#pragma once

#include <ostream>

// Quick invariant checks over the bundled data; prints one line per check.
bool run_selftest(std::ostream& out);
