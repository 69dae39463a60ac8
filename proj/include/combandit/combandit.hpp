#pragma once

// Umbrella header: the whole library.

#include "combandit/rng.hpp"          // IWYU pragma: export
#include "combandit/core.hpp"         // IWYU pragma: export
#include "combandit/policies.hpp"     // IWYU pragma: export
#include "combandit/combinatorial.hpp"  // IWYU pragma: export
#include "combandit/feedback.hpp"     // IWYU pragma: export
#include "combandit/environments.hpp" // IWYU pragma: export
#include "combandit/evaluation.hpp"   // IWYU pragma: export
#include "combandit/runner.hpp"       // IWYU pragma: export
