#pragma once

// Umbrella header.

#include "dsfusion/boe.hpp"
#include "dsfusion/classifiers.hpp"
#include "dsfusion/conflict_measures.hpp"
#include "dsfusion/errors.hpp"
#include "dsfusion/fusion.hpp"
#include "dsfusion/harness.hpp"
#include "dsfusion/io.hpp"
#include "dsfusion/mass_function.hpp"
#include "dsfusion/rng.hpp"
#include "dsfusion/selftest.hpp"
#include "dsfusion/synthetic.hpp"
