#pragma once

// Umbrella header for the index bundle library.

#include "indexbundle/axiom_suite.hpp"
#include "indexbundle/bundle.hpp"
#include "indexbundle/bvp.hpp"
#include "indexbundle/errors.hpp"
#include "indexbundle/index_bundle.hpp"
#include "indexbundle/invariants.hpp"
#include "indexbundle/json_io.hpp"
#include "indexbundle/linalg.hpp"
#include "indexbundle/mesh.hpp"
#include "indexbundle/morphism.hpp"
#include "indexbundle/parametrix.hpp"
#include "indexbundle/random_families.hpp"
#include "indexbundle/rng.hpp"
#include "indexbundle/tolerances.hpp"
#include "indexbundle/transport.hpp"
