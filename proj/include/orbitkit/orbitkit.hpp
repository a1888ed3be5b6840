#pragma once

#include "orbitkit/wide_real.hpp"
#include "orbitkit/expr.hpp"
#include "orbitkit/expr_json.hpp"
#include "orbitkit/linalg.hpp"
#include "orbitkit/sampling.hpp"
#include "orbitkit/fields.hpp"
#include "orbitkit/fields_json.hpp"
#include "orbitkit/rules.hpp"
#include "orbitkit/frames.hpp"
#include "orbitkit/flows.hpp"
#include "orbitkit/parallel.hpp"
#include "orbitkit/orbits.hpp"
#include "orbitkit/conditions.hpp"
#include "orbitkit/corpus.hpp"
