#pragma once

#include "anisomesh/error.hpp"
#include "anisomesh/geometry.hpp"
#include "anisomesh/kernel.hpp"
#include "anisomesh/quadrature.hpp"
#include "anisomesh/triangulation.hpp"
#include "anisomesh/fields.hpp"
#include "anisomesh/expression.hpp"
#include "anisomesh/parallel.hpp"
#include "anisomesh/mesh.hpp"
#include "anisomesh/mesh_io.hpp"
#include "anisomesh/generators.hpp"
#include "anisomesh/regularity.hpp"
#include "anisomesh/indicator.hpp"
#include "anisomesh/refine.hpp"
#include "anisomesh/interp.hpp"
#include "anisomesh/verify.hpp"
#include "anisomesh/svg.hpp"
#include "anisomesh/experiment.hpp"
