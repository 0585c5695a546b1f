#pragma once

#include "cgpnas/rng.hpp"
#include "cgpnas/errors.hpp"
#include "cgpnas/cgp.hpp"
#include "cgpnas/codec.hpp"
#include "cgpnas/search_space.hpp"
#include "cgpnas/phenotype.hpp"
#include "cgpnas/pareto.hpp"
#include "cgpnas/analysis.hpp"
#include "cgpnas/variation.hpp"
#include "cgpnas/evaluator.hpp"
#include "cgpnas/external_evaluator.hpp"
#include "cgpnas/moea.hpp"
#include "cgpnas/config.hpp"
#include "cgpnas/engine.hpp"
#include "cgpnas/run_io.hpp"
