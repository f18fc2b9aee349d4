#pragma once

// Convenience umbrella: the whole library in one include.

#include "codl/adaptation.hpp"
#include "codl/ast.hpp"
#include "codl/checks.hpp"
#include "codl/codegen.hpp"
#include "codl/context.hpp"
#include "codl/diagnostics.hpp"
#include "codl/ehealth.hpp"
#include "codl/engine.hpp"
#include "codl/parser.hpp"
#include "codl/snapshot.hpp"
