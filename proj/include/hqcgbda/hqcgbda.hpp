#pragma once

#include "hqcgbda/classical_master.hpp"
#include "hqcgbda/cuts.hpp"
#include "hqcgbda/dispatch.hpp"
#include "hqcgbda/error.hpp"
#include "hqcgbda/generator.hpp"
#include "hqcgbda/instance_io.hpp"
#include "hqcgbda/matrix.hpp"
#include "hqcgbda/orchestrator.hpp"
#include "hqcgbda/qubo.hpp"
#include "hqcgbda/qubo_engine.hpp"
#include "hqcgbda/qubo_master.hpp"
#include "hqcgbda/trace.hpp"
#include "hqcgbda/uc_model.hpp"
