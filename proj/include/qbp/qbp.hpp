#pragma once

#include <qbp/admm.hpp>
#include <qbp/baselines.hpp>
#include <qbp/core.hpp>
#include <qbp/diagnostics.hpp>
#include <qbp/quadratic_model.hpp>
