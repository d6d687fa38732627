#pragma once

#include "specsense/signal_model.hpp"
#include "specsense/detector.hpp"
#include "specsense/noise_estimator.hpp"
#include "specsense/montecarlo.hpp"
#include "specsense/svg_plot.hpp"
