#pragma once

// Multimode Gaussian description of optical pulses: mode bases and
// quadrature transforms, photon-number correlation prediction, variance
// reconstruction from spectral correlations, simulated homodyne
// tomography, photon-number-squeezing optimization, and operational mode
// selection.

#include "pulsemodes/errors.hpp"
#include "pulsemodes/gaussian_state.hpp"
#include "pulsemodes/grid.hpp"
#include "pulsemodes/haus_lai.hpp"
#include "pulsemodes/homodyne.hpp"
#include "pulsemodes/io.hpp"
#include "pulsemodes/mode_functions.hpp"
#include "pulsemodes/mode_select.hpp"
#include "pulsemodes/photon_statistics.hpp"
#include "pulsemodes/quadrature_transform.hpp"
#include "pulsemodes/reconstruction.hpp"
#include "pulsemodes/rng.hpp"
#include "pulsemodes/squeeze_opt.hpp"
#include "pulsemodes/tolerances.hpp"
