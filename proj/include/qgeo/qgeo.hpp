#ifndef QGEO_QGEO_HPP
#define QGEO_QGEO_HPP

// Umbrella header: wave-packet propagation on point-cloud Laplacians, from
// sampling through spectral propagation to layout and clustering.

#include "qgeo/cache.hpp"
#include "qgeo/clustering.hpp"
#include "qgeo/coherent.hpp"
#include "qgeo/csv.hpp"
#include "qgeo/embedding.hpp"
#include "qgeo/errors.hpp"
#include "qgeo/kernel.hpp"
#include "qgeo/phase_space.hpp"
#include "qgeo/pipeline.hpp"
#include "qgeo/propagation.hpp"
#include "qgeo/rng.hpp"
#include "qgeo/sampling.hpp"
#include "qgeo/spectral.hpp"
#include "qgeo/types.hpp"

#endif // QGEO_QGEO_HPP
