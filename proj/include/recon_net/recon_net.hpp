#pragma once

#include "recon_net/csv.hpp"
#include "recon_net/ensemble.hpp"
#include "recon_net/error.hpp"
#include "recon_net/estimation.hpp"
#include "recon_net/fitness.hpp"
#include "recon_net/graph.hpp"
#include "recon_net/ingest.hpp"
#include "recon_net/models.hpp"
#include "recon_net/parallel.hpp"
#include "recon_net/random.hpp"
#include "recon_net/serialize.hpp"
#include "recon_net/spectral.hpp"
#include "recon_net/stats.hpp"
#include "recon_net/svg.hpp"
#include "recon_net/trf.hpp"
#include "recon_net/validation.hpp"
