#pragma once

#include "hpnfft/bench.hpp"
#include "hpnfft/decomp.hpp"
#include "hpnfft/errors.hpp"
#include "hpnfft/ewald.hpp"
#include "hpnfft/fft.hpp"
#include "hpnfft/ndft.hpp"
#include "hpnfft/nfft.hpp"
#include "hpnfft/parallel.hpp"
#include "hpnfft/point_io.hpp"
#include "hpnfft/tcp_transport.hpp"
#include "hpnfft/transport.hpp"
#include "hpnfft/types.hpp"
#include "hpnfft/window.hpp"
#include "hpnfft/wire.hpp"
