#pragma once

#include "localcoin/adversary.hpp"
#include "localcoin/attest.hpp"
#include "localcoin/chain.hpp"
#include "localcoin/config.hpp"
#include "localcoin/event_log.hpp"
#include "localcoin/geom.hpp"
#include "localcoin/messages.hpp"
#include "localcoin/metrics.hpp"
#include "localcoin/node.hpp"
#include "localcoin/rng.hpp"
#include "localcoin/serialize.hpp"
#include "localcoin/sim.hpp"
#include "localcoin/types.hpp"
