#pragma once

#include <vector>

#include "rtb/core.hpp"

namespace rtb::fixtures {

/// Eight campaign bid logs with bids between 1 and 4 ticks; four wins, four
/// censored losses.
inline std::vector<BidLogRecord> eight_record_log() {
  auto P = [](std::int64_t t) { return Price::from_ticks(t); };
  return {
      BidLogRecord::win(P(2), P(1)), BidLogRecord::win(P(3), P(2)), BidLogRecord::loss(P(2)),
      BidLogRecord::win(P(3), P(1)), BidLogRecord::loss(P(3)),      BidLogRecord::loss(P(4)),
      BidLogRecord::win(P(4), P(3)), BidLogRecord::loss(P(1)),
  };
}

}  // namespace rtb::fixtures
