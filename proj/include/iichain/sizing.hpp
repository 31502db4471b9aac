//------------------------------------------------------------------------------
//
//   Copyright 2026 The iichain Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "iichain/block.hpp"
#include "iichain/types.hpp"

namespace iichain {

// Storage estimator for a full deployment: every AS keeps a copy of every
// other AS's chain, so the interesting number is the grand total across all
// ASes' IRR objects plus per-protocol operational blocks, inflated by the
// fraction of blocks expected to go obsolete before compaction runs.

struct SizingParams {
  std::uint64_t max_block_bytes = 0;        // measured largest block
  std::uint64_t block_multiplier = 2;       // headroom factor over the largest block
  std::uint64_t irr_objects_per_as = 0;     // routing-registry objects carried per AS
  std::uint64_t as_count = 0;               // ASes participating
  std::uint64_t protocol_count = 0;         // protocols tracked with their own blocks
  std::uint64_t blocks_per_protocol = 20;   // operational blocks kept per protocol
  double obsolete_fraction = 0.25;          // share of blocks awaiting compaction
};

struct EstimateReport {
  std::uint64_t per_block_bytes = 0;
  std::uint64_t irr_bytes_per_as = 0;
  std::uint64_t irr_bytes_total = 0;
  std::uint64_t protocol_bytes_per_protocol = 0;
  std::uint64_t grand_total_bytes = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["per_block_bytes"] = per_block_bytes;
    j["irr_bytes_per_as"] = irr_bytes_per_as;
    j["irr_bytes_total"] = irr_bytes_total;
    j["protocol_bytes_per_protocol"] = protocol_bytes_per_protocol;
    j["grand_total_bytes"] = grand_total_bytes;
    return j;
  }
};

inline std::size_t measure_block_bytes(const Block& block) {
  return block_to_json_line(block).size();
}

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out))
    throw RangeError("sizing arithmetic overflows 64 bits");
  return out;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out))
    throw RangeError("sizing arithmetic overflows 64 bits");
  return out;
}

}  // namespace detail

// paper_mode keeps the protocol contribution as a single per-protocol figure
// instead of multiplying it out across protocol_count; the original analysis
// can be read either way, so both are available.
inline EstimateReport estimate_total(const SizingParams& params,
                                     bool paper_mode = false) {
  if (params.max_block_bytes == 0 || params.block_multiplier == 0 ||
      params.irr_objects_per_as == 0 || params.as_count == 0 ||
      params.protocol_count == 0 || params.blocks_per_protocol == 0)
    throw RangeError("sizing parameters must all be positive");
  if (!(params.obsolete_fraction >= 0.0) || !(params.obsolete_fraction < 1.0))
    throw RangeError("obsolete_fraction must lie in [0, 1)");

  EstimateReport report;
  report.per_block_bytes =
      detail::checked_mul(params.max_block_bytes, params.block_multiplier);
  report.irr_bytes_per_as =
      detail::checked_mul(report.per_block_bytes, params.irr_objects_per_as);
  report.irr_bytes_total =
      detail::checked_mul(params.as_count, report.irr_bytes_per_as);
  report.protocol_bytes_per_protocol =
      detail::checked_mul(params.blocks_per_protocol, report.per_block_bytes);

  const std::uint64_t protocol_total =
      paper_mode ? report.protocol_bytes_per_protocol
                 : detail::checked_mul(report.protocol_bytes_per_protocol,
                                       params.protocol_count);
  const std::uint64_t live_total =
      detail::checked_add(report.irr_bytes_total, protocol_total);

  // Inflation by 1/(1 - fraction), kept exact by treating the fraction as a
  // rational with a fixed power-of-ten denominator; only fractions needing
  // more than nine decimal digits would round here.
  constexpr std::uint64_t kScale = 1'000'000'000;
  const auto numerator = static_cast<std::uint64_t>(
      std::llround(params.obsolete_fraction * static_cast<double>(kScale)));
  const std::uint64_t remaining = kScale - numerator;
  if (remaining == 0) throw RangeError("obsolete_fraction too close to 1");
  const unsigned __int128 scaled =
      static_cast<unsigned __int128>(live_total) * kScale;
  const unsigned __int128 total = (scaled + remaining - 1) / remaining;
  if (total > static_cast<unsigned __int128>(UINT64_MAX))
    throw RangeError("sizing arithmetic overflows 64 bits");
  report.grand_total_bytes = static_cast<std::uint64_t>(total);
  return report;
}

inline std::string format_estimate(const EstimateReport& report) {
  std::ostringstream out;
  out << "per block bytes            " << report.per_block_bytes << '\n'
      << "irr bytes per AS           " << report.irr_bytes_per_as << '\n'
      << "irr bytes total            " << report.irr_bytes_total << '\n'
      << "protocol bytes per proto   " << report.protocol_bytes_per_protocol << '\n'
      << "grand total bytes          " << report.grand_total_bytes << '\n';
  return out.str();
}

}  // namespace iichain
