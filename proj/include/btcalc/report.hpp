#pragma once

#include "btcalc/convergence.hpp"
#include "btcalc/decision.hpp"
#include "btcalc/dsl.hpp"
#include "btcalc/regions.hpp"

#include <json.hpp>

#include <string>

namespace btcalc {

using json = nlohmann::json;

inline constexpr const char* kSchema = "btcalc/1";

/// FNV-1a over the input text; reports embed it for provenance.
std::string content_hash(std::string_view text);

json state_json(const WorldModel& m, StateIndex s);
json region_json(const Region& r, std::uint64_t max_states = 64);

json regions_report(const Tree& t, const RegionMap& map, const PartitionReport& partition,
                    const std::string& input_hash);
json certificate_report(const Tree& t, const ConvergenceProblem& problem,
                        const ConvergenceCertificate& cert, const std::string& input_hash);
json trace_report(const Tree& t, const Trace& trace, const std::string& input_hash);
json ds_report(const Tree& t, const DecisionStructure& ds, bool with_complexity,
               const std::string& input_hash);
json montecarlo_report(const ProbabilisticChain& chain, const ChainStats& stats, RegressMode mode);
json cbf_trace_json(const ContinuousTrace& trace, const std::string& input_hash);

} // namespace btcalc
