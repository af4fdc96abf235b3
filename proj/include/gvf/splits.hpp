#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvf/manifest.hpp"

namespace gvf {

// Detection scenarios ordered by how much the defender knows, plus the two
// tracing protocols. "d-blind" hides the data family, "m-blind" the
// generator, "open" both.
enum class Scenario {
    Targeted,
    DBlind,
    MBlind,
    Open,
    TraceDataAware,
    TraceDataAgnostic,
};

Scenario scenario_from_string(const std::string& s);
std::string to_string(Scenario s);
bool is_tracing(Scenario s);

// Index lists into the manifest the split was derived from.
struct SplitSpec {
    Scenario scenario = Scenario::Targeted;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::vector<std::string> train_families, test_families;
    std::vector<std::string> train_generators, test_generators;
    std::string leave_out;
    std::uint64_t seed = 0;

    // Stable hash of the resolved train/test paths; embedded in reports.
    std::string fingerprint(const std::vector<ManifestEntry>& entries) const;
};

// Pure function of (scenario, entries, leave_out, seed). Detection splits
// have exactly balanced real/fake training counts; tracing splits are
// fake-only. Throws std::invalid_argument naming the violated invariant
// when the manifest cannot support the scenario.
SplitSpec make_splits(Scenario scenario, const std::vector<ManifestEntry>& entries,
                      const std::string& leave_out, std::uint64_t seed);

}  // namespace gvf
