#include "gvf/splits.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

#include "gvf/rng.hpp"

namespace gvf {

Scenario scenario_from_string(const std::string& s) {
    if (s == "targeted") return Scenario::Targeted;
    if (s == "d-blind") return Scenario::DBlind;
    if (s == "m-blind") return Scenario::MBlind;
    if (s == "open") return Scenario::Open;
    if (s == "trace-data-aware") return Scenario::TraceDataAware;
    if (s == "trace-data-agnostic") return Scenario::TraceDataAgnostic;
    throw std::invalid_argument("make_splits: unknown scenario '" + s + "'");
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::Targeted: return "targeted";
        case Scenario::DBlind: return "d-blind";
        case Scenario::MBlind: return "m-blind";
        case Scenario::Open: return "open";
        case Scenario::TraceDataAware: return "trace-data-aware";
        case Scenario::TraceDataAgnostic: return "trace-data-agnostic";
    }
    throw std::logic_error("to_string(Scenario): bad value");
}

bool is_tracing(Scenario s) {
    return s == Scenario::TraceDataAware || s == Scenario::TraceDataAgnostic;
}

std::string SplitSpec::fingerprint(const std::vector<ManifestEntry>& entries) const {
    auto paths = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::string> p;
        for (std::size_t i : idx) p.push_back(entries.at(i).path);
        std::sort(p.begin(), p.end());
        return p;
    };
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        h ^= '|';
        h *= 0x100000001b3ull;
    };
    mix(to_string(scenario));
    for (const auto& p : paths(train_indices)) mix(p);
    mix("//");
    for (const auto& p : paths(test_indices)) mix(p);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

using Index = std::size_t;

std::vector<std::string> sorted_families(const std::vector<ManifestEntry>& es) {
    std::set<std::string> f;
    for (const auto& e : es) f.insert(e.family);
    return {f.begin(), f.end()};
}

std::vector<std::string> sorted_generators(const std::vector<ManifestEntry>& es) {
    std::set<std::string> g;
    for (const auto& e : es)
        if (e.generator) g.insert(*e.generator);
    return {g.begin(), g.end()};
}

// Seeded deterministic shuffle of index lists.
void shuffle_indices(std::vector<Index>& idx, std::uint64_t seed) {
    Rng rng(seed);
    rng.shuffle(idx.begin(), idx.end());
}

// 70/30 split of one stratum.
void split_stratum(std::vector<Index> idx, std::uint64_t seed,
                   std::vector<Index>& train, std::vector<Index>& test) {
    shuffle_indices(idx, seed);
    std::size_t n_train = idx.size() * 7 / 10;
    for (std::size_t i = 0; i < idx.size(); ++i)
        (i < n_train ? train : test).push_back(idx[i]);
}

// Truncates the larger of the real/fake training sides so counts are equal.
void balance_training(std::vector<Index>& train, const std::vector<ManifestEntry>& es,
                      std::uint64_t seed) {
    std::vector<Index> real, fake;
    for (Index i : train) (es[i].is_fake() ? fake : real).push_back(i);
    shuffle_indices(real, seed ^ 0x9E37ull);
    shuffle_indices(fake, seed ^ 0x79B9ull);
    std::size_t n = std::min(real.size(), fake.size());
    if (n == 0)
        throw std::invalid_argument(
            "make_splits: class balance invariant infeasible (a training class is empty)");
    real.resize(n);
    fake.resize(n);
    train.clear();
    train.insert(train.end(), real.begin(), real.end());
    train.insert(train.end(), fake.begin(), fake.end());
    std::sort(train.begin(), train.end());
}

void record_sides(SplitSpec& sp, const std::vector<ManifestEntry>& es) {
    auto side = [&](const std::vector<Index>& idx, std::vector<std::string>& fams,
                    std::vector<std::string>& gens) {
        std::set<std::string> f, g;
        for (Index i : idx) {
            f.insert(es[i].family);
            if (es[i].generator) g.insert(*es[i].generator);
        }
        fams.assign(f.begin(), f.end());
        gens.assign(g.begin(), g.end());
    };
    side(sp.train_indices, sp.train_families, sp.train_generators);
    side(sp.test_indices, sp.test_families, sp.test_generators);
}

}  // namespace

SplitSpec make_splits(Scenario scenario, const std::vector<ManifestEntry>& entries,
                      const std::string& leave_out, std::uint64_t seed) {
    SplitSpec sp;
    sp.scenario = scenario;
    sp.leave_out = leave_out;
    sp.seed = seed;

    const auto families = sorted_families(entries);
    const auto generators = sorted_generators(entries);
    if (generators.empty())
        throw std::invalid_argument("make_splits: manifest has no fake samples");

    const bool needs_leave_out = scenario == Scenario::MBlind || scenario == Scenario::Open;
    if (needs_leave_out) {
        if (std::find(generators.begin(), generators.end(), leave_out) == generators.end())
            throw std::invalid_argument("make_splits: leave-out generator '" + leave_out +
                                        "' not present in the manifest");
    }
    const bool needs_two_families = scenario == Scenario::DBlind || scenario == Scenario::Open ||
                                    scenario == Scenario::TraceDataAgnostic;
    if (needs_two_families && families.size() < 2)
        throw std::invalid_argument("make_splits: scenario '" + to_string(scenario) +
                                    "' needs two data families, manifest has " +
                                    std::to_string(families.size()));

    // Chained fakes ("A+B") only ever appear on the test side of tracing
    // splits; detection treats them like any other fake.
    auto base_generator = [](const ManifestEntry& e) {
        return e.generator->substr(0, e.generator->find('+'));
    };
    auto is_chained = [](const ManifestEntry& e) {
        return e.generator && e.generator->find('+') != std::string::npos;
    };

    switch (scenario) {
        case Scenario::Targeted: {
            // Train and test share family and generator; disjoint samples.
            std::map<std::string, std::vector<Index>> strata;
            for (Index i = 0; i < entries.size(); ++i)
                strata[entries[i].family + "/" + entries[i].label + "/" +
                       entries[i].generator.value_or("-")]
                    .push_back(i);
            std::uint64_t salt = 0;
            for (auto& [key, idx] : strata)
                split_stratum(std::move(idx), seed + ++salt, sp.train_indices,
                              sp.test_indices);
            break;
        }
        case Scenario::DBlind: {
            // Generators known, data family unknown: train on the first
            // family, test on the rest.
            const std::string& train_family = families.front();
            for (Index i = 0; i < entries.size(); ++i)
                (entries[i].family == train_family ? sp.train_indices : sp.test_indices)
                    .push_back(i);
            break;
        }
        case Scenario::MBlind: {
            // Family known, generator unknown: leave-out generator only on
            // the test side; reals split disjointly.
            std::map<std::string, std::vector<Index>> real_strata;
            for (Index i = 0; i < entries.size(); ++i) {
                const auto& e = entries[i];
                if (!e.is_fake()) {
                    real_strata[e.family].push_back(i);
                } else if (is_chained(e)) {
                    continue;  // chained ids would straddle the generator sets
                } else if (*e.generator == leave_out) {
                    sp.test_indices.push_back(i);
                } else {
                    sp.train_indices.push_back(i);
                }
            }
            std::uint64_t salt = 100;
            for (auto& [fam, idx] : real_strata)
                split_stratum(std::move(idx), seed + ++salt, sp.train_indices,
                              sp.test_indices);
            break;
        }
        case Scenario::Open: {
            // Both unknown: families differ AND test generator unseen.
            const std::string& train_family = families.front();
            for (Index i = 0; i < entries.size(); ++i) {
                const auto& e = entries[i];
                bool in_train_family = e.family == train_family;
                if (!e.is_fake()) {
                    (in_train_family ? sp.train_indices : sp.test_indices).push_back(i);
                } else if (in_train_family) {
                    if (base_generator(e) != leave_out && !is_chained(e))
                        sp.train_indices.push_back(i);
                } else if (base_generator(e) == leave_out && !is_chained(e)) {
                    sp.test_indices.push_back(i);
                }
            }
            break;
        }
        case Scenario::TraceDataAware: {
            // Fake-only, all families and generators on both sides.
            std::map<std::string, std::vector<Index>> strata;
            for (Index i = 0; i < entries.size(); ++i) {
                const auto& e = entries[i];
                if (!e.is_fake()) continue;
                if (is_chained(e)) {
                    sp.test_indices.push_back(i);  // evaluated per stage
                    continue;
                }
                strata[e.family + "/" + *e.generator].push_back(i);
            }
            std::uint64_t salt = 200;
            for (auto& [key, idx] : strata)
                split_stratum(std::move(idx), seed + ++salt, sp.train_indices,
                              sp.test_indices);
            break;
        }
        case Scenario::TraceDataAgnostic: {
            // Fake-only, query family unseen in training.
            const std::string& train_family = families.front();
            for (Index i = 0; i < entries.size(); ++i) {
                const auto& e = entries[i];
                if (!e.is_fake() || is_chained(e)) continue;
                (e.family == train_family ? sp.train_indices : sp.test_indices).push_back(i);
            }
            break;
        }
    }

    if (!is_tracing(scenario)) balance_training(sp.train_indices, entries, seed);
    if (sp.train_indices.empty() || sp.test_indices.empty())
        throw std::invalid_argument("make_splits: scenario '" + to_string(scenario) +
                                    "' produced an empty train or test side");
    std::sort(sp.test_indices.begin(), sp.test_indices.end());
    record_sides(sp, entries);
    return sp;
}

}  // namespace gvf
