#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace affine
{
struct SuiteOptions
{
    std::string models_dir;
    std::uint64_t seed = 7;
    unsigned threads = 1;
    //! Base Monte Carlo size; the full battery uses 1e5.
    std::size_t paths = 100000;
    //! Criteria to run (1-9); empty means all.
    std::vector<int> only;
};

struct CriterionResult
{
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;  //!< one-line summary with tolerances
    double seconds = 0;
    nlohmann::json data;  //!< numeric results (deterministic given the seed)
};

std::vector<CriterionResult> run_suite(SuiteOptions const& opts);

//! JSON of the results without timings.
nlohmann::json suite_data(std::vector<CriterionResult> const& results);
//! FNV-1a of suite_data(results).dump().
std::uint64_t suite_hash(std::vector<CriterionResult> const& results);
std::string hex64(std::uint64_t h);

}  // namespace affine
