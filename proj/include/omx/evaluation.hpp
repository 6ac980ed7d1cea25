#pragma once

#include "omx/pipeline.hpp"
#include "omx/simulator.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace omx {

struct CaseScore {
    int a_c = 0;
    int a_w = 0;
    int a_a = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    double penalty_sigma = 0.1;
};

// Lowercase with runs of whitespace collapsed to one space.
std::string normalize_label(std::string_view label);

// Duplicate labels (after normalization) count once.
CaseScore score_case(const std::vector<std::string>& predicted, const std::vector<std::string>& truth,
                     double penalty_sigma = 0.1);

// Throws OutOfRange for inputs outside [0, 1].
double heval(double recall_score, double consistency_score, double authenticity_score);

using Diagnoser = std::function<std::vector<std::string>(const Scenario&, std::uint64_t seed, const GeneratedData&)>;

Diagnoser oracle_diagnoser();
Diagnoser empty_diagnoser();
Diagnoser pipeline_diagnoser(std::shared_ptr<const PipelineResources> resources);

struct EvalCase {
    std::string case_id;
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<std::string> predicted;
    CaseScore score;
    std::string error; // set when the diagnoser failed
};

struct EvalSummary {
    std::vector<EvalCase> cases; // sorted by case_id
    double mean_accuracy = 0.0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_f1 = 0.0;
};

EvalSummary run_suite(const Catalog& catalog, const Diagnoser& diagnoser, const std::vector<std::uint64_t>& seeds,
                      double penalty_sigma = 0.1);

std::string to_csv(const EvalSummary& summary);

// "1..10", "3" or "1,4,9".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

} // namespace omx
