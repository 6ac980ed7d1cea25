#include "omx/evaluation.hpp"

#include "omx/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

namespace omx {

std::string normalize_label(std::string_view label) {
    std::string out;
    bool space = false;
    for (unsigned char c : label) {
        if (std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

CaseScore score_case(const std::vector<std::string>& predicted, const std::vector<std::string>& truth,
                     double penalty_sigma) {
    std::set<std::string> p;
    std::set<std::string> t;
    for (const auto& l : predicted) p.insert(normalize_label(l));
    for (const auto& l : truth) t.insert(normalize_label(l));

    CaseScore s;
    s.penalty_sigma = penalty_sigma;
    for (const auto& l : p) (t.count(l) ? s.a_c : s.a_w) += 1;
    s.a_a = static_cast<int>(t.size());

    const double ac = s.a_c;
    const double penalty = penalty_sigma * s.a_w;
    s.accuracy = (s.a_a > 0 && ac >= penalty) ? (ac - penalty) / s.a_a : 0.0;
    s.precision = p.empty() ? 0.0 : ac / static_cast<double>(p.size());
    s.recall = s.a_a == 0 ? 0.0 : ac / s.a_a;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

double heval(double recall_score, double consistency_score, double authenticity_score) {
    for (double v : {recall_score, consistency_score, authenticity_score}) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::OutOfRange, "heval inputs must lie in [0, 1]");
    }
    return 0.3 * recall_score + 0.3 * consistency_score + 0.4 * authenticity_score;
}

Diagnoser oracle_diagnoser() {
    return [](const Scenario&, std::uint64_t, const GeneratedData& data) { return data.truth.causes; };
}

Diagnoser empty_diagnoser() {
    return [](const Scenario&, std::uint64_t, const GeneratedData&) { return std::vector<std::string>{}; };
}

Diagnoser pipeline_diagnoser(std::shared_ptr<const PipelineResources> resources) {
    return [resources](const Scenario&, std::uint64_t, const GeneratedData& data) {
        std::vector<std::string> labels;
        const auto outcome = run_pipeline(*resources, data, 60);
        if (!outcome) return labels;
        for (const auto& c : outcome->report.root_causes) labels.push_back(c.label);
        return labels;
    };
}

EvalSummary run_suite(const Catalog& catalog, const Diagnoser& diagnoser, const std::vector<std::uint64_t>& seeds,
                      double penalty_sigma) {
    EvalSummary out;
    for (const auto& sc : catalog.scenarios) {
        for (auto seed : seeds) {
            EvalCase c;
            c.scenario = sc.name;
            c.seed = seed;
            char id[32];
            std::snprintf(id, sizeof id, "-s%03llu", static_cast<unsigned long long>(seed));
            c.case_id = sc.name + id;
            const auto data = generate(sc, seed, catalog.defaults.duration_seconds, catalog.defaults.cadence_seconds,
                                       catalog.defaults.start);
            try {
                c.predicted = diagnoser(sc, seed, data);
            } catch (const std::exception& e) {
                c.error = e.what();
                c.predicted.clear();
            }
            c.score = score_case(c.predicted, data.truth.causes, penalty_sigma);
            out.cases.push_back(std::move(c));
        }
    }
    std::sort(out.cases.begin(), out.cases.end(), [](const EvalCase& a, const EvalCase& b) { return a.case_id < b.case_id; });
    if (!out.cases.empty()) {
        const double n = static_cast<double>(out.cases.size());
        for (const auto& c : out.cases) {
            out.mean_accuracy += c.score.accuracy;
            out.mean_precision += c.score.precision;
            out.mean_recall += c.score.recall;
            out.mean_f1 += c.score.f1;
        }
        out.mean_accuracy /= n;
        out.mean_precision /= n;
        out.mean_recall /= n;
        out.mean_f1 /= n;
    }
    return out;
}

std::string to_csv(const EvalSummary& summary) {
    std::ostringstream o;
    o << "case_id,scenario,seed,a_c,a_w,a_a,precision,recall,f1,accuracy\n";
    char buf[256];
    for (const auto& c : summary.cases) {
        std::snprintf(buf, sizeof buf, "%s,%s,%llu,%d,%d,%d,%.6f,%.6f,%.6f,%.6f\n", c.case_id.c_str(),
                      c.scenario.c_str(), static_cast<unsigned long long>(c.seed), c.score.a_c, c.score.a_w,
                      c.score.a_a, c.score.precision, c.score.recall, c.score.f1, c.score.accuracy);
        o << buf;
    }
    return o.str();
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    std::vector<std::uint64_t> out;
    auto bad = [&]() { throw Error(ErrorCode::InvalidArgument, "bad seed list '" + std::string(text) + "'"); };
    auto to_u64 = [&](std::string_view s) -> std::uint64_t {
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) bad();
        return std::stoull(std::string(s));
    };
    if (auto dots = text.find(".."); dots != std::string_view::npos) {
        const auto lo = to_u64(text.substr(0, dots));
        const auto hi = to_u64(text.substr(dots + 2));
        if (hi < lo) bad();
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
        return out;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto part = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        out.push_back(to_u64(part));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace omx
