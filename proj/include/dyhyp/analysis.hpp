#ifndef DYHYP_ANALYSIS_HPP
#define DYHYP_ANALYSIS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dyhyp/harness.hpp"

namespace dyhyp {

struct AppendixRow {
    int step = 0; // request index i of t_i
    double expected = 0.0;
    std::optional<double> tilde; // expectation bound for the complementary part, level N-3 only
};

// Expected number of recent clients in the server's level subtree, iterated with the two-decimal
// rounding used for the printed values. level must be dim-1, dim-2 or dim-3; steps <= 8.
std::vector<AppendixRow> appendix_recurrence(int dim, int level, int steps);

// Rounds to two decimals.
double round2(double x);

struct CampaignSpec {
    std::vector<int> dims;
    std::vector<std::string> workloads;
    int seeds = 50;
    std::size_t m = 5000;
    std::uint64_t base_seed = 1;
    double slack = 0.10;           // relative slack on expectation bounds
    double sigmas = 2.0;           // standard errors allowed on fraction bounds
    std::size_t min_samples = 1000;
    std::size_t sample_every = 50;
    double fit_tolerance = 0.20;   // message-fit stability band around the mean constant
    std::size_t min_class = 30;    // requests needed before an alpha class enters the fit
};

// Campaign grid used by the acceptance checks for the named claim.
CampaignSpec default_campaign(const std::string& name);

struct TheoremReport {
    std::string name;
    std::string claim;
    CampaignSpec spec;
    std::string statistic_name;
    double statistic = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double bound = 0.0;
    double threshold = 0.0; // bound after slack
    bool upper = true;      // statistic must stay below the threshold
    std::size_t samples = 0;
    bool pass = false;
    nlohmann::json details;
};

// name: routing_thm, ss_thm, ts_lemma, ss_time_lemma, ws_property, msg_complexity
TheoremReport verify_theorem(const std::string& name, const CampaignSpec& spec);

nlohmann::json to_json(const CampaignSpec& spec);
nlohmann::json to_json(const TheoremReport& report);
TheoremReport report_from_json(const nlohmann::json& j);

// format: json, csv or md
std::string render_reports(const std::vector<TheoremReport>& reports, const std::string& format);

struct MeanStat {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;
};

MeanStat mean_stat(const std::vector<double>& values);

} // namespace dyhyp

#endif // DYHYP_ANALYSIS_HPP
