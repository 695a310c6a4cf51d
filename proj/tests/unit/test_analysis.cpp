#include <doctest.h>

#include "dyhyp/analysis.hpp"

using namespace dyhyp;

namespace {

// Re-derives the printed sequences with plain arithmetic, step by step.
struct Hand {
    std::vector<double> near;  // t4..t8 at level N-2
    std::vector<double> far;   // t5..t8 at level N-3
    std::vector<double> tilde; // t5..t8
};

Hand by_hand() {
    Hand h;
    double s = 2.0 + (1.0 + 1.0 - 0.5);
    h.near.push_back(s);
    for (int i = 0; i < 4; ++i) {
        s = round2(2.0 + (s - 2.0) + 1.0 - (s - 2.0) / 2.0);
        h.near.push_back(s);
    }
    double prev = 0.0;
    double tl = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double base = h.near[i + 1];
        const double gap = i == 0 ? 0.5 : prev - base;
        prev = round2(base + gap + (base - 2.0) * 0.5 - gap * 0.25);
        h.far.push_back(prev);
        tl = i == 0 ? round2(gap * 0.25 - gap * 0.25 / 8.0) : round2(tl + gap * 0.25 - tl / 8.0);
        h.tilde.push_back(tl);
    }
    return h;
}

} // namespace

TEST_CASE("appendix recurrence reproduces the printed values") {
    const std::vector<double> near = {3.5, 3.75, 3.88, 3.94, 3.97};
    const auto rows2 = appendix_recurrence(8, 6, 8);
    REQUIRE(rows2.size() == near.size());
    for (std::size_t i = 0; i < near.size(); ++i) {
        CHECK(rows2[i].step == static_cast<int>(i) + 4);
        CHECK(std::abs(rows2[i].expected - near[i]) <= 0.01);
    }

    const std::vector<double> far = {5.0, 5.66, 6.20, 6.62};
    const std::vector<double> tilde = {0.11, 0.38, 0.76, 1.22};
    const auto rows3 = appendix_recurrence(8, 5, 8);
    REQUIRE(rows3.size() == far.size());
    for (std::size_t i = 0; i < far.size(); ++i) {
        CHECK(rows3[i].step == static_cast<int>(i) + 5);
        CHECK(std::abs(rows3[i].expected - far[i]) <= 0.01);
        REQUIRE(rows3[i].tilde.has_value());
        CHECK(std::abs(*rows3[i].tilde - tilde[i]) <= 0.01);
    }

    const Hand h = by_hand();
    for (std::size_t i = 0; i < near.size(); ++i) {
        CHECK(rows2[i].expected == h.near[i]);
    }
    for (std::size_t i = 0; i < far.size(); ++i) {
        CHECK(rows3[i].expected == h.far[i]);
        CHECK(*rows3[i].tilde == h.tilde[i]);
    }

    for (const AppendixRow& r : appendix_recurrence(5, 4, 6)) {
        CHECK(r.expected == 2.0);
    }
    CHECK(appendix_recurrence(5, 3, 4).front().expected == 3.5);
    CHECK(appendix_recurrence(5, 3, 3).empty());
    CHECK_THROWS(appendix_recurrence(8, 4, 8));
    CHECK_THROWS(appendix_recurrence(8, 6, 9));
}

TEST_CASE("mean and standard error") {
    const MeanStat s = mean_stat({1.0, 2.0, 3.0, 4.0});
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.se == doctest::Approx(std::sqrt(1.6666666666666667 / 4.0)));
    CHECK(mean_stat({}).count == 0);
}

TEST_CASE("verify runs small campaigns and embeds the configuration") {
    CampaignSpec spec = default_campaign("routing_thm");
    spec.dims = {4};
    spec.workloads = {"uniform"};
    spec.seeds = 3;
    spec.m = 300;
    const TheoremReport r = verify_theorem("routing_thm", spec);
    CHECK(r.pass);
    CHECK(r.statistic <= r.threshold);
    CHECK(r.details["seeds"].size() == 3);
    const nlohmann::json j = to_json(r);
    CHECK(j["campaign"]["m"] == 300);
    const TheoremReport back = report_from_json(j);
    CHECK(back.statistic == r.statistic);
    CHECK(back.pass == r.pass);

    spec = default_campaign("ss_time_lemma");
    spec.dims = {5};
    spec.seeds = 2;
    spec.m = 600;
    spec.min_samples = 10;
    const TheoremReport f = verify_theorem("ss_time_lemma", spec);
    CHECK(f.samples > 10);
    CHECK_FALSE(f.upper);
    CHECK(f.details["hypothesis_constants"].size() == 5);

    spec = default_campaign("msg_complexity");
    spec.seeds = 1;
    spec.m = 300;
    const TheoremReport msg = verify_theorem("msg_complexity", spec);
    CHECK(msg.details["dims"].size() == 3);

    CHECK_THROWS(verify_theorem("splay_thm", spec));
    CHECK_THROWS(default_campaign("splay_thm"));
}

TEST_CASE("report rendering") {
    TheoremReport r;
    r.name = "ss_thm";
    r.spec = default_campaign("ss_thm");
    r.statistic = 0.5;
    r.threshold = 1.1;
    r.pass = true;
    const std::string md = render_reports({r}, "md");
    CHECK(md.find("| ss_thm |") != std::string::npos);
    CHECK(md.find("PASS") != std::string::npos);
    const std::string csv = render_reports({r}, "csv");
    CHECK(csv.rfind("name,statistic", 0) == 0);
    CHECK(nlohmann::json::parse(render_reports({r}, "json")).size() == 1);
    CHECK_THROWS(render_reports({r}, "xml"));
}
