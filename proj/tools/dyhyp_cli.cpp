#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dyhyp/analysis.hpp"
#include "dyhyp/harness.hpp"
#include "dyhyp/workloads.hpp"

using namespace dyhyp;

namespace {

std::string sibling_path(const std::string& csv, const std::string& suffix) {
    const auto dot = csv.rfind('.');
    const auto slash = csv.find_last_of('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return (has_ext ? csv.substr(0, dot) : csv) + suffix;
}

unsigned parse_checks(const std::string& text) {
    if (text == "none") {
        return 0;
    }
    if (text == "default") {
        return checks::kAdjacency;
    }
    if (text == "all") {
        return checks::kAll;
    }
    if (text == "full") {
        return checks::kAll | checks::kTreeDistanceWitness;
    }
    throw CLI::ValidationError("--checks", "expected none, default, all or full");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    return out;
}

int level_from_text(const std::string& text, int dim) {
    if (text.rfind("N-", 0) == 0 || text.rfind("n-", 0) == 0) {
        return dim - std::stoi(text.substr(2));
    }
    const int k = std::stoi(text);
    return k >= 1 && k <= 3 ? dim - k : k;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for self-adjusting hypercubic networks"};
    app.require_subcommand(1);

    // run
    auto* run_cmd = app.add_subcommand("run", "serve a request sequence and write per-request metrics");
    std::string algo = "dyhypes";
    std::string workload = "uniform";
    std::string out_csv = "metrics.csv";
    std::string summary_path;
    std::string trace_in;
    std::string trace_out;
    std::string plans_out;
    std::string snapshot_out;
    std::string checks_text = "default";
    bool audit = false;
    RunConfig cfg;
    run_cmd->add_option("--algo", algo, "dyhypes or ss")->check(CLI::IsMember({"dyhypes", "ss", "dyhypes_s", "dyhypes-s"}));
    run_cmd->add_option("--dim", cfg.dim, "hypercube dimension")->check(CLI::Range(2, kMaxDimension));
    run_cmd->add_option("--workload", workload, "uniform, zipf[:s], repeat[:k], cyclic, adversarial[:c]");
    run_cmd->add_option("--m", cfg.m, "number of requests");
    run_cmd->add_option("--seed", cfg.seed, "seed");
    run_cmd->add_option("--server", cfg.server, "server node for the single-server algorithm");
    run_cmd->add_option("--out", out_csv, "metrics CSV");
    run_cmd->add_option("--summary", summary_path, "summary JSON (default: next to the CSV)");
    run_cmd->add_option("--trace", trace_in, "replay a JSONL trace instead of generating one");
    run_cmd->add_option("--emit-trace", trace_out, "write the served trace as JSONL");
    run_cmd->add_option("--checks", checks_text, "none, default, all or full");
    run_cmd->add_option("--sample-every", cfg.sample_every, "fraction sampling period, 0 disables");
    run_cmd->add_option("--word-limit", cfg.word_limit, "message size limit in O(log n) words");
    run_cmd->add_flag("--audit", audit, "keep plans and audit the link schedule");
    run_cmd->add_option("--dump-plans", plans_out, "write every plan as JSONL (implies --audit)");
    run_cmd->add_option("--snapshot", snapshot_out, "write the final node state as JSON");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "run a campaign for one claim and report pass or fail");
    std::string claim;
    std::vector<int> dims;
    std::vector<std::string> workloads;
    int seeds = -1;
    std::size_t m = 0;
    double slack = -1.0;
    double sigmas = -1.0;
    std::uint64_t base_seed = 1;
    std::string verify_out;
    verify_cmd->add_option("name", claim, "routing_thm, ss_thm, ts_lemma, ss_time_lemma, ws_property, msg_complexity")
        ->required();
    verify_cmd->add_option("--dim", dims, "dimensions (repeatable)");
    verify_cmd->add_option("--workload", workloads, "workloads (repeatable)");
    verify_cmd->add_option("--seeds", seeds, "seeds per cell");
    verify_cmd->add_option("--m", m, "requests per run");
    verify_cmd->add_option("--slack", slack, "relative slack on expectation bounds");
    verify_cmd->add_option("--sigmas", sigmas, "standard errors allowed on fraction bounds");
    verify_cmd->add_option("--base-seed", base_seed, "first seed");
    verify_cmd->add_option("--out", verify_out, "report JSON");

    // appendix
    auto* appendix_cmd = app.add_subcommand("appendix", "print the expectation recurrence");
    int appendix_dim = 8;
    std::string appendix_level = "N-2";
    int steps = 8;
    appendix_cmd->add_option("--dim", appendix_dim, "dimension");
    appendix_cmd->add_option("--level", appendix_level, "N-1, N-2 or N-3");
    appendix_cmd->add_option("--steps", steps, "last request index, at most 8");

    // report
    auto* report_cmd = app.add_subcommand("report", "render verify reports");
    std::string format = "md";
    std::vector<std::string> inputs;
    report_cmd->add_option("--format", format, "json, csv or md")->check(CLI::IsMember({"json", "csv", "md"}));
    report_cmd->add_option("inputs", inputs, "report JSON files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            cfg.algorithm = parse_algorithm(algo);
            cfg.workload = parse_workload(workload);
            cfg.checks = parse_checks(checks_text);
            cfg.keep_plans = audit || !plans_out.empty();
            cfg.snapshot = !snapshot_out.empty();
            if (!trace_in.empty()) {
                std::ifstream in(trace_in);
                if (!in) {
                    throw std::runtime_error("cannot read " + trace_in);
                }
                cfg.trace = read_trace_jsonl(in);
            }
            const RunResult result = run(cfg);
            {
                auto out = open_out(out_csv);
                write_metrics_csv(out, result.metrics);
            }
            nlohmann::json summary = {{"config", to_json(cfg)}, {"summary", to_json(result.summary)}};
            if (cfg.keep_plans) {
                nlohmann::json violations = nlohmann::json::array();
                for (const CongestViolation& v : congest_audit(result.plans, cfg.dim, cfg.word_limit)) {
                    if (violations.size() < 20) {
                        violations.push_back({{"plan", v.plan}, {"round", v.round}, {"a", v.a}, {"b", v.b}, {"what", v.what}});
                    }
                }
                summary["audit"] = {{"plans", result.plans.size()}, {"violations", violations}};
            }
            {
                auto out = open_out(summary_path.empty() ? sibling_path(out_csv, ".summary.json") : summary_path);
                out << summary.dump(2) << '\n';
            }
            if (!trace_out.empty()) {
                auto out = open_out(trace_out);
                write_trace_jsonl(out, result.trace);
            }
            if (!plans_out.empty()) {
                auto out = open_out(plans_out);
                for (const TransformPlan& p : result.plans) {
                    out << plan_to_json(p).dump() << '\n';
                }
            }
            if (!snapshot_out.empty()) {
                auto out = open_out(snapshot_out);
                out << result.snapshot.dump(2) << '\n';
            }
            const RunSummary& s = result.summary;
            std::cout << "requests " << s.m << "  hops " << s.total_hops << "  rounds " << s.total_rounds
                      << "  WS " << s.ws_bound << "  cost/(WS+m) " << s.cost_ratio << "  hops/(WS+m) " << s.hop_ratio
                      << "  messages " << s.total_messages << '\n';
            const std::uint64_t failures = s.adjacency_failures + s.bijection_failures + s.invariant_failures +
                                           s.contiguity_failures + s.phase_failures + s.witness_failures +
                                           s.congest_violations;
            if (failures > 0) {
                std::cout << "check failures: " << failures << '\n';
                for (const std::string& p : s.first_problems) {
                    std::cout << "  " << p << '\n';
                }
                return 1;
            }
        } else if (*verify_cmd) {
            CampaignSpec spec = default_campaign(claim);
            if (!dims.empty()) {
                spec.dims = dims;
            }
            if (!workloads.empty()) {
                spec.workloads = workloads;
            }
            if (seeds > 0) {
                spec.seeds = seeds;
            }
            if (m > 0) {
                spec.m = m;
            }
            if (slack >= 0.0) {
                spec.slack = slack;
            }
            if (sigmas >= 0.0) {
                spec.sigmas = sigmas;
            }
            spec.base_seed = base_seed;
            const TheoremReport report = verify_theorem(claim, spec);
            if (!verify_out.empty()) {
                auto out = open_out(verify_out);
                out << to_json(report).dump(2) << '\n';
            }
            std::cout << render_reports({report}, "md");
            return report.pass ? 0 : 1;
        } else if (*appendix_cmd) {
            const int level = level_from_text(appendix_level, appendix_dim);
            std::cout << "step,expected,complementary\n";
            for (const AppendixRow& row : appendix_recurrence(appendix_dim, level, steps)) {
                std::ostringstream line;
                line.setf(std::ios::fixed);
                line.precision(2);
                line << row.step << ',' << row.expected << ',';
                if (row.tilde) {
                    line << *row.tilde;
                }
                std::cout << line.str() << '\n';
            }
        } else if (*report_cmd) {
            std::vector<TheoremReport> reports;
            for (const std::string& path : inputs) {
                std::ifstream in(path);
                if (!in) {
                    throw std::runtime_error("cannot read " + path);
                }
                const nlohmann::json j = nlohmann::json::parse(in);
                if (j.is_array()) {
                    for (const auto& item : j) {
                        reports.push_back(report_from_json(item));
                    }
                } else {
                    reports.push_back(report_from_json(j));
                }
            }
            std::cout << render_reports(reports, format);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
