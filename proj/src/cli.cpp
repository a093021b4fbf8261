#include "spstop/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "spstop/agreement.hpp"
#include "spstop/bounds.hpp"
#include "spstop/error.hpp"
#include "spstop/matrix_io.hpp"
#include "spstop/split_oracle.hpp"
#include "spstop/stopping.hpp"

namespace spstop::cli {

using nlohmann::json;
using nlohmann::ordered_json;

double report_number(double v) {
    if (!std::isfinite(v)) {
        return v;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", kReportDigits, v);
    return std::strtod(buf, nullptr);
}

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

// Cap on violations listed individually in a verify report.
constexpr std::size_t kMaxListedViolations = 100;

ordered_json num(double v) { return report_number(v); }

ordered_json opt_num(const std::optional<double>& v) { return v ? num(*v) : ordered_json(nullptr); }

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ordered_json table_json(const ContingencyTable& t) {
    return {{"a", t.a()}, {"b", t.b()}, {"c", t.c()}, {"d", t.d()}, {"n", t.n()}};
}

ordered_json stats_json(const ContingencyTable& t) {
    ordered_json r;
    r["table"] = table_json(t);
    r["p_o"] = num(observed_agreement(t));
    r["p_e"] = num(expected_agreement(t));
    if (has_degenerate_marginals(t)) {
        r["degenerate_marginals"] = true;
        r["kappa"] = nullptr;
        r["f_measure"] = (2 * t.a() + t.b() + t.c()) > 0 ? num(f_measure(t)) : ordered_json(nullptr);
        r["variance"] = nullptr;
        return r;
    }
    const AgreementStats s = agreement_stats(t);
    const VarianceWorksheet w = kappa_variance(t);
    r["degenerate_marginals"] = false;
    r["kappa"] = num(s.kappa);
    r["f_measure"] = num(s.f_measure);
    r["variance"] = num(w.variance);
    r["pbar_plus"] = num(w.pbar_plus);
    r["pbar_minus"] = num(w.pbar_minus);
    return r;
}

ContingencyTable parse_table(const std::string& text) {
    std::vector<std::int64_t> counts;
    std::stringstream ss(text);
    for (std::string field; std::getline(ss, field, ',');) {
        char* end = nullptr;
        const long long v = std::strtoll(field.c_str(), &end, 10);
        if (field.empty() || *end != '\0') {
            throw Error(ErrorCode::ParseError, "table count '" + field + "' is not an integer");
        }
        counts.push_back(v);
    }
    if (counts.size() != 4) {
        throw Error(ErrorCode::ParseError, "--table expects four comma-separated counts a,b,c,d");
    }
    return {counts[0], counts[1], counts[2], counts[3]};
}

std::string decision_name(Decision::Kind k) {
    switch (k) {
        case Decision::Kind::Continue: return "continue";
        case Decision::Kind::Stop: return "stop";
        case Decision::Kind::GrowStopSet: return "grow_stop_set";
    }
    return "unknown";
}

ordered_json decision_json(const Decision& d) {
    ordered_json r{{"kind", decision_name(d.kind)}};
    if (d.kind == Decision::Kind::Stop) {
        r["iteration"] = d.iteration;
    }
    if (d.kind == Decision::Kind::GrowStopSet) {
        r["recommended_n"] = d.recommended_n;
    }
    return r;
}

ordered_json stop_report_json(const StopReport& rep) {
    ordered_json history = ordered_json::array();
    for (const auto& k : rep.kappa_history) {
        history.push_back(opt_num(k));
    }
    ordered_json r;
    r["stopped_at_iteration"] = rep.stopped ? ordered_json(rep.stopped_at_iteration) : ordered_json(nullptr);
    r["kappa_history"] = std::move(history);
    r["final_variance"] = opt_num(rep.final_variance);
    r["threshold_T"] = rep.threshold;
    r["window_k"] = rep.window;
    r["delta_f_bound_worst_case"] = num(rep.delta_f_bound_worst_case);
    if (rep.delta_f_bound_precision_p) {
        r["delta_f_bound_precision_p"] = num(*rep.delta_f_bound_precision_p);
    }
    return r;
}

ordered_json stopping_config_json(const StoppingConfig& c) {
    return {{"threshold", c.threshold},
            {"window", c.window},
            {"comparison", c.comparison == Comparison::Strict ? "strict" : "non_strict"},
            {"variance_cap", c.variance_cap ? ordered_json(*c.variance_cap) : ordered_json(nullptr)},
            {"min_stop_set", c.min_stop_set},
            {"assumed_precision", c.assumed_precision ? ordered_json(*c.assumed_precision) : ordered_json(nullptr)}};
}

StoppingConfig stopping_config_from_json(const json& doc) {
    StoppingConfig c;
    c.threshold = doc.value("threshold", c.threshold);
    c.window = doc.value("window", c.window);
    const std::string comparison = doc.value("comparison", std::string("strict"));
    if (comparison == "strict") {
        c.comparison = Comparison::Strict;
    } else if (comparison == "non_strict") {
        c.comparison = Comparison::NonStrict;
    } else {
        throw Error(ErrorCode::InvalidConfig, "comparison must be 'strict' or 'non_strict'");
    }
    if (doc.contains("variance_cap") && !doc["variance_cap"].is_null()) {
        c.variance_cap = doc["variance_cap"].get<double>();
    }
    c.min_stop_set = doc.value("min_stop_set", c.min_stop_set);
    if (doc.contains("assumed_precision") && !doc["assumed_precision"].is_null()) {
        c.assumed_precision = doc["assumed_precision"].get<double>();
    }
    return c;
}

class Command {
public:
    Command(std::string name, std::vector<std::string> argv) {
        report_["tool"] = "spstop";
        report_["version"] = kToolVersion;
        report_["timestamp"] = utc_timestamp();
        report_["command"] = std::move(name);
        report_["argv"] = std::move(argv);
    }
    ordered_json& config() { return report_["config"]; }
    ordered_json& results() { return report_["results"]; }
    ordered_json take() { return std::move(report_); }

private:
    ordered_json report_;
};

int run_stats(Command& cmd, const std::optional<std::string>& table, const std::optional<std::string>& matrix) {
    if (table.has_value() == matrix.has_value()) {
        throw CLI::ValidationError("stats", "give exactly one of --table or --matrix");
    }
    if (table) {
        cmd.config() = {{"table", *table}};
        cmd.results() = stats_json(parse_table(*table));
        return kExitOk;
    }
    cmd.config() = {{"matrix", *matrix}};
    const PredictionMatrix m = parse_prediction_matrix(std::filesystem::path(*matrix));
    if (m.iterations.size() < 2) {
        throw Error(ErrorCode::ParseError, "matrix needs at least two iteration columns");
    }
    ordered_json pairs = ordered_json::array();
    for (std::size_t i = 1; i < m.iterations.size(); ++i) {
        ordered_json p{{"prev", m.iteration_names[i - 1]}, {"curr", m.iteration_names[i]}};
        p.update(stats_json(table_from_predictions(m.iterations[i - 1], m.iterations[i])));
        pairs.push_back(std::move(p));
    }
    cmd.results() = {{"pairs", std::move(pairs)}};
    return kExitOk;
}

ordered_json bound_json(double bound) { return {{"bound", num(bound)}, {"vacuous", bound > 1.0}}; }

int run_bound(Command& cmd, double threshold, const std::optional<double>& precision) {
    cmd.config() = {{"threshold", threshold},
                    {"precision", precision ? ordered_json(*precision) : ordered_json(nullptr)}};
    ordered_json r;
    r["threshold"] = threshold;
    r["worst_case"] = bound_json(worst_case_bound(threshold));
    r["perfect_precision"] = bound_json(perfect_precision_bound(threshold));
    if (precision) {
        r["precision"] = *precision;
        r["precision_p"] = bound_json(precision_bound(threshold, *precision));
        r["scaling_factor"] = num(scaling_factor(*precision));
    }
    cmd.results() = std::move(r);
    return kExitOk;
}

int run_verify(Command& cmd, std::int64_t n_max, unsigned threads, std::uint64_t random_splits, std::int64_t max_cell,
               std::uint64_t seed, std::ostream& err) {
    if (n_max < 1) {
        throw CLI::ValidationError("--n-max", "must be >= 1");
    }
    cmd.config() = {{"n_max", n_max}, {"threads", threads}, {"random_splits", random_splits},
                    {"max_cell", max_cell}, {"seed", seed}};
    VerificationReport rep = verify_theorems(n_max, threads);
    std::uint64_t expected = 0;
    for (std::int64_t n = 1; n <= n_max; ++n) {
        expected += split_count(n);
    }
    ordered_json r;
    r["exhaustive_splits"] = rep.checked;
    r["expected_splits"] = expected;
    if (random_splits > 0) {
        VerificationReport random = verify_random_splits(random_splits, max_cell, seed, threads);
        r["random_splits"] = random.checked;
        rep.merge_from(std::move(random));
    }
    r["checked"] = rep.checked;
    r["theorem_cases"] = rep.theorem_cases;
    r["lemma_cases"] = rep.lemma_cases;
    r["helper_lemma_cases"] = rep.helper_lemma_cases;
    r["skipped_undefined_kappa"] = rep.skipped_undefined_kappa;
    r["skipped_undefined_f"] = rep.skipped_undefined_f;
    r["skipped_nonpositive_kappa"] = rep.skipped_nonpositive_kappa;
    r["violations"] = rep.violations.size();
    ordered_json listed = ordered_json::array();
    for (std::size_t i = 0; i < rep.violations.size() && i < kMaxListedViolations; ++i) {
        const auto& v = rep.violations[i];
        listed.push_back({{"split", v.split.cells()}, {"check", to_string(v.check)}, {"detail", v.detail}});
    }
    r["violation_list"] = std::move(listed);
    cmd.results() = std::move(r);
    err << "violations: " << rep.violations.size() << '\n';
    return rep.ok() ? kExitOk : kExitViolation;
}

int run_stop(Command& cmd, const std::string& matrix, const StoppingConfig& config) {
    config.validate();
    cmd.config() = {{"matrix", matrix}, {"stopping", stopping_config_json(config)}};
    const PredictionMatrix m = parse_prediction_matrix(std::filesystem::path(matrix));
    if (m.iterations.size() < 2) {
        throw Error(ErrorCode::ParseError, "matrix needs at least two iteration columns");
    }
    StoppingEngine engine(config);
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < m.iterations.size(); ++i) {
        const auto est = engine.ingest(m.iterations[i]);
        ordered_json row{{"iteration", i + 1}, {"name", m.iteration_names[i]}};
        if (est) {
            row["table"] = table_json(est->table);
            row["kappa"] = opt_num(est->value);
            row["variance"] = opt_num(est->variance);
        }
        row["consecutive_above"] = engine.state().consecutive_above;
        row["decision"] = decision_json(engine.decision());
        rows.push_back(std::move(row));
        if (engine.decision().kind == Decision::Kind::Stop) {
            break;
        }
    }
    ordered_json r;
    r["iterations"] = std::move(rows);
    r["stop_report"] = stop_report_json(engine.report());
    if (m.truth && engine.decision().kind == Decision::Kind::Stop) {
        const std::size_t curr = engine.decision().iteration - 1;
        const SplitTables split = [&] {
            std::array<std::int64_t, 8> cells{};
            for (std::size_t row = 0; row < m.truth->size(); ++row) {
                const bool t = (*m.truth)[row] == Label::Positive;
                const bool p = m.iterations[curr - 1][row] == Label::Positive;
                const bool q = m.iterations[curr][row] == Label::Positive;
                ++cells[(t ? 0 : 4) + (p ? 0 : 2) + (q ? 0 : 1)];
            }
            return SplitTables::from_cells(cells);
        }();
        try {
            r["stop_set_delta_f"] = num(truth_f_measures(split).delta_f);
        } catch (const Error&) {
            r["stop_set_delta_f"] = nullptr;
        }
    }
    cmd.results() = std::move(r);
    return kExitOk;
}

std::string labels_string(std::span<const Label> labels) {
    std::string s;
    s.reserve(labels.size());
    for (Label l : labels) {
        s.push_back(l == Label::Positive ? '+' : '-');
    }
    return s;
}

int run_simulate(Command& cmd, const std::string& config_path, const std::optional<std::uint64_t>& seed,
                 bool full_trace) {
    std::ifstream in(config_path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + config_path);
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, config_path + ": " + e.what());
    }
    SimConfig cfg = sim_config_from_json(doc);
    if (seed) {
        cfg.seed = *seed;
    }
    cmd.config() = sim_config_to_json(cfg);
    const SimulationTrace trace = run_active_learning(cfg);

    ordered_json records = ordered_json::array();
    for (const auto& rec : trace.records) {
        ordered_json row{{"iteration", rec.iteration}, {"stop_set_size", rec.stop_set_size}};
        if (rec.estimate) {
            row["kappa"] = opt_num(rec.estimate->value);
            row["variance"] = opt_num(rec.estimate->variance);
        }
        row["decision"] = decision_json(rec.decision);
        row["f_vs_truth"] = opt_num(rec.f_vs_truth);
        records.push_back(std::move(row));
    }
    ordered_json r;
    r["stopped"] = trace.report.stopped;
    r["iterations_run"] = trace.records.size();
    r["final_stop_set_size"] = trace.truth.size();
    r["final_delta_f"] = opt_num(trace.final_delta_f);
    r["final_conjunction_precision"] = opt_num(trace.final_conjunction_precision);
    if (trace.final_delta_f) {
        r["bound_holds"] = std::abs(*trace.final_delta_f) <= trace.report.delta_f_bound_worst_case;
    }
    r["stop_report"] = stop_report_json(trace.report);
    r["records"] = std::move(records);
    if (full_trace) {
        r["truth"] = labels_string(trace.truth);
        ordered_json preds = ordered_json::array();
        for (const auto& p : trace.predictions) {
            preds.push_back(labels_string(p.labels()));
        }
        r["predictions"] = std::move(preds);
    }
    cmd.results() = std::move(r);
    return kExitOk;
}

}  // namespace

SimConfig sim_config_from_json(const json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorCode::InvalidConfig, "simulation config must be an object");
    }
    try {
        SimConfig cfg;
        const std::string mode = doc.value("mode", std::string("converging"));
        if (mode == "converging") {
            ConvergingSequenceSpec spec;
            const json sub = doc.value("converging", json::object());
            spec.base_accuracy = sub.value("base_accuracy", spec.base_accuracy);
            spec.flip_rate_initial = sub.value("flip_rate_initial", spec.flip_rate_initial);
            spec.flip_decay = sub.value("flip_decay", spec.flip_decay);
            spec.positive_rate = sub.value("positive_rate", spec.positive_rate);
            cfg.source = spec;
        } else if (mode == "population") {
            const auto joint = doc.at("population").at("joint").get<std::vector<double>>();
            if (joint.size() != 8) {
                throw Error(ErrorCode::InvalidConfig, "population.joint needs 8 probabilities");
            }
            std::array<double, 8> cells{};
            std::copy(joint.begin(), joint.end(), cells.begin());
            cfg.source = SplitPopulationModel(cells);
        } else if (mode == "learner") {
            LearnerSpec spec;
            const json sub = doc.value("learner", json::object());
            spec.feature_dim = sub.value("feature_dim", spec.feature_dim);
            spec.pool_size = sub.value("pool_size", spec.pool_size);
            spec.batch_size = sub.value("batch_size", spec.batch_size);
            const std::string selection = sub.value("selection", std::string("uncertainty"));
            if (selection == "uncertainty") {
                spec.selection = Selection::UncertaintyNearBoundary;
            } else if (selection == "random") {
                spec.selection = Selection::Random;
            } else {
                throw Error(ErrorCode::InvalidConfig, "learner.selection must be 'uncertainty' or 'random'");
            }
            cfg.source = spec;
        } else {
            throw Error(ErrorCode::InvalidConfig, "unknown mode '" + mode + "'");
        }
        cfg.stop_set_size = doc.value("stop_set_size", cfg.stop_set_size);
        cfg.iterations = doc.value("iterations", cfg.iterations);
        cfg.seed = doc.value("seed", cfg.seed);
        cfg.regrow_stop_set = doc.value("regrow_stop_set", cfg.regrow_stop_set);
        if (doc.contains("stopping")) {
            cfg.stopping = stopping_config_from_json(doc["stopping"]);
        }
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
}

ordered_json sim_config_to_json(const SimConfig& cfg) {
    ordered_json doc;
    if (const auto* spec = std::get_if<ConvergingSequenceSpec>(&cfg.source)) {
        doc["mode"] = "converging";
        doc["converging"] = {{"base_accuracy", spec->base_accuracy},
                             {"flip_rate_initial", spec->flip_rate_initial},
                             {"flip_decay", spec->flip_decay},
                             {"positive_rate", spec->positive_rate}};
    } else if (const auto* pop = std::get_if<SplitPopulationModel>(&cfg.source)) {
        doc["mode"] = "population";
        doc["population"] = {{"joint", pop->joint()}};
    } else {
        const auto& spec = std::get<LearnerSpec>(cfg.source);
        doc["mode"] = "learner";
        doc["learner"] = {{"feature_dim", spec.feature_dim},
                          {"pool_size", spec.pool_size},
                          {"batch_size", spec.batch_size},
                          {"selection", spec.selection == Selection::Random ? "random" : "uncertainty"}};
    }
    doc["stop_set_size"] = cfg.stop_set_size;
    doc["iterations"] = cfg.iterations;
    doc["seed"] = cfg.seed;
    doc["regrow_stop_set"] = cfg.regrow_stop_set;
    doc["stopping"] = stopping_config_json(cfg.stopping);
    return doc;
}

RunResult run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stopping active learning by stabilizing predictions"};
    app.name("spstop");
    app.require_subcommand(1);
    std::optional<std::string> output_path;
    app.add_option("-o,--output", output_path, "Write the report to a file instead of stdout");

    std::optional<std::string> table, matrix;
    auto* stats = app.add_subcommand("stats", "Agreement statistics for a table or consecutive matrix columns");
    stats->add_option("--table", table, "Counts a,b,c,d");
    stats->add_option("--matrix", matrix, "Prediction matrix file")->check(CLI::ExistingFile);

    double threshold = 0.99;
    std::optional<double> precision;
    auto* bound = app.add_subcommand("bound", "F-measure change bounds for a Kappa threshold");
    bound->add_option("--threshold", threshold, "Kappa threshold T in (0, 1]")->required();
    bound->add_option("--precision", precision, "Positive-conjunction precision p in [0, 1]");

    std::int64_t n_max = 12;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::uint64_t random_splits = 0;
    std::int64_t max_cell = 10000;
    std::uint64_t seed = 1;
    auto* verify = app.add_subcommand("verify", "Exhaustively check the Kappa/F-measure theorems");
    verify->add_option("--n-max", n_max, "Largest stop-set size to enumerate")->required();
    verify->add_option("--threads", threads, "Worker threads");
    verify->add_option("--random-splits", random_splits, "Additional random splits to check");
    verify->add_option("--max-cell", max_cell, "Largest cell count for random splits");
    verify->add_option("--seed", seed, "Seed for random splits");

    std::string stop_matrix;
    StoppingConfig stop_config;
    bool non_strict = false;
    std::optional<double> variance_cap, stop_precision;
    auto* stop = app.add_subcommand("stop", "Run the stopping rule over prediction matrix columns");
    stop->add_option("--matrix", stop_matrix, "Prediction matrix file")->required()->check(CLI::ExistingFile);
    stop->add_option("--threshold", stop_config.threshold, "Kappa threshold T in (0, 1)");
    stop->add_option("--window", stop_config.window, "Consecutive estimates required");
    stop->add_flag("--non-strict", non_strict, "Stop on K >= T instead of K > T");
    stop->add_option("--variance-cap", variance_cap, "Largest acceptable Kappa variance");
    stop->add_option("--min-stop-set", stop_config.min_stop_set, "Floor for stop-set growth advice");
    stop->add_option("--precision", stop_precision, "Assumed positive-conjunction precision");

    std::string sim_config;
    std::optional<std::uint64_t> sim_seed;
    bool full_trace = false;
    auto* simulate = app.add_subcommand("simulate", "Simulate an active learning run");
    simulate->add_option("--config", sim_config, "Simulation config (JSON)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--seed", sim_seed, "Override the config seed");
    simulate->add_flag("--full-trace", full_trace, "Include per-iteration predictions");

    RunResult result;
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        auto* sub = app.get_subcommands().front();
        Command cmd(sub->get_name(), args);
        if (sub == stats) {
            result.exit_code = run_stats(cmd, table, matrix);
        } else if (sub == bound) {
            result.exit_code = run_bound(cmd, threshold, precision);
        } else if (sub == verify) {
            result.exit_code = run_verify(cmd, n_max, threads, random_splits, max_cell, seed, err);
        } else if (sub == stop) {
            stop_config.comparison = non_strict ? Comparison::NonStrict : Comparison::Strict;
            stop_config.variance_cap = variance_cap;
            stop_config.assumed_precision = stop_precision;
            result.exit_code = run_stop(cmd, stop_matrix, stop_config);
        } else {
            result.exit_code = run_simulate(cmd, sim_config, sim_seed, full_trace);
        }
        result.report = cmd.take();
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return result;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return result;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n' << app.help();
        result.exit_code = kExitUsage;
        return result;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        result.exit_code = kExitUsage;
        return result;
    }

    const std::string text = result.report.dump(2) + "\n";
    if (output_path) {
        std::ofstream file(*output_path);
        if (!file) {
            err << "error: cannot write " << *output_path << '\n';
            result.exit_code = kExitUsage;
            return result;
        }
        file << text;
    } else {
        out << text;
    }
    return result;
}

}  // namespace spstop::cli
