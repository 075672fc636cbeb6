#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lcep/bench.hpp"
#include "lcep/normal.hpp"
#include "lcep/rng.hpp"

namespace lcep::bench {

namespace {

using nlohmann::json;

double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_se(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

void SweepConfig::validate() const {
    if (n_train < 1 || n_pred < 1 || n_repeats < 1)
        throw std::invalid_argument("SweepConfig: counts must be positive");
    if (pred_ranges.empty() || u10_grid.empty())
        throw std::invalid_argument("SweepConfig: empty sweep axes");
    if (ess_samples < 1000)
        throw std::invalid_argument("SweepConfig: ess_samples must be >= 1000");
    for (double u10 : u10_grid) utility(u10).threshold();
    ep.validate();
}

SweepConfig SweepConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }

    SweepConfig cfg;
    try {
        cfg.n_train = j.value("n_train", cfg.n_train);
        cfg.train_lo = j.value("train_lo", cfg.train_lo);
        cfg.train_hi = j.value("train_hi", cfg.train_hi);
        cfg.n_pred = j.value("n_pred", cfg.n_pred);
        if (j.contains("pred_ranges")) {
            cfg.pred_ranges.clear();
            for (const auto& r : j.at("pred_ranges"))
                cfg.pred_ranges.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
        }
        cfg.u00 = j.value("u00", cfg.u00);
        cfg.u01 = j.value("u01", cfg.u01);
        cfg.u11 = j.value("u11", cfg.u11);
        if (j.contains("u10_grid")) cfg.u10_grid = j.at("u10_grid").get<std::vector<double>>();
        cfg.n_repeats = j.value("n_repeats", cfg.n_repeats);
        cfg.base_seed = j.value("base_seed", cfg.base_seed);
        cfg.log_sigma = j.value("log_sigma", cfg.log_sigma);
        cfg.log_ell = j.value("log_ell", cfg.log_ell);
        cfg.ess_samples = j.value("ess_samples", cfg.ess_samples);
        cfg.ess_burnin = j.value("ess_burnin", cfg.ess_burnin);
        cfg.ep.damping = j.value("damping", cfg.ep.damping);
        cfg.ep.max_sweeps = j.value("max_sweeps", cfg.ep.max_sweeps);
        cfg.ep.tol = j.value("tol", cfg.ep.tol);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: bad field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string SweepConfig::to_json() const {
    json j;
    j["n_train"] = n_train;
    j["train_lo"] = train_lo;
    j["train_hi"] = train_hi;
    j["n_pred"] = n_pred;
    json ranges = json::array();
    for (const auto& [lo, hi] : pred_ranges) ranges.push_back(json::array({lo, hi}));
    j["pred_ranges"] = ranges;
    j["u00"] = u00;
    j["u01"] = u01;
    j["u11"] = u11;
    j["u10_grid"] = u10_grid;
    j["n_repeats"] = n_repeats;
    j["base_seed"] = base_seed;
    j["log_sigma"] = log_sigma;
    j["log_ell"] = log_ell;
    j["ess_samples"] = ess_samples;
    j["ess_burnin"] = ess_burnin;
    j["damping"] = ep.damping;
    j["max_sweeps"] = ep.max_sweeps;
    j["tol"] = ep.tol;
    return j.dump(2);
}

namespace {

struct TaskOutput {
    // Indexed by u10 cell; [0] holds EP, [1] LossEP.
    std::vector<std::array<SweepRow, 2>> rows;
    bool ok = false;
    std::string error;
};

// One (range, repeat) task: simulate, oracle once, then all utility cells.
TaskOutput run_task(const SweepConfig& cfg, int range_idx, int repeat) {
    TaskOutput out;
    const auto [pred_lo, pred_hi] = cfg.pred_ranges[static_cast<std::size_t>(range_idx)];
    const std::uint64_t r = static_cast<std::uint64_t>(repeat);
    const std::uint64_t g = static_cast<std::uint64_t>(range_idx);

    const GPCDataset data = simulate_dataset(derive_seed(cfg.base_seed, "data", {r}), cfg);
    const RBFKernelParams kernel = cfg.kernel();
    const Eigen::MatrixXd pred_points = simulate_pred_points(
        derive_seed(cfg.base_seed, "pred", {g, r}), cfg.n_pred, pred_lo, pred_hi);
    const PredictiveSet pred = make_predictive_set(data.X, kernel, pred_points);

    // Shared ground-truth estimates for every cell and both methods.
    const Eigen::MatrixXd K = kernel_matrix(data.X, kernel);
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(K).matrixL();
    const Eigen::VectorXi& labels = data.y;
    const auto loglik = [&labels](const Eigen::VectorXd& f) {
        double acc = 0.0;
        for (int i = 0; i < f.size(); ++i) acc += normal_logcdf(labels(i) * f(i));
        return acc;
    };
    ESSConfig ess;
    ess.n_samples = cfg.ess_samples;
    ess.n_burnin = cfg.ess_burnin;
    ess.seed = derive_seed(cfg.base_seed, "oracle", {g, r});
    const Eigen::MatrixXd samples = ess_sample(chol, loglik, ess);
    const std::vector<EstimateSE> p_est = mc_predictive_probs(samples, pred);
    std::vector<double> p_hat(p_est.size()), p_se(p_est.size());
    for (std::size_t c = 0; c < p_est.size(); ++c) {
        p_hat[c] = p_est[c].value;
        p_se[c] = p_est[c].se;
    }

    for (std::size_t u_idx = 0; u_idx < cfg.u10_grid.size(); ++u_idx) {
        const double u10 = cfg.u10_grid[u_idx];
        const BinaryUtility4 u = cfg.utility(u10);
        std::array<SweepRow, 2> pair;
        for (int m = 0; m < 2; ++m) {
            const bool loss = m == 1;
            SweepRow row;
            row.method = loss ? "LossEP" : "EP";
            row.u10 = u10;
            row.range_index = range_idx;
            row.pred_lo = pred_lo;
            row.pred_hi = pred_hi;
            row.repeat_index = repeat;
            row.run_seed = derive_seed(cfg.base_seed, loss ? "lossep" : "ep",
                                       {static_cast<std::uint64_t>(u_idx), g, r});
            row.metric = std::numeric_limits<double>::quiet_NaN();
            row.mc_stderr = 0.0;
            row.sweeps = 0;
            row.skips = 0;
            row.converged = false;
            row.failed = false;
            try {
                EPConfig run_cfg = cfg.ep;
                run_cfg.seed = row.run_seed;
                const GPCRunResult res = loss ? loss_ep_gpc(data, kernel, u, pred, run_cfg)
                                              : ep_gpc(data, kernel, run_cfg);
                const std::vector<int> actions = q_actions_for(res.q, pred, u);
                const UtilityEvalReport report = evaluate(actions, p_hat, u, &p_se);
                row.metric = report.metric;
                row.mc_stderr = report.mc_stderr;
                row.sweeps = res.diagnostics.sweeps;
                row.skips = res.diagnostics.total_skips;
                row.converged = res.diagnostics.converged;
            } catch (const std::exception&) {
                row.failed = true;
            }
            pair[static_cast<std::size_t>(m)] = row;
        }
        out.rows.push_back(std::move(pair));
    }
    out.ok = true;
    return out;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config, int jobs) {
    config.validate();
    if (jobs < 1) jobs = 1;

    const int n_ranges = static_cast<int>(config.pred_ranges.size());
    const int n_tasks = n_ranges * config.n_repeats;
    std::vector<TaskOutput> outputs(static_cast<std::size_t>(n_tasks));
    std::atomic<int> next{0};

    const auto worker = [&]() {
        for (;;) {
            const int t = next.fetch_add(1);
            if (t >= n_tasks) return;
            const int range_idx = t / config.n_repeats;
            const int repeat = t % config.n_repeats;
            try {
                outputs[static_cast<std::size_t>(t)] = run_task(config, range_idx, repeat);
            } catch (const std::exception& e) {
                outputs[static_cast<std::size_t>(t)].ok = false;
                outputs[static_cast<std::size_t>(t)].error = e.what();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    SweepResult result;
    result.config = config;

    const int n_cells = static_cast<int>(config.u10_grid.size()) * n_ranges;
    for (std::size_t u_idx = 0; u_idx < config.u10_grid.size(); ++u_idx) {
        for (int g = 0; g < n_ranges; ++g) {
            std::vector<double> ep_metrics, loss_metrics, diffs;
            CellSummary cell;
            cell.u10 = config.u10_grid[u_idx];
            cell.range_index = g;
            cell.pred_lo = config.pred_ranges[static_cast<std::size_t>(g)].first;
            cell.pred_hi = config.pred_ranges[static_cast<std::size_t>(g)].second;

            for (int rep = 0; rep < config.n_repeats; ++rep) {
                const int t = g * config.n_repeats + rep;
                const TaskOutput& task = outputs[static_cast<std::size_t>(t)];
                if (!task.ok) {
                    ++result.failures;
                    continue;
                }
                const auto& pair = task.rows[u_idx];
                result.rows.push_back(pair[0]);
                result.rows.push_back(pair[1]);
                if (pair[0].failed || pair[1].failed) {
                    ++result.failures;
                    continue;
                }
                ep_metrics.push_back(pair[0].metric);
                loss_metrics.push_back(pair[1].metric);
                diffs.push_back(pair[0].metric - pair[1].metric);
            }

            cell.mean_ep = ep_metrics.empty() ? std::numeric_limits<double>::quiet_NaN()
                                              : sample_mean(ep_metrics);
            cell.se_ep = sample_se(ep_metrics);
            cell.mean_lossep = loss_metrics.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                    : sample_mean(loss_metrics);
            cell.se_lossep = sample_se(loss_metrics);
            cell.p_defined = false;
            cell.wilcoxon_p = 1.0;
            cell.n_nonzero = 0;
            cell.n_zero = 0;
            cell.significant_bonferroni = false;
            try {
                const WilcoxonResult w = wilcoxon_signed_rank(diffs);
                cell.p_defined = true;
                cell.wilcoxon_p = w.p;
                cell.n_nonzero = w.n_nonzero;
                cell.n_zero = w.n_zero;
                cell.significant_bonferroni = w.p < 0.05 / static_cast<double>(n_cells);
            } catch (const TooFewSamples&) {
                // Too few nonzero pairs to test; reported as undefined.
            }
            result.cells.push_back(cell);
        }
    }
    return result;
}

void write_sweep_outputs(const SweepResult& result, const std::string& out_dir) {
    std::ostringstream rows;
    rows << "method,u10,pred_lo,pred_hi,repeat,seed,metric,mc_stderr,sweeps,skips,converged,"
            "failed\n";
    for (const SweepRow& r : result.rows) {
        rows << csv_escape(r.method) << "," << fmt(r.u10) << "," << fmt(r.pred_lo) << ","
             << fmt(r.pred_hi) << "," << r.repeat_index << "," << r.run_seed << ","
             << fmt(r.metric) << "," << fmt(r.mc_stderr) << "," << r.sweeps << "," << r.skips
             << "," << (r.converged ? 1 : 0) << "," << (r.failed ? 1 : 0) << "\n";
    }
    write_text_file(out_dir + "/sweep_rows.csv", rows.str());

    std::ostringstream cells;
    cells << "u10,pred_lo,pred_hi,mean_ep,se_ep,mean_lossep,se_lossep,wilcoxon_p,n_nonzero,"
             "n_zero,significant_bonferroni\n";
    for (const CellSummary& c : result.cells) {
        cells << fmt(c.u10) << "," << fmt(c.pred_lo) << "," << fmt(c.pred_hi) << ","
              << fmt(c.mean_ep) << "," << fmt(c.se_ep) << "," << fmt(c.mean_lossep) << ","
              << fmt(c.se_lossep) << "," << (c.p_defined ? fmt(c.wilcoxon_p) : std::string("NA"))
              << "," << c.n_nonzero << "," << c.n_zero << ","
              << (c.significant_bonferroni ? 1 : 0) << "\n";
    }
    write_text_file(out_dir + "/sweep_cells.csv", cells.str());

    json manifest;
    manifest["version"] = kVersion;
    manifest["config"] = json::parse(result.config.to_json());
    manifest["failures"] = result.failures;
    manifest["outputs"] = json::array({"sweep_rows.csv", "sweep_cells.csv"});
    write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

}  // namespace lcep::bench
