// SPDX-License-Identifier: Apache-2.0

#include "noma/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "noma/model.hpp"

namespace noma {

const char* to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::noma_sca: return "noma-sca";
        case Scheme::noma_sdr: return "noma-sdr";
        case Scheme::noma_maxmin: return "noma-maxmin";
        case Scheme::noma_robust: return "noma-robust";
        case Scheme::noma_nonrobust: return "noma-nonrobust";
        case Scheme::oma: return "oma";
        case Scheme::zf: return "zf";
        case Scheme::oma_robust: return "oma-robust";
        case Scheme::oma_nonrobust: return "oma-nonrobust";
    }
    return "unknown";
}

const char* to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::target_rate: return "target_rate";
        case SweepVariable::num_users: return "num_users";
        case SweepVariable::num_antennas: return "num_antennas";
        case SweepVariable::p_max: return "p_max";
        case SweepVariable::error_variance: return "error_variance";
    }
    return "unknown";
}

Scheme scheme_from_string(const std::string& s) {
    for (Scheme scheme :
         {Scheme::noma_sca, Scheme::noma_sdr, Scheme::noma_maxmin, Scheme::noma_robust,
          Scheme::noma_nonrobust, Scheme::oma, Scheme::zf, Scheme::oma_robust,
          Scheme::oma_nonrobust})
        if (s == to_string(scheme)) return scheme;
    throw std::invalid_argument("unknown scheme: " + s);
}

SweepVariable sweep_from_string(const std::string& s) {
    for (SweepVariable v :
         {SweepVariable::target_rate, SweepVariable::num_users, SweepVariable::num_antennas,
          SweepVariable::p_max, SweepVariable::error_variance})
        if (s == to_string(v)) return v;
    throw std::invalid_argument("unknown sweep variable: " + s);
}

namespace {

bool is_robust_scheme(Scheme s) {
    return s == Scheme::noma_robust || s == Scheme::noma_nonrobust ||
           s == Scheme::oma_robust || s == Scheme::oma_nonrobust;
}

bool is_maxmin_mode(const ExperimentSpec& spec) {
    if (spec.scheme == Scheme::noma_maxmin) return true;
    if (spec.scheme == Scheme::oma || spec.scheme == Scheme::zf)
        return spec.sweep == SweepVariable::p_max ||
               (spec.system.power_budget.has_value() && spec.uniform_rate <= 0.0);
    return false;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string join_values(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += "|";
        out += format_double(values[i]);
    }
    return out;
}

}  // namespace

void ExperimentSpec::validate() const {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (sweep_values.empty()) throw std::invalid_argument("sweep values must not be empty");
    for (std::size_t i = 1; i < sweep_values.size(); ++i)
        if (!(sweep_values[i] > sweep_values[i - 1]))
            throw std::invalid_argument("sweep values must be strictly increasing");
    if (eval_samples < 0) throw std::invalid_argument("eval_samples must be >= 0");

    const bool maxmin = is_maxmin_mode(*this);
    if (sweep == SweepVariable::p_max &&
        !(scheme == Scheme::noma_maxmin || scheme == Scheme::oma || scheme == Scheme::zf))
        throw std::invalid_argument("p_max sweep requires a max-min scheme");
    if (sweep == SweepVariable::error_variance && !is_robust_scheme(scheme))
        throw std::invalid_argument("error_variance sweep requires a robust scheme");
    if (sweep == SweepVariable::target_rate && maxmin)
        throw std::invalid_argument("target_rate sweep is a power-minimization recipe");
    if (maxmin && sweep != SweepVariable::p_max && !system.power_budget)
        throw std::invalid_argument("max-min recipes need a power budget");
    if (!maxmin && sweep != SweepVariable::target_rate && !(uniform_rate > 0.0))
        throw std::invalid_argument("power-minimization recipes need a positive rate");
    if (scheme == Scheme::zf) {
        const int users_max =
            sweep == SweepVariable::num_users ? static_cast<int>(sweep_values.back())
                                              : system.num_users;
        const int antennas_min =
            sweep == SweepVariable::num_antennas ? static_cast<int>(sweep_values.front())
                                                 : system.num_antennas;
        if (antennas_min < users_max)
            throw std::invalid_argument("zero-forcing recipes need M >= N over the sweep");
    }
    if (is_robust_scheme(scheme)) {
        if (!(error_variance >= 0.0)) throw std::invalid_argument("negative error variance");
        if (!(outage > 0.0 && outage < 0.5))
            throw std::invalid_argument("outage must lie in (0, 0.5)");
    }
}

std::string ExperimentSpec::to_document() const {
    std::ostringstream os;
    os << "scheme = " << to_string(scheme) << "\n";
    os << "sweep.variable = " << to_string(sweep) << "\n";
    os << "sweep.values = ";
    for (std::size_t i = 0; i < sweep_values.size(); ++i)
        os << (i ? ", " : "") << format_double(sweep_values[i]);
    os << "\n";
    os << "trials = " << trials << "\n";
    os << "system.num_antennas = " << system.num_antennas << "\n";
    os << "system.num_users = " << system.num_users << "\n";
    os << "system.noise_variance = " << format_double(system.noise_variance) << "\n";
    os << "system.rate = " << format_double(uniform_rate) << "\n";
    if (system.power_budget)
        os << "system.power_budget = " << format_double(*system.power_budget) << "\n";
    os << "system.rng_seed = " << system.rng_seed << "\n";
    os << "channel.scenario = "
       << (scenario == ChannelScenario::pathloss ? "pathloss" : "correlated") << "\n";
    os << "channel.cell_radius_m = " << format_double(channel.cell_radius_m) << "\n";
    os << "channel.min_distance_m = " << format_double(channel.min_distance_m) << "\n";
    os << "channel.pathloss_exponent = " << format_double(channel.pathloss_exponent) << "\n";
    os << "channel.direction_noise = " << format_double(direction_noise) << "\n";
    os << "channel.norm_spread = " << format_double(norm_spread) << "\n";
    os << "robust.error_variance = " << format_double(error_variance) << "\n";
    os << "robust.outage = " << format_double(outage) << "\n";
    os << "robust.eval_samples = " << eval_samples << "\n";
    if (!output_path.empty()) os << "output = " << output_path << "\n";
    return os.str();
}

ExperimentSpec ExperimentSpec::from_document(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    const auto trim = [](std::string s) {
        const auto begin = s.find_first_not_of(" \t\r");
        const auto end = s.find_last_not_of(" \t\r");
        return begin == std::string::npos ? std::string() : s.substr(begin, end - begin + 1);
    };
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }

    ExperimentSpec spec;
    const auto get = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    if (auto v = get("scheme")) spec.scheme = scheme_from_string(*v);
    if (auto v = get("sweep.variable")) spec.sweep = sweep_from_string(*v);
    if (auto v = get("sweep.values")) {
        spec.sweep_values.clear();
        std::istringstream vs(*v);
        std::string token;
        while (std::getline(vs, token, ',')) spec.sweep_values.push_back(std::stod(token));
    }
    if (auto v = get("trials")) spec.trials = std::stoi(*v);
    if (auto v = get("system.num_antennas")) spec.system.num_antennas = std::stoi(*v);
    if (auto v = get("system.num_users")) spec.system.num_users = std::stoi(*v);
    if (auto v = get("system.noise_variance")) spec.system.noise_variance = std::stod(*v);
    if (auto v = get("system.rate")) spec.uniform_rate = std::stod(*v);
    if (auto v = get("system.power_budget")) spec.system.power_budget = std::stod(*v);
    if (auto v = get("system.rng_seed")) spec.system.rng_seed = std::stoull(*v);
    if (auto v = get("channel.scenario"))
        spec.scenario = *v == "correlated" ? ChannelScenario::correlated
                                           : ChannelScenario::pathloss;
    if (auto v = get("channel.cell_radius_m")) spec.channel.cell_radius_m = std::stod(*v);
    if (auto v = get("channel.min_distance_m")) spec.channel.min_distance_m = std::stod(*v);
    if (auto v = get("channel.pathloss_exponent"))
        spec.channel.pathloss_exponent = std::stod(*v);
    if (auto v = get("channel.direction_noise")) spec.direction_noise = std::stod(*v);
    if (auto v = get("channel.norm_spread")) spec.norm_spread = std::stod(*v);
    if (auto v = get("robust.error_variance")) spec.error_variance = std::stod(*v);
    if (auto v = get("robust.outage")) spec.outage = std::stod(*v);
    if (auto v = get("robust.eval_samples")) spec.eval_samples = std::stoi(*v);
    if (auto v = get("output")) spec.output_path = *v;
    return spec;
}

ChannelSet correlated_channel_fixture(const SystemConfig& config, double norm_spread,
                                      double direction_noise, std::uint64_t trial_index) {
    if (!(norm_spread >= 1.0)) throw std::invalid_argument("norm spread must be >= 1");
    if (!(direction_noise >= 0.0)) throw std::invalid_argument("negative direction noise");
    const int n = config.num_users;
    const int m = config.num_antennas;
    TrialRng rng(config.rng_seed, trial_index, rng_stream::fading + 4096);
    Eigen::VectorXcd common = rng.cnormal_vector(m);
    common /= common.norm();
    ChannelSet ch;
    ch.channels.reserve(n);
    ch.distances_m.assign(n, 1.0);
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXcd perturb = rng.cnormal_vector(m);
        Eigen::VectorXcd dir = common + direction_noise * perturb / perturb.norm();
        dir /= dir.norm();
        const double norm =
            n > 1 ? std::pow(norm_spread, static_cast<double>(k) / (n - 1)) : 1.0;
        ch.channels.push_back(norm * dir);
    }
    std::stable_sort(ch.channels.begin(), ch.channels.end(),
                     [](const auto& a, const auto& b) { return a.norm() < b.norm(); });
    return ch;
}

namespace {

// Achieved rates under covariance-level signal power (nominal model).
std::vector<double> covariance_rates(const BeamformerSet& beams,
                                     const std::vector<Eigen::MatrixXcd>& covs,
                                     double noise_variance) {
    const int n = beams.num_users();
    std::vector<double> rates(n);
    for (int k = 0; k < n; ++k) {
        double worst = std::numeric_limits<double>::infinity();
        for (int l = k; l < n; ++l) {
            const double signal = std::max(
                0.0, (beams.beamformers[k].adjoint() * covs[l] * beams.beamformers[k])(0)
                         .real());
            double interference = 0.0;
            for (int m = k + 1; m < n; ++m)
                interference += std::max(0.0, (beams.beamformers[m].adjoint() * covs[l] *
                                               beams.beamformers[m])(0)
                                                  .real());
            worst = std::min(worst, signal / (interference + noise_variance));
        }
        rates[k] = std::log2(1.0 + worst);
    }
    return rates;
}

struct PointSetup {
    SystemConfig config;
    ChannelModelParams params;
    double error_variance = 0.0;
    bool maxmin = false;
};

PointSetup setup_point(const ExperimentSpec& spec, double value) {
    PointSetup point;
    point.config = spec.system;
    point.params = spec.channel;
    point.error_variance = spec.error_variance;
    point.maxmin = is_maxmin_mode(spec);

    double rate = spec.uniform_rate;
    switch (spec.sweep) {
        case SweepVariable::target_rate: rate = value; break;
        case SweepVariable::num_users:
            point.config.num_users = static_cast<int>(std::lround(value));
            break;
        case SweepVariable::num_antennas:
            point.config.num_antennas = static_cast<int>(std::lround(value));
            break;
        case SweepVariable::p_max: point.config.power_budget = value; break;
        case SweepVariable::error_variance: point.error_variance = value; break;
    }
    if (point.maxmin)
        point.config.target_rates.clear();
    else
        point.config.target_rates.assign(point.config.num_users, rate);
    return point;
}

ResultRow run_single_trial(const ExperimentSpec& spec, double value, int trial) {
    ResultRow row;
    row.scheme = to_string(spec.scheme);
    row.sweep_variable = to_string(spec.sweep);
    row.sweep_value = value;
    row.trial = trial;
    row.kind = "trial";
    row.status = "ok";

    try {
        const PointSetup point = setup_point(spec, value);
        const SystemConfig& cfg = point.config;
        const ChannelSet channels =
            spec.scenario == ChannelScenario::pathloss
                ? generate_channels(cfg, point.params, trial)
                : correlated_channel_fixture(cfg, spec.norm_spread, spec.direction_noise,
                                             trial);
        const int n = cfg.num_users;

        const auto fill_from_beams = [&](const BeamformerSet& beams) {
            const RateReport report = compute_rates(channels, beams, cfg);
            row.total_power_w = report.total_power;
            row.per_user_power_w = report.per_user_power;
            row.per_user_rate = report.rates;
            row.min_rate = *std::min_element(report.rates.begin(), report.rates.end());
        };

        switch (spec.scheme) {
            case Scheme::noma_sca: {
                const ScaResult r = solve_powermin_sca(channels, cfg);
                if (r.status != ScaStatus::ok) {
                    row.status = "sca_failure";
                    break;
                }
                fill_from_beams(r.beams);
                break;
            }
            case Scheme::noma_sdr: {
                const SdrSolution r = solve_powermin_sdr(channels, cfg);
                if (r.recovery == SdrSolution::Recovery::none) {
                    row.status = "sdr_failure";
                    break;
                }
                fill_from_beams(r.beams);
                break;
            }
            case Scheme::noma_maxmin: {
                const MaxMinResult r = solve_maxmin(channels, cfg);
                if (r.degenerate) {
                    row.status = "degenerate";
                    row.total_power_w = 0.0;
                    row.min_rate = 0.0;
                    row.per_user_power_w.assign(n, 0.0);
                    row.per_user_rate.assign(n, 0.0);
                    break;
                }
                row.total_power_w = r.total_power;
                row.per_user_rate = r.achieved_rates;
                row.per_user_power_w.resize(n);
                for (int k = 0; k < n; ++k)
                    row.per_user_power_w[k] = r.beams.user_power(k);
                row.min_rate =
                    *std::min_element(r.achieved_rates.begin(), r.achieved_rates.end());
                break;
            }
            case Scheme::noma_robust:
            case Scheme::noma_nonrobust: {
                const UncertaintyModel model =
                    make_uncertainty_model(channels, point.error_variance, spec.outage);
                const RobustDesignResult r = spec.scheme == Scheme::noma_robust
                                                 ? solve_robust_powermin(model, cfg)
                                                 : solve_nonrobust_powermin(model, cfg);
                if (r.recovery == RobustDesignResult::Recovery::none) {
                    row.status = conic::to_string(r.solver_status);
                    break;
                }
                row.total_power_w = r.recovered_power;
                row.per_user_power_w.resize(n);
                for (int k = 0; k < n; ++k)
                    row.per_user_power_w[k] = r.beams.user_power(k);
                row.per_user_rate =
                    covariance_rates(r.beams, model.nominal_covariances, cfg.noise_variance);
                row.min_rate =
                    *std::min_element(row.per_user_rate.begin(), row.per_user_rate.end());
                if (spec.eval_samples > 0) {
                    const OutageReport outage_report = evaluate_outage(
                        r.beams, model, min_sinr_targets(cfg), cfg.noise_variance,
                        spec.eval_samples, OutageModel::hermitian,
                        cfg.rng_seed + static_cast<std::uint64_t>(trial), false);
                    row.satisfaction = outage_report.satisfaction;
                }
                break;
            }
            case Scheme::oma: {
                if (point.maxmin) {
                    const OmaMaxMinResult r = solve_maxmin_oma(channels, cfg);
                    row.total_power_w = r.design.average_power;
                    row.min_rate = r.balanced_rate;
                    row.per_user_rate.assign(n, r.balanced_rate);
                    row.per_user_power_w = r.design.slice_powers;
                } else {
                    const OmaDesign r = solve_powermin_oma(channels, cfg);
                    row.total_power_w = r.average_power;
                    row.per_user_power_w = r.slice_powers;
                    row.per_user_rate = cfg.target_rates;
                    row.min_rate =
                        *std::min_element(cfg.target_rates.begin(), cfg.target_rates.end());
                }
                break;
            }
            case Scheme::zf: {
                if (point.maxmin) {
                    const ZfMaxMinResult r = solve_maxmin_zf(channels, cfg);
                    row.total_power_w = r.beams.total_power();
                    row.min_rate = r.balanced_rate;
                    row.per_user_rate = direct_rates(channels, r.beams, cfg.noise_variance);
                    row.per_user_power_w.resize(n);
                    for (int k = 0; k < n; ++k)
                        row.per_user_power_w[k] = r.beams.user_power(k);
                } else {
                    const BeamformerSet r = solve_powermin_zf(channels, cfg);
                    row.total_power_w = r.total_power();
                    row.per_user_rate = direct_rates(channels, r, cfg.noise_variance);
                    row.per_user_power_w.resize(n);
                    for (int k = 0; k < n; ++k) row.per_user_power_w[k] = r.user_power(k);
                    row.min_rate =
                        *std::min_element(row.per_user_rate.begin(), row.per_user_rate.end());
                }
                break;
            }
            case Scheme::oma_robust:
            case Scheme::oma_nonrobust: {
                const UncertaintyModel model =
                    make_uncertainty_model(channels, point.error_variance, spec.outage);
                const OmaRobustDesign r =
                    spec.scheme == Scheme::oma_robust
                        ? solve_robust_powermin_oma(model, cfg)
                        : solve_nonrobust_powermin_oma(model, cfg);
                if (!r.feasible) {
                    row.status = "infeasible";
                    break;
                }
                row.total_power_w = r.average_power;
                row.per_user_power_w.resize(n);
                row.per_user_rate.assign(n, 0.0);
                for (int k = 0; k < n; ++k) {
                    row.per_user_power_w[k] = r.per_user[k].recovered_power;
                    const double snr =
                        std::max(0.0, (r.per_user[k].beams.beamformers[0].adjoint() *
                                       model.nominal_covariances[k] *
                                       r.per_user[k].beams.beamformers[0])(0)
                                          .real()) /
                        cfg.noise_variance;
                    row.per_user_rate[k] = std::log2(1.0 + snr) / n;
                }
                row.min_rate =
                    *std::min_element(row.per_user_rate.begin(), row.per_user_rate.end());
                if (spec.eval_samples > 0) {
                    const OutageReport outage_report = evaluate_outage_oma(
                        r, model, cfg, spec.eval_samples, OutageModel::hermitian,
                        cfg.rng_seed + static_cast<std::uint64_t>(trial), false);
                    row.satisfaction = outage_report.satisfaction;
                }
                break;
            }
        }
    } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
    }
    return row;
}

bool counts_in_means(const ResultRow& row) {
    return row.status == "ok" || row.status == "degenerate";
}

}  // namespace

std::vector<ResultRow> aggregate_rows(const ResultTable& table) {
    // group by (sweep value) preserving first-appearance order
    std::vector<double> order;
    for (const auto& row : table.rows)
        if (row.kind == "trial" &&
            std::find(order.begin(), order.end(), row.sweep_value) == order.end())
            order.push_back(row.sweep_value);

    std::vector<ResultRow> aggregates;
    for (double value : order) {
        std::vector<const ResultRow*> ok_rows;
        int failed = 0;
        for (const auto& row : table.rows) {
            if (row.kind != "trial" || row.sweep_value != value) continue;
            if (counts_in_means(row))
                ok_rows.push_back(&row);
            else
                ++failed;
        }
        if (ok_rows.empty()) continue;

        const std::size_t users = ok_rows.front()->per_user_power_w.size();
        ResultRow mean, sem;
        mean.scheme = sem.scheme = ok_rows.front()->scheme;
        mean.sweep_variable = sem.sweep_variable = ok_rows.front()->sweep_variable;
        mean.sweep_value = sem.sweep_value = value;
        mean.trial = sem.trial = -1;
        mean.kind = "mean";
        sem.kind = "stderr";
        mean.status = sem.status = "ok";
        mean.n_failed = sem.n_failed = failed;
        mean.per_user_power_w.assign(users, 0.0);
        mean.per_user_rate.assign(users, 0.0);
        sem.per_user_power_w.assign(users, 0.0);
        sem.per_user_rate.assign(users, 0.0);
        const bool with_satisfaction = !ok_rows.front()->satisfaction.empty();
        if (with_satisfaction) {
            mean.satisfaction.assign(users, 0.0);
            sem.satisfaction.assign(users, 0.0);
        }

        const double count = static_cast<double>(ok_rows.size());
        mean.total_power_w = 0.0;
        mean.min_rate = 0.0;
        for (const auto* row : ok_rows) {
            mean.total_power_w += row->total_power_w / count;
            mean.min_rate += row->min_rate / count;
            for (std::size_t k = 0; k < users; ++k) {
                mean.per_user_power_w[k] += row->per_user_power_w[k] / count;
                mean.per_user_rate[k] += row->per_user_rate[k] / count;
                if (with_satisfaction) mean.satisfaction[k] += row->satisfaction[k] / count;
            }
        }
        const auto sem_of = [&](const std::function<double(const ResultRow&)>& field,
                                double mu) {
            if (ok_rows.size() < 2) return 0.0;
            double ss = 0.0;
            for (const auto* row : ok_rows) ss += (field(*row) - mu) * (field(*row) - mu);
            return std::sqrt(ss / (count * (count - 1.0)));
        };
        sem.total_power_w =
            sem_of([](const ResultRow& r) { return r.total_power_w; }, mean.total_power_w);
        sem.min_rate = sem_of([](const ResultRow& r) { return r.min_rate; }, mean.min_rate);
        for (std::size_t k = 0; k < users; ++k) {
            sem.per_user_power_w[k] = sem_of(
                [k](const ResultRow& r) { return r.per_user_power_w[k]; },
                mean.per_user_power_w[k]);
            sem.per_user_rate[k] =
                sem_of([k](const ResultRow& r) { return r.per_user_rate[k]; },
                       mean.per_user_rate[k]);
            if (with_satisfaction)
                sem.satisfaction[k] = sem_of(
                    [k](const ResultRow& r) { return r.satisfaction[k]; },
                    mean.satisfaction[k]);
        }
        aggregates.push_back(std::move(mean));
        aggregates.push_back(std::move(sem));
    }
    return aggregates;
}

ResultTable run_experiment(const ExperimentSpec& spec, bool parallel) {
    spec.validate();
    const int points = static_cast<int>(spec.sweep_values.size());
    const int total = points * spec.trials;

    ResultTable table;
    std::vector<ResultRow> slots(total);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int task = 0; task < total; ++task) {
            const int point = task / spec.trials;
            const int trial = task % spec.trials;
            slots[task] = run_single_trial(spec, spec.sweep_values[point], trial);
        }
    } else {
        for (int task = 0; task < total; ++task) {
            const int point = task / spec.trials;
            const int trial = task % spec.trials;
            slots[task] = run_single_trial(spec, spec.sweep_values[point], trial);
        }
    }

    table.rows.reserve(total + 2 * points);
    for (int point = 0; point < points; ++point)
        for (int trial = 0; trial < spec.trials; ++trial)
            table.rows.push_back(std::move(slots[point * spec.trials + trial]));
    const auto aggregates = aggregate_rows(table);
    table.rows.insert(table.rows.end(), aggregates.begin(), aggregates.end());
    return table;
}

std::string to_csv(const ResultTable& table) {
    std::ostringstream os;
    os << "# nomabeam-results v" << table.schema_version << "\n";
    os << "scheme,sweep_variable,sweep_value,trial,kind,status,total_power_w,min_rate,"
          "per_user_power_w,per_user_rate,satisfaction,n_failed\n";
    for (const auto& row : table.rows) {
        os << row.scheme << "," << row.sweep_variable << "," << format_double(row.sweep_value)
           << "," << row.trial << "," << row.kind << "," << row.status << ","
           << format_double(row.total_power_w) << "," << format_double(row.min_rate) << ","
           << join_values(row.per_user_power_w) << "," << join_values(row.per_user_rate)
           << "," << join_values(row.satisfaction) << "," << row.n_failed << "\n";
    }
    return os.str();
}

std::string to_json_string(const ResultTable& table) {
    nlohmann::json j;
    j["schema_version"] = table.schema_version;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json r;
        r["scheme"] = row.scheme;
        r["sweep_variable"] = row.sweep_variable;
        r["sweep_value"] = row.sweep_value;
        r["trial"] = row.trial;
        r["kind"] = row.kind;
        r["status"] = row.status;
        r["total_power_w"] = format_double(row.total_power_w);
        r["min_rate"] = format_double(row.min_rate);
        r["per_user_power_w"] = row.per_user_power_w;
        r["per_user_rate"] = row.per_user_rate;
        r["satisfaction"] = row.satisfaction;
        r["n_failed"] = row.n_failed;
        j["rows"].push_back(std::move(r));
    }
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Consistency checks
// ---------------------------------------------------------------------------

std::vector<CheckOutcome> run_table_checks(std::uint64_t seed, int agreement_instances,
                                           int roundtrip_instances, bool parallel) {
    std::vector<CheckOutcome> outcomes;

    // Two-method agreement on unit-scale Rayleigh channels.
    {
        SystemConfig cfg;
        cfg.num_antennas = 3;
        cfg.num_users = 3;
        cfg.noise_variance = 0.01;
        cfg.target_rates = {2.0, 2.0, 2.0};
        cfg.rng_seed = seed;
        ChannelModelParams params;
        params.pathloss_exponent = 0.0;
        std::vector<int> agree(agreement_instances, 0);
#pragma omp parallel for schedule(dynamic) if (parallel)
        for (int t = 0; t < agreement_instances; ++t) {
            const ChannelSet ch = generate_channels(cfg, params, t);
            const ScaResult sca = solve_powermin_sca(ch, cfg);
            const SdrSolution sdr = solve_powermin_sdr(ch, cfg);
            if (sca.status == ScaStatus::ok &&
                sdr.recovery != SdrSolution::Recovery::none) {
                const double rel = std::abs(sca.beams.total_power() -
                                            sdr.recovered_objective) /
                                   sdr.recovered_objective;
                agree[t] = rel <= 0.005 ? 1 : 0;
            }
        }
        const int good = std::accumulate(agree.begin(), agree.end(), 0);
        CheckOutcome c;
        c.name = "two-method power agreement (0.5% relative)";
        c.value = good;
        c.threshold = std::ceil(0.95 * agreement_instances);
        c.pass = good >= static_cast<int>(c.threshold);
        c.detail = std::to_string(good) + "/" + std::to_string(agreement_instances) +
                   " instances agree";
        outcomes.push_back(std::move(c));
    }

    // Max-min / power-min round trip.
    {
        SystemConfig cfg;
        cfg.num_antennas = 3;
        cfg.num_users = 3;
        cfg.noise_variance = 0.01;
        cfg.power_budget = 5.0;
        cfg.rng_seed = seed;
        ChannelModelParams params;
        params.pathloss_exponent = 0.0;
        BisectionOptions options;
        options.rate_tolerance = 1e-7;
        double worst_power_gap = 0.0, worst_total_rel = 0.0;
        int usable = 0;
        for (int t = 0; t < roundtrip_instances; ++t) {
            const ChannelSet ch = generate_channels(cfg, params, t);
            const MaxMinResult mm = solve_maxmin(ch, cfg, options);
            if (mm.degenerate) continue;
            SystemConfig back = cfg;
            back.power_budget.reset();
            back.target_rates.assign(3, mm.balanced_rate);
            const ScaResult pm = solve_powermin_sca(ch, back);
            if (pm.status != ScaStatus::ok) continue;
            ++usable;
            for (int k = 0; k < 3; ++k)
                worst_power_gap = std::max(
                    worst_power_gap,
                    std::abs(pm.beams.user_power(k) - mm.beams.user_power(k)));
            worst_total_rel = std::max(
                worst_total_rel,
                std::abs(pm.beams.total_power() - *cfg.power_budget) / *cfg.power_budget);
        }
        CheckOutcome c;
        c.name = "max-min / power-min round trip (1e-3 W per user)";
        c.value = worst_power_gap;
        c.threshold = 1e-3;
        c.pass = usable == roundtrip_instances && worst_power_gap <= 1e-3 &&
                 worst_total_rel <= 1e-3;
        c.detail = "worst per-user gap " + format_double(worst_power_gap) + " W, total " +
                   format_double(worst_total_rel) + " relative, " + std::to_string(usable) +
                   "/" + std::to_string(roundtrip_instances) + " usable";
        outcomes.push_back(std::move(c));
    }

    // Single-user closed form.
    {
        SystemConfig cfg;
        cfg.num_antennas = 3;
        cfg.num_users = 1;
        cfg.noise_variance = 0.01;
        cfg.target_rates = {2.0};
        cfg.rng_seed = seed;
        ChannelModelParams params;
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            const ChannelSet ch = generate_channels(cfg, params, t);
            const ScaResult r = solve_powermin_sca(ch, cfg);
            const double expected = rate_to_min_sinr(2.0) * cfg.noise_variance /
                                    ch.channels[0].squaredNorm();
            worst = std::max(worst,
                             std::abs(r.beams.total_power() - expected) / expected);
        }
        CheckOutcome c;
        c.name = "single-user closed form (1e-6 relative)";
        c.value = worst;
        c.threshold = 1e-6;
        c.pass = worst <= 1e-6;
        c.detail = "worst relative error " + format_double(worst);
        outcomes.push_back(std::move(c));
    }
    return outcomes;
}

std::string checks_report(const std::vector<CheckOutcome>& outcomes) {
    std::ostringstream os;
    for (const auto& c : outcomes)
        os << (c.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << c.detail << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Figure recipes
// ---------------------------------------------------------------------------

namespace {

std::string write_file(const std::string& dir, const std::string& name,
                       const std::string& content) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << content;
    return path;
}

std::string curve_csv(const ResultTable& table, const std::string& x_name, bool min_rate) {
    std::ostringstream os;
    os << x_name << "," << (min_rate ? "mean_min_rate" : "mean_power_w") << ",stderr\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.kind != "mean") continue;
        const auto& err = table.rows[i + 1];  // stderr row follows its mean
        os << format_double(row.sweep_value) << ","
           << format_double(min_rate ? row.min_rate : row.total_power_w) << ","
           << format_double(min_rate ? err.min_rate : err.total_power_w) << "\n";
    }
    return os.str();
}

ExperimentSpec base_powermin_spec(std::uint64_t seed, int trials) {
    ExperimentSpec spec;
    spec.sweep = SweepVariable::target_rate;
    spec.sweep_values = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
    spec.trials = trials;
    spec.system.num_users = 3;
    spec.system.noise_variance = 0.01;
    spec.system.rng_seed = seed;
    spec.eval_samples = 0;
    return spec;
}

}  // namespace

std::vector<std::string> figure_ids() {
    return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6",
            "fig7", "fig8", "fig9", "fig10", "fig11"};
}

std::vector<std::string> emit_figure_data(const std::string& figure_id, std::uint64_t seed,
                                          int trials, const std::string& out_dir,
                                          bool parallel) {
    std::vector<std::string> written;

    if (figure_id == "fig1") {
        // Total power vs target rate, NOMA/OMA/ZF, M in {3, 6}.
        for (int antennas : {3, 6}) {
            for (Scheme scheme : {Scheme::noma_sdr, Scheme::oma, Scheme::zf}) {
                ExperimentSpec spec = base_powermin_spec(seed, trials);
                spec.scheme = scheme;
                spec.system.num_antennas = antennas;
                const ResultTable table = run_experiment(spec, parallel);
                written.push_back(write_file(
                    out_dir,
                    std::string("fig1_") + to_string(scheme) + "_M" +
                        std::to_string(antennas) + ".csv",
                    curve_csv(table, "target_rate", false)));
            }
        }
    } else if (figure_id == "fig2") {
        // Total power vs user count, both power-minimization methods.
        for (int antennas : {3, 6}) {
            for (Scheme scheme : {Scheme::noma_sca, Scheme::noma_sdr}) {
                ExperimentSpec spec = base_powermin_spec(seed, trials);
                spec.scheme = scheme;
                spec.sweep = SweepVariable::num_users;
                spec.sweep_values = {2, 3, 4, 5, 6};
                spec.uniform_rate = 2.0;
                spec.system.num_antennas = antennas;
                const ResultTable table = run_experiment(spec, parallel);
                written.push_back(write_file(
                    out_dir,
                    std::string("fig2_") + to_string(scheme) + "_M" +
                        std::to_string(antennas) + ".csv",
                    curve_csv(table, "num_users", false)));
            }
        }
    } else if (figure_id == "fig3" || figure_id == "fig4") {
        // Convergence traces of the iterative scheme; fig4 compares
        // initializations on one channel set.
        SystemConfig cfg;
        cfg.num_users = 3;
        cfg.num_antennas = figure_id == "fig3" ? 6 : 5;
        cfg.noise_variance = 0.01;
        cfg.target_rates = {1.0, 1.0, 1.0};
        cfg.rng_seed = seed;
        ChannelModelParams params;
        params.pathloss_exponent = 0.0;
        std::ostringstream os;
        if (figure_id == "fig3") {
            os << "iteration,total_power_w,channel_index\n";
            for (int c = 0; c < 4; ++c) {
                const ChannelSet ch = generate_channels(cfg, params, c);
                ScaOptions options;
                options.init = ScaInit::mrt_tight;
                const ScaResult r = solve_powermin_sca(ch, cfg, options);
                for (std::size_t it = 0; it < r.trace.total_power.size(); ++it)
                    os << it + 1 << "," << format_double(r.trace.total_power[it]) << ","
                       << c << "\n";
            }
        } else {
            os << "iteration,total_power_w,initialization\n";
            const ChannelSet ch = generate_channels(cfg, params, 0);
            for (const char* tag : {"mrt", "sdr"}) {
                ScaOptions options;
                options.init = tag == std::string("mrt") ? ScaInit::mrt_tight
                                                         : ScaInit::sdr_warm;
                const ScaResult r = solve_powermin_sca(ch, cfg, options);
                for (std::size_t it = 0; it < r.trace.total_power.size(); ++it)
                    os << it + 1 << "," << format_double(r.trace.total_power[it]) << ","
                       << tag << "\n";
            }
        }
        written.push_back(write_file(out_dir, figure_id + "_convergence.csv", os.str()));
    } else if (figure_id == "fig5" || figure_id == "fig6") {
        // Balanced rate vs user count (fig5, P = 10) or budget (fig6,
        // N = 5).
        for (Scheme scheme : {Scheme::noma_maxmin, Scheme::oma, Scheme::zf}) {
            ExperimentSpec spec;
            spec.scheme = scheme;
            spec.trials = trials;
            spec.system.num_antennas = figure_id == "fig5" ? 3 : 6;
            spec.system.num_users = figure_id == "fig5" ? 3 : 5;
            spec.system.noise_variance = 0.01;
            spec.system.rng_seed = seed;
            spec.system.power_budget = 10.0;
            spec.uniform_rate = 0.0;  // max-min comparison mode for oma/zf
            spec.channel.pathloss_exponent = 0.0;
            spec.eval_samples = 0;
            if (figure_id == "fig5") {
                spec.sweep = SweepVariable::num_users;
                spec.sweep_values = {2, 3};
                if (spec.system.num_antennas >= 6) spec.sweep_values = {2, 3, 4, 5, 6};
            } else {
                spec.sweep = SweepVariable::p_max;
                spec.sweep_values = {2.5, 5.0, 7.5, 10.0, 12.5, 15.0};
            }
            const ResultTable table = run_experiment(spec, parallel);
            written.push_back(write_file(
                out_dir,
                figure_id + std::string("_") + to_string(scheme) + ".csv",
                curve_csv(table, to_string(spec.sweep), true)));
        }
    } else if (figure_id == "fig7" || figure_id == "fig8" || figure_id == "fig9" ||
               figure_id == "fig10") {
        // Rate-satisfaction-ratio histograms at R = 3, variance 0.005,
        // rho = 0.1, on the correlated small-cell fixture.
        SystemConfig cfg;
        cfg.num_users = 3;
        cfg.num_antennas = 3;
        cfg.noise_variance = 0.01;
        cfg.target_rates = {3.0, 3.0, 3.0};
        cfg.rng_seed = seed;
        const ChannelSet ch = correlated_channel_fixture(cfg, 4.0, 0.03, 0);
        const UncertaintyModel model = make_uncertainty_model(ch, 0.005, 0.1);
        const int samples = std::max(trials, 1000);
        OutageReport report;
        if (figure_id == "fig7" || figure_id == "fig8") {
            const RobustDesignResult design = figure_id == "fig7"
                                                  ? solve_robust_powermin(model, cfg)
                                                  : solve_nonrobust_powermin(model, cfg);
            if (design.recovery == RobustDesignResult::Recovery::none)
                throw std::runtime_error("design infeasible for " + figure_id);
            report = evaluate_outage(design.beams, model, min_sinr_targets(cfg),
                                     cfg.noise_variance, samples, OutageModel::hermitian,
                                     seed, parallel);
        } else {
            const OmaRobustDesign design =
                figure_id == "fig9" ? solve_robust_powermin_oma(model, cfg)
                                    : solve_nonrobust_powermin_oma(model, cfg);
            if (!design.feasible)
                throw std::runtime_error("design infeasible for " + figure_id);
            report = evaluate_outage_oma(design, model, cfg, samples,
                                         OutageModel::hermitian, seed, parallel);
        }
        written.push_back(
            write_file(out_dir, figure_id + "_histogram.csv", report.histogram_csv()));
    } else if (figure_id == "fig11") {
        // Robust power vs target rate across uncertainty levels.
        for (double variance : {0.0, 0.002, 0.005, 0.01}) {
            ExperimentSpec spec;
            spec.scheme = Scheme::noma_robust;
            spec.sweep = SweepVariable::target_rate;
            spec.sweep_values = {1.0, 2.0, 3.0};
            spec.trials = trials;
            spec.system.num_users = 3;
            spec.system.num_antennas = 3;
            spec.system.noise_variance = 0.01;
            spec.system.rng_seed = seed;
            spec.scenario = ChannelScenario::correlated;
            spec.error_variance = variance;
            spec.outage = 0.1;
            spec.eval_samples = 0;
            const ResultTable table = run_experiment(spec, parallel);
            char name[64];
            std::snprintf(name, sizeof(name), "fig11_variance_%.3f.csv", variance);
            written.push_back(
                write_file(out_dir, name, curve_csv(table, "target_rate", false)));
        }
    } else {
        throw std::invalid_argument("unknown figure id: " + figure_id);
    }
    return written;
}

}  // namespace noma
