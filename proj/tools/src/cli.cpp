#include "nhits/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <ostream>
#include <sstream>

#include "nhits/checkpoint.hpp"
#include "nhits/error.hpp"
#include "nhits/eval.hpp"
#include "nhits/haar.hpp"
#include "nhits/io.hpp"
#include "nhits/train.hpp"
#include "nhits/tune.hpp"

namespace nhits::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

double parse_ratio(const std::string& text) {
    auto number = [&](std::string_view s) {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
            throw ConfigError("invalid ratio '" + text + "'");
        }
        return v;
    };
    const auto slash = text.find('/');
    const double r = slash == std::string::npos
                         ? number(text)
                         : number(std::string_view(text).substr(0, slash)) / number(std::string_view(text).substr(slash + 1));
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("ratio '" + text + "' must lie in (0, 1]");
    return r;
}

namespace {

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
    if (parts.empty()) throw ConfigError("empty list");
    return parts;
}

} // namespace

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    for (const std::string& p : split_commas(text)) {
        std::size_t v = 0;
        const auto [end, ec] = std::from_chars(p.data(), p.data() + p.size(), v);
        if (ec != std::errc() || end != p.data() + p.size() || p.empty() || v == 0) {
            throw ConfigError("expected positive integers in '" + text + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<double> parse_ratio_list(const std::string& text) {
    std::vector<double> out;
    for (const std::string& p : split_commas(text)) out.push_back(parse_ratio(p));
    return out;
}

namespace {

std::string text_of(const json& j) { return j.dump(2) + "\n"; }

/// Collects what a run read and wrote; manifest.json goes next to the outputs.
class Recorder {
public:
    Recorder(std::string command, const std::vector<std::string>& args, fs::path dir)
        : dir_(std::move(dir)) {
        doc_["schema_version"] = 1;
        doc_["command"] = std::move(command);
        doc_["argv"] = args;
        doc_["started_at"] = utc_timestamp();
        doc_["threads"] = thread_count_from_env();
        doc_["inputs"] = json::object();
        doc_["outputs"] = json::array();
        if (!dir_.empty()) fs::create_directories(dir_);
    }

    void input(const fs::path& p) { doc_["inputs"][p.string()] = file_digest(p); }
    json& operator[](const char* key) { return doc_[key]; }

    void write(const std::string& name, std::string_view content) {
        atomic_write_file(dir_ / name, content);
        doc_["outputs"].push_back(name);
    }
    void checkpoint(const std::string& name, const Checkpoint& ckpt) {
        save_checkpoint(dir_ / name, ckpt);
        doc_["outputs"].push_back(name);
    }
    void finish() {
        doc_["finished_at"] = utc_timestamp();
        atomic_write_file(dir_ / "manifest.json", text_of(doc_));
    }

private:
    fs::path dir_;
    json doc_;
};

struct DataArgs {
    std::string path;
    std::string layout = "auto";
    std::string univariate;

    void add(CLI::App& app) {
        app.add_option("--data", path, "CSV file (long: unique_id,ds,y; wide: time column then series)")->required();
        app.add_option("--layout", layout, "auto, long or wide")->capture_default_str();
        app.add_option("--univariate", univariate, "keep only this series or column");
    }

    SeriesDataset load() const {
        CsvLayout l = CsvLayout::Auto;
        if (layout == "long") {
            l = CsvLayout::Long;
        } else if (layout == "wide") {
            l = CsvLayout::Wide;
        } else if (layout != "auto") {
            throw ConfigError("unknown layout '" + layout + "'");
        }
        SeriesDataset ds = load_series(path, l);
        if (!univariate.empty()) ds = select_series(ds, univariate);
        ds.name = fs::path(path).stem().string();
        return ds;
    }

    json describe() const { return {{"path", path}, {"layout", layout}, {"univariate", univariate}}; }
};

SplitPolicy resolve_policy(const std::string& flag, const std::string& data_path) {
    if (flag != "auto") return parse_split_policy(flag);
    std::string stem = fs::path(data_path).stem().string();
    std::transform(stem.begin(), stem.end(), stem.begin(), [](unsigned char c) { return std::tolower(c); });
    return stem.find("ettm2") != std::string::npos ? SplitPolicy::Ettm2_60_20_20 : SplitPolicy::Default_70_10_20;
}

json train_config_json(const TrainConfig& t) {
    return {{"steps", t.steps},     {"batch_size", t.batch_size},  {"lr0", t.lr0},
            {"decay_points", t.decay_points}, {"decay_factor", t.decay_factor},
            {"loss", std::string(to_string(t.loss))}, {"seed", t.seed}};
}

// -- train --------------------------------------------------------------------

struct TrainArgs {
    DataArgs data;
    std::size_t horizon = 0;
    std::size_t input_size = 0;
    std::string kernels = "8,4,1";
    std::string ratios = "1/24,1/12,1";
    std::size_t hidden = 512;
    std::size_t mlp_layers = 2;
    std::size_t blocks_per_stack = 1;
    std::string interp = "linear";
    std::string pool = "max";
    std::string order = "top-down";
    std::size_t steps = 1000;
    std::size_t batch_size = 256;
    double lr = 1e-3;
    std::string loss = "mae";
    std::uint64_t seed = 1;
    std::string split_policy = "auto";
    std::string out;

    void add(CLI::App& app) {
        data.add(app);
        app.add_option("--horizon", horizon, "forecast horizon H")->required();
        app.add_option("--input-size", input_size, "lookback L (default 5*H)");
        app.add_option("--kernels", kernels, "pooling kernel per stack")->capture_default_str();
        app.add_option("--ratios", ratios, "expressiveness ratio per stack, e.g. 1/4,1/2,1")->capture_default_str();
        app.add_option("--hidden", hidden, "MLP width")->capture_default_str();
        app.add_option("--mlp-layers", mlp_layers, "hidden layers per block")->capture_default_str();
        app.add_option("--blocks-per-stack", blocks_per_stack, "blocks per stack")->capture_default_str();
        app.add_option("--interp", interp, "nearest, linear or cubic")->capture_default_str();
        app.add_option("--pool", pool, "max or average")->capture_default_str();
        app.add_option("--order", order, "top-down or bottom-up")->capture_default_str();
        app.add_option("--steps", steps, "optimizer steps")->capture_default_str();
        app.add_option("--batch-size", batch_size, "windows per step")->capture_default_str();
        app.add_option("--lr", lr, "initial learning rate")->capture_default_str();
        app.add_option("--loss", loss, "mae or mse")->capture_default_str();
        app.add_option("--seed", seed, "training seed")->capture_default_str();
        app.add_option("--split-policy", split_policy, "auto, default or ettm2")->capture_default_str();
        app.add_option("--out", out, "output directory")->required();
    }

    ModelConfig model_config() const {
        const auto ks = parse_size_list(kernels);
        const auto rs = parse_ratio_list(ratios);
        if (ks.size() != rs.size()) throw ConfigError("--kernels and --ratios must list the same number of stacks");
        std::vector<StackSpec> stacks;
        for (std::size_t i = 0; i < ks.size(); ++i) stacks.push_back({ks[i], rs[i]});
        ArchitectureOptions opt;
        opt.hidden_size = hidden;
        opt.n_mlp_layers = mlp_layers;
        opt.blocks_per_stack = blocks_per_stack;
        opt.interp = parse_interp_kind(interp);
        opt.pool = parse_pool_mode(pool);
        opt.order = parse_block_order(order);
        return make_model_config(input_size == 0 ? 5 * horizon : input_size, horizon, std::move(stacks), opt);
    }

    TrainConfig train_config() const {
        TrainConfig t = TrainConfig::with_steps(steps);
        t.batch_size = batch_size;
        t.lr0 = lr;
        t.loss = parse_loss_kind(loss);
        t.seed = seed;
        return t;
    }
};

int run_train(const TrainArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    if (a.horizon == 0) throw ConfigError("horizon must be positive");
    const ModelConfig config = a.model_config();
    config.validate();
    const TrainConfig tcfg = a.train_config();
    tcfg.validate();
    const SplitPolicy policy = resolve_policy(a.split_policy, a.data.path);

    Recorder rec("train", args, a.out);
    rec.input(a.data.path);
    const SeriesDataset raw = a.data.load();
    const SplitView view = split(raw, policy, WindowShape{config.input_size, config.horizon});
    const auto [data, norm] = fit_normalize(raw, view);
    const TrainResult result = train(config, data, view, tcfg);

    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.norm = norm;
    ckpt.split_policy = policy;
    ckpt.seed = tcfg.seed;
    ckpt.params = result.params.values;
    rec.checkpoint("model.ckpt", ckpt);
    std::ostringstream loss_csv;
    write_loss_csv(loss_csv, result.history);
    rec.write("loss.csv", loss_csv.str());

    rec["seed"] = tcfg.seed;
    rec["config"] = {{"data", a.data.describe()},
                     {"split_policy", std::string(to_string(policy))},
                     {"model", json::parse(config_to_json(config))},
                     {"config_digest", config_digest(config)},
                     {"train", train_config_json(tcfg)}};
    rec["final_train_loss"] = result.history.back().train_loss;
    rec.finish();
    out << "trained " << count_parameters(config).total << " parameters for " << tcfg.steps
        << " steps; final train loss " << format_double(result.history.back().train_loss) << "\n";
    return kExitOk;
}

// -- evaluate -----------------------------------------------------------------

struct EvaluateArgs {
    std::string model;
    DataArgs data;
    std::string split = "test";
    bool denormalize = false;
    std::string out;

    void add(CLI::App& app) {
        app.add_option("--model", model, "checkpoint written by train or tune")->required();
        data.add(app);
        app.add_option("--split", split, "val or test")->capture_default_str();
        app.add_flag("--denormalize", denormalize, "report metrics on the original scale");
        app.add_option("--out", out, "output directory (default: print JSON)");
    }
};

int run_evaluate(const EvaluateArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    const SplitPart part = parse_split_part(a.split);
    const Checkpoint ckpt = load_checkpoint(a.model);
    const ParamSet params = ckpt.param_set();
    const SeriesDataset data = apply_normalize(a.data.load(), ckpt.norm);
    const SplitView view = split(data, ckpt.split_policy, WindowShape{ckpt.config.input_size, ckpt.config.horizon});
    EvalOptions opt;
    opt.denormalize = a.denormalize;
    opt.threads = thread_count_from_env();
    const MetricsReport report = evaluate(ckpt.config, params, data, view, part, opt);
    const std::string text = report_to_json(report, {data.name, ckpt.seed, config_digest(ckpt.config)});
    if (a.out.empty()) {
        out << text;
        return kExitOk;
    }
    Recorder rec("evaluate", args, a.out);
    rec.input(a.model);
    rec.input(a.data.path);
    rec.write("report.json", text);
    rec["seed"] = ckpt.seed;
    rec["config"] = {{"model_path", a.model}, {"data", a.data.describe()}, {"split", a.split},
                     {"denormalize", a.denormalize}};
    rec.finish();
    return kExitOk;
}

// -- tune ---------------------------------------------------------------------

struct TuneArgs {
    DataArgs data;
    std::size_t horizon = 0;
    std::size_t iterations = 20;
    std::uint64_t seed = 1;
    std::string split_policy = "auto";
    std::size_t steps = 0, batch_size = 0, hidden = 0, input_multiplier = 0;
    std::string order = "top-down";
    bool denormalize = false;
    std::string out;

    void add(CLI::App& app) {
        data.add(app);
        app.add_option("--horizon", horizon, "forecast horizon H")->required();
        app.add_option("--iterations", iterations, "number of sampled configurations")->capture_default_str();
        app.add_option("--seed", seed, "search seed")->capture_default_str();
        app.add_option("--split-policy", split_policy, "auto, default or ettm2")->capture_default_str();
        app.add_option("--steps", steps, "override optimizer steps per trial");
        app.add_option("--batch-size", batch_size, "override batch size");
        app.add_option("--hidden", hidden, "override MLP width");
        app.add_option("--input-multiplier", input_multiplier, "override L = m*H");
        app.add_option("--order", order, "top-down or bottom-up")->capture_default_str();
        app.add_flag("--denormalize", denormalize, "report test metrics on the original scale");
        app.add_option("--out", out, "output directory")->required();
    }

    SearchSpace space() const {
        SearchSpace s = SearchSpace::published();
        if (steps) s.steps = steps;
        if (batch_size) s.batch_size = batch_size;
        if (hidden) s.hidden_size = hidden;
        if (input_multiplier) s.input_multiplier = input_multiplier;
        s.order = parse_block_order(order);
        return s;
    }
};

std::string triple_text(const Triple& t) {
    return std::to_string(t[0]) + "-" + std::to_string(t[1]) + "-" + std::to_string(t[2]);
}

int run_tune(const TuneArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    const SearchSpace space = a.space();
    const SplitPolicy policy = resolve_policy(a.split_policy, a.data.path);
    if (a.horizon == 0) throw ConfigError("horizon must be positive");

    Recorder rec("tune", args, a.out);
    rec.input(a.data.path);
    const SeriesDataset raw = a.data.load();
    const SplitView view = split(raw, policy, WindowShape{space.input_multiplier * a.horizon, a.horizon});
    const auto [data, norm] = fit_normalize(raw, view);

    SearchOptions opt;
    opt.iterations = a.iterations;
    opt.search_seed = a.seed;
    opt.threads = thread_count_from_env();
    const SearchResult result = search(space, data, view, a.horizon, opt);
    const TrialRecord& best = result.best();

    // Wall-clock seconds go to the manifest so trials.csv is a pure function of the inputs.
    std::ostringstream trials;
    write_trials_csv(trials, result.trials, false);
    rec.write("trials.csv", trials.str());

    Checkpoint ckpt;
    ckpt.config = best.config;
    ckpt.norm = norm;
    ckpt.split_policy = policy;
    ckpt.seed = best.candidate.seed;
    ckpt.params = result.best_params.values;
    rec.checkpoint("model.ckpt", ckpt);

    EvalOptions eopt;
    eopt.denormalize = a.denormalize;
    eopt.threads = opt.threads;
    const MetricsReport report = evaluate(best.config, result.best_params, data, view, SplitPart::Test, eopt);
    rec.write("test_report.json", report_to_json(report, {data.name, best.candidate.seed, config_digest(best.config)}));

    json seconds = json::array();
    for (const TrialRecord& t : result.trials) seconds.push_back(t.seconds);
    rec["seed"] = a.seed;
    rec["config"] = {{"data", a.data.describe()},
                     {"split_policy", std::string(to_string(policy))},
                     {"horizon", a.horizon},
                     {"iterations", a.iterations},
                     {"steps", space.steps},
                     {"batch_size", space.batch_size},
                     {"hidden_size", space.hidden_size},
                     {"input_multiplier", space.input_multiplier},
                     {"order", std::string(to_string(space.order))}};
    rec["best_trial"] = {{"trial", best.trial},
                         {"kernels", triple_text(best.candidate.kernels)},
                         {"coeff_schedule", triple_text(best.candidate.inverse_ratios)},
                         {"seed", best.candidate.seed},
                         {"val_mae", best.val_mae},
                         {"val_mse", best.val_mse}};
    rec["trial_seconds"] = seconds;
    rec.finish();
    out << "best trial " << best.trial << " (val MAE " << format_double(best.val_mae) << "); test MAE "
        << format_double(report.mae) << ", MSE " << format_double(report.mse) << "\n";
    return kExitOk;
}

// -- decompose ----------------------------------------------------------------

struct DecomposeArgs {
    std::string model;
    DataArgs data;
    std::string series;
    long anchor = -1;
    std::string out;

    void add(CLI::App& app) {
        app.add_option("--model", model, "checkpoint")->required();
        data.add(app);
        app.add_option("--series", series, "series id (default: first)");
        app.add_option("--anchor", anchor, "index of the last input point (default: first test window)");
        app.add_option("--out", out, "output directory")->required();
    }
};

int run_decompose(const DecomposeArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(a.model);
    const ParamSet params = ckpt.param_set();
    const SeriesDataset data = apply_normalize(a.data.load(), ckpt.norm);
    const std::size_t si = a.series.empty() ? 0 : data.index_of(a.series);
    const Series& s = data.series.at(si);
    const std::size_t L = ckpt.config.input_size;
    const std::size_t H = ckpt.config.horizon;

    std::size_t anchor = 0;
    if (a.anchor >= 0) {
        anchor = static_cast<std::size_t>(a.anchor);
    } else {
        const SplitView view = split(data, ckpt.split_policy);
        anchor = std::max(view.range(si, SplitPart::Test).begin, L) - 1;
    }
    if (anchor + 1 < L || anchor + H >= s.size()) {
        throw DataError("anchor " + std::to_string(anchor) + " leaves no full window in series '" + s.id + "'");
    }
    const Vec1D input(s.values.begin() + static_cast<long>(anchor + 1 - L), s.values.begin() + static_cast<long>(anchor + 1));
    const ForecastDecomposition d = network_forward(ckpt.config, params, input);
    const auto stacks = d.per_stack_forecasts(ckpt.config.blocks_per_stack);

    std::ostringstream csv;
    csv << "time,actual,total";
    for (std::size_t k = 0; k < stacks.size(); ++k) csv << ",stack" << k + 1;
    csv << ",residual\n";
    for (std::size_t h = 0; h < H; ++h) {
        const double actual = s.values[anchor + 1 + h];
        csv << s.timestamps[anchor + 1 + h] << ',' << format_double(actual) << ',' << format_double(d.total_forecast[h]);
        for (const Vec1D& f : stacks) csv << ',' << format_double(f[h]);
        csv << ',' << format_double(actual - d.total_forecast[h]) << '\n';
    }
    Recorder rec("decompose", args, a.out);
    rec.input(a.model);
    rec.input(a.data.path);
    rec.write("decomposition.csv", csv.str());
    rec["seed"] = ckpt.seed;
    rec["config"] = {{"model_path", a.model}, {"data", a.data.describe()}, {"series", s.id}, {"anchor", anchor},
                     {"scale", "normalized"}};
    rec.finish();
    out << "decomposed " << stacks.size() << " stacks for series " << s.id << " at anchor " << anchor << "\n";
    return kExitOk;
}

// -- report -------------------------------------------------------------------

struct ReportArgs {
    std::string horizons = "24,96,192,336,720";
    std::size_t hidden = 512;
    unsigned w_min = 2, w_max = 8;
    std::size_t samples = 1 << 14;
    std::string out;

    void add(CLI::App& app) {
        app.add_option("--horizons", horizons, "horizons for the parameter-count table")->capture_default_str();
        app.add_option("--hidden", hidden, "MLP width")->capture_default_str();
        app.add_option("--w-min", w_min, "first Haar level")->capture_default_str();
        app.add_option("--w-max", w_max, "last Haar level")->capture_default_str();
        app.add_option("--samples", samples, "samples on [0, 1] for the Haar table")->capture_default_str();
        app.add_option("--out", out, "output directory")->required();
    }
};

int run_report(const ReportArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    if (a.w_min > a.w_max) throw ConfigError("--w-min must not exceed --w-max");
    SearchSpace space = SearchSpace::published();
    space.hidden_size = a.hidden;
    std::ostringstream counts;
    counts << "horizon,input_size,kernels,coeff_schedule,total_params,forecast_head_params,forecast_coeffs\n";
    for (std::size_t H : parse_size_list(a.horizons)) {
        for (const Triple& k : space.pooling_kernels) {
            for (const Triple& inv : space.inverse_ratios) {
                const ModelConfig c = Candidate{k, inv, 1}.model_config(space, H);
                const ParamCount pc = count_parameters(c);
                counts << H << ',' << c.input_size << ',' << triple_text(k) << ',' << triple_text(inv) << ','
                       << pc.total << ',' << pc.forecast_head_total << ',' << pc.forecast_coeff_total << '\n';
            }
        }
    }
    const std::vector<haar::NamedFunction> fns{
        {"tau", [](double t) { return t; }},
        {"sin_2pi_tau", [](double t) { return std::sin(2.0 * std::numbers::pi * t); }},
    };
    const auto rows = haar::error_decay(fns, a.w_min, a.w_max, a.samples);
    std::ostringstream decay;
    haar::write_decay_csv(decay, rows);

    Recorder rec("report", args, a.out);
    rec.write("param_counts.csv", counts.str());
    rec.write("haar_decay.csv", decay.str());
    rec["seed"] = 0;
    rec["config"] = {{"horizons", a.horizons}, {"hidden_size", a.hidden}, {"w_min", a.w_min},
                     {"w_max", a.w_max}, {"samples", a.samples}};
    rec.finish();
    out << "wrote param_counts.csv and haar_decay.csv to " << a.out << "\n";
    return kExitOk;
}

int diagnose(std::ostream& err, const char* kind, const std::exception& e, int code) {
    err << "nhits: " << kind << ": " << e.what() << "\n";
    return code;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"N-HiTS forecasting: train, evaluate, tune, decompose, report", "nhits"};
    app.require_subcommand(1, 1);
    TrainArgs train_args;
    EvaluateArgs eval_args;
    TuneArgs tune_args;
    DecomposeArgs decompose_args;
    ReportArgs report_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train one model and write a checkpoint");
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "rolling-window metrics of a checkpoint");
    CLI::App* tune_cmd = app.add_subcommand("tune", "random search by validation MAE, then test metrics");
    CLI::App* decompose_cmd = app.add_subcommand("decompose", "per-stack forecast components of one window");
    CLI::App* report_cmd = app.add_subcommand("report", "parameter-count and Haar error-decay tables");
    train_args.add(*train_cmd);
    eval_args.add(*eval_cmd);
    tune_args.add(*tune_cmd);
    decompose_args.add(*decompose_cmd);
    report_args.add(*report_cmd);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (train_cmd->parsed()) return run_train(train_args, args, out);
        if (eval_cmd->parsed()) return run_evaluate(eval_args, args, out);
        if (tune_cmd->parsed()) return run_tune(tune_args, args, out);
        if (decompose_cmd->parsed()) return run_decompose(decompose_args, args, out);
        if (report_cmd->parsed()) return run_report(report_args, args, out);
    } catch (const ConfigError& e) {
        return diagnose(err, "config error", e, kExitConfig);
    } catch (const DataError& e) {
        return diagnose(err, "data error", e, kExitData);
    } catch (const NumericError& e) {
        return diagnose(err, "numeric error", e, kExitNumeric);
    } catch (const std::exception& e) {
        return diagnose(err, "error", e, kExitFailure);
    }
    return kExitFailure;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

} // namespace nhits::cli
