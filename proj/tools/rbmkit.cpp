// rbmkit command-line front end. Subcommands compose the library into the
// full workflow: train an RBM and a classifier on source data, cast target
// data through the RBM's Gibbs chain, and score the transfer.
//
// Every run writes <command>-manifest.json into --out-dir echoing the
// resolved flags. All artifacts are reproducible byte-for-byte from
// flags+seed; wall_ms fields (manifest, history CSV) are the only
// timing-dependent bytes anywhere.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rbmkit/rbmkit.hpp"

#ifndef RBMKIT_GIT_DESCRIBE
#define RBMKIT_GIT_DESCRIBE "unknown"
#endif

namespace {

using nlohmann::ordered_json;

// Exit codes; the same table ships in --help.
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;
constexpr int kExitDimension = 4;
constexpr int kExitConfig = 5;
constexpr int kExitCapacity = 6;
constexpr int kExitNumeric = 7;
constexpr int kExitInternal = 8;

constexpr const char* kExitTable =
    "Exit codes:\n"
    "  0  success\n"
    "  1  usage error (unknown flag, missing subcommand, bad value)\n"
    "  2  i/o error (missing or unwritable file)\n"
    "  3  format error (bad magic, truncated or inconsistent file)\n"
    "  4  dimension error (shapes that do not line up)\n"
    "  5  config error (invalid hyperparameter or option combination)\n"
    "  6  capacity error (exact enumeration requested on too large a model)\n"
    "  7  numeric error (non-finite values)\n"
    "  8  internal error\n"
    "\n"
    "Dataset paths name the IDX images file; the labels file is derived by\n"
    "replacing 'images' with 'labels' (and 'idx3' with 'idx1'), matching\n"
    "the usual train-images-idx3-ubyte / train-labels-idx1-ubyte pairing.\n"
    "Relative --out/--grid/... paths are placed inside --out-dir.\n";

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out_dir = ".";
};

std::string joined_path(const std::string& out_dir, const std::string& name) {
    const std::filesystem::path p(name);
    if (p.is_absolute()) {
        return name;
    }
    return (std::filesystem::path(out_dir) / p).string();
}

// train-images-idx3-ubyte -> train-labels-idx1-ubyte
std::string labels_path_for(const std::string& images_path) {
    std::string out = images_path;
    const std::size_t pos = out.rfind("images");
    if (pos == std::string::npos) {
        throw rbmkit::ConfigError("cannot derive a labels path from '" +
                                  images_path +
                                  "': the images filename must contain "
                                  "'images'");
    }
    out.replace(pos, 6, "labels");
    const std::size_t ix = out.rfind("idx3");
    if (ix != std::string::npos) {
        out.replace(ix, 4, "idx1");
    }
    return out;
}

rbmkit::ImageDataset load_pair(const std::string& images_path) {
    return rbmkit::load_idx(images_path, labels_path_for(images_path));
}

void save_pair(const rbmkit::ImageDataset& ds,
               const std::string& images_path) {
    rbmkit::save_idx(ds, images_path, labels_path_for(images_path));
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw rbmkit::IoError("cannot open '" + path + "' for writing");
    }
    return os;
}

void write_text(const std::string& path, const std::string& text) {
    auto os = open_out(path);
    os << text;
    if (!os.good()) {
        throw rbmkit::IoError("failed while writing '" + path + "'");
    }
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0)
        .count();
}

void write_manifest(const GlobalOpts& g, const std::string& command,
                    const ordered_json& flags, double wall_ms,
                    const std::vector<std::string>& outputs) {
    ordered_json j;
    j["command"] = command;
    j["flags"] = flags;
    j["seed"] = g.seed;
    j["git_describe"] = RBMKIT_GIT_DESCRIBE;
    j["wall_ms"] = wall_ms;
    j["outputs"] = outputs;
    write_text(joined_path(g.out_dir, command + "-manifest.json"),
               j.dump(2) + "\n");
}

rbmkit::TransferMode parse_mode(const std::string& mode) {
    return mode == "binary" ? rbmkit::TransferMode::binary_sample
                            : rbmkit::TransferMode::mean_field;
}

// "builtin" -> the synthetic source training split; anything else is an
// IDX images path.
rbmkit::ImageDataset load_train_data(const std::string& data,
                                     std::uint64_t seed) {
    if (data == "builtin") {
        rbmkit::DeskBenchConfig cfg;
        cfg.seed = seed;
        return rbmkit::make_desk_benchmark(cfg).source_train;
    }
    return load_pair(data);
}

ordered_json report_json(const rbmkit::TransferReport& r) {
    ordered_json j;
    j["seed"] = r.seed;
    j["n_samples"] = r.n_samples;
    j["source_accuracy"] = r.source_accuracy;
    j["target_direct_accuracy"] = r.target_direct_accuracy;
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < r.target_transferred_accuracy.size(); ++i) {
        ordered_json row;
        row["k"] = r.target_transferred_accuracy[i].first;
        row["accuracy"] = r.target_transferred_accuracy[i].second;
        row["mean_free_energy"] = r.transferred_free_energy[i].second;
        rows.push_back(std::move(row));
    }
    j["target_transferred"] = std::move(rows);
    j["target_free_energy"] = r.target_free_energy;
    if (r.target_oracle_accuracy) {
        j["target_oracle_accuracy"] = *r.target_oracle_accuracy;
    }
    return j;
}

std::string report_csv(const rbmkit::TransferReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "condition,k,accuracy,mean_free_energy\n";
    os << "source,," << r.source_accuracy << ",\n";
    os << "target_direct,," << r.target_direct_accuracy << ','
       << r.target_free_energy << '\n';
    for (std::size_t i = 0; i < r.target_transferred_accuracy.size(); ++i) {
        os << "target_transferred," << r.target_transferred_accuracy[i].first
           << ',' << r.target_transferred_accuracy[i].second << ','
           << r.transferred_free_energy[i].second << '\n';
    }
    if (r.target_oracle_accuracy) {
        os << "target_oracle,," << *r.target_oracle_accuracy << ",\n";
    }
    return os.str();
}

// --- subcommand option blocks -------------------------------------------

struct TrainRbmOpts {
    std::string data = "builtin";
    std::size_t hidden = 128;
    std::string algo = "pcd";
    std::size_t k = 1;
    double lr = 0.01;
    std::size_t epochs = 30;
    std::size_t batch = 64;
    double wd = 1e-4;
    double momentum = 0.5;
    double init_scale = 0.01;
    bool track_ll = false;
    std::string out = "model.rbm";
    std::string history;  // empty -> <out>.csv
};

int run_train_rbm(const GlobalOpts& g, const TrainRbmOpts& o) {
    const auto t0 = Clock::now();
    const rbmkit::ImageDataset data = load_train_data(o.data, g.seed);

    rbmkit::TrainConfig cfg;
    cfg.algorithm = o.algo == "cd" ? rbmkit::TrainAlgorithm::cd
                                   : rbmkit::TrainAlgorithm::pcd;
    cfg.k = o.k;
    cfg.learning_rate = o.lr;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.weight_decay = o.wd;
    cfg.momentum = o.momentum;
    cfg.init_weight_scale = o.init_scale;
    cfg.seed = g.seed;
    cfg.track_exact_ll = o.track_ll;

    auto [params, history] = rbmkit::train(data, o.hidden, cfg);

    const std::string model_path = joined_path(g.out_dir, o.out);
    std::string hist_path = o.history.empty()
        ? std::filesystem::path(model_path).replace_extension(".csv").string()
        : joined_path(g.out_dir, o.history);
    rbmkit::save_rbm(params, model_path);
    rbmkit::write_history_csv(history, hist_path);

    std::cout << "trained " << params.n_visible << "x" << params.n_hidden
              << " rbm on " << data.n << " rows (" << o.algo << ", k=" << o.k
              << ", " << o.epochs << " epochs)\n";
    std::cout << "final recon error " << history.epochs.back().recon_error
              << "\n";
    std::cout << "wrote " << model_path << "\n";
    std::cout << "wrote " << hist_path << "\n";

    ordered_json flags;
    flags["data"] = o.data;
    flags["hidden"] = o.hidden;
    flags["algo"] = o.algo;
    flags["k"] = o.k;
    flags["lr"] = o.lr;
    flags["epochs"] = o.epochs;
    flags["batch"] = o.batch;
    flags["wd"] = o.wd;
    flags["momentum"] = o.momentum;
    flags["init_scale"] = o.init_scale;
    flags["track_ll"] = o.track_ll;
    flags["out"] = o.out;
    flags["threads"] = g.threads;
    flags["out_dir"] = g.out_dir;
    write_manifest(g, "train-rbm", flags, ms_since(t0),
                   {model_path, hist_path});
    return 0;
}

struct TrainClfOpts {
    std::string data = "builtin";
    std::size_t hidden = 128;
    double lr = 0.5;
    std::size_t epochs = 30;
    std::size_t batch = 64;
    std::string out = "clf.mlp";
};

int run_train_clf(const GlobalOpts& g, const TrainClfOpts& o) {
    const auto t0 = Clock::now();
    const rbmkit::ImageDataset data = load_train_data(o.data, g.seed);

    rbmkit::ClfConfig cfg;
    cfg.hidden_units = o.hidden;
    cfg.learning_rate = o.lr;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.seed = g.seed;

    const rbmkit::MlpParams params = rbmkit::clf_train(data, cfg);
    const std::string model_path = joined_path(g.out_dir, o.out);
    rbmkit::save_mlp(params, model_path);

    std::cout << "trained " << params.d << "-" << params.hidden << "-"
              << params.n_classes << " classifier on " << data.n << " rows ("
              << o.epochs << " epochs)\n";
    std::cout << "train accuracy " << rbmkit::accuracy(params, data) << "\n";
    std::cout << "wrote " << model_path << "\n";

    ordered_json flags;
    flags["data"] = o.data;
    flags["hidden"] = o.hidden;
    flags["lr"] = o.lr;
    flags["epochs"] = o.epochs;
    flags["batch"] = o.batch;
    flags["out"] = o.out;
    flags["threads"] = g.threads;
    flags["out_dir"] = g.out_dir;
    write_manifest(g, "train-clf", flags, ms_since(t0), {model_path});
    return 0;
}

struct TransferOpts {
    std::string rbm;
    std::string in;
    std::size_t k = 1;
    std::string mode = "mean";
    std::string out = "transferred-images-idx3-ubyte";
    std::string grid;  // optional PGM of before/after pairs
};

int run_transfer(const GlobalOpts& g, const TransferOpts& o) {
    const auto t0 = Clock::now();
    const rbmkit::RbmParams rbm = rbmkit::load_rbm(o.rbm);
    const rbmkit::ImageDataset data = load_pair(o.in);

    rbmkit::TransferConfig cfg;
    cfg.k = o.k;
    cfg.output_mode = parse_mode(o.mode);
    cfg.seed = g.seed;
    // stream keyed by k, so `transfer` and `eval` agree row for row
    const rbmkit::Rng rng(g.seed, o.k);
    const rbmkit::ImageDataset moved =
        rbmkit::transfer_dataset(rbm, data, cfg, rng);

    const std::string out_path = joined_path(g.out_dir, o.out);
    save_pair(moved, out_path);
    std::vector<std::string> outputs{out_path, labels_path_for(out_path)};

    std::cout << "transferred " << data.n << " rows with k=" << o.k << " ("
              << o.mode << ")\n";
    std::cout << "wrote " << out_path << "\n";

    if (!o.grid.empty()) {
        const std::size_t pairs = std::min<std::size_t>(8, data.n);
        std::vector<std::vector<double>> imgs;
        for (std::size_t i = 0; i < pairs; ++i) {  // top row: originals
            const auto row = data.row(i);
            imgs.emplace_back(row.begin(), row.end());
        }
        for (std::size_t i = 0; i < pairs; ++i) {  // bottom row: transferred
            const auto row = moved.row(i);
            imgs.emplace_back(row.begin(), row.end());
        }
        const std::string grid_path = joined_path(g.out_dir, o.grid);
        rbmkit::write_pgm_grid(grid_path, imgs, data.width, data.height,
                               pairs);
        outputs.push_back(grid_path);
        std::cout << "wrote " << grid_path << "\n";
    }

    ordered_json flags;
    flags["rbm"] = o.rbm;
    flags["in"] = o.in;
    flags["k"] = o.k;
    flags["mode"] = o.mode;
    flags["out"] = o.out;
    flags["grid"] = o.grid;
    flags["threads"] = g.threads;
    flags["out_dir"] = g.out_dir;
    write_manifest(g, "transfer", flags, ms_since(t0), outputs);
    return 0;
}

struct EvalOpts {
    std::string rbm;
    std::string clf;
    std::string source;
    std::string target;
    std::vector<std::size_t> ks{1, 3};
    std::string mode = "mean";
    std::string oracle;  // optional target-trained classifier
    std::string out = "eval-report.json";
    std::string csv = "eval-report.csv";
};

int run_eval(const GlobalOpts& g, const EvalOpts& o) {
    const auto t0 = Clock::now();
    const rbmkit::RbmParams rbm = rbmkit::load_rbm(o.rbm);
    const rbmkit::MlpParams clf = rbmkit::load_mlp(o.clf);
    const rbmkit::ImageDataset source = load_pair(o.source);
    const rbmkit::ImageDataset target = load_pair(o.target);

    rbmkit::MlpParams oracle;
    const bool has_oracle = !o.oracle.empty();
    if (has_oracle) {
        oracle = rbmkit::load_mlp(o.oracle);
    }

    rbmkit::TransferConfig cfg;
    cfg.output_mode = parse_mode(o.mode);
    cfg.seed = g.seed;
    const rbmkit::TransferReport report =
        rbmkit::evaluate_pipeline(rbm, clf, source, target, o.ks, cfg,
                                  has_oracle ? &oracle : nullptr);

    const std::string json_path = joined_path(g.out_dir, o.out);
    const std::string csv_path = joined_path(g.out_dir, o.csv);
    const ordered_json j = report_json(report);
    write_text(json_path, j.dump(2) + "\n");
    write_text(csv_path, report_csv(report));

    std::cout << j.dump() << "\n";

    ordered_json flags;
    flags["rbm"] = o.rbm;
    flags["clf"] = o.clf;
    flags["source"] = o.source;
    flags["target"] = o.target;
    flags["ks"] = o.ks;
    flags["mode"] = o.mode;
    flags["oracle"] = o.oracle;
    flags["out"] = o.out;
    flags["csv"] = o.csv;
    flags["threads"] = g.threads;
    flags["out_dir"] = g.out_dir;
    write_manifest(g, "eval", flags, ms_since(t0), {json_path, csv_path});
    return 0;
}

struct AisOpts {
    std::string rbm;
    std::size_t temps = 1000;
    std::size_t chains = 100;
    std::string schedule = "linear";
    std::string out = "ais.json";
};

int run_ais(const GlobalOpts& g, const AisOpts& o) {
    const auto t0 = Clock::now();
    const rbmkit::RbmParams rbm = rbmkit::load_rbm(o.rbm);

    rbmkit::AisConfig cfg;
    cfg.n_temperatures = o.temps;
    cfg.n_chains = o.chains;
    cfg.schedule = o.schedule == "sigmoid" ? rbmkit::AisSchedule::sigmoid_spaced
                                           : rbmkit::AisSchedule::linear;
    cfg.seed = g.seed;
    const rbmkit::LogZEstimate est = rbmkit::ais_log_partition(rbm, cfg);

    ordered_json j;
    j["mean_log_z"] = est.mean_log_z;
    j["std_err_log_z"] = est.std_err_log_z;
    j["n_chains"] = est.n_chains;
    j["n_temperatures"] = o.temps;
    j["seed"] = g.seed;
    const std::string line = j.dump();
    std::cout << line << "\n";

    const std::string out_path = joined_path(g.out_dir, o.out);
    write_text(out_path, line + "\n");

    ordered_json flags;
    flags["rbm"] = o.rbm;
    flags["temps"] = o.temps;
    flags["chains"] = o.chains;
    flags["schedule"] = o.schedule;
    flags["out"] = o.out;
    flags["threads"] = g.threads;
    flags["out_dir"] = g.out_dir;
    write_manifest(g, "ais", flags, ms_since(t0), {out_path});
    return 0;
}

struct SampleOpts {
    std::string rbm;
    std::size_t n = 16;
    std::size_t k = 1000;
    std::string mode = "mean";
    std::size_t width = 0;  // 0 -> square layout if n_visible is square
    std::string out = "samples.pgm";
};

int run_sample(const GlobalOpts& g, const SampleOpts& o) {
    const auto t0 = Clock::now();
    const rbmkit::RbmParams rbm = rbmkit::load_rbm(o.rbm);
    if (o.n == 0) {
        throw rbmkit::ConfigError("sample needs --n >= 1");
    }

    std::size_t width = o.width;
    if (width == 0) {
        const auto side = static_cast<std::size_t>(
            std::lround(std::sqrt(static_cast<double>(rbm.n_visible))));
        width = side * side == rbm.n_visible ? side : rbm.n_visible;
    }
    if (width == 0 || rbm.n_visible % width != 0) {
        throw rbmkit::ConfigError("--width must divide n_visible");
    }
    const std::size_t height = rbm.n_visible / width;

    rbmkit::TransferConfig cfg;
    cfg.k = o.k;
    cfg.output_mode = parse_mode(o.mode);
    cfg.seed = g.seed;

    const rbmkit::Rng root(g.seed);
    std::vector<std::vector<double>> imgs(o.n);
    rbmkit::detail::parallel_for(o.n, [&](std::size_t i) {
        rbmkit::Rng rng = root.child(i);
        std::vector<double> v0(rbm.n_visible);
        for (double& v : v0) {  // fair-coin noise start
            v = rng.next_double() < 0.5 ? 1.0 : 0.0;
        }
        imgs[i] = rbmkit::transfer_instance(rbm, v0, cfg, rng);
    });

    const std::string out_path = joined_path(g.out_dir, o.out);
    const std::size_t columns = std::min<std::size_t>(8, o.n);
    rbmkit::write_pgm_grid(out_path, imgs, width, height, columns);

    std::cout << "sampled " << o.n << " chains for " << o.k << " steps ("
              << o.mode << ")\n";
    std::cout << "wrote " << out_path << "\n";

    ordered_json flags;
    flags["rbm"] = o.rbm;
    flags["n"] = o.n;
    flags["k"] = o.k;
    flags["mode"] = o.mode;
    flags["width"] = o.width;
    flags["out"] = o.out;
    flags["threads"] = g.threads;
    flags["out_dir"] = g.out_dir;
    write_manifest(g, "sample", flags, ms_since(t0), {out_path});
    return 0;
}

struct BenchOpts {
    std::string source = "builtin";
    std::size_t train_n = 3000;
    std::size_t test_n = 1000;
    double amplitude = 0.6;
    std::size_t blur_radius = 2;
    std::size_t hidden = rbmkit::kDeskRbmHidden;
    std::size_t rbm_epochs = 0;  // 0 -> calibrated default
    std::size_t clf_epochs = 0;
    std::vector<std::size_t> ks{1, 3};
    std::string mode = "mean";
    std::string out = "bench-report.json";
    std::string rbm_out = "bench-rbm.rbm";
    std::string clf_out = "bench-clf.mlp";
};

int run_bench(const GlobalOpts& g, const BenchOpts& o) {
    const auto t0 = Clock::now();
    rbmkit::DeskBenchConfig bcfg;
    bcfg.source = o.source;
    bcfg.train_n = o.train_n;
    bcfg.test_n = o.test_n;
    bcfg.background.amplitude = o.amplitude;
    bcfg.background.blur_radius = o.blur_radius;
    bcfg.seed = g.seed;
    const rbmkit::DeskBenchmark bench = rbmkit::make_desk_benchmark(bcfg);

    rbmkit::TrainConfig rcfg = rbmkit::desk_rbm_config(g.seed);
    if (o.rbm_epochs > 0) {
        rcfg.epochs = o.rbm_epochs;
    }
    auto [rbm, history] =
        rbmkit::train(bench.source_train, o.hidden, rcfg);

    rbmkit::ClfConfig ccfg = rbmkit::desk_clf_config(g.seed);
    if (o.clf_epochs > 0) {
        ccfg.epochs = o.clf_epochs;
    }
    const rbmkit::MlpParams clf = rbmkit::clf_train(bench.source_train, ccfg);

    rbmkit::TransferConfig xcfg;
    xcfg.output_mode = parse_mode(o.mode);
    xcfg.seed = g.seed;
    const rbmkit::TransferReport report = rbmkit::evaluate_pipeline(
        rbm, clf, bench.source_test, bench.target_test, o.ks, xcfg);

    ordered_json j;
    j["benchmark"] = ordered_json{{"source", o.source},
                                  {"train_n", o.train_n},
                                  {"test_n", o.test_n},
                                  {"amplitude", o.amplitude},
                                  {"blur_radius", o.blur_radius},
                                  {"hidden", o.hidden},
                                  {"rbm_epochs", rcfg.epochs},
                                  {"clf_epochs", ccfg.epochs}};
    j["report"] = report_json(report);

    const std::string json_path = joined_path(g.out_dir, o.out);
    const std::string rbm_path = joined_path(g.out_dir, o.rbm_out);
    const std::string clf_path = joined_path(g.out_dir, o.clf_out);
    write_text(json_path, j.dump(2) + "\n");
    rbmkit::save_rbm(rbm, rbm_path);
    rbmkit::save_mlp(clf, clf_path);

    std::cout << report_json(report).dump() << "\n";

    ordered_json flags;
    flags["source"] = o.source;
    flags["train_n"] = o.train_n;
    flags["test_n"] = o.test_n;
    flags["amplitude"] = o.amplitude;
    flags["blur_radius"] = o.blur_radius;
    flags["hidden"] = o.hidden;
    flags["rbm_epochs"] = rcfg.epochs;
    flags["clf_epochs"] = ccfg.epochs;
    flags["ks"] = o.ks;
    flags["mode"] = o.mode;
    flags["out"] = o.out;
    flags["threads"] = g.threads;
    flags["out_dir"] = g.out_dir;
    write_manifest(g, "bench", flags, ms_since(t0),
                   {json_path, rbm_path, clf_path});
    return 0;
}

int fail(const char* kind, const std::exception& e, int code) {
    const ordered_json j{{"error", kind}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return code;
}

template <typename Fn>
int run_guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const rbmkit::IoError& e) {
        return fail("io", e, kExitIo);
    } catch (const rbmkit::FormatError& e) {
        return fail("format", e, kExitFormat);
    } catch (const rbmkit::DimensionError& e) {
        return fail("dimension", e, kExitDimension);
    } catch (const rbmkit::ConfigError& e) {
        return fail("config", e, kExitConfig);
    } catch (const rbmkit::CapacityError& e) {
        return fail("capacity", e, kExitCapacity);
    } catch (const rbmkit::NumericError& e) {
        return fail("numeric", e, kExitNumeric);
    } catch (const std::exception& e) {
        return fail("internal", e, kExitInternal);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rbmkit: train RBMs, transfer datasets between domains "
                 "through Gibbs sampling, and score the resulting "
                 "classification lift"};
    app.footer(kExitTable);
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "master seed for every stochastic step")
        ->capture_default_str();
    app.add_option("--threads", g.threads,
                   "worker threads (wall time only; outputs never change)")
        ->capture_default_str();
    app.add_option("--out-dir", g.out_dir,
                   "directory for artifacts and manifests")
        ->capture_default_str();

    const auto mode_check = CLI::IsMember({"mean", "binary"});

    TrainRbmOpts tr;
    CLI::App* train_rbm =
        app.add_subcommand("train-rbm", "train an RBM on a dataset");
    train_rbm->fallthrough();
    train_rbm->add_option("--data", tr.data,
                          "IDX images path, or 'builtin' for the synthetic "
                          "source domain")
        ->capture_default_str();
    train_rbm->add_option("--hidden", tr.hidden, "hidden units")
        ->capture_default_str();
    train_rbm->add_option("--algo", tr.algo, "gradient estimator")
        ->check(CLI::IsMember({"cd", "pcd"}))
        ->capture_default_str();
    train_rbm->add_option("--k", tr.k, "Gibbs steps per estimate")
        ->capture_default_str();
    train_rbm->add_option("--lr", tr.lr, "learning rate")
        ->capture_default_str();
    train_rbm->add_option("--epochs", tr.epochs, "training epochs")
        ->capture_default_str();
    train_rbm->add_option("--batch", tr.batch, "minibatch size")
        ->capture_default_str();
    train_rbm->add_option("--wd", tr.wd, "L2 weight decay on W")
        ->capture_default_str();
    train_rbm->add_option("--momentum", tr.momentum, "gradient momentum")
        ->capture_default_str();
    train_rbm->add_option("--init-scale", tr.init_scale,
                          "uniform init range for W")
        ->capture_default_str();
    train_rbm->add_flag("--track-ll", tr.track_ll,
                        "record exact log-likelihood per epoch (tiny models "
                        "only)");
    train_rbm->add_option("--out", tr.out, "output model file")
        ->capture_default_str();
    train_rbm->add_option("--history", tr.history,
                          "per-epoch CSV path (default: model path with "
                          ".csv)");

    TrainClfOpts tc;
    CLI::App* train_clf = app.add_subcommand(
        "train-clf", "train the feed-forward classifier on a dataset");
    train_clf->fallthrough();
    train_clf->add_option("--data", tc.data,
                          "IDX images path, or 'builtin' for the synthetic "
                          "source domain")
        ->capture_default_str();
    train_clf->add_option("--hidden", tc.hidden, "hidden units")
        ->capture_default_str();
    train_clf->add_option("--lr", tc.lr, "learning rate")
        ->capture_default_str();
    train_clf->add_option("--epochs", tc.epochs, "training epochs")
        ->capture_default_str();
    train_clf->add_option("--batch", tc.batch, "minibatch size")
        ->capture_default_str();
    train_clf->add_option("--out", tc.out, "output model file")
        ->capture_default_str();

    TransferOpts tx;
    CLI::App* transfer = app.add_subcommand(
        "transfer", "cast a dataset through an RBM's Gibbs chain");
    transfer->fallthrough();
    transfer->add_option("--rbm", tx.rbm, "trained RBM file")->required();
    transfer->add_option("--in", tx.in, "IDX images path to transfer")
        ->required();
    transfer->add_option("--k", tx.k, "Gibbs steps")->capture_default_str();
    transfer->add_option("--mode", tx.mode,
                         "output: visible means or a binary sample")
        ->check(mode_check)
        ->capture_default_str();
    transfer->add_option("--out", tx.out, "output IDX images path")
        ->capture_default_str();
    transfer->add_option("--grid", tx.grid,
                         "optional PGM grid of before/after pairs");

    EvalOpts ev;
    CLI::App* eval_cmd = app.add_subcommand(
        "eval", "score source, raw-target and transferred-target accuracy");
    eval_cmd->fallthrough();
    eval_cmd->add_option("--rbm", ev.rbm, "trained RBM file")->required();
    eval_cmd->add_option("--clf", ev.clf, "source-trained classifier file")
        ->required();
    eval_cmd->add_option("--source", ev.source, "source test IDX images path")
        ->required();
    eval_cmd->add_option("--target", ev.target, "target test IDX images path")
        ->required();
    eval_cmd->add_option("--ks", ev.ks, "comma-separated Gibbs step counts")
        ->delimiter(',')
        ->capture_default_str();
    eval_cmd->add_option("--mode", ev.mode, "transfer output mode")
        ->check(mode_check)
        ->capture_default_str();
    eval_cmd->add_option("--oracle", ev.oracle,
                         "optional target-trained classifier for the "
                         "reference row");
    eval_cmd->add_option("--out", ev.out, "report JSON path")
        ->capture_default_str();
    eval_cmd->add_option("--csv", ev.csv, "report CSV path")
        ->capture_default_str();

    AisOpts ai;
    CLI::App* ais = app.add_subcommand(
        "ais", "estimate log Z by annealed importance sampling");
    ais->fallthrough();
    ais->add_option("--rbm", ai.rbm, "trained RBM file")->required();
    ais->add_option("--temps", ai.temps, "ladder size")->capture_default_str();
    ais->add_option("--chains", ai.chains, "independent AIS chains")
        ->capture_default_str();
    ais->add_option("--schedule", ai.schedule, "inverse-temperature spacing")
        ->check(CLI::IsMember({"linear", "sigmoid"}))
        ->capture_default_str();
    ais->add_option("--out", ai.out, "JSON record path")
        ->capture_default_str();

    SampleOpts sm;
    CLI::App* sample = app.add_subcommand(
        "sample", "run free Gibbs chains from noise and write an image grid");
    sample->fallthrough();
    sample->add_option("--rbm", sm.rbm, "trained RBM file")->required();
    sample->add_option("--n", sm.n, "number of chains")->capture_default_str();
    sample->add_option("--k", sm.k, "Gibbs steps per chain")
        ->capture_default_str();
    sample->add_option("--mode", sm.mode, "grid shows means or binary samples")
        ->check(mode_check)
        ->capture_default_str();
    sample->add_option("--width", sm.width,
                       "image width (default: square layout)");
    sample->add_option("--out", sm.out, "output PGM path")
        ->capture_default_str();

    BenchOpts bn;
    CLI::App* bench = app.add_subcommand(
        "bench", "build the two-domain benchmark and run the full pipeline");
    bench->fallthrough();
    bench->add_option("--source", bn.source,
                      "'builtin' glyphs or a directory of IDX files")
        ->capture_default_str();
    bench->add_option("--train-n", bn.train_n, "clean training images")
        ->capture_default_str();
    bench->add_option("--test-n", bn.test_n, "clean test images")
        ->capture_default_str();
    bench->add_option("--amplitude", bn.amplitude, "background strength")
        ->capture_default_str();
    bench->add_option("--blur-radius", bn.blur_radius,
                      "background smoothing radius")
        ->capture_default_str();
    bench->add_option("--hidden", bn.hidden, "RBM hidden units")
        ->capture_default_str();
    bench->add_option("--rbm-epochs", bn.rbm_epochs,
                      "override calibrated RBM epochs (smoke runs)");
    bench->add_option("--clf-epochs", bn.clf_epochs,
                      "override calibrated classifier epochs (smoke runs)");
    bench->add_option("--ks", bn.ks, "comma-separated Gibbs step counts")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--mode", bn.mode, "transfer output mode")
        ->check(mode_check)
        ->capture_default_str();
    bench->add_option("--out", bn.out, "report JSON path")
        ->capture_default_str();
    bench->add_option("--rbm-out", bn.rbm_out, "trained RBM path")
        ->capture_default_str();
    bench->add_option("--clf-out", bn.clf_out, "trained classifier path")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help and friends
        }
        const ordered_json j{{"error", "usage"}, {"message", e.what()}};
        std::cerr << j.dump() << "\n";
        return kExitUsage;
    }

    rbmkit::set_max_threads(g.threads);
    return run_guarded([&]() -> int {
        std::error_code ec;
        std::filesystem::create_directories(g.out_dir, ec);
        if (ec) {
            throw rbmkit::IoError("cannot create out-dir '" + g.out_dir +
                                  "': " + ec.message());
        }
        if (train_rbm->parsed()) {
            return run_train_rbm(g, tr);
        }
        if (train_clf->parsed()) {
            return run_train_clf(g, tc);
        }
        if (transfer->parsed()) {
            return run_transfer(g, tx);
        }
        if (eval_cmd->parsed()) {
            return run_eval(g, ev);
        }
        if (ais->parsed()) {
            return run_ais(g, ai);
        }
        if (sample->parsed()) {
            return run_sample(g, sm);
        }
        return run_bench(g, bn);
    });
}
