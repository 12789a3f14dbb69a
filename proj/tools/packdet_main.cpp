#include "packdet/classifiers.hpp"
#include "packdet/corpus.hpp"
#include "packdet/digest.hpp"
#include "packdet/drift.hpp"
#include "packdet/error.hpp"
#include "packdet/feature_analysis.hpp"
#include "packdet/labeling.hpp"
#include "packdet/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace packdet;

namespace {

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

struct AlgoFlags {
    std::string algo = "GBDT";
    bool preset_only = false;
    std::string preprocess;
    int pca = 0;
    uint64_t seed = 0;
    int k = 0;
    std::string loss;
    double l2 = -1;
    std::string criterion;
    int min_leaf = 0;
    int max_depth = -1;
    int estimators = 0;
    double learning_rate = -1;
    std::string layers;
    std::string activation;
    std::string kernel;
    double svm_c = -1;
    double gamma = -1;
    int max_iter = 0;
};

void add_algo_flags(CLI::App* cmd, AlgoFlags& f) {
    cmd->add_option("--algo", f.algo, "classifier family (KNN, GNBC, BNBC, LR, LSVM, DT, RF, GBDT, MLP, KSVM, DL85)");
    cmd->add_flag("--preset", f.preset_only,
                  "use the family's shipped configuration, ignoring hyperparameter flags");
    cmd->add_option("--preprocess", f.preprocess, "none|boolean|minmax|zscore");
    cmd->add_option("--pca", f.pca, "project onto this many principal components");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--k", f.k, "neighbors (KNN)");
    cmd->add_option("--loss", f.loss, "hinge|squared_hinge (LR, LSVM)");
    cmd->add_option("--l2", f.l2, "regularization weight");
    cmd->add_option("--criterion", f.criterion, "entropy|gini (trees)");
    cmd->add_option("--min-leaf", f.min_leaf, "minimum samples per leaf");
    cmd->add_option("--max-depth", f.max_depth, "tree depth limit (0 = unlimited)");
    cmd->add_option("--estimators", f.estimators, "ensemble size (RF, GBDT)");
    cmd->add_option("--learning-rate", f.learning_rate, "GBDT shrinkage / MLP step size");
    cmd->add_option("--layers", f.layers, "hidden layer sizes, e.g. 50,100 (MLP)");
    cmd->add_option("--activation", f.activation, "identity|tanh|logistic|relu (MLP)");
    cmd->add_option("--kernel", f.kernel, "linear|polynomial|rbf|sigmoid (KSVM)");
    cmd->add_option("--C", f.svm_c, "soft-margin parameter (KSVM)");
    cmd->add_option("--gamma", f.gamma, "kernel coefficient (KSVM; 0 = scale)");
    cmd->add_option("--max-iter", f.max_iter, "solver iteration cap");
}

AlgoConfig config_from_flags(const AlgoFlags& f) {
    AlgoConfig c = preset(family_from_name(f.algo));
    c.seed = f.seed;
    if (f.preset_only) return c;
    if (!f.preprocess.empty()) c.preprocessing = preprocessing_from_name(f.preprocess);
    if (f.pca > 0) c.pca_components = f.pca;
    if (f.k > 0) c.k_neighbors = f.k;
    if (!f.loss.empty()) c.loss = f.loss == "hinge" ? Loss::hinge : Loss::squared_hinge;
    if (f.l2 >= 0) c.regularization = f.l2;
    if (!f.criterion.empty()) {
        c.criterion = f.criterion == "gini" ? Criterion::gini : Criterion::entropy;
    }
    if (f.min_leaf > 0) c.min_leaf = f.min_leaf;
    if (f.max_depth >= 0) c.max_depth = f.max_depth;
    if (f.estimators > 0) c.n_estimators = f.estimators;
    if (f.learning_rate >= 0) c.learning_rate = f.learning_rate;
    if (!f.layers.empty()) c.hidden_layers = parse_ints(f.layers);
    if (!f.activation.empty()) {
        if (f.activation == "identity") c.activation = Activation::identity;
        else if (f.activation == "tanh") c.activation = Activation::tanh_act;
        else if (f.activation == "logistic") c.activation = Activation::logistic_act;
        else if (f.activation == "relu") c.activation = Activation::relu;
        else raise(Errc::bad_argument, "unknown activation: " + f.activation);
    }
    if (!f.kernel.empty()) {
        if (f.kernel == "linear") c.kernel = Kernel::linear;
        else if (f.kernel == "polynomial") c.kernel = Kernel::polynomial;
        else if (f.kernel == "rbf") c.kernel = Kernel::rbf;
        else if (f.kernel == "sigmoid") c.kernel = Kernel::sigmoid;
        else raise(Errc::bad_argument, "unknown kernel: " + f.kernel);
    }
    if (f.svm_c > 0) c.svm_c = f.svm_c;
    if (f.gamma >= 0) c.gamma = f.gamma;
    if (f.max_iter > 0) c.max_iter = f.max_iter;
    return c;
}

Dataset labeled_dataset(const std::string& store_path) {
    corpus::FeatureStore store = corpus::load_store(store_path);
    Dataset d = corpus::to_dataset(store);
    std::vector<size_t> keep;
    for (size_t i = 0; i < d.size(); ++i) {
        if (d.labels[i] >= 0) keep.push_back(i);
    }
    if (keep.size() != d.size()) {
        std::cerr << "note: ignoring " << d.size() - keep.size() << " unlabeled rows\n";
        d = d.select_rows(keep);
    }
    if (d.size() == 0) raise(Errc::empty_matrix, "store has no labeled rows");
    return d;
}

std::string metrics_row_id(const std::string& cmd, uint64_t seed) {
    return cmd + "-s" + std::to_string(seed);
}

void append_metric_records(std::vector<MetricRecord>& records, const std::string& run_id,
                           const std::string& family, const std::string& split,
                           const MetricsReport& m) {
    auto put = [&](const char* name, double v) {
        records.push_back({run_id, family, split, name, v});
    };
    put("precision_p", m.precision_p);
    put("precision_np", m.precision_np);
    put("recall_p", m.recall_p);
    put("recall_np", m.recall_np);
    put("fscore_p", m.fscore_p);
    put("fscore_np", m.fscore_np);
    put("precision_wa", m.precision_wa);
    put("recall_wa", m.recall_wa);
    put("fscore_wa", m.fscore_wa);
    put("accuracy", m.accuracy);
}

TextTable metrics_table(const std::string& family, const MetricsReport& m) {
    TextTable t;
    t.header = {"classifier", "precision_p", "precision_np", "recall_p", "recall_np",
                "fscore_p",   "fscore_np",   "precision_wa", "recall_wa", "fscore_wa",
                "accuracy"};
    t.add_row({family, format_number(m.precision_p, 4), format_number(m.precision_np, 4),
               format_number(m.recall_p, 4), format_number(m.recall_np, 4),
               format_number(m.fscore_p, 4), format_number(m.fscore_np, 4),
               format_number(m.precision_wa, 4), format_number(m.recall_wa, 4),
               format_number(m.fscore_wa, 4), format_number(m.accuracy, 4)});
    return t;
}

std::string ratio_text(const TimeAccuracyRatio& r) {
    if (r.unchanged) return "0 (unchanged)";
    if (r.improved) return "(-)" + format_number(r.magnitude(), 6);
    return format_number(r.value, 6);
}

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& scenario_name, size_t count, uint64_t seed,
              const std::string& out_dir) {
    fs::create_directories(out_dir);
    corpus::Scenario scenario = corpus::make_scenario(scenario_name, count, seed);

    std::vector<fs::path> written;
    try {
        std::vector<DetectorVote> truth;
        size_t index = 0;
        for (const corpus::CorpusSample& sample : scenario.samples) {
            corpus::SynthPe pe = corpus::synth_pe(sample.profile, sample.seed);
            char name[32];
            std::snprintf(name, sizeof(name), "sample_%05zu.exe", index++);
            fs::path path = fs::path(out_dir) / name;
            std::ofstream out(path, std::ios::binary);
            if (!out) raise(Errc::bad_argument, "cannot write " + path.string());
            out.write(reinterpret_cast<const char*>(pe.bytes.data()),
                      static_cast<std::streamsize>(pe.bytes.size()));
            written.push_back(path);

            DetectorVote vote;
            vote.detector_name = "generator";
            vote.sample_digest = sha256_hex(pe.bytes);
            vote.verdict =
                sample.profile.class_hint == corpus::SynthProfile::ClassHint::packed
                    ? Verdict::packed
                    : Verdict::not_packed;
            truth.push_back(std::move(vote));
        }
        corpus::save_manifest(corpus::manifest_for(scenario, seed),
                              (fs::path(out_dir) / "manifest.json").string());
        written.push_back(fs::path(out_dir) / "manifest.json");
        write_vote_file((fs::path(out_dir) / "truth.tsv").string(), truth);
        std::cout << "wrote " << scenario.samples.size() << " samples to " << out_dir << "\n";
        return 0;
    } catch (...) {
        for (const fs::path& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        throw;
    }
}

int cmd_extract(const std::string& in_dir, const std::string& out_path) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".exe") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) raise(Errc::bad_argument, "no .exe files under " + in_dir);

    corpus::FeatureStore store;
    size_t skipped = 0;
    for (const fs::path& path : files) {
        std::ifstream in(path, std::ios::binary);
        std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
        try {
            pe::PeFile pe = pe::parse_pe(bytes);
            FeatureVector v = extract_all(pe, pe.coff_header.time_date_stamp);
            store.rows.push_back(corpus::row_from_vector(v));
        } catch (const Error& e) {
            ++skipped;
            std::cerr << "warning: " << path.filename().string() << ": " << e.what() << "\n";
        }
    }
    if (store.rows.empty()) raise(Errc::bad_argument, "no sample could be parsed");
    corpus::save_store(store, out_path);
    std::cout << "extracted " << store.rows.size() << " samples";
    if (skipped) std::cout << " (" << skipped << " skipped)";
    std::cout << " -> " << out_path << "\n";
    return 0;
}

int cmd_label(const std::string& store_path, const std::string& pe_dir,
              const std::vector<std::string>& vote_paths, int threshold,
              const std::string& out_path) {
    corpus::FeatureStore store = corpus::load_store(store_path);

    std::map<std::string, std::vector<DetectorVote>> votes;
    for (const std::string& path : vote_paths) {
        for (DetectorVote& v : read_vote_file(path)) {
            votes[v.sample_digest].push_back(std::move(v));
        }
    }
    if (!pe_dir.empty()) {
        for (const auto& entry : fs::directory_iterator(pe_dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".exe") continue;
            std::ifstream in(entry.path(), std::ios::binary);
            std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
            try {
                pe::PeFile pe = pe::parse_pe(bytes);
                FeatureVector v = extract_all(pe, pe.coff_header.time_date_stamp);
                DetectorVote vote = heuristic_detect(pe, v);
                votes[vote.sample_digest].push_back(std::move(vote));
            } catch (const Error&) {
                // unparsable files simply cast no heuristic vote
            }
        }
    }

    size_t labeled = 0, unlabeled = 0;
    for (corpus::StoreRow& row : store.rows) {
        auto it = votes.find(row.digest);
        if (it == votes.end()) {
            ++unlabeled;
            continue;
        }
        try {
            GroundTruth gt = majority_vote(it->second, threshold);
            row.label = gt.label;
            ++labeled;
        } catch (const Error& e) {
            if (e.code() != Errc::no_votes) throw;
            ++unlabeled;
        }
    }
    corpus::save_store(store, out_path);
    std::cout << "labeled " << labeled << " samples";
    if (unlabeled) std::cout << " (" << unlabeled << " without votes)";
    std::cout << " -> " << out_path << "\n";
    return 0;
}

int cmd_train(const AlgoFlags& flags, const std::string& store_path,
              const std::string& features_csv, const std::string& out_path) {
    AlgoConfig config = config_from_flags(flags);
    Dataset data = labeled_dataset(store_path);
    if (!features_csv.empty()) data = data.select_features(parse_ints(features_csv));

    Model model = fit(config, data);
    if (!config.in_grid()) {
        std::cerr << "warning: configuration is outside the tuning grid\n";
        model.warning = model.warning.empty() ? "out-of-grid config"
                                              : model.warning + "; out-of-grid config";
    }
    if (!model.warning.empty() && model.warning != "out-of-grid config") {
        std::cerr << "warning: " << model.warning << "\n";
    }
    save_model(model, out_path);
    std::cout << family_name(model.family) << " trained on " << data.size() << " samples in "
              << format_number(model.train_seconds, 4) << " s -> " << out_path << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& store_path,
                const std::string& out_path) {
    Model model = load_model(model_path);
    corpus::FeatureStore store = corpus::load_store(store_path);
    Dataset data = corpus::to_dataset(store);
    if (model.feature_ids != data.feature_ids) data = data.select_features(model.feature_ids);

    std::vector<int> preds = predict_batch(model, data.x);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) raise(Errc::bad_argument, "cannot write " + out_path);
    out << "digest,prediction\n";
    for (size_t i = 0; i < preds.size(); ++i) {
        out << data.digests[i] << ',' << preds[i] << '\n';
    }
    std::cout << "predicted " << preds.size() << " samples -> " << out_path << "\n";
    return 0;
}

int cmd_evaluate(const AlgoFlags& flags, const std::string& store_path,
                 const std::string& model_path, size_t folds, const std::string& out_path) {
    Dataset data = labeled_dataset(store_path);
    std::string run_id = metrics_row_id("evaluate", flags.seed);
    std::vector<MetricRecord> records;

    if (!model_path.empty()) {
        Model model = load_model(model_path);
        Dataset eval = data;
        if (model.feature_ids != data.feature_ids) eval = data.select_features(model.feature_ids);
        MetricsReport m = compute_metrics(predict_batch(model, eval.x), eval.labels);
        append_metric_records(records, run_id, family_name(model.family), "holdout", m);
        std::cout << render_table(metrics_table(family_name(model.family), m));
        if (!out_path.empty()) write_records_csv(out_path, records);
        return 0;
    }

    AlgoConfig config = config_from_flags(flags);
    CvOutcome cv = cross_validate(config, data, folds, flags.seed);
    MetricsReport mean = mean_metrics(cv.fold_metrics);
    for (size_t f = 0; f < cv.fold_metrics.size(); ++f) {
        append_metric_records(records, run_id, family_name(config.family),
                              "fold" + std::to_string(f), cv.fold_metrics[f]);
    }
    append_metric_records(records, run_id, family_name(config.family), "cv-mean", mean);
    std::cout << render_table(metrics_table(family_name(config.family), mean));
    if (!out_path.empty()) write_records_csv(out_path, records);
    return 0;
}

int cmd_tune(const AlgoFlags& flags, const std::string& store_path, bool full, size_t folds,
             const std::string& out_path) {
    Dataset data = labeled_dataset(store_path);
    std::vector<AlgoConfig> grid = default_grid(family_from_name(flags.algo), full);
    for (AlgoConfig& c : grid) c.seed = flags.seed;
    GridSearchResult result = grid_search(grid, data, folds, flags.seed);

    TextTable t;
    t.header = {"cell", "preprocessing", "summary", "accuracy", "train_s"};
    std::vector<MetricRecord> records;
    std::string run_id = metrics_row_id("tune", flags.seed);
    for (size_t i = 0; i < result.cells.size(); ++i) {
        const GridCell& cell = result.cells[i];
        std::string tag = std::to_string(i) + (i == result.best_index ? "*" : "");
        std::string summary;
        const AlgoConfig& c = cell.config;
        switch (c.family) {
            case Family::knn: summary = "k=" + std::to_string(c.k_neighbors); break;
            case Family::lr:
            case Family::lsvm:
                summary = c.loss == Loss::hinge ? "hinge" : "squared_hinge";
                break;
            case Family::dt:
                summary = std::string(c.criterion == Criterion::gini ? "gini" : "entropy") +
                          " leaf=" + std::to_string(c.min_leaf) +
                          " depth=" + std::to_string(c.max_depth);
                break;
            case Family::rf:
            case Family::gbdt:
                summary = "estimators=" + std::to_string(c.n_estimators);
                break;
            case Family::mlp: {
                summary = "layers=";
                for (size_t l = 0; l < c.hidden_layers.size(); ++l) {
                    if (l) summary += "x";
                    summary += std::to_string(c.hidden_layers[l]);
                }
                break;
            }
            case Family::ksvm:
                summary = "kernel=" + std::to_string(static_cast<int>(c.kernel));
                break;
            default: summary = "-"; break;
        }
        if (cell.failed) {
            t.add_row({tag, preprocessing_name(c.preprocessing), summary, "failed", cell.error});
            continue;
        }
        t.add_row({tag, preprocessing_name(c.preprocessing), summary,
                   format_number(cell.mean_accuracy, 4),
                   format_number(cell.mean_train_seconds, 4)});
        records.push_back({run_id, family_name(c.family), "cell" + std::to_string(i), "accuracy",
                           cell.mean_accuracy});
        records.push_back({run_id, family_name(c.family), "cell" + std::to_string(i),
                           "train_seconds", cell.mean_train_seconds});
    }
    std::cout << render_table(t);
    const GridCell& best = result.cells[result.best_index];
    std::cout << "best cell " << result.best_index << ": accuracy "
              << format_number(best.mean_accuracy, 4) << ", preprocessing "
              << preprocessing_name(best.config.preprocessing) << "\n";
    if (!out_path.empty()) write_records_csv(out_path, records);
    return 0;
}

int cmd_select(const AlgoFlags& flags, const std::string& store_path, const std::string& method,
               const std::string& thresholds_csv, const std::string& schedule_csv,
               double max_drop, size_t folds, const std::string& out_path) {
    Dataset data = labeled_dataset(store_path);
    AlgoConfig config = config_from_flags(flags);
    std::string run_id = metrics_row_id("select", flags.seed);

    std::vector<SelectionReport> reports;
    std::vector<std::string> notes;
    if (method == "threshold") {
        Model model = fit(config, data);
        std::vector<double> thresholds = thresholds_csv.empty()
                                             ? std::vector<double>{0.0, 0.001, 0.005, 0.01, 0.02}
                                             : parse_doubles(thresholds_csv);
        reports = select_by_threshold(model, data, thresholds, max_drop, folds, flags.seed,
                                      &notes);
    } else if (method == "iterative") {
        std::vector<int> schedule = schedule_csv.empty() ? std::vector<int>{110, 90, 70, 50}
                                                         : parse_ints(schedule_csv);
        reports.push_back(iterative_selection(config, data, schedule, folds, flags.seed));
    } else {
        raise(Errc::bad_argument, "method must be threshold or iterative");
    }

    TextTable t;
    t.header = {"classifier", "selection", "best #features", "old accuracy", "new accuracy",
                "old time",   "new time",  "ratio"};
    std::vector<MetricRecord> records;
    for (size_t i = 0; i < reports.size(); ++i) {
        const SelectionReport& r = reports[i];
        t.add_row({family_name(config.family), r.method, std::to_string(r.retained.size()),
                   format_number(r.old_accuracy, 4), format_number(r.new_accuracy, 4),
                   format_number(r.old_time, 4), format_number(r.new_time, 4),
                   ratio_text(r.ratio)});
        std::string split = "selection" + std::to_string(i);
        records.push_back({run_id, family_name(config.family), split, "n_features",
                           static_cast<double>(r.retained.size())});
        records.push_back({run_id, family_name(config.family), split, "old_accuracy",
                           r.old_accuracy});
        records.push_back({run_id, family_name(config.family), split, "new_accuracy",
                           r.new_accuracy});
        records.push_back({run_id, family_name(config.family), split, "ratio",
                           r.ratio.unchanged ? 0.0 : r.ratio.value});
    }
    std::cout << render_table(t);
    for (const std::string& note : notes) std::cout << "note: " << note << "\n";
    if (!reports.empty()) {
        std::cout << "retained features:";
        for (int id : reports.back().retained) std::cout << ' ' << id;
        std::cout << "\n";
    }
    if (!out_path.empty()) write_records_csv(out_path, records);
    return 0;
}

int cmd_pca_sweep(const AlgoFlags& flags, const std::string& store_path, const std::string& ks_csv,
                  size_t folds, const std::string& out_path) {
    Dataset data = labeled_dataset(store_path);
    AlgoConfig config = config_from_flags(flags);
    std::vector<int> ks = ks_csv.empty() ? std::vector<int>{5, 10, 20, 40, 80, 119}
                                         : parse_ints(ks_csv);
    PcaSweepReport report = pca_sweep(config, data, ks, folds, flags.seed);

    TextTable t;
    t.header = {"classifier", "#components", "old accuracy", "new accuracy", "old time",
                "new time",   "ratio"};
    std::vector<MetricRecord> records;
    std::string run_id = metrics_row_id("pca-sweep", flags.seed);
    for (size_t i = 0; i < report.rows.size(); ++i) {
        const PcaSweepRow& row = report.rows[i];
        std::string k = std::to_string(row.k) + (i == report.best_index ? "*" : "");
        t.add_row({family_name(config.family), k, format_number(report.old_accuracy, 4),
                   format_number(row.accuracy, 4), format_number(report.old_time, 4),
                   format_number(row.train_seconds, 4),
                   i == report.best_index ? ratio_text(report.best_ratio) : ""});
        records.push_back({run_id, family_name(config.family), "k" + std::to_string(row.k),
                           "accuracy", row.accuracy});
        records.push_back({run_id, family_name(config.family), "k" + std::to_string(row.k),
                           "train_seconds", row.train_seconds});
    }
    std::cout << render_table(t);
    if (!out_path.empty()) write_records_csv(out_path, records);
    return 0;
}

int cmd_drift(const AlgoFlags& flags, const std::string& train_path, const std::string& chrono_path,
              const std::string& train_range, int periods, const std::string& thresholds_csv,
              const std::string& out_path) {
    Dataset train = labeled_dataset(train_path);
    Dataset chrono;
    if (!chrono_path.empty()) {
        chrono = labeled_dataset(chrono_path);
    } else if (!train_range.empty()) {
        // one combined store: rows inside the range train, later rows drift
        TimeRange range = parse_time_range(train_range);
        std::vector<size_t> in_range, after;
        for (size_t i = 0; i < train.size(); ++i) {
            if (range.contains(train.timestamps[i])) in_range.push_back(i);
            else if (train.timestamps[i] > range.end) after.push_back(i);
        }
        if (in_range.empty() || after.empty()) {
            raise(Errc::bad_argument, "train range leaves an empty training or drift side");
        }
        chrono = train.select_rows(after);
        train = train.select_rows(in_range);
    } else {
        raise(Errc::bad_argument, "drift needs --chrono-store or --train-range");
    }
    AlgoConfig config = config_from_flags(flags);
    std::vector<double> thresholds =
        thresholds_csv.empty() ? std::vector<double>{0.92, 0.95, 0.97}
                               : parse_doubles(thresholds_csv);

    Model model = fit(config, train);

    // split the chronological store into equal time windows
    int64_t lo = chrono.min_timestamp(), hi = chrono.max_timestamp();
    if (periods < 1) raise(Errc::bad_argument, "periods must be >= 1");
    std::vector<Dataset> period_sets;
    int64_t span = hi - lo + 1;
    for (int p = 0; p < periods; ++p) {
        int64_t begin = lo + span * p / periods;
        int64_t end = lo + span * (p + 1) / periods - 1;
        std::vector<size_t> idx;
        for (size_t i = 0; i < chrono.size(); ++i) {
            if (chrono.timestamps[i] >= begin && chrono.timestamps[i] <= end) idx.push_back(i);
        }
        if (idx.empty()) raise(Errc::bad_argument, "period " + std::to_string(p + 1) + " is empty");
        period_sets.push_back(chrono.select_rows(idx));
    }

    DriftReport report = chronological_eval(model, train, period_sets, thresholds);

    TextTable decay;
    decay.header = {"classifier", "baseline"};
    for (int p = 1; p <= periods; ++p) decay.header.push_back("period " + std::to_string(p));
    std::vector<std::string> row = {family_name(config.family),
                                    format_number(report.baseline.fscore_wa, 4)};
    for (const PeriodMetrics& pm : report.periods) {
        row.push_back(format_number(pm.metrics.fscore_wa, 4));
    }
    decay.add_row(row);
    std::cout << render_table(decay);

    TextTable econ;
    econ.header = {"classifier", "train time [s]"};
    for (const ThresholdEconomics& e : report.economics) {
        econ.header.push_back("uptime " + format_number(e.threshold, 3) + " [s]");
        econ.header.push_back("ratio " + format_number(e.threshold, 3));
    }
    std::vector<std::string> erow = {family_name(config.family),
                                     format_number(report.train_seconds, 4)};
    for (const ThresholdEconomics& e : report.economics) {
        erow.push_back(e.uptime_seconds ? format_number(*e.uptime_seconds, 8) : "N/A");
        erow.push_back(e.ratio ? format_number(*e.ratio, 8) : "N/A");
    }
    econ.add_row(erow);
    std::cout << render_table(econ);

    std::vector<MetricRecord> records;
    std::string run_id = metrics_row_id("drift", flags.seed);
    append_metric_records(records, run_id, family_name(config.family), "baseline",
                          report.baseline);
    for (const PeriodMetrics& pm : report.periods) {
        append_metric_records(records, run_id, family_name(config.family),
                              "period" + std::to_string(pm.period_id), pm.metrics);
    }
    records.push_back({run_id, family_name(config.family), "fit", "decay_a",
                       report.decay_coeffs[0]});
    records.push_back({run_id, family_name(config.family), "fit", "decay_b",
                       report.decay_coeffs[1]});
    records.push_back({run_id, family_name(config.family), "fit", "decay_c",
                       report.decay_coeffs[2]});
    for (const ThresholdEconomics& e : report.economics) {
        std::string split = "threshold" + format_number(e.threshold, 3);
        records.push_back({run_id, family_name(config.family), split, "uptime_seconds",
                           e.uptime_seconds ? *e.uptime_seconds : -1.0});
        records.push_back({run_id, family_name(config.family), split, "economics_ratio",
                           e.ratio ? *e.ratio : -1.0});
    }
    if (!out_path.empty()) write_records_csv(out_path, records);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"packing-detection toolkit: synthetic corpora, static PE features, "
                 "classifier training and drift economics"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic PE corpus");
    std::string scenario = "default", out_dir;
    size_t count = 200;
    uint64_t synth_seed = 0;
    synth->add_option("--scenario", scenario, "default|hard|drift");
    synth->add_option("--count", count, "sample count (drift: baseline size)");
    synth->add_option("--seed", synth_seed, "random seed");
    synth->add_option("--out", out_dir, "output directory")->required();

    // extract
    auto* extract = app.add_subcommand("extract", "extract features from a directory of PEs");
    std::string extract_in, extract_out;
    extract->add_option("--in", extract_in, "directory of .exe files")->required();
    extract->add_option("--out", extract_out, "feature store path")->required();

    // label
    auto* label = app.add_subcommand("label", "attach majority-vote labels to a store");
    std::string label_store, label_pe_dir, label_out;
    std::vector<std::string> label_votes;
    int label_threshold = 0;
    label->add_option("--store", label_store, "feature store")->required();
    label->add_option("--pe-dir", label_pe_dir, "PE directory for the built-in heuristic vote");
    label->add_option("--votes", label_votes, "external vote file (repeatable)");
    label->add_option("--threshold", label_threshold, "packed-vote threshold (0 = majority)");
    label->add_option("--out", label_out, "labeled store path")->required();

    // shared algorithm flags
    AlgoFlags train_flags, eval_flags, tune_flags, select_flags, pca_flags, drift_flags;

    auto* train = app.add_subcommand("train", "train one classifier");
    std::string train_store, train_features, train_out;
    train->add_option("--store", train_store, "labeled feature store")->required();
    train->add_option("--features", train_features, "comma-separated feature ids to keep");
    train->add_option("--out", train_out, "model path")->required();
    add_algo_flags(train, train_flags);

    auto* predict_cmd = app.add_subcommand("predict", "apply a trained model to a store");
    std::string predict_model, predict_store, predict_out;
    predict_cmd->add_option("--model", predict_model, "model path")->required();
    predict_cmd->add_option("--store", predict_store, "feature store")->required();
    predict_cmd->add_option("--out", predict_out, "predictions path")->required();

    auto* evaluate = app.add_subcommand("evaluate", "cross-validate a family or score a model");
    std::string eval_store, eval_model, eval_out;
    size_t eval_folds = 10;
    evaluate->add_option("--store", eval_store, "labeled feature store")->required();
    evaluate->add_option("--model", eval_model, "trained model (skips cross-validation)");
    evaluate->add_option("--folds", eval_folds, "cross-validation folds");
    evaluate->add_option("--out", eval_out, "metric records path");
    add_algo_flags(evaluate, eval_flags);

    auto* tune = app.add_subcommand("tune", "grid-search one family");
    std::string tune_store, tune_out;
    size_t tune_folds = 10;
    bool tune_full = false;
    tune->add_option("--store", tune_store, "labeled feature store")->required();
    tune->add_option("--folds", tune_folds, "cross-validation folds");
    tune->add_flag("--full-grid", tune_full, "span the full tuning ranges");
    tune->add_option("--out", tune_out, "grid records path");
    add_algo_flags(tune, tune_flags);

    auto* select = app.add_subcommand("select", "feature selection report");
    std::string select_store, select_method = "threshold", select_thresholds, select_schedule,
                select_out;
    double select_max_drop = 0.05;
    size_t select_folds = 10;
    select->add_option("--store", select_store, "labeled feature store")->required();
    select->add_option("--method", select_method, "threshold|iterative");
    select->add_option("--thresholds", select_thresholds, "importance cutoffs, ascending");
    select->add_option("--schedule", select_schedule, "iterative k schedule, e.g. 110,90,70,50");
    select->add_option("--max-drop", select_max_drop, "largest acceptable accuracy drop");
    select->add_option("--folds", select_folds, "cross-validation folds");
    select->add_option("--out", select_out, "selection records path");
    add_algo_flags(select, select_flags);

    auto* pca_cmd = app.add_subcommand("pca-sweep", "accuracy/time against component count");
    std::string pca_store, pca_ks, pca_out;
    size_t pca_folds = 10;
    pca_cmd->add_option("--store", pca_store, "labeled feature store")->required();
    pca_cmd->add_option("--ks", pca_ks, "component counts, e.g. 5,10,20");
    pca_cmd->add_option("--folds", pca_folds, "cross-validation folds");
    pca_cmd->add_option("--out", pca_out, "sweep records path");
    add_algo_flags(pca_cmd, pca_flags);

    auto* drift = app.add_subcommand("drift", "chronological decay and retraining economics");
    std::string drift_train, drift_chrono, drift_range, drift_thresholds, drift_out;
    int drift_periods = 4;
    drift->add_option("--train-store", drift_train, "labeled training store")->required();
    drift->add_option("--chrono-store", drift_chrono, "labeled later-period store");
    drift->add_option("--train-range", drift_range,
                      "split the training store instead: <begin>..<end> trains, later rows drift");
    drift->add_option("--periods", drift_periods, "number of equal time windows");
    drift->add_option("--thresholds", drift_thresholds, "F-score thresholds, e.g. 0.92,0.95");
    drift->add_option("--out", drift_out, "drift records path");
    add_algo_flags(drift, drift_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return cmd_synth(scenario, count, synth_seed, out_dir);
        if (*extract) return cmd_extract(extract_in, extract_out);
        if (*label) {
            return cmd_label(label_store, label_pe_dir, label_votes, label_threshold, label_out);
        }
        if (*train) return cmd_train(train_flags, train_store, train_features, train_out);
        if (*predict_cmd) return cmd_predict(predict_model, predict_store, predict_out);
        if (*evaluate) return cmd_evaluate(eval_flags, eval_store, eval_model, eval_folds, eval_out);
        if (*tune) return cmd_tune(tune_flags, tune_store, tune_full, tune_folds, tune_out);
        if (*select) {
            return cmd_select(select_flags, select_store, select_method, select_thresholds,
                              select_schedule, select_max_drop, select_folds, select_out);
        }
        if (*pca_cmd) return cmd_pca_sweep(pca_flags, pca_store, pca_ks, pca_folds, pca_out);
        if (*drift) {
            return cmd_drift(drift_flags, drift_train, drift_chrono, drift_range, drift_periods,
                             drift_thresholds, drift_out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
