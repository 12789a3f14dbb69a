#include "packdet/classifiers.hpp"
#include "packdet/error.hpp"

#include <json.hpp>

#include <fstream>

namespace packdet {

namespace {

using nlohmann::json;

constexpr int MODEL_FORMAT_VERSION = 1;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m;
    m.rows = j.at("rows").get<size_t>();
    m.cols = j.at("cols").get<size_t>();
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) raise(Errc::corrupt_row, "matrix shape mismatch");
    return m;
}

json scaler_to_json(const ScalerModel& s) {
    return json{{"mode", s.mode == ScalerMode::minmax ? "minmax" : "zscore"},
                {"a", s.a},
                {"b", s.b}};
}

ScalerModel scaler_from_json(const json& j) {
    ScalerModel s;
    s.mode = j.at("mode").get<std::string>() == "minmax" ? ScalerMode::minmax : ScalerMode::zscore;
    s.a = j.at("a").get<std::vector<double>>();
    s.b = j.at("b").get<std::vector<double>>();
    return s;
}

json config_to_json(const AlgoConfig& c) {
    return json{
        {"family", family_name(c.family)},
        {"preprocessing", preprocessing_name(c.preprocessing)},
        {"pca_components", c.pca_components},
        {"seed", c.seed},
        {"k_neighbors", c.k_neighbors},
        {"loss", c.loss == Loss::hinge ? "hinge" : "squared_hinge"},
        {"regularization", c.regularization},
        {"max_iter", c.max_iter},
        {"criterion", c.criterion == Criterion::entropy ? "entropy" : "gini"},
        {"min_leaf", c.min_leaf},
        {"max_depth", c.max_depth},
        {"n_estimators", c.n_estimators},
        {"learning_rate", c.learning_rate},
        {"bootstrap", c.bootstrap},
        {"feature_subsampling", c.feature_subsampling},
        {"hidden_layers", c.hidden_layers},
        {"activation", static_cast<int>(c.activation)},
        {"solver", static_cast<int>(c.solver)},
        {"batch_size", c.batch_size},
        {"kernel", static_cast<int>(c.kernel)},
        {"svm_c", c.svm_c},
        {"gamma", c.gamma},
        {"poly_degree", c.poly_degree},
        {"coef0", c.coef0},
    };
}

AlgoConfig config_from_json(const json& j) {
    AlgoConfig c;
    c.family = family_from_name(j.at("family").get<std::string>());
    c.preprocessing = preprocessing_from_name(j.at("preprocessing").get<std::string>());
    c.pca_components = j.at("pca_components").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.k_neighbors = j.at("k_neighbors").get<int>();
    c.loss = j.at("loss").get<std::string>() == "hinge" ? Loss::hinge : Loss::squared_hinge;
    c.regularization = j.at("regularization").get<double>();
    c.max_iter = j.at("max_iter").get<int>();
    c.criterion =
        j.at("criterion").get<std::string>() == "entropy" ? Criterion::entropy : Criterion::gini;
    c.min_leaf = j.at("min_leaf").get<int>();
    c.max_depth = j.at("max_depth").get<int>();
    c.n_estimators = j.at("n_estimators").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.bootstrap = j.at("bootstrap").get<bool>();
    c.feature_subsampling = j.at("feature_subsampling").get<bool>();
    c.hidden_layers = j.at("hidden_layers").get<std::vector<int>>();
    c.activation = static_cast<Activation>(j.at("activation").get<int>());
    c.solver = static_cast<Solver>(j.at("solver").get<int>());
    c.batch_size = j.at("batch_size").get<int>();
    c.kernel = static_cast<Kernel>(j.at("kernel").get<int>());
    c.svm_c = j.at("svm_c").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.poly_degree = j.at("poly_degree").get<int>();
    c.coef0 = j.at("coef0").get<double>();
    return c;
}

json tree_to_json(const Tree& t) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes) {
        nodes.push_back(json{{"f", n.feature},
                             {"t", n.threshold},
                             {"l", n.left},
                             {"r", n.right},
                             {"v", n.value},
                             {"n", n.n_samples},
                             {"i", n.impurity}});
    }
    return nodes;
}

Tree tree_from_json(const json& j) {
    Tree t;
    for (const json& n : j) {
        TreeNode node;
        node.feature = n.at("f").get<int>();
        node.threshold = n.at("t").get<double>();
        node.left = n.at("l").get<int>();
        node.right = n.at("r").get<int>();
        node.value = n.at("v").get<double>();
        node.n_samples = n.at("n").get<size_t>();
        node.impurity = n.at("i").get<double>();
        t.nodes.push_back(node);
    }
    return t;
}

json state_to_json(const Model& m) {
    json j;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, KnnState>) {
                j["x"] = matrix_to_json(s.x);
                j["y"] = s.y;
            } else if constexpr (std::is_same_v<T, NbcState>) {
                j["gaussian"] = s.gaussian;
                j["log_prior"] = s.log_prior;
                j["mean"] = matrix_to_json(s.mean);
                j["var"] = matrix_to_json(s.var);
                j["log_p"] = matrix_to_json(s.log_p);
                j["log_1mp"] = matrix_to_json(s.log_1mp);
            } else if constexpr (std::is_same_v<T, LinearState>) {
                j["w"] = s.w;
                j["b"] = s.b;
            } else if constexpr (std::is_same_v<T, TreeState>) {
                j["tree"] = tree_to_json(s.tree);
            } else if constexpr (std::is_same_v<T, ForestState>) {
                json trees = json::array();
                for (const Tree& t : s.trees) trees.push_back(tree_to_json(t));
                j["trees"] = trees;
            } else if constexpr (std::is_same_v<T, GbdtState>) {
                json trees = json::array();
                for (const Tree& t : s.trees) trees.push_back(tree_to_json(t));
                j["trees"] = trees;
                j["f0"] = s.f0;
                j["shrinkage"] = s.shrinkage;
            } else if constexpr (std::is_same_v<T, MlpState>) {
                json ws = json::array();
                for (const Matrix& w : s.weights) ws.push_back(matrix_to_json(w));
                j["weights"] = ws;
                j["biases"] = s.biases;
                j["activation"] = static_cast<int>(s.activation);
            } else if constexpr (std::is_same_v<T, KsvmState>) {
                j["support_vectors"] = matrix_to_json(s.support_vectors);
                j["coeffs"] = s.coeffs;
                j["bias"] = s.bias;
                j["kernel"] = static_cast<int>(s.kernel);
                j["gamma"] = s.gamma;
                j["coef0"] = s.coef0;
                j["degree"] = s.degree;
            }
        },
        m.state);
    return j;
}

ModelState state_from_json(Family family, const json& j) {
    switch (family) {
        case Family::knn: {
            KnnState s;
            s.x = matrix_from_json(j.at("x"));
            s.y = j.at("y").get<std::vector<int>>();
            return s;
        }
        case Family::gnbc:
        case Family::bnbc: {
            NbcState s;
            s.gaussian = j.at("gaussian").get<bool>();
            s.log_prior = j.at("log_prior").get<std::array<double, 2>>();
            s.mean = matrix_from_json(j.at("mean"));
            s.var = matrix_from_json(j.at("var"));
            s.log_p = matrix_from_json(j.at("log_p"));
            s.log_1mp = matrix_from_json(j.at("log_1mp"));
            return s;
        }
        case Family::lr:
        case Family::lsvm: {
            LinearState s;
            s.w = j.at("w").get<std::vector<double>>();
            s.b = j.at("b").get<double>();
            return s;
        }
        case Family::dt: {
            TreeState s;
            s.tree = tree_from_json(j.at("tree"));
            return s;
        }
        case Family::rf: {
            ForestState s;
            for (const json& t : j.at("trees")) s.trees.push_back(tree_from_json(t));
            return s;
        }
        case Family::gbdt: {
            GbdtState s;
            for (const json& t : j.at("trees")) s.trees.push_back(tree_from_json(t));
            s.f0 = j.at("f0").get<double>();
            s.shrinkage = j.at("shrinkage").get<double>();
            return s;
        }
        case Family::mlp: {
            MlpState s;
            for (const json& w : j.at("weights")) s.weights.push_back(matrix_from_json(w));
            s.biases = j.at("biases").get<std::vector<std::vector<double>>>();
            s.activation = static_cast<Activation>(j.at("activation").get<int>());
            return s;
        }
        case Family::ksvm: {
            KsvmState s;
            s.support_vectors = matrix_from_json(j.at("support_vectors"));
            s.coeffs = j.at("coeffs").get<std::vector<double>>();
            s.bias = j.at("bias").get<double>();
            s.kernel = static_cast<Kernel>(j.at("kernel").get<int>());
            s.gamma = j.at("gamma").get<double>();
            s.coef0 = j.at("coef0").get<double>();
            s.degree = j.at("degree").get<int>();
            return s;
        }
        case Family::dl85:
            break;
    }
    raise(Errc::unsupported_family, "no serializable state for family");
}

} // namespace

std::string model_to_json(const Model& m) {
    json j;
    j["format"] = "packdet-model";
    j["version"] = MODEL_FORMAT_VERSION;
    j["family"] = family_name(m.family);
    j["config"] = config_to_json(m.config);
    j["train_seconds"] = m.train_seconds;
    j["feature_ids"] = m.feature_ids;
    j["raw_dim"] = m.raw_dim;
    j["warning"] = m.warning;
    j["booleanized"] = m.booleanized;
    j["bucket_table_version"] = m.bucket_table_version;
    if (m.scaler) j["scaler"] = scaler_to_json(*m.scaler);
    if (m.pca_scaler) j["pca_scaler"] = scaler_to_json(*m.pca_scaler);
    if (m.pca) {
        j["pca"] = json{{"mean", m.pca->mean},
                        {"components", matrix_to_json(m.pca->components)},
                        {"explained_variance", m.pca->explained_variance}};
    }
    j["state"] = state_to_json(m);
    return j.dump(2);
}

Model model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::corrupt_row, std::string("model json: ") + e.what());
    }
    if (j.value("format", "") != "packdet-model") {
        raise(Errc::format_version_mismatch, "not a packdet model file");
    }
    if (j.value("version", -1) != MODEL_FORMAT_VERSION) {
        raise(Errc::format_version_mismatch, "unsupported model format version");
    }
    try {
        Model m;
        m.family = family_from_name(j.at("family").get<std::string>());
        m.config = config_from_json(j.at("config"));
        m.train_seconds = j.at("train_seconds").get<double>();
        m.feature_ids = j.at("feature_ids").get<std::vector<int>>();
        m.raw_dim = j.at("raw_dim").get<size_t>();
        m.warning = j.at("warning").get<std::string>();
        m.booleanized = j.at("booleanized").get<bool>();
        m.bucket_table_version = j.at("bucket_table_version").get<int>();
        if (j.contains("scaler")) m.scaler = scaler_from_json(j.at("scaler"));
        if (j.contains("pca_scaler")) m.pca_scaler = scaler_from_json(j.at("pca_scaler"));
        if (j.contains("pca")) {
            PcaModel p;
            p.mean = j.at("pca").at("mean").get<std::vector<double>>();
            p.components = matrix_from_json(j.at("pca").at("components"));
            p.explained_variance =
                j.at("pca").at("explained_variance").get<std::vector<double>>();
            m.pca = std::move(p);
        }
        m.state = state_from_json(m.family, j.at("state"));
        return m;
    } catch (const json::exception& e) {
        raise(Errc::corrupt_row, std::string("model json: ") + e.what());
    }
}

void save_model(const Model& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::bad_argument, "cannot write model: " + path);
    out << model_to_json(m) << '\n';
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::bad_argument, "cannot open model: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_json(text);
}

} // namespace packdet
