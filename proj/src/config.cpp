#include <boundcue/config.hpp>

#include <boundcue/errors.hpp>
#include <boundcue/io.hpp>

#include <json.hpp>

#include <cmath>
#include <set>

namespace boundcue {

using json = nlohmann::json;

namespace {

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

void only_keys(const json& obj, const std::string& path, std::set<std::string> allowed) {
    if (!obj.is_object()) throw SchemaError(path.empty() ? "(root)" : path, "must be an object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw SchemaError(join(path, k), "unknown key");
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError(path, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(path, "must be finite");
    return d;
}

int integer(const json& v, const std::string& path, int lo) {
    if (!v.is_number_integer()) throw SchemaError(path, "must be an integer");
    const auto i = v.get<long long>();
    if (i < lo || i > 1000000) throw SchemaError(path, "out of range");
    return static_cast<int>(i);
}

std::vector<double> numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw SchemaError(path, "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

GsmParams parse_gsm(const json& obj, const std::string& path, GsmParams gsm) {
    only_keys(obj, path, {"weights", "sigmas"});
    if (obj.contains("weights")) gsm.weights = numbers(obj["weights"], join(path, "weights"));
    if (obj.contains("sigmas")) gsm.sigmas = numbers(obj["sigmas"], join(path, "sigmas"));
    try {
        gsm.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(path, e.what());
    }
    return gsm;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& root) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(root.empty() ? "(root)" : root, std::string("invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    only_keys(doc, root, {"fold", "gsm", "reg", "contour", "solver", "shading"});
    auto& m = cfg.model;
    if (doc.contains("fold")) {
        const auto p = join(root, "fold");
        only_keys(doc["fold"], p, {"epsilon", "smoothing_tau"});
        const auto& f = doc["fold"];
        if (f.contains("epsilon")) {
            m.energy.fold.epsilon = number(f["epsilon"], p + ".epsilon");
            if (m.energy.fold.epsilon < 0.0 || m.energy.fold.epsilon > 1.0)
                throw SchemaError(p + ".epsilon", "must lie in [0, 1]");
        }
        if (f.contains("smoothing_tau")) {
            m.energy.fold.smoothing_tau = number(f["smoothing_tau"], p + ".smoothing_tau");
            if (m.energy.fold.smoothing_tau < 0.0)
                throw SchemaError(p + ".smoothing_tau", "must be >= 0");
        }
    }
    if (doc.contains("gsm")) m.energy.gsm = parse_gsm(doc["gsm"], join(root, "gsm"), m.energy.gsm);
    if (doc.contains("reg")) {
        const auto p = join(root, "reg");
        only_keys(doc["reg"], p, {"lambda_f", "lambda_k"});
        if (doc["reg"].contains("lambda_f")) m.lambda_f = number(doc["reg"]["lambda_f"], p + ".lambda_f");
        if (doc["reg"].contains("lambda_k")) m.lambda_k = number(doc["reg"]["lambda_k"], p + ".lambda_k");
    }
    if (doc.contains("contour")) {
        const auto p = join(root, "contour");
        only_keys(doc["contour"], p, {"loss", "tau"});
        const auto& c = doc["contour"];
        if (c.contains("loss")) {
            const auto& l = c["loss"];
            if (l == "charbonnier") m.energy.loss = ContourLoss::Charbonnier;
            else if (l == "squared") m.energy.loss = ContourLoss::Squared;
            else throw SchemaError(p + ".loss", "must be \"charbonnier\" or \"squared\"");
        }
        if (c.contains("tau")) {
            m.energy.contour_tau = number(c["tau"], p + ".tau");
            if (m.energy.contour_tau < 0.0) throw SchemaError(p + ".tau", "must be >= 0");
        }
    }
    if (doc.contains("solver")) {
        const auto p = join(root, "solver");
        only_keys(doc["solver"], p, {"levels", "max_iters", "tol", "memory", "init"});
        const auto& s = doc["solver"];
        if (s.contains("levels")) cfg.solver.levels = integer(s["levels"], p + ".levels", 1);
        if (s.contains("max_iters")) cfg.solver.max_iters = integer(s["max_iters"], p + ".max_iters", 0);
        if (s.contains("memory")) cfg.solver.memory = integer(s["memory"], p + ".memory", 1);
        if (s.contains("tol")) {
            cfg.solver.tol = number(s["tol"], p + ".tol");
            if (!(cfg.solver.tol > 0.0)) throw SchemaError(p + ".tol", "must be > 0");
        }
        if (s.contains("init")) {
            if (s["init"] == "dome") cfg.solver.init = InitPolicy::Dome;
            else if (s["init"] == "zero") cfg.solver.init = InitPolicy::Zero;
            else throw SchemaError(p + ".init", "must be \"dome\" or \"zero\"");
        }
    }
    if (doc.contains("shading")) {
        const auto p = join(root, "shading");
        only_keys(doc["shading"], p, {"gsm", "prior"});
        const auto& s = doc["shading"];
        if (s.contains("gsm"))
            m.shading.reflectance_gsm = parse_gsm(s["gsm"], p + ".gsm", m.shading.reflectance_gsm);
        if (s.contains("prior")) {
            const auto pp = p + ".prior";
            only_keys(s["prior"], pp, {"mean", "precision"});
            const auto& pr = s["prior"];
            if (pr.contains("mean")) {
                const auto mean = numbers(pr["mean"], pp + ".mean");
                if (mean.size() != kLightDims) throw SchemaError(pp + ".mean", "needs 27 numbers");
                std::copy(mean.begin(), mean.end(), m.shading.prior.mean.begin());
            }
            if (pr.contains("precision")) {
                const auto& rows = pr["precision"];
                if (!rows.is_array() || rows.size() != kLightDims)
                    throw SchemaError(pp + ".precision", "needs 27 rows");
                for (int i = 0; i < kLightDims; ++i) {
                    const auto row = numbers(rows[i], pp + ".precision[" + std::to_string(i) + "]");
                    if (row.size() != kLightDims)
                        throw SchemaError(pp + ".precision[" + std::to_string(i) + "]",
                                          "needs 27 numbers");
                    for (int j = 0; j < kLightDims; ++j) m.shading.prior.precision(i, j) = row[j];
                }
            }
            try {
                m.shading.prior.validate();
            } catch (const std::invalid_argument& e) {
                throw SchemaError(pp, e.what());
            }
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
    if (!std::filesystem::exists(file)) throw Error("config file not found: " + file.string());
    return parse_config(read_file(file));
}

IlluminationSH parse_light(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("light", std::string("invalid JSON: ") + e.what());
    }
    const auto v = numbers(doc, "light");
    if (v.size() != kLightDims) throw SchemaError("light", "needs 27 numbers");
    IlluminationSH l;
    std::copy(v.begin(), v.end(), l.coeffs.begin());
    return l;
}

std::string serialize_light(const IlluminationSH& light) {
    return json(std::vector<double>(light.coeffs.begin(), light.coeffs.end())).dump() + "\n";
}

}  // namespace boundcue
