#include "fewshot/encoder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fewshot/error.hpp"
#include "fewshot/image_io.hpp"
#include "fewshot/rng.hpp"
#include "json_util.hpp"

namespace fewshot {

namespace {

using nlohmann::json;

bool vec_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace

const char* to_string(EncoderVariant v) {
    return v == EncoderVariant::mlp ? "mlp" : "random_projection";
}

EncoderVariant encoder_variant_from_string(const std::string& s) {
    if (s == "mlp") return EncoderVariant::mlp;
    if (s == "random_projection") return EncoderVariant::random_projection;
    throw ConfigError("unknown encoder variant: " + s);
}

size_t EncoderParams::parameter_count() const {
    size_t n = 0;
    for (const auto& w : weights) n += w.a.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

EncoderParams init_encoder(const EncoderConfig& config) {
    if (config.input_w < 1 || config.input_h < 1 ||
        (config.input_c != 1 && config.input_c != 3))
        throw ConfigError("encoder input dims must be positive with 1 or 3 channels");
    if (config.embed_dim < 1) throw ConfigError("embed_dim must be positive");

    EncoderParams p;
    p.variant = config.variant;
    p.input_w = config.input_w;
    p.input_h = config.input_h;
    p.input_c = config.input_c;
    p.dropout_prob = config.variant == EncoderVariant::mlp ? config.dropout_prob : 0.0;

    Rng rng(config.init_seed);
    if (config.variant == EncoderVariant::random_projection) {
        Matrix g(config.embed_dim, config.input_dim());
        const double scale = 1.0 / std::sqrt(static_cast<double>(config.input_dim()));
        for (auto& v : g.a) v = rng.next_gaussian() * scale;
        p.weights.push_back(std::move(g));
        return p;
    }

    if (config.dropout_prob < 0.0 || config.dropout_prob >= 1.0)
        throw ConfigError("dropout_prob must be in [0, 1)");
    std::vector<int> dims;
    dims.push_back(config.input_dim());
    for (int h : config.hidden_sizes) {
        if (h < 1) throw ConfigError("hidden layer sizes must be positive");
        dims.push_back(h);
    }
    dims.push_back(config.embed_dim);

    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        Matrix w(dims[l + 1], dims[l]);
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[l]));
        for (auto& v : w.a) v = rng.uniform(-limit, limit);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(static_cast<size_t>(dims[l + 1]), 0.0);
    }
    return p;
}

EmbedResult embed(const EncoderParams& params, const ImageTensor& x, const EmbedMode& mode) {
    if (x.width != params.input_w || x.height != params.input_h ||
        x.channels != params.input_c)
        throw DataError("embed: tensor " + std::to_string(x.width) + "x" +
                        std::to_string(x.height) + "x" + std::to_string(x.channels) +
                        " does not match encoder input " + std::to_string(params.input_w) + "x" +
                        std::to_string(params.input_h) + "x" + std::to_string(params.input_c));
    if (params.weights.empty()) throw DataError("embed: encoder has no weights");

    EmbedResult res;

    if (params.variant == EncoderVariant::random_projection) {
        const Matrix& g = params.weights[0];
        Vec zero_bias(static_cast<size_t>(g.rows), 0.0);
        affine(g, x.data, zero_bias, res.embedding);
        if (!vec_finite(res.embedding))
            throw NumericError("embed: non-finite embedding (check encoder parameters)");
        return res;
    }

    // mlp: standardize, then (affine -> relu -> dropout)* -> affine
    Vec act(x.data.size());
    for (size_t i = 0; i < x.data.size(); ++i)
        act[i] = (x.data[i] - params.standardize_mean) * params.standardize_scale;

    const bool record = mode.train;
    Rng drop_rng(mode.dropout_seed);
    if (record) res.trace.input = act;

    const size_t n_layers = params.weights.size();
    Vec z;
    for (size_t l = 0; l + 1 < n_layers; ++l) {
        affine(params.weights[l], act, params.biases[l], z);
        if (record) res.trace.pre_activations.push_back(z);
        Vec mask;
        if (mode.train) {
            mask.resize(z.size());
            const double keep_scale = 1.0 / (1.0 - params.dropout_prob);
            for (auto& m : mask)
                m = drop_rng.next_double() < params.dropout_prob ? 0.0 : keep_scale;
        }
        act.resize(z.size());
        for (size_t i = 0; i < z.size(); ++i) {
            double a = z[i] > 0.0 ? z[i] : 0.0;
            act[i] = mode.train ? a * mask[i] : a;
        }
        if (record) {
            res.trace.activations.push_back(act);
            res.trace.dropout_masks.push_back(std::move(mask));
        }
    }
    affine(params.weights.back(), act, params.biases.back(), res.embedding);
    if (!vec_finite(res.embedding))
        throw NumericError("embed: non-finite embedding (check encoder parameters)");
    return res;
}

EncoderGrads EncoderGrads::zeros_like(const EncoderParams& params) {
    EncoderGrads g;
    for (const auto& w : params.weights) g.d_weights.emplace_back(w.rows, w.cols);
    for (const auto& b : params.biases) g.d_biases.emplace_back(b.size(), 0.0);
    return g;
}

void EncoderGrads::accumulate(const EncoderGrads& other) {
    for (size_t i = 0; i < d_weights.size(); ++i)
        for (size_t j = 0; j < d_weights[i].a.size(); ++j)
            d_weights[i].a[j] += other.d_weights[i].a[j];
    for (size_t i = 0; i < d_biases.size(); ++i)
        for (size_t j = 0; j < d_biases[i].size(); ++j) d_biases[i][j] += other.d_biases[i][j];
}

bool EncoderGrads::all_finite() const {
    for (const auto& w : d_weights)
        for (double v : w.a)
            if (!std::isfinite(v)) return false;
    for (const auto& b : d_biases)
        if (!vec_finite(b)) return false;
    return true;
}

EncoderGrads backward(const EncoderParams& params, std::span<const ForwardTrace> traces,
                      std::span<const Vec> d_embeddings) {
    if (traces.size() != d_embeddings.size())
        throw DataError("backward: traces and gradients must align");

    EncoderGrads grads = EncoderGrads::zeros_like(params);
    if (params.variant == EncoderVariant::random_projection) return grads;

    const size_t n_layers = params.weights.size();
    const size_t n_hidden = n_layers - 1;
    Vec d_cur, d_prev;
    for (size_t t = 0; t < traces.size(); ++t) {
        const ForwardTrace& tr = traces[t];
        if (tr.activations.size() != n_hidden || tr.input.empty())
            throw DataError("backward: trace does not match encoder (was it from train mode?)");

        d_cur = d_embeddings[t];
        for (size_t l = n_layers; l-- > 0;) {
            const Vec& below = l == 0 ? tr.input : tr.activations[l - 1];
            add_outer(grads.d_weights[l], d_cur, below);
            for (size_t i = 0; i < d_cur.size(); ++i) grads.d_biases[l][i] += d_cur[i];
            if (l == 0) break;
            matvec_transposed(params.weights[l], d_cur, d_prev);
            // back through dropout, then the ReLU gate
            const Vec& mask = tr.dropout_masks[l - 1];
            const Vec& z = tr.pre_activations[l - 1];
            for (size_t i = 0; i < d_prev.size(); ++i) {
                double g = d_prev[i] * mask[i];
                d_prev[i] = z[i] > 0.0 ? g : 0.0;
            }
            std::swap(d_cur, d_prev);
        }
    }
    return grads;
}

std::string encoder_to_json(const EncoderParams& params) {
    json j;
    j["format_version"] = 1;
    j["variant"] = to_string(params.variant);
    j["input"] = {params.input_w, params.input_h, params.input_c};
    json ws = json::array();
    for (const auto& w : params.weights) {
        json e;
        e["rows"] = w.rows;
        e["cols"] = w.cols;
        e["data"] = w.a;
        ws.push_back(std::move(e));
    }
    j["weights"] = std::move(ws);
    j["biases"] = params.biases;
    j["dropout_prob"] = params.dropout_prob;
    j["standardize"] = {{"mean", params.standardize_mean}, {"scale", params.standardize_scale}};
    return j.dump() + "\n";
}

EncoderParams encoder_from_json(const std::string& json_text) {
    json j = detail::parse_json(json_text, "checkpoint");
    return detail::with_json_errors("checkpoint", [&] {
        int version = j.at("format_version").get<int>();
        if (version != 1)
            throw DataError("checkpoint: unsupported format_version " + std::to_string(version));
        EncoderParams p;
        p.variant = encoder_variant_from_string(j.at("variant").get<std::string>());
        auto input = j.at("input");
        p.input_w = input.at(0).get<int>();
        p.input_h = input.at(1).get<int>();
        p.input_c = input.at(2).get<int>();
        for (const auto& e : j.at("weights")) {
            Matrix w(e.at("rows").get<int>(), e.at("cols").get<int>());
            auto data = e.at("data").get<std::vector<double>>();
            if (data.size() != w.a.size())
                throw DataError("checkpoint: weight data does not match its shape");
            w.a = std::move(data);
            p.weights.push_back(std::move(w));
        }
        p.biases = j.at("biases").get<std::vector<Vec>>();
        p.dropout_prob = j.at("dropout_prob").get<double>();
        p.standardize_mean = j.at("standardize").at("mean").get<double>();
        p.standardize_scale = j.at("standardize").at("scale").get<double>();

        for (const auto& w : p.weights)
            for (double v : w.a)
                if (!std::isfinite(v)) throw NumericError("checkpoint: non-finite weight");
        for (const auto& b : p.biases)
            if (!vec_finite(b)) throw NumericError("checkpoint: non-finite bias");
        return p;
    });
}

void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path) {
    write_file_atomic(path, encoder_to_json(params));
}

EncoderParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint not found: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return encoder_from_json(ss.str());
}

} // namespace fewshot
