/**
 * @file checkpoint.hpp
 * @details
 * JSON checkpoints for polynomial parameters:
 *
 *   {"model": "model1" | "model2" | "orig" | "concat" | "explicit",
 *    "dims": {"d", "o", "k", "omega", "N"},
 *    "arrays": {"C": {"shape": [o, k], "data": [...]}, "beta": ..., "U1".."UN" | "A1", "S1", "B1", "b1", ...}}
 *
 * Arrays are flattened row-major. Generator checkpoints add "global_transform",
 * "identity_b", "tanh_output" and, when a transform is present, the arrays
 * "T_W" and "T_b". Numbers are written in shortest round-trip form, so
 * save/load reproduces every value exactly.
 */
#ifndef POLYGAN_CHECKPOINT_HPP
#define POLYGAN_CHECKPOINT_HPP

#include "polygan/networks.hpp"
#include "polygan/poly_models.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>

namespace polygan {

/// Malformed or inconsistent checkpoint document.
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

inline json array_json(const Matrix& m) {
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return {{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

inline json array_json(const Vector& v) {
    json data = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v[i]);
    return {{"shape", {v.size()}}, {"data", std::move(data)}};
}

inline json array_json(const DenseTensor& t) {
    return {{"shape", t.shape()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

inline const json& require(const json& j, const std::string& key) {
    if (!j.is_object() || !j.contains(key)) throw CheckpointError("checkpoint: missing field '" + key + "'");
    return j.at(key);
}

inline std::pair<Shape, std::vector<double>> read_array(const json& arrays, const std::string& name) {
    const json& a = require(arrays, name);
    try {
        auto shape = require(a, "shape").get<Shape>();
        auto data = require(a, "data").get<std::vector<double>>();
        if (shape.empty() || shape_size(shape) != data.size())
            throw CheckpointError("checkpoint: array '" + name + "' shape does not match data length");
        return {std::move(shape), std::move(data)};
    } catch (const json::exception& e) {
        throw CheckpointError("checkpoint: array '" + name + "' is malformed: " + e.what());
    }
}

inline Matrix read_matrix(const json& arrays, const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    auto [shape, data] = read_array(arrays, name);
    if (shape.size() != 2 || shape[0] != static_cast<std::size_t>(rows) || shape[1] != static_cast<std::size_t>(cols))
        throw CheckpointError("checkpoint: array '" + name + "' has shape " + shape_string(shape) + ", expected (" +
                              std::to_string(rows) + "x" + std::to_string(cols) + ")");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = data[static_cast<std::size_t>(i * cols + j)];
    return m;
}

inline Vector read_vector(const json& arrays, const std::string& name, Eigen::Index n) {
    auto [shape, data] = read_array(arrays, name);
    if (shape.size() != 1 || shape[0] != static_cast<std::size_t>(n))
        throw CheckpointError("checkpoint: array '" + name + "' must be a vector of length " + std::to_string(n));
    return Eigen::Map<Vector>(data.data(), n);
}

struct CheckpointDims {
    Eigen::Index d = 0, o = 0, k = 0, omega = 0;
    std::size_t order = 0;
};

inline CheckpointDims read_dims(const json& doc) {
    const json& dims = require(doc, "dims");
    CheckpointDims out;
    try {
        out.d = require(dims, "d").get<Eigen::Index>();
        out.o = require(dims, "o").get<Eigen::Index>();
        out.k = dims.value("k", Eigen::Index{0});
        out.omega = dims.value("omega", Eigen::Index{0});
        out.order = require(dims, "N").get<std::size_t>();
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("checkpoint: malformed dims: ") + e.what());
    }
    if (out.d < 1 || out.o < 1 || out.k < 0 || out.omega < 0)
        throw CheckpointError("checkpoint: dims must be positive");
    return out;
}

inline std::string name_of(const char* prefix, std::size_t zero_based) {
    return prefix + std::to_string(zero_based + 1);
}

}  // namespace detail

inline nlohmann::json checkpoint_json(const Model1Params& p) {
    p.validate();
    nlohmann::json arrays;
    arrays["C"] = detail::array_json(p.c);
    arrays["beta"] = detail::array_json(p.beta);
    for (std::size_t n = 0; n < p.order(); ++n) arrays[detail::name_of("U", n)] = detail::array_json(p.u[n]);
    return {{"model", "model1"},
            {"dims", {{"d", p.latent_dim()}, {"o", p.output_dim()}, {"k", p.rank()}, {"omega", 0}, {"N", p.order()}}},
            {"arrays", std::move(arrays)}};
}

/// Model 2 layout; also used by the orig/concat generators (concat S^[n], n >= 2, is k x 2k).
inline nlohmann::json checkpoint_json(const Model2Params& p, std::string_view model = "model2") {
    nlohmann::json arrays;
    arrays["C"] = detail::array_json(p.c);
    arrays["beta"] = detail::array_json(p.beta);
    for (std::size_t n = 0; n < p.order(); ++n) {
        arrays[detail::name_of("A", n)] = detail::array_json(p.a[n]);
        arrays[detail::name_of("S", n)] = detail::array_json(p.s[n]);
        arrays[detail::name_of("B", n)] = detail::array_json(p.bmat[n]);
        arrays[detail::name_of("b", n)] = detail::array_json(p.bvec[n]);
    }
    return {{"model", model},
            {"dims",
             {{"d", p.latent_dim()}, {"o", p.output_dim()}, {"k", p.rank()}, {"omega", p.omega()}, {"N", p.order()}}},
            {"arrays", std::move(arrays)}};
}

inline nlohmann::json checkpoint_json(const ExplicitPolyParams& p) {
    p.validate();
    nlohmann::json arrays;
    arrays["beta"] = detail::array_json(p.beta);
    for (std::size_t n = 0; n < p.order(); ++n) {
        arrays[detail::name_of("W", n)] = detail::array_json(p.weights[n]);
        if (p.scaled()) arrays[detail::name_of("b", n)] = detail::array_json(p.scalers[n]);
    }
    const std::size_t d = p.order() ? p.weights.front().shape().back() : 0;
    const std::size_t omega = p.scaled() ? p.weights.front().dim(2) : 0;
    return {{"model", "explicit"},
            {"dims", {{"d", d}, {"o", p.beta.size()}, {"k", 0}, {"omega", omega}, {"N", p.order()}}},
            {"arrays", std::move(arrays)}};
}

inline nlohmann::json checkpoint_json(const Generator& g) {
    nlohmann::json doc = g.kind().variant == Variant::model1
                             ? checkpoint_json(g.model1())
                             : checkpoint_json(g.model2(), to_string(g.kind().variant));
    doc["global_transform"] = to_string(g.kind().global_transform);
    doc["identity_b"] = g.kind().identity_b;
    doc["tanh_output"] = g.kind().tanh_output;
    if (g.kind().global_transform != GlobalTransform::none) {
        doc["arrays"]["T_W"] = detail::array_json(g.transform_w());
        doc["arrays"]["T_b"] = detail::array_json(g.transform_b());
    }
    return doc;
}

inline Model1Params model1_from_json(const nlohmann::json& doc) {
    const auto dims = detail::read_dims(doc);
    const auto& arrays = detail::require(doc, "arrays");
    if (dims.order < 1 || dims.k < 1) throw CheckpointError("checkpoint: model1 needs N >= 1 and k >= 1");
    Model1Params p;
    p.c = detail::read_matrix(arrays, "C", dims.o, dims.k);
    p.beta = detail::read_vector(arrays, "beta", dims.o);
    for (std::size_t n = 0; n < dims.order; ++n)
        p.u.push_back(detail::read_matrix(arrays, detail::name_of("U", n), dims.d, dims.k));
    return p;
}

/// `wide_s` reads S^[n] (n >= 2) as k x 2k, the concat layout.
inline Model2Params model2_from_json(const nlohmann::json& doc, bool wide_s = false) {
    const auto dims = detail::read_dims(doc);
    const auto& arrays = detail::require(doc, "arrays");
    if (dims.order < 1 || dims.k < 1 || dims.omega < 1)
        throw CheckpointError("checkpoint: model2 needs N >= 1, k >= 1 and omega >= 1");
    Model2Params p;
    p.c = detail::read_matrix(arrays, "C", dims.o, dims.k);
    p.beta = detail::read_vector(arrays, "beta", dims.o);
    for (std::size_t n = 0; n < dims.order; ++n) {
        p.a.push_back(detail::read_matrix(arrays, detail::name_of("A", n), dims.d, dims.k));
        p.s.push_back(detail::read_matrix(arrays, detail::name_of("S", n), dims.k,
                                          (wide_s && n > 0) ? 2 * dims.k : dims.k));
        p.bmat.push_back(detail::read_matrix(arrays, detail::name_of("B", n), dims.omega, dims.k));
        p.bvec.push_back(detail::read_vector(arrays, detail::name_of("b", n), dims.omega));
    }
    return p;
}

inline ExplicitPolyParams explicit_from_json(const nlohmann::json& doc) {
    const auto dims = detail::read_dims(doc);
    const auto& arrays = detail::require(doc, "arrays");
    ExplicitPolyParams p;
    p.beta = detail::read_vector(arrays, "beta", dims.o);
    for (std::size_t n = 0; n < dims.order; ++n) {
        auto [shape, data] = detail::read_array(arrays, detail::name_of("W", n));
        p.weights.emplace_back(std::move(shape), std::move(data));
        if (dims.omega > 0) p.scalers.push_back(detail::read_vector(arrays, detail::name_of("b", n), dims.omega));
    }
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
    return p;
}

inline Generator generator_from_json(const nlohmann::json& doc) {
    const std::string model = detail::require(doc, "model").is_string() ? doc.at("model").get<std::string>() : "";
    const auto variant = parse_variant(model);
    if (!variant) throw CheckpointError("checkpoint: '" + model + "' is not a generator model");
    GeneratorKind kind;
    kind.variant = *variant;
    const auto dims = detail::read_dims(doc);
    kind.order = dims.order;
    kind.width = dims.k;
    kind.omega = dims.omega;
    const auto transform = parse_global_transform(doc.value("global_transform", std::string("none")));
    if (!transform) throw CheckpointError("checkpoint: unknown global_transform");
    kind.global_transform = *transform;
    kind.identity_b = doc.value("identity_b", false);
    kind.tanh_output = doc.value("tanh_output", false);

    Model1Params m1;
    Model2Params m2;
    if (kind.variant == Variant::model1)
        m1 = model1_from_json(doc);
    else
        m2 = model2_from_json(doc, kind.variant == Variant::concat);
    Matrix tw;
    Vector tb;
    if (kind.global_transform != GlobalTransform::none) {
        const auto& arrays = detail::require(doc, "arrays");
        tw = detail::read_matrix(arrays, "T_W", dims.d, dims.d);
        tb = detail::read_vector(arrays, "T_b", dims.d);
    }
    try {
        return Generator::from_parts(kind, std::move(m1), std::move(m2), std::move(tw), std::move(tb));
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw CheckpointError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_json_file(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << doc.dump(2) << '\n';
}

}  // namespace polygan

#endif  // POLYGAN_CHECKPOINT_HPP
