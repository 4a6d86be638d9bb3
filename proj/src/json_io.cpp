#include "heatpack/json_io.hpp"

#include "heatpack/error.hpp"
#include "heatpack/grid.hpp"

#include <cmath>

namespace heatpack {

namespace {

void emit(const json& j, int indent, int level, std::string& out)
{
    const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent) * (level + 1), ' ') : "";
    const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent) * level, ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    const char* sep = indent > 0 ? ": " : ":";
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        out += nl;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) {
                out += ',';
                out += nl;
            }
            first = false;
            out += pad;
            out += json(it.key()).dump();
            out += sep;
            emit(it.value(), indent, level + 1, out);
        }
        out += nl;
        out += close;
        out += '}';
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        // Arrays of scalars stay on one line.
        bool flat = true;
        for (const auto& v : j)
            flat = flat && !v.is_structured();
        out += '[';
        if (!flat)
            out += nl;
        bool first = true;
        for (const auto& v : j) {
            if (!first) {
                out += ',';
                out += flat ? (indent > 0 ? " " : "") : nl;
            }
            first = false;
            if (!flat)
                out += pad;
            emit(v, indent, level + 1, out);
        }
        if (!flat) {
            out += nl;
            out += close;
        }
        out += ']';
        return;
    }
    case json::value_t::number_float: {
        const double v = j.get<double>();
        if (std::isfinite(v))
            out += format_double(v);
        else
            out += std::isnan(v) ? "\"nan\"" : (v > 0 ? "\"inf\"" : "\"-inf\"");
        return;
    }
    default:
        out += j.dump();
    }
}

} // namespace

std::string dump_json(const json& j, int indent)
{
    std::string out;
    emit(j, indent, 0, out);
    out += '\n';
    return out;
}

json to_json(const Point& p, int dim)
{
    json a = json::array();
    for (int k = 0; k < dim; ++k)
        a.push_back(p[k]);
    return a;
}

json to_json(const Lattice& n, int dim)
{
    json a = json::array();
    for (int k = 0; k < dim; ++k)
        a.push_back(n[k]);
    return a;
}

json frame_to_json(const Frame& frame)
{
    const FrameParams& p = frame.params;
    json j;
    j["dim"] = p.dim;
    j["epsilon0"] = p.epsilon0;
    j["delta"] = p.delta;
    j["eta"] = p.eta;
    j["log_inv_epsilon"] = p.log_inv_epsilon;
    j["epsilon"] = p.epsilon;
    j["sigma"] = p.sigma;
    j["L"] = p.L;
    j["mode"] = mode_name(p.mode);
    j["k"] = p.k;
    j["M1"] = p.M1;
    j["x0"] = to_json(frame.x0, p.dim);
    j["measured_error"] = frame.measured_error;
    json modes = json::array();
    for (std::size_t i = 0; i < p.S.size(); ++i) {
        json m = json::array();
        for (int k = 0; k < p.dim; ++k)
            m.push_back(p.S[i][k]);
        m.push_back(frame.c[i].real());
        m.push_back(frame.c[i].imag());
        modes.push_back(std::move(m));
    }
    j["modes"] = std::move(modes); // [n_1, ..., n_d, re c_n, im c_n]
    return j;
}

Frame frame_from_json(const json& j)
{
    try {
        Frame f;
        FrameParams& p = f.params;
        p.dim = j.at("dim").get<int>();
        p.epsilon0 = j.at("epsilon0").get<double>();
        p.delta = j.at("delta").get<double>();
        p.eta = j.at("eta").get<double>();
        p.log_inv_epsilon = j.at("log_inv_epsilon").get<double>();
        p.epsilon = j.at("epsilon").get<double>();
        p.sigma = j.at("sigma").get<double>();
        p.L = j.at("L").get<double>();
        p.mode = parse_mode(j.at("mode").get<std::string>());
        p.k = j.at("k").get<int>();
        p.M1 = j.at("M1").get<double>();
        const auto& x0 = j.at("x0");
        for (int k = 0; k < p.dim; ++k)
            f.x0[k] = x0.at(k).get<double>();
        f.measured_error = j.at("measured_error").get<double>();
        for (const auto& m : j.at("modes")) {
            Lattice n{};
            for (int k = 0; k < p.dim; ++k)
                n[k] = m.at(k).get<int>();
            p.S.push_back(n);
            f.c.emplace_back(m.at(p.dim).get<double>(), m.at(p.dim + 1).get<double>());
        }
        return f;
    } catch (const json::exception& e) {
        fail(ErrorKind::IoError, std::string("malformed frame JSON: ") + e.what());
    }
}

} // namespace heatpack
