#include "spinlab/model_json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "spinlab/errors.hpp"

namespace spinlab {

using nlohmann::json;

json model_to_json(const SpinSystem& model) {
    json doc;
    doc["q"] = model.q();
    doc["n"] = model.n();
    json edges = json::array();
    for (const auto& e : model.edges()) edges.push_back(json::array({e.u, e.v, e.beta}));
    doc["edges"] = std::move(edges);
    json field = json::array();
    for (const auto& f : model.field_entries()) field.push_back(json::array({f.vertex, f.spin, f.h}));
    doc["field"] = std::move(field);
    if (const auto& sides = model.bipartition()) {
        json left = json::array();
        json right = json::array();
        for (int v = 0; v < model.n(); ++v) ((*sides)[v] == 0 ? left : right).push_back(v);
        doc["bipartition"] = json::array({left, right});
    }
    return doc;
}

namespace {

bool is_int(const json& j) { return j.is_number_integer(); }

}  // namespace

std::vector<std::string> validate_model_json(const json& doc) {
    std::vector<std::string> errs;
    if (!doc.is_object()) {
        errs.emplace_back("/: expected an object");
        return errs;
    }
    if (!doc.contains("q") || !is_int(doc["q"]) || doc["q"].get<long>() < 2)
        errs.emplace_back("/q: expected an integer >= 2");
    if (!doc.contains("n") || !is_int(doc["n"]) || doc["n"].get<long>() < 0)
        errs.emplace_back("/n: expected a nonnegative integer");
    if (!errs.empty()) return errs;
    long q = doc["q"].get<long>();
    long n = doc["n"].get<long>();

    for (const auto& key : doc.items()) {
        const auto& k = key.key();
        if (k != "q" && k != "n" && k != "edges" && k != "field" && k != "bipartition")
            errs.push_back("/" + k + ": unknown key");
    }

    if (doc.contains("edges")) {
        const auto& edges = doc["edges"];
        if (!edges.is_array()) {
            errs.emplace_back("/edges: expected an array");
        } else {
            for (std::size_t i = 0; i < edges.size(); ++i) {
                const auto& e = edges[i];
                std::string where = "/edges/" + std::to_string(i);
                if (!e.is_array() || e.size() != 3 || !is_int(e[0]) || !is_int(e[1]) || !e[2].is_number()) {
                    errs.push_back(where + ": expected [u, v, beta]");
                    continue;
                }
                long u = e[0].get<long>(), v = e[1].get<long>();
                if (u < 0 || u >= n || v < 0 || v >= n) errs.push_back(where + ": vertex id out of range");
                if (u == v) errs.push_back(where + ": self-loop");
                if (!std::isfinite(e[2].get<double>())) errs.push_back(where + ": non-finite coupling");
            }
        }
    }
    if (doc.contains("field")) {
        const auto& field = doc["field"];
        if (!field.is_array()) {
            errs.emplace_back("/field: expected an array");
        } else {
            for (std::size_t i = 0; i < field.size(); ++i) {
                const auto& f = field[i];
                std::string where = "/field/" + std::to_string(i);
                if (!f.is_array() || f.size() != 3 || !is_int(f[0]) || !is_int(f[1]) || !f[2].is_number()) {
                    errs.push_back(where + ": expected [v, spin, h]");
                    continue;
                }
                long v = f[0].get<long>(), s = f[1].get<long>();
                if (v < 0 || v >= n) errs.push_back(where + ": vertex id out of range");
                if (s < 0 || s >= q) errs.push_back(where + ": spin out of range");
            }
        }
    }
    if (doc.contains("bipartition") && !doc["bipartition"].is_null()) {
        const auto& bp = doc["bipartition"];
        if (!bp.is_array() || bp.size() != 2 || !bp[0].is_array() || !bp[1].is_array()) {
            errs.emplace_back("/bipartition: expected [[L ids], [R ids]]");
        } else {
            std::vector<int> seen(static_cast<std::size_t>(n), 0);
            for (int side = 0; side < 2; ++side)
                for (const auto& v : bp[side]) {
                    if (!is_int(v) || v.get<long>() < 0 || v.get<long>() >= n) {
                        errs.push_back("/bipartition/" + std::to_string(side) + ": bad vertex id");
                        continue;
                    }
                    ++seen[v.get<long>()];
                }
            for (long v = 0; v < n; ++v)
                if (seen[v] != 1) {
                    errs.push_back("/bipartition: vertex " + std::to_string(v) + " must appear exactly once");
                    break;
                }
        }
    }
    return errs;
}

SpinSystem model_from_json(const json& doc) {
    auto errs = validate_model_json(doc);
    if (!errs.empty()) {
        std::string msg = "model document invalid:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw ParseError(msg);
    }
    int q = doc["q"].get<int>();
    int n = doc["n"].get<int>();
    std::vector<Edge> edges;
    if (doc.contains("edges"))
        for (const auto& e : doc["edges"]) edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
    std::vector<FieldEntry> field;
    if (doc.contains("field"))
        for (const auto& f : doc["field"]) field.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<double>()});
    std::optional<Bipartition> sides;
    if (doc.contains("bipartition") && !doc["bipartition"].is_null()) {
        sides.emplace(static_cast<std::size_t>(n), 0);
        for (const auto& v : doc["bipartition"][1]) (*sides)[v.get<int>()] = 1;
    }
    try {
        return SpinSystem(q, n, std::move(edges), std::move(field), std::move(sides));
    } catch (const InvalidModel& e) {
        throw ParseError(std::string("model document invalid: ") + e.what());
    }
}

json parse_json_text(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

SpinSystem parse_model(std::string_view text) { return model_from_json(parse_json_text(text)); }

SpinSystem load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

}  // namespace spinlab
