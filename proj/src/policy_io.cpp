#include "heterodispatch/policy_io.hpp"

#include <fstream>
#include <json.hpp>

#include "heterodispatch/common.hpp"

namespace hd {

namespace {

using nlohmann::json;

constexpr const char* kSchema = "heterodispatch-policy-v1";
constexpr const char* kToolVersion = "0.1.0";

json rule_to_json(const QueryingRule& rule) {
    json j;
    j["kind"] = rule_kind(rule);
    if (const auto* r = std::get_if<GenRule>(&rule)) j["p"] = r->p.p;
    if (const auto* r = std::get_if<IidRule>(&rule)) j["ptilde"] = r->ptilde;
    if (const auto* r = std::get_if<IndRule>(&rule)) j["ptilde_u"] = r->ptilde_u;
    if (const auto* r = std::get_if<DetRule>(&rule)) j["mix"] = r->mix.counts;
    if (const auto* r = std::get_if<SrcRule>(&rule)) j["phat"] = r->phat;
    if (const auto* r = std::get_if<SfcRule>(&rule)) j["class"] = r->class_index + 1;
    return j;
}

QueryingRule rule_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gen") {
        QueryDistribution qd;
        qd.p = j.at("p").get<std::vector<double>>();
        return GenRule{qd};
    }
    if (kind == "iid") return IidRule{j.at("ptilde").get<std::vector<double>>()};
    if (kind == "ind")
        return IndRule{j.at("ptilde_u").get<std::vector<std::vector<double>>>()};
    if (kind == "det") return DetRule{QueryMix(j.at("mix").get<std::vector<int>>())};
    if (kind == "src") return SrcRule{j.at("phat").get<std::vector<double>>()};
    if (kind == "sfc") return SfcRule{j.at("class").get<int>() - 1};
    if (kind == "uni") return UniRule{};
    if (kind == "br") return BrRule{};
    throw std::invalid_argument("policy: unknown rule kind " + kind);
}

}  // namespace

std::string policy_to_json(const PolicyDocument& doc) {
    json j;
    j["schema"] = kSchema;
    j["params"] = {{"s", doc.params.s()},
                   {"d", doc.params.d()},
                   {"lambda", doc.params.lambda()},
                   {"mu", doc.params.mu()},
                   {"q", doc.params.q()}};
    j["rule"] = rule_to_json(doc.rule);

    json entries = json::array();
    for (const auto& [key, value] : doc.assign.entries()) {
        entries.push_back(
            {{"i", key.i + 1}, {"j", key.j + 1}, {"mix", key.key.counts}, {"value", value}});
    }
    j["alpha"] = {{"gamma_variant", doc.assign.variant() == GammaVariant::Indicator
                                        ? "indicator"
                                        : "filler"},
                  {"entries", entries}};
    j["provenance"] = {{"tool_version",
                        doc.tool_version.empty() ? kToolVersion : doc.tool_version},
                       {"rng_seed", doc.rng_seed}};
    return j.dump(2) + "\n";
}

PolicyDocument policy_from_json(const std::string& text) {
    const json j = json::parse(text);
    require(j.at("schema").get<std::string>() == kSchema, "policy: unknown schema");

    const json& pj = j.at("params");
    SystemParams params = SystemParams::make(
        pj.at("s").get<int>(), pj.at("d").get<int>(), pj.at("lambda").get<double>(),
        pj.at("mu").get<std::vector<double>>(), pj.at("q").get<std::vector<double>>());

    const json& aj = j.at("alpha");
    const GammaVariant variant = aj.at("gamma_variant").get<std::string>() == "filler"
                                     ? GammaVariant::Filler
                                     : GammaVariant::Indicator;
    CidAssignment assign(params.s(), variant);
    for (const json& e : aj.at("entries")) {
        assign.set(e.at("i").get<int>() - 1, e.at("j").get<int>() - 1,
                   QueryMix(e.at("mix").get<std::vector<int>>()), e.at("value").get<double>());
    }

    PolicyDocument doc{std::move(params), rule_from_json(j.at("rule")), std::move(assign)};
    if (j.contains("provenance")) {
        doc.rng_seed = j["provenance"].value("rng_seed", 0ULL);
        doc.tool_version = j["provenance"].value("tool_version", "");
    }
    return doc;
}

void save_policy(const PolicyDocument& doc, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot open for writing: " + path);
    out << policy_to_json(doc);
}

PolicyDocument load_policy(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return policy_from_json(text);
}

}  // namespace hd
