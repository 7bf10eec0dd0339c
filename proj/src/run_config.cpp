#include "arith/run_config.hpp"

#include <algorithm>

namespace arith {

using nlohmann::json;

void require_known_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                        std::string_view context) {
    if (!obj.is_object()) {
        throw ConfigError(std::string(context) + ": expected a JSON object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(std::string(context) + ": unknown key '" + key + "'");
        }
    }
}

namespace {

template <class T>
T get_as(const json& j, const char* key, std::string_view context) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(context) + "." + key + ": " + e.what());
    }
}

template <class T>
void read_if(const json& j, const char* key, T& out, std::string_view context) {
    if (j.contains(key)) out = get_as<T>(j, key, context);
}

std::string outer_name(OuterKind k) { return k == OuterKind::direct ? "direct" : "adam"; }

}  // namespace

json to_json(const NetworkSpec& spec) {
    return {{"layer_sizes", spec.layer_sizes},
            {"activation", to_string(spec.activation)},
            {"loss_kind", to_string(spec.loss_kind)}};
}

json to_json(const WeightScheme& scheme) {
    if (scheme.kind == SchemeKind::explicit_list) {
        return {{"kind", "explicit"}, {"weights", scheme.explicit_weights}};
    }
    return {{"kind", to_string(scheme.kind)}, {"epsilon", scheme.epsilon}};
}

json to_json(const MetaConfig& c) {
    json outer = {{"kind", outer_name(c.outer)}};
    if (c.outer == OuterKind::adam) {
        outer["learning_rate"] = c.outer_adam.learning_rate;
        outer["beta1"] = c.outer_adam.beta1;
        outer["beta2"] = c.outer_adam.beta2;
        outer["eps"] = c.outer_adam.eps;
    }
    return {{"network", to_json(c.network)},
            {"method", c.method == Method::meta ? "meta" : "erm"},
            {"scheme", to_json(c.scheme)},
            {"k", c.k},
            {"inner_lr", c.inner_lr},
            {"outer", outer},
            {"iterations", c.iterations},
            {"batch_size", c.batch_size},
            {"shuffle_domains", c.shuffle_domains},
            {"seed", c.seed},
            {"swa", c.swa ? json{{"burn_in_fraction", c.swa->burn_in_fraction}} : json(nullptr)},
            {"update_form", c.update_form == UpdateForm::gradient ? "gradient" : "average"},
            {"momentum_in_inner", c.momentum_in_inner},
            {"domain_specific_sampling", c.domain_specific_sampling},
            {"erm_optimizer",
             {{"kind", c.erm_optimizer.kind == OptimizerKind::sgd ? "sgd" : "adam"},
              {"learning_rate", c.erm_optimizer.learning_rate},
              {"beta1", c.erm_optimizer.beta1},
              {"beta2", c.erm_optimizer.beta2},
              {"eps", c.erm_optimizer.eps}}},
            {"track_metrics", c.track_metrics}};
}

NetworkSpec network_from_json(const json& j) {
    require_known_keys(j, {"layer_sizes", "activation", "loss_kind"}, "network");
    NetworkSpec spec;
    read_if(j, "layer_sizes", spec.layer_sizes, "network");
    try {
        if (j.contains("activation")) spec.activation = parse_activation(get_as<std::string>(j, "activation", "network"));
        if (j.contains("loss_kind")) spec.loss_kind = parse_loss_kind(get_as<std::string>(j, "loss_kind", "network"));
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("network: ") + e.what());
    }
    return spec;
}

WeightScheme scheme_from_json(const json& j, std::optional<std::size_t> n_sources) {
    require_known_keys(j, {"kind", "epsilon", "weights", "preset"}, "scheme");
    SchemeKind kind;
    try {
        kind = parse_scheme_kind(get_as<std::string>(j, "kind", "scheme"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scheme: ") + e.what());
    }
    if (kind == SchemeKind::explicit_list) {
        return WeightScheme::explicit_list(get_as<std::vector<double>>(j, "weights", "scheme"));
    }
    if (j.contains("preset")) {
        if (j.contains("epsilon")) throw ConfigError("scheme: give either 'epsilon' or 'preset', not both");
        if (!n_sources) throw ConfigError("scheme: a preset needs the number of source domains");
        const auto preset = get_as<std::string>(j, "preset", "scheme");
        const std::size_t n = *n_sources;
        if (preset == "normalized") {
            return kind == SchemeKind::constant ? WeightScheme::fish_normalized(n)
                                                : WeightScheme::arith_normalized(n);
        }
        if (preset == "scaled") {
            return kind == SchemeKind::constant ? WeightScheme::fish_scaled(n)
                                                : WeightScheme::arith_scaled(n);
        }
        throw ConfigError("scheme: unknown preset '" + preset + "'");
    }
    const double eps = get_as<double>(j, "epsilon", "scheme");
    return kind == SchemeKind::constant ? WeightScheme::constant(eps) : WeightScheme::arithmetic(eps);
}

void apply_json(MetaConfig& c, const json& j, std::optional<std::size_t> n_sources) {
    require_known_keys(j,
                       {"network", "method", "scheme", "k", "inner_lr", "outer", "iterations",
                        "batch_size", "shuffle_domains", "seed", "swa", "update_form",
                        "momentum_in_inner", "domain_specific_sampling", "erm_optimizer",
                        "track_metrics"},
                       "config");
    if (j.contains("network")) c.network = network_from_json(j.at("network"));
    if (j.contains("method")) {
        const auto m = get_as<std::string>(j, "method", "config");
        if (m == "meta") c.method = Method::meta;
        else if (m == "erm") c.method = Method::erm;
        else throw ConfigError("config.method: unknown method '" + m + "'");
    }
    if (j.contains("scheme")) c.scheme = scheme_from_json(j.at("scheme"), n_sources);
    read_if(j, "k", c.k, "config");
    read_if(j, "inner_lr", c.inner_lr, "config");
    if (j.contains("outer")) {
        const json& o = j.at("outer");
        require_known_keys(o, {"kind", "learning_rate", "beta1", "beta2", "eps"}, "outer");
        const auto kind = get_as<std::string>(o, "kind", "outer");
        if (kind == "direct") c.outer = OuterKind::direct;
        else if (kind == "adam") c.outer = OuterKind::adam;
        else throw ConfigError("outer.kind: unknown outer update '" + kind + "'");
        read_if(o, "learning_rate", c.outer_adam.learning_rate, "outer");
        read_if(o, "beta1", c.outer_adam.beta1, "outer");
        read_if(o, "beta2", c.outer_adam.beta2, "outer");
        read_if(o, "eps", c.outer_adam.eps, "outer");
    }
    read_if(j, "iterations", c.iterations, "config");
    read_if(j, "batch_size", c.batch_size, "config");
    read_if(j, "shuffle_domains", c.shuffle_domains, "config");
    read_if(j, "seed", c.seed, "config");
    if (j.contains("swa")) {
        const json& s = j.at("swa");
        if (s.is_null()) {
            c.swa.reset();
        } else {
            require_known_keys(s, {"burn_in_fraction"}, "swa");
            SwaConfig swa;
            read_if(s, "burn_in_fraction", swa.burn_in_fraction, "swa");
            c.swa = swa;
        }
    }
    if (j.contains("update_form")) {
        const auto f = get_as<std::string>(j, "update_form", "config");
        if (f == "gradient") c.update_form = UpdateForm::gradient;
        else if (f == "average") c.update_form = UpdateForm::average;
        else throw ConfigError("config.update_form: unknown form '" + f + "'");
    }
    read_if(j, "momentum_in_inner", c.momentum_in_inner, "config");
    read_if(j, "domain_specific_sampling", c.domain_specific_sampling, "config");
    if (j.contains("erm_optimizer")) {
        const json& o = j.at("erm_optimizer");
        require_known_keys(o, {"kind", "learning_rate", "beta1", "beta2", "eps"}, "erm_optimizer");
        if (o.contains("kind")) {
            const auto kind = get_as<std::string>(o, "kind", "erm_optimizer");
            if (kind == "sgd") c.erm_optimizer.kind = OptimizerKind::sgd;
            else if (kind == "adam") c.erm_optimizer.kind = OptimizerKind::adam;
            else throw ConfigError("erm_optimizer.kind: unknown optimizer '" + kind + "'");
        }
        read_if(o, "learning_rate", c.erm_optimizer.learning_rate, "erm_optimizer");
        read_if(o, "beta1", c.erm_optimizer.beta1, "erm_optimizer");
        read_if(o, "beta2", c.erm_optimizer.beta2, "erm_optimizer");
        read_if(o, "eps", c.erm_optimizer.eps, "erm_optimizer");
    }
    read_if(j, "track_metrics", c.track_metrics, "config");
}

MetaConfig meta_config_from_json(const json& j, std::optional<std::size_t> n_sources) {
    MetaConfig c;
    apply_json(c, j, n_sources);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

}  // namespace arith
