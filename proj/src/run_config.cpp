#include "uad/run_config.hpp"

#include <array>
#include <sstream>

#include "uad/errors.hpp"

namespace uad {

namespace {

constexpr std::array kKnownKeys = {
    "learning_rate",  "clip_c",        "batch_size_m",      "critic_iters_n",
    "total_generator_iters", "seed",   "generator_hidden",  "critic_hidden",
    "validation_fraction",   "snapshot_every", "val_levels_m", "val_batch_n",
    "rmsprop_decay",  "rmsprop_stabilizer",    "levels_m",   "sample_n",
    "fp_level",       "epsilon",
    // experiment-plan keys consumed by the command layer
    "scenario",       "batches_per_class",     "train_count", "grid_config",
};

std::string join_ints(const std::vector<int>& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ',';
        out << values[i];
    }
    return out.str();
}

}  // namespace

RunConfig run_config_from(const KeyValueConfig& kv) {
    for (const auto& [key, value] : kv.entries()) {
        bool known = false;
        for (const char* k : kKnownKeys)
            if (key == k) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown config key '" + key + "'");
    }

    RunConfig rc;
    auto& t = rc.train;
    t.learning_rate = kv.get_double("learning_rate", t.learning_rate);
    t.clip_c = kv.get_double("clip_c", t.clip_c);
    t.batch_size_m = static_cast<int>(kv.get_int("batch_size_m", t.batch_size_m));
    t.critic_iters_n = static_cast<int>(kv.get_int("critic_iters_n", t.critic_iters_n));
    t.total_generator_iters =
        static_cast<int>(kv.get_int("total_generator_iters", t.total_generator_iters));
    t.seed = kv.get_u64("seed", t.seed);
    t.generator_hidden = kv.get_int_list("generator_hidden", t.generator_hidden);
    t.critic_hidden = kv.get_int_list("critic_hidden", t.critic_hidden);
    t.validation_fraction = kv.get_double("validation_fraction", t.validation_fraction);
    t.snapshot_every = static_cast<int>(kv.get_int("snapshot_every", t.snapshot_every));
    t.rmsprop_decay = kv.get_double("rmsprop_decay", t.rmsprop_decay);
    t.rmsprop_stabilizer = kv.get_double("rmsprop_stabilizer", t.rmsprop_stabilizer);

    rc.levels_m = static_cast<int>(kv.get_int("levels_m", rc.levels_m));
    rc.sample_n = static_cast<int>(kv.get_int("sample_n", rc.sample_n));
    rc.fp_level = kv.get_double("fp_level", rc.fp_level);
    rc.epsilon = kv.get_double("epsilon", rc.epsilon);

    t.val_levels_m = static_cast<int>(kv.get_int("val_levels_m", rc.levels_m));
    t.val_batch_n = static_cast<int>(kv.get_int("val_batch_n", rc.sample_n));

    if (rc.levels_m < 2) throw ConfigError("levels_m must be >= 2");
    if (rc.sample_n < 1) throw ConfigError("sample_n must be >= 1");
    if (!(rc.fp_level > 0.0 && rc.fp_level < 1.0))
        throw ConfigError("fp_level must be in (0,1)");
    if (rc.epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
    wigan::validate(t);
    return rc;
}

KeyValueConfig to_key_value(const RunConfig& rc) {
    KeyValueConfig kv;
    const auto& t = rc.train;
    kv.set_double("learning_rate", t.learning_rate);
    kv.set_double("clip_c", t.clip_c);
    kv.set_int("batch_size_m", t.batch_size_m);
    kv.set_int("critic_iters_n", t.critic_iters_n);
    kv.set_int("total_generator_iters", t.total_generator_iters);
    kv.set("seed", std::to_string(t.seed));
    kv.set("generator_hidden", join_ints(t.generator_hidden));
    kv.set("critic_hidden", join_ints(t.critic_hidden));
    kv.set_double("validation_fraction", t.validation_fraction);
    kv.set_int("snapshot_every", t.snapshot_every);
    kv.set_int("val_levels_m", t.val_levels_m);
    kv.set_int("val_batch_n", t.val_batch_n);
    kv.set_double("rmsprop_decay", t.rmsprop_decay);
    kv.set_double("rmsprop_stabilizer", t.rmsprop_stabilizer);
    kv.set_int("levels_m", rc.levels_m);
    kv.set_int("sample_n", rc.sample_n);
    kv.set_double("fp_level", rc.fp_level);
    kv.set_double("epsilon", rc.epsilon);
    return kv;
}

std::string resolved_hash(const RunConfig& rc) { return to_key_value(rc).hash_hex(); }

}  // namespace uad
